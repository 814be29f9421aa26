#include "dlab/analysis.hpp"

#include <algorithm>
#include <cmath>

#include "dlab/coding.hpp"
#include "dlab/error.hpp"

namespace dlab {

namespace {

Eigen::MatrixXd dimension_projection(const CodeScheme& scheme) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(scheme.size()), 3);
  for (std::size_t i = 0; i < scheme.size(); ++i)
    out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(scheme.at(i).dimension)) = 1;
  return out;
}

std::optional<stats::TestResult<double>> try_test(auto&& test) {
  try {
    return test();
  } catch (const DomainError&) {
    return std::nullopt;
  }
}

}  // namespace

std::vector<ProportionComparison> compare_proportions(const Corpus& corpus, const CodeScheme& scheme, Breakdown by) {
  const Pairing pairing = pair_dialogues(corpus);
  if (pairing.pairs.size() < 2) throw DomainError("need at least 2 human/ai pairs, found " + std::to_string(pairing.pairs.size()));

  const auto n = static_cast<Eigen::Index>(pairing.pairs.size());
  Eigen::MatrixXd human(n, static_cast<Eigen::Index>(scheme.size()));
  Eigen::MatrixXd ai(n, static_cast<Eigen::Index>(scheme.size()));
  for (Eigen::Index i = 0; i < n; ++i) {
    const DialoguePair& pair = pairing.pairs[static_cast<std::size_t>(i)];
    human.row(i) = proportion_vector(corpus.dialogues[pair.human], scheme).proportions.transpose();
    ai.row(i) = proportion_vector(corpus.dialogues[pair.ai], scheme).proportions.transpose();
  }

  std::vector<std::string> labels;
  if (by == Breakdown::dimension) {
    const Eigen::MatrixXd projection = dimension_projection(scheme);
    human = human * projection;
    ai = ai * projection;
    labels = {"I", "R", "F"};
  } else {
    for (const CodeDef& def : scheme.codes()) labels.push_back(def.id);
  }

  std::vector<ProportionComparison> out;
  for (Eigen::Index c = 0; c < human.cols(); ++c) {
    ProportionComparison row;
    row.label = labels[static_cast<std::size_t>(c)];
    row.ai = stats::summarize(ai.col(c));
    row.human = stats::summarize(human.col(c));
    row.test = try_test([&] { return stats::paired_t(ai.col(c), human.col(c)); });
    out.push_back(std::move(row));
  }
  return out;
}

Distribution describe(std::vector<double> samples) {
  if (samples.empty()) throw DomainError("empty sample");
  std::sort(samples.begin(), samples.end());
  auto quantile = [&](double q) {
    const double pos = q * static_cast<double>(samples.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, samples.size() - 1);
    return samples[lo] + (pos - static_cast<double>(lo)) * (samples[hi] - samples[lo]);
  };
  Distribution out;
  out.n = samples.size();
  const Eigen::Map<const Eigen::VectorXd> view(samples.data(), static_cast<Eigen::Index>(samples.size()));
  out.mean = view.mean();
  out.std = samples.size() > 1 ? stats::summarize(view).std : 0.0;
  out.min = samples.front();
  out.max = samples.back();
  out.q1 = quantile(0.25);
  out.median = quantile(0.5);
  out.q3 = quantile(0.75);
  return out;
}

std::vector<LengthComparison> compare_lengths(const Corpus& corpus, LengthUnit unit) {
  const LengthSamples samples = utterance_lengths(corpus, unit);
  std::vector<LengthComparison> out;
  for (Role role : {Role::teacher, Role::student}) {
    auto h = samples.find({Group::human, role});
    auto a = samples.find({Group::ai, role});
    if (h == samples.end() || a == samples.end()) continue;
    LengthComparison row{role, describe(h->second), describe(a->second), std::nullopt};
    const Eigen::Map<const Eigen::VectorXd> hv(h->second.data(), static_cast<Eigen::Index>(h->second.size()));
    const Eigen::Map<const Eigen::VectorXd> av(a->second.data(), static_cast<Eigen::Index>(a->second.size()));
    row.test = try_test([&] { return stats::welch_t(hv, av); });
    out.push_back(std::move(row));
  }
  return out;
}

Eigen::VectorXd code_counts(const Corpus& corpus, const CodeScheme& scheme, std::optional<Group> group) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(scheme.size()));
  for (const Dialogue& d : corpus.dialogues) {
    if (group && d.group != *group) continue;
    for (const Utterance& u : d.utterances) {
      if (!u.code) continue;
      if (auto index = scheme.index_of(*u.code)) out(static_cast<Eigen::Index>(*index)) += 1;
    }
  }
  return out;
}

}  // namespace dlab
