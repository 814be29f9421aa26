#include "dlab/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "dlab/error.hpp"

namespace dlab::synth {

namespace {

struct Phrases {
  const char* code;
  std::vector<const char*> lines;
};

const std::vector<Phrases>& phrase_bank() {
  static const std::vector<Phrases> bank = {
      {"I-Q", {"What is 5+3?", "How did you get that answer?", "What do we know about the two angles?",
               "Which number should we find first?", "Can you tell me what the question asks?"}},
      {"I-H", {"Think about the age difference we already know.", "Look at the place value of each digit.",
               "Remember what the sum of the angles is."}},
      {"I-M", {"Let me show you how to set up this equation.", "Watch how I line up the digits."}},
      {"R-RR", {"I don't know.", "...", "I'm not sure."}},
      {"R-SR", {"Yeah.", "Mm.", "Okay.", "Right."}},
      {"R-FR", {"It is 8.", "The angles add up to 180 degrees.", "The father is 35.", "Three tenths."}},
      {"R-IO", {"I think we should first find where 1 is, then work out 1/3 from there.",
                "Because the difference stays the same, we can add it to the father's age."}},
      {"F-F", {"Good job.", "That's smart.", "Exactly right.", "Nice thinking."}},
      {"F-I", {"Write the known ages next to each person first.", "Add the two differences and then check the total."}},
      {"F-E", {"The sum of a triangle's angles is 180, so the third angle is 90.",
               "Since the difference is 30, we add 30 to 35 to get the grandfather's age.",
               "A fraction shows equal parts of a whole, so one third means three equal parts."}},
  };
  return bank;
}

const char* kHumanTeacherTail[] = {" Take your time and tell me how you are thinking about it.",
                                   " Let's go step by step, okay?", " Do you remember what we did in the last problem?",
                                   ""};

template <typename T>
const T& pick(std::mt19937_64& rng, const std::vector<T>& items) {
  return items[std::uniform_int_distribution<std::size_t>(0, items.size() - 1)(rng)];
}

double sample_std(const Eigen::VectorXd& v) {
  return std::sqrt((v.array() - v.mean()).square().sum() / static_cast<double>(v.size() - 1));
}

// Nonnegative column with the requested mean and sample std: a censored normal
// x = b * max(0, t + z) with t chosen by bisection on mean/std.
Eigen::VectorXd censored_column(const Eigen::VectorXd& z, double mean, double std) {
  const auto n = z.size();
  if (mean <= 0) return Eigen::VectorXd::Zero(n);
  if (std <= 0) return Eigen::VectorXd::Constant(n, mean);
  auto shape = [&](double t) { return (z.array() + t).max(0.0).matrix().eval(); };
  auto ratio = [&](double t) {
    const Eigen::VectorXd x = shape(t);
    const double s = sample_std(x);
    return s > 0 ? x.mean() / s : std::numeric_limits<double>::infinity();
  };
  const double target = mean / std;
  const double lo_limit = -z.maxCoeff();
  double lo = lo_limit + 1e-9;
  if (ratio(lo) >= target) {
    // As skewed as n points allow: one nonzero observation.
    Eigen::Index top = 0;
    z.maxCoeff(&top);
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
    x(top) = mean * static_cast<double>(n);
    return x;
  }
  double hi = 1;
  while (ratio(hi) < target) hi *= 2;
  for (int i = 0; i < 200; ++i) {
    const double mid = (lo + hi) / 2;
    (ratio(mid) < target ? lo : hi) = mid;
  }
  const Eigen::VectorXd x = shape((lo + hi) / 2);
  return x * (mean / x.mean());
}

}  // namespace

std::vector<std::string> cycle_codes(std::mt19937_64& rng, const CodeScheme& scheme, std::span<const std::string> cycle,
                                     double noise, std::size_t length, double tail_skip) {
  if (cycle.empty()) throw DomainError("empty code cycle");
  std::vector<std::string> teacher_codes, student_codes;
  for (const CodeDef& def : scheme.codes())
    (def.role_constraint == Role::teacher ? teacher_codes : student_codes).push_back(def.id);
  std::bernoulli_distribution flip(noise);
  std::bernoulli_distribution skip(tail_skip);
  std::vector<std::string> bases;
  while (bases.size() < length) {
    const bool short_cycle = cycle.size() > 2 && skip(rng);
    for (std::size_t i = 0; i < (short_cycle ? 2 : cycle.size()); ++i) bases.push_back(cycle[i]);
  }
  bases.resize(length);
  std::vector<std::string> out;
  for (const std::string& base : bases) {
    if (flip(rng)) {
      const bool teacher = scheme.at(base).role_constraint == Role::teacher;
      out.push_back(pick(rng, teacher ? teacher_codes : student_codes));
    } else {
      out.push_back(base);
    }
  }
  return out;
}

std::string utterance_text(std::mt19937_64& rng, const std::string& code, Group group, Role speaker) {
  for (const Phrases& p : phrase_bank()) {
    if (code != p.code) continue;
    std::string text = pick(rng, p.lines);
    if (group == Group::human && speaker == Role::teacher)
      text += kHumanTeacherTail[std::uniform_int_distribution<std::size_t>(0, std::size(kHumanTeacherTail) - 1)(rng)];
    return text;
  }
  return "Okay.";
}

Dialogue dialogue_from_codes(std::string id, Group group, std::string problem_id, std::span<const std::string> codes,
                             const CodeScheme& scheme, std::mt19937_64& rng) {
  Dialogue d;
  d.id = std::move(id);
  d.group = group;
  d.problem_id = std::move(problem_id);
  for (const std::string& code : codes) {
    const Role speaker = scheme.at(code).role_constraint;
    d.utterances.push_back({speaker, utterance_text(rng, code, group, speaker), code});
  }
  return d;
}

Corpus two_group_corpus(const TwoGroupSpec& spec, const CodeScheme& scheme) {
  std::mt19937_64 rng(spec.seed);
  std::uniform_int_distribution<std::size_t> length(spec.min_length, spec.max_length);
  Corpus corpus;
  for (std::size_t p = 0; p < spec.per_group; ++p) {
    char pid[16];
    std::snprintf(pid, sizeof pid, "p%02zu", p + 1);
    const auto human = cycle_codes(rng, scheme, spec.human_cycle, spec.noise, length(rng), spec.tail_skip);
    corpus.dialogues.push_back(dialogue_from_codes(std::string("h-") + pid, Group::human, pid, human, scheme, rng));
    const auto ai = cycle_codes(rng, scheme, spec.ai_cycle, spec.noise, length(rng), spec.tail_skip);
    corpus.dialogues.push_back(dialogue_from_codes(std::string("ai-") + pid, Group::ai, pid, ai, scheme, rng));
  }
  return corpus;
}

Eigen::MatrixXd proportions_matching(std::span<const CodeMoments> moments, std::size_t n, std::uint64_t seed) {
  if (n < 2) throw DomainError("need at least 2 rows");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  const auto rows = static_cast<Eigen::Index>(n);
  const auto cols = static_cast<Eigen::Index>(moments.size());

  Eigen::MatrixXd x(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c) {
    Eigen::VectorXd z(rows);
    for (Eigen::Index i = 0; i < rows; ++i) z(i) = normal(rng);
    z = (z.array() - z.mean()) / sample_std(z);
    x.col(c) = censored_column(z, moments[static_cast<std::size_t>(c)].mean, moments[static_cast<std::size_t>(c)].std);
  }

  // Permute within columns so that every row sums to nearly the same total.
  double target = 0;
  for (const CodeMoments& m : moments) target += m.mean;
  Eigen::VectorXd sums = x.rowwise().sum();
  std::uniform_int_distribution<Eigen::Index> row(0, rows - 1);
  std::uniform_int_distribution<Eigen::Index> col(0, cols - 1);
  for (int step = 0; step < 400000; ++step) {
    const Eigen::Index c = col(rng);
    const Eigen::Index i = row(rng);
    const Eigen::Index j = row(rng);
    if (i == j) continue;
    const double delta = x(j, c) - x(i, c);
    const double before = std::pow(sums(i) - target, 2) + std::pow(sums(j) - target, 2);
    const double after = std::pow(sums(i) + delta - target, 2) + std::pow(sums(j) - delta - target, 2);
    if (after < before) {
      std::swap(x(i, c), x(j, c));
      sums(i) += delta;
      sums(j) -= delta;
    }
  }
  for (Eigen::Index i = 0; i < rows; ++i) x.row(i) /= x.row(i).sum();
  return x;
}

Dialogue dialogue_from_proportions(std::string id, Group group, std::string problem_id,
                                   const Eigen::VectorXd& proportions, const CodeScheme& scheme,
                                   std::size_t utterances, std::mt19937_64& rng) {
  const auto k = static_cast<Eigen::Index>(scheme.size());
  if (proportions.size() != k) throw DomainError("proportion vector does not match scheme");
  const Eigen::VectorXd exact = proportions / proportions.sum() * static_cast<double>(utterances);
  std::vector<std::size_t> counts(scheme.size());
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (Eigen::Index c = 0; c < k; ++c) {
    counts[static_cast<std::size_t>(c)] = static_cast<std::size_t>(std::floor(exact(c)));
    assigned += counts[static_cast<std::size_t>(c)];
    remainders.emplace_back(exact(c) - std::floor(exact(c)), static_cast<std::size_t>(c));
  }
  std::stable_sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t r = 0; assigned < utterances; ++r, ++assigned) ++counts[remainders[r % remainders.size()].second];

  std::vector<std::string> teacher, student;
  for (std::size_t c = 0; c < counts.size(); ++c)
    for (std::size_t i = 0; i < counts[c]; ++i)
      (scheme.at(c).role_constraint == Role::teacher ? teacher : student).push_back(scheme.at(c).id);
  std::shuffle(teacher.begin(), teacher.end(), rng);
  std::shuffle(student.begin(), student.end(), rng);

  // Teacher turns interleaved with student turns in proportion.
  std::vector<std::string> codes;
  std::size_t t = 0, s = 0;
  while (t < teacher.size() || s < student.size()) {
    const bool take_teacher =
        s >= student.size() ||
        (t < teacher.size() && t * (student.size() + 1) <= s * (teacher.size() + 1));
    codes.push_back(take_teacher ? teacher[t++] : student[s++]);
  }
  return dialogue_from_codes(std::move(id), group, std::move(problem_id), codes, scheme, rng);
}

}  // namespace dlab::synth
