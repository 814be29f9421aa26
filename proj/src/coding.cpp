#include "dlab/coding.hpp"

#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>

#include "dlab/error.hpp"

namespace dlab {

Dialogue apply_codes(const Dialogue& dialogue, std::span<const CodeAssignment> assignments, const CodeScheme& scheme) {
  Dialogue out = dialogue;
  std::map<std::size_t, std::string_view> seen;
  for (const CodeAssignment& a : assignments) {
    if (a.utterance >= out.utterances.size())
      throw CodingError(a.utterance, "index out of range (dialogue has " + std::to_string(out.utterances.size()) +
                                         " utterances)");
    auto index = scheme.index_of(a.code);
    if (!index) throw CodingError(a.utterance, "unknown code '" + a.code + "'");
    const CodeDef& def = scheme.at(*index);
    Utterance& u = out.utterances[a.utterance];
    if (def.role_constraint != u.speaker)
      throw CodingError(a.utterance, "code '" + a.code + "' is a " + std::string(to_string(def.role_constraint)) +
                                         " move but speaker is " + std::string(to_string(u.speaker)));
    auto [it, inserted] = seen.emplace(a.utterance, a.code);
    if (!inserted && it->second != a.code)
      throw CodingError(a.utterance, "conflicting codes '" + std::string(it->second) + "' and '" + a.code + "'");
    u.code = a.code;
  }
  return out;
}

CodeProportionVector proportion_vector(const Dialogue& dialogue, const CodeScheme& scheme) {
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(scheme.size()));
  double total = 0;
  for (const Utterance& u : dialogue.utterances) {
    if (!u.code) continue;
    auto index = scheme.index_of(*u.code);
    if (!index) throw SchemaError(dialogue.id, "unknown code '" + *u.code + "'");
    counts(static_cast<Eigen::Index>(*index)) += 1;
    total += 1;
  }
  if (total == 0) throw DomainError("uncoded dialogue '" + dialogue.id + "'");
  return {dialogue.id, counts / total};
}

ReliabilityReport cohen_kappa(std::span<const std::string> rater_a, std::span<const std::string> rater_b,
                              const CodeScheme& scheme) {
  if (rater_a.size() != rater_b.size())
    throw DomainError("rater lists differ in length (" + std::to_string(rater_a.size()) + " vs " +
                      std::to_string(rater_b.size()) + ")");
  if (rater_a.empty()) throw DomainError("no items to compare");

  const auto k = static_cast<Eigen::Index>(scheme.size());
  ReliabilityReport report;
  report.n_items = rater_a.size();
  report.confusion = Eigen::MatrixXi::Zero(k, k);
  for (std::size_t i = 0; i < rater_a.size(); ++i) {
    auto a = scheme.index_of(rater_a[i]);
    auto b = scheme.index_of(rater_b[i]);
    if (!a) throw DomainError("item " + std::to_string(i) + ": unknown code '" + rater_a[i] + "'");
    if (!b) throw DomainError("item " + std::to_string(i) + ": unknown code '" + rater_b[i] + "'");
    ++report.confusion(static_cast<Eigen::Index>(*a), static_cast<Eigen::Index>(*b));
  }

  const Eigen::MatrixXd p = report.confusion.cast<double>() / static_cast<double>(report.n_items);
  report.observed_agreement = p.trace();
  report.expected_agreement = p.rowwise().sum().dot(p.colwise().sum().transpose());
  if (report.expected_agreement < 1.0) {
    report.kappa = (report.observed_agreement - report.expected_agreement) / (1.0 - report.expected_agreement);
  } else {
    report.kappa = 1.0;
  }
  return report;
}

std::vector<SidecarEntry> parse_sidecar(std::string_view text) {
  std::vector<SidecarEntry> out;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const std::size_t newline = text.find('\n');
    std::string_view line = text.substr(0, newline);
    text = newline == std::string_view::npos ? std::string_view() : text.substr(newline + 1);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (trim(line).empty() || line.front() == '#') continue;

    const std::size_t tab1 = line.find('\t');
    const std::size_t tab2 = tab1 == std::string_view::npos ? tab1 : line.find('\t', tab1 + 1);
    if (tab2 == std::string_view::npos || line.find('\t', tab2 + 1) != std::string_view::npos)
      throw ParseError("expected 3 tab-separated fields", line_no);
    SidecarEntry entry;
    entry.dialogue_id = std::string(line.substr(0, tab1));
    const std::string_view index = line.substr(tab1 + 1, tab2 - tab1 - 1);
    entry.code = std::string(line.substr(tab2 + 1));
    if (entry.dialogue_id.empty() || entry.code.empty()) throw ParseError("empty field", line_no);
    if (index.empty() || index.find_first_not_of("0123456789") != std::string_view::npos)
      throw ParseError("utterance index '" + std::string(index) + "' is not a non-negative integer", line_no,
                       tab1 + 2);
    entry.utterance = std::stoull(std::string(index));
    out.push_back(std::move(entry));
  }
  return out;
}

std::string serialize_sidecar(std::span<const SidecarEntry> entries) {
  std::string out;
  for (const SidecarEntry& e : entries)
    out += e.dialogue_id + '\t' + std::to_string(e.utterance) + '\t' + e.code + '\n';
  return out;
}

std::vector<SidecarEntry> read_sidecar(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_sidecar(buffer.str());
}

Corpus apply_sidecar(const Corpus& corpus, std::span<const SidecarEntry> entries, const CodeScheme& scheme) {
  std::unordered_map<std::string, std::size_t> by_id;
  for (std::size_t i = 0; i < corpus.dialogues.size(); ++i) by_id.emplace(corpus.dialogues[i].id, i);

  std::map<std::size_t, std::vector<CodeAssignment>> grouped;
  for (const SidecarEntry& e : entries) {
    auto it = by_id.find(e.dialogue_id);
    if (it == by_id.end()) throw SchemaError(e.dialogue_id, "not found in corpus");
    grouped[it->second].push_back({e.utterance, e.code});
  }

  Corpus out = corpus;
  for (const auto& [index, assignments] : grouped) {
    try {
      out.dialogues[index] = apply_codes(corpus.dialogues[index], assignments, scheme);
    } catch (const CodingError& e) {
      throw SchemaError(corpus.dialogues[index].id, e.what());
    }
  }
  return out;
}

std::vector<SidecarEntry> extract_sidecar(const Corpus& corpus) {
  std::vector<SidecarEntry> out;
  for (const Dialogue& d : corpus.dialogues)
    for (std::size_t i = 0; i < d.utterances.size(); ++i)
      if (d.utterances[i].code) out.push_back({d.id, i, *d.utterances[i].code});
  return out;
}

AlignedRatings align_ratings(std::span<const SidecarEntry> a, std::span<const SidecarEntry> b) {
  using Key = std::pair<std::string, std::size_t>;
  auto index = [](std::span<const SidecarEntry> entries) {
    std::map<Key, std::string> out;
    for (const SidecarEntry& e : entries) {
      auto [it, inserted] = out.emplace(Key{e.dialogue_id, e.utterance}, e.code);
      if (!inserted && it->second != e.code)
        throw SchemaError(e.dialogue_id, "utterance " + std::to_string(e.utterance) + " coded twice");
    }
    return out;
  };
  const auto left = index(a);
  const auto right = index(b);

  AlignedRatings out;
  for (const auto& [key, code] : left) {
    auto it = right.find(key);
    if (it == right.end())
      throw SchemaError(key.first, "utterance " + std::to_string(key.second) + " coded by rater A only");
    out.rater_a.push_back(code);
    out.rater_b.push_back(it->second);
  }
  for (const auto& [key, code] : right)
    if (!left.count(key))
      throw SchemaError(key.first, "utterance " + std::to_string(key.second) + " coded by rater B only");
  return out;
}

}  // namespace dlab
