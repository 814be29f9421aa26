#include "dlab/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "dlab/error.hpp"
#include "json.hpp"

namespace dlab {

namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

// Decodes one scalar starting at text[pos]; advances pos. Invalid bytes decode as U+FFFD.
char32_t next_scalar(std::string_view text, std::size_t& pos) {
  const auto lead = static_cast<unsigned char>(text[pos]);
  std::size_t extra = 0;
  char32_t value = 0;
  if (lead < 0x80) {
    ++pos;
    return lead;
  } else if ((lead >> 5) == 0x6) {
    extra = 1;
    value = lead & 0x1F;
  } else if ((lead >> 4) == 0xE) {
    extra = 2;
    value = lead & 0x0F;
  } else if ((lead >> 3) == 0x1E) {
    extra = 3;
    value = lead & 0x07;
  } else {
    ++pos;
    return 0xFFFD;
  }
  ++pos;
  for (std::size_t i = 0; i < extra; ++i) {
    if (pos >= text.size() || (static_cast<unsigned char>(text[pos]) >> 6) != 0x2) return 0xFFFD;
    value = (value << 6) | (static_cast<unsigned char>(text[pos]) & 0x3F);
    ++pos;
  }
  return value;
}

bool is_space(char32_t c) {
  switch (c) {
    case U'\t': case U'\n': case U'\v': case U'\f': case U'\r': case U' ':
    case 0x85: case 0xA0: case 0x1680: case 0x2028: case 0x2029:
    case 0x202F: case 0x205F: case 0x3000:
      return true;
    default:
      return c >= 0x2000 && c <= 0x200A;
  }
}

const json& require(const json& object, const char* key, std::size_t line) {
  auto it = object.find(key);
  if (it == object.end()) throw ParseError(std::string("missing key '") + key + "'", line);
  return *it;
}

std::string require_string(const json& object, const char* key, std::size_t line) {
  const json& value = require(object, key, line);
  if (!value.is_string()) throw ParseError(std::string("key '") + key + "' must be a string", line);
  return value.get<std::string>();
}

std::map<std::string, std::string> parse_string_map(const json& value, const char* key, std::size_t line) {
  if (!value.is_object()) throw ParseError(std::string("key '") + key + "' must be an object", line);
  std::map<std::string, std::string> out;
  for (const auto& [k, v] : value.items()) {
    if (!v.is_string()) throw ParseError(std::string("values of '") + key + "' must be strings", line);
    out.emplace(k, v.get<std::string>());
  }
  return out;
}

Dialogue parse_dialogue(const json& object, std::size_t line, const CodeScheme& scheme) {
  if (!object.is_object()) throw ParseError("expected a dialogue object", line);
  Dialogue dialogue;
  dialogue.id = require_string(object, "id", line);
  const std::string group = require_string(object, "group", line);
  auto parsed_group = parse_group(group);
  if (!parsed_group) throw SchemaError(dialogue.id, "unknown group '" + group + "'");
  dialogue.group = *parsed_group;
  dialogue.problem_id = require_string(object, "problem_id", line);

  const json& utterances = require(object, "utterances", line);
  if (!utterances.is_array()) throw ParseError("key 'utterances' must be an array", line);
  dialogue.utterances.reserve(utterances.size());
  for (std::size_t i = 0; i < utterances.size(); ++i) {
    const json& u = utterances[i];
    if (!u.is_object()) throw ParseError("utterance " + std::to_string(i) + " must be an object", line);
    Utterance utterance;
    const std::string speaker = require_string(u, "speaker", line);
    auto role = parse_role(speaker);
    if (!role) throw SchemaError(dialogue.id, "utterance " + std::to_string(i) + ": unknown speaker '" + speaker + "'");
    utterance.speaker = *role;
    utterance.text = require_string(u, "text", line);
    if (auto it = u.find("code"); it != u.end() && !it->is_null()) {
      if (!it->is_string()) throw ParseError("key 'code' must be a string", line);
      std::string code = it->get<std::string>();
      if (!scheme.contains(code))
        throw SchemaError(dialogue.id, "utterance " + std::to_string(i) + ": unknown code '" + code + "'");
      utterance.code = std::move(code);
    }
    dialogue.utterances.push_back(std::move(utterance));
  }
  if (auto it = object.find("metadata"); it != object.end()) dialogue.metadata = parse_string_map(*it, "metadata", line);
  return dialogue;
}

ordered_json to_json(const Dialogue& dialogue) {
  ordered_json object;
  object["id"] = dialogue.id;
  object["group"] = to_string(dialogue.group);
  object["problem_id"] = dialogue.problem_id;
  ordered_json utterances = ordered_json::array();
  for (const Utterance& u : dialogue.utterances) {
    ordered_json item;
    item["speaker"] = to_string(u.speaker);
    item["text"] = u.text;
    if (u.code) item["code"] = *u.code;
    utterances.push_back(std::move(item));
  }
  object["utterances"] = std::move(utterances);
  if (!dialogue.metadata.empty()) object["metadata"] = dialogue.metadata;
  return object;
}

}  // namespace

std::string_view trim(std::string_view text) {
  std::size_t begin = 0;
  while (begin < text.size()) {
    std::size_t next = begin;
    if (!is_space(next_scalar(text, next))) break;
    begin = next;
  }
  std::size_t end = begin;
  for (std::size_t pos = begin; pos < text.size();) {
    if (!is_space(next_scalar(text, pos))) end = pos;
  }
  return text.substr(begin, end - begin);
}

Corpus parse_corpus(std::string_view text, const CodeScheme& scheme) {
  Corpus corpus;
  std::size_t line_no = 0;
  bool seen_content = false;
  while (!text.empty()) {
    ++line_no;
    const std::size_t newline = text.find('\n');
    std::string_view line = text.substr(0, newline);
    text = newline == std::string_view::npos ? std::string_view() : text.substr(newline + 1);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (trim(line).empty()) continue;

    json object;
    try {
      object = json::parse(line);
    } catch (const json::parse_error& e) {
      std::string message = e.what();
      if (auto pos = message.find(": "); pos != std::string::npos) message = message.substr(pos + 2);
      throw ParseError(message, line_no, e.byte);
    }
    if (!seen_content && object.is_object() && object.contains("corpus_metadata")) {
      corpus.metadata = parse_string_map(object["corpus_metadata"], "corpus_metadata", line_no);
      seen_content = true;
      continue;
    }
    seen_content = true;
    corpus.dialogues.push_back(parse_dialogue(object, line_no, scheme));
  }
  return corpus;
}

std::string serialize_dialogue(const Dialogue& dialogue) {
  return to_json(dialogue).dump(-1, ' ', false, ordered_json::error_handler_t::replace);
}

std::string serialize_corpus(const Corpus& corpus) {
  std::string out;
  if (!corpus.metadata.empty()) {
    ordered_json header;
    header["corpus_metadata"] = corpus.metadata;
    out += header.dump(-1, ' ', false, ordered_json::error_handler_t::replace);
    out += '\n';
  }
  for (const Dialogue& dialogue : corpus.dialogues) {
    out += serialize_dialogue(dialogue);
    out += '\n';
  }
  return out;
}

Corpus read_corpus(const std::filesystem::path& path, const CodeScheme& scheme) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_corpus(buffer.str(), scheme);
}

void write_corpus(const std::filesystem::path& path, const Corpus& corpus) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << serialize_corpus(corpus);
  if (!out) throw IoError("write failed: " + path.string());
}

std::string to_string(const Violation& violation) {
  std::string out = violation.dialogue_id;
  if (violation.utterance) out += "#" + std::to_string(*violation.utterance);
  out += "\t" + violation.rule + "\t" + violation.message;
  return out;
}

std::vector<Violation> validate(const Corpus& corpus, const CodeScheme& scheme) {
  std::vector<Violation> out;
  std::set<std::string> ids;
  std::set<std::pair<Group, std::string>> problems;

  for (const Dialogue& d : corpus.dialogues) {
    if (!ids.insert(d.id).second) out.push_back({d.id, std::nullopt, "unique-id", "duplicate dialogue id"});
    if (!problems.emplace(d.group, d.problem_id).second)
      out.push_back({d.id, std::nullopt, "unique-problem",
                     "problem '" + d.problem_id + "' already has a " + std::string(to_string(d.group)) + " dialogue"});

    if (d.utterances.size() < 2) {
      out.push_back({d.id, std::nullopt, "min-utterances", "fewer than 2 utterances"});
    } else {
      const bool has_teacher = std::any_of(d.utterances.begin(), d.utterances.end(),
                                           [](const Utterance& u) { return u.speaker == Role::teacher; });
      const bool has_student = std::any_of(d.utterances.begin(), d.utterances.end(),
                                           [](const Utterance& u) { return u.speaker == Role::student; });
      if (!has_teacher || !has_student)
        out.push_back({d.id, std::nullopt, "missing-role",
                       std::string("no ") + (has_teacher ? "student" : "teacher") + " utterance"});
    }

    for (std::size_t i = 0; i < d.utterances.size(); ++i) {
      const Utterance& u = d.utterances[i];
      if (trim(u.text).empty()) out.push_back({d.id, i, "empty-text", "text is empty after trimming"});
      if (!u.code) continue;
      auto index = scheme.index_of(*u.code);
      if (!index) {
        out.push_back({d.id, i, "unknown-code", "code '" + *u.code + "' is not in scheme " + scheme.name()});
      } else if (scheme.at(*index).role_constraint != u.speaker) {
        out.push_back({d.id, i, "role-constraint",
                       "code '" + *u.code + "' is a " + std::string(to_string(scheme.at(*index).role_constraint)) +
                           " move but speaker is " + std::string(to_string(u.speaker))});
      }
    }
  }
  return out;
}

Pairing pair_dialogues(const Corpus& corpus) {
  std::map<std::string, std::size_t> human;
  std::map<std::string, std::size_t> ai;
  Pairing result;
  for (std::size_t i = 0; i < corpus.dialogues.size(); ++i) {
    const Dialogue& d = corpus.dialogues[i];
    auto& side = d.group == Group::human ? human : ai;
    if (!side.emplace(d.problem_id, i).second) result.unpaired.push_back(i);
  }
  for (const auto& [problem, h] : human) {
    if (auto it = ai.find(problem); it != ai.end()) result.pairs.push_back({problem, h, it->second});
  }
  auto single = [&](const std::map<std::string, std::size_t>& side, const std::map<std::string, std::size_t>& other) {
    for (const auto& [problem, i] : side)
      if (!other.count(problem)) result.unpaired.push_back(i);
  };
  single(human, ai);
  single(ai, human);
  std::sort(result.unpaired.begin(), result.unpaired.end());
  return result;
}

std::optional<LengthUnit> parse_length_unit(std::string_view text) {
  if (text == "characters") return LengthUnit::characters;
  if (text == "whitespace_tokens" || text == "tokens") return LengthUnit::whitespace_tokens;
  return std::nullopt;
}

std::string_view to_string(LengthUnit unit) {
  return unit == LengthUnit::characters ? "characters" : "whitespace_tokens";
}

std::size_t count_scalars(std::string_view utf8) {
  std::size_t n = 0;
  for (std::size_t pos = 0; pos < utf8.size(); ++n) next_scalar(utf8, pos);
  return n;
}

std::size_t count_tokens(std::string_view utf8) {
  std::size_t n = 0;
  bool in_token = false;
  for (std::size_t pos = 0; pos < utf8.size();) {
    const bool space = is_space(next_scalar(utf8, pos));
    if (!space && !in_token) ++n;
    in_token = !space;
  }
  return n;
}

std::size_t utterance_length(std::string_view text, LengthUnit unit) {
  return unit == LengthUnit::characters ? count_scalars(text) : count_tokens(text);
}

LengthSamples utterance_lengths(const Corpus& corpus, LengthUnit unit) {
  LengthSamples samples;
  for (const Dialogue& d : corpus.dialogues)
    for (const Utterance& u : d.utterances)
      samples[{d.group, u.speaker}].push_back(static_cast<double>(utterance_length(u.text, unit)));
  return samples;
}

}  // namespace dlab
