#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dlab/scheme.hpp"

namespace dlab {

struct Utterance {
  Role speaker = Role::teacher;
  std::string text;
  std::optional<std::string> code;

  friend bool operator==(const Utterance&, const Utterance&) = default;
};

struct Dialogue {
  std::string id;
  Group group = Group::human;
  std::string problem_id;
  std::vector<Utterance> utterances;
  /// Free-form annotations (e.g. "truncated" set by the simulator). Serialized only when non-empty.
  std::map<std::string, std::string> metadata;

  friend bool operator==(const Dialogue&, const Dialogue&) = default;
};

struct Corpus {
  std::vector<Dialogue> dialogues;
  std::map<std::string, std::string> metadata;

  friend bool operator==(const Corpus&, const Corpus&) = default;
};

// Corpus file format: UTF-8, one JSON object per line:
//   {"id":..,"group":"human"|"ai","problem_id":..,"utterances":[{"speaker":"teacher"|"student","text":..,"code":..}]}
// An optional leading {"corpus_metadata":{..}} line carries Corpus::metadata. Blank lines are skipped.

/// Throws ParseError for malformed JSON or a missing/mistyped key, SchemaError for an
/// unknown speaker, group, or code value.
Corpus parse_corpus(std::string_view text, const CodeScheme& scheme = scheme_default());
std::string serialize_corpus(const Corpus& corpus);
std::string serialize_dialogue(const Dialogue& dialogue);

Corpus read_corpus(const std::filesystem::path& path, const CodeScheme& scheme = scheme_default());
void write_corpus(const std::filesystem::path& path, const Corpus& corpus);

struct Violation {
  std::string dialogue_id;
  std::optional<std::size_t> utterance;
  std::string rule;
  std::string message;
};

std::string to_string(const Violation& violation);

/// Rules: empty-text, unknown-code, role-constraint, min-utterances, missing-role,
/// unique-id, unique-problem.
std::vector<Violation> validate(const Corpus& corpus, const CodeScheme& scheme = scheme_default());

struct DialoguePair {
  std::string problem_id;
  std::size_t human;  // index into Corpus::dialogues
  std::size_t ai;
};

struct Pairing {
  std::vector<DialoguePair> pairs;  // sorted by problem_id
  std::vector<std::size_t> unpaired;
};

Pairing pair_dialogues(const Corpus& corpus);

enum class LengthUnit { characters, whitespace_tokens };

std::optional<LengthUnit> parse_length_unit(std::string_view text);
std::string_view to_string(LengthUnit unit);

/// Number of Unicode scalar values in a UTF-8 string.
std::size_t count_scalars(std::string_view utf8);
/// Number of maximal runs of non-whitespace (ASCII and Unicode space separators).
std::size_t count_tokens(std::string_view utf8);
std::size_t utterance_length(std::string_view text, LengthUnit unit);

using LengthSamples = std::map<std::pair<Group, Role>, std::vector<double>>;

LengthSamples utterance_lengths(const Corpus& corpus, LengthUnit unit = LengthUnit::characters);

/// Trims ASCII and Unicode whitespace from both ends.
std::string_view trim(std::string_view text);

}  // namespace dlab
