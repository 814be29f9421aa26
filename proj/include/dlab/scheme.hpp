#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace dlab {

enum class Role { teacher, student };
enum class Group { human, ai };
enum class Dimension { initiation, response, feedback };

std::string_view to_string(Role role);
std::string_view to_string(Group group);
std::string_view to_string(Dimension dimension);
std::optional<Role> parse_role(std::string_view text);
std::optional<Group> parse_group(std::string_view text);

struct CodeDef {
  std::string id;
  Dimension dimension;
  Role role_constraint;
  std::string label;
  std::string definition;
  std::string example;
};

/// Number of unordered pairs of distinct codes among k codes.
constexpr std::size_t edge_count(std::size_t k) noexcept { return k < 2 ? 0 : k * (k - 1) / 2; }

/// Canonical edge index of the pair (i, j), i < j: lexicographic over (i, j).
constexpr std::size_t edge_index(std::size_t i, std::size_t j, std::size_t k) noexcept {
  if (i > j) std::swap(i, j);
  return i * k - i * (i + 1) / 2 + (j - i - 1);
}

std::pair<std::size_t, std::size_t> edge_pair(std::size_t edge, std::size_t k);

/// An ordered registry of codes. The order fixes every vector layout downstream
/// (proportion vectors, adjacency vectors, table rows).
class CodeScheme {
 public:
  /// Throws SchemaError on duplicate ids or on a role constraint that contradicts
  /// the dimension (Initiation/Feedback are teacher moves, Response is a student move).
  CodeScheme(std::string name, std::string version, std::vector<CodeDef> codes);

  const std::string& name() const noexcept { return name_; }
  const std::string& version() const noexcept { return version_; }
  const std::vector<CodeDef>& codes() const noexcept { return codes_; }
  std::size_t size() const noexcept { return codes_.size(); }
  std::size_t edges() const noexcept { return edge_count(codes_.size()); }

  std::optional<std::size_t> index_of(std::string_view id) const;
  bool contains(std::string_view id) const { return index_of(id).has_value(); }
  const CodeDef& at(std::size_t index) const { return codes_.at(index); }
  const CodeDef& at(std::string_view id) const;

 private:
  std::string name_;
  std::string version_;
  std::vector<CodeDef> codes_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// The ten-subtype IRF scheme: I-Q, I-H, I-M, R-RR, R-SR, R-FR, R-IO, F-F, F-I, F-E.
const CodeScheme& scheme_default();

}  // namespace dlab
