#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace dlab {

inline constexpr std::string_view kToolName = "dialogue-lab";
inline constexpr std::string_view kToolVersion = "0.1.0";

std::string sha256_hex(std::string_view data);
std::string file_sha256(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

/// `key = value` lines; `[section]` headers prefix following keys with "section.".
/// '#' and ';' start comments; surrounding double quotes on values are stripped.
std::map<std::string, std::string> parse_config(std::string_view text);

/// Provenance record written once per output directory as `key = value` lines. Timing
/// entries are kept apart and always written last under the `timing.` prefix, so two runs
/// can be compared after dropping those lines.
class RunManifest {
 public:
  void set(const std::string& key, const std::string& value);
  void add_input(const std::string& label, const std::filesystem::path& path);
  void set_timing(const std::string& key, double seconds);

  std::string str() const;
  void write(const std::filesystem::path& path) const;

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
  std::vector<std::pair<std::string, std::string>> timing_;
};

/// Drops `timing.` lines from manifest text.
std::string strip_timing(std::string_view manifest);

}  // namespace dlab
