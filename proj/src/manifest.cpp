#include "dlab/manifest.hpp"

#include <openssl/evp.h>

#include <array>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "dlab/corpus.hpp"
#include "dlab/error.hpp"

namespace dlab {

std::string sha256_hex(std::string_view data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int length = 0;
  if (EVP_Digest(data.data(), data.size(), digest.data(), &length, EVP_sha256(), nullptr) != 1)
    throw Error("sha256 failed");
  std::string out;
  char hex[3];
  for (unsigned int i = 0; i < length; ++i) {
    std::snprintf(hex, sizeof hex, "%02x", digest[i]);
    out += hex;
  }
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const std::filesystem::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

std::string file_sha256(const std::filesystem::path& path) { return sha256_hex(read_file(path)); }

std::map<std::string, std::string> parse_config(std::string_view text) {
  std::map<std::string, std::string> out;
  std::string section;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const std::size_t newline = text.find('\n');
    std::string_view line = text.substr(0, newline);
    text = newline == std::string_view::npos ? std::string_view() : text.substr(newline + 1);
    if (auto comment = line.find_first_of("#;"); comment != std::string_view::npos) line = line.substr(0, comment);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError("unterminated section header", line_no);
      section = std::string(trim(line.substr(1, line.size() - 2)));
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError("expected key = value", line_no);
    std::string key(trim(line.substr(0, eq)));
    std::string_view value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    if (key.empty()) throw ParseError("empty key", line_no);
    out[section.empty() ? key : section + "." + key] = std::string(value);
  }
  return out;
}

void RunManifest::set(const std::string& key, const std::string& value) {
  for (auto& [k, v] : entries_)
    if (k == key) {
      v = value;
      return;
    }
  entries_.emplace_back(key, value);
}

void RunManifest::add_input(const std::string& label, const std::filesystem::path& path) {
  set("input." + label + ".path", path.generic_string());
  set("input." + label + ".sha256", file_sha256(path));
}

void RunManifest::set_timing(const std::string& key, double seconds) {
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "%.3f", seconds);
  timing_.emplace_back("timing." + key + "_seconds", buffer);
}

std::string RunManifest::str() const {
  std::string out;
  for (const auto& [k, v] : entries_) out += k + " = " + v + '\n';
  for (const auto& [k, v] : timing_) out += k + " = " + v + '\n';
  return out;
}

void RunManifest::write(const std::filesystem::path& path) const { write_file(path, str()); }

std::string strip_timing(std::string_view manifest) {
  std::string out;
  while (!manifest.empty()) {
    const std::size_t newline = manifest.find('\n');
    const std::string_view line = manifest.substr(0, newline == std::string_view::npos ? manifest.size() : newline + 1);
    manifest.remove_prefix(line.size());
    if (line.rfind("timing.", 0) != 0) out += line;
  }
  return out;
}

}  // namespace dlab
