#include "moralmt/kvconfig.hpp"

#include <fstream>
#include <sstream>

#include "moralmt/error.hpp"

namespace moralmt {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

std::vector<KvEntry> parse_kv(std::string_view text) {
  std::vector<KvEntry> out;
  std::size_t lineno = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? text.size() - pos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error("config line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    const auto key = trim(line.substr(0, eq));
    if (key.empty()) throw Error("config line " + std::to_string(lineno) + ": empty key");
    out.push_back({std::string(key), std::string(trim(line.substr(eq + 1))), lineno});
  }
  return out;
}

std::vector<KvEntry> parse_kv_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << is.rdbuf();
  try {
    return parse_kv(ss.str());
  } catch (const Error& e) {
    throw Error(path + ": " + e.what());
  }
}

}  // namespace moralmt
