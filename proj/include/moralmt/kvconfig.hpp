#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

// Key-value text config:
//
//   # comment
//   key = value
//
// Blank lines and lines starting with '#' are skipped; a '#' after a value
// starts a trailing comment. Keys may repeat; order is kept.
namespace moralmt {

struct KvEntry {
  std::string key;
  std::string value;
  std::size_t line = 0;
};

// Throws Error naming the line on a line without '=' or with an empty key.
std::vector<KvEntry> parse_kv(std::string_view text);
std::vector<KvEntry> parse_kv_file(const std::string& path);

}  // namespace moralmt
