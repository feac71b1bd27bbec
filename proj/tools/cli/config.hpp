#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace perc::cli {

// Flat `key = value` text with `[section]` headers. Keys before the first
// header (or under [global]) apply to every command; a command reads its own
// section on top of them. `#` starts a comment.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Entry {
  std::string value;
  std::string origin;  // "file.conf:12" or "--flag"
};

class ParamStore {
 public:
  static ParamStore from_text(const std::string& text, const std::string& section, const std::string& source);
  static ParamStore from_file(const std::string& path, const std::string& section);

  void set(const std::string& key, const std::string& value, const std::string& origin);
  bool has(const std::string& key) const { return entries_.count(key) > 0; }

  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  double get_double_in(const std::string& key, double fallback, double lo, double hi) const;
  long long get_int(const std::string& key, long long fallback, long long lo, long long hi) const;
  std::vector<double> get_doubles(const std::string& key, const std::vector<double>& fallback) const;
  std::vector<int> get_ints(const std::string& key, const std::vector<int>& fallback, int lo, int hi) const;
  bool get_bool(const std::string& key, bool fallback) const;

  // Every key that was read, with its resolved value (for the manifest).
  const std::map<std::string, std::string>& resolved() const { return resolved_; }
  // Keys that were set but never read.
  std::vector<std::string> unused() const;
  const std::map<std::string, Entry>& entries() const { return entries_; }

 private:
  [[noreturn]] void fail(const std::string& key, const std::string& why) const;
  const Entry* find(const std::string& key) const;

  std::map<std::string, Entry> entries_;
  mutable std::map<std::string, std::string> resolved_;
};

// "a,b,c", or "logspace(lo,hi,k)" / "linspace(lo,hi,k)" for grids.
std::vector<double> parse_grid(const std::string& text);

}  // namespace perc::cli
