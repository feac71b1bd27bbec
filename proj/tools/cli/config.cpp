#include "cli/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace perc::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) out.push_back(trim(item));
  return out;
}

bool parse_number(const std::string& s, double& out) {
  if (s.empty()) return false;
  std::size_t used = 0;
  try {
    out = std::stod(s, &used);
  } catch (const std::exception&) {
    return false;
  }
  return used == s.size() && std::isfinite(out);
}

}  // namespace

ParamStore ParamStore::from_text(const std::string& text, const std::string& section, const std::string& source) {
  ParamStore store;
  std::istringstream in(text);
  std::string line, current = "global";
  std::map<std::string, Entry> global, local;
  for (int number = 1; std::getline(in, line); ++number) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = source + ":" + std::to_string(number);
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3) throw ConfigError(where + ": malformed section header '" + line + "'");
      current = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value', got '" + line + "'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(where + ": empty key");
    if (current == "global")
      global[key] = {value, where};
    else if (current == section)
      local[key] = {value, where};
  }
  store.entries_ = global;
  for (auto& [k, e] : local) store.entries_[k] = e;
  return store;
}

ParamStore ParamStore::from_file(const std::string& path, const std::string& section) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return from_text(buf.str(), section, path);
}

void ParamStore::set(const std::string& key, const std::string& value, const std::string& origin) {
  entries_[key] = {value, origin};
}

const Entry* ParamStore::find(const std::string& key) const {
  auto it = entries_.find(key);
  return it == entries_.end() ? nullptr : &it->second;
}

void ParamStore::fail(const std::string& key, const std::string& why) const {
  const Entry* e = find(key);
  std::string where = e ? e->origin + ": " : "";
  throw ConfigError(where + "field '" + key + "': " + why);
}

std::string ParamStore::get_string(const std::string& key, const std::string& fallback) const {
  const Entry* e = find(key);
  std::string v = e ? e->value : fallback;
  resolved_[key] = v;
  return v;
}

double ParamStore::get_double(const std::string& key, double fallback) const {
  const Entry* e = find(key);
  double v = fallback;
  if (e && !parse_number(e->value, v)) fail(key, "expected a number, got '" + e->value + "'");
  std::ostringstream s;
  s.precision(17);
  s << v;
  resolved_[key] = e ? e->value : s.str();
  return v;
}

double ParamStore::get_double_in(const std::string& key, double fallback, double lo, double hi) const {
  double v = get_double(key, fallback);
  if (v < lo || v > hi) {
    std::ostringstream s;
    s << "value " << v << " outside [" << lo << ", " << hi << "]";
    fail(key, s.str());
  }
  return v;
}

long long ParamStore::get_int(const std::string& key, long long fallback, long long lo, long long hi) const {
  const Entry* e = find(key);
  long long v = fallback;
  if (e) {
    std::size_t used = 0;
    try {
      v = std::stoll(e->value, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != e->value.size() || e->value.empty()) fail(key, "expected an integer, got '" + e->value + "'");
  }
  if (v < lo || v > hi) fail(key, "value " + std::to_string(v) + " outside [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  resolved_[key] = std::to_string(v);
  return v;
}

std::vector<double> ParamStore::get_doubles(const std::string& key, const std::vector<double>& fallback) const {
  const Entry* e = find(key);
  if (!e) {
    std::ostringstream s;
    s.precision(17);
    for (std::size_t i = 0; i < fallback.size(); ++i) s << (i ? "," : "") << fallback[i];
    resolved_[key] = s.str();
    return fallback;
  }
  try {
    auto v = parse_grid(e->value);
    resolved_[key] = e->value;
    return v;
  } catch (const ConfigError& err) {
    fail(key, err.what());
  }
}

std::vector<int> ParamStore::get_ints(const std::string& key, const std::vector<int>& fallback, int lo, int hi) const {
  const Entry* e = find(key);
  std::vector<int> out = fallback;
  if (e) {
    out.clear();
    for (const auto& item : split(e->value, ',')) {
      double v = 0;
      if (!parse_number(item, v) || v != std::floor(v)) fail(key, "expected integers, got '" + item + "'");
      out.push_back(static_cast<int>(v));
    }
  }
  std::string text;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out[i] < lo || out[i] > hi)
      fail(key, "value " + std::to_string(out[i]) + " outside [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    text += (i ? "," : "") + std::to_string(out[i]);
  }
  resolved_[key] = text;
  return out;
}

bool ParamStore::get_bool(const std::string& key, bool fallback) const {
  const Entry* e = find(key);
  bool v = fallback;
  if (e) {
    if (e->value == "true" || e->value == "1" || e->value == "yes")
      v = true;
    else if (e->value == "false" || e->value == "0" || e->value == "no")
      v = false;
    else
      fail(key, "expected true/false, got '" + e->value + "'");
  }
  resolved_[key] = v ? "true" : "false";
  return v;
}

std::vector<std::string> ParamStore::unused() const {
  std::vector<std::string> out;
  for (const auto& [k, e] : entries_)
    if (!resolved_.count(k)) out.push_back(k);
  return out;
}

std::vector<double> parse_grid(const std::string& text) {
  const std::string t = trim(text);
  for (const std::string fn : {"logspace", "linspace"}) {
    if (t.rfind(fn + "(", 0) != 0) continue;
    if (t.back() != ')') throw ConfigError("unterminated " + fn + "(...)");
    auto args = split(t.substr(fn.size() + 1, t.size() - fn.size() - 2), ',');
    double lo = 0, hi = 0, k = 0;
    if (args.size() != 3 || !parse_number(args[0], lo) || !parse_number(args[1], hi) || !parse_number(args[2], k) ||
        k < 1 || k != std::floor(k))
      throw ConfigError(fn + " expects (lo, hi, count)");
    if (fn == "logspace" && !(lo > 0 && hi > 0)) throw ConfigError("logspace bounds must be positive");
    std::vector<double> out;
    const int count = static_cast<int>(k);
    for (int i = 0; i < count; ++i) {
      const double f = count == 1 ? 0.0 : static_cast<double>(i) / (count - 1);
      out.push_back(fn == "logspace" ? lo * std::pow(hi / lo, f) : lo + (hi - lo) * f);
    }
    return out;
  }
  std::vector<double> out;
  for (const auto& item : split(t, ',')) {
    double v = 0;
    if (!parse_number(item, v)) throw ConfigError("expected a number, got '" + item + "'");
    out.push_back(v);
  }
  if (out.empty()) throw ConfigError("empty list");
  return out;
}

}  // namespace perc::cli
