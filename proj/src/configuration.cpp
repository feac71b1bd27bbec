#include "perc/configuration.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "perc/error.hpp"
#include "perc/rng.hpp"

namespace perc {

Model Model::bond(int d) {
  if (d < 2 || d > kMaxDim) throw ParameterError("bond model requires 2 <= d <= 6, got d=" + std::to_string(d));
  return Model{Kind::Bond, d};
}

std::string to_string(const Model& model) {
  return model.is_site() ? std::string("site2d") : "bond" + std::to_string(model.d);
}

Model parse_model(const std::string& name, int d) {
  if (name == "site" || name == "site2d") return Model::site2d();
  if (name == "bond") return Model::bond(d);
  if (name.size() == 5 && name.rfind("bond", 0) == 0 && name[4] >= '0' && name[4] <= '9') return Model::bond(name[4] - '0');
  throw ParameterError("unknown model '" + name + "' (expected site2d or bond<d>)");
}

namespace {

void check_params(const Model& model, int m, double p) {
  if (model.is_site() && model.d != 2) throw ParameterError("Site2D requires d = 2");
  if (!model.is_site() && (model.d < 2 || model.d > kMaxDim)) throw ParameterError("bond model requires 2 <= d <= 6");
  if (m < 1) throw ParameterError("half side m must be >= 1");
  if (!(p >= 0.0 && p <= 1.0)) throw ParameterError("p must lie in [0, 1]");
}

std::size_t payload_bytes(const Model& model, int m) {
  std::size_t side = 2 * static_cast<std::size_t>(m) + 1;
  std::size_t cells = static_cast<std::size_t>(model.bits_per_vertex());
  for (int i = 0; i < model.d; ++i) {
    if (cells > (std::size_t{1} << 60) / side) throw ResourceError("box too large", SIZE_MAX);
    cells *= side;
  }
  return (cells + 7) / 8;
}

}  // namespace

Configuration::Configuration(Model model, int m, double p, std::uint64_t seed)
    : model_(model), m_(m), p_(p), seed_(seed) {
  check_params(model, m, p);
  box_ = BoxGeometry(model.d, m);
  bits_.assign((bit_count() + 7) / 8, 0);
}

Configuration::Configuration(Model model, int m, double p, std::uint64_t seed, std::vector<std::uint8_t> payload)
    : Configuration(model, m, p, seed) {
  if (payload.size() != bits_.size())
    throw ParameterError("payload has " + std::to_string(payload.size()) + " bytes, expected " +
                         std::to_string(bits_.size()));
  bits_ = std::move(payload);
  std::size_t used = bit_count();
  if (used % 8 != 0 && (bits_.back() >> (used % 8)) != 0) throw ParameterError("payload padding bits must be zero");
  if (!model_.is_site()) {
    for (std::size_t v = 0; v < box_.size(); ++v) {
      Point x = box_.point(v);
      for (int a = 0; a < model_.d; ++a)
        if (x[a] == m_ && bit(bond_bit_index(v, a))) throw ParameterError("out-of-box bond bit set");
    }
  }
}

bool Configuration::site_open(const Point& x) const {
  if (!box_.contains(x)) return false;
  return model_.is_site() ? bit(box_.index(x)) : true;
}

bool Configuration::edge_open(const Point& x, int dir) const {
  int axis = direction_axis(dir);
  Point y = x.shifted(axis, direction_step(dir));
  if (!box_.contains(x) || !box_.contains(y)) return false;
  if (model_.is_site()) return bit(box_.index(x)) && bit(box_.index(y));
  const Point& lo = direction_step(dir) > 0 ? x : y;
  return bit(bond_bit_index(box_.index(lo), axis));
}

bool Configuration::vertex_active(const Point& x) const {
  if (!box_.contains(x)) return false;
  if (model_.is_site()) return bit(box_.index(x));
  for (int dir = 0; dir < 2 * model_.d; ++dir)
    if (edge_open(x, dir)) return true;
  return false;
}

std::size_t Configuration::eligible_cells() const {
  if (model_.is_site()) return box_.size();
  // d * side^(d-1) * (side-1) in-box edges.
  std::size_t side = static_cast<std::size_t>(box_.side());
  std::size_t per_axis = side - 1;
  for (int i = 1; i < model_.d; ++i) per_axis *= side;
  return per_axis * static_cast<std::size_t>(model_.d);
}

std::size_t Configuration::open_cells() const {
  std::size_t count = 0;
  for (std::uint8_t b : bits_) count += static_cast<std::size_t>(std::popcount(b));
  return count;
}

void Configuration::set_site(const Point& x, bool open) {
  if (!model_.is_site()) throw ParameterError("set_site on a bond configuration");
  if (!box_.contains(x)) throw ParameterError("site " + to_string(x, dim()) + " outside the stored box");
  set_bit(box_.index(x), open);
}

void Configuration::set_bond(const Point& x, int axis, bool open) {
  if (model_.is_site()) throw ParameterError("set_bond on a site configuration");
  if (axis < 0 || axis >= dim()) throw ParameterError("axis out of range");
  if (!box_.contains(x) || !box_.contains(x.shifted(axis, 1)))
    throw ParameterError("bond leaves the stored box");
  set_bit(bond_bit_index(box_.index(x), axis), open);
}

double cell_uniform(std::uint64_t seed, const Point& x, int d, int slot) {
  std::uint64_t h = mix64(seed);
  for (int i = 0; i < d; ++i) h = combine(h, zigzag(x[i]));
  return to_unit(combine(h, static_cast<std::uint64_t>(slot)));
}

namespace {

// Writes bits of `cfg` by thresholding the shared cell uniforms.
void fill_from_uniforms(Configuration& cfg, double p) {
  const auto& box = cfg.box();
  const int d = cfg.dim();
  for (std::size_t v = 0; v < box.size(); ++v) {
    Point x = box.point(v);
    if (cfg.model().is_site()) {
      if (cell_uniform(cfg.seed(), x, d, 0) < p) cfg.set_site(x, true);
      continue;
    }
    for (int a = 0; a < d; ++a) {
      if (x[a] == cfg.m()) continue;
      if (cell_uniform(cfg.seed(), x, d, 1 + a) < p) cfg.set_bond(x, a, true);
    }
  }
}

}  // namespace

Configuration sample_configuration(Model model, int m, double p, std::uint64_t seed, std::size_t memory_cap) {
  check_params(model, m, p);
  std::size_t need = payload_bytes(model, m);
  if (need > memory_cap)
    throw ResourceError("configuration needs " + std::to_string(need) + " bytes, cap is " + std::to_string(memory_cap),
                        need);
  Configuration cfg(model, m, p, seed);
  fill_from_uniforms(cfg, p);
  return cfg;
}

std::vector<Configuration> sample_coupled(Model model, int m, std::span<const double> ps, std::uint64_t seed) {
  std::vector<Configuration> out;
  out.reserve(ps.size());
  for (double p : ps) out.push_back(sample_configuration(model, m, p, seed));
  return out;
}

double open_fraction(const Configuration& cfg) {
  std::size_t eligible = cfg.eligible_cells();
  return eligible == 0 ? 0.0 : static_cast<double>(cfg.open_cells()) / static_cast<double>(eligible);
}

namespace {

constexpr std::array<char, 4> kMagic{'P', 'E', 'R', 'C'};
constexpr std::uint8_t kVersion = 1;

template <typename T>
void put_le(std::ostream& os, T value) {
  std::array<char, sizeof(T)> buf{};
  auto u = std::bit_cast<std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<char>((u >> (8 * i)) & 0xFFu);
  os.write(buf.data(), sizeof(T));
}

template <typename T>
T get_le(std::istream& is) {
  std::array<unsigned char, sizeof(T)> buf{};
  is.read(reinterpret_cast<char*>(buf.data()), sizeof(T));
  if (!is) throw ParseError(ParseError::Kind::Truncated, "PERC1: truncated header");
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
  U u = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) u |= static_cast<U>(buf[i]) << (8 * i);
  return std::bit_cast<T>(u);
}

std::uint8_t get_u8(std::istream& is) {
  char c = 0;
  if (!is.get(c)) throw ParseError(ParseError::Kind::Truncated, "PERC1: truncated header");
  return static_cast<std::uint8_t>(c);
}

}  // namespace

std::size_t save_configuration(const Configuration& cfg, std::ostream& sink) {
  sink.write(kMagic.data(), kMagic.size());
  sink.put(static_cast<char>(kVersion));
  sink.put(static_cast<char>(cfg.model().kind));
  sink.put(static_cast<char>(cfg.dim()));
  put_le<std::uint32_t>(sink, static_cast<std::uint32_t>(cfg.m()));
  put_le<double>(sink, cfg.p());
  put_le<std::uint64_t>(sink, cfg.seed());
  const auto& payload = cfg.payload();
  sink.write(reinterpret_cast<const char*>(payload.data()), static_cast<std::streamsize>(payload.size()));
  if (!sink) throw Error("PERC1: write failed");
  return kPerc1HeaderBytes + payload.size();
}

Configuration load_configuration(std::istream& source) {
  std::array<char, 4> magic{};
  source.read(magic.data(), magic.size());
  if (!source) throw ParseError(ParseError::Kind::Truncated, "PERC1: truncated magic");
  if (magic != kMagic) throw ParseError(ParseError::Kind::BadMagic, "PERC1: bad magic");
  std::uint8_t version = get_u8(source);
  if (version != kVersion)
    throw ParseError(ParseError::Kind::UnsupportedVersion, "PERC1: unsupported version " + std::to_string(version));
  std::uint8_t kind = get_u8(source);
  std::uint8_t d = get_u8(source);
  auto m = get_le<std::uint32_t>(source);
  auto p = get_le<double>(source);
  auto seed = get_le<std::uint64_t>(source);

  Model model;
  try {
    if (kind == 0) {
      if (d != 2) throw ParameterError("Site2D with d != 2");
      model = Model::site2d();
    } else if (kind == 1) {
      model = Model::bond(d);
    } else {
      throw ParameterError("unknown model byte " + std::to_string(kind));
    }
    check_params(model, static_cast<int>(m), p);
  } catch (const ParameterError& e) {
    throw ParseError(ParseError::Kind::BadHeader, std::string("PERC1: ") + e.what());
  }
  if (m > (1u << 20)) throw ParseError(ParseError::Kind::BadHeader, "PERC1: m out of range");

  std::size_t bytes = payload_bytes(model, static_cast<int>(m));
  std::vector<std::uint8_t> payload(bytes);
  source.read(reinterpret_cast<char*>(payload.data()), static_cast<std::streamsize>(bytes));
  if (static_cast<std::size_t>(source.gcount()) != bytes)
    throw ParseError(ParseError::Kind::Truncated, "PERC1: truncated payload (" + std::to_string(source.gcount()) +
                                                      " of " + std::to_string(bytes) + " bytes)");
  try {
    return Configuration(model, static_cast<int>(m), p, seed, std::move(payload));
  } catch (const ParameterError& e) {
    throw ParseError(ParseError::Kind::BadHeader, std::string("PERC1: ") + e.what());
  }
}

void save_configuration_file(const Configuration& cfg, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open " + path + " for writing");
  save_configuration(cfg, os);
}

Configuration load_configuration_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open " + path);
  return load_configuration(is);
}

}  // namespace perc
