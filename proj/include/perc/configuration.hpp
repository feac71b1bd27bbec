#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "perc/lattice.hpp"

namespace perc {

struct Model {
  enum class Kind : std::uint8_t { Site2D = 0, Bond = 1 };

  Kind kind = Kind::Bond;
  int d = 2;

  static Model site2d() { return Model{Kind::Site2D, 2}; }
  static Model bond(int d);

  bool is_site() const { return kind == Kind::Site2D; }
  // Bits stored per vertex of the stored box.
  int bits_per_vertex() const { return is_site() ? 1 : d; }

  friend bool operator==(const Model&, const Model&) = default;
};

std::string to_string(const Model& model);
// Accepts "site", "site2d", "bond2", "bond3", ... and "bond" together with d.
Model parse_model(const std::string& name, int d = 2);

// Default cap on the occupancy payload (bytes).
inline constexpr std::size_t kDefaultMemoryCap = std::size_t{1} << 30;

// One percolation environment on the stored box [-m, m]^d.
//
// Site model: bit v is the state of vertex v. Bond model: bit v*d + (d-1-axis)
// is the state of the edge {v, v+e_axis}; the bit is forced to 0 when
// v+e_axis leaves the box. Vertices are indexed row-major, last coordinate
// fastest.
class Configuration {
 public:
  Configuration() = default;
  // All cells closed.
  Configuration(Model model, int m, double p, std::uint64_t seed);
  // Adopts a packed payload; throws ParameterError on a length mismatch or
  // when an out-of-box bond bit is set.
  Configuration(Model model, int m, double p, std::uint64_t seed, std::vector<std::uint8_t> payload);

  const Model& model() const { return model_; }
  int dim() const { return model_.d; }
  int m() const { return m_; }
  double p() const { return p_; }
  std::uint64_t seed() const { return seed_; }
  const BoxGeometry& box() const { return box_; }

  std::size_t bit_count() const { return box_.size() * static_cast<std::size_t>(model_.bits_per_vertex()); }
  const std::vector<std::uint8_t>& payload() const { return bits_; }

  bool bit(std::size_t i) const { return (bits_[i >> 3] >> (i & 7)) & 1u; }

  // Site state; always true in the bond model (every vertex is present).
  bool site_open(const Point& x) const;
  // Edge {x, x + step*e_axis} for a signed direction (see lattice.hpp).
  // False if either endpoint lies outside the stored box.
  bool edge_open(const Point& x, int dir) const;
  // Whether x carries open structure: an open site, or for bonds a vertex
  // incident to at least one open edge.
  bool vertex_active(const Point& x) const;

  // Eligible cells: every site, or every bond with both endpoints in the box.
  std::size_t eligible_cells() const;
  std::size_t open_cells() const;

  // Hand construction (tests, renormalized fields).
  void set_site(const Point& x, bool open);
  void set_bond(const Point& x, int axis, bool open);

  friend bool operator==(const Configuration&, const Configuration&) = default;

 private:
  void set_bit(std::size_t i, bool v) {
    auto mask = static_cast<std::uint8_t>(1u << (i & 7));
    if (v)
      bits_[i >> 3] |= mask;
    else
      bits_[i >> 3] &= static_cast<std::uint8_t>(~mask);
  }
  std::size_t bond_bit_index(std::size_t vertex, int axis) const {
    return vertex * static_cast<std::size_t>(model_.d) + static_cast<std::size_t>(model_.d - 1 - axis);
  }

  Model model_{};
  int m_ = 0;
  double p_ = 0.0;
  std::uint64_t seed_ = 0;
  BoxGeometry box_{};
  std::vector<std::uint8_t> bits_;
};

// Uniform in [0, 1) attached to a lattice cell. `slot` is 0 for a site and
// 1 + axis for the bond leaving x along +e_axis. The key depends on the
// absolute lattice position only, so boxes of different size sampled with
// the same seed agree on their overlap.
double cell_uniform(std::uint64_t seed, const Point& x, int d, int slot);

// Cell open iff cell_uniform < p.
Configuration sample_configuration(Model model, int m, double p, std::uint64_t seed,
                                   std::size_t memory_cap = kDefaultMemoryCap);

// Same uniforms thresholded at each p: results are nested when ps increases.
std::vector<Configuration> sample_coupled(Model model, int m, std::span<const double> ps, std::uint64_t seed);

double open_fraction(const Configuration& cfg);

// PERC1 serialization (little-endian header, LSB-first payload).
std::size_t save_configuration(const Configuration& cfg, std::ostream& sink);
Configuration load_configuration(std::istream& source);
void save_configuration_file(const Configuration& cfg, const std::string& path);
Configuration load_configuration_file(const std::string& path);

inline constexpr std::size_t kPerc1HeaderBytes = 27;

}  // namespace perc
