#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "perc/configuration.hpp"
#include "perc/lattice.hpp"

namespace perc {

enum class ChannelDirection { Horizontal, Vertical };
std::string to_string(ChannelDirection direction);

// Closed rectangle [x0, x0 + width] x [y0, y0 + height] in absolute
// coordinates. A horizontal channel runs from the side x = x0 to the side
// x = x0 + width; its other vertices satisfy x0 < x < x0 + width and
// y0 < y < y0 + height.
struct Rect {
  int x0 = 0;
  int y0 = 0;
  int width = 0;
  int height = 0;
};

struct ChannelSet {
  ChannelDirection direction = ChannelDirection::Horizontal;
  Rect rect;
  std::vector<std::vector<Point>> paths;
  std::size_t count() const { return paths.size(); }
};

// Maximum number of vertex-disjoint open crossings (Site2D only), by unit
// vertex-capacity max-flow, with a witness decomposition.
ChannelSet max_disjoint_channels(const Configuration& cfg, const Rect& rect, ChannelDirection direction);

// Direct inspection of every ChannelSet invariant.
bool validate_channels(const Configuration& cfg, const ChannelSet& set);

struct KestenStrip {
  int index = 0;
  int lo = 0;  // first row (horizontal strip) / column (vertical strip)
  int hi = 0;  // last, inclusive
  bool short_strip = false;
  std::size_t horizontal = 0;  // horizontal channels across the horizontal strip
  std::size_t vertical = 0;    // vertical channels across the vertical strip
};

struct KestenGrid {
  int n = 0;
  double C = 2.0;
  int strip_height = 0;  // ceil(C log n) rows per strip
  bool degenerate = false;  // strip_height > 2n + 1: one strip covering the box
  std::vector<KestenStrip> strips;
  std::size_t total_horizontal = 0;
  std::size_t total_vertical = 0;
};

// Splits [-n, n]^2 into strips of strip_height rows (resp. columns) and
// counts channels in each.
KestenGrid build_kesten_grid(const Configuration& cfg, int n, double C = 2.0);

inline constexpr double kSiteCriticalPoint = 0.5927;

struct ChannelScalingRow {
  int n = 0;
  std::uint64_t seed = 0;
  std::size_t channels = 0;
  double ratio = 0.0;  // channels / n
};

struct ChannelScalingSummary {
  int n = 0;
  double mean_ratio = 0.0;
  double min_ratio = 0.0;
  double zero_fraction = 0.0;
};

struct ChannelScalingResult {
  double p = 0.0;
  bool below_threshold = false;  // p <= kSiteCriticalPoint: no linear growth expected
  std::vector<ChannelScalingRow> rows;  // ordered by (n, seed)
  std::vector<ChannelScalingSummary> summary;
};

// N(n, n) on [0, n]^2 of a Site2D sample with m = n, seeds first_seed + i.
ChannelScalingResult channel_scaling_experiment(double p, const std::vector<int>& sizes, std::size_t num_seeds,
                                                std::uint64_t first_seed, int workers = 1);

}  // namespace perc
