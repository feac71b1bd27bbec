#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "perc/cluster_graph.hpp"
#include "perc/configuration.hpp"
#include "perc/lattice.hpp"
#include "perc/stats.hpp"

namespace perc {

// Block boxes at scale N: B_i has half-extent N and centre (2N+1) i, so the
// B_i tile Z^d; B'_i has the same centre and half-extent floor(5N/4).
struct BlockSpec {
  int N = 1;
  int d = 2;
  Point index;

  Point centre() const;
  BoxGeometry inner() const { return BoxGeometry(d, centre(), N); }
  BoxGeometry outer() const { return BoxGeometry(d, centre(), outer_half_extent(N)); }
  static int outer_half_extent(int N) { return (5 * N) / 4; }
};

struct GoodBoxReport {
  bool is_good = false;
  bool has_edge = false;             // B_i contains an open edge
  bool unique_big_cluster = false;   // exactly one open cluster of B'_i has radius > N/10
  bool long_paths_meet_K = false;    // no second big cluster
  bool K_crossing_all_subboxes = false;
  std::size_t big_clusters = 0;
  std::size_t K_size = 0;
  std::size_t subboxes_checked = 0;
};

// L-infinity circumradius of a finite point set: max over axes of
// ceil((max - min) / 2).
int linf_circumradius(const std::vector<Point>& points, int d);

// Subbox family used for the crossing flag: cubes with side (vertex count)
// s > N/10, corners at stride ceil(N/20) plus the flush-right positions.
// Returned as (corner offsets relative to B'_i's low corner, side).
struct Subbox {
  Point low;
  int side = 0;
};
std::vector<Subbox> crossing_subboxes(int N, int d);

// Requires B'_i inside the stored box.
GoodBoxReport good_box(const Configuration& cfg, const BlockSpec& block);

// Site configuration on the index region [-R, R]^2 whose open sites are the
// good blocks. Requires d = 2 and every B'_i inside the stored box.
Configuration renormalized_field(const Configuration& cfg, int N, int R, int workers = 1);

struct BoxInteraction {
  std::size_t touched_not_filled = 0;  // bar n_1
  std::size_t filled = 0;              // bar n_2
  std::size_t good_touched_not_filled = 0;  // n_1
  std::size_t good_filled = 0;              // n_2
};

// A is a subset of the cluster `cn`; boxes are the B_i at scale N.
BoxInteraction box_interaction_counts(const ClusterGraph& cn, const SubsetMask& a, const Configuration& cfg, int N);

struct GoodBoxRow {
  double p = 0.0;
  int N = 0;
  std::uint64_t seed = 0;
  GoodBoxReport report;
};

struct GoodBoxSummary {
  double p = 0.0;
  int N = 0;
  std::size_t blocks = 0;
  std::size_t good = 0;
  double frequency = 0.0;
  Interval wilson;
};

struct GoodBoxExperiment {
  std::vector<GoodBoxRow> rows;  // ordered by (p, N, seed)
  std::vector<GoodBoxSummary> summary;
};

// One block (i = 0) per seed, each on its own sample with m = floor(5N/4).
GoodBoxExperiment good_box_probability_experiment(const Model& model, const std::vector<double>& ps,
                                                  const std::vector<int>& Ns, std::size_t blocks,
                                                  std::uint64_t first_seed, int workers = 1);

}  // namespace perc
