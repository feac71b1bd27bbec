#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "perc/configuration.hpp"
#include "perc/lattice.hpp"

namespace perc {

enum class ClusterTag { OriginCluster, Largest, Component, OpenVertices };

struct Neighbor {
  int id;
  int dir;  // signed direction from the vertex to the neighbour
};

// Vertex set inside [-n, n]^d together with the open edges joining its
// members. Vertices are kept in lexicographic order; local ids index them.
class ClusterGraph {
 public:
  ClusterGraph() = default;
  ClusterGraph(const Configuration& cfg, int n, ClusterTag tag, std::vector<Point> vertices);

  int dim() const { return box_.dim(); }
  int box_n() const { return box_.half_extent(); }
  const BoxGeometry& box() const { return box_; }
  ClusterTag tag() const { return tag_; }

  std::size_t size() const { return vertices_.size(); }
  const std::vector<Point>& vertices() const { return vertices_; }
  const Point& vertex(int id) const { return vertices_[static_cast<std::size_t>(id)]; }
  // Local id of p, or -1.
  int id_of(const Point& p) const {
    return box_.contains(p) ? local_[box_.index(p)] : -1;
  }
  bool contains(const Point& p) const { return id_of(p) >= 0; }

  std::span<const Neighbor> neighbors(int id) const {
    auto b = offsets_[static_cast<std::size_t>(id)], e = offsets_[static_cast<std::size_t>(id) + 1];
    return {adjacency_.data() + b, e - b};
  }
  int degree(int id) const { return static_cast<int>(neighbors(id).size()); }
  std::size_t edge_count() const { return adjacency_.size() / 2; }
  // Unordered edges as (i, j) with i < j, sorted.
  std::vector<std::pair<int, int>> edges() const;

  bool is_connected() const;

 private:
  BoxGeometry box_{};
  ClusterTag tag_ = ClusterTag::Component;
  std::vector<Point> vertices_;
  std::vector<int> local_;
  std::vector<std::size_t> offsets_;
  std::vector<Neighbor> adjacency_;
};

// A subset of the vertices of a cluster graph, or of the box [-n, n]^d
// (indexed by BoxGeometry::index).
struct SubsetMask {
  enum class Host { Cluster, Box };

  Host host = Host::Cluster;
  std::vector<std::uint8_t> bits;

  static SubsetMask empty_of(const ClusterGraph& g) { return {Host::Cluster, std::vector<std::uint8_t>(g.size(), 0)}; }
  static SubsetMask full_of(const ClusterGraph& g) { return {Host::Cluster, std::vector<std::uint8_t>(g.size(), 1)}; }
  static SubsetMask empty_of(const BoxGeometry& b) { return {Host::Box, std::vector<std::uint8_t>(b.size(), 0)}; }
  // Bit i set iff bit i of `mask` is set (cluster hosts of at most 64 vertices).
  static SubsetMask from_bits(const ClusterGraph& g, std::uint64_t mask);

  std::size_t size() const { return bits.size(); }
  bool test(std::size_t i) const { return bits[i] != 0; }
  void set(std::size_t i, bool v = true) { bits[i] = v ? 1 : 0; }
  std::size_t count() const;
  SubsetMask complement() const;

  friend bool operator==(const SubsetMask&, const SubsetMask&) = default;
};

// Lattice edge {lo, lo + e_axis}.
struct LatticeEdge {
  Point lo;
  int axis = 0;

  Point hi() const { return lo.shifted(axis, 1); }
  friend auto operator<=>(const LatticeEdge&, const LatticeEdge&) = default;
  friend bool operator==(const LatticeEdge&, const LatticeEdge&) = default;
};

LatticeEdge make_edge(const Point& x, int dir);

// Sorted, duplicate-free set of lattice edges.
class EdgeSet {
 public:
  EdgeSet() = default;
  explicit EdgeSet(std::vector<LatticeEdge> edges);

  std::size_t size() const { return edges_.size(); }
  bool empty() const { return edges_.empty(); }
  const std::vector<LatticeEdge>& edges() const { return edges_; }
  auto begin() const { return edges_.begin(); }
  auto end() const { return edges_.end(); }

  friend bool operator==(const EdgeSet&, const EdgeSet&) = default;

 private:
  std::vector<LatticeEdge> edges_;
};

// C^n: the open cluster of the origin using only paths inside [-n, n]^d.
// Throws EmptyCluster when the origin site is closed (site model).
ClusterGraph origin_box_cluster(const Configuration& cfg, int n);

// All open clusters of the box, largest first; ties broken by the
// lexicographically smallest vertex. Bond model: vertices without an open
// edge are not part of any cluster.
std::vector<ClusterGraph> components(const Configuration& cfg, int n);
// L^n. Throws EmptyCluster if the box has no open vertex.
ClusterGraph largest_cluster(const Configuration& cfg, int n);
// G^n: every open vertex of the box (not necessarily connected).
ClusterGraph open_vertices(const Configuration& cfg, int n);

// Open edges of the host with exactly one endpoint in A.
EdgeSet edge_boundary(const ClusterGraph& host, const SubsetMask& a);

// Lattice edges inside the box with exactly one endpoint in D, open or not.
EdgeSet box_edge_boundary(const BoxGeometry& box, const SubsetMask& d);

EdgeSet open_edges(const EdgeSet& edges, const Configuration& cfg);

// Connected in the lattice (nearest-neighbour) sense; subsets of the box.
bool is_lattice_connected(const BoxGeometry& box, const SubsetMask& set);
// Connected through the open edges of the cluster.
bool is_cluster_connected(const ClusterGraph& host, const SubsetMask& set);

// Replaces A (connected, with connected complement in C^n) by D = B^n \ B,
// B the lattice component of B^n \ A containing C^n \ A. Throws
// ContractError when the preconditions or the structural postconditions
// (D cap C^n = A, D and its complement connected, identical boundaries) fail.
SubsetMask fill_complement(const ClusterGraph& cluster, const SubsetMask& a, const Configuration& cfg);

// Two edges are *-adjacent when their midpoints are at max-norm distance
// <= 1. Empty sets and singletons are *-connected.
bool is_star_connected(const EdgeSet& edges, int d);

// Number of lattice components of B^n \ L^n that contain a whole connected
// component of A (A a box subset).
std::size_t n_of_A(const SubsetMask& a, const BoxGeometry& box, const ClusterGraph& largest);

struct ClusterDensity {
  std::size_t cluster_size = 0;
  std::size_t box_volume = 0;
  double ratio = 0.0;
  bool empty = false;  // origin carries no open structure
};
ClusterDensity cluster_density_stats(const Configuration& cfg, int n);

struct ChemicalDistanceStats {
  int inner_radius = 0;
  std::size_t points = 0;       // x != 0 of C cap B^{n/rho} reachable from 0
  double max_stretch = 0.0;     // max of D(0,x) / |x|_1
  double mean_stretch = 0.0;
  std::vector<std::size_t> histogram;  // bins of width 0.25 starting at 1, last bin open
  bool contained = true;        // C cap B^{n/rho} is a subset of C^n
};
// D is computed by BFS over the whole stored box; requires m > n, rho >= 1.
ChemicalDistanceStats chemical_distance_stats(const Configuration& cfg, int n, double rho);

inline constexpr double kStretchBinWidth = 0.25;
inline constexpr std::size_t kStretchBins = 12;

}  // namespace perc
