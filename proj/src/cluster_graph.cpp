#include "perc/cluster_graph.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <deque>
#include <numeric>
#include <unordered_map>

#include "perc/error.hpp"

namespace perc {

namespace {

void check_box(const Configuration& cfg, int n) {
  if (n < 1) throw ParameterError("box half-extent n must be >= 1");
  if (n > cfg.m()) throw ParameterError("box n=" + std::to_string(n) + " exceeds stored box m=" + std::to_string(cfg.m()));
}

// Minimal union-find with path halving.
class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n), size_(n, 1) { std::iota(parent_.begin(), parent_.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (size_[a] < size_[b]) std::swap(a, b);
    parent_[b] = a;
    size_[a] += size_[b];
  }

 private:
  std::vector<std::size_t> parent_;
  std::vector<std::size_t> size_;
};

}  // namespace

ClusterGraph::ClusterGraph(const Configuration& cfg, int n, ClusterTag tag, std::vector<Point> vertices)
    : box_(cfg.dim(), n), tag_(tag), vertices_(std::move(vertices)) {
  check_box(cfg, n);
  std::sort(vertices_.begin(), vertices_.end());
  vertices_.erase(std::unique(vertices_.begin(), vertices_.end()), vertices_.end());
  local_.assign(box_.size(), -1);
  for (std::size_t i = 0; i < vertices_.size(); ++i) {
    if (!box_.contains(vertices_[i]))
      throw ParameterError("vertex " + to_string(vertices_[i], dim()) + " outside [-n, n]^d");
    local_[box_.index(vertices_[i])] = static_cast<int>(i);
  }
  const int d = dim();
  offsets_.assign(vertices_.size() + 1, 0);
  for (std::size_t i = 0; i < vertices_.size(); ++i) {
    for (int dir = 0; dir < 2 * d; ++dir) {
      Point y = vertices_[i].shifted(direction_axis(dir), direction_step(dir));
      int j = id_of(y);
      if (j >= 0 && cfg.edge_open(vertices_[i], dir)) adjacency_.push_back({j, dir});
    }
    offsets_[i + 1] = adjacency_.size();
  }
}

std::vector<std::pair<int, int>> ClusterGraph::edges() const {
  std::vector<std::pair<int, int>> out;
  out.reserve(edge_count());
  for (int i = 0; i < static_cast<int>(size()); ++i)
    for (const auto& nb : neighbors(i))
      if (i < nb.id) out.emplace_back(i, nb.id);
  std::sort(out.begin(), out.end());
  return out;
}

bool ClusterGraph::is_connected() const {
  if (vertices_.empty()) return true;
  SubsetMask all = SubsetMask::full_of(*this);
  return is_cluster_connected(*this, all);
}

SubsetMask SubsetMask::from_bits(const ClusterGraph& g, std::uint64_t mask) {
  if (g.size() > 64) throw ParameterError("from_bits needs a host of at most 64 vertices");
  SubsetMask s = empty_of(g);
  for (std::size_t i = 0; i < g.size(); ++i) s.bits[i] = static_cast<std::uint8_t>((mask >> i) & 1u);
  return s;
}

std::size_t SubsetMask::count() const {
  return static_cast<std::size_t>(std::count_if(bits.begin(), bits.end(), [](std::uint8_t b) { return b != 0; }));
}

SubsetMask SubsetMask::complement() const {
  SubsetMask c = *this;
  for (auto& b : c.bits) b = b ? 0 : 1;
  return c;
}

LatticeEdge make_edge(const Point& x, int dir) {
  int axis = direction_axis(dir);
  return direction_step(dir) > 0 ? LatticeEdge{x, axis} : LatticeEdge{x.shifted(axis, -1), axis};
}

EdgeSet::EdgeSet(std::vector<LatticeEdge> edges) : edges_(std::move(edges)) {
  std::sort(edges_.begin(), edges_.end());
  edges_.erase(std::unique(edges_.begin(), edges_.end()), edges_.end());
}

ClusterGraph origin_box_cluster(const Configuration& cfg, int n) {
  check_box(cfg, n);
  const Point origin = Point::origin();
  if (!cfg.site_open(origin)) throw EmptyCluster("origin site is closed");
  BoxGeometry box(cfg.dim(), n);
  std::vector<std::uint8_t> seen(box.size(), 0);
  std::vector<Point> found{origin};
  seen[box.index(origin)] = 1;
  for (std::size_t head = 0; head < found.size(); ++head) {
    Point x = found[head];
    for (int dir = 0; dir < 2 * cfg.dim(); ++dir) {
      Point y = x.shifted(direction_axis(dir), direction_step(dir));
      if (!box.contains(y) || seen[box.index(y)] || !cfg.edge_open(x, dir)) continue;
      seen[box.index(y)] = 1;
      found.push_back(y);
    }
  }
  return ClusterGraph(cfg, n, ClusterTag::OriginCluster, std::move(found));
}

std::vector<ClusterGraph> components(const Configuration& cfg, int n) {
  check_box(cfg, n);
  BoxGeometry box(cfg.dim(), n);
  const int d = cfg.dim();
  DisjointSets sets(box.size());
  std::vector<std::uint8_t> active(box.size(), 0);
  for (std::size_t v = 0; v < box.size(); ++v) {
    Point x = box.point(v);
    if (cfg.model().is_site()) active[v] = cfg.site_open(x) ? 1 : 0;
    for (int a = 0; a < d; ++a) {
      Point y = x.shifted(a, 1);
      if (!box.contains(y) || !cfg.edge_open(x, 2 * a)) continue;
      sets.unite(v, box.index(y));
      active[v] = 1;
      active[box.index(y)] = 1;
    }
  }
  std::unordered_map<std::size_t, std::vector<Point>> groups;
  for (std::size_t v = 0; v < box.size(); ++v)
    if (active[v]) groups[sets.find(v)].push_back(box.point(v));
  std::vector<std::vector<Point>> lists;
  lists.reserve(groups.size());
  for (auto& [root, pts] : groups) lists.push_back(std::move(pts));
  // Points were appended in index (= lexicographic) order, so front() is the minimum.
  std::sort(lists.begin(), lists.end(), [](const auto& a, const auto& b) {
    if (a.size() != b.size()) return a.size() > b.size();
    return a.front() < b.front();
  });
  std::vector<ClusterGraph> out;
  out.reserve(lists.size());
  for (auto& pts : lists) out.emplace_back(cfg, n, ClusterTag::Component, std::move(pts));
  return out;
}

ClusterGraph largest_cluster(const Configuration& cfg, int n) {
  auto comps = components(cfg, n);
  if (comps.empty()) throw EmptyCluster("no open vertex in the box");
  return ClusterGraph(cfg, n, ClusterTag::Largest, comps.front().vertices());
}

ClusterGraph open_vertices(const Configuration& cfg, int n) {
  check_box(cfg, n);
  BoxGeometry box(cfg.dim(), n);
  std::vector<Point> pts;
  for (std::size_t v = 0; v < box.size(); ++v) {
    Point x = box.point(v);
    if (cfg.vertex_active(x)) {
      // Bond model: an open edge leaving [-n, n]^d does not count.
      bool inside = cfg.model().is_site();
      for (int dir = 0; !inside && dir < 2 * cfg.dim(); ++dir)
        inside = box.contains(x.shifted(direction_axis(dir), direction_step(dir))) && cfg.edge_open(x, dir);
      if (inside) pts.push_back(x);
    }
  }
  return ClusterGraph(cfg, n, ClusterTag::OpenVertices, std::move(pts));
}

EdgeSet edge_boundary(const ClusterGraph& host, const SubsetMask& a) {
  if (a.host != SubsetMask::Host::Cluster || a.size() != host.size())
    throw ParameterError("edge_boundary: mask does not match the host cluster");
  std::vector<LatticeEdge> out;
  for (int i = 0; i < static_cast<int>(host.size()); ++i) {
    if (!a.test(static_cast<std::size_t>(i))) continue;
    for (const auto& nb : host.neighbors(i))
      if (!a.test(static_cast<std::size_t>(nb.id))) out.push_back(make_edge(host.vertex(i), nb.dir));
  }
  return EdgeSet(std::move(out));
}

EdgeSet box_edge_boundary(const BoxGeometry& box, const SubsetMask& d) {
  if (d.host != SubsetMask::Host::Box || d.size() != box.size())
    throw ParameterError("box_edge_boundary: mask does not match the box");
  std::vector<LatticeEdge> out;
  for (std::size_t v = 0; v < box.size(); ++v) {
    Point x = box.point(v);
    for (int a = 0; a < box.dim(); ++a) {
      Point y = x.shifted(a, 1);
      if (!box.contains(y)) continue;
      if (d.test(v) != d.test(box.index(y))) out.push_back({x, a});
    }
  }
  return EdgeSet(std::move(out));
}

EdgeSet open_edges(const EdgeSet& edges, const Configuration& cfg) {
  std::vector<LatticeEdge> out;
  for (const auto& e : edges)
    if (cfg.edge_open(e.lo, 2 * e.axis)) out.push_back(e);
  return EdgeSet(std::move(out));
}

bool is_lattice_connected(const BoxGeometry& box, const SubsetMask& set) {
  if (set.host != SubsetMask::Host::Box || set.size() != box.size())
    throw ParameterError("is_lattice_connected: mask does not match the box");
  std::size_t total = set.count();
  if (total == 0) return true;
  std::size_t start = 0;
  while (!set.test(start)) ++start;
  std::vector<std::uint8_t> seen(box.size(), 0);
  std::vector<std::size_t> stack{start};
  seen[start] = 1;
  std::size_t reached = 1;
  while (!stack.empty()) {
    Point x = box.point(stack.back());
    stack.pop_back();
    for (int dir = 0; dir < 2 * box.dim(); ++dir) {
      Point y = x.shifted(direction_axis(dir), direction_step(dir));
      if (!box.contains(y)) continue;
      std::size_t j = box.index(y);
      if (!set.test(j) || seen[j]) continue;
      seen[j] = 1;
      ++reached;
      stack.push_back(j);
    }
  }
  return reached == total;
}

bool is_cluster_connected(const ClusterGraph& host, const SubsetMask& set) {
  if (set.host != SubsetMask::Host::Cluster || set.size() != host.size())
    throw ParameterError("is_cluster_connected: mask does not match the host cluster");
  std::size_t total = set.count();
  if (total == 0) return true;
  std::size_t start = 0;
  while (!set.test(start)) ++start;
  std::vector<std::uint8_t> seen(host.size(), 0);
  std::vector<int> stack{static_cast<int>(start)};
  seen[start] = 1;
  std::size_t reached = 1;
  while (!stack.empty()) {
    int i = stack.back();
    stack.pop_back();
    for (const auto& nb : host.neighbors(i)) {
      auto j = static_cast<std::size_t>(nb.id);
      if (!set.test(j) || seen[j]) continue;
      seen[j] = 1;
      ++reached;
      stack.push_back(nb.id);
    }
  }
  return reached == total;
}

SubsetMask fill_complement(const ClusterGraph& cluster, const SubsetMask& a, const Configuration& cfg) {
  if (a.host != SubsetMask::Host::Cluster || a.size() != cluster.size())
    throw ContractError("fill_complement: A must be a subset of the cluster");
  std::size_t na = a.count();
  if (na == 0 || na == cluster.size()) throw ContractError("fill_complement: A and C^n \\ A must be nonempty");
  SubsetMask rest = a.complement();
  if (!is_cluster_connected(cluster, a)) throw ContractError("fill_complement: A is not connected in C^n");
  if (!is_cluster_connected(cluster, rest)) throw ContractError("fill_complement: C^n \\ A is not connected");

  const BoxGeometry& box = cluster.box();
  std::vector<std::uint8_t> in_a(box.size(), 0);
  for (std::size_t i = 0; i < cluster.size(); ++i)
    if (a.test(i)) in_a[box.index(cluster.vertex(static_cast<int>(i)))] = 1;

  // B: lattice component of B^n \ A containing C^n \ A.
  std::size_t start = 0;
  while (a.test(start)) ++start;
  std::size_t s = box.index(cluster.vertex(static_cast<int>(start)));
  std::vector<std::uint8_t> in_b(box.size(), 0);
  std::vector<std::size_t> stack{s};
  in_b[s] = 1;
  while (!stack.empty()) {
    Point x = box.point(stack.back());
    stack.pop_back();
    for (int dir = 0; dir < 2 * box.dim(); ++dir) {
      Point y = x.shifted(direction_axis(dir), direction_step(dir));
      if (!box.contains(y)) continue;
      std::size_t j = box.index(y);
      if (in_a[j] || in_b[j]) continue;
      in_b[j] = 1;
      stack.push_back(j);
    }
  }
  SubsetMask dmask = SubsetMask::empty_of(box);
  for (std::size_t v = 0; v < box.size(); ++v) dmask.set(v, !in_b[v]);

  // Structural postconditions.
  for (std::size_t i = 0; i < cluster.size(); ++i) {
    bool in_d = dmask.test(box.index(cluster.vertex(static_cast<int>(i))));
    if (in_d != a.test(i)) throw ContractError("fill_complement: D cap C^n != A");
  }
  if (!is_lattice_connected(box, dmask)) throw ContractError("fill_complement: D is not connected");
  if (!is_lattice_connected(box, dmask.complement())) throw ContractError("fill_complement: B^n \\ D is not connected");
  if (edge_boundary(cluster, a) != open_edges(box_edge_boundary(box, dmask), cfg))
    throw ContractError("fill_complement: boundary identity violated");
  return dmask;
}

bool is_star_connected(const EdgeSet& edges, int d) {
  const std::size_t f = edges.size();
  if (f <= 1) return true;
  // Doubled midpoints: 2*lo + e_axis. *-adjacent iff max |difference| <= 2.
  std::vector<Point> mid(f);
  for (std::size_t i = 0; i < f; ++i) {
    const auto& e = edges.edges()[i];
    for (int k = 0; k < d; ++k) mid[i][k] = 2 * e.lo[k];
    mid[i][e.axis] += 1;
  }
  auto adjacent = [&](std::size_t i, std::size_t j) {
    for (int k = 0; k < d; ++k)
      if (std::abs(mid[i][k] - mid[j][k]) > 2) return false;
    return true;
  };
  std::vector<std::uint8_t> seen(f, 0);
  std::vector<std::size_t> stack{0};
  seen[0] = 1;
  std::size_t reached = 1;

  if (f <= 128) {
    while (!stack.empty()) {
      std::size_t i = stack.back();
      stack.pop_back();
      for (std::size_t j = 0; j < f; ++j) {
        if (seen[j] || !adjacent(i, j)) continue;
        seen[j] = 1;
        ++reached;
        stack.push_back(j);
      }
    }
    return reached == f;
  }

  std::unordered_map<Point, std::size_t, PointHash> where;
  where.reserve(f * 2);
  for (std::size_t i = 0; i < f; ++i) where.emplace(mid[i], i);
  std::size_t offsets = 1;
  for (int k = 0; k < d; ++k) offsets *= 5;
  while (!stack.empty()) {
    std::size_t i = stack.back();
    stack.pop_back();
    for (std::size_t code = 0; code < offsets; ++code) {
      Point q = mid[i];
      std::size_t c = code;
      for (int k = 0; k < d; ++k) {
        q[k] += static_cast<int>(c % 5) - 2;
        c /= 5;
      }
      auto it = where.find(q);
      if (it == where.end() || seen[it->second]) continue;
      seen[it->second] = 1;
      ++reached;
      stack.push_back(it->second);
    }
  }
  return reached == f;
}

std::size_t n_of_A(const SubsetMask& a, const BoxGeometry& box, const ClusterGraph& largest) {
  if (a.host != SubsetMask::Host::Box || a.size() != box.size())
    throw ParameterError("n_of_A: A must be a subset of the box");
  if (!(largest.box() == box)) throw ParameterError("n_of_A: L^n lives in a different box");
  constexpr int kUnlabelled = -1;
  std::vector<int> hole(box.size(), kUnlabelled);
  std::vector<std::uint8_t> in_l(box.size(), 0);
  for (const auto& p : largest.vertices()) in_l[box.index(p)] = 1;

  auto flood = [&](std::vector<int>& label, auto&& member, std::size_t start, int id) {
    std::vector<std::size_t> stack{start};
    label[start] = id;
    while (!stack.empty()) {
      Point x = box.point(stack.back());
      stack.pop_back();
      for (int dir = 0; dir < 2 * box.dim(); ++dir) {
        Point y = x.shifted(direction_axis(dir), direction_step(dir));
        if (!box.contains(y)) continue;
        std::size_t j = box.index(y);
        if (label[j] != kUnlabelled || !member(j)) continue;
        label[j] = id;
        stack.push_back(j);
      }
    }
  };

  int holes = 0;
  for (std::size_t v = 0; v < box.size(); ++v)
    if (!in_l[v] && hole[v] == kUnlabelled) flood(hole, [&](std::size_t j) { return !in_l[j]; }, v, holes++);

  std::vector<int> comp(box.size(), kUnlabelled);
  int comps = 0;
  for (std::size_t v = 0; v < box.size(); ++v)
    if (a.test(v) && comp[v] == kUnlabelled) flood(comp, [&](std::size_t j) { return a.test(j); }, v, comps++);

  // A component is inside hole h iff all its vertices carry label h.
  std::vector<int> comp_hole(static_cast<std::size_t>(comps), kUnlabelled);
  std::vector<std::uint8_t> comp_ok(static_cast<std::size_t>(comps), 1);
  for (std::size_t v = 0; v < box.size(); ++v) {
    if (comp[v] == kUnlabelled) continue;
    auto c = static_cast<std::size_t>(comp[v]);
    if (hole[v] == kUnlabelled) {
      comp_ok[c] = 0;
    } else if (comp_hole[c] == kUnlabelled) {
      comp_hole[c] = hole[v];
    } else if (comp_hole[c] != hole[v]) {
      comp_ok[c] = 0;
    }
  }
  std::vector<std::uint8_t> counted(static_cast<std::size_t>(holes), 0);
  std::size_t result = 0;
  for (std::size_t c = 0; c < comp_ok.size(); ++c) {
    if (!comp_ok[c] || comp_hole[c] == kUnlabelled) continue;
    auto h = static_cast<std::size_t>(comp_hole[c]);
    if (!counted[h]) {
      counted[h] = 1;
      ++result;
    }
  }
  return result;
}

ClusterDensity cluster_density_stats(const Configuration& cfg, int n) {
  ClusterDensity out;
  out.box_volume = BoxGeometry(cfg.dim(), n).size();
  if (!cfg.vertex_active(Point::origin())) {
    check_box(cfg, n);
    out.empty = true;
    return out;
  }
  ClusterGraph cn = origin_box_cluster(cfg, n);
  out.cluster_size = cn.size();
  out.ratio = static_cast<double>(out.cluster_size) / static_cast<double>(out.box_volume);
  return out;
}

ChemicalDistanceStats chemical_distance_stats(const Configuration& cfg, int n, double rho) {
  if (!(rho >= 1.0)) throw ParameterError("chemical_distance_stats: rho must be >= 1");
  if (cfg.m() <= n) throw ParameterError("chemical_distance_stats: requires m > n so paths may leave [-n, n]^d");
  check_box(cfg, n);
  ChemicalDistanceStats out;
  out.inner_radius = static_cast<int>(std::floor(static_cast<double>(n) / rho));
  out.histogram.assign(kStretchBins, 0);
  const int d = cfg.dim();
  const BoxGeometry& full = cfg.box();
  const Point origin = Point::origin();
  if (!cfg.vertex_active(origin)) return out;

  std::vector<int> dist(full.size(), -1);
  std::vector<std::size_t> queue{full.index(origin)};
  dist[queue[0]] = 0;
  for (std::size_t head = 0; head < queue.size(); ++head) {
    Point x = full.point(queue[head]);
    int dx = dist[queue[head]];
    for (int dir = 0; dir < 2 * d; ++dir) {
      if (!cfg.edge_open(x, dir)) continue;
      std::size_t j = full.index(x.shifted(direction_axis(dir), direction_step(dir)));
      if (dist[j] >= 0) continue;
      dist[j] = dx + 1;
      queue.push_back(j);
    }
  }

  ClusterGraph cn = origin_box_cluster(cfg, n);
  BoxGeometry inner(d, out.inner_radius);
  double sum = 0.0;
  for (std::size_t v = 0; v < inner.size(); ++v) {
    Point x = inner.point(v);
    int dx = dist[full.index(x)];
    if (dx < 0) continue;
    if (!cn.contains(x)) out.contained = false;
    if (x == origin) continue;
    double stretch = static_cast<double>(dx) / static_cast<double>(norm_l1(x, d));
    ++out.points;
    sum += stretch;
    out.max_stretch = std::max(out.max_stretch, stretch);
    auto bin = static_cast<std::size_t>(std::max(0.0, (stretch - 1.0) / kStretchBinWidth));
    ++out.histogram[std::min(bin, kStretchBins - 1)];
  }
  out.mean_stretch = out.points ? sum / static_cast<double>(out.points) : 0.0;
  return out;
}

}  // namespace perc
