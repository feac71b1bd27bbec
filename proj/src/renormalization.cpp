#include "perc/renormalization.hpp"

#include <algorithm>
#include <array>
#include <numeric>

#include "perc/error.hpp"
#include "perc/parallel.hpp"

namespace perc {

Point BlockSpec::centre() const {
  Point c;
  for (int a = 0; a < d; ++a) c[a] = (2 * N + 1) * index[a];
  return c;
}

int linf_circumradius(const std::vector<Point>& points, int d) {
  if (points.empty()) return 0;
  int r = 0;
  for (int a = 0; a < d; ++a) {
    auto [lo, hi] = std::minmax_element(points.begin(), points.end(),
                                        [a](const Point& x, const Point& y) { return x[a] < y[a]; });
    r = std::max(r, ((*hi)[a] - (*lo)[a] + 1) / 2);
  }
  return r;
}

std::vector<Subbox> crossing_subboxes(int N, int d) {
  const int side = 2 * BlockSpec::outer_half_extent(N) + 1;
  const int stride = std::max(1, (N + 19) / 20);
  const int smallest = N / 10 + 1;
  std::vector<int> sides;
  for (int s = smallest; s < side; s += stride) sides.push_back(s);
  sides.push_back(side);
  std::vector<Subbox> out;
  for (int s : sides) {
    std::vector<int> offsets;
    for (int o = 0; o + s <= side; o += stride) offsets.push_back(o);
    if (offsets.back() != side - s) offsets.push_back(side - s);
    std::vector<std::size_t> digit(static_cast<std::size_t>(d), 0);
    for (;;) {
      Subbox b;
      b.side = s;
      for (int a = 0; a < d; ++a) b.low[a] = offsets[digit[static_cast<std::size_t>(a)]];
      out.push_back(b);
      int a = d - 1;
      while (a >= 0 && ++digit[static_cast<std::size_t>(a)] == offsets.size()) digit[static_cast<std::size_t>(a--)] = 0;
      if (a < 0) break;
    }
  }
  return out;
}

namespace {

struct DisjointSets {
  std::vector<std::size_t> parent;
  explicit DisjointSets(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

bool inside(const BoxGeometry& stored, const BoxGeometry& box) {
  Point lo = box.center(), hi = box.center();
  for (int a = 0; a < box.dim(); ++a) {
    lo[a] -= box.half_extent();
    hi[a] += box.half_extent();
  }
  return stored.contains(lo) && stored.contains(hi);
}

// Local picture of B'_i: activity, open forward edges (bit = axis), labels.
struct OuterView {
  BoxGeometry box;
  int side = 0;
  std::vector<std::uint8_t> active;
  std::vector<std::uint8_t> forward;
  std::vector<std::size_t> stride;

  OuterView(const Configuration& cfg, const BoxGeometry& outer) : box(outer), side(outer.side()) {
    const int d = outer.dim();
    active.assign(outer.size(), 0);
    forward.assign(outer.size(), 0);
    for (int a = 0; a < d; ++a) stride.push_back(outer.stride(a));
    for (std::size_t v = 0; v < outer.size(); ++v) {
      Point x = outer.point(v);
      active[v] = cfg.vertex_active(x) ? 1 : 0;
      for (int a = 0; a < d; ++a) {
        Point y = x.shifted(a, 1);
        if (outer.contains(y) && cfg.edge_open(x, 2 * a)) forward[v] |= static_cast<std::uint8_t>(1u << a);
      }
    }
  }
  int coord(std::size_t v, int a) const {
    return static_cast<int>(v / stride[static_cast<std::size_t>(a)]) % side;
  }
};

// Some component of K inside the cube touches both faces along every axis.
bool crossing(const OuterView& view, const std::vector<std::uint8_t>& in_k, const Subbox& b,
              std::vector<int>& stamp, int mark, std::vector<std::size_t>& stack) {
  const int d = view.box.dim();
  const int s = b.side;
  std::size_t origin = 0;
  for (int a = 0; a < d; ++a) origin += static_cast<std::size_t>(b.low[a]) * view.stride[static_cast<std::size_t>(a)];
  const unsigned all = (1u << (2 * d)) - 1;
  std::size_t cube = 1;
  for (int a = 0; a < d; ++a) cube *= static_cast<std::size_t>(s);
  std::array<int, kMaxDim> rel{};
  for (std::size_t k = 0; k < cube; ++k) {
    std::size_t rem = k, v = origin;
    for (int a = d - 1; a >= 0; --a) {
      rel[static_cast<std::size_t>(a)] = static_cast<int>(rem % static_cast<std::size_t>(s));
      rem /= static_cast<std::size_t>(s);
      v += static_cast<std::size_t>(rel[static_cast<std::size_t>(a)]) * view.stride[static_cast<std::size_t>(a)];
    }
    if (!in_k[v] || stamp[v] == mark) continue;
    unsigned faces = 0;
    stamp[v] = mark;
    stack.assign(1, v);
    while (!stack.empty()) {
      std::size_t u = stack.back();
      stack.pop_back();
      for (int a = 0; a < d; ++a) {
        const int c = view.coord(u, a) - b.low[a];
        if (c == 0) faces |= 1u << (2 * a);
        if (c == s - 1) faces |= 1u << (2 * a + 1);
        const std::size_t st = view.stride[static_cast<std::size_t>(a)];
        if (c + 1 < s && (view.forward[u] >> a & 1u) && in_k[u + st] && stamp[u + st] != mark) {
          stamp[u + st] = mark;
          stack.push_back(u + st);
        }
        if (c > 0 && (view.forward[u - st] >> a & 1u) && in_k[u - st] && stamp[u - st] != mark) {
          stamp[u - st] = mark;
          stack.push_back(u - st);
        }
      }
    }
    if (faces == all) return true;
  }
  return false;
}

}  // namespace

GoodBoxReport good_box(const Configuration& cfg, const BlockSpec& block) {
  if (block.N < 1) throw ParameterError("good_box: N must be >= 1");
  if (block.d != cfg.dim()) throw ParameterError("good_box: block dimension differs from the configuration");
  const BoxGeometry outer = block.outer();
  if (!inside(cfg.box(), outer)) throw ParameterError("good_box: B'_i lies outside the stored box");
  const int d = block.d;
  OuterView view(cfg, outer);
  GoodBoxReport r;

  const BoxGeometry inner = block.inner();
  for (std::size_t v = 0; v < inner.size() && !r.has_edge; ++v) {
    Point x = inner.point(v);
    for (int a = 0; a < d; ++a)
      if (inner.contains(x.shifted(a, 1)) && cfg.edge_open(x, 2 * a)) r.has_edge = true;
  }

  DisjointSets ds(outer.size());
  for (std::size_t v = 0; v < outer.size(); ++v)
    for (int a = 0; a < d; ++a)
      if (view.forward[v] >> a & 1u) ds.unite(v, v + view.stride[static_cast<std::size_t>(a)]);
  // Per-root bounding box in local coordinates.
  std::vector<std::array<int, 2 * kMaxDim>> extent(outer.size());
  std::vector<std::uint8_t> seen(outer.size(), 0);
  for (std::size_t v = 0; v < outer.size(); ++v) {
    if (!view.active[v]) continue;
    std::size_t root = ds.find(v);
    auto& e = extent[root];
    for (int a = 0; a < d; ++a) {
      int c = view.coord(v, a);
      if (!seen[root]) {
        e[static_cast<std::size_t>(2 * a)] = c;
        e[static_cast<std::size_t>(2 * a + 1)] = c;
      } else {
        e[static_cast<std::size_t>(2 * a)] = std::min(e[static_cast<std::size_t>(2 * a)], c);
        e[static_cast<std::size_t>(2 * a + 1)] = std::max(e[static_cast<std::size_t>(2 * a + 1)], c);
      }
    }
    seen[root] = 1;
  }
  std::size_t k_root = outer.size();
  for (std::size_t v = 0; v < outer.size(); ++v) {
    if (!seen[v]) continue;
    int radius = 0;
    for (int a = 0; a < d; ++a)
      radius = std::max(radius, (extent[v][static_cast<std::size_t>(2 * a + 1)] - extent[v][static_cast<std::size_t>(2 * a)] + 1) / 2);
    if (10 * radius > block.N) {
      ++r.big_clusters;
      k_root = v;
    }
  }
  r.unique_big_cluster = r.big_clusters == 1;
  r.long_paths_meet_K = r.big_clusters <= 1;

  if (r.unique_big_cluster) {
    std::vector<std::uint8_t> in_k(outer.size(), 0);
    for (std::size_t v = 0; v < outer.size(); ++v)
      if (view.active[v] && ds.find(v) == k_root) {
        in_k[v] = 1;
        ++r.K_size;
      }
    std::vector<int> stamp(outer.size(), -1);
    std::vector<std::size_t> stack;
    r.K_crossing_all_subboxes = true;
    int mark = 0;
    for (const Subbox& b : crossing_subboxes(block.N, d)) {
      ++r.subboxes_checked;
      if (!crossing(view, in_k, b, stamp, mark++, stack)) {
        r.K_crossing_all_subboxes = false;
        break;
      }
    }
  }
  r.is_good = r.has_edge && r.unique_big_cluster && r.long_paths_meet_K && r.K_crossing_all_subboxes;
  return r;
}

Configuration renormalized_field(const Configuration& cfg, int N, int R, int workers) {
  if (cfg.dim() != 2) throw ParameterError("renormalized_field: the site field is two-dimensional");
  if (N < 1 || R < 0) throw ParameterError("renormalized_field: need N >= 1 and R >= 0");
  const BoxGeometry region(2, R);
  if (region.size() > (std::size_t{1} << 22)) throw ResourceError("renormalized_field: region too large", region.size());
  if (static_cast<long long>(2 * N + 1) * R + BlockSpec::outer_half_extent(N) > cfg.m())
    throw ParameterError("renormalized_field: blocks of the region leave the stored box");
  auto good = parallel_map(region.size(), workers, [&](std::size_t k) {
    return good_box(cfg, BlockSpec{N, 2, region.point(k)}).is_good;
  });
  Configuration field(Model::site2d(), R, cfg.p(), cfg.seed());
  for (std::size_t k = 0; k < region.size(); ++k) field.set_site(region.point(k), good[k]);
  return field;
}

BoxInteraction box_interaction_counts(const ClusterGraph& cn, const SubsetMask& a, const Configuration& cfg, int N) {
  if (N < 1) throw ParameterError("box_interaction_counts: N must be >= 1");
  if (a.host != SubsetMask::Host::Cluster || a.size() != cn.size())
    throw ParameterError("box_interaction_counts: A must be a subset of the cluster");
  const int d = cn.dim();
  const int block = 2 * N + 1;
  auto block_of = [&](const Point& x) {
    Point i;
    for (int k = 0; k < d; ++k) {
      int shifted = x[k] + N;
      i[k] = shifted >= 0 ? shifted / block : -((-shifted + block - 1) / block);
    }
    return i;
  };
  struct Tally {
    std::size_t in_a = 0, in_c = 0;
  };
  std::vector<Point> keys;
  for (std::size_t v = 0; v < cn.size(); ++v) keys.push_back(block_of(cn.vertex(static_cast<int>(v))));
  std::vector<Point> blocks = keys;
  std::sort(blocks.begin(), blocks.end());
  blocks.erase(std::unique(blocks.begin(), blocks.end()), blocks.end());
  std::vector<Tally> tally(blocks.size());
  for (std::size_t v = 0; v < cn.size(); ++v) {
    auto pos = static_cast<std::size_t>(std::lower_bound(blocks.begin(), blocks.end(), keys[v]) - blocks.begin());
    ++tally[pos].in_c;
    if (a.test(v)) ++tally[pos].in_a;
  }
  BoxInteraction out;
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    if (tally[k].in_a == 0) continue;
    const bool filled = tally[k].in_a == tally[k].in_c;
    const bool good = good_box(cfg, BlockSpec{N, d, blocks[k]}).is_good;
    if (filled) {
      ++out.filled;
      out.good_filled += good;
    } else {
      ++out.touched_not_filled;
      out.good_touched_not_filled += good;
    }
  }
  return out;
}

GoodBoxExperiment good_box_probability_experiment(const Model& model, const std::vector<double>& ps,
                                                  const std::vector<int>& Ns, std::size_t blocks,
                                                  std::uint64_t first_seed, int workers) {
  if (blocks == 0) throw ParameterError("good_box_probability_experiment: need at least one block");
  for (double p : ps)
    if (!(p >= 0.0 && p <= 1.0)) throw ParameterError("good_box_probability_experiment: p must lie in [0, 1]");
  for (int N : Ns)
    if (N < 1) throw ParameterError("good_box_probability_experiment: N must be >= 1");
  GoodBoxExperiment out;
  const std::size_t jobs = ps.size() * Ns.size() * blocks;
  out.rows = parallel_map(jobs, workers, [&](std::size_t job) {
    GoodBoxRow row;
    row.p = ps[job / (Ns.size() * blocks)];
    row.N = Ns[(job / blocks) % Ns.size()];
    row.seed = first_seed + job % blocks;
    Configuration cfg = sample_configuration(model, BlockSpec::outer_half_extent(row.N), row.p, row.seed);
    row.report = good_box(cfg, BlockSpec{row.N, model.d, Point::origin()});
    return row;
  });
  for (std::size_t g = 0; g < ps.size() * Ns.size(); ++g) {
    GoodBoxSummary s;
    s.p = ps[g / Ns.size()];
    s.N = Ns[g % Ns.size()];
    s.blocks = blocks;
    for (std::size_t k = 0; k < blocks; ++k) s.good += out.rows[g * blocks + k].report.is_good;
    s.frequency = static_cast<double>(s.good) / static_cast<double>(blocks);
    s.wilson = wilson_interval(s.good, blocks);
    out.summary.push_back(s);
  }
  return out;
}

}  // namespace perc
