#include "perc/channels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <set>

#include "perc/error.hpp"
#include "perc/parallel.hpp"

namespace perc {

std::string to_string(ChannelDirection direction) {
  return direction == ChannelDirection::Horizontal ? "horizontal" : "vertical";
}

namespace {

class Dinic {
 public:
  explicit Dinic(int nodes) : head_(static_cast<std::size_t>(nodes), -1) {}

  int add_edge(int from, int to, int cap) {
    edges_.push_back({to, cap, head_[static_cast<std::size_t>(from)]});
    head_[static_cast<std::size_t>(from)] = static_cast<int>(edges_.size()) - 1;
    edges_.push_back({from, 0, head_[static_cast<std::size_t>(to)]});
    head_[static_cast<std::size_t>(to)] = static_cast<int>(edges_.size()) - 1;
    return static_cast<int>(edges_.size()) - 2;
  }

  int max_flow(int s, int t) {
    int flow = 0;
    while (levels(s, t)) {
      iter_ = head_;
      while (int f = push(s, t, std::numeric_limits<int>::max())) flow += f;
    }
    return flow;
  }

  struct Edge {
    int to;
    int cap;
    int next;
  };
  const std::vector<int>& head() const { return head_; }
  const std::vector<Edge>& edges() const { return edges_; }

 private:
  bool levels(int s, int t) {
    level_.assign(head_.size(), -1);
    std::queue<int> q;
    level_[static_cast<std::size_t>(s)] = 0;
    q.push(s);
    while (!q.empty()) {
      int u = q.front();
      q.pop();
      for (int e = head_[static_cast<std::size_t>(u)]; e >= 0; e = edges_[static_cast<std::size_t>(e)].next) {
        const Edge& ed = edges_[static_cast<std::size_t>(e)];
        if (ed.cap > 0 && level_[static_cast<std::size_t>(ed.to)] < 0) {
          level_[static_cast<std::size_t>(ed.to)] = level_[static_cast<std::size_t>(u)] + 1;
          q.push(ed.to);
        }
      }
    }
    return level_[static_cast<std::size_t>(t)] >= 0;
  }

  int push(int u, int t, int limit) {
    if (u == t) return limit;
    for (int& e = iter_[static_cast<std::size_t>(u)]; e >= 0; e = edges_[static_cast<std::size_t>(e)].next) {
      Edge& ed = edges_[static_cast<std::size_t>(e)];
      if (ed.cap <= 0 || level_[static_cast<std::size_t>(ed.to)] != level_[static_cast<std::size_t>(u)] + 1) continue;
      if (int f = push(ed.to, t, std::min(limit, ed.cap))) {
        ed.cap -= f;
        edges_[static_cast<std::size_t>(e ^ 1)].cap += f;
        return f;
      }
    }
    return 0;
  }

  std::vector<int> head_, iter_, level_;
  std::vector<Edge> edges_;
};

enum class Role { None, Start, Inner, End };

// Local frame: u runs along the crossing direction (0..len), w across it.
struct Frame {
  Rect rect;
  ChannelDirection dir;
  int len() const { return dir == ChannelDirection::Horizontal ? rect.width : rect.height; }
  int across() const { return dir == ChannelDirection::Horizontal ? rect.height : rect.width; }
  Point point(int u, int w) const {
    return dir == ChannelDirection::Horizontal ? Point::of({rect.x0 + u, rect.y0 + w})
                                               : Point::of({rect.x0 + w, rect.y0 + u});
  }
  Role role(int u, int w) const {
    if (u == 0) return Role::Start;
    if (u == len()) return Role::End;
    if (w > 0 && w < across()) return Role::Inner;
    return Role::None;
  }
};

void check_rect(const Configuration& cfg, const Rect& rect) {
  if (!cfg.model().is_site()) throw ParameterError("channels require the Site2D model");
  if (rect.width < 2 || rect.height < 2) throw ParameterError("channel rectangle is degenerate (sides must be >= 2)");
  const auto& box = cfg.box();
  if (!box.contains(Point::of({rect.x0, rect.y0})) || !box.contains(Point::of({rect.x0 + rect.width, rect.y0 + rect.height})))
    throw ParameterError("channel rectangle is outside the stored box");
}

}  // namespace

ChannelSet max_disjoint_channels(const Configuration& cfg, const Rect& rect, ChannelDirection direction) {
  check_rect(cfg, rect);
  const Frame f{rect, direction};
  const int L = f.len(), W = f.across();
  const int cells = (L + 1) * (W + 1);
  auto id = [&](int u, int w) { return u * (W + 1) + w; };
  const int source = 2 * cells, sink = 2 * cells + 1;
  Dinic net(2 * cells + 2);
  std::vector<Role> role(static_cast<std::size_t>(cells), Role::None);
  for (int u = 0; u <= L; ++u)
    for (int w = 0; w <= W; ++w)
      if (cfg.site_open(f.point(u, w))) role[static_cast<std::size_t>(id(u, w))] = f.role(u, w);

  for (int u = 0; u <= L; ++u) {
    for (int w = 0; w <= W; ++w) {
      const int v = id(u, w);
      const Role r = role[static_cast<std::size_t>(v)];
      if (r == Role::None) continue;
      net.add_edge(2 * v, 2 * v + 1, 1);
      if (r == Role::Start) net.add_edge(source, 2 * v, 1);
      if (r == Role::End) {
        net.add_edge(2 * v + 1, sink, 1);
        continue;
      }
      const int du[4] = {1, -1, 0, 0}, dw[4] = {0, 0, 1, -1};
      for (int k = 0; k < 4; ++k) {
        int uu = u + du[k], ww = w + dw[k];
        if (uu < 0 || uu > L || ww < 0 || ww > W) continue;
        Role rn = role[static_cast<std::size_t>(id(uu, ww))];
        if (rn == Role::Inner || rn == Role::End) net.add_edge(2 * v + 1, 2 * id(uu, ww), 1);
      }
    }
  }
  const int flow = net.max_flow(source, sink);

  ChannelSet out;
  out.direction = direction;
  out.rect = rect;
  const auto& edges = net.edges();
  const auto& head = net.head();
  // A saturated forward edge has residual 0 and an even index.
  auto next_on_flow = [&](int node) {
    for (int e = head[static_cast<std::size_t>(node)]; e >= 0; e = edges[static_cast<std::size_t>(e)].next)
      if (e % 2 == 0 && edges[static_cast<std::size_t>(e)].cap == 0) return edges[static_cast<std::size_t>(e)].to;
    return -1;
  };
  for (int e = head[static_cast<std::size_t>(source)]; e >= 0; e = edges[static_cast<std::size_t>(e)].next) {
    if (e % 2 != 0 || edges[static_cast<std::size_t>(e)].cap != 0) continue;
    std::vector<Point> path;
    int node = edges[static_cast<std::size_t>(e)].to;
    while (node != sink) {
      const int v = node / 2;
      path.push_back(f.point(v / (W + 1), v % (W + 1)));
      node = next_on_flow(2 * v + 1);
      if (node < 0) throw ContractError("max_disjoint_channels: broken flow decomposition");
    }
    out.paths.push_back(std::move(path));
  }
  if (static_cast<int>(out.paths.size()) != flow) throw ContractError("max_disjoint_channels: flow/path count mismatch");
  return out;
}

bool validate_channels(const Configuration& cfg, const ChannelSet& set) {
  const Frame f{set.rect, set.direction};
  const int L = f.len(), W = f.across();
  std::set<Point> seen;
  for (const auto& path : set.paths) {
    if (path.size() < 2) return false;
    for (std::size_t k = 0; k < path.size(); ++k) {
      const Point& x = path[k];
      if (!cfg.box().contains(x) || !cfg.site_open(x)) return false;
      if (!seen.insert(x).second) return false;
      int u = set.direction == ChannelDirection::Horizontal ? x[0] - set.rect.x0 : x[1] - set.rect.y0;
      int w = set.direction == ChannelDirection::Horizontal ? x[1] - set.rect.y0 : x[0] - set.rect.x0;
      if (u < 0 || u > L || w < 0 || w > W) return false;
      Role want = k == 0 ? Role::Start : (k + 1 == path.size() ? Role::End : Role::Inner);
      if (f.role(u, w) != want) return false;
      if (k > 0 && norm_l1(Point::of({x[0] - path[k - 1][0], x[1] - path[k - 1][1]}), 2) != 1) return false;
    }
  }
  return true;
}

KestenGrid build_kesten_grid(const Configuration& cfg, int n, double C) {
  if (n < 8) throw ParameterError("build_kesten_grid: n must be >= 8");
  if (!(C > 0)) throw ParameterError("build_kesten_grid: C must be positive");
  if (cfg.m() < n) throw ParameterError("build_kesten_grid: box [-n, n]^2 exceeds the stored box");
  KestenGrid grid;
  grid.n = n;
  grid.C = C;
  grid.strip_height = static_cast<int>(std::ceil(C * std::log(static_cast<double>(n))));
  const int rows = 2 * n + 1;
  int h = grid.strip_height;
  if (h > rows) {
    grid.degenerate = true;
    h = rows;
  }
  for (int lo = -n, index = 0; lo <= n; lo += h, ++index) {
    KestenStrip s;
    s.index = index;
    s.lo = lo;
    s.hi = std::min(lo + h - 1, n);
    s.short_strip = s.hi - s.lo + 1 < h;
    const int thickness = s.hi - s.lo;
    if (thickness >= 2) {
      s.horizontal = max_disjoint_channels(cfg, Rect{-n, s.lo, 2 * n, thickness}, ChannelDirection::Horizontal).count();
      s.vertical = max_disjoint_channels(cfg, Rect{s.lo, -n, thickness, 2 * n}, ChannelDirection::Vertical).count();
    }
    grid.total_horizontal += s.horizontal;
    grid.total_vertical += s.vertical;
    grid.strips.push_back(s);
  }
  return grid;
}

ChannelScalingResult channel_scaling_experiment(double p, const std::vector<int>& sizes, std::size_t num_seeds,
                                                std::uint64_t first_seed, int workers) {
  if (!(p >= 0.0 && p <= 1.0)) throw ParameterError("channel_scaling_experiment: p must lie in [0, 1]");
  if (num_seeds == 0) throw ParameterError("channel_scaling_experiment: need at least one seed");
  for (int n : sizes)
    if (n < 2) throw ParameterError("channel_scaling_experiment: sizes must be >= 2");
  ChannelScalingResult out;
  out.p = p;
  out.below_threshold = p <= kSiteCriticalPoint;
  const std::size_t jobs = sizes.size() * num_seeds;
  out.rows = parallel_map(jobs, workers, [&](std::size_t job) {
    ChannelScalingRow row;
    row.n = sizes[job / num_seeds];
    row.seed = first_seed + job % num_seeds;
    Configuration cfg = sample_configuration(Model::site2d(), row.n, p, row.seed);
    row.channels = max_disjoint_channels(cfg, Rect{0, 0, row.n, row.n}, ChannelDirection::Horizontal).count();
    row.ratio = static_cast<double>(row.channels) / row.n;
    return row;
  });
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    ChannelScalingSummary s;
    s.n = sizes[k];
    s.min_ratio = std::numeric_limits<double>::infinity();
    std::size_t zeros = 0;
    for (std::size_t i = 0; i < num_seeds; ++i) {
      const auto& row = out.rows[k * num_seeds + i];
      s.mean_ratio += row.ratio;
      s.min_ratio = std::min(s.min_ratio, row.ratio);
      zeros += row.channels == 0;
    }
    s.mean_ratio /= static_cast<double>(num_seeds);
    s.zero_fraction = static_cast<double>(zeros) / static_cast<double>(num_seeds);
    out.summary.push_back(s);
  }
  return out;
}

}  // namespace perc
