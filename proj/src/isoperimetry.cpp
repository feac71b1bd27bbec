#include "perc/isoperimetry.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

#include "perc/error.hpp"
#include "perc/parallel.hpp"
#include "perc/rng.hpp"
#include "perc/spectral.hpp"

namespace perc {

namespace {
constexpr std::size_t kSweepDenseLimit = 300;
}  // namespace

double epsilon_of_n(int n, int d) {
  if (n < 3) throw ParameterError("epsilon_of_n requires n >= 3");
  if (d < 1) throw ParameterError("epsilon_of_n requires d >= 1");
  const double ln = std::log(static_cast<double>(n));
  return d + 2.0 * d * std::log(ln) / ln;
}

std::string to_string(IsoMethod method) {
  switch (method) {
    case IsoMethod::ExactAll: return "ExactAll";
    case IsoMethod::ExactConnected: return "ExactConnected";
    case IsoMethod::ExactConnectedBothSides: return "ExactConnectedBothSides";
    case IsoMethod::SpectralSweepUpperBound: return "SpectralSweepUpperBound";
  }
  return "?";
}

namespace {

// Cluster adjacency as 64-bit neighbour masks.
struct BitGraph {
  int size = 0;
  std::vector<std::uint64_t> nbr;
  std::vector<int> deg;

  explicit BitGraph(const ClusterGraph& g) : size(static_cast<int>(g.size())), nbr(g.size(), 0), deg(g.size(), 0) {
    for (int i = 0; i < size; ++i) {
      for (const auto& nb : g.neighbors(i)) nbr[static_cast<std::size_t>(i)] |= std::uint64_t{1} << nb.id;
      deg[static_cast<std::size_t>(i)] = g.degree(i);
    }
  }

  std::uint64_t full() const { return size == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << size) - 1; }

  // Change of #dS when v (not in S) joins S.
  int gain(int v, std::uint64_t s) const {
    return deg[static_cast<std::size_t>(v)] - 2 * std::popcount(nbr[static_cast<std::size_t>(v)] & s);
  }

  bool connected(std::uint64_t set) const {
    if (set == 0) return true;
    std::uint64_t reached = set & (~set + 1);
    std::uint64_t frontier = reached;
    while (frontier) {
      std::uint64_t next = 0;
      for (std::uint64_t f = frontier; f; f &= f - 1) next |= nbr[static_cast<std::size_t>(std::countr_zero(f))];
      next &= set & ~reached;
      reached |= next;
      frontier = next;
    }
    return reached == set;
  }
};

// Incumbent with the tie rule: smaller value, then smaller #A, then smaller mask.
struct Incumbent {
  double value = std::numeric_limits<double>::infinity();
  std::uint64_t mask = 0;
  std::size_t boundary = 0;
  std::size_t size = 0;
  std::uint64_t examined = 0;

  void offer(double v, std::uint64_t m, std::size_t b, std::size_t k) {
    ++examined;
    if (std::isinf(value)) {
      set(v, m, b, k);
      return;
    }
    const double tol = 1e-12 * std::max(1.0, std::abs(value));
    if (v < value - tol) {
      set(v, m, b, k);
    } else if (v <= value + tol) {
      if (k < size || (k == size && m < mask)) set(v, m, b, k);
    }
  }
  void set(double v, std::uint64_t m, std::size_t b, std::size_t k) {
    value = v;
    mask = m;
    boundary = b;
    size = k;
  }
};

std::size_t admissible_size(std::size_t total, double alpha) {
  return static_cast<std::size_t>(std::floor((1.0 - alpha) * static_cast<double>(total) + 1e-9));
}

std::vector<double> size_powers(std::size_t total, double eps) {
  const double gamma = std::isinf(eps) ? 1.0 : (eps - 1.0) / eps;
  std::vector<double> pw(total + 1, 0.0);
  for (std::size_t k = 1; k <= total; ++k) pw[k] = std::pow(static_cast<double>(k), gamma);
  return pw;
}

void enumerate_all(const BitGraph& g, std::size_t kmax, const std::vector<double>& pw, Incumbent& best) {
  const std::uint64_t limit = std::uint64_t{1} << g.size;
  std::uint64_t mask = 0;
  long long boundary = 0;
  std::size_t k = 0;
  for (std::uint64_t i = 1; i < limit; ++i) {
    int v = std::countr_zero(i);
    std::uint64_t bit = std::uint64_t{1} << v;
    if (mask & bit) {
      mask ^= bit;
      boundary -= g.gain(v, mask);
      --k;
    } else {
      boundary += g.gain(v, mask);
      mask |= bit;
      ++k;
    }
    if (k >= 1 && k <= kmax) best.offer(static_cast<double>(boundary) / pw[k], mask, static_cast<std::size_t>(boundary), k);
  }
}

// Each connected set is produced once, from its smallest vertex: extend S by
// candidates P (neighbours of S not yet excluded), excluding each candidate
// after its branch.
class ConnectedEnumerator {
 public:
  ConnectedEnumerator(const BitGraph& g, std::size_t kmax, const std::vector<double>& pw, bool both_sides,
                      Incumbent& best)
      : g_(g), kmax_(kmax), pw_(pw), both_sides_(both_sides), best_(best) {
    // Any admissible set has at least one boundary edge in a connected host.
    floor_ = kmax_ > 0 ? 1.0 / pw_[kmax_] : 0.0;
  }

  void run() {
    for (int v = 0; v < g_.size && !done(); ++v) {
      std::uint64_t s = std::uint64_t{1} << v;
      std::uint64_t below = s - 1;
      recurse(s, g_.nbr[static_cast<std::size_t>(v)] & ~below & ~s, below, g_.deg[static_cast<std::size_t>(v)], 1);
    }
  }

 private:
  bool done() const { return best_.value <= floor_ * (1.0 - 1e-12); }

  void recurse(std::uint64_t s, std::uint64_t cand, std::uint64_t excl, long long boundary, std::size_t k) {
    if (!both_sides_ || g_.connected(g_.full() & ~s))
      best_.offer(static_cast<double>(boundary) / pw_[k], s, static_cast<std::size_t>(boundary), k);
    if (k == kmax_ || done()) return;
    while (cand) {
      int u = std::countr_zero(cand);
      std::uint64_t ubit = std::uint64_t{1} << u;
      cand &= ~ubit;
      std::uint64_t next = (cand | g_.nbr[static_cast<std::size_t>(u)]) & ~s & ~ubit & ~excl;
      recurse(s | ubit, next, excl, boundary + g_.gain(u, s), k + 1);
      excl |= ubit;
      if (done()) return;
    }
  }

  const BitGraph& g_;
  std::size_t kmax_;
  const std::vector<double>& pw_;
  bool both_sides_;
  Incumbent& best_;
  double floor_ = 0.0;
};

IsoReport make_report(const ClusterGraph& cluster, const Incumbent& best, IsoMethod method, double eps, int n) {
  IsoReport r;
  r.method = method;
  r.eps = eps;
  r.n = n;
  r.value = best.value;
  r.boundary = best.boundary;
  r.set_size = best.size;
  r.sets_examined = best.examined;
  r.minimizing_set = SubsetMask::from_bits(cluster, best.mask);
  const double exponent = std::isinf(eps) ? 1.0 : 1.0 - cluster.dim() / eps;
  r.beta_implied = r.value * std::pow(static_cast<double>(n), exponent);
  return r;
}

IsoReport degenerate_report(const ClusterGraph& cluster, IsoMethod method, double eps, int n) {
  IsoReport r;
  r.method = method;
  r.eps = eps;
  r.n = n;
  r.degenerate = true;
  r.beta_implied = std::numeric_limits<double>::infinity();
  r.minimizing_set = SubsetMask::empty_of(cluster);
  return r;
}

void check_params(const IsoParams& p, int d) {
  if (!(p.eps > 1.0)) throw ParameterError("isoperimetric exponent eps must exceed 1");
  if (!(p.alpha > 0.0 && p.alpha <= 0.5)) throw ParameterError("alpha must lie in (0, 1/2]");
  (void)d;
}

}  // namespace

IsoReport iso_constant_exact(const ClusterGraph& cluster, const IsoParams& params, IsoRestrict restrict,
                             std::size_t cap) {
  check_params(params, cluster.dim());
  const std::size_t total = cluster.size();
  if (cap == 0) cap = restrict == IsoRestrict::AllSubsets ? kExactAllCap : kExactConnectedCap;
  cap = std::min<std::size_t>(cap, 63);
  const IsoMethod method = restrict == IsoRestrict::AllSubsets      ? IsoMethod::ExactAll
                           : restrict == IsoRestrict::ConnectedOnly ? IsoMethod::ExactConnected
                                                                    : IsoMethod::ExactConnectedBothSides;
  if (total > cap)
    throw CapExceeded("cluster of " + std::to_string(total) + " vertices exceeds exact cap " + std::to_string(cap),
                      total, cap);
  if (!cluster.is_connected()) throw ContractError("iso_constant_exact: cluster is not connected");
  const std::size_t kmax = admissible_size(total, params.alpha);
  if (total <= 1 || kmax == 0) return degenerate_report(cluster, method, params.eps, params.n);

  BitGraph g(cluster);
  auto pw = size_powers(total, params.eps);
  Incumbent best;
  if (restrict == IsoRestrict::AllSubsets) {
    enumerate_all(g, kmax, pw, best);
  } else {
    ConnectedEnumerator(g, kmax, pw, restrict == IsoRestrict::ConnectedBothSides, best).run();
  }
  return make_report(cluster, best, method, params.eps, params.n);
}

IsoReport spectral_sweep_cheeger(const ClusterGraph& cluster) {
  const std::size_t total = cluster.size();
  const double inf = std::numeric_limits<double>::infinity();
  if (total <= 1) return degenerate_report(cluster, IsoMethod::SpectralSweepUpperBound, inf, cluster.box_n());
  // Only the ordering matters here, so the Lanczos vector is good enough
  // well below the dense threshold.
  const auto method = total > kSweepDenseLimit ? SpectralMethod::Iterative : SpectralMethod::Dense;
  SpectralReport spec = spectral_gap(cluster, method, true);
  std::vector<int> order(total);
  std::iota(order.begin(), order.end(), 0);
  const auto& v = spec.second_vector;
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return v[static_cast<std::size_t>(a)] < v[static_cast<std::size_t>(b)]; });

  std::vector<std::uint8_t> in_prefix(total, 0);
  long long boundary = 0;
  double best = inf;
  std::size_t best_k = 0, best_b = 0;
  for (std::size_t k = 1; k < total; ++k) {
    int u = order[k - 1];
    int inside = 0;
    for (const auto& nb : cluster.neighbors(u)) inside += in_prefix[static_cast<std::size_t>(nb.id)];
    boundary += cluster.degree(u) - 2 * inside;
    in_prefix[static_cast<std::size_t>(u)] = 1;
    std::size_t small = std::min(k, total - k);
    double value = static_cast<double>(boundary) / static_cast<double>(small);
    if (value < best) {
      best = value;
      best_k = k;
      best_b = static_cast<std::size_t>(boundary);
    }
  }
  IsoReport r;
  r.method = IsoMethod::SpectralSweepUpperBound;
  r.eps = inf;
  r.n = cluster.box_n();
  r.value = best;
  r.boundary = best_b;
  r.sets_examined = total - 1;
  r.minimizing_set = SubsetMask::empty_of(cluster);
  bool prefix_side = best_k <= total - best_k;
  for (std::size_t i = 0; i < total; ++i) {
    bool in = i < best_k;
    r.minimizing_set.set(static_cast<std::size_t>(order[i]), in == prefix_side);
  }
  r.set_size = r.minimizing_set.count();
  r.beta_implied = r.value * r.n;
  return r;
}

IsoReport cheeger_constant(const ClusterGraph& cluster, CheegerMethod method) {
  IsoParams params;
  params.eps = std::numeric_limits<double>::infinity();
  params.alpha = 0.5;
  params.n = cluster.box_n();
  if (method == CheegerMethod::SpectralSweep) return spectral_sweep_cheeger(cluster);
  if (method == CheegerMethod::Auto && cluster.size() > kExactAllCap) return spectral_sweep_cheeger(cluster);
  return iso_constant_exact(cluster, params, IsoRestrict::AllSubsets);
}

BarIsoReport bar_iso_constant(const ClusterGraph& cluster, double eps, double alpha) {
  if (!(eps > 1.0)) throw ParameterError("eps must exceed 1");
  if (!(alpha > 0.0 && alpha <= 0.5)) throw ParameterError("alpha must lie in (0, 1/2]");
  const std::size_t total = cluster.size();
  if (total > kExactAllCap)
    throw CapExceeded("bar_iso_constant: cluster exceeds exact cap", total, kExactAllCap);
  if (!cluster.is_connected()) throw ContractError("bar_iso_constant: cluster is not connected");
  BarIsoReport out;
  out.alpha = alpha;
  out.minimizing_set = SubsetMask::empty_of(cluster);
  if (total <= 1) {
    out.degenerate = true;
    return out;
  }
  const double gamma = (eps - 1.0) / eps;
  const double nn = static_cast<double>(total);
  const double qscale = 1.0 / (2.0 * cluster.dim() * nn);
  const std::size_t kmax = admissible_size(total, alpha);
  BitGraph g(cluster);
  Incumbent bar, restricted;
  const std::uint64_t limit = std::uint64_t{1} << total;
  std::uint64_t mask = 0;
  long long boundary = 0;
  std::size_t k = 0;
  for (std::uint64_t i = 1; i < limit; ++i) {
    int v = std::countr_zero(i);
    std::uint64_t bit = std::uint64_t{1} << v;
    if (mask & bit) {
      mask ^= bit;
      boundary -= g.gain(v, mask);
      --k;
    } else {
      boundary += g.gain(v, mask);
      mask |= bit;
      ++k;
    }
    if (k == 0 || k == total) continue;
    const double q = qscale * static_cast<double>(boundary);
    const double pa = static_cast<double>(k) / nn;
    bar.offer(q / std::pow(pa * (1.0 - pa), gamma), mask, static_cast<std::size_t>(boundary), k);
    if (k <= kmax) restricted.offer(q / std::pow(pa, gamma), mask, static_cast<std::size_t>(boundary), k);
  }
  out.value = bar.value;
  out.minimizing_set = SubsetMask::from_bits(cluster, bar.mask);
  out.restricted_value = restricted.value;
  const double factor = std::pow(alpha, 1.0 / eps - 1.0);
  const double slack = 1.0 + kAssertSlack;
  out.sandwich_holds = out.value <= factor * out.restricted_value * slack &&
                       factor * out.restricted_value <= factor * out.value * slack;
  return out;
}

double dirichlet_form(const ClusterGraph& cluster, const std::vector<double>& g) {
  if (g.size() != cluster.size()) throw ParameterError("dirichlet_form: function size mismatch");
  double sum = 0.0;
  for (const auto& [i, j] : cluster.edges()) {
    double diff = g[static_cast<std::size_t>(i)] - g[static_cast<std::size_t>(j)];
    sum += diff * diff;
  }
  return sum / (2.0 * cluster.dim() * static_cast<double>(cluster.size()));
}

NashCheck nash_check(const ClusterGraph& cluster, int n, double eps, double beta, std::size_t trials,
                     std::uint64_t seed, const std::vector<SubsetMask>& extra_sets) {
  if (!(beta > 0.0) || std::isinf(beta)) throw ParameterError("nash_check: beta must be positive and finite");
  if (!(eps > 0.0)) throw ParameterError("nash_check: eps must be positive");
  const std::size_t total = cluster.size();
  const double nn = static_cast<double>(total);
  const int d = cluster.dim();
  const double constant = 8.0 / (beta * beta) * std::pow(static_cast<double>(n), 2.0 * (1.0 - d / eps));
  NashCheck out;

  auto evaluate = [&](const std::vector<double>& g) {
    double mean = std::accumulate(g.begin(), g.end(), 0.0) / nn;
    double var = 0.0, l1 = 0.0;
    for (double x : g) {
      var += (x - mean) * (x - mean);
      l1 += std::abs(x);
    }
    var /= nn;
    l1 /= nn;
    ++out.trials;
    double lhs = std::pow(var, 1.0 + 2.0 / eps);
    if (!(lhs > 0.0)) return;
    double rhs = constant * dirichlet_form(cluster, g) * std::pow(l1, 4.0 / eps);
    out.worst_margin = std::min(out.worst_margin, rhs / lhs);
    if (rhs < lhs * (1.0 - kAssertSlack)) out.holds = false;
  };

  CounterRng rng(seed);
  std::vector<double> g(total);
  for (std::size_t t = 0; t < trials; ++t) {
    for (auto& x : g) x = rng.uniform();
    evaluate(g);
  }
  for (const auto& set : extra_sets) {
    if (set.size() != total) throw ParameterError("nash_check: extra set does not match the cluster");
    for (std::size_t i = 0; i < total; ++i) g[i] = set.test(i) ? 1.0 : 0.0;
    evaluate(g);
    for (auto& x : g) x = 1.0 - x;
    evaluate(g);
  }
  return out;
}

NashCheck nash_check(const ClusterGraph& cluster, const IsoReport& report, std::size_t trials, std::uint64_t seed) {
  if (report.degenerate) return NashCheck{};
  return nash_check(cluster, report.n, report.eps, report.beta_implied, trials, seed, {report.minimizing_set});
}

CheegerTailResult cheeger_tail_experiment(const Model& model, double p, int n, double beta, std::size_t num_seeds,
                                          std::uint64_t first_seed, int workers) {
  if (!(beta > 0.0)) throw ParameterError("cheeger_tail_experiment: beta must be positive");
  CheegerTailResult out;
  out.n = n;
  out.beta = beta;
  const double threshold = beta / n;
  out.rows = parallel_map(num_seeds, workers, [&](std::size_t i) {
    CheegerTailRow row;
    row.seed = first_seed + i;
    Configuration cfg = sample_configuration(model, n, p, row.seed);
    try {
      ClusterGraph cn = origin_box_cluster(cfg, n);
      row.cluster_size = cn.size();
      if (cn.size() <= 1) {
        row.degenerate = true;
      } else {
        IsoReport r = cheeger_constant(cn, CheegerMethod::Auto);
        row.value = r.value;
        row.method = r.method;
      }
    } catch (const EmptyCluster&) {
      row.degenerate = true;
    }
    row.event = row.degenerate || row.value <= threshold;
    return row;
  });
  for (const auto& row : out.rows) {
    out.events += row.event ? 1 : 0;
    out.degenerate += row.degenerate ? 1 : 0;
  }
  out.frequency = num_seeds ? static_cast<double>(out.events) / static_cast<double>(num_seeds) : 0.0;
  out.wilson = wilson_interval(out.events, num_seeds);
  return out;
}

}  // namespace perc
