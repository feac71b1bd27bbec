#include "perc/walk_mc.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "perc/error.hpp"
#include "perc/isoperimetry.hpp"
#include "perc/parallel.hpp"
#include "perc/rng.hpp"
#include "perc/stats.hpp"

namespace perc {

namespace {

constexpr std::size_t kChunk = 256;

void check_times(const std::vector<double>& times) {
  if (times.empty()) throw ParameterError("time grid is empty");
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!(times[i] >= 0) || std::isinf(times[i])) throw ParameterError("times must be finite and >= 0");
    if (i > 0 && !(times[i] > times[i - 1])) throw ParameterError("times must be strictly increasing");
  }
}

double log_poisson(double t, std::size_t k) {
  if (t == 0.0) return k == 0 ? 0.0 : -INFINITY;
  const double kk = static_cast<double>(k);
  return -t + kk * std::log(t) - std::lgamma(kk + 1.0);
}

// Neighbour table: next[id * 2d + dir] is the target id, or id when blocked.
std::vector<int> step_table(const ClusterGraph& host) {
  const int dirs = 2 * host.dim();
  std::vector<int> next(host.size() * static_cast<std::size_t>(dirs));
  for (std::size_t v = 0; v < host.size(); ++v) {
    for (int k = 0; k < dirs; ++k) next[v * static_cast<std::size_t>(dirs) + static_cast<std::size_t>(k)] = static_cast<int>(v);
    for (const auto& nb : host.neighbors(static_cast<int>(v)))
      next[v * static_cast<std::size_t>(dirs) + static_cast<std::size_t>(nb.dir)] = nb.id;
  }
  return next;
}

std::uint64_t walker_key(std::uint64_t experiment_seed, std::uint64_t config_seed, std::size_t walker) {
  return derive_key(derive_key(experiment_seed, config_seed), walker);
}

}  // namespace

double free_leakage_bound(int m, int d, double t) {
  if (m < 1) return 1.0;
  if (t <= 0) return 0.0;
  const double shell = std::pow(2.0 * m + 1.0, d) - std::pow(2.0 * m - 1.0, d);
  double best = poisson_upper_tail(t, static_cast<std::size_t>(m - 1));
  const auto last = static_cast<std::size_t>(t + 20.0 * std::sqrt(t) + 4.0 * m + 50.0);
  for (std::size_t K = static_cast<std::size_t>(m); K <= last; ++K) {
    const double kk = static_cast<double>(K);
    double reach = kk * shell * std::exp(-static_cast<double>(m) * m / (2.0 * kk));
    best = std::min(best, poisson_upper_tail(t, K) + reach);
  }
  return std::min(1.0, best);
}

KernelEstimate simulate_walks(const Configuration& cfg, const ClusterGraph& host, const WalkParams& params) {
  check_times(params.times);
  if (params.walkers == 0) throw ParameterError("simulate_walks: need at least one walker");
  const int origin = host.id_of(Point::origin());
  if (origin < 0) throw ParameterError("simulate_walks: origin is not in the host cluster");
  const int d = host.dim();
  KernelEstimate est;
  est.times = params.times;
  est.walkers = params.walkers;
  est.mode = params.mode;
  const std::size_t T = params.times.size();
  if (params.mode == WalkMode::Free) {
    if (host.box_n() != cfg.m()) throw ParameterError("simulate_walks: Free mode walks on the whole stored box");
    est.leakage_bound = free_leakage_bound(cfg.m(), d, params.times.back());
    if (est.leakage_bound > kLeakTolerance)
      throw ParameterError("simulate_walks: guard violated, stored box m=" + std::to_string(cfg.m()) +
                           " too small for t=" + std::to_string(params.times.back()) +
                           " (leakage bound " + std::to_string(est.leakage_bound) + ")");
  }
  const std::vector<int> next = step_table(host);
  const int dirs = 2 * d;
  std::vector<std::uint8_t> shell(host.size(), 0);
  for (std::size_t v = 0; v < host.size(); ++v) shell[v] = norm_inf(host.vertex(static_cast<int>(v)), d) == cfg.m();

  struct Chunk {
    std::vector<int> position;       // T x walkers in chunk
    std::vector<std::uint8_t> leak;  // T x walkers in chunk
  };
  const std::size_t chunks = (params.walkers + kChunk - 1) / kChunk;
  auto run_chunk = [&](std::size_t c) {
    const std::size_t lo = c * kChunk, hi = std::min(params.walkers, lo + kChunk);
    Chunk out;
    out.position.resize(T * (hi - lo));
    out.leak.resize(T * (hi - lo));
    for (std::size_t w = lo; w < hi; ++w) {
      CounterRng rng(walker_key(params.seed, cfg.seed(), w));
      int x = origin;
      bool leaked = false;
      double prev = 0.0;
      for (std::size_t j = 0; j < T; ++j) {
        const double dt = params.times[j] - prev;
        prev = params.times[j];
        long long steps = 0;
        if (dt > 0) steps = std::poisson_distribution<long long>(dt)(rng);
        for (long long s = 0; s < steps; ++s) {
          x = next[static_cast<std::size_t>(x) * static_cast<std::size_t>(dirs) + rng() % static_cast<std::uint64_t>(dirs)];
          leaked = leaked || shell[static_cast<std::size_t>(x)];
        }
        out.position[j * (hi - lo) + (w - lo)] = x;
        out.leak[j * (hi - lo) + (w - lo)] = leaked;
      }
    }
    return out;
  };
  auto results = parallel_map(chunks, params.workers, run_chunk);

  est.return_estimate.assign(T, 0.0);
  est.stderr_.assign(T, 0.0);
  est.mean_square_displacement.assign(T, 0.0);
  est.leaked.assign(T, 0);
  std::vector<std::vector<std::uint64_t>> occ(T, std::vector<std::uint64_t>(host.size(), 0));
  std::vector<double> norm2(host.size());
  for (std::size_t v = 0; v < host.size(); ++v) norm2[v] = static_cast<double>(norm2_squared(host.vertex(static_cast<int>(v)), d));
  for (std::size_t c = 0; c < chunks; ++c) {
    const std::size_t width = results[c].position.size() / T;
    for (std::size_t j = 0; j < T; ++j)
      for (std::size_t k = 0; k < width; ++k) {
        const auto v = static_cast<std::size_t>(results[c].position[j * width + k]);
        ++occ[j][v];
        est.mean_square_displacement[j] += norm2[v];
        est.leaked[j] += results[c].leak[j * width + k];
      }
  }
  const double W = static_cast<double>(params.walkers);
  for (std::size_t j = 0; j < T; ++j) {
    const double p = static_cast<double>(occ[j][static_cast<std::size_t>(origin)]) / W;
    est.return_estimate[j] = p;
    est.stderr_[j] = std::sqrt(p * (1.0 - p) / W);
    est.mean_square_displacement[j] /= W * d;
    est.sup_estimate.push_back(static_cast<double>(*std::max_element(occ[j].begin(), occ[j].end())) / W);
  }
  if (params.histogram) est.occupancy = std::move(occ);
  return est;
}

std::vector<ExitRow> exit_time_check(const Configuration& cfg, int n, const std::vector<double>& times,
                                     std::size_t walkers, std::uint64_t seed) {
  check_times(times);
  if (n < 1) throw ParameterError("exit_time_check: n must be >= 1");
  if (cfg.m() < n) throw ParameterError("exit_time_check: guard violated, need m >= n");
  if (!cfg.site_open(Point::origin())) throw EmptyCluster("origin site is closed");
  const int d = cfg.dim();
  const double q = 1.0 / (2.0 * d);
  const double nn = n;
  std::vector<ExitRow> rows;
  for (double t : times) {
    ExitRow r;
    r.t = t;
    r.bound = t > 0 ? 2.0 * t * std::pow(nn, d - 1) * std::exp(-nn * nn / (4.0 * t)) + std::exp(-kPoissonRateConstant * t)
                    : 1.0;
    rows.push_back(r);
  }
  const BoxGeometry box(d, n);

  if (box.size() <= kExactExitCap) {
    std::size_t kmax = 0;
    for (double t : times) kmax = std::max(kmax, poisson_truncation(t, kKernelTol));
    std::vector<double> mass(box.size(), 0.0), next(box.size());
    mass[box.index(Point::origin())] = 1.0;
    std::vector<double> absorbed(kmax + 1, 0.0);
    double gone = 0.0;
    for (std::size_t k = 1; k <= kmax; ++k) {
      std::fill(next.begin(), next.end(), 0.0);
      for (std::size_t v = 0; v < box.size(); ++v) {
        if (mass[v] == 0.0) continue;
        const Point x = box.point(v);
        double stay = 1.0;
        for (int dir = 0; dir < 2 * d; ++dir) {
          if (!cfg.edge_open(x, dir)) continue;
          stay -= q;
          const Point y = x.shifted(direction_axis(dir), direction_step(dir));
          if (norm_inf(y, d) == n)
            gone += mass[v] * q;
          else
            next[box.index(y)] += mass[v] * q;
        }
        next[v] += mass[v] * stay;
      }
      std::swap(mass, next);
      absorbed[k] = gone;
    }
    for (auto& r : rows) {
      double value = poisson_upper_tail(r.t, kmax);
      for (std::size_t k = 1; k <= kmax; ++k) value += std::exp(log_poisson(r.t, k)) * absorbed[k];
      r.exact = std::min(1.0, value);
    }
  }

  if (walkers > 0) {
    std::vector<std::size_t> exits(times.size(), 0);
    for (std::size_t w = 0; w < walkers; ++w) {
      CounterRng rng(walker_key(seed, cfg.seed(), w));
      Point x = Point::origin();
      double prev = 0.0;
      std::size_t first = times.size();
      for (std::size_t j = 0; j < times.size() && first == times.size(); ++j) {
        const double dt = times[j] - prev;
        prev = times[j];
        long long steps = dt > 0 ? std::poisson_distribution<long long>(dt)(rng) : 0;
        for (long long s = 0; s < steps; ++s) {
          const int dir = static_cast<int>(rng() % static_cast<std::uint64_t>(2 * d));
          if (cfg.edge_open(x, dir)) x = x.shifted(direction_axis(dir), direction_step(dir));
          if (norm_inf(x, d) == n) {
            first = j;
            break;
          }
        }
      }
      for (std::size_t j = first; j < times.size(); ++j) ++exits[j];
    }
    for (std::size_t j = 0; j < times.size(); ++j) {
      const double p = static_cast<double>(exits[j]) / static_cast<double>(walkers);
      rows[j].empirical = p;
      rows[j].stderr_ = std::sqrt(p * (1.0 - p) / static_cast<double>(walkers));
    }
  }

  for (auto& r : rows) {
    bool ok = true;
    if (!std::isnan(r.exact)) ok = ok && r.exact <= r.bound * (1.0 + kAssertSlack);
    if (!std::isnan(r.empirical)) ok = ok && r.empirical <= r.bound + 4.0 * r.stderr_;
    r.holds = ok;
  }
  return rows;
}

DecayFit fit_decay_exponent(const std::vector<double>& times, const std::vector<double>& values,
                            const std::vector<double>& stderrs, double t_lo, double t_hi) {
  if (times.size() != values.size() || (!stderrs.empty() && stderrs.size() != values.size()))
    throw ParameterError("fit_decay_exponent: size mismatch");
  std::vector<double> x, y, se;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] < t_lo || times[i] > t_hi) continue;
    if (!(times[i] > 0)) throw ParameterError("fit_decay_exponent: window must exclude t = 0");
    if (!(values[i] > 0))
      throw ParameterError("fit_decay_exponent: nonpositive estimate at t=" + std::to_string(times[i]) +
                           "; shrink the window");
    x.push_back(std::log(times[i]));
    y.push_back(std::log(values[i]));
    se.push_back(stderrs.empty() ? 0.0 : stderrs[i]);
  }
  if (x.size() < 5)
    throw ParameterError("fit_decay_exponent: need at least 5 grid points in the window, got " + std::to_string(x.size()));
  const bool weighted = std::all_of(se.begin(), se.end(), [](double s) { return s > 0; });
  std::vector<double> w(x.size(), 1.0);
  if (weighted)
    for (std::size_t i = 0; i < x.size(); ++i) w[i] = std::pow(std::exp(y[i]) / se[i], 2);
  LinearFit lf = weighted_linear_fit(x, y, w);
  DecayFit fit;
  fit.slope = lf.slope;
  fit.intercept = lf.intercept;
  fit.slope_stderr = lf.slope_stderr;
  fit.t_lo = std::exp(*std::min_element(x.begin(), x.end()));
  fit.t_hi = std::exp(*std::max_element(x.begin(), x.end()));
  fit.points = x.size();
  return fit;
}

DecayFit fit_decay_exponent(const KernelEstimate& est, double t_lo, double t_hi) {
  return fit_decay_exponent(est.times, est.return_estimate, est.stderr_, t_lo, t_hi);
}

BoundAssembly theorem_bound_assembly(int d, double t, double b, double beta, double eps) {
  if (d < 2 || d > kMaxDim) throw ParameterError("theorem_bound_assembly: d out of range");
  const double bmax = 1.0 / (4.0 * d + 2.0);
  if (!(b > 0.0 && b < bmax)) throw ParameterError("theorem_bound_assembly: b must lie in (0, 1/(4d+2))");
  if (!(t > 1.0)) throw ParameterError("theorem_bound_assembly: t must exceed 1");
  if (!(beta > 0)) throw ParameterError("theorem_bound_assembly: beta must be positive");
  BoundAssembly r;
  r.d = d;
  r.t = t;
  r.b = b;
  r.beta = beta;
  r.n = std::sqrt(t * std::log(t) / b);
  if (eps <= 0) {
    if (r.n <= std::exp(1.0)) throw ParameterError("theorem_bound_assembly: n too small for eps(n)");
    const double ln = std::log(r.n);
    eps = d + 2.0 * d * std::log(ln) / ln;
  }
  r.eps = eps;
  r.terms[0] = std::pow(r.n, -d);
  r.terms[1] = std::pow(4.0 * eps / (beta * beta), eps / 2.0) * std::pow(r.n, eps - d) * std::pow(t, -eps / 2.0);
  r.terms[2] = 2.0 * t * std::pow(r.n, d - 1) * std::exp(-r.n * r.n / (4.0 * t));
  r.terms[3] = std::exp(-kPoissonRateConstant * t);
  const double scale = std::pow(t, -d / 2.0);
  for (int k = 0; k < 4; ++k) {
    r.ratios[k] = r.terms[k] / scale;
    r.max_ratio = std::max(r.max_ratio, r.ratios[k]);
  }
  return r;
}

bool spans_box(const ClusterGraph& cluster, int n) {
  const int d = cluster.dim();
  unsigned faces = 0;
  for (const Point& x : cluster.vertices())
    for (int a = 0; a < d; ++a) {
      if (x[a] == n) faces |= 1u << (2 * a);
      if (x[a] == -n) faces |= 1u << (2 * a + 1);
    }
  return faces == (1u << (2 * d)) - 1;
}

AveragedKernel averaged_kernel_experiment(const Model& model, double p, int n, const std::vector<double>& times,
                                          std::size_t num_configs, std::uint64_t first_seed, KernelQuantity quantity,
                                          double t_lo, double t_hi, int workers, std::size_t max_tries) {
  check_times(times);
  if (num_configs == 0) throw ParameterError("averaged_kernel_experiment: need at least one configuration");
  if (n < 1) throw ParameterError("averaged_kernel_experiment: n must be >= 1");
  if (max_tries == 0) max_tries = 20 * num_configs;
  AveragedKernel out;
  out.times = times;
  std::vector<std::vector<double>> samples;

  struct Trial {
    bool accepted = false;
    std::vector<double> values;
  };
  auto evaluate = [&](std::uint64_t seed) {
    Trial tr;
    Configuration cfg = sample_configuration(model, n, p, seed);
    if (!cfg.site_open(Point::origin())) return tr;
    ClusterGraph cluster = origin_box_cluster(cfg, n);
    if (!spans_box(cluster, n)) return tr;
    tr.accepted = true;
    WalkMatrix w = build_walk_matrix(cluster, WalkMode::Reflected);
    const int zero = cluster.id_of(Point::origin());
    KernelTable kt = heat_kernel_rows(w, {zero}, times);
    for (std::size_t j = 0; j < times.size(); ++j) {
      if (quantity == KernelQuantity::Return) {
        tr.values.push_back(kt.at(j, 0, static_cast<std::size_t>(zero)));
      } else {
        tr.values.push_back(*std::max_element(kt.values[j].begin(), kt.values[j].end()));
      }
    }
    return tr;
  };

  const std::size_t batch = static_cast<std::size_t>(std::max(1, workers));
  while (out.accepted < num_configs && out.tried < max_tries) {
    const std::size_t count = std::min(batch, max_tries - out.tried);
    const std::uint64_t base = first_seed + out.tried;
    auto trials = parallel_map(count, workers, [&](std::size_t i) { return evaluate(base + i); });
    for (std::size_t i = 0; i < count && out.accepted < num_configs; ++i) {
      ++out.tried;
      if (!trials[i].accepted) continue;
      ++out.accepted;
      out.seeds.push_back(base + i);
      samples.push_back(std::move(trials[i].values));
    }
  }
  if (out.accepted == 0) throw EmptyCluster("averaged_kernel_experiment: no configuration passes the spanning proxy");
  const double k = static_cast<double>(out.accepted);
  for (std::size_t j = 0; j < times.size(); ++j) {
    double mean = 0.0;
    for (const auto& v : samples) mean += v[j];
    mean /= k;
    double ss = 0.0;
    for (const auto& v : samples) ss += (v[j] - mean) * (v[j] - mean);
    out.mean.push_back(mean);
    out.stderr_.push_back(out.accepted > 1 ? std::sqrt(ss / (k - 1.0) / k) : 0.0);
  }
  out.fit = fit_decay_exponent(times, out.mean, out.stderr_, t_lo, t_hi);
  return out;
}

LowerBoundResult averaged_lower_bound_experiment(const Model& model, double p, int n, const std::vector<double>& times,
                                                 std::size_t num_configs, std::uint64_t first_seed, int workers,
                                                 double tolerance) {
  LowerBoundResult r;
  r.tolerance = tolerance;
  r.kernel = averaged_kernel_experiment(model, p, n, times, num_configs, first_seed, KernelQuantity::Return,
                                        *std::upper_bound(times.begin(), times.end(), 0.0), times.back(), workers);
  r.exponent_ok = r.kernel.fit.slope >= -model.d / 2.0 - tolerance;
  return r;
}

}  // namespace perc
