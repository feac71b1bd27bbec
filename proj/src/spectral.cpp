#include "perc/spectral.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>
#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "perc/error.hpp"
#include "perc/isoperimetry.hpp"
#include "perc/rng.hpp"
#include "perc/stats.hpp"

namespace perc {

WalkMatrix::WalkMatrix(const ClusterGraph& host, WalkMode mode) : mode_(mode), d_(host.dim()) {
  const std::size_t n = host.size();
  if (n == 0) throw ParameterError("build_walk_matrix: empty host");
  diagonal_.resize(n);
  offsets_.assign(n + 1, 0);
  columns_.reserve(2 * host.edge_count());
  for (std::size_t i = 0; i < n; ++i) {
    auto nbrs = host.neighbors(static_cast<int>(i));
    for (const auto& nb : nbrs) columns_.push_back(nb.id);
    offsets_[i + 1] = columns_.size();
    diagonal_[i] = 1.0 - static_cast<double>(nbrs.size()) * move_probability();
  }
}

void WalkMatrix::apply(const std::vector<double>& x, std::vector<double>& y) const {
  const std::size_t n = size();
  y.resize(n);
  const double q = move_probability();
  for (std::size_t i = 0; i < n; ++i) {
    double acc = diagonal_[i] * x[i];
    for (std::size_t e = offsets_[i]; e < offsets_[i + 1]; ++e) acc += q * x[static_cast<std::size_t>(columns_[e])];
    y[i] = acc;
  }
}

double WalkMatrix::entry(std::size_t i, std::size_t j) const {
  if (i == j) return diagonal_[i];
  for (std::size_t e = offsets_[i]; e < offsets_[i + 1]; ++e)
    if (static_cast<std::size_t>(columns_[e]) == j) return move_probability();
  return 0.0;
}

std::vector<double> WalkMatrix::dense() const {
  const std::size_t n = size();
  std::vector<double> m(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    m[i * n + i] = diagonal_[i];
    for (std::size_t e = offsets_[i]; e < offsets_[i + 1]; ++e)
      m[i * n + static_cast<std::size_t>(columns_[e])] += move_probability();
  }
  return m;
}

WalkMatrix build_walk_matrix(const ClusterGraph& cluster, WalkMode mode) { return WalkMatrix(cluster, mode); }

ClusterGraph free_walk_host(const Configuration& cfg) { return origin_box_cluster(cfg, cfg.m()); }

double full_box_gap(int n, int d) {
  return (1.0 - std::cos(M_PI / (2.0 * n + 1.0))) / static_cast<double>(d);
}

namespace {

using Vec = std::vector<double>;

double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void axpy(double a, const Vec& x, Vec& y) {
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += a * x[i];
}

void remove_mean(Vec& v) {
  double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  for (auto& x : v) x -= mean;
}

double normalize(Vec& v) {
  double nrm = std::sqrt(dot(v, v));
  if (nrm > 0)
    for (auto& x : v) x /= nrm;
  return nrm;
}

// |P v - (v.Pv) v| for unit v, and the Rayleigh quotient.
std::pair<double, double> rayleigh_residual(const WalkMatrix& p, const Vec& v) {
  Vec pv;
  p.apply(v, pv);
  double mu = dot(v, pv);
  axpy(-mu, v, pv);
  return {mu, std::sqrt(dot(pv, pv))};
}

struct LanczosResult {
  double theta = 0.0;
  Vec vector;
  std::size_t iterations = 0;
  bool converged = false;
};

// Largest eigenpair of a symmetric operator on the complement of the
// constant vector. Full reorthogonalization with explicit restarts from the
// current Ritz vector. `accept` decides convergence from a unit Ritz vector.
LanczosResult lanczos_largest(std::size_t n, const std::function<void(const Vec&, Vec&)>& op,
                              const std::function<bool(const Vec&)>& accept, std::size_t max_basis,
                              std::size_t max_restarts) {
  LanczosResult out;
  Vec start(n);
  CounterRng rng(0x1A2C205ull);
  for (auto& x : start) x = rng.uniform() - 0.5;
  remove_mean(start);
  normalize(start);
  const std::size_t basis_cap = std::min(max_basis, n - 1);

  for (std::size_t restart = 0; restart <= max_restarts; ++restart) {
    std::vector<Vec> basis{start};
    std::vector<double> alpha, beta;
    Vec w;
    for (std::size_t j = 0;; ++j) {
      op(basis[j], w);
      remove_mean(w);
      ++out.iterations;
      double a = dot(basis[j], w);
      alpha.push_back(a);
      for (int pass = 0; pass < 2; ++pass)
        for (const auto& q : basis) axpy(-dot(q, w), q, w);
      double b = normalize(w);
      const bool exhausted = b < 1e-13 || basis.size() >= basis_cap;
      const bool check = exhausted || (j + 1) % 10 == 0;
      if (check) {
        const auto k = static_cast<Eigen::Index>(alpha.size());
        Eigen::VectorXd diag = Eigen::Map<Eigen::VectorXd>(alpha.data(), k);
        Eigen::VectorXd sub(std::max<Eigen::Index>(k - 1, 0));
        for (Eigen::Index i = 0; i + 1 < k; ++i) sub[i] = beta[static_cast<std::size_t>(i)];
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> tri;
        tri.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
        const Eigen::Index top = k - 1;
        Vec ritz(n, 0.0);
        for (Eigen::Index i = 0; i < k; ++i) axpy(tri.eigenvectors()(i, top), basis[static_cast<std::size_t>(i)], ritz);
        remove_mean(ritz);
        normalize(ritz);
        out.theta = tri.eigenvalues()[top];
        out.vector = ritz;
        if (accept(ritz)) {
          out.converged = true;
          return out;
        }
        if (exhausted) {
          start = ritz;
          break;
        }
      }
      beta.push_back(b);
      basis.push_back(w);
    }
  }
  return out;
}

SpectralReport dense_gap(const WalkMatrix& p, bool want_vector) {
  const auto n = static_cast<Eigen::Index>(p.size());
  Vec flat = p.dense();
  Eigen::MatrixXd m = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(flat.data(), n, n);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, want_vector ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalError("dense eigensolver failed", INFINITY);
  SpectralReport r;
  r.method = SpectralMethod::Dense;
  r.eigenvalues.resize(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) r.eigenvalues[static_cast<std::size_t>(i)] = es.eigenvalues()[n - 1 - i];
  r.gap = n > 1 ? 1.0 - r.eigenvalues[1] : 0.0;
  if (want_vector && n > 1) {
    r.second_vector.resize(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) r.second_vector[static_cast<std::size_t>(i)] = es.eigenvectors()(i, n - 2);
    r.residual = rayleigh_residual(p, r.second_vector).second;
  }
  return r;
}

// Lanczos on (L + shift I)^{-1}, L = I - P, restricted to mean-zero vectors:
// the top of that spectrum is the bottom of L's, well separated.
SpectralReport iterative_gap(const WalkMatrix& p) {
  const std::size_t n = p.size();
  const double q = p.move_probability();
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(n + p.columns().size());
  const double shift = 1e-9;
  for (std::size_t i = 0; i < n; ++i) {
    trip.emplace_back(static_cast<int>(i), static_cast<int>(i), 1.0 - p.diagonal(i) + shift);
    for (std::size_t e = p.offsets()[i]; e < p.offsets()[i + 1]; ++e)
      trip.emplace_back(static_cast<int>(i), p.columns()[e], -q);
  }
  Eigen::SparseMatrix<double> lap(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  lap.setFromTriplets(trip.begin(), trip.end());
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(lap);

  SpectralReport r;
  r.method = SpectralMethod::Iterative;
  auto accept = [&](const Vec& v) { return rayleigh_residual(p, v).second <= kEigenResidualTol; };

  LanczosResult lr;
  if (solver.info() == Eigen::Success) {
    auto op = [&](const Vec& x, Vec& y) {
      Eigen::Map<const Eigen::VectorXd> xin(x.data(), static_cast<Eigen::Index>(n));
      Eigen::VectorXd sol = solver.solve(xin);
      y.assign(sol.data(), sol.data() + n);
    };
    lr = lanczos_largest(n, op, accept, 120, 20);
  }
  if (!lr.converged) {
    auto op = [&](const Vec& x, Vec& y) { p.apply(x, y); };
    lr = lanczos_largest(n, op, accept, 400, 40);
  }
  auto [mu, res] = rayleigh_residual(p, lr.vector);
  r.iterations = lr.iterations;
  r.residual = res;
  if (!lr.converged) throw NumericalError("spectral_gap: Lanczos did not converge", res);
  r.eigenvalues = {1.0, mu};
  r.gap = 1.0 - mu;
  r.second_vector = std::move(lr.vector);
  return r;
}

}  // namespace

SpectralReport spectral_gap(const WalkMatrix& matrix, SpectralMethod method, bool want_vector, bool host_connected) {
  if (matrix.mode() != WalkMode::Reflected) throw ContractError("spectral_gap: requires a Reflected walk matrix");
  if (!host_connected) throw ContractError("spectral_gap: host cluster is disconnected");
  if (matrix.size() == 1) {
    SpectralReport r;
    r.eigenvalues = {1.0};
    r.gap = 0.0;
    if (want_vector) r.second_vector = {0.0};
    return r;
  }
  if (method == SpectralMethod::Auto) method = matrix.size() <= kDenseThreshold ? SpectralMethod::Dense : SpectralMethod::Iterative;
  if (method == SpectralMethod::Dense) return dense_gap(matrix, want_vector);
  return iterative_gap(matrix);
}

SpectralReport spectral_gap(const ClusterGraph& cluster, SpectralMethod method, bool want_vector) {
  return spectral_gap(build_walk_matrix(cluster, WalkMode::Reflected), method, want_vector, cluster.is_connected());
}

namespace {

void check_times(const std::vector<double>& times, double tol) {
  if (!(tol > 0)) throw ParameterError("kernel tolerance must be positive");
  for (double t : times)
    if (!(t >= 0) || std::isinf(t)) throw ParameterError("kernel times must be finite and >= 0");
}

double poisson_weight(double t, std::size_t k) {
  if (t == 0.0) return k == 0 ? 1.0 : 0.0;
  const double kk = static_cast<double>(k);
  return std::exp(-t + kk * std::log(t) - std::lgamma(kk + 1.0));
}

using Dense = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// sum_k w_k X P^k for the row block X, i.e. rows of exp(t(P - I)).
Dense uniformize_block(const WalkMatrix& p, Dense x, double t, double tol, double& tail) {
  const std::size_t kmax = poisson_truncation(t, tol);
  tail = poisson_upper_tail(t, kmax);
  const auto rows = x.rows();
  const auto n = static_cast<std::size_t>(x.cols());
  Dense acc = Dense::Zero(rows, x.cols());
  Vec in(n), out(n);
  for (std::size_t k = 0; k <= kmax; ++k) {
    double w = poisson_weight(t, k);
    if (w > 0) acc += w * x;
    if (k == kmax) break;
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < n; ++c) in[c] = x(r, static_cast<Eigen::Index>(c));
      p.apply(in, out);
      for (std::size_t c = 0; c < n; ++c) x(r, static_cast<Eigen::Index>(c)) = out[c];
    }
  }
  return acc;
}

constexpr double kSquaringBase = 32.0;

}  // namespace

KernelTable heat_kernel_exact(const WalkMatrix& matrix, const std::vector<double>& times, double tol) {
  check_times(times, tol);
  const std::size_t n = matrix.size();
  if (n > kDenseThreshold) throw CapExceeded("heat_kernel_exact: host too large for full kernels", n, kDenseThreshold);
  KernelTable table;
  table.times = times;
  table.columns = n;
  table.rows.resize(n);
  std::iota(table.rows.begin(), table.rows.end(), 0);
  for (double t : times) {
    int squarings = 0;
    double base = t;
    while (base > kSquaringBase) {
      base /= 2.0;
      ++squarings;
    }
    const double scale = std::ldexp(1.0, squarings);
    double tail = 0.0;
    Dense k = uniformize_block(matrix, Dense::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n)), base,
                               tol / scale, tail);
    for (int s = 0; s < squarings; ++s) k = (k * k).eval();
    table.error_bound = std::max(table.error_bound, tail * scale);
    table.values.emplace_back(k.data(), k.data() + n * n);
  }
  return table;
}

KernelTable heat_kernel_rows(const WalkMatrix& matrix, const std::vector<int>& rows, const std::vector<double>& times,
                             double tol) {
  check_times(times, tol);
  const std::size_t n = matrix.size();
  for (int r : rows)
    if (r < 0 || static_cast<std::size_t>(r) >= n) throw ParameterError("heat_kernel_rows: row out of range");
  KernelTable table;
  table.times = times;
  table.rows = rows;
  table.columns = n;
  table.values.assign(times.size(), Vec(rows.size() * n, 0.0));
  if (times.empty()) return table;

  std::vector<std::size_t> cut(times.size());
  std::size_t kmax = 0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    cut[i] = poisson_truncation(times[i], tol);
    kmax = std::max(kmax, cut[i]);
    table.error_bound = std::max(table.error_bound, poisson_upper_tail(times[i], cut[i]));
  }
  Vec v(n), next(n);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    std::fill(v.begin(), v.end(), 0.0);
    v[static_cast<std::size_t>(rows[r])] = 1.0;
    for (std::size_t k = 0; k <= kmax; ++k) {
      for (std::size_t i = 0; i < times.size(); ++i) {
        if (k > cut[i]) continue;
        double w = poisson_weight(times[i], k);
        if (w == 0.0) continue;
        double* dst = table.values[i].data() + r * n;
        for (std::size_t c = 0; c < n; ++c) dst[c] += w * v[c];
      }
      if (k == kmax) break;
      matrix.apply(v, next);
      std::swap(v, next);
    }
  }
  return table;
}

KernelTable heat_kernel_eigen(const WalkMatrix& matrix, const std::vector<double>& times) {
  const auto n = static_cast<Eigen::Index>(matrix.size());
  if (matrix.size() > kDenseThreshold) throw CapExceeded("heat_kernel_eigen: host too large", matrix.size(), kDenseThreshold);
  Vec flat = matrix.dense();
  Eigen::MatrixXd m = Eigen::Map<Dense>(flat.data(), n, n);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  KernelTable table;
  table.times = times;
  table.columns = matrix.size();
  table.rows.resize(matrix.size());
  std::iota(table.rows.begin(), table.rows.end(), 0);
  for (double t : times) {
    Eigen::VectorXd decay = ((es.eigenvalues().array() - 1.0) * t).exp();
    Dense k = es.eigenvectors() * decay.asDiagonal() * es.eigenvectors().transpose();
    table.values.emplace_back(k.data(), k.data() + matrix.size() * matrix.size());
  }
  return table;
}

std::vector<ReflectedEstimateRow> estim_reflected_check(const ClusterGraph& cluster, int n,
                                                        const std::vector<double>& times, double beta, double eps) {
  if (!(beta > 0) || std::isinf(beta)) throw ParameterError("estim_reflected_check: beta must be positive and finite");
  WalkMatrix p = build_walk_matrix(cluster, WalkMode::Reflected);
  KernelTable table = heat_kernel_exact(p, times);
  const double inv = 1.0 / static_cast<double>(cluster.size());
  const double d = cluster.dim();
  const double k = std::pow(4.0 * eps / (beta * beta), eps / 2.0);
  std::vector<ReflectedEstimateRow> out;
  for (std::size_t i = 0; i < times.size(); ++i) {
    ReflectedEstimateRow row;
    row.t = times[i];
    for (double v : table.values[i]) row.lhs = std::max(row.lhs, std::abs(inv - v));
    row.rhs = row.t > 0 ? k * std::pow(static_cast<double>(n), eps - d) * std::pow(row.t, -eps / 2.0) : INFINITY;
    row.margin = row.lhs > 0 ? row.rhs / row.lhs : INFINITY;
    out.push_back(row);
  }
  return out;
}

CarneResult carne_varopoulos_check(const Configuration& cfg, int k_max, const std::vector<double>& times) {
  if (k_max < 1) throw ParameterError("carne_varopoulos_check: k_max must be >= 1");
  if (cfg.m() < k_max)
    throw ParameterError("carne_varopoulos_check: guard violated, need m >= k_max (m=" + std::to_string(cfg.m()) +
                         ", k_max=" + std::to_string(k_max) + ")");
  const Point origin = Point::origin();
  if (!cfg.site_open(origin)) throw EmptyCluster("origin site is closed");
  const BoxGeometry& box = cfg.box();
  const int d = cfg.dim();
  const double q = 1.0 / (2.0 * d);

  // Restrict to the ball of radius k_max around 0 where the walk can be.
  BoxGeometry ball(d, k_max);
  std::vector<std::vector<int>> moves(ball.size());
  for (std::size_t v = 0; v < ball.size(); ++v) {
    Point x = ball.point(v);
    if (!box.contains(x)) continue;
    for (int dir = 0; dir < 2 * d; ++dir) {
      Point y = x.shifted(direction_axis(dir), direction_step(dir));
      if (ball.contains(y) && cfg.edge_open(x, dir)) moves[v].push_back(static_cast<int>(ball.index(y)));
    }
  }
  std::vector<double> norm2(ball.size());
  for (std::size_t v = 0; v < ball.size(); ++v) norm2[v] = static_cast<double>(norm2_squared(ball.point(v), d));

  CarneResult out;
  out.k_max = k_max;
  out.times = times;
  std::vector<Vec> law;
  law.emplace_back(ball.size(), 0.0);
  law[0][ball.index(origin)] = 1.0;
  for (int k = 1; k <= k_max; ++k) {
    const Vec& prev = law.back();
    Vec next(ball.size(), 0.0);
    for (std::size_t v = 0; v < ball.size(); ++v) {
      if (prev[v] == 0.0) continue;
      next[v] += prev[v] * (1.0 - q * static_cast<double>(moves[v].size()));
      for (int y : moves[v]) next[static_cast<std::size_t>(y)] += prev[v] * q;
    }
    for (std::size_t v = 0; v < ball.size(); ++v) {
      if (next[v] <= 0.0) continue;
      double bound = std::exp(-norm2[v] / (2.0 * k));
      ++out.checked;
      out.worst_margin = std::min(out.worst_margin, bound / next[v]);
      if (next[v] > bound * (1.0 + 1e-12)) ++out.violations;
    }
    law.push_back(std::move(next));
  }

  for (double t : times) {
    if (!(t > 0)) throw ParameterError("carne_varopoulos_check: continuous times must be positive");
    const double tail = poisson_upper_tail(t, static_cast<std::size_t>(k_max));
    const double floor = std::exp(-kPoissonRateConstant * t);
    for (std::size_t v = 0; v < ball.size(); ++v) {
      double value = tail;
      bool reachable = false;
      for (int k = 0; k <= k_max; ++k) {
        double pk = law[static_cast<std::size_t>(k)][v];
        if (pk > 0) reachable = true;
        value += poisson_weight(t, static_cast<std::size_t>(k)) * pk;
      }
      if (!reachable) continue;
      double bound = std::exp(-norm2[v] / (4.0 * t)) + floor;
      out.continuous_worst_margin = std::min(out.continuous_worst_margin, bound / value);
      // value brackets P_t(0, x) within [value - tail, value].
      if (value - tail > bound * (1.0 + 1e-12))
        ++out.continuous_violations;
      else if (value > bound * (1.0 + 1e-12))
        ++out.continuous_inconclusive;
    }
  }
  return out;
}

bool lower_bound_chain_check(const ClusterGraph& cluster, double t, const std::vector<int>& ys) {
  const int zero = cluster.id_of(Point::origin());
  if (zero < 0) throw ParameterError("lower_bound_chain_check: origin is not in the cluster");
  WalkMatrix p = build_walk_matrix(cluster, WalkMode::Reflected);
  std::vector<int> rows{zero};
  for (int y : ys) rows.push_back(y);
  KernelTable half = heat_kernel_rows(p, rows, {t / 2.0});
  KernelTable full = heat_kernel_rows(p, rows, {t});
  const std::size_t n = cluster.size();
  const double tol = 4.0 * std::max(half.error_bound, full.error_bound) + 1e-15;
  const double p00 = full.at(0, 0, static_cast<std::size_t>(zero));
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto y = static_cast<std::size_t>(rows[r]);
    double chain = 0.0;
    for (std::size_t z = 0; z < n; ++z) chain += half.at(0, 0, z) * half.at(0, r, z);
    double direct = full.at(0, 0, y);
    if (std::abs(chain - direct) > kAssertSlack * direct + tol) return false;
    double cs = std::sqrt(p00 * full.at(0, r, y));
    if (direct > cs * (1.0 + kAssertSlack) + tol) return false;
  }
  return true;
}

CheegerInequality cheeger_inequality_check(const ClusterGraph& cluster) {
  if (!cluster.is_connected()) throw ContractError("cheeger_inequality_check: cluster is disconnected");
  if (cluster.size() < 2) throw ContractError("cheeger_inequality_check: needs at least two vertices");
  IsoReport iso = cheeger_constant(cluster, CheegerMethod::Exact);
  CheegerInequality out;
  out.h = iso.value / (2.0 * cluster.dim());
  out.lambda = spectral_gap(cluster).gap;
  out.lower_holds = out.lambda >= out.h * out.h / 2.0 * (1.0 - kAssertSlack);
  out.upper_holds = out.lambda <= 2.0 * out.h * (1.0 + kAssertSlack);
  out.holds = out.lower_holds && out.upper_holds;
  return out;
}

}  // namespace perc
