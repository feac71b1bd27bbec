#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <vector>

#include "perc/cluster_graph.hpp"
#include "perc/configuration.hpp"
#include "perc/spectral.hpp"

namespace perc {

struct WalkParams {
  WalkMode mode = WalkMode::Reflected;
  int n = 0;                  // reflecting box [-n, n]^d (Reflected only)
  std::vector<double> times;  // increasing, >= 0
  std::size_t walkers = 1000;
  std::uint64_t seed = 0;
  bool histogram = false;     // keep per-vertex occupancy counts
  int workers = 1;
};

struct KernelEstimate {
  std::vector<double> times;
  std::vector<double> return_estimate;  // fraction of walkers at the origin
  std::vector<double> stderr_;          // binomial standard error
  std::vector<double> mean_square_displacement;  // E|X_t|_2^2 / d
  std::vector<double> sup_estimate;     // max_y fraction at y; biased upward (needs histogram)
  std::vector<std::vector<std::uint64_t>> occupancy;  // per time, per host vertex id
  std::vector<std::size_t> leaked;      // Free: walkers that reached the stored-box shell by t
  double leakage_bound = 0.0;           // Free: a priori bound on P[reach the shell by t_max]
  std::size_t walkers = 0;
  WalkMode mode = WalkMode::Reflected;
};

inline constexpr double kLeakTolerance = 1e-3;

// Bound on the probability that the free walk from 0 reaches |x|_inf = m by
// time t, via Carne-Varopoulos on each shell point.
double free_leakage_bound(int m, int d, double t);

// Reflected: walk on `host` (normally C^n). Free: walk on the origin's open
// cluster in the whole stored box; throws ParameterError when
// free_leakage_bound(m, d, t_max) exceeds kLeakTolerance.
KernelEstimate simulate_walks(const Configuration& cfg, const ClusterGraph& host, const WalkParams& params);

struct ExitRow {
  double t = 0.0;
  double exact = std::numeric_limits<double>::quiet_NaN();  // P[tau^n <= t], upper end of its truncation bracket
  double empirical = std::numeric_limits<double>::quiet_NaN();
  double stderr_ = 0.0;
  double bound = 0.0;  // 2t n^(d-1) exp(-n^2/4t) + exp(-ct)
  bool holds = false;
};

inline constexpr std::size_t kExactExitCap = 1u << 20;

// tau^n = first time the free walk from 0 reaches |x|_inf = n. Exact by
// uniformization of the absorbed chain when (2n+1)^d <= kExactExitCap; Monte
// Carlo with `walkers` walkers otherwise (or in addition when walkers > 0).
std::vector<ExitRow> exit_time_check(const Configuration& cfg, int n, const std::vector<double>& times,
                                     std::size_t walkers = 0, std::uint64_t seed = 0);

struct DecayFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
  double t_lo = 0.0;
  double t_hi = 0.0;
  std::size_t points = 0;
};

// Weighted least squares of log value on log t over the grid points in
// [t_lo, t_hi]; weights (value/stderr)^2 when every stderr is positive,
// uniform otherwise. Needs >= 5 points, all positive.
DecayFit fit_decay_exponent(const std::vector<double>& times, const std::vector<double>& values,
                            const std::vector<double>& stderrs, double t_lo, double t_hi);
DecayFit fit_decay_exponent(const KernelEstimate& est, double t_lo, double t_hi);

struct BoundAssembly {
  int d = 2;
  double t = 0.0;
  double b = 0.0;
  double n = 0.0;    // from t log t = b n^2
  double eps = 0.0;  // eps(n) unless overridden
  double beta = 0.0;
  double terms[4] = {0, 0, 0, 0};   // n^-d, Nash term, exit term, exp(-ct)
  double ratios[4] = {0, 0, 0, 0};  // term / t^(-d/2)
  double max_ratio = 0.0;
};

// eps <= 0 selects eps(n).
BoundAssembly theorem_bound_assembly(int d, double t, double b, double beta, double eps = 0.0);

// Cluster C^n touches all 2d faces of [-n, n]^d.
bool spans_box(const ClusterGraph& cluster, int n);

enum class KernelQuantity { Return, Sup };

struct AveragedKernel {
  std::vector<double> times;
  std::vector<double> mean;      // average over accepted configurations
  std::vector<double> stderr_;   // standard error of that mean
  std::size_t accepted = 0;
  std::size_t tried = 0;
  DecayFit fit;
  std::vector<std::uint64_t> seeds;  // accepted seeds
};

// Exact reflected kernels p_t(0, .) on C^n for seeds first_seed, first_seed+1,
// ... until num_configs configurations pass the spanning proxy (at most
// max_tries seeds). Averages p_t(0,0) or sup_y p_t(0,y) and fits the decay
// over [t_lo, t_hi]. Throws EmptyCluster when no configuration passes.
AveragedKernel averaged_kernel_experiment(const Model& model, double p, int n, const std::vector<double>& times,
                                          std::size_t num_configs, std::uint64_t first_seed, KernelQuantity quantity,
                                          double t_lo, double t_hi, int workers = 1, std::size_t max_tries = 0);

struct LowerBoundResult {
  AveragedKernel kernel;
  double tolerance = 0.2;
  bool exponent_ok = false;  // fitted slope >= -d/2 - tolerance
};

LowerBoundResult averaged_lower_bound_experiment(const Model& model, double p, int n, const std::vector<double>& times,
                                                 std::size_t num_configs, std::uint64_t first_seed, int workers = 1,
                                                 double tolerance = 0.2);

}  // namespace perc
