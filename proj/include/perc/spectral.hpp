#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <vector>

#include "perc/cluster_graph.hpp"
#include "perc/configuration.hpp"

namespace perc {

enum class WalkMode { Free, Reflected };

// Transition matrix of the discrete-time jump chain: from x pick one of the
// 2d lattice neighbours uniformly and move if the edge is open and the
// neighbour is a vertex of the host; otherwise stay.
class WalkMatrix {
 public:
  WalkMatrix() = default;
  WalkMatrix(const ClusterGraph& host, WalkMode mode);

  WalkMode mode() const { return mode_; }
  int dim() const { return d_; }
  std::size_t size() const { return diagonal_.size(); }
  double move_probability() const { return 1.0 / (2.0 * d_); }
  double diagonal(std::size_t i) const { return diagonal_[i]; }
  std::size_t degree(std::size_t i) const { return offsets_[i + 1] - offsets_[i]; }
  const std::vector<std::size_t>& offsets() const { return offsets_; }
  const std::vector<int>& columns() const { return columns_; }

  // y = x P (row vector times P); P is symmetric so this is also P x.
  void apply(const std::vector<double>& x, std::vector<double>& y) const;
  double entry(std::size_t i, std::size_t j) const;
  std::vector<double> dense() const;  // row-major size()^2

 private:
  WalkMode mode_ = WalkMode::Reflected;
  int d_ = 2;
  std::vector<double> diagonal_;
  std::vector<std::size_t> offsets_;
  std::vector<int> columns_;
};

WalkMatrix build_walk_matrix(const ClusterGraph& cluster, WalkMode mode);

// Walk on the open cluster of the origin in the whole stored box, for use
// with a guard annulus (paths starting at 0 cannot feel the box edge early).
ClusterGraph free_walk_host(const Configuration& cfg);

enum class SpectralMethod { Dense, Iterative, Auto };
inline constexpr std::size_t kDenseThreshold = 3000;
inline constexpr double kEigenResidualTol = 1e-8;
inline constexpr double kKernelTol = 1e-12;
inline constexpr double kAssertSlack = 1e-9;

struct SpectralReport {
  std::vector<double> eigenvalues;  // descending; all of them (Dense) or the top two (Iterative)
  double gap = 0.0;                 // 1 - second largest eigenvalue of P
  SpectralMethod method = SpectralMethod::Dense;
  double residual = 0.0;            // |P v - mu v| for the reported second eigenvector
  std::vector<double> second_vector;  // unit eigenvector of the second eigenvalue
  std::size_t iterations = 0;
};

// Spectral gap of a Reflected walk on a connected host. Throws
// ContractError on a disconnected host or a Free matrix, NumericalError when
// the iterative solver misses kEigenResidualTol.
SpectralReport spectral_gap(const WalkMatrix& matrix, SpectralMethod method = SpectralMethod::Auto,
                            bool want_vector = false, bool host_connected = true);
SpectralReport spectral_gap(const ClusterGraph& cluster, SpectralMethod method = SpectralMethod::Auto,
                            bool want_vector = false);

// Heat kernel p_t(x, y) = exp(t (P - I)) for a set of source rows.
struct KernelTable {
  std::vector<double> times;
  std::vector<int> rows;                    // source vertex ids
  std::size_t columns = 0;                  // host size
  std::vector<std::vector<double>> values;  // per time: rows.size() x columns, row-major
  double error_bound = 0.0;

  double at(std::size_t time_index, std::size_t row_index, std::size_t col) const {
    return values[time_index][row_index * columns + col];
  }
};

// Full kernel matrices by uniformization (with scaling and squaring for
// large t). Requires size() <= kDenseThreshold.
KernelTable heat_kernel_exact(const WalkMatrix& matrix, const std::vector<double>& times, double tol = kKernelTol);
// Selected rows by uniformization (matrix-vector products only).
KernelTable heat_kernel_rows(const WalkMatrix& matrix, const std::vector<int>& rows, const std::vector<double>& times,
                             double tol = kKernelTol);
// Independent route through the dense eigen-decomposition.
KernelTable heat_kernel_eigen(const WalkMatrix& matrix, const std::vector<double>& times);

struct ReflectedEstimateRow {
  double t = 0.0;
  double lhs = 0.0;  // max_{x,y} |1/#C - p_t(x,y)|
  double rhs = 0.0;  // (4 eps / beta^2)^(eps/2) n^(eps-d) t^(-eps/2)
  double margin = 0.0;  // rhs / lhs
};
std::vector<ReflectedEstimateRow> estim_reflected_check(const ClusterGraph& cluster, int n,
                                                        const std::vector<double>& times, double beta, double eps);

struct CarneResult {
  int k_max = 0;
  double worst_margin = std::numeric_limits<double>::infinity();  // min bound / P over (k, x) with P > 0
  std::size_t violations = 0;
  std::size_t checked = 0;
  // Continuous-time version with c = log 4 - 1.
  std::vector<double> times;
  double continuous_worst_margin = std::numeric_limits<double>::infinity();
  std::size_t continuous_violations = 0;
  std::size_t continuous_inconclusive = 0;  // only the truncated tail mass could exceed the bound
};

inline const double kPoissonRateConstant = 0.38629436111989063;  // log 4 - 1

// Exact k-step laws of the walk from the origin on the open structure of the
// stored box; checks P_0[Y_k = x] <= exp(-|x|_2^2 / 2k) (1 + 1e-12) for all
// k <= k_max. Requires m >= k_max (guard). Continuous check at `times`
// uses the Poisson mixture of the same laws plus its truncation mass.
CarneResult carne_varopoulos_check(const Configuration& cfg, int k_max, const std::vector<double>& times = {});

// Chapman-Kolmogorov at t/2 and the Cauchy-Schwarz bound
// p_t(0,y) <= sqrt(p_t(0,0) p_t(y,y)) on the host's dense kernel.
bool lower_bound_chain_check(const ClusterGraph& cluster, double t, const std::vector<int>& ys);

struct CheegerInequality {
  double h = 0.0;        // II_inf / 2d
  double lambda = 0.0;   // spectral gap
  bool lower_holds = false;  // lambda >= h^2 / 2
  bool upper_holds = false;  // lambda <= 2h
  bool holds = false;
};
CheegerInequality cheeger_inequality_check(const ClusterGraph& cluster);

// Closed form for the full box [-n, n]^d: (1/d)(1 - cos(pi/(2n+1))).
double full_box_gap(int n, int d);

}  // namespace perc
