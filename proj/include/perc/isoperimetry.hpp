#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "perc/cluster_graph.hpp"
#include "perc/configuration.hpp"
#include "perc/stats.hpp"

namespace perc {

// eps(n) = d + 2d log log n / log n (natural logs), n >= 3.
double epsilon_of_n(int n, int d);

struct IsoParams {
  double eps = 4.0;     // exponent; +infinity gives the Cheeger quotient #dA / #A
  double alpha = 0.5;   // admissible sets satisfy #A <= (1 - alpha) #C
  int n = 3;            // box size, used for beta_implied
};

enum class IsoRestrict { AllSubsets, ConnectedOnly, ConnectedBothSides };
enum class IsoMethod { ExactAll, ExactConnected, ExactConnectedBothSides, SpectralSweepUpperBound };

std::string to_string(IsoMethod method);

// Minimum of #dA / (#A)^((eps-1)/eps) over the search space, with a minimizer.
struct IsoReport {
  double value = std::numeric_limits<double>::infinity();
  SubsetMask minimizing_set;
  std::size_t boundary = 0;  // #dA* (unordered open edges)
  std::size_t set_size = 0;  // #A*
  IsoMethod method = IsoMethod::ExactAll;
  double eps = 0.0;
  int n = 0;
  double beta_implied = 0.0;  // value * n^(1 - d/eps)
  bool degenerate = false;    // single-vertex cluster: no admissible A
  std::uint64_t sets_examined = 0;
};

inline constexpr std::size_t kExactAllCap = 22;
inline constexpr std::size_t kExactConnectedCap = 40;

// Exact isoperimetric constant. Throws CapExceeded above `cap` (defaults:
// kExactAllCap for AllSubsets, kExactConnectedCap otherwise).
IsoReport iso_constant_exact(const ClusterGraph& cluster, const IsoParams& params, IsoRestrict restrict,
                             std::size_t cap = 0);

enum class CheegerMethod { Exact, SpectralSweep, Auto };

// II_inf = min #dA / #A over #A <= #C/2. Auto: exact up to kExactAllCap
// vertices, spectral sweep (an upper bound) above.
IsoReport cheeger_constant(const ClusterGraph& cluster, CheegerMethod method = CheegerMethod::Auto);

// Sweep over prefixes of the vertex order induced by the second eigenvector
// of the reflected walk; the best admissible prefix (or its complement).
IsoReport spectral_sweep_cheeger(const ClusterGraph& cluster);

struct BarIsoReport {
  double value = std::numeric_limits<double>::infinity();  // bar I_eps
  SubsetMask minimizing_set;
  double restricted_value = std::numeric_limits<double>::infinity();  // inf over #A <= (1-alpha)#C of Q(dA)/pi(A)^gamma
  double alpha = 0.5;
  bool sandwich_holds = false;  // bar I <= alpha^(1/eps-1) J <= alpha^(1/eps-1) bar I
  bool degenerate = false;
};

// bar I_eps with Q(dA) = #dA / (2d #C) and pi uniform on C. Exact, capped
// at kExactAllCap vertices.
BarIsoReport bar_iso_constant(const ClusterGraph& cluster, double eps, double alpha = 0.5);

// Dirichlet form (1/(2d #C)) sum over open edges of (g(x) - g(y))^2.
double dirichlet_form(const ClusterGraph& cluster, const std::vector<double>& g);

struct NashCheck {
  bool holds = true;
  double worst_margin = std::numeric_limits<double>::infinity();  // min RHS/LHS over trials with LHS > 0
  std::size_t trials = 0;
};

// Var(g)^(1+2/eps) <= (8/beta^2) n^(2(1-d/eps)) E(g,g) |g|_1^(4/eps) for
// `trials` random g with i.i.d. uniform values plus the indicators of
// `extra_sets` and their complements.
NashCheck nash_check(const ClusterGraph& cluster, int n, double eps, double beta, std::size_t trials,
                     std::uint64_t seed, const std::vector<SubsetMask>& extra_sets = {});
// Uses beta = report.beta_implied, report.eps and report.minimizing_set.
NashCheck nash_check(const ClusterGraph& cluster, const IsoReport& report, std::size_t trials, std::uint64_t seed);

struct CheegerTailRow {
  std::uint64_t seed = 0;
  double value = std::numeric_limits<double>::infinity();
  IsoMethod method = IsoMethod::ExactAll;
  std::size_t cluster_size = 0;
  bool degenerate = false;
  bool event = false;  // II_inf(C^n) <= beta / n
};

struct CheegerTailResult {
  int n = 0;
  double beta = 0.0;
  std::size_t events = 0;
  std::size_t degenerate = 0;
  double frequency = 0.0;
  Interval wilson;
  std::vector<CheegerTailRow> rows;
};

// Seeds first_seed, first_seed + 1, ...: configurations on [-n, n]^d.
// Degenerate clusters (closed origin or single vertex) count as events.
CheegerTailResult cheeger_tail_experiment(const Model& model, double p, int n, double beta, std::size_t num_seeds,
                                          std::uint64_t first_seed, int workers = 1);

}  // namespace perc
