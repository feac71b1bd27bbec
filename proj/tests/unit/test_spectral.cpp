#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "oracles.hpp"
#include "perc/cluster_graph.hpp"
#include "perc/error.hpp"
#include "perc/spectral.hpp"

using namespace perc;

namespace {

// Reflected walk matrix assembled straight from the configuration.
Eigen::MatrixXd oracle_matrix(const Configuration& cfg, const ClusterGraph& c) {
  const auto adj = oracle::adjacency(cfg, c.vertices());
  const double q = 1.0 / (2.0 * cfg.dim());
  const auto n = static_cast<Eigen::Index>(c.size());
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int j : adj[static_cast<std::size_t>(i)]) p(i, j) = q;
    p(i, i) = 1.0 - q * static_cast<double>(adj[static_cast<std::size_t>(i)].size());
  }
  return p;
}

ClusterGraph sample_cluster(const Model& model, int n, double p, std::uint64_t seed, Configuration& cfg) {
  cfg = sample_configuration(model, n, p, seed);
  return origin_box_cluster(cfg, n);
}

}  // namespace

TEST_CASE("full-box gap matches the closed form") {
  CHECK(full_box_gap(1, 2) == doctest::Approx(0.25));
  for (int d : {2, 3})
    for (int n : {1, 2, 4}) {
      Configuration cfg = sample_configuration(Model::bond(d), n, 1.0, 0);
      ClusterGraph c = origin_box_cluster(cfg, n);
      const double expect = (1.0 - std::cos(M_PI / (2 * n + 1))) / d;
      CHECK(full_box_gap(n, d) == doctest::Approx(expect).epsilon(1e-14));
      CHECK(spectral_gap(c, SpectralMethod::Dense).gap == doctest::Approx(expect).epsilon(1e-10));
      if (c.size() > 2) CHECK(spectral_gap(c, SpectralMethod::Iterative).gap == doctest::Approx(expect).epsilon(1e-7));
    }
}

TEST_CASE("walk matrix equals the configuration oracle") {
  Configuration cfg;
  ClusterGraph c = sample_cluster(Model::site2d(), 4, 0.75, 6, cfg);
  WalkMatrix w = build_walk_matrix(c, WalkMode::Reflected);
  Eigen::MatrixXd expect = oracle_matrix(cfg, c);
  for (std::size_t i = 0; i < c.size(); ++i)
    for (std::size_t j = 0; j < c.size(); ++j)
      CHECK(w.entry(i, j) == doctest::Approx(expect(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))));
}

TEST_CASE("dense and iterative gaps agree on random clusters") {
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    Configuration cfg;
    ClusterGraph c;
    try {
      c = sample_cluster(Model::site2d(), 10, 0.75, seed, cfg);
    } catch (const EmptyCluster&) {
      continue;
    }
    if (c.size() < 10) continue;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(oracle_matrix(cfg, c));
    const double expect = 1.0 - es.eigenvalues()(es.eigenvalues().size() - 2);
    SpectralReport it = spectral_gap(c, SpectralMethod::Iterative, true);
    CHECK(spectral_gap(c, SpectralMethod::Dense).gap == doctest::Approx(expect).epsilon(1e-9));
    CHECK(it.gap == doctest::Approx(expect).epsilon(1e-6));
    CHECK(it.residual <= kEigenResidualTol);
  }
}

TEST_CASE("two-vertex kernel has the closed form") {
  Configuration cfg(Model::site2d(), 1, 1.0, 0);
  cfg.set_site(Point::origin(), true);
  cfg.set_site(Point::of({1, 0}), true);
  ClusterGraph c = origin_box_cluster(cfg, 1);
  WalkMatrix w = build_walk_matrix(c, WalkMode::Reflected);
  const std::vector<double> times{0.0, 0.3, 2.0, 50.0};
  KernelTable k = heat_kernel_exact(w, times);
  const auto z = static_cast<std::size_t>(c.id_of(Point::origin()));
  for (std::size_t j = 0; j < times.size(); ++j)
    CHECK(k.at(j, z, z) == doctest::Approx(0.5 * (1 + std::exp(-0.5 * times[j]))).epsilon(1e-12));
}

TEST_CASE("uniformization agrees with the eigen route and is stochastic") {
  Configuration cfg;
  ClusterGraph c = sample_cluster(Model::site2d(), 5, 0.8, 2, cfg);
  WalkMatrix w = build_walk_matrix(c, WalkMode::Reflected);
  const std::vector<double> times{0.5, 7.0, 64.0, 900.0};
  KernelTable a = heat_kernel_exact(w, times);
  KernelTable b = heat_kernel_eigen(w, times);
  KernelTable rows = heat_kernel_rows(w, {0, 3}, times);
  const std::size_t n = c.size();
  for (std::size_t j = 0; j < times.size(); ++j) {
    for (std::size_t x = 0; x < n; ++x) {
      double row = 0;
      for (std::size_t y = 0; y < n; ++y) {
        row += a.at(j, x, y);
        CHECK(std::abs(a.at(j, x, y) - b.at(j, x, y)) <= 1e-11);
        CHECK(std::abs(a.at(j, x, y) - a.at(j, y, x)) <= 1e-13);
      }
      CHECK(row == doctest::Approx(1.0).epsilon(1e-10));
    }
    for (std::size_t y = 0; y < n; ++y) CHECK(std::abs(rows.at(j, 1, y) - a.at(j, 3, y)) <= 1e-11);
  }
}

TEST_CASE("inequality checks hold on samples") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    Configuration cfg = sample_configuration(Model::bond(2), 6, 0.6, seed);
    CarneResult cr;
    try {
      cr = carne_varopoulos_check(cfg, 6, {0.5, 1.0});
    } catch (const EmptyCluster&) {
      continue;
    }
    CHECK(cr.violations == 0);
    CHECK(cr.continuous_violations == 0);
    CHECK(cr.checked > 0);
  }
  CHECK_THROWS_AS(carne_varopoulos_check(sample_configuration(Model::bond(2), 3, 1.0, 1), 4), ParameterError);

  Configuration cfg;
  ClusterGraph c = sample_cluster(Model::site2d(), 3, 0.8, 4, cfg);
  if (c.size() >= 2 && c.size() <= 22) CHECK(cheeger_inequality_check(c).holds);
  CHECK(lower_bound_chain_check(c, 3.0, {static_cast<int>(c.size() - 1)}));
  const double eps = 3.0;
  for (const auto& row : estim_reflected_check(c, 3, {1.0, 10.0}, 0.05, eps)) CHECK(row.lhs <= row.rhs);
}

TEST_CASE("contract errors") {
  Configuration cfg = sample_configuration(Model::site2d(), 2, 1.0, 0);
  ClusterGraph c = origin_box_cluster(cfg, 2);
  CHECK_THROWS_AS(spectral_gap(build_walk_matrix(c, WalkMode::Free)), ContractError);
  ClusterGraph big = origin_box_cluster(sample_configuration(Model::site2d(), 28, 1.0, 0), 28);
  CHECK_THROWS_AS(heat_kernel_exact(build_walk_matrix(big, WalkMode::Reflected), {1.0}), CapExceeded);
}
