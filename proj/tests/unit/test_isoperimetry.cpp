#include <doctest.h>

#include <bit>
#include <cmath>

#include "oracles.hpp"
#include "perc/cluster_graph.hpp"
#include "perc/error.hpp"
#include "perc/isoperimetry.hpp"

using namespace perc;

namespace {

// Plain subset scan: min #dA / #A^gamma over 1 <= #A <= floor((1-alpha) #C).
double brute_iso(const Configuration& cfg, const ClusterGraph& c, double eps, double alpha, bool connected_only) {
  const auto adj = oracle::adjacency(cfg, c.vertices());
  const std::size_t n = c.size();
  const auto kmax = static_cast<std::size_t>(std::floor((1 - alpha) * static_cast<double>(n) + 1e-9));
  const double gamma = std::isinf(eps) ? 1.0 : (eps - 1) / eps;
  double best = INFINITY;
  for (std::uint64_t mask = 1; mask < (std::uint64_t{1} << n); ++mask) {
    const auto k = static_cast<std::size_t>(std::popcount(mask));
    if (k > kmax) continue;
    if (connected_only) {
      std::uint64_t reached = mask & (~mask + 1), grow = reached;
      while (grow) {
        std::uint64_t next = 0;
        for (std::size_t i = 0; i < n; ++i)
          if (grow >> i & 1)
            for (int j : adj[i]) next |= std::uint64_t{1} << j;
        next &= mask & ~reached;
        reached |= next;
        grow = next;
      }
      if (reached != mask) continue;
    }
    std::size_t boundary = 0;
    for (std::size_t i = 0; i < n; ++i)
      if (mask >> i & 1)
        for (int j : adj[i]) boundary += !(mask >> j & 1);
    best = std::min(best, static_cast<double>(boundary) / std::pow(static_cast<double>(k), gamma));
  }
  return best;
}

// Only the x-axis segment [-n, n] x {0} open.
Configuration segment(int n) {
  Configuration cfg(Model::site2d(), n, 1.0, 0);
  for (int x = -n; x <= n; ++x) cfg.set_site(Point::of({x, 0}), true);
  return cfg;
}

}  // namespace

TEST_CASE("eps(n) formula") {
  for (int n : {3, 10, 100})
    for (int d : {2, 3}) {
      const double ln = std::log(n);
      CHECK(epsilon_of_n(n, d) == doctest::Approx(d + 2.0 * d * std::log(ln) / ln));
    }
  CHECK_THROWS_AS(epsilon_of_n(2, 2), ParameterError);
}

TEST_CASE("exact search agrees with a plain subset scan") {
  std::size_t compared = 0;
  for (std::uint64_t seed = 1; seed <= 200; ++seed) {
    Configuration cfg = sample_configuration(Model::site2d(), 3, 0.6, seed);
    ClusterGraph c;
    try {
      c = origin_box_cluster(cfg, 3);
    } catch (const EmptyCluster&) {
      continue;
    }
    if (c.size() < 2 || c.size() > 16) continue;
    ++compared;
    for (double eps : {epsilon_of_n(3, 2), 2.5, double(INFINITY)}) {
      IsoParams ip{eps, 0.5, 3};
      const double expect = brute_iso(cfg, c, eps, 0.5, false);
      IsoReport all = iso_constant_exact(c, ip, IsoRestrict::AllSubsets);
      IsoReport con = iso_constant_exact(c, ip, IsoRestrict::ConnectedOnly);
      CHECK(std::isfinite(all.value));
      CHECK(all.value == doctest::Approx(expect).epsilon(1e-12));
      CHECK(con.value == doctest::Approx(expect).epsilon(1e-12));
      CHECK(brute_iso(cfg, c, eps, 0.5, true) == doctest::Approx(expect).epsilon(1e-12));
      CHECK(all.minimizing_set.count() == all.set_size);
      CHECK(edge_boundary(c, all.minimizing_set).size() == all.boundary);
    }
  }
  CHECK(compared >= 10);
}

TEST_CASE("segment: Cheeger constant is 1/n") {
  for (int n : {2, 3, 5, 8}) {
    Configuration cfg = segment(n);
    ClusterGraph c = origin_box_cluster(cfg, n);
    REQUIRE(c.size() == static_cast<std::size_t>(2 * n + 1));
    IsoReport r = cheeger_constant(c, CheegerMethod::Exact);
    CHECK(r.value == doctest::Approx(1.0 / n));
    CHECK(r.boundary == 1);
    // The sweep on a path finds the same cut.
    CHECK(spectral_sweep_cheeger(c).value == doctest::Approx(1.0 / n));
  }
}

TEST_CASE("sweep is an upper bound on the exact Cheeger constant") {
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    Configuration cfg = sample_configuration(Model::bond(2), 3, 0.6, seed);
    ClusterGraph c;
    try {
      c = origin_box_cluster(cfg, 3);
    } catch (const EmptyCluster&) {
      continue;
    }
    if (c.size() < 2 || c.size() > kExactAllCap) continue;
    CHECK(spectral_sweep_cheeger(c).value >= cheeger_constant(c, CheegerMethod::Exact).value - 1e-12);
  }
}

TEST_CASE("single vertex is degenerate and caps are enforced") {
  Configuration cfg(Model::site2d(), 2, 1.0, 0);
  cfg.set_site(Point::origin(), true);
  ClusterGraph one = origin_box_cluster(cfg, 2);
  IsoReport r = iso_constant_exact(one, IsoParams{}, IsoRestrict::AllSubsets);
  CHECK(r.degenerate);
  CHECK(std::isinf(r.value));

  ClusterGraph big = origin_box_cluster(sample_configuration(Model::site2d(), 3, 1.0, 0), 3);
  CHECK_THROWS_AS(iso_constant_exact(big, IsoParams{}, IsoRestrict::AllSubsets), CapExceeded);
  CHECK_THROWS_AS(iso_constant_exact(big, IsoParams{0.5, 0.5, 3}, IsoRestrict::ConnectedOnly), ParameterError);
}

TEST_CASE("Nash inequality holds with the exact constant") {
  std::size_t checked = 0;
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    Configuration cfg = sample_configuration(Model::site2d(), 3, 0.7, seed);
    ClusterGraph c;
    try {
      c = origin_box_cluster(cfg, 3);
    } catch (const EmptyCluster&) {
      continue;
    }
    if (c.size() < 2 || c.size() > kExactAllCap) continue;
    IsoReport rep = iso_constant_exact(c, IsoParams{epsilon_of_n(3, 2), 0.5, 3}, IsoRestrict::AllSubsets);
    NashCheck nc = nash_check(c, rep, 100, seed);
    CHECK(nc.holds);
    ++checked;
  }
  CHECK(checked > 5);
}

TEST_CASE("Dirichlet form of an indicator counts boundary edges") {
  Configuration cfg = sample_configuration(Model::site2d(), 4, 0.8, 1);
  ClusterGraph c = origin_box_cluster(cfg, 4);
  std::vector<double> g(c.size(), 0.0);
  SubsetMask a = SubsetMask::empty_of(c);
  for (std::size_t i = 0; i < c.size(); i += 2) {
    g[i] = 1.0;
    a.set(i);
  }
  // E(g, g) = (1/2) sum_x sum_y pi(x) P(x, y) (g(x) - g(y))^2 with pi uniform.
  const double expect = static_cast<double>(edge_boundary(c, a).size()) / (2.0 * 2 * static_cast<double>(c.size()));
  CHECK(dirichlet_form(c, g) == doctest::Approx(expect));
}
