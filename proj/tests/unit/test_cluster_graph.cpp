#include <doctest.h>

#include <set>

#include "oracles.hpp"
#include "perc/cluster_graph.hpp"
#include "perc/error.hpp"

using namespace perc;

namespace {
std::set<Point> as_set(const ClusterGraph& g) { return {g.vertices().begin(), g.vertices().end()}; }
}  // namespace

TEST_CASE("origin cluster matches breadth-first search") {
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    for (const Model& model : {Model::site2d(), Model::bond(2), Model::bond(3)}) {
      Configuration cfg = sample_configuration(model, 5, model.is_site() ? 0.6 : 0.5, seed);
      const int n = 3;
      auto expect = oracle::cluster_of(cfg, n, Point::origin());
      if (model.is_site() && !cfg.site_open(Point::origin())) {
        CHECK_THROWS_AS(origin_box_cluster(cfg, n), EmptyCluster);
        continue;
      }
      // Bond model: an isolated origin is its own one-vertex cluster.
      if (expect.empty()) expect.insert(Point::origin());
      ClusterGraph c = origin_box_cluster(cfg, n);
      CHECK(as_set(c) == expect);
      CHECK(c.is_connected());
      std::size_t half_edges = 0;
      for (std::size_t i = 0; i < c.size(); ++i) half_edges += c.neighbors(static_cast<int>(i)).size();
      auto adj = oracle::adjacency(cfg, c.vertices());
      std::size_t expect_half = 0;
      for (auto& a : adj) expect_half += a.size();
      CHECK(half_edges == expect_half);
    }
  }
}

TEST_CASE("full box at p = 1") {
  Configuration cfg = sample_configuration(Model::site2d(), 4, 1.0, 1);
  ClusterGraph c = origin_box_cluster(cfg, 4);
  CHECK(c.size() == 81);
  CHECK(c.edge_count() == 2 * 8 * 9);
  auto dens = cluster_density_stats(cfg, 4);
  CHECK(dens.ratio == doctest::Approx(1.0));
}

TEST_CASE("components partition the active vertices") {
  Configuration cfg = sample_configuration(Model::bond(2), 6, 0.45, 4);
  auto comps = components(cfg, 6);
  std::set<Point> covered;
  for (std::size_t i = 0; i < comps.size(); ++i) {
    auto expect = oracle::cluster_of(cfg, 6, comps[i].vertex(0));
    CHECK(as_set(comps[i]) == expect);
    for (const auto& x : comps[i].vertices()) CHECK(covered.insert(x).second);
    if (i > 0) CHECK(comps[i - 1].size() >= comps[i].size());
  }
  for (const auto& x : oracle::box_points(2, 6)) {
    bool active = false;
    for (int dir = 0; dir < 4; ++dir) active = active || (oracle::in_box(x.shifted(dir / 2, dir % 2 ? -1 : 1), 2, 6) && cfg.edge_open(x, dir));
    CHECK(active == (covered.count(x) > 0));
  }
  CHECK(largest_cluster(cfg, 6).size() == comps.front().size());
}

TEST_CASE("edge boundary of single vertices is the degree") {
  Configuration cfg = sample_configuration(Model::site2d(), 4, 0.75, 13);
  ClusterGraph c = origin_box_cluster(cfg, 4);
  for (std::size_t i = 0; i < c.size(); ++i) {
    SubsetMask a = SubsetMask::empty_of(c);
    a.set(i);
    CHECK(edge_boundary(c, a).size() == static_cast<std::size_t>(c.degree(static_cast<int>(i))));
  }
  CHECK(edge_boundary(c, SubsetMask::full_of(c)).empty());
}

TEST_CASE("filling the complement preserves the open boundary") {
  std::size_t tried = 0;
  for (std::uint64_t seed = 1; seed <= 40 && tried < 6; ++seed) {
    Configuration cfg = sample_configuration(Model::site2d(), 3, 0.65, seed);
    ClusterGraph c;
    try {
      c = origin_box_cluster(cfg, 3);
    } catch (const EmptyCluster&) {
      continue;
    }
    if (c.size() < 3 || c.size() > 12) continue;
    ++tried;
    const std::uint64_t full = (std::uint64_t{1} << c.size()) - 1;
    for (std::uint64_t mask = 1; mask < full; ++mask) {
      SubsetMask a = SubsetMask::from_bits(c, mask);
      if (!is_cluster_connected(c, a) || !is_cluster_connected(c, a.complement())) continue;
      SubsetMask dd = fill_complement(c, a, cfg);
      CHECK(is_lattice_connected(c.box(), dd));
      for (std::size_t i = 0; i < c.size(); ++i)
        if (a.test(i)) CHECK(dd.test(c.box().index(c.vertex(static_cast<int>(i)))));
      CHECK(edge_boundary(c, a) == open_edges(box_edge_boundary(c.box(), dd), cfg));
    }
  }
  CHECK(tried > 0);
}
