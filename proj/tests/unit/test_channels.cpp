#include <doctest.h>

#include <bit>
#include <deque>

#include "perc/channels.hpp"
#include "perc/error.hpp"

using namespace perc;

namespace {

// Menger by brute force: the smallest set of usable sites whose removal
// leaves no open crossing. Usable sites are the start side, the end side and
// the strict interior; a crossing enters the interior from the start side
// and leaves it onto the end side.
std::size_t brute_min_cut(const Configuration& cfg, const Rect& r) {
  std::vector<Point> usable;
  std::vector<int> kind;  // 0 start, 1 interior, 2 end
  for (int x = r.x0; x <= r.x0 + r.width; ++x)
    for (int y = r.y0; y <= r.y0 + r.height; ++y) {
      if (!cfg.site_open(Point::of({x, y}))) continue;
      int k = x == r.x0 ? 0 : x == r.x0 + r.width ? 2 : (y > r.y0 && y < r.y0 + r.height) ? 1 : -1;
      if (k < 0) continue;
      usable.push_back(Point::of({x, y}));
      kind.push_back(k);
    }
  const std::size_t n = usable.size();
  auto adjacent = [&](std::size_t i, std::size_t j) {
    return std::abs(usable[i][0] - usable[j][0]) + std::abs(usable[i][1] - usable[j][1]) == 1;
  };
  auto blocked = [&](std::uint64_t removed) {
    std::vector<char> seen(n, 0);
    std::deque<std::size_t> q;
    for (std::size_t i = 0; i < n; ++i)
      if (kind[i] == 0 && !(removed >> i & 1)) {
        seen[i] = 1;
        q.push_back(i);
      }
    while (!q.empty()) {
      std::size_t i = q.front();
      q.pop_front();
      if (kind[i] == 2) return false;
      for (std::size_t j = 0; j < n; ++j)
        if (!seen[j] && !(removed >> j & 1) && kind[j] != 0 && adjacent(i, j)) {
          seen[j] = 1;
          q.push_back(j);
        }
    }
    return true;
  };
  std::size_t best = n;
  for (std::uint64_t removed = 0; removed < (std::uint64_t{1} << n); ++removed) {
    const auto k = static_cast<std::size_t>(std::popcount(removed));
    if (k < best && blocked(removed)) best = k;
  }
  return best;
}

}  // namespace

TEST_CASE("full and empty rectangles") {
  for (int n : {2, 5, 12}) {
    CHECK(max_disjoint_channels(sample_configuration(Model::site2d(), n, 1.0, 0), Rect{0, 0, n, n},
                                ChannelDirection::Horizontal)
              .count() == static_cast<std::size_t>(n - 1));
    CHECK(max_disjoint_channels(sample_configuration(Model::site2d(), n, 0.0, 0), Rect{0, 0, n, n},
                                ChannelDirection::Vertical)
              .count() == 0);
  }
}

TEST_CASE("one open row gives one channel") {
  Configuration cfg(Model::site2d(), 6, 1.0, 0);
  for (int x = 0; x <= 6; ++x) cfg.set_site(Point::of({x, 2}), true);
  ChannelSet h = max_disjoint_channels(cfg, Rect{0, 0, 6, 4}, ChannelDirection::Horizontal);
  REQUIRE(h.count() == 1);
  CHECK(h.paths[0].size() == 7);
  CHECK(validate_channels(cfg, h));
  CHECK(max_disjoint_channels(cfg, Rect{0, 0, 6, 4}, ChannelDirection::Vertical).count() == 0);
  // The row lies on the rectangle's top side: not interior, so no channel.
  CHECK(max_disjoint_channels(cfg, Rect{0, 0, 6, 2}, ChannelDirection::Horizontal).count() == 0);
}

TEST_CASE("max flow equals the brute-force minimum cut") {
  for (std::uint64_t seed = 1; seed <= 25; ++seed) {
    Configuration cfg = sample_configuration(Model::site2d(), 4, 0.65, seed);
    const Rect r{-2, -1, 4, 3};
    ChannelSet set = max_disjoint_channels(cfg, r, ChannelDirection::Horizontal);
    CHECK(validate_channels(cfg, set));
    CHECK(set.count() == brute_min_cut(cfg, r));
  }
}

TEST_CASE("channel counts are monotone under coupling") {
  const std::vector<double> ps{0.5, 0.7, 0.9};
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto cfgs = sample_coupled(Model::site2d(), 12, ps, seed);
    std::size_t prev = 0;
    for (const auto& cfg : cfgs) {
      std::size_t k = max_disjoint_channels(cfg, Rect{-12, -12, 24, 24}, ChannelDirection::Vertical).count();
      CHECK(k >= prev);
      prev = k;
    }
  }
}

TEST_CASE("Kesten grid strips") {
  Configuration full = sample_configuration(Model::site2d(), 10, 1.0, 0);
  KestenGrid g = build_kesten_grid(full, 10, 2.0);
  CHECK(g.strip_height == 5);  // ceil(2 ln 10)
  int covered = 0;
  for (const auto& s : g.strips) {
    covered += s.hi - s.lo + 1;
    const std::size_t expect = s.hi - s.lo >= 2 ? static_cast<std::size_t>(s.hi - s.lo - 1) : 0;
    CHECK(s.horizontal == expect);
    CHECK(s.vertical == expect);
  }
  CHECK(covered == 21);
  CHECK(build_kesten_grid(full, 10, 10.0).degenerate);
  CHECK_THROWS_AS(build_kesten_grid(full, 4), ParameterError);
  CHECK_THROWS_AS(max_disjoint_channels(full, Rect{0, 0, 1, 5}, ChannelDirection::Horizontal), ParameterError);
  CHECK_THROWS_AS(max_disjoint_channels(sample_configuration(Model::bond(2), 4, 1.0, 0), Rect{0, 0, 2, 2},
                                        ChannelDirection::Horizontal),
                  ParameterError);
}

TEST_CASE("scaling experiment rows and summary") {
  ChannelScalingResult r = channel_scaling_experiment(1.0, {4, 8}, 2, 1);
  REQUIRE(r.rows.size() == 4);
  CHECK(r.rows[0].channels == 3);
  CHECK(r.summary[1].mean_ratio == doctest::Approx(7.0 / 8));
  CHECK_FALSE(r.below_threshold);
  CHECK(channel_scaling_experiment(0.5, {4}, 1, 1).below_threshold);
}
