#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <compare>
#include <string>

namespace perc {

inline constexpr int kMaxDim = 6;

// A point of Z^d, d <= kMaxDim. Unused trailing coordinates stay zero so that
// comparison and hashing do not need to know d.
struct Point {
  std::array<int, kMaxDim> x{};

  int& operator[](int i) { return x[static_cast<std::size_t>(i)]; }
  int operator[](int i) const { return x[static_cast<std::size_t>(i)]; }

  friend auto operator<=>(const Point&, const Point&) = default;
  friend bool operator==(const Point&, const Point&) = default;

  static Point origin() { return Point{}; }
  static Point of(std::initializer_list<int> coords) {
    Point p;
    int i = 0;
    for (int c : coords) p[i++] = c;
    return p;
  }

  Point shifted(int axis, int step) const {
    Point p = *this;
    p[axis] += step;
    return p;
  }
};

inline int norm_inf(const Point& p, int d) {
  int r = 0;
  for (int i = 0; i < d; ++i) r = std::max(r, std::abs(p[i]));
  return r;
}

inline int norm_l1(const Point& p, int d) {
  int r = 0;
  for (int i = 0; i < d; ++i) r += std::abs(p[i]);
  return r;
}

inline long long norm2_squared(const Point& p, int d) {
  long long r = 0;
  for (int i = 0; i < d; ++i) r += static_cast<long long>(p[i]) * p[i];
  return r;
}

std::string to_string(const Point& p, int d);

struct PointHash {
  std::size_t operator()(const Point& p) const noexcept {
    std::uint64_t h = 0x9E3779B97F4A7C15ull;
    for (int c : p.x) {
      h ^= static_cast<std::uint64_t>(static_cast<std::uint32_t>(c)) + 0x9E3779B97F4A7C15ull + (h << 6) + (h >> 2);
    }
    return static_cast<std::size_t>(h);
  }
};

// The box [lo, hi]^d with row-major lexicographic indexing (last coordinate
// fastest). Symmetric boxes [-n, n]^d are the common case.
class BoxGeometry {
 public:
  BoxGeometry() = default;
  BoxGeometry(int d, int n) : BoxGeometry(d, Point{}, n) {}
  // Box of half-extent n centred at `center`.
  BoxGeometry(int d, const Point& center, int n);

  int dim() const { return d_; }
  int half_extent() const { return n_; }
  int side() const { return side_; }
  const Point& center() const { return center_; }
  std::size_t size() const { return size_; }

  bool contains(const Point& p) const {
    for (int i = 0; i < d_; ++i) {
      int r = p[i] - center_[i];
      if (r < -n_ || r > n_) return false;
    }
    return true;
  }

  std::size_t index(const Point& p) const {
    std::size_t idx = 0;
    for (int i = 0; i < d_; ++i) idx = idx * static_cast<std::size_t>(side_) + static_cast<std::size_t>(p[i] - center_[i] + n_);
    return idx;
  }

  Point point(std::size_t idx) const {
    Point p;
    for (int i = d_ - 1; i >= 0; --i) {
      p[i] = static_cast<int>(idx % static_cast<std::size_t>(side_)) - n_ + center_[i];
      idx /= static_cast<std::size_t>(side_);
    }
    return p;
  }

  // Index stride of one unit step along `axis`.
  std::size_t stride(int axis) const { return strides_[static_cast<std::size_t>(axis)]; }

  // Whether p is on the boundary shell (some coordinate at +/- n).
  friend bool operator==(const BoxGeometry&, const BoxGeometry&) = default;

  bool on_boundary(const Point& p) const {
    for (int i = 0; i < d_; ++i) {
      int r = p[i] - center_[i];
      if (r == -n_ || r == n_) return true;
    }
    return false;
  }

 private:
  int d_ = 0;
  int n_ = 0;
  int side_ = 0;
  Point center_{};
  std::size_t size_ = 0;
  std::array<std::size_t, kMaxDim> strides_{};
};

// Signed lattice directions are encoded 0..2d-1: 2*axis for +e_axis and
// 2*axis+1 for -e_axis.
inline int direction_axis(int dir) { return dir / 2; }
inline int direction_step(int dir) { return (dir % 2 == 0) ? 1 : -1; }
inline int opposite_direction(int dir) { return dir ^ 1; }

}  // namespace perc
