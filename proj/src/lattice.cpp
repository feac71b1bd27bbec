#include "perc/lattice.hpp"

#include "perc/error.hpp"

namespace perc {

BoxGeometry::BoxGeometry(int d, const Point& center, int n) : d_(d), n_(n), center_(center) {
  if (d < 1 || d > kMaxDim) throw ParameterError("dimension must be in [1, " + std::to_string(kMaxDim) + "]");
  if (n < 0) throw ParameterError("box half-extent must be >= 0");
  side_ = 2 * n + 1;
  size_ = 1;
  for (int i = 0; i < d; ++i) size_ *= static_cast<std::size_t>(side_);
  std::size_t s = 1;
  for (int i = d - 1; i >= 0; --i) {
    strides_[static_cast<std::size_t>(i)] = s;
    s *= static_cast<std::size_t>(side_);
  }
}

std::string to_string(const Point& p, int d) {
  std::string s = "(";
  for (int i = 0; i < d; ++i) {
    if (i) s += ",";
    s += std::to_string(p[i]);
  }
  return s + ")";
}

}  // namespace perc
