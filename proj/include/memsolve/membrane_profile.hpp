#pragma once

#include <algorithm>
#include <string>

#include "memsolve/error.hpp"
#include "memsolve/grid.hpp"

namespace memsolve {

/// Membrane deflection u on [-1,1] with its cached first and second differences.
///
/// Construction enforces the clamped ends u(+-1) = 0 and that the membrane
/// stays strictly above the ground plate (u > -1 at every node).
class MembraneProfile {
 public:
  explicit MembraneProfile(GridFunction1D u) : u_(std::move(u)), du_(d1(u_)), d2u_(d2(u_)) {
    const std::size_t n = u_.size();
    if (u_[0] != 0.0 || u_[n - 1] != 0.0) {
      fail(ErrorCode::BadParameter, "membrane profile must vanish at x = -1 and x = 1");
    }
    const double lowest = *std::min_element(u_.values().begin(), u_.values().end());
    if (!(lowest > -1.0)) {
      fail(ErrorCode::TouchdownInput, "membrane profile reaches the ground plate (min u = " +
                                          std::to_string(lowest) + ")");
    }
  }

  static MembraneProfile zero(LineGrid grid) { return MembraneProfile(GridFunction1D(grid)); }

  const LineGrid& grid() const noexcept { return u_.grid(); }
  std::size_t size() const noexcept { return u_.size(); }
  const GridFunction1D& u() const noexcept { return u_; }
  const GridFunction1D& du() const noexcept { return du_; }
  const GridFunction1D& d2u() const noexcept { return d2u_; }
  double operator[](std::size_t i) const noexcept { return u_[i]; }

  double min_gap() const noexcept {
    return 1.0 + *std::min_element(u_.values().begin(), u_.values().end());
  }

 private:
  GridFunction1D u_;
  GridFunction1D du_;
  GridFunction1D d2u_;
};

}  // namespace memsolve
