#pragma once

// Uniform grids on [-1,1] and on the rectangle (-1,1)x(0,1), the finite
// difference operators built on them, trapezoid norms and log-log fitting.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "memsolve/error.hpp"

namespace memsolve {

/// Uniform nodes x_i = -1 + i*h on [-1,1]; the node count is odd so x = 0 is a node.
class LineGrid {
 public:
  explicit LineGrid(std::size_t n_points) : n_(n_points) {
    if (n_points < 5 || n_points % 2 == 0) {
      fail(ErrorCode::BadParameter,
           "LineGrid needs an odd number of points >= 5, got " + std::to_string(n_points));
    }
  }

  std::size_t size() const noexcept { return n_; }
  double spacing() const noexcept { return 2.0 / static_cast<double>(n_ - 1); }

  // (2i - (n-1)) / (n-1) keeps the nodes exactly mirror-symmetric and hits -1, 0, 1 exactly.
  double node(std::size_t i) const noexcept {
    const double m = static_cast<double>(n_ - 1);
    return (2.0 * static_cast<double>(i) - m) / m;
  }

  std::size_t mirror(std::size_t i) const noexcept { return n_ - 1 - i; }
  std::size_t center() const noexcept { return (n_ - 1) / 2; }

  friend bool operator==(const LineGrid&, const LineGrid&) = default;

 private:
  std::size_t n_;
};

/// Tensor grid on (-1,1)x(0,1): x from a LineGrid, eta_j = j/(n_eta-1).
class RectGrid {
 public:
  RectGrid(LineGrid line, std::size_t n_eta) : line_(line), n_eta_(n_eta) {
    if (n_eta < 5) {
      fail(ErrorCode::BadParameter, "RectGrid needs n_eta >= 5, got " + std::to_string(n_eta));
    }
  }
  RectGrid(std::size_t nx, std::size_t n_eta) : RectGrid(LineGrid(nx), n_eta) {}

  const LineGrid& line() const noexcept { return line_; }
  std::size_t nx() const noexcept { return line_.size(); }
  std::size_t n_eta() const noexcept { return n_eta_; }
  std::size_t size() const noexcept { return nx() * n_eta_; }
  double hx() const noexcept { return line_.spacing(); }
  double h_eta() const noexcept { return 1.0 / static_cast<double>(n_eta_ - 1); }
  double x(std::size_t i) const noexcept { return line_.node(i); }
  double eta(std::size_t j) const noexcept {
    return static_cast<double>(j) / static_cast<double>(n_eta_ - 1);
  }
  // x outer, eta inner
  std::size_t index(std::size_t i, std::size_t j) const noexcept { return i * n_eta_ + j; }

  friend bool operator==(const RectGrid&, const RectGrid&) = default;

 private:
  LineGrid line_;
  std::size_t n_eta_;
};

namespace detail {
inline void require_finite(std::span<const double> values, const char* what) {
  for (double v : values) {
    if (!std::isfinite(v)) fail(ErrorCode::BadParameter, std::string(what) + " contains non-finite values");
  }
}
}  // namespace detail

class GridFunction1D {
 public:
  explicit GridFunction1D(LineGrid grid) : grid_(grid), values_(grid.size(), 0.0) {}
  GridFunction1D(LineGrid grid, std::vector<double> values) : grid_(grid), values_(std::move(values)) {
    if (values_.size() != grid_.size()) {
      fail(ErrorCode::BadParameter, "GridFunction1D: value count does not match the grid");
    }
    detail::require_finite(values_, "GridFunction1D");
  }

  static GridFunction1D sample(LineGrid grid, const std::function<double(double)>& f) {
    std::vector<double> v(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) v[i] = f(grid.node(i));
    return {grid, std::move(v)};
  }

  const LineGrid& grid() const noexcept { return grid_; }
  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t i) const noexcept { return values_[i]; }
  double& operator[](std::size_t i) noexcept { return values_[i]; }
  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }

 private:
  LineGrid grid_;
  std::vector<double> values_;
};

class GridFunction2D {
 public:
  explicit GridFunction2D(RectGrid grid) : grid_(grid), values_(grid.size(), 0.0) {}
  GridFunction2D(RectGrid grid, std::vector<double> values) : grid_(grid), values_(std::move(values)) {
    if (values_.size() != grid_.size()) {
      fail(ErrorCode::BadParameter, "GridFunction2D: value count does not match the grid");
    }
    detail::require_finite(values_, "GridFunction2D");
  }

  static GridFunction2D sample(RectGrid grid, const std::function<double(double, double)>& f) {
    std::vector<double> v(grid.size());
    for (std::size_t i = 0; i < grid.nx(); ++i)
      for (std::size_t j = 0; j < grid.n_eta(); ++j) v[grid.index(i, j)] = f(grid.x(i), grid.eta(j));
    return {grid, std::move(v)};
  }

  const RectGrid& grid() const noexcept { return grid_; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return values_[grid_.index(i, j)]; }
  double& operator()(std::size_t i, std::size_t j) noexcept { return values_[grid_.index(i, j)]; }
  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }

  /// Values along eta = eta_j as a function of x.
  GridFunction1D row(std::size_t j) const {
    std::vector<double> v(grid_.nx());
    for (std::size_t i = 0; i < grid_.nx(); ++i) v[i] = (*this)(i, j);
    return {grid_.line(), std::move(v)};
  }

 private:
  RectGrid grid_;
  std::vector<double> values_;
};

// ---------------------------------------------------------------------------
// Difference operators

namespace detail {
// Second-order first derivative on a strided sequence of n values.
template <class Get, class Put>
void first_difference(std::size_t n, double h, Get get, Put put) {
  const double inv2h = 1.0 / (2.0 * h);
  put(0, (-3.0 * get(0) + 4.0 * get(1) - get(2)) * inv2h);
  for (std::size_t k = 1; k + 1 < n; ++k) put(k, (get(k + 1) - get(k - 1)) * inv2h);
  put(n - 1, (3.0 * get(n - 1) - 4.0 * get(n - 2) + get(n - 3)) * inv2h);
}

// Second derivative with second-order one-sided 4-point closures at both ends.
template <class Get, class Put>
void second_difference_closed(std::size_t n, double h, Get get, Put put) {
  const double invh2 = 1.0 / (h * h);
  put(0, (2.0 * get(0) - 5.0 * get(1) + 4.0 * get(2) - get(3)) * invh2);
  for (std::size_t k = 1; k + 1 < n; ++k) put(k, (get(k + 1) - 2.0 * get(k) + get(k - 1)) * invh2);
  put(n - 1, (2.0 * get(n - 1) - 5.0 * get(n - 2) + 4.0 * get(n - 3) - get(n - 4)) * invh2);
}
}  // namespace detail

/// du/dx: central in the interior, second-order one-sided at x = +-1.
inline GridFunction1D d1(const GridFunction1D& f) {
  GridFunction1D out(f.grid());
  detail::first_difference(
      f.size(), f.grid().spacing(), [&](std::size_t k) { return f[k]; },
      [&](std::size_t k, double v) { out[k] = v; });
  return out;
}

/// d2u/dx2: 3-point stencil in the interior; endpoint values copy the nearest interior node.
inline GridFunction1D d2(const GridFunction1D& f) {
  const std::size_t n = f.size();
  const double invh2 = 1.0 / (f.grid().spacing() * f.grid().spacing());
  GridFunction1D out(f.grid());
  for (std::size_t i = 1; i + 1 < n; ++i) out[i] = (f[i + 1] - 2.0 * f[i] + f[i - 1]) * invh2;
  out[0] = out[1];
  out[n - 1] = out[n - 2];
  return out;
}

/// One-sided second-order d(phi)/d(eta) at eta = 1.
inline GridFunction1D trace_d_eta_top(const GridFunction2D& phi) {
  const RectGrid& g = phi.grid();
  const std::size_t top = g.n_eta() - 1;
  const double inv2h = 1.0 / (2.0 * g.h_eta());
  GridFunction1D out(g.line());
  for (std::size_t i = 0; i < g.nx(); ++i) {
    out[i] = (3.0 * phi(i, top) - 4.0 * phi(i, top - 1) + phi(i, top - 2)) * inv2h;
  }
  return out;
}

/// d/dx on the rectangle, same closure as d1.
inline GridFunction2D d_x(const GridFunction2D& f) {
  const RectGrid& g = f.grid();
  GridFunction2D out(g);
  for (std::size_t j = 0; j < g.n_eta(); ++j) {
    detail::first_difference(
        g.nx(), g.hx(), [&](std::size_t k) { return f(k, j); },
        [&](std::size_t k, double v) { out(k, j) = v; });
  }
  return out;
}

/// d/d(eta) on the rectangle, same closure as d1.
inline GridFunction2D d_eta(const GridFunction2D& f) {
  const RectGrid& g = f.grid();
  GridFunction2D out(g);
  for (std::size_t i = 0; i < g.nx(); ++i) {
    detail::first_difference(
        g.n_eta(), g.h_eta(), [&](std::size_t k) { return f(i, k); },
        [&](std::size_t k, double v) { out(i, k) = v; });
  }
  return out;
}

/// d2/d(eta)2 on the rectangle with one-sided closures at eta = 0 and eta = 1.
inline GridFunction2D d_eta2(const GridFunction2D& f) {
  const RectGrid& g = f.grid();
  GridFunction2D out(g);
  for (std::size_t i = 0; i < g.nx(); ++i) {
    detail::second_difference_closed(
        g.n_eta(), g.h_eta(), [&](std::size_t k) { return f(i, k); },
        [&](std::size_t k, double v) { out(i, k) = v; });
  }
  return out;
}

// ---------------------------------------------------------------------------
// Norms (trapezoid rule for every L2 quantity)

inline double trapezoid_weight(std::size_t k, std::size_t n, double h) noexcept {
  return (k == 0 || k + 1 == n) ? 0.5 * h : h;
}

inline double norm_inf(std::span<const double> v) noexcept {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}
inline double norm_inf(const GridFunction1D& f) noexcept { return norm_inf(f.values()); }
inline double norm_inf(const GridFunction2D& f) noexcept { return norm_inf(f.values()); }

/// Trapezoid integral over [-1,1].
inline double integrate(const GridFunction1D& f) noexcept {
  const std::size_t n = f.size();
  const double h = f.grid().spacing();
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += trapezoid_weight(i, n, h) * f[i];
  return s;
}

/// Tensor trapezoid integral over the rectangle.
inline double integrate(const GridFunction2D& f) noexcept {
  const RectGrid& g = f.grid();
  double s = 0.0;
  for (std::size_t i = 0; i < g.nx(); ++i) {
    const double wx = trapezoid_weight(i, g.nx(), g.hx());
    double col = 0.0;
    for (std::size_t j = 0; j < g.n_eta(); ++j) col += trapezoid_weight(j, g.n_eta(), g.h_eta()) * f(i, j);
    s += wx * col;
  }
  return s;
}

inline double norm_l2(const GridFunction1D& f) {
  GridFunction1D sq(f.grid());
  for (std::size_t i = 0; i < f.size(); ++i) sq[i] = f[i] * f[i];
  return std::sqrt(integrate(sq));
}

inline double norm_l2(const GridFunction2D& f) {
  GridFunction2D sq(f.grid());
  auto out = sq.values();
  auto in = f.values();
  for (std::size_t k = 0; k < in.size(); ++k) out[k] = in[k] * in[k];
  return std::sqrt(integrate(sq));
}

/// max(|f|_inf, |d1 f|_inf)
inline double norm_w1inf(const GridFunction1D& f) { return std::max(norm_inf(f), norm_inf(d1(f))); }

/// L2 norm over x of the row eta = eta_j.
inline double norm_l2_row(const GridFunction2D& f, std::size_t j) { return norm_l2(f.row(j)); }

// ---------------------------------------------------------------------------

struct LogLogFit {
  double slope;
  double intercept;
};

/// Least-squares line through (log eps, log value).
inline LogLogFit fit_loglog_slope(std::span<const std::pair<double, double>> pairs) {
  if (pairs.size() < 3) {
    fail(ErrorCode::InsufficientData, "log-log fit needs at least 3 points, got " + std::to_string(pairs.size()));
  }
  double sx = 0, sy = 0;
  for (const auto& [e, v] : pairs) {
    if (!(e > 0.0) || !(v > 0.0)) {
      fail(ErrorCode::NonPositiveData, "log-log fit received a non-positive entry");
    }
    sx += std::log(e);
    sy += std::log(v);
  }
  const double n = static_cast<double>(pairs.size());
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0;
  for (const auto& [e, v] : pairs) {
    const double dx = std::log(e) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(v) - my);
  }
  if (sxx == 0.0) fail(ErrorCode::InsufficientData, "log-log fit needs at least two distinct abscissae");
  const double slope = sxy / sxx;
  return {slope, my - slope * mx};
}

}  // namespace memsolve
