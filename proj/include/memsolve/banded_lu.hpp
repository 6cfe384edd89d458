#pragma once

// Banded Gaussian elimination with partial pivoting.
//
// Row r stores columns [r - kl, r + ku + kl]; the extra kl columns on the right
// hold the fill created by row interchanges. Multipliers stay where they were
// computed and the interchanges are replayed during the forward sweep.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "memsolve/error.hpp"

namespace memsolve {

class BandedMatrix {
 public:
  BandedMatrix(std::size_t n, std::size_t kl, std::size_t ku)
      : n_(n), kl_(kl), ku_(ku), width_(2 * kl + ku + 1), data_(n * (2 * kl + ku + 1), 0.0) {}

  std::size_t size() const noexcept { return n_; }
  std::size_t lower() const noexcept { return kl_; }
  std::size_t upper() const noexcept { return ku_; }

  bool in_band(std::size_t r, std::size_t c) const noexcept {
    return c + kl_ >= r && c <= r + ku_;
  }

  double& at(std::size_t r, std::size_t c) noexcept { return data_[r * width_ + (c + kl_ - r)]; }
  double at(std::size_t r, std::size_t c) const noexcept { return data_[r * width_ + (c + kl_ - r)]; }
  const double* ptr(std::size_t r, std::size_t c) const noexcept { return data_.data() + r * width_ + (c + kl_ - r); }

 private:
  friend class BandedLU;
  std::size_t n_, kl_, ku_, width_;
  std::vector<double> data_;
};

class BandedLU {
 public:
  /// Factorizes in place (takes ownership of the matrix storage).
  explicit BandedLU(BandedMatrix a) : a_(std::move(a)), pivot_(a_.n_), last_(a_.n_) {
    const std::size_t n = a_.n_, kl = a_.kl_, ku = a_.ku_;
    for (std::size_t r = 0; r < n; ++r) last_[r] = std::min(n - 1, r + ku);

    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t row_end = std::min(n - 1, k + kl);
      std::size_t p = k;
      double best = std::abs(a_.at(k, k));
      for (std::size_t i = k + 1; i <= row_end; ++i) {
        const double v = std::abs(a_.at(i, k));
        if (v > best) {
          best = v;
          p = i;
        }
      }
      if (!(best > 0.0) || !std::isfinite(best)) {
        fail(ErrorCode::LinearSolveFailure, "zero or non-finite pivot at row " + std::to_string(k));
      }
      pivot_[k] = p;
      if (p != k) {
        const std::size_t hi = std::max(last_[k], last_[p]);
        for (std::size_t c = k; c <= hi; ++c) std::swap(a_.at(k, c), a_.at(p, c));
        std::swap(last_[k], last_[p]);
      }

      const double inv_pivot = 1.0 / a_.at(k, k);
      const std::size_t hi = last_[k];
      const double* urow = &a_.at(k, k);
      for (std::size_t i = k + 1; i <= row_end; ++i) {
        double& lik = a_.at(i, k);
        if (lik == 0.0) continue;
        lik *= inv_pivot;
        const double l = lik;
        double* row = &a_.at(i, k);
        for (std::size_t c = 1; c <= hi - k; ++c) row[c] -= l * urow[c];
        last_[i] = std::max(last_[i], hi);
      }
    }
  }

  std::size_t size() const noexcept { return a_.n_; }

  void solve_in_place(std::span<double> b) const {
    const std::size_t n = a_.n_, kl = a_.kl_;
    for (std::size_t k = 0; k < n; ++k) {
      if (pivot_[k] != k) std::swap(b[k], b[pivot_[k]]);
      const double bk = b[k];
      if (bk == 0.0) continue;
      const std::size_t row_end = std::min(n - 1, k + kl);
      for (std::size_t i = k + 1; i <= row_end; ++i) b[i] -= a_.at(i, k) * bk;
    }
    for (std::size_t k = n; k-- > 0;) {
      const double* row = a_.ptr(k, k);
      double s = b[k];
      for (std::size_t c = 1; c <= last_[k] - k; ++c) s -= row[c] * b[k + c];
      b[k] = s / row[0];
    }
  }

 private:
  BandedMatrix a_;
  std::vector<std::size_t> pivot_;
  std::vector<std::size_t> last_;
};

}  // namespace memsolve
