#pragma once

// Derivative-free minimizers: golden-section line search and a coarse grid
// followed by coordinate-wise golden refinement.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <tuple>
#include <utility>
#include <vector>

#include "ecsim/errors.hpp"

namespace ecsim {

struct LineMinimum {
  double x = 0.0;
  double value = std::numeric_limits<double>::infinity();
  std::size_t evaluations = 0;
};

namespace detail {

inline double finite_or_inf(double v) { return std::isfinite(v) ? v : std::numeric_limits<double>::infinity(); }

}  // namespace detail

/// Golden-section search for a minimum of f on [lo, hi], stopping once the bracket is below tol.
template <class F>
LineMinimum golden_section_minimize(F&& f, double lo, double hi, double tol) {
  static const double kInvPhi = (std::sqrt(5.0) - 1.0) / 2.0;
  if (hi < lo) std::swap(lo, hi);
  LineMinimum out;
  double x1 = hi - kInvPhi * (hi - lo);
  double x2 = lo + kInvPhi * (hi - lo);
  double f1 = detail::finite_or_inf(f(x1));
  double f2 = detail::finite_or_inf(f(x2));
  out.evaluations = 2;
  while (hi - lo > tol) {
    if (f1 <= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - kInvPhi * (hi - lo);
      f1 = detail::finite_or_inf(f(x1));
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + kInvPhi * (hi - lo);
      f2 = detail::finite_or_inf(f(x2));
    }
    ++out.evaluations;
  }
  if (f1 <= f2) {
    out.x = x1;
    out.value = f1;
  } else {
    out.x = x2;
    out.value = f2;
  }
  return out;
}

struct GridAxis {
  double lo = 0.0;
  double hi = 1.0;
  std::size_t count = 10;
  bool log_spaced = false;

  [[nodiscard]] std::vector<double> points() const {
    std::vector<double> p(count);
    if (count == 1) {
      p[0] = lo;
      return p;
    }
    for (std::size_t i = 0; i < count; ++i) {
      const double s = double(i) / double(count - 1);
      p[i] = log_spaced ? lo * std::pow(hi / lo, s) : lo + s * (hi - lo);
    }
    return p;
  }
};

struct GridGoldenOptions {
  GridAxis x{};
  GridAxis y{};
  /// Golden-section bracket width at which refinement stops.
  double tolerance = 1e-4;
  std::size_t max_cycles = 4;
  /// Relative perturbation used by the post-hoc local-minimum check.
  double perturbation = 0.05;
  /// Refinement rounds restarted from an improving perturbation before giving up.
  std::size_t max_restarts = 3;
};

struct Minimum2D {
  double x = 0.0;
  double y = 0.0;
  double value = std::numeric_limits<double>::infinity();
  std::size_t evaluations = 0;
  /// No +-perturbation of either coordinate (kept inside the grid box) lowers the value.
  bool local_minimum = false;
};

namespace detail {

inline std::pair<double, double> neighbours(const std::vector<double>& pts, std::size_t i) {
  const double lo = pts[i == 0 ? 0 : i - 1];
  const double hi = pts[std::min(i + 1, pts.size() - 1)];
  return {lo, hi};
}

// Returns a perturbed point that improves on (x, y), if any.
template <class F>
std::optional<std::pair<double, double>> better_neighbour(F&& f, double x, double y, double& value,
                                                          const GridGoldenOptions& o, std::size_t& evals) {
  const double slack = 1e-9 * std::abs(value);
  auto clamp = [](double v, const GridAxis& a) { return std::clamp(v, a.lo, a.hi); };
  for (double s : {1.0 - o.perturbation, 1.0 + o.perturbation}) {
    const double xs = clamp(x * s, o.x);
    const double ys = clamp(y * s, o.y);
    if (xs != x) {
      ++evals;
      const double v = finite_or_inf(f(xs, y));
      if (v < value - slack) {
        value = v;
        return std::pair{xs, y};
      }
    }
    if (ys != y) {
      ++evals;
      const double v = finite_or_inf(f(x, ys));
      if (v < value - slack) {
        value = v;
        return std::pair{x, ys};
      }
    }
  }
  return std::nullopt;
}

}  // namespace detail

/// Minimizes f(x, y): full grid scan, then alternating golden-section refinement
/// of each coordinate inside the bracket spanned by its grid neighbours.
template <class F>
Minimum2D grid_golden_minimize(F&& f, const GridGoldenOptions& o) {
  const auto xs = o.x.points();
  const auto ys = o.y.points();
  Minimum2D best;
  std::size_t bi = 0;
  std::size_t bj = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    for (std::size_t j = 0; j < ys.size(); ++j) {
      const double v = detail::finite_or_inf(f(xs[i], ys[j]));
      ++best.evaluations;
      if (v < best.value) {
        best.value = v;
        best.x = xs[i];
        best.y = ys[j];
        bi = i;
        bj = j;
      }
    }
  }
  if (!std::isfinite(best.value)) throw OptimizationError("grid search: no grid point has finite objective");
  auto [xlo, xhi] = detail::neighbours(xs, bi);
  auto [ylo, yhi] = detail::neighbours(ys, bj);
  for (std::size_t restart = 0; restart <= o.max_restarts; ++restart) {
    for (std::size_t cycle = 0; cycle < o.max_cycles; ++cycle) {
      const double before = best.value;
      const double x0 = best.x;
      const double y0 = best.y;
      if (xhi > xlo) {
        auto line = golden_section_minimize([&](double x) { return f(x, best.y); }, xlo, xhi, o.tolerance);
        best.evaluations += line.evaluations;
        if (line.value < best.value) {
          best.value = line.value;
          best.x = line.x;
        }
      }
      if (yhi > ylo) {
        auto line = golden_section_minimize([&](double y) { return f(best.x, y); }, ylo, yhi, o.tolerance);
        best.evaluations += line.evaluations;
        if (line.value < best.value) {
          best.value = line.value;
          best.y = line.x;
        }
      }
      if (std::abs(best.x - x0) < o.tolerance && std::abs(best.y - y0) < o.tolerance && best.value <= before) break;
    }
    const auto moved = detail::better_neighbour(f, best.x, best.y, best.value, o, best.evaluations);
    if (!moved) {
      best.local_minimum = true;
      break;
    }
    // Re-bracket around the improved point with the same widths and refine again.
    std::tie(best.x, best.y) = *moved;
    const double wx = 0.5 * (xhi - xlo);
    const double wy = 0.5 * (yhi - ylo);
    xlo = std::max(o.x.lo, best.x - wx);
    xhi = std::min(o.x.hi, best.x + wx);
    ylo = std::max(o.y.lo, best.y - wy);
    yhi = std::min(o.y.hi, best.y + wy);
  }
  return best;
}

/// One-dimensional grid scan plus golden refinement.
template <class F>
LineMinimum grid_golden_minimize(F&& f, const GridAxis& axis, double tolerance) {
  const auto pts = axis.points();
  LineMinimum best;
  std::size_t bi = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double v = detail::finite_or_inf(f(pts[i]));
    ++best.evaluations;
    if (v < best.value) {
      best.value = v;
      best.x = pts[i];
      bi = i;
    }
  }
  if (!std::isfinite(best.value)) throw OptimizationError("grid search: no grid point has finite objective");
  const auto [lo, hi] = detail::neighbours(pts, bi);
  if (hi > lo) {
    auto line = golden_section_minimize(f, lo, hi, tolerance);
    best.evaluations += line.evaluations;
    if (line.value < best.value) {
      best.value = line.value;
      best.x = line.x;
    }
  }
  return best;
}

}  // namespace ecsim
