#include <algorithm>
#include <cmath>
#include <limits>

#include "caplab/complexity.hpp"
#include "caplab/error.hpp"

namespace caplab {

namespace {

std::vector<double> log_grid(double lo, double hi, std::size_t count) {
  std::vector<double> g(count);
  const double a = std::log(lo);
  const double b = std::log(hi);
  for (std::size_t k = 0; k < count; ++k)
    g[k] = std::exp(a + (b - a) * static_cast<double>(k) / static_cast<double>(count - 1));
  return g;
}

double log_add(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

void check_grid(const std::vector<double>& grid) {
  require(!grid.empty(), "Dudley grid is empty");
  for (double e : grid) require(std::isfinite(e) && e >= 0.0, "Dudley grid scales must be finite and nonnegative");
}

}  // namespace

std::vector<double> default_dudley_grid(double range_bound) {
  require(std::isfinite(range_bound) && range_bound > 0.0, "range bound LB must be positive");
  return log_grid(1e-6 * range_bound, range_bound, kDudleyGrid);
}

DudleyResult dudley_bound(const std::function<double(double)>& log_cover, double range_bound, double m,
                          std::vector<double> grid) {
  require(std::isfinite(range_bound) && range_bound > 0.0, "range bound LB must be positive");
  require(std::isfinite(m) && m > 0.0, "sample size m must be positive");
  if (grid.empty()) grid = default_dudley_grid(range_bound);
  check_grid(grid);

  DudleyResult best;
  best.value = std::numeric_limits<double>::infinity();
  best.panels = kDudleyPanels;
  best.grid_points = grid.size();
  const double coef = 12.0 / std::sqrt(m);
  for (double eps : grid) {
    double integral = 0.0;
    if (eps < range_bound) {
      const double h = (range_bound - eps) / static_cast<double>(kDudleyPanels);
      for (std::size_t j = 0; j <= kDudleyPanels; ++j) {
        const double tau = j == kDudleyPanels ? range_bound : eps + h * static_cast<double>(j);
        const double lc = log_cover(tau);
        const double v = std::sqrt(std::max(0.0, lc));
        const double w = (j == 0 || j == kDudleyPanels) ? 0.5 : 1.0;
        integral += w * v;
      }
      integral *= h;
    }
    if (!std::isfinite(integral)) continue;
    const double value = 4.0 * eps + coef * integral;
    if (value < best.value) {
      best.value = value;
      best.argmin_eps = eps;
      best.integral = integral;
    }
  }
  if (!std::isfinite(best.value))
    fail(ErrorKind::numerical_failure, "Dudley integral is infinite at every grid scale");
  return best;
}

DudleyThreshold dudley_sample_threshold(const std::function<double(double)>& log_log_cover, double range_bound,
                                        double target, std::vector<double> grid) {
  require(std::isfinite(range_bound) && range_bound > 0.0, "range bound LB must be positive");
  require(std::isfinite(target) && target > 0.0, "target must be positive");
  if (grid.empty()) {
    const double top = std::min(range_bound, target / 4.0) * (1.0 - 1e-9);
    grid = log_grid(1e-6 * top, top, kDudleyGrid);
  }
  check_grid(grid);

  DudleyThreshold best;
  best.log_m = std::numeric_limits<double>::infinity();
  for (double eps : grid) {
    if (!(4.0 * eps < target)) continue;
    double log_integral = -std::numeric_limits<double>::infinity();
    if (eps < range_bound) {
      const double h = (range_bound - eps) / static_cast<double>(kDudleyPanels);
      const double log_h = std::log(h);
      for (std::size_t j = 0; j <= kDudleyPanels; ++j) {
        const double tau = j == kDudleyPanels ? range_bound : eps + h * static_cast<double>(j);
        const double ll = log_log_cover(tau);
        if (std::isnan(ll)) fail(ErrorKind::numerical_failure, "log-log cover returned NaN");
        const double w = (j == 0 || j == kDudleyPanels) ? std::log(0.5) : 0.0;
        log_integral = log_add(log_integral, log_h + w + 0.5 * ll);
      }
    }
    if (log_integral == std::numeric_limits<double>::infinity()) continue;
    const double log_m = log_integral == -std::numeric_limits<double>::infinity()
                             ? 0.0
                             : std::max(0.0, 2.0 * (std::log(12.0) + log_integral - std::log(target - 4.0 * eps)));
    if (log_m < best.log_m) {
      best.log_m = log_m;
      best.argmin_eps = eps;
    }
  }
  if (!std::isfinite(best.log_m))
    fail(ErrorKind::numerical_failure, "no grid scale yields a finite sample threshold");
  return best;
}

std::function<double(double)> composition_log_log_cover(double radius, double lipschitz, double c) {
  require(std::isfinite(radius) && radius > 0.0, "B must be positive");
  require(std::isfinite(lipschitz) && lipschitz > 0.0, "L must be positive");
  require(std::isfinite(c) && c > 0.0, "c must be positive");
  return [radius, lipschitz, c](double tau) {
    if (!(tau > 0.0)) return std::numeric_limits<double>::infinity();
    const double e = tau / lipschitz / 2.0;
    const double r = std::max(1.0, std::floor(radius * radius / (e * e)));
    const double grid_ratio = 8.0 * radius / e;
    const double log_outer = grid_ratio > 1.0 ? r * std::log1p(grid_ratio) + std::log(std::log(grid_ratio))
                                              : -std::numeric_limits<double>::infinity();
    const double log_inner = std::log(c) + 2.0 * std::log(r) + 2.0 * std::log(radius) - 2.0 * std::log(e / 4.0);
    return log_add(log_outer, log_inner);
  };
}

}  // namespace caplab
