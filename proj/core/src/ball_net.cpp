#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <unordered_map>
#include <vector>

#include "caplab/error.hpp"
#include "caplab/numerics.hpp"
#include "caplab/rng.hpp"

namespace caplab {

namespace {

constexpr std::size_t kMaxDim = 4;
constexpr double kMaxNetSize = 1e6;

double radical_inverse(std::uint64_t index, std::uint64_t base) {
  double inv = 1.0 / static_cast<double>(base);
  double f = inv;
  double result = 0.0;
  while (index > 0) {
    result += f * static_cast<double>(index % base);
    index /= base;
    f *= inv;
  }
  return result;
}

/// Uniform grid hash of side `cell` over the centers, for radius queries.
class CenterIndex {
 public:
  CenterIndex(std::size_t dim, double cell) : dim_(dim), cell_(cell) {}

  void insert(std::size_t id, std::span<const double> x) { buckets_[key_of(cell_coords(x))].push_back(id); }

  /// Calls visit(id) for every stored id whose bucket intersects the cube of
  /// half-width `radius` around x. Hash collisions only add candidates;
  /// visit must tolerate repeats.
  template <class Visit>
  void for_each_near(std::span<const double> x, double radius, Visit&& visit) const {
    std::array<long long, kMaxDim> lo{}, hi{}, cur{};
    for (std::size_t k = 0; k < dim_; ++k) {
      lo[k] = static_cast<long long>(std::floor((x[k] - radius) / cell_));
      hi[k] = static_cast<long long>(std::floor((x[k] + radius) / cell_));
      cur[k] = lo[k];
    }
    while (true) {
      auto it = buckets_.find(key_of(cur));
      if (it != buckets_.end())
        for (std::size_t id : it->second) visit(id);
      std::size_t k = 0;
      while (k < dim_ && cur[k] == hi[k]) {
        cur[k] = lo[k];
        ++k;
      }
      if (k == dim_) break;
      ++cur[k];
    }
  }

 private:
  std::array<long long, kMaxDim> cell_coords(std::span<const double> x) const {
    std::array<long long, kMaxDim> c{};
    for (std::size_t k = 0; k < dim_; ++k) c[k] = static_cast<long long>(std::floor(x[k] / cell_));
    return c;
  }

  std::uint64_t key_of(const std::array<long long, kMaxDim>& c) const {
    std::uint64_t h = 0x243f6a8885a308d3ULL;
    for (std::size_t k = 0; k < dim_; ++k) h = mix64(h ^ static_cast<std::uint64_t>(c[k]));
    return h;
  }

  std::size_t dim_;
  double cell_;
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> buckets_;
};

class NetBuilder {
 public:
  NetBuilder(std::size_t dim, double radius, double eps) : dim_(dim), radius_(radius), eps_(eps), index_(dim, eps) {}

  /// True when no center lies strictly closer than eps.
  bool separated(std::span<const double> x) const {
    bool ok = true;
    index_.for_each_near(x, eps_, [&](std::size_t id) {
      if (ok && distance2(x, centers_[id]) < eps_) ok = false;
    });
    return ok;
  }

  void add(Vec x) {
    index_.insert(centers_.size(), x);
    centers_.push_back(std::move(x));
  }

  /// A single center within eps of every point of the box [c−h, c+h].
  bool box_covered(std::span<const double> c, double h) const {
    const double reach = eps_ + h * std::sqrt(static_cast<double>(dim_));
    bool covered = false;
    index_.for_each_near(c, reach, [&](std::size_t id) {
      if (covered) return;
      const Vec& s = centers_[id];
      double far = 0.0;
      for (std::size_t k = 0; k < dim_; ++k) {
        const double d = std::abs(s[k] - c[k]) + h;
        far += d * d;
      }
      if (std::sqrt(far) <= eps_) covered = true;
    });
    return covered;
  }

  void greedy_pass(std::size_t candidates) {
    static constexpr std::uint64_t kBases[kMaxDim] = {2, 3, 5, 7};
    Vec x(dim_);
    for (std::size_t i = 1; i <= candidates; ++i) {
      for (std::size_t k = 0; k < dim_; ++k) x[k] = radius_ * (2.0 * radical_inverse(i, kBases[k]) - 1.0);
      if (norm2(x) > radius_) continue;
      if (separated(x)) add(x);
    }
  }

  void certify_pass() {
    struct Cell {
      Vec center;
      double half;
    };
    const double sqrt_r = std::sqrt(static_cast<double>(dim_));
    const double min_half = 1e-9 * eps_ / sqrt_r;
    std::vector<Cell> stack;
    stack.push_back({Vec(dim_, 0.0), radius_});
    while (!stack.empty()) {
      Cell cell = std::move(stack.back());
      stack.pop_back();

      double gap = 0.0;
      for (std::size_t k = 0; k < dim_; ++k) {
        const double d = std::max(0.0, std::abs(cell.center[k]) - cell.half);
        gap += d * d;
      }
      if (std::sqrt(gap) > radius_) continue;

      if (cell.half * sqrt_r <= eps_) {
        bool done = false;
        while (!done) {
          if (box_covered(cell.center, cell.half)) {
            done = true;
            break;
          }
          Vec p = cell.center;
          const double np = norm2(p);
          if (np > radius_)
            for (double& v : p) v *= radius_ / np;
          if (!separated(p)) break;
          add(std::move(p));
        }
        if (done) continue;
      }
      if (cell.half <= min_half) continue;

      const double child = cell.half / 2.0;
      for (std::size_t mask = (std::size_t{1} << dim_); mask-- > 0;) {
        Vec c = cell.center;
        for (std::size_t k = 0; k < dim_; ++k) c[k] += (mask >> k & 1U) ? child : -child;
        stack.push_back({std::move(c), child});
      }
    }
  }

  std::vector<Vec> take() { return std::move(centers_); }

 private:
  std::size_t dim_;
  double radius_;
  double eps_;
  CenterIndex index_;
  std::vector<Vec> centers_;
};

}  // namespace

double ball_net_size_bound(std::size_t r, double radius, double eps) {
  return std::pow(1.0 + 2.0 * radius / eps, static_cast<double>(r));
}

BallNet ball_net(std::size_t r, double radius, double eps) {
  require(r >= 1, "ball_net dimension must be positive");
  if (r > kMaxDim)
    fail(ErrorKind::capacity_exceeded, "ball_net dimension " + std::to_string(r) + " exceeds the cap of 4");
  require(std::isfinite(eps) && eps > 0.0, "ball_net resolution eps must be positive");
  require(std::isfinite(radius) && radius >= 0.0, "ball_net radius must be nonnegative");

  BallNet net{radius, r, eps, {}};
  if (radius == 0.0) {
    net.centers.push_back(Vec(r, 0.0));
    return net;
  }
  const double bound = ball_net_size_bound(r, radius, eps);
  if (bound > kMaxNetSize)
    fail(ErrorKind::capacity_exceeded, "ball_net size bound " + format_real(bound) + " exceeds 1e6");

  NetBuilder builder(r, radius, eps);
  builder.greedy_pass(static_cast<std::size_t>(std::min(65536.0, std::max(64.0, 8.0 * bound))));
  builder.certify_pass();
  net.centers = builder.take();
  return net;
}

double net_distance(const BallNet& net, std::span<const double> x) {
  double best = std::numeric_limits<double>::infinity();
  for (const Vec& c : net.centers) best = std::min(best, distance2(x, c));
  return best;
}

}  // namespace caplab
