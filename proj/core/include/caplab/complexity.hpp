#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "caplab/constructions.hpp"
#include "caplab/numerics.hpp"

namespace caplab {

enum class SupStrategy { enumerate_witnesses, linear_closed_form, projected_ascent };
std::string_view to_string(SupStrategy s) noexcept;
SupStrategy sup_strategy_from_string(std::string_view name);

struct RademacherEstimate {
  double mean = 0.0;
  /// Sample standard deviation over draws divided by √draws.
  double std_error = 0.0;
  std::size_t draws = 0;
  std::size_t m = 0;
  SupStrategy strategy = SupStrategy::enumerate_witnesses;
  bool is_lower_estimate = false;
};

/// Finitely many functions given by their values: table[f][i] = f(x_i).
struct FiniteClass {
  std::vector<Vec> table;
};

/// {x ↦ ⟨w, x⟩ : ‖w‖ ≤ radius} on the given points.
struct LinearBallClass {
  std::vector<Vec> points;
  double radius = 1.0;
};

/// {x ↦ f(W x) : ‖W − W0‖_F ≤ radius} for a fixed differentiable f.
struct MatrixBallClass {
  std::vector<Vec> points;
  Mat w0;
  double radius = 1.0;
  std::function<double(const Vec&)> f;
  std::function<Vec(const Vec&)> gradient;
};

using FunctionClass = std::variant<FiniteClass, LinearBallClass, MatrixBallClass>;

struct AscentOptions {
  std::size_t restarts = 10;
  std::size_t steps = 200;
  /// Step at iteration t is step_scale·radius/√t.
  double step_scale = 0.1;
};

/// Monte Carlo estimate of E_σ sup_f (1/m) Σ σ_i f(x_i). Draw k uses signs
/// derived from (seed, k) alone, so results are independent of scheduling.
/// Without an explicit strategy the class type picks one.
RademacherEstimate rademacher_mc(const FunctionClass& cls, std::size_t draws, std::uint64_t seed,
                                 std::optional<SupStrategy> strategy = std::nullopt, std::size_t threads = 0,
                                 const AscentOptions& ascent = {});

/// Per draw (B/m)·‖Σ σ_i x_i‖, the exact sup of the Euclidean-ball class.
RademacherEstimate rademacher_linear_closed_form(const std::vector<Vec>& points, double radius, std::size_t draws,
                                                 std::uint64_t seed, std::size_t threads = 0);

/// Sign vector of draw k as a bitmask (bit i set means σ_i = +1), m ≤ 64.
std::uint64_t rademacher_signs(std::uint64_t seed, std::size_t draw, std::size_t m);

/// Value table of every witness of a shattering instance.
FiniteClass finite_class_from_instance(const ShatterInstance& inst, std::size_t threads = 0);

struct CoverResult {
  std::vector<std::size_t> centers;
  /// Largest distance from a function to its nearest center.
  double radius = 0.0;
};

/// Empirical L2 distance d_m between two rows of outputs over m points; rows
/// may hold several outputs per point.
double empirical_distance(const Vec& a, const Vec& b, std::size_t m);

/// Greedy farthest-point proper cover under d_m, starting from row 0; ties go
/// to the lowest index. `m` defaults to the row length (scalar outputs).
CoverResult empirical_cover(const std::vector<Vec>& table, double eps, std::size_t m = 0);

enum class CoverKind { scalar_linear, matrix_linear, constants, lipschitz_composition, contraction };
std::string_view to_string(CoverKind k) noexcept;
CoverKind cover_kind_from_string(std::string_view name);

struct CoverFormula {
  CoverKind kind = CoverKind::scalar_linear;
  std::map<std::string, double> params;
};

struct CoverBound {
  double log_cover = 0.0;
  /// Constants kind only: the 2·log₂(B)/eps envelope.
  std::optional<double> envelope;
};

/// Log covering-number bound of the named family. Parameters:
///   scalar-linear:          B, eps [, b_x=1, c=1]           (c·B·b_x/eps)²
///   matrix-linear:          B, eps, r [, b_x=1, c=1]        c·r²·B²·b_x²/eps²
///   constants:              B ≥ 2, eps                      log⌈B/eps⌉
///   lipschitz-composition:  B, L, eps, r [, inner=0]        (1+8BL/eps)^r·log(8B/eps) + inner
///   contraction:            B, L, eps, k [, b_x=1, c=1]     k scalar-linear covers at eps/(√k·L)
CoverBound cover_bound(const CoverFormula& f);

struct DudleyResult {
  double value = 0.0;
  double argmin_eps = 0.0;
  double integral = 0.0;
  std::size_t panels = 0;
  std::size_t grid_points = 0;
};

constexpr std::size_t kDudleyPanels = 1024;
constexpr std::size_t kDudleyGrid = 64;

/// 64 log-spaced scales in [1e-6·LB, LB].
std::vector<double> default_dudley_grid(double range_bound);

/// min over grid ε of 4ε + (12/√m)·∫_ε^{LB} √(log N(τ)) dτ with a composite
/// trapezoid of 1024 panels. Grid points whose integral is not finite are
/// skipped; grid points above LB contribute 4ε.
DudleyResult dudley_bound(const std::function<double(double)>& log_cover, double range_bound, double m,
                          std::vector<double> grid = {});

struct DudleyThreshold {
  /// Natural log of the smallest m for which the Dudley bound reaches the target.
  double log_m = 0.0;
  double argmin_eps = 0.0;
};

/// Same integral in log space for covers too large for doubles: takes
/// ln(log N(τ)) and returns ln of the smallest sample size whose Dudley bound
/// is at most `target`.
DudleyThreshold dudley_sample_threshold(const std::function<double(double)>& log_log_cover, double range_bound,
                                        double target, std::vector<double> grid = {});

/// ln(log N(τ)) of the low-rank composition chain for {x ↦ f(Wx): ‖W‖_F ≤ B,
/// f L-Lipschitz}: truncation at half the scale, rank ⌊B²/s²⌋, then the
/// Lipschitz-composition cover over a matrix-linear inner cover.
std::function<double(double)> composition_log_log_cover(double radius, double lipschitz, double c = 1.0);

}  // namespace caplab
