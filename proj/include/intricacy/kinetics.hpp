#pragma once

// Contagion-diffusion kinetics of the local intricacy measure f1(x, t).
//
// Everything in this header works in reduced units: lengths in mean free
// paths (lambda), times in mean free times (tau). f0 = 1 - f1 is never stored.

#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace intricacy::kinetics {

/// Random-walk diffusion coefficient lambda^2 / (6 tau) in reduced units.
inline constexpr double kReducedDiffusion = 1.0 / 6.0;

/// One-dimensional coordinate velocity v' = v / sqrt(3) in reduced units.
inline const double kImposedFrontSpeed = 1.0 / std::sqrt(3.0);

/// Minimal (pulled) front speed 2 sqrt(D / tau) of the contagion-diffusion equation.
inline double pulled_front_speed(double diffusion, double tau = 1.0)
{
    return 2.0 * std::sqrt(diffusion / tau);
}

/// Local intricacy measure on a regular 1D or 3D grid with no-flux walls.
class IntricacyField {
public:
    IntricacyField(int dimension, std::array<std::size_t, 3> extent, double spacing);

    static IntricacyField line(std::size_t points, double spacing);
    static IntricacyField cube(std::size_t points_per_axis, double spacing);

    int dimension() const { return dimension_; }
    const std::array<std::size_t, 3>& extent() const { return extent_; }
    double spacing() const { return spacing_; }
    std::size_t size() const { return values_.size(); }

    double time() const { return time_; }
    void set_time(double t) { time_ = t; }

    std::span<double> values() { return values_; }
    std::span<const double> values() const { return values_; }

    std::size_t index(std::size_t i, std::size_t j = 0, std::size_t k = 0) const
    {
        return i + extent_[0] * (j + extent_[1] * k);
    }
    double& at(std::size_t i, std::size_t j = 0, std::size_t k = 0) { return values_[index(i, j, k)]; }
    double at(std::size_t i, std::size_t j = 0, std::size_t k = 0) const { return values_[index(i, j, k)]; }

    double min() const;
    double max() const;
    /// Sum of f1 h^dim over the grid.
    double total() const;

private:
    int dimension_;
    std::array<std::size_t, 3> extent_;
    double spacing_;
    double time_ = 0.0;
    std::vector<double> values_;
};

/// Generation by direct collisions with the alpha particle: a per-cell
/// constant rate, switched on for t < duration.
struct SourceTerm {
    std::vector<double> rate;
    double duration = 0.0;
};

/// Largest step allowed by both the logistic update (tau/4) and the explicit
/// diffusion CFL bound h^2 / (2 dim D).
double max_stable_step(const IntricacyField& field, double diffusion, double tau = 1.0);

/// f1 <- f1 + f1 (1 - f1) dt / tau, pointwise. Requires dt <= tau / 4.
IntricacyField contagion_step(IntricacyField field, double dt, double tau = 1.0);

/// Explicit central-difference diffusion with reflecting walls.
/// Requires dt <= h^2 / (2 dim D).
IntricacyField diffusion_step(IntricacyField field, double dt, double diffusion);

struct Snapshot {
    double time = 0.0;
    std::vector<double> values;
};

struct FieldHistory {
    double spacing = 1.0;
    std::vector<Snapshot> snapshots;
};

struct EvolveOptions {
    double t_end = 1.0;
    double dt = 0.01;
    double diffusion = kReducedDiffusion;
    double tau = 1.0;
    std::optional<SourceTerm> source;
    /// Record a snapshot every this many time units (0 disables recording).
    double snapshot_interval = 0.0;
};

/// Operator-split evolution (diffusion, then contagion, then source) to t_end.
/// Throws ConfigError on step-size violations and NumericalError on
/// non-finite values or a breach of 0 <= f1 <= 1.
IntricacyField evolve(IntricacyField field, const EvolveOptions& options, FieldHistory* history = nullptr);

/// Position of the rightmost crossing of `level` in a 1D profile, linearly
/// interpolated. Empty when the profile never crosses the level.
std::optional<double> level_crossing(std::span<const double> values, double spacing, double level);

/// Least-squares slope of the level-crossing position against time over the
/// last half of the history. Empty ("no front") when no crossing moves.
std::optional<double> measure_front_speed(const FieldHistory& history, double level = 0.5);

enum class FrontMode {
    free,    ///< integrate the contagion-diffusion equation as written
    imposed, ///< clamp f1 = 0 ahead of a boundary advancing at a fixed speed
};

struct FrontRunOptions {
    FrontMode mode = FrontMode::free;
    double length = 150.0;
    double spacing = 0.1;
    double dt = 0.01;
    double t_end = 100.0;
    double diffusion = kReducedDiffusion;
    double tau = 1.0;
    /// Free mode: f1 = 1 on [0, seed_width).
    double seed_width = 2.0;
    /// Imposed mode: initial boundary position and its speed.
    double front_start = 20.0;
    double front_velocity = kImposedFrontSpeed;
    double snapshot_interval = 1.0;
    double level = 0.5;
};

struct FrontRun {
    FrontMode mode = FrontMode::free;
    FieldHistory history;
    /// Imposed-mode boundary position at each snapshot (empty in free mode).
    std::vector<double> boundary;
    std::optional<double> level_speed;
    /// Least-squares speed of the imposed boundary (imposed mode only).
    std::optional<double> boundary_speed;
};

FrontRun run_front(const FrontRunOptions& options);

/// Traveling-wave profile g(z) on [-Z, 0] with g(0) = 0 and g -> 1 to the left.
struct WaveProfile {
    std::vector<double> z;
    std::vector<double> g;
    std::vector<double> dg;
    double speed = 0.0;
    double diffusion = 0.0;
    /// g'(0) of the returned profile.
    double front_slope = 0.0;
    /// g'(0) found by bisection on the overshoot/undershoot classification.
    double bisection_slope = 0.0;
    /// Largest pointwise |D g'' + c g' + g (1 - g)| over interior samples.
    double max_residual = 0.0;

    double spacing() const { return z.size() > 1 ? z[1] - z[0] : 0.0; }
    /// Distance between the points where g = lo and g = hi.
    double rise_width(double lo = 0.01, double hi = 0.99) const;
    double tail_deviation() const { return g.empty() ? 1.0 : std::abs(g.front() - 1.0); }
};

struct WaveOptions {
    double domain_length = 20.0;
    double tolerance = 1e-8;
    double speed = kImposedFrontSpeed;
    double diffusion = kReducedDiffusion;
    /// Integration step; output spacing is step * output_stride.
    double step = 1e-3;
    std::size_t output_stride = 10;
    /// Initial bracket for the front slope g'(0).
    double slope_lo = -5.0;
    double slope_hi = 0.0;
};

/// Solves D g'' + c g' + g (1 - g) = 0 (defaults: D = 1/6, c = 3^{-1/2}).
/// Throws ConfigError for Z < 20 and NumericalError on bracket failure or a
/// residual above tolerance.
WaveProfile solve_traveling_wave(const WaveOptions& options);
WaveProfile solve_traveling_wave(double domain_length, double tolerance = 1e-8);

/// Front slope classification used by the bisection: +1 when a backward
/// integration from (g, g') = (0, slope) overshoots g = 1, -1 when it turns
/// back below 1.
int classify_front_slope(double slope, const WaveOptions& options);

} // namespace intricacy::kinetics
