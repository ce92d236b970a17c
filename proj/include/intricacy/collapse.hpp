#pragma once

// Stochastic fluctuations of measurement-channel probabilities driven by the
// growth of intricacy, with absorbing boundaries. Times are in units of the
// mean free time tau unless a model says otherwise.

#include "intricacy/kinetics.hpp"
#include "intricacy/rng.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

namespace intricacy::collapse {

struct ChannelState {
    std::vector<double> p;
    std::vector<bool> mute;
    std::vector<bool> absorbed;
    double time = 0.0;

    /// Validates the simplex (sum 1 to 1e-12, entries >= 0). Channels that
    /// start at exactly zero are absorbed from the outset.
    static ChannelState make(std::vector<double> p, std::vector<bool> mute = {});

    std::size_t channels() const { return p.size(); }
    std::size_t active() const;
    bool collapsed() const { return active() == 1; }
    std::optional<std::size_t> winner() const;
};

enum class ScheduleKind { constant, logistic, from_field, cascade };

std::string to_string(ScheduleKind k);
ScheduleKind schedule_kind_from_string(const std::string& s);

/// Per-cell, per-channel intricacy measures f_{beta j}(t), each in [0, 1].
class IntricacySchedule {
public:
    /// f stays at its initial value.
    static IntricacySchedule constant(Eigen::MatrixXd f);
    /// Each cell follows df = f (1 - f) dt / tau from its initial value.
    static IntricacySchedule logistic(Eigen::MatrixXd f0, double tau = 1.0);
    /// f = min(1, f0 exp(rate t)).
    static IntricacySchedule cascade(Eigen::MatrixXd f0, double rate);
    /// Piecewise-linear in time between frames, held after the last one.
    static IntricacySchedule from_frames(std::vector<double> times, std::vector<Eigen::MatrixXd> frames);
    /// Channel `channel` takes the kinetics field cell values; the others are zero.
    static IntricacySchedule from_field(const kinetics::FieldHistory& history, std::size_t channel,
                                        std::size_t channels);

    /// Spreads each channel's summed intricacy over ceil(max sum) cells.
    static Eigen::MatrixXd cells_for_sums(const std::vector<double>& sums);

    ScheduleKind kind() const { return kind_; }
    std::size_t cells() const { return static_cast<std::size_t>(initial_.rows()); }
    std::size_t channels() const { return static_cast<std::size_t>(initial_.cols()); }

    Eigen::MatrixXd at(double t) const;
    /// Column sums of at(t).
    Eigen::VectorXd sums(double t) const;

private:
    IntricacySchedule(ScheduleKind kind, Eigen::MatrixXd initial);

    ScheduleKind kind_;
    Eigen::MatrixXd initial_;
    double rate_ = 1.0;
    std::vector<double> times_;
    std::vector<Eigen::MatrixXd> frames_;
};

enum class AssumptionII { interpolation, custom };

struct FluctuationModel {
    /// 2K, with K = 4/(3 pi) the trace of each disorder part.
    double prefactor = 8.0 / (3.0 * std::numbers::pi);
    double tau = 1.0;
    AssumptionII mode = AssumptionII::interpolation;
    /// Custom mode: channel trace fraction w(p), with w(0) = 0 and w(1) = 1.
    std::function<double(double)> trace_profile;
    std::string profile_name = "interpolation";

    double weight(double p) const { return mode == AssumptionII::interpolation ? p : trace_profile(p); }

    /// "sine": w = sin(pi p / 2); "power": w = p^exponent with 0 < exponent <= 1.
    static FluctuationModel custom(const std::string& profile, double exponent = 1.0);
};

struct CovarianceDiagnostics {
    double repair_distance = 0.0; ///< Frobenius norm of the PSD repair
    bool warning = false;         ///< repair above the tolerance
};

/// Channel covariance for one step of length dt. Off-diagonal entries are
/// -prefactor w_j w_j' (dt/tau) sum_beta (f_bj + f_bj') (1 - sum_{k != j,j'} w_k f_bk);
/// diagonal entries make every row sum to zero. Mute channels use f = 0.
Eigen::MatrixXd covariance_matrix(const ChannelState& state, const Eigen::MatrixXd& f, const FluctuationModel& model,
                                  double dt, CovarianceDiagnostics* diagnostics = nullptr,
                                  double repair_tolerance = 1e-12);

enum class NoiseKind { gaussian, compound_poisson };

struct StepPolicy {
    double dt = 0.01;
    /// Shrink dt until every active channel's standard deviation is at most
    /// sigma_fraction * min(p_j, 1 - p_j).
    double sigma_fraction = 0.1;
    double absorption_threshold = 1e-9;
    NoiseKind noise = NoiseKind::gaussian;
    /// Compound-Poisson jump size as a fraction of min(p_j, p_j').
    double jump_fraction = 0.05;
};

/// Zero-mean increment with covariance C (before clamping). Exactly zero-sum.
Eigen::VectorXd sample_increment(const Eigen::MatrixXd& covariance, const ChannelState& state, NoiseKind noise,
                                 double jump_fraction, Rng& rng);

struct StepReport {
    double dt = 0.0;
    double clamp_bias = 0.0; ///< probability mass moved by clamping and absorption
    double repair_distance = 0.0;
    bool warning = false;
};

/// One step: covariance at the current time, adaptive dt, increment, clamp
/// negatives, renormalise, absorb channels below the threshold.
StepReport fluctuation_step(ChannelState& state, const IntricacySchedule& schedule, const FluctuationModel& model,
                            const StepPolicy& policy, Rng& rng);

struct TrajectoryPoint {
    double time = 0.0;
    std::vector<double> p;
};

struct CollapseOutcome {
    bool collapsed = false;
    std::optional<std::size_t> winner;
    double collapse_time = 0.0;
    std::size_t steps = 0;
    double clamp_bias = 0.0;
    std::size_t revivals = 0;
    bool psd_warning = false;
    std::vector<TrajectoryPoint> trajectory;
};

struct TrialOptions {
    std::size_t max_steps = 10'000'000;
    /// Keep every n-th state in the trajectory (0 keeps none).
    std::size_t record_every = 0;
};

CollapseOutcome run_trial(ChannelState state, const IntricacySchedule& schedule, const FluctuationModel& model,
                          const StepPolicy& policy, Rng& rng, const TrialOptions& options = {});

struct TrialRecord {
    std::size_t trial = 0;
    long winner = -1; ///< -1: no collapse within the horizon, or failure
    std::size_t steps = 0;
    double collapse_time = 0.0;
    double clamp_bias = 0.0;
    bool failed = false;
};

struct BornReport {
    std::size_t trials = 0;
    std::vector<std::size_t> wins;
    std::vector<double> frequency;
    std::vector<double> std_error; ///< binomial sqrt(f (1 - f) / n)
    std::size_t no_collapse = 0;
    std::size_t failures = 0;
    std::size_t revivals = 0;
    double max_clamp_bias = 0.0;
    std::vector<TrialRecord> records;
};

struct BornOptions {
    std::size_t trials = 10'000;
    std::uint64_t seed = 1;
    std::size_t threads = 1;
    TrialOptions trial;
};

/// Needs at least 1000 trials. Trial i runs on make_rng(seed, i); results do
/// not depend on `threads`.
BornReport born_rule_experiment(const ChannelState& initial, const IntricacySchedule& schedule,
                                const FluctuationModel& model, const StepPolicy& policy, const BornOptions& options);

} // namespace intricacy::collapse
