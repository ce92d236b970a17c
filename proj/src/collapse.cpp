#include "intricacy/collapse.hpp"

#include "intricacy/error.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <sstream>
#include <thread>

namespace intricacy::collapse {

namespace {

void check_unit_interval(const Eigen::MatrixXd& f, const char* what)
{
    if (f.rows() == 0 || f.cols() == 0)
        throw ConfigError(std::string(what) + ": intricacy matrix is empty");
    for (Eigen::Index i = 0; i < f.size(); ++i) {
        double v = f.data()[i];
        if (!std::isfinite(v) || v < 0.0 || v > 1.0)
            throw ConfigError(std::string(what) + ": intricacy values must lie in [0, 1]");
    }
}

// Orthonormal basis of the zero-sum subspace, as columns.
Eigen::MatrixXd zero_sum_basis(Eigen::Index n)
{
    Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(n, 1);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(ones);
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
    return q.rightCols(n - 1);
}

} // namespace

ChannelState ChannelState::make(std::vector<double> p, std::vector<bool> mute)
{
    if (p.size() < 2)
        throw ConfigError("collapse needs at least two channels");
    double sum = 0.0;
    for (double v : p) {
        if (!std::isfinite(v) || v < 0.0)
            throw ConfigError("channel probabilities must be finite and non-negative");
        sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-12) {
        std::ostringstream os;
        os << "channel probabilities must sum to 1 (got " << sum << ")";
        throw ConfigError(os.str());
    }
    if (mute.empty())
        mute.assign(p.size(), false);
    if (mute.size() != p.size())
        throw ConfigError("mute mask length differs from the number of channels");
    ChannelState s;
    s.p = std::move(p);
    s.mute = std::move(mute);
    s.absorbed.assign(s.p.size(), false);
    for (std::size_t j = 0; j < s.p.size(); ++j)
        s.absorbed[j] = s.p[j] == 0.0;
    return s;
}

std::size_t ChannelState::active() const
{
    return static_cast<std::size_t>(std::count(absorbed.begin(), absorbed.end(), false));
}

std::optional<std::size_t> ChannelState::winner() const
{
    if (!collapsed())
        return std::nullopt;
    return static_cast<std::size_t>(std::find(absorbed.begin(), absorbed.end(), false) - absorbed.begin());
}

std::string to_string(ScheduleKind k)
{
    switch (k) {
    case ScheduleKind::constant: return "constant";
    case ScheduleKind::logistic: return "logistic";
    case ScheduleKind::from_field: return "from-field";
    case ScheduleKind::cascade: return "cascade";
    }
    return "constant";
}

ScheduleKind schedule_kind_from_string(const std::string& s)
{
    if (s == "constant")
        return ScheduleKind::constant;
    if (s == "logistic")
        return ScheduleKind::logistic;
    if (s == "from-field")
        return ScheduleKind::from_field;
    if (s == "cascade")
        return ScheduleKind::cascade;
    throw ConfigError("unknown intricacy schedule '" + s + "' (constant, logistic, from-field, cascade)");
}

IntricacySchedule::IntricacySchedule(ScheduleKind kind, Eigen::MatrixXd initial)
    : kind_(kind), initial_(std::move(initial))
{
}

IntricacySchedule IntricacySchedule::constant(Eigen::MatrixXd f)
{
    check_unit_interval(f, "constant schedule");
    return IntricacySchedule(ScheduleKind::constant, std::move(f));
}

IntricacySchedule IntricacySchedule::logistic(Eigen::MatrixXd f0, double tau)
{
    check_unit_interval(f0, "logistic schedule");
    if (!(tau > 0.0) || !std::isfinite(tau))
        throw ConfigError("logistic schedule: tau must be positive");
    IntricacySchedule s(ScheduleKind::logistic, std::move(f0));
    s.rate_ = 1.0 / tau;
    return s;
}

IntricacySchedule IntricacySchedule::cascade(Eigen::MatrixXd f0, double rate)
{
    check_unit_interval(f0, "cascade schedule");
    if (!(rate >= 0.0) || !std::isfinite(rate))
        throw ConfigError("cascade schedule: rate must be non-negative");
    IntricacySchedule s(ScheduleKind::cascade, std::move(f0));
    s.rate_ = rate;
    return s;
}

IntricacySchedule IntricacySchedule::from_frames(std::vector<double> times, std::vector<Eigen::MatrixXd> frames)
{
    if (frames.empty() || times.size() != frames.size())
        throw ConfigError("field schedule: need one time per frame and at least one frame");
    for (std::size_t i = 0; i < frames.size(); ++i) {
        check_unit_interval(frames[i], "field schedule");
        if (frames[i].rows() != frames[0].rows() || frames[i].cols() != frames[0].cols())
            throw ConfigError("field schedule: frames differ in shape");
        if (i > 0 && !(times[i] > times[i - 1]))
            throw ConfigError("field schedule: frame times must increase strictly");
    }
    IntricacySchedule s(ScheduleKind::from_field, frames.front());
    s.times_ = std::move(times);
    s.frames_ = std::move(frames);
    return s;
}

IntricacySchedule IntricacySchedule::from_field(const kinetics::FieldHistory& history, std::size_t channel,
                                                std::size_t channels)
{
    if (channel >= channels || channels < 2)
        throw ConfigError("field schedule: channel index out of range");
    if (history.snapshots.empty())
        throw ConfigError("field schedule: history has no snapshots");
    std::vector<double> times;
    std::vector<Eigen::MatrixXd> frames;
    for (const auto& snap : history.snapshots) {
        Eigen::MatrixXd f = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(snap.values.size()),
                                                  static_cast<Eigen::Index>(channels));
        for (std::size_t i = 0; i < snap.values.size(); ++i)
            f(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(channel)) =
                std::clamp(snap.values[i], 0.0, 1.0);
        times.push_back(snap.time);
        frames.push_back(std::move(f));
    }
    return from_frames(std::move(times), std::move(frames));
}

Eigen::MatrixXd IntricacySchedule::cells_for_sums(const std::vector<double>& sums)
{
    if (sums.size() < 2)
        throw ConfigError("need intricacy sums for at least two channels");
    double top = 0.0;
    for (double s : sums) {
        if (!std::isfinite(s) || s < 0.0)
            throw ConfigError("intricacy sums must be finite and non-negative");
        top = std::max(top, s);
    }
    auto cells = static_cast<Eigen::Index>(std::max(1.0, std::ceil(top - 1e-12)));
    Eigen::MatrixXd f(cells, static_cast<Eigen::Index>(sums.size()));
    for (std::size_t j = 0; j < sums.size(); ++j)
        f.col(static_cast<Eigen::Index>(j)).setConstant(std::min(1.0, sums[j] / static_cast<double>(cells)));
    return f;
}

Eigen::MatrixXd IntricacySchedule::at(double t) const
{
    switch (kind_) {
    case ScheduleKind::constant:
        return initial_;
    case ScheduleKind::logistic: {
        double decay = std::exp(-rate_ * t);
        return initial_.unaryExpr([decay](double f0) {
            return f0 == 0.0 ? 0.0 : f0 / (f0 + (1.0 - f0) * decay);
        });
    }
    case ScheduleKind::cascade: {
        double grow = std::exp(rate_ * t);
        return initial_.unaryExpr([grow](double f0) { return std::min(1.0, f0 * grow); });
    }
    case ScheduleKind::from_field: {
        if (t <= times_.front())
            return frames_.front();
        if (t >= times_.back())
            return frames_.back();
        auto it = std::upper_bound(times_.begin(), times_.end(), t);
        auto k = static_cast<std::size_t>(it - times_.begin());
        double w = (t - times_[k - 1]) / (times_[k] - times_[k - 1]);
        return (1.0 - w) * frames_[k - 1] + w * frames_[k];
    }
    }
    return initial_;
}

Eigen::VectorXd IntricacySchedule::sums(double t) const
{
    return at(t).colwise().sum().transpose();
}

FluctuationModel FluctuationModel::custom(const std::string& profile, double exponent)
{
    FluctuationModel m;
    m.mode = AssumptionII::custom;
    if (profile == "sine") {
        m.trace_profile = [](double p) { return std::sin(0.5 * std::numbers::pi * p); };
        m.profile_name = "sine";
    } else if (profile == "power") {
        if (!(exponent > 0.0) || exponent > 1.0)
            throw ConfigError("power trace profile needs 0 < exponent <= 1");
        m.trace_profile = [exponent](double p) { return std::pow(p, exponent); };
        std::ostringstream os;
        os << "power(" << exponent << ")";
        m.profile_name = os.str();
    } else {
        throw ConfigError("unknown trace profile '" + profile + "' (sine, power)");
    }
    return m;
}

Eigen::MatrixXd covariance_matrix(const ChannelState& state, const Eigen::MatrixXd& f, const FluctuationModel& model,
                                  double dt, CovarianceDiagnostics* diagnostics, double repair_tolerance)
{
    const auto n = static_cast<Eigen::Index>(state.channels());
    if (f.cols() != n)
        throw ConfigError("intricacy schedule and channel state differ in channel count");
    if (!(model.tau > 0.0) || !(model.prefactor >= 0.0))
        throw ConfigError("fluctuation model needs tau > 0 and a non-negative prefactor");

    Eigen::VectorXd w(n);
    for (Eigen::Index j = 0; j < n; ++j)
        w(j) = state.absorbed[static_cast<std::size_t>(j)] ? 0.0 : model.weight(state.p[static_cast<std::size_t>(j)]);

    Eigen::MatrixXd fe = f;
    for (Eigen::Index j = 0; j < n; ++j)
        if (state.mute[static_cast<std::size_t>(j)])
            fe.col(j).setZero();

    const Eigen::VectorXd total = fe * w; // sum_k w_k f_bk per cell
    const double scale = model.prefactor * dt / model.tau;

    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(n, n);
    bool negative = false;
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index k = j + 1; k < n; ++k) {
            double wjk = w(j) * w(k);
            if (wjk == 0.0)
                continue;
            double s = 0.0;
            for (Eigen::Index b = 0; b < fe.rows(); ++b) {
                double outside = 1.0 - (total(b) - w(j) * fe(b, j) - w(k) * fe(b, k));
                s += (fe(b, j) + fe(b, k)) * outside;
            }
            double v = -scale * wjk * s;
            c(j, k) = c(k, j) = v;
            negative = negative || v > 0.0;
        }
    }
    for (Eigen::Index j = 0; j < n; ++j)
        c(j, j) = -(c.row(j).sum() - c(j, j));

    double repair = 0.0;
    if (negative) {
        // Negative pair weights can break positivity: clip on the zero-sum subspace.
        Eigen::MatrixXd b = zero_sum_basis(n);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(b.transpose() * c * b);
        Eigen::VectorXd lam = es.eigenvalues().cwiseMax(0.0);
        Eigen::MatrixXd fixed = b * es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose() *
                                b.transpose();
        repair = (fixed - c).norm();
        c = fixed;
    }
    if (diagnostics) {
        diagnostics->repair_distance = repair;
        diagnostics->warning = repair > repair_tolerance;
    }
    return c;
}

Eigen::VectorXd sample_increment(const Eigen::MatrixXd& covariance, const ChannelState& state, NoiseKind noise,
                                 double jump_fraction, Rng& rng)
{
    const Eigen::Index n = covariance.rows();
    Eigen::VectorXd xi = Eigen::VectorXd::Zero(n);

    bool pairwise = true;
    for (Eigen::Index j = 0; j < n && pairwise; ++j)
        for (Eigen::Index k = j + 1; k < n; ++k)
            if (covariance(j, k) > 0.0) {
                pairwise = false;
                break;
            }

    if (pairwise) {
        // C = sum_{j<k} c_jk (e_j - e_k)(e_j - e_k)^T with c_jk = -C_jk >= 0.
        std::normal_distribution<double> normal;
        for (Eigen::Index j = 0; j < n; ++j) {
            for (Eigen::Index k = j + 1; k < n; ++k) {
                double c = -covariance(j, k);
                if (c <= 0.0)
                    continue;
                double d = 0.0;
                if (noise == NoiseKind::gaussian) {
                    d = std::sqrt(c) * normal(rng);
                } else {
                    double pmin = std::min(state.p[static_cast<std::size_t>(j)], state.p[static_cast<std::size_t>(k)]);
                    double eta = jump_fraction * pmin;
                    if (eta <= 0.0)
                        continue;
                    std::poisson_distribution<long> count(c / (2.0 * eta * eta));
                    d = eta * static_cast<double>(count(rng) - count(rng));
                }
                xi(j) += d;
                xi(k) -= d;
            }
        }
        return xi;
    }

    if (noise == NoiseKind::compound_poisson)
        throw ConfigError("compound-Poisson increments need non-negative pair rates");
    Eigen::MatrixXd b = zero_sum_basis(n);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(b.transpose() * covariance * b);
    Eigen::VectorXd root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    std::normal_distribution<double> normal;
    Eigen::VectorXd z(n - 1);
    for (Eigen::Index i = 0; i < n - 1; ++i)
        z(i) = normal(rng);
    xi = b * (es.eigenvectors() * root.asDiagonal() * z);
    xi.array() -= xi.mean();
    return xi;
}

StepReport fluctuation_step(ChannelState& state, const IntricacySchedule& schedule, const FluctuationModel& model,
                            const StepPolicy& policy, Rng& rng)
{
    if (!(policy.dt > 0.0) || !(policy.sigma_fraction > 0.0) || !(policy.absorption_threshold >= 0.0))
        throw ConfigError("step policy needs dt > 0, sigma_fraction > 0, absorption_threshold >= 0");

    StepReport report;
    CovarianceDiagnostics diag;
    Eigen::MatrixXd unit = covariance_matrix(state, schedule.at(state.time), model, 1.0, &diag);
    report.repair_distance = diag.repair_distance;
    report.warning = diag.warning;

    double dt = policy.dt;
    for (std::size_t j = 0; j < state.channels(); ++j) {
        auto jj = static_cast<Eigen::Index>(j);
        if (state.absorbed[j] || unit(jj, jj) <= 0.0)
            continue;
        double bound = policy.sigma_fraction * std::min(state.p[j], 1.0 - state.p[j]);
        dt = std::min(dt, bound * bound / unit(jj, jj));
    }
    if (!(dt > 0.0) || !std::isfinite(dt))
        throw NumericalError("adaptive collapse step collapsed to zero");
    report.dt = dt;

    Eigen::VectorXd xi = sample_increment(unit * dt, state, policy.noise, policy.jump_fraction, rng);

    double bias = 0.0;
    double sum = 0.0;
    for (std::size_t j = 0; j < state.channels(); ++j) {
        if (state.absorbed[j])
            continue;
        double v = state.p[j] + xi(static_cast<Eigen::Index>(j));
        if (!std::isfinite(v))
            throw NumericalError("non-finite channel probability");
        if (v < 0.0) {
            bias += -v;
            v = 0.0;
        }
        state.p[j] = v;
        sum += v;
    }
    if (!(sum > 0.0))
        throw NumericalError("all channel probabilities vanished");
    for (double& v : state.p)
        v /= sum;

    sum = 0.0;
    for (std::size_t j = 0; j < state.channels(); ++j) {
        if (!state.absorbed[j] && state.p[j] < policy.absorption_threshold) {
            bias += state.p[j];
            state.p[j] = 0.0;
            state.absorbed[j] = true;
        }
        sum += state.p[j];
    }
    for (double& v : state.p)
        v /= sum;
    if (auto w = state.winner()) {
        std::fill(state.p.begin(), state.p.end(), 0.0);
        state.p[*w] = 1.0;
    }

    state.time += dt;
    report.clamp_bias = bias;
    return report;
}

CollapseOutcome run_trial(ChannelState state, const IntricacySchedule& schedule, const FluctuationModel& model,
                          const StepPolicy& policy, Rng& rng, const TrialOptions& options)
{
    if (schedule.channels() != state.channels())
        throw ConfigError("intricacy schedule and channel state differ in channel count");
    CollapseOutcome out;
    auto record = [&] {
        out.trajectory.push_back({state.time, state.p});
    };
    if (options.record_every > 0)
        record();

    while (!state.collapsed() && out.steps < options.max_steps) {
        StepReport r = fluctuation_step(state, schedule, model, policy, rng);
        ++out.steps;
        out.clamp_bias += r.clamp_bias;
        out.psd_warning = out.psd_warning || r.warning;
        for (std::size_t j = 0; j < state.channels(); ++j)
            if (state.absorbed[j] && state.p[j] != 0.0)
                ++out.revivals;
        if (options.record_every > 0 && out.steps % options.record_every == 0)
            record();
    }
    if (options.record_every > 0 && (out.trajectory.empty() || out.trajectory.back().time != state.time))
        record();

    out.collapsed = state.collapsed();
    out.winner = state.winner();
    out.collapse_time = state.time;
    return out;
}

BornReport born_rule_experiment(const ChannelState& initial, const IntricacySchedule& schedule,
                                const FluctuationModel& model, const StepPolicy& policy, const BornOptions& options)
{
    if (options.trials < 1000)
        throw ConfigError("Born-rule experiment needs at least 1000 trials");
    if (schedule.channels() != initial.channels())
        throw ConfigError("intricacy schedule and channel state differ in channel count");

    BornReport report;
    report.trials = options.trials;
    report.records.resize(options.trials);
    std::vector<std::size_t> revivals(options.trials, 0);
    std::mutex config_mutex;
    std::exception_ptr config_error;

    auto run_one = [&](std::size_t i) {
        TrialRecord& rec = report.records[i];
        rec.trial = i;
        Rng rng = make_rng(options.seed, i);
        try {
            CollapseOutcome o = run_trial(initial, schedule, model, policy, rng, options.trial);
            rec.steps = o.steps;
            rec.collapse_time = o.collapse_time;
            rec.clamp_bias = o.clamp_bias;
            rec.winner = o.winner ? static_cast<long>(*o.winner) : -1;
            revivals[i] = o.revivals;
        } catch (const NumericalError&) {
            rec.failed = true;
        } catch (...) {
            std::lock_guard lock(config_mutex);
            if (!config_error)
                config_error = std::current_exception();
        }
    };

    const std::size_t threads = std::max<std::size_t>(1, std::min(options.threads, options.trials));
    if (threads == 1) {
        for (std::size_t i = 0; i < options.trials; ++i)
            run_one(i);
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < threads; ++t)
            pool.emplace_back([&, t] {
                for (std::size_t i = t; i < options.trials; i += threads)
                    run_one(i);
            });
        for (auto& th : pool)
            th.join();
    }
    if (config_error)
        std::rethrow_exception(config_error);

    const std::size_t n = initial.channels();
    report.wins.assign(n, 0);
    for (std::size_t i = 0; i < options.trials; ++i) {
        const auto& rec = report.records[i];
        report.revivals += revivals[i];
        report.max_clamp_bias = std::max(report.max_clamp_bias, rec.clamp_bias);
        if (rec.failed)
            ++report.failures;
        else if (rec.winner < 0)
            ++report.no_collapse;
        else
            ++report.wins[static_cast<std::size_t>(rec.winner)];
    }
    const double total = static_cast<double>(options.trials);
    for (std::size_t j = 0; j < n; ++j) {
        double f = static_cast<double>(report.wins[j]) / total;
        report.frequency.push_back(f);
        report.std_error.push_back(std::sqrt(f * (1.0 - f) / total));
    }
    return report;
}

} // namespace intricacy::collapse
