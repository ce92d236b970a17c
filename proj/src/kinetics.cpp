#include "intricacy/kinetics.hpp"

#include "intricacy/error.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

namespace intricacy::kinetics {

namespace {

constexpr double kStepSlack = 1.0 + 1e-12;

void require_finite_bounded(const IntricacyField& field)
{
    for (std::size_t i = 0; i < field.size(); ++i) {
        double v = field.values()[i];
        if (!std::isfinite(v)) {
            std::ostringstream os;
            os << "non-finite intricacy at cell " << i << ", t = " << field.time();
            throw NumericalError(os.str());
        }
        if (v < 0.0 || v > 1.0) {
            std::ostringstream os;
            os << "intricacy left [0, 1] at cell " << i << " (value " << v << ", t = " << field.time() << ")";
            throw NumericalError(os.str());
        }
    }
}

void check_contagion_step(double dt, double tau)
{
    if (!(tau > 0.0))
        throw ConfigError("mean free time must be positive");
    if (!(dt > 0.0) || dt > 0.25 * tau * kStepSlack) {
        std::ostringstream os;
        os << "contagion step dt = " << dt << " violates 0 < dt <= tau/4 = " << 0.25 * tau;
        throw ConfigError(os.str());
    }
}

double cfl_limit(const IntricacyField& field, double diffusion)
{
    double h = field.spacing();
    return h * h / (2.0 * field.dimension() * diffusion);
}

void check_diffusion_step(const IntricacyField& field, double dt, double diffusion)
{
    if (diffusion < 0.0)
        throw ConfigError("diffusion coefficient must be non-negative");
    if (!(dt > 0.0))
        throw ConfigError("time step must be positive");
    if (diffusion > 0.0 && dt > cfl_limit(field, diffusion) * kStepSlack) {
        std::ostringstream os;
        os << "diffusion step dt = " << dt << " violates the CFL bound h^2/(2 dim D) = "
           << cfl_limit(field, diffusion);
        throw ConfigError(os.str());
    }
}

} // namespace

IntricacyField::IntricacyField(int dimension, std::array<std::size_t, 3> extent, double spacing)
    : dimension_(dimension), extent_(extent), spacing_(spacing)
{
    if (dimension != 1 && dimension != 3)
        throw ConfigError("intricacy field dimension must be 1 or 3");
    if (!(spacing > 0.0))
        throw ConfigError("grid spacing must be positive");
    if (dimension == 1)
        extent_[1] = extent_[2] = 1;
    if (extent_[0] == 0 || extent_[1] == 0 || extent_[2] == 0)
        throw ConfigError("grid extent must be non-zero");
    values_.assign(extent_[0] * extent_[1] * extent_[2], 0.0);
}

IntricacyField IntricacyField::line(std::size_t points, double spacing)
{
    return IntricacyField(1, {points, 1, 1}, spacing);
}

IntricacyField IntricacyField::cube(std::size_t points_per_axis, double spacing)
{
    return IntricacyField(3, {points_per_axis, points_per_axis, points_per_axis}, spacing);
}

double IntricacyField::min() const
{
    return *std::min_element(values_.begin(), values_.end());
}

double IntricacyField::max() const
{
    return *std::max_element(values_.begin(), values_.end());
}

double IntricacyField::total() const
{
    return std::accumulate(values_.begin(), values_.end(), 0.0) * std::pow(spacing_, dimension_);
}

double max_stable_step(const IntricacyField& field, double diffusion, double tau)
{
    double limit = 0.25 * tau;
    if (diffusion > 0.0)
        limit = std::min(limit, cfl_limit(field, diffusion));
    return limit;
}

IntricacyField contagion_step(IntricacyField field, double dt, double tau)
{
    check_contagion_step(dt, tau);
    double rate = dt / tau;
    for (double& f : field.values()) {
        f += f * (1.0 - f) * rate;
        // 1 + (1 - 2f) dt/tau >= 0 keeps the map monotone; round-off only.
        f = std::clamp(f, 0.0, 1.0);
    }
    field.set_time(field.time() + dt);
    return field;
}

IntricacyField diffusion_step(IntricacyField field, double dt, double diffusion)
{
    check_diffusion_step(field, dt, diffusion);
    if (diffusion == 0.0)
        return field;

    const auto& n = field.extent();
    const double k = diffusion * dt / (field.spacing() * field.spacing());
    const std::vector<double> old(field.values().begin(), field.values().end());
    auto out = field.values();

    // Reflecting walls: a missing neighbour contributes the cell's own value,
    // so every stencil row sums to zero and the total is conserved.
    for (std::size_t c = 0; c < n[2]; ++c) {
        for (std::size_t b = 0; b < n[1]; ++b) {
            for (std::size_t a = 0; a < n[0]; ++a) {
                std::size_t idx = field.index(a, b, c);
                double centre = old[idx];
                double lap = 0.0;
                lap += (a > 0 ? old[idx - 1] : centre) - centre;
                lap += (a + 1 < n[0] ? old[idx + 1] : centre) - centre;
                if (field.dimension() == 3) {
                    std::size_t sy = n[0];
                    std::size_t sz = n[0] * n[1];
                    lap += (b > 0 ? old[idx - sy] : centre) - centre;
                    lap += (b + 1 < n[1] ? old[idx + sy] : centre) - centre;
                    lap += (c > 0 ? old[idx - sz] : centre) - centre;
                    lap += (c + 1 < n[2] ? old[idx + sz] : centre) - centre;
                }
                out[idx] = centre + k * lap;
            }
        }
    }
    field.set_time(field.time() + dt);
    return field;
}

IntricacyField evolve(IntricacyField field, const EvolveOptions& options, FieldHistory* history)
{
    if (!(options.t_end >= field.time()))
        throw ConfigError("t_end lies before the field time");
    check_contagion_step(options.dt, options.tau);
    check_diffusion_step(field, options.dt, options.diffusion);
    if (options.source && options.source->rate.size() != field.size())
        throw ConfigError("source rate size does not match the grid");

    const double t0 = field.time();
    const auto steps = static_cast<std::size_t>(std::llround((options.t_end - t0) / options.dt));
    std::size_t snapshot_every = 0;
    if (history) {
        history->spacing = field.spacing();
        if (options.snapshot_interval > 0.0)
            snapshot_every = std::max<std::size_t>(1, std::llround(options.snapshot_interval / options.dt));
        history->snapshots.push_back({field.time(), {field.values().begin(), field.values().end()}});
    }

    for (std::size_t s = 1; s <= steps; ++s) {
        const double t_before = t0 + static_cast<double>(s - 1) * options.dt;
        field = diffusion_step(std::move(field), options.dt, options.diffusion);
        field = contagion_step(std::move(field), options.dt, options.tau);
        if (options.source && t_before < options.source->duration) {
            auto f = field.values();
            for (std::size_t i = 0; i < f.size(); ++i)
                f[i] = std::min(1.0, f[i] + options.source->rate[i] * options.dt);
        }
        // Accumulating dt drifts; pin the clock to the step count.
        field.set_time(t0 + static_cast<double>(s) * options.dt);
        require_finite_bounded(field);
        if (snapshot_every && s % snapshot_every == 0)
            history->snapshots.push_back({field.time(), {field.values().begin(), field.values().end()}});
    }
    return field;
}

std::optional<double> level_crossing(std::span<const double> values, double spacing, double level)
{
    for (std::size_t i = values.size(); i-- > 0;) {
        if (values[i] >= level) {
            if (i + 1 == values.size())
                return std::nullopt; // saturated up to the wall
            double a = values[i];
            double b = values[i + 1];
            double frac = (a - level) / (a - b);
            return (static_cast<double>(i) + frac) * spacing;
        }
    }
    return std::nullopt;
}

namespace {

std::optional<double> least_squares_slope(const std::vector<double>& t, const std::vector<double>& x)
{
    if (t.size() < 2)
        return std::nullopt;
    double n = static_cast<double>(t.size());
    double mt = std::accumulate(t.begin(), t.end(), 0.0) / n;
    double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    double stt = 0.0, stx = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        stt += (t[i] - mt) * (t[i] - mt);
        stx += (t[i] - mt) * (x[i] - mx);
    }
    if (stt == 0.0)
        return std::nullopt;
    return stx / stt;
}

} // namespace

std::optional<double> measure_front_speed(const FieldHistory& history, double level)
{
    const auto& snaps = history.snapshots;
    if (snaps.size() < 2)
        return std::nullopt;
    std::vector<double> t, x;
    for (std::size_t i = snaps.size() / 2; i < snaps.size(); ++i) {
        auto pos = level_crossing(snaps[i].values, history.spacing, level);
        if (!pos)
            continue;
        t.push_back(snaps[i].time);
        x.push_back(*pos);
    }
    if (t.size() < 2)
        return std::nullopt;
    if (std::all_of(x.begin(), x.end(), [&](double v) { return v == x.front(); }))
        return std::nullopt;
    return least_squares_slope(t, x);
}

FrontRun run_front(const FrontRunOptions& o)
{
    if (!(o.length > 0.0) || !(o.spacing > 0.0) || !(o.t_end > 0.0))
        throw ConfigError("front run needs positive length, spacing and duration");
    const auto points = static_cast<std::size_t>(std::llround(o.length / o.spacing)) + 1;
    IntricacyField field = IntricacyField::line(points, o.spacing);

    FrontRun run;
    run.mode = o.mode;

    if (o.mode == FrontMode::free) {
        for (std::size_t i = 0; i < points; ++i)
            if (static_cast<double>(i) * o.spacing < o.seed_width)
                field.at(i) = 1.0;
        EvolveOptions ev;
        ev.t_end = o.t_end;
        ev.dt = o.dt;
        ev.diffusion = o.diffusion;
        ev.tau = o.tau;
        ev.snapshot_interval = o.snapshot_interval;
        evolve(std::move(field), ev, &run.history);
        run.level_speed = measure_front_speed(run.history, o.level);
        return run;
    }

    if (o.front_start + o.front_velocity * o.t_end >= o.length)
        throw ConfigError("imposed front would leave the domain before t_end");
    check_contagion_step(o.dt, o.tau);
    check_diffusion_step(field, o.dt, o.diffusion);

    // Start from the traveling-wave profile behind the boundary.
    // tau D g'' + tau c g' + g (1 - g) = 0 is the tau = 1 equation rescaled.
    WaveOptions wo;
    wo.speed = o.front_velocity * o.tau;
    wo.diffusion = o.diffusion * o.tau;
    WaveProfile profile = solve_traveling_wave(wo);
    auto profile_at = [&](double z) {
        if (z <= profile.z.front())
            return 1.0;
        if (z >= 0.0)
            return 0.0;
        double u = (z - profile.z.front()) / profile.spacing();
        auto i = static_cast<std::size_t>(u);
        i = std::min(i, profile.z.size() - 2);
        double w = u - static_cast<double>(i);
        return (1.0 - w) * profile.g[i] + w * profile.g[i + 1];
    };
    for (std::size_t i = 0; i < points; ++i)
        field.at(i) = profile_at(static_cast<double>(i) * o.spacing - o.front_start);

    auto boundary_at = [&](double t) { return o.front_start + o.front_velocity * t; };
    auto clamp_ahead = [&](double xb) {
        for (std::size_t i = 0; i < points; ++i)
            if (static_cast<double>(i) * o.spacing >= xb)
                field.at(i) = 0.0;
    };

    run.history.spacing = o.spacing;
    const auto steps = static_cast<std::size_t>(std::llround(o.t_end / o.dt));
    const std::size_t every = std::max<std::size_t>(1, std::llround(o.snapshot_interval / o.dt));
    run.history.snapshots.push_back({0.0, {field.values().begin(), field.values().end()}});
    run.boundary.push_back(boundary_at(0.0));
    for (std::size_t s = 1; s <= steps; ++s) {
        field = diffusion_step(std::move(field), o.dt, o.diffusion);
        field = contagion_step(std::move(field), o.dt, o.tau);
        const double t = static_cast<double>(s) * o.dt;
        field.set_time(t);
        clamp_ahead(boundary_at(t));
        require_finite_bounded(field);
        if (s % every == 0) {
            run.history.snapshots.push_back({t, {field.values().begin(), field.values().end()}});
            run.boundary.push_back(boundary_at(t));
        }
    }
    run.level_speed = measure_front_speed(run.history, o.level);

    std::vector<double> t, x;
    for (std::size_t i = 0; i < run.history.snapshots.size(); ++i) {
        t.push_back(run.history.snapshots[i].time);
        x.push_back(run.boundary[i]);
    }
    run.boundary_speed = least_squares_slope(t, x);
    return run;
}

} // namespace intricacy::kinetics
