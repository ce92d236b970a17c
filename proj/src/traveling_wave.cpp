#include "intricacy/kinetics.hpp"

#include "intricacy/error.hpp"

#include <algorithm>
#include <array>
#include <sstream>

namespace intricacy::kinetics {

namespace {

using State = std::array<double, 2>; // (g, g')

struct WaveOde {
    double speed;
    double diffusion;

    State rhs(const State& s) const
    {
        return {s[1], -(speed * s[1] + s[0] * (1.0 - s[0])) / diffusion};
    }

    State rk4(const State& s, double h) const
    {
        auto axpy = [](const State& a, double w, const State& b) { return State{a[0] + w * b[0], a[1] + w * b[1]}; };
        State k1 = rhs(s);
        State k2 = rhs(axpy(s, 0.5 * h, k1));
        State k3 = rhs(axpy(s, 0.5 * h, k2));
        State k4 = rhs(axpy(s, h, k3));
        return {s[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
                s[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])};
    }

    // Growth rate of 1 - g near the saturated state: D mu^2 + c mu - 1 = 0.
    double tail_rate() const
    {
        return (-speed + std::sqrt(speed * speed + 4.0 * diffusion)) / (2.0 * diffusion);
    }

    // Second-order coefficient b in 1 - g = a E + b E^2, E = exp(mu z).
    double tail_quadratic(double a) const
    {
        double mu = tail_rate();
        return -a * a / (4.0 * diffusion * mu * mu + 2.0 * speed * mu - 1.0);
    }
};

void validate(const WaveOptions& o)
{
    if (o.domain_length < 20.0)
        throw ConfigError("traveling-wave domain must be at least 20 mean free paths");
    if (!(o.tolerance > 0.0) || !(o.step > 0.0) || o.step > 0.01 || o.output_stride == 0)
        throw ConfigError("traveling-wave tolerance/step invalid (step must be <= 0.01)");
    if (!(o.diffusion > 0.0) || !(o.speed > 0.0))
        throw ConfigError("traveling-wave speed and diffusion must be positive");
}

} // namespace

int classify_front_slope(double slope, const WaveOptions& o)
{
    WaveOde ode{o.speed, o.diffusion};
    State s{0.0, slope};
    const double h = -o.step;
    const auto max_steps = static_cast<std::size_t>(3.0 * o.domain_length / o.step);
    for (std::size_t i = 0; i < max_steps; ++i) {
        if (s[0] > 1.0)
            return +1;
        // Walking left, g must keep rising; g' >= 0 means it turned back.
        if (s[1] >= 0.0 || s[0] < 0.0)
            return -1;
        s = ode.rk4(s, h);
    }
    return s[0] >= 1.0 ? +1 : -1;
}

WaveProfile solve_traveling_wave(double domain_length, double tolerance)
{
    WaveOptions o;
    o.domain_length = domain_length;
    o.tolerance = tolerance;
    return solve_traveling_wave(o);
}

WaveProfile solve_traveling_wave(const WaveOptions& o)
{
    validate(o);
    const WaveOde ode{o.speed, o.diffusion};

    // Shooting on g'(0).
    double lo = o.slope_lo;
    double hi = o.slope_hi;
    if (classify_front_slope(lo, o) != +1 || classify_front_slope(hi, o) != -1) {
        std::ostringstream os;
        os << "traveling-wave bracket failure: slopes [" << lo << ", " << hi
           << "] do not straddle the overshoot/undershoot boundary";
        throw NumericalError(os.str());
    }
    while (hi - lo > 1e-12) {
        double mid = 0.5 * (lo + hi);
        (classify_front_slope(mid, o) > 0 ? lo : hi) = mid;
    }
    const double bisection_slope = 0.5 * (lo + hi);

    // Profile: integrate rightward from the g -> 1 manifold, where the
    // spurious mode decays, up to the first zero of g.
    const double mu = ode.tail_rate();
    const double h0 = 1e-9;
    const double a0 = h0; // b a0^2 is far below round-off
    const double b0 = ode.tail_quadratic(a0);
    const State start{1.0 - (a0 + b0), -(mu * a0 + 2.0 * mu * b0)};

    double length = 0.0;
    {
        State s = start;
        const auto max_steps = static_cast<std::size_t>(200.0 / o.step);
        std::size_t i = 0;
        for (; i < max_steps; ++i) {
            State next = ode.rk4(s, o.step);
            if (next[0] <= 0.0) {
                // Locate the zero inside this step by bisection on the step fraction.
                double flo = 0.0, fhi = 1.0;
                for (int it = 0; it < 80; ++it) {
                    double f = 0.5 * (flo + fhi);
                    (ode.rk4(s, f * o.step)[0] > 0.0 ? flo : fhi) = f;
                }
                length = (static_cast<double>(i) + 0.5 * (flo + fhi)) * o.step;
                break;
            }
            s = next;
        }
        if (length == 0.0)
            throw NumericalError("traveling-wave profile never reached g = 0");
    }

    // Re-integrate on a uniform grid landing exactly on the zero.
    const std::size_t stride = o.output_stride;
    const auto blocks = static_cast<std::size_t>(std::ceil(length / (o.step * static_cast<double>(stride))));
    const std::size_t n = blocks * stride;
    const double h = length / static_cast<double>(n);
    const double dz = h * static_cast<double>(stride);

    std::vector<double> gs, dgs;
    gs.reserve(blocks + 1);
    {
        State s = start;
        gs.push_back(s[0]);
        dgs.push_back(s[1]);
        for (std::size_t i = 1; i <= n; ++i) {
            s = ode.rk4(s, h);
            if (i % stride == 0) {
                gs.push_back(s[0]);
                dgs.push_back(s[1]);
            }
        }
        gs.back() = 0.0;
    }

    WaveProfile profile;
    profile.speed = o.speed;
    profile.diffusion = o.diffusion;
    profile.bisection_slope = bisection_slope;

    // Assemble on [-Z, 0]: analytic tail left of the integration start.
    const double z_start = -static_cast<double>(blocks) * dz;
    const auto total = static_cast<std::size_t>(std::ceil(o.domain_length / dz - 1e-9));
    for (std::size_t k = 0; k <= total; ++k) {
        double z = -static_cast<double>(total - k) * dz;
        if (z < z_start - 0.5 * dz) {
            double e = std::exp(mu * (z - z_start));
            double hh = a0 * e + b0 * e * e;
            profile.z.push_back(z);
            profile.g.push_back(1.0 - hh);
            profile.dg.push_back(-(mu * a0 * e + 2.0 * mu * b0 * e * e));
        } else {
            auto idx = static_cast<std::size_t>(std::llround((z - z_start) / dz));
            profile.z.push_back(z);
            profile.g.push_back(gs[idx]);
            profile.dg.push_back(dgs[idx]);
        }
    }
    profile.z.back() = 0.0;
    profile.front_slope = profile.dg.back();

    if (std::abs(profile.front_slope - bisection_slope) > 1e-6) {
        std::ostringstream os;
        os << "traveling-wave slopes disagree: shooting " << bisection_slope << ", profile "
           << profile.front_slope;
        throw NumericalError(os.str());
    }

    // Residual with a sixth-order central difference for g''.
    double worst = 0.0;
    const auto& dg = profile.dg;
    for (std::size_t i = 3; i + 3 < dg.size(); ++i) {
        double g2 = (-dg[i - 3] + 9.0 * dg[i - 2] - 45.0 * dg[i - 1] + 45.0 * dg[i + 1] - 9.0 * dg[i + 2] +
                     dg[i + 3]) / (60.0 * dz);
        double gi = profile.g[i];
        double r = o.diffusion * g2 + o.speed * dg[i] + gi * (1.0 - gi);
        worst = std::max(worst, std::abs(r));
    }
    profile.max_residual = worst;
    if (worst > o.tolerance) {
        std::ostringstream os;
        os << "traveling-wave residual " << worst << " exceeds tolerance " << o.tolerance;
        throw NumericalError(os.str());
    }
    return profile;
}

double WaveProfile::rise_width(double lo, double hi) const
{
    // g decreases left to right; find where it passes hi and lo.
    auto crossing = [&](double level) {
        for (std::size_t i = 0; i + 1 < g.size(); ++i) {
            if (g[i] >= level && g[i + 1] < level) {
                double w = (g[i] - level) / (g[i] - g[i + 1]);
                return z[i] + w * (z[i + 1] - z[i]);
            }
        }
        return z.empty() ? 0.0 : z.back();
    };
    return crossing(lo) - crossing(hi);
}

} // namespace intricacy::kinetics
