#include "intricacy/detector_model.hpp"

#include "intricacy/error.hpp"
#include "intricacy/kinetics.hpp"

#include <cmath>
#include <string>

namespace intricacy::detector {

namespace {

void require_positive(double v, const char* name)
{
    if (!(v > 0.0) || !std::isfinite(v))
        throw ConfigError(std::string("detector parameter '") + name + "' must be strictly positive");
}

} // namespace

void DetectorParams::validate() const
{
    require_positive(temperature, "temperature");
    require_positive(atom_mass, "atom_mass");
    require_positive(mean_free_path, "mean_free_path");
    require_positive(mean_free_time, "mean_free_time");
    require_positive(number_density, "number_density");
    require_positive(box_size, "box_size");
    require_positive(track_length, "track_length");
    require_positive(excitation_spacing, "excitation_spacing");
    require_positive(cell_size, "cell_size");
    require_positive(env_number_density, "env_number_density");
    require_positive(env_molecule_mass, "env_molecule_mass");
    if (cell_size < mean_free_path)
        throw ConfigError("detector parameter 'cell_size' must be >= mean_free_path (cells of at least one mean free path)");
}

double thermal_velocity(double temperature, double mass)
{
    if (temperature < 0.0 || !(mass > 0.0))
        throw ConfigError("thermal velocity needs T >= 0 and m > 0");
    return std::sqrt(3.0 * kBoltzmann * temperature / (2.0 * mass));
}

double thermal_velocity(const DetectorParams& params)
{
    params.validate();
    return thermal_velocity(params.temperature, params.atom_mass);
}

double front_velocity(const DetectorParams& params)
{
    return thermal_velocity(params) / std::sqrt(3.0);
}

double diffusion_coefficient(double mean_free_path, double mean_free_time)
{
    if (!(mean_free_path > 0.0) || !(mean_free_time > 0.0))
        throw ConfigError("diffusion coefficient needs lambda > 0 and tau > 0");
    return mean_free_path * mean_free_path / (6.0 * mean_free_time);
}

double diffusion_coefficient(const DetectorParams& params)
{
    params.validate();
    return diffusion_coefficient(params.mean_free_path, params.mean_free_time);
}

double wall_collision_rate(const DetectorParams& params)
{
    params.validate();
    const double mean_speed =
        std::sqrt(8.0 * kBoltzmann * params.temperature / (std::numbers::pi * params.env_molecule_mass));
    const double flux = params.env_number_density * mean_speed / 4.0;
    return flux * params.box_size * params.box_size;
}

double fluctuation_rate_from_intricacy(double summed_intricacy, double mean_free_time)
{
    if (summed_intricacy < 0.0 || !(mean_free_time > 0.0))
        throw ConfigError("fluctuation rate needs sum f >= 0 and tau > 0");
    return kFluctuationPrefactor * summed_intricacy / mean_free_time;
}

FluctuationRate fluctuation_rate_A(const DetectorParams& params, double p1, double p2)
{
    params.validate();
    if (p1 < 0.0 || p2 < 0.0 || std::abs(p1 + p2 - 1.0) > 1e-12)
        throw ConfigError("channel probabilities must be non-negative and sum to 1");
    if (params.track_length > params.box_size)
        throw ConfigError("track must lie inside the box (track_length <= box_size)");

    FluctuationRate r;
    r.p1p2 = p1 * p2;
    r.cells_on_track = params.track_length / params.cell_size;
    r.cell_intricacy =
        1.0 / (params.number_density * params.excitation_spacing * params.cell_size * params.cell_size);
    r.summed_intricacy = r.cells_on_track * r.cell_intricacy;
    r.rate = fluctuation_rate_from_intricacy(r.summed_intricacy, params.mean_free_time);
    const double ratio = params.excitation_spacing / params.cell_size;
    r.quoted_scaling = 1e11 * ratio * ratio;
    return r;
}

EstimateReport detector_estimates(const DetectorParams& params, double front_width_mfp)
{
    params.validate();
    if (!(front_width_mfp > 0.0))
        throw ConfigError("front width must be positive");
    EstimateReport r;
    r.thermal_velocity = thermal_velocity(params);
    r.front_velocity = r.thermal_velocity / std::sqrt(3.0);
    r.diffusion_coefficient = diffusion_coefficient(params);
    r.fill_time = params.box_size / r.front_velocity;
    r.collision_rate = wall_collision_rate(params);
    r.concurrent_waves = r.collision_rate * r.fill_time;
    r.front_width = front_width_mfp * params.mean_free_path;
    r.active_front_regions = r.concurrent_waves * r.front_width / params.box_size;
    r.fluctuation_rate = fluctuation_rate_A(params, 0.5, 0.5).rate;
    return r;
}

EstimateReport detector_estimates(const DetectorParams& params)
{
    const auto profile = kinetics::solve_traveling_wave(20.0);
    return detector_estimates(params, profile.rise_width());
}

} // namespace intricacy::detector
