#pragma once

// Gas/detector constants and the order-of-magnitude arithmetic built on them.
// All quantities are CGS.

#include <numbers>

namespace intricacy::detector {

inline constexpr double kBoltzmann = 1.380649e-16; // erg / K

/// 2K with K = 4/(3 pi): the prefactor of the channel-probability variance.
inline constexpr double kFluctuationPrefactor = 8.0 / (3.0 * std::numbers::pi);

struct DetectorParams {
    double temperature = 293.0;          // K
    double atom_mass = 6.63e-23;         // g, argon
    double mean_free_path = 1e-5;        // cm
    double mean_free_time = 1e-10;       // s
    double number_density = 1e19;        // cm^-3
    double box_size = 10.0;              // cm
    double track_length = 10.0;          // cm
    double excitation_spacing = 1e-5;    // cm, mean distance between excited atoms on the track
    double cell_size = 1e-4;             // cm, Gibbs cell edge
    double env_number_density = 2.5e19;  // cm^-3, air outside the box
    double env_molecule_mass = 4.81e-23; // g, mean air molecule

    /// Throws ConfigError naming the first violated invariant.
    void validate() const;

    /// Atoms per Gibbs cell, n Lambda^3.
    double atoms_per_cell() const { return number_density * cell_size * cell_size * cell_size; }
};

struct EstimateReport {
    double thermal_velocity = 0.0;      // cm/s
    double front_velocity = 0.0;        // cm/s
    double diffusion_coefficient = 0.0; // cm^2/s
    double fill_time = 0.0;             // s
    double collision_rate = 0.0;        // 1/s, environment molecules hitting the box
    double concurrent_waves = 0.0;
    double front_width = 0.0;           // cm
    double active_front_regions = 0.0;
    double fluctuation_rate = 0.0;      // 1/s, coefficient A
};

struct FluctuationRate {
    double rate = 0.0;           // A, 1/s
    double p1p2 = 0.0;           // reported separately; the variance rate is A p1 p2
    double cells_on_track = 0.0;
    double cell_intricacy = 0.0; // initial f_beta = 1 / (n l Lambda^2)
    double summed_intricacy = 0.0;
    double quoted_scaling = 0.0; // 1e11 (l / Lambda)^2 1/s
};

/// (3 k_B T / (2 m))^{1/2}. Accepts T = 0.
double thermal_velocity(double temperature, double mass);
double thermal_velocity(const DetectorParams& params);

/// One-dimensional coordinate velocity v / sqrt(3).
double front_velocity(const DetectorParams& params);

/// lambda^2 / (6 tau).
double diffusion_coefficient(double mean_free_path, double mean_free_time);
double diffusion_coefficient(const DetectorParams& params);

/// Kinetic-theory wall flux n v_mean / 4 of environment molecules on an area L^2.
double wall_collision_rate(const DetectorParams& params);

/// (8/3pi) (1/tau) sum_beta f_beta.
double fluctuation_rate_from_intricacy(double summed_intricacy, double mean_free_time);

/// Chain: cells on track = track/Lambda, f_beta = 1/(n l Lambda^2),
/// A = (8/3pi)(1/tau) sum f_beta. Throws ConfigError unless p1 + p2 = 1 and
/// Lambda >= lambda.
FluctuationRate fluctuation_rate_A(const DetectorParams& params, double p1, double p2);

/// Estimates with the active front width given in mean free paths.
EstimateReport detector_estimates(const DetectorParams& params, double front_width_mfp);

/// Same, taking the front width as the 0.01 -> 0.99 rise of the traveling wave.
EstimateReport detector_estimates(const DetectorParams& params);

} // namespace intricacy::detector
