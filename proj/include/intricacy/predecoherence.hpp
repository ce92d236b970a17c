#pragma once

// Random fluctuation block of a completely disordered macroscopic state, its
// split into positive and negative parts, and the semicircle check.

#include "intricacy/rng.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <vector>

namespace intricacy::predecoherence {

/// Trace of the positive (or negative) part under complete disorder: 4/(3 pi).
inline constexpr double kDisorderTrace = 4.0 / (3.0 * std::numbers::pi);

enum class NoiseFamily {
    gamma_matched,  ///< Gamma(shape 1/N, scale 1): continuous, mean = variance = 1/N
    poisson_literal ///< Poisson(1/N)
};

enum class Construction {
    /// Independent Hermitian elements whose real and imaginary parts are
    /// centred sums of N noise draws; Delta rho = W / N with <|W_jj'|^2> = 1/N.
    wigner,
    /// U diag(delta p) U^dagger with U Haar. Its spectrum is {delta p} itself.
    conjugated_spectrum,
};

std::string to_string(NoiseFamily f);
std::string to_string(Construction c);
NoiseFamily noise_family_from_string(const std::string& s);
Construction construction_from_string(const std::string& s);

struct DisorderSpec {
    std::size_t size = 256;
    NoiseFamily family = NoiseFamily::gamma_matched;
    Construction construction = Construction::wigner;
    std::uint64_t seed = 1;

    void validate() const;
};

struct FluctuationMatrix {
    Eigen::MatrixXcd delta_rho;
    DisorderSpec spec;
};

struct SplitResult {
    double k_plus = 0.0;
    double k_minus = 0.0;
    std::vector<double> eigenvalues; ///< ascending
};

/// Haar-distributed unitary: QR of a complex Ginibre matrix with the phases
/// of diag(R) folded into Q.
Eigen::MatrixXcd haar_unitary(std::size_t n, Rng& rng);

/// N eigenvalue fluctuations p_n - 1/N from the family, recentred to an exact zero sum.
std::vector<double> sample_eigenvalue_fluctuations(std::size_t n, NoiseFamily family, Rng& rng);

/// Deterministic in its argument, seed included. Trace is removed before returning.
FluctuationMatrix sample_fluctuation_matrix(const DisorderSpec& spec);

/// Full Hermitian eigendecomposition; K_plus = sum of positive eigenvalues,
/// K_minus = -sum of negative ones.
SplitResult split_positive_negative(const FluctuationMatrix& m);
SplitResult split_positive_negative(const Eigen::MatrixXcd& hermitian);

/// CDF of the normalised semicircle density (1/2pi) sqrt(4 - y^2) on [-2, 2].
double semicircle_cdf(double y);

/// Kolmogorov-Smirnov distance between scaled eigenvalues and the semicircle.
double ks_distance(std::span<const double> eigenvalues, double scale);

/// Scale that brings a sample's spectrum to the standard Wigner normalisation.
double standard_scale(const DisorderSpec& spec);

/// KS distance of the sample's spectrum (rescaled by N) to the semicircle.
double semicircle_test(const SplitResult& split, const DisorderSpec& spec);
double semicircle_test(const FluctuationMatrix& m);

struct SampleStats {
    std::size_t index = 0;
    double k_plus = 0.0;
    double k_minus = 0.0;
    double ks = 0.0;
    double min_scaled = 0.0;
    double max_scaled = 0.0;
};

struct EnsembleSummary {
    DisorderSpec spec; ///< seed is the root seed
    std::vector<SampleStats> samples;
    double mean_k = 0.0;
    double std_error_k = 0.0;
};

/// Sample i uses seed derive_seed(root, i).
EnsembleSummary run_ensemble(const DisorderSpec& spec, std::size_t samples);

} // namespace intricacy::predecoherence
