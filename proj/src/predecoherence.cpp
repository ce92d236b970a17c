#include "intricacy/predecoherence.hpp"

#include "intricacy/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace intricacy::predecoherence {

std::string to_string(NoiseFamily f)
{
    return f == NoiseFamily::gamma_matched ? "gamma-matched" : "poisson-literal";
}

std::string to_string(Construction c)
{
    return c == Construction::wigner ? "wigner" : "conjugated-spectrum";
}

NoiseFamily noise_family_from_string(const std::string& s)
{
    if (s == "gamma-matched")
        return NoiseFamily::gamma_matched;
    if (s == "poisson-literal")
        return NoiseFamily::poisson_literal;
    throw ConfigError("unknown noise family '" + s + "' (expected gamma-matched or poisson-literal)");
}

Construction construction_from_string(const std::string& s)
{
    if (s == "wigner")
        return Construction::wigner;
    if (s == "conjugated-spectrum")
        return Construction::conjugated_spectrum;
    throw ConfigError("unknown construction '" + s + "' (expected wigner or conjugated-spectrum)");
}

void DisorderSpec::validate() const
{
    if (size < 2)
        throw ConfigError("disorder block size N must be at least 2");
}

Eigen::MatrixXcd haar_unitary(std::size_t n, Rng& rng)
{
    std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
    const auto size = static_cast<Eigen::Index>(n);
    Eigen::MatrixXcd z(size, size);
    for (Eigen::Index j = 0; j < size; ++j)
        for (Eigen::Index i = 0; i < size; ++i)
            z(i, j) = {normal(rng), normal(rng)};
    Eigen::HouseholderQR<Eigen::MatrixXcd> qr(z);
    Eigen::MatrixXcd q = qr.householderQ();
    const Eigen::MatrixXcd& r = qr.matrixQR();
    for (Eigen::Index j = 0; j < size; ++j) {
        const std::complex<double> d = r(j, j);
        const double mag = std::abs(d);
        q.col(j) *= mag > 0.0 ? d / mag : 1.0;
    }
    return q;
}

namespace {

// A centred draw with mean 0 and variance `mean` from the family at that mean.
double centred_draw(NoiseFamily family, double mean, Rng& rng)
{
    if (family == NoiseFamily::gamma_matched) {
        std::gamma_distribution<double> gamma(mean, 1.0);
        return gamma(rng) - mean;
    }
    std::poisson_distribution<long> poisson(mean);
    return static_cast<double>(poisson(rng)) - mean;
}

void remove_trace(Eigen::MatrixXcd& m)
{
    const std::complex<double> shift = m.trace() / static_cast<double>(m.rows());
    m.diagonal().array() -= shift.real();
    // Diagonal of a Hermitian matrix is real; drop round-off imaginary parts.
    m.diagonal() = m.diagonal().real().cast<std::complex<double>>();
}

} // namespace

std::vector<double> sample_eigenvalue_fluctuations(std::size_t n, NoiseFamily family, Rng& rng)
{
    const double mean = 1.0 / static_cast<double>(n);
    std::vector<double> dp(n);
    for (auto& v : dp)
        v = centred_draw(family, mean, rng);
    const double shift = std::accumulate(dp.begin(), dp.end(), 0.0) / static_cast<double>(n);
    for (auto& v : dp)
        v -= shift;
    return dp;
}

FluctuationMatrix sample_fluctuation_matrix(const DisorderSpec& spec)
{
    spec.validate();
    Rng rng(spec.seed);
    const auto n = static_cast<Eigen::Index>(spec.size);
    const double nd = static_cast<double>(spec.size);
    FluctuationMatrix out;
    out.spec = spec;

    if (spec.construction == Construction::conjugated_spectrum) {
        const auto dp = sample_eigenvalue_fluctuations(spec.size, spec.family, rng);
        const Eigen::MatrixXcd u = haar_unitary(spec.size, rng);
        Eigen::VectorXcd d(n);
        for (Eigen::Index i = 0; i < n; ++i)
            d[i] = dp[static_cast<std::size_t>(i)];
        out.delta_rho = u * d.asDiagonal() * u.adjoint();
    } else {
        // Each element sums one draw per eigenvector term; sums of N draws at
        // mean 1/N are single draws at mean 1 for both families.
        const double off_scale = 1.0 / (nd * std::sqrt(2.0 * nd));
        const double diag_scale = 1.0 / (nd * std::sqrt(nd));
        out.delta_rho.resize(n, n);
        for (Eigen::Index j = 0; j < n; ++j) {
            out.delta_rho(j, j) = diag_scale * centred_draw(spec.family, 1.0, rng);
            for (Eigen::Index i = j + 1; i < n; ++i) {
                const double re = centred_draw(spec.family, 1.0, rng);
                const double im = centred_draw(spec.family, 1.0, rng);
                out.delta_rho(i, j) = off_scale * std::complex<double>(re, im);
                out.delta_rho(j, i) = std::conj(out.delta_rho(i, j));
            }
        }
    }
    remove_trace(out.delta_rho);
    return out;
}

SplitResult split_positive_negative(const Eigen::MatrixXcd& hermitian)
{
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(hermitian, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success)
        throw NumericalError("Hermitian eigensolver failed to converge");
    SplitResult r;
    r.eigenvalues.assign(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
    for (double v : r.eigenvalues) {
        if (v > 0.0)
            r.k_plus += v;
        else
            r.k_minus -= v;
    }
    return r;
}

SplitResult split_positive_negative(const FluctuationMatrix& m)
{
    return split_positive_negative(m.delta_rho);
}

double semicircle_cdf(double y)
{
    if (y <= -2.0)
        return 0.0;
    if (y >= 2.0)
        return 1.0;
    return 0.5 + (y * std::sqrt(4.0 - y * y) / 4.0 + std::asin(y / 2.0)) / std::numbers::pi;
}

double ks_distance(std::span<const double> eigenvalues, double scale)
{
    std::vector<double> y(eigenvalues.begin(), eigenvalues.end());
    for (auto& v : y)
        v *= scale;
    std::sort(y.begin(), y.end());
    const double n = static_cast<double>(y.size());
    double d = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double f = semicircle_cdf(y[i]);
        d = std::max({d, std::abs(f - static_cast<double>(i) / n), std::abs(static_cast<double>(i + 1) / n - f)});
    }
    return d;
}

double standard_scale(const DisorderSpec& spec)
{
    return static_cast<double>(spec.size);
}

double semicircle_test(const SplitResult& split, const DisorderSpec& spec)
{
    return ks_distance(split.eigenvalues, standard_scale(spec));
}

double semicircle_test(const FluctuationMatrix& m)
{
    return semicircle_test(split_positive_negative(m), m.spec);
}

EnsembleSummary run_ensemble(const DisorderSpec& spec, std::size_t samples)
{
    spec.validate();
    if (samples == 0)
        throw ConfigError("ensemble needs at least one sample");
    EnsembleSummary summary;
    summary.spec = spec;
    const double scale = standard_scale(spec);
    for (std::size_t i = 0; i < samples; ++i) {
        DisorderSpec s = spec;
        s.seed = derive_seed(spec.seed, i);
        const auto split = split_positive_negative(sample_fluctuation_matrix(s));
        SampleStats st;
        st.index = i;
        st.k_plus = split.k_plus;
        st.k_minus = split.k_minus;
        st.ks = ks_distance(split.eigenvalues, scale);
        st.min_scaled = split.eigenvalues.front() * scale;
        st.max_scaled = split.eigenvalues.back() * scale;
        summary.samples.push_back(st);
    }
    double sum = 0.0, sum2 = 0.0;
    for (const auto& s : summary.samples) {
        const double k = 0.5 * (s.k_plus + s.k_minus);
        sum += k;
        sum2 += k * k;
    }
    const double n = static_cast<double>(samples);
    summary.mean_k = sum / n;
    const double var = n > 1 ? (sum2 - n * summary.mean_k * summary.mean_k) / (n - 1) : 0.0;
    summary.std_error_k = std::sqrt(std::max(var, 0.0) / n);
    return summary;
}

} // namespace intricacy::predecoherence
