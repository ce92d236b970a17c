#pragma once

// Entanglement-indexed Schroedinger evolution on a small periodic 1D grid.
//
// A configuration is (y, x_1, ..., x_N): one alpha-particle coordinate and N
// atom coordinates, each on M periodic points. Every bitstring q of N
// entanglement indices carries its own amplitude array Phi_q over the
// M^(N+1) configurations. Units: hbar = 1.

#include <Eigen/Dense>

#include <complex>
#include <cstddef>
#include <functional>
#include <limits>
#include <vector>

namespace intricacy::sectors {

using cplx = std::complex<double>;

/// Single-atom and pair index algebra. Basis order: index 0 (non-intricate)
/// first, index 1 (intricate) second.
struct IndexMatrices {
    Eigen::Matrix2cd p0; ///< keeps index 0
    Eigen::Matrix2cd p1; ///< keeps index 1
    Eigen::Matrix2cd s;  ///< 0 -> 1
    Eigen::Matrix2cd a;  ///< S P0 + P1, particle-atom coupling
    Eigen::Matrix4cd o;  ///< pair contagion, basis |b_n b_n'> with b_n the high bit
};

IndexMatrices build_index_matrices();

struct GaussianKernel {
    double strength = 0.0;
    double range = 1.0;
};

struct WavePacket {
    double center = 0.0;
    double width = 1.0;
    double momentum = 0.0;
};

struct ModelSpec {
    int atoms = 2;
    std::size_t grid_points = 16;
    double spacing = 1.0;
    double particle_mass = 1.0;
    double atom_mass = 4.0;
    GaussianKernel particle_atom{2.0, 1.0};
    GaussianKernel atom_atom{0.5, 1.0};
    WavePacket particle{4.0, 1.5, 1.0};
    std::vector<WavePacket> atom_packets{{8.0, 1.5, 0.0}, {11.0, 1.5, 0.0}};
    /// Symmetrise the atom wave function over atom permutations.
    bool bose_symmetric = false;
    std::size_t amplitude_cap = std::size_t{1} << 21;

    void validate() const;
    std::size_t configurations() const;
    std::size_t sector_count() const { return std::size_t{1} << atoms; }
    std::size_t amplitudes() const { return configurations() * sector_count(); }
};

/// Kinetic-operator discretisation, written into output metadata.
inline constexpr const char* kKineticStencil = "3-point periodic central difference";

/// Normalised initial product state psi({x}) chi(y) on the configuration grid.
Eigen::VectorXcd initial_wavefunction(const ModelSpec& spec);

struct SectorStack {
    int atoms = 0;
    std::vector<Eigen::VectorXcd> sectors;
    double time = 0.0;

    Eigen::VectorXcd total() const;
    double norm2(std::size_t q) const { return sectors[q].squaredNorm(); }
};

/// Sector 0...0 holds the full initial state; all others start at zero.
SectorStack initial_stack(const ModelSpec& spec);

/// The non-self-adjoint generator H', applied matrix-free.
class Generator {
public:
    explicit Generator(ModelSpec spec);

    const ModelSpec& spec() const { return spec_; }
    int atoms() const { return spec_.atoms; }
    std::size_t sector_count() const { return spec_.sector_count(); }
    std::size_t configurations() const { return configurations_; }

    /// out = H' in.
    void apply(const SectorStack& in, SectorStack& out) const;

    /// Kinetic energy K_A + K_B on one amplitude array.
    void apply_kinetic(const Eigen::VectorXcd& in, Eigen::VectorXcd& out) const;

    const Eigen::VectorXd& particle_atom_potential(int atom) const { return u_[atom]; }
    const Eigen::VectorXd& atom_atom_potential(int a, int b) const;

    /// Upper bound on the operator norm of H'.
    double norm_bound() const;
    /// Largest RK4 step accepted by evolve_sectors: 2.5 / norm_bound().
    double stable_step() const { return 2.5 / norm_bound(); }

    /// pattern[q][q'] is true when the assembled block H'_{q <- q'} is
    /// non-zero, found by probing the operator one source sector at a time.
    std::vector<std::vector<bool>> block_pattern() const;

private:
    ModelSpec spec_;
    std::size_t configurations_;
    std::vector<Eigen::VectorXd> u_;
    std::vector<Eigen::VectorXd> v_; // unordered pairs a < b, row-major over (a, b)
    std::vector<std::pair<int, int>> pairs_;
};

struct SectorEvolveOptions {
    double dt = 0.005;
    std::size_t steps = 50;
    /// Abort when | ||sum_q Phi_q|| / ||sum_q Phi_q(0)|| - 1 | exceeds this.
    double norm_tolerance = 1e-4;
};

/// Classical fourth-order Runge-Kutta on i dPhi/dt = H' Phi. The observer (if
/// any) sees the stack after every step.
SectorStack evolve_sectors(SectorStack stack, const Generator& generator, const SectorEvolveOptions& options,
                           const std::function<void(const SectorStack&)>& observer = {});

/// Index interval [lo, hi) on the atom axis. A configuration belongs to the
/// region when every atom coordinate lies inside it.
struct Region {
    std::size_t lo = 0;
    std::size_t hi = std::numeric_limits<std::size_t>::max();
};

struct IntricacyEstimate {
    /// sum_q (|q|/N) ||Phi_q||^2 / sum_q ||Phi_q||^2, cross terms dropped.
    double diagonal = 0.0;
    /// Numerator of `diagonal` alone.
    double raw = 0.0;
    /// Re <Psi| sum_q (|q|/N) Phi_q> / ||Psi||^2, cross terms kept.
    double coherent = 0.0;
};

IntricacyEstimate intricacy_from_sectors(const SectorStack& stack, std::size_t grid_points,
                                         const Region& region = {});

struct SymmetricStack {
    std::vector<Eigen::VectorXcd> components; ///< Xi_r, r = 0..N
    double time = 0.0;

    Eigen::VectorXcd total() const;
};

/// Xi_r = sum of Phi_q over all q with r set bits.
SymmetricStack symmetrize(const SectorStack& stack);

int popcount(std::size_t q);

} // namespace intricacy::sectors
