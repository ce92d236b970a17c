#include "intricacy/error.hpp"
#include "intricacy/rng.hpp"
#include "intricacy/sectors.hpp"

#include "support/oracles.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

using namespace intricacy;
using namespace intricacy::sectors;

namespace {

ModelSpec one_atom()
{
    ModelSpec s;
    s.atoms = 1;
    s.grid_points = 24;
    s.particle_atom = {6.0, 1.0};
    s.particle = {6.0, 1.5, 1.0};
    s.atom_packets = {{10.0, 1.5, 0.0}};
    return s;
}

// Index of configuration (y, x1, x2) on M points.
std::size_t config_index(std::size_t y, std::size_t x1, std::size_t x2, std::size_t m)
{
    return y + m * x1 + m * m * x2;
}

} // namespace

TEST(IndexAlgebra, ProjectorsAndRaising)
{
    IndexMatrices m = build_index_matrices();
    EXPECT_TRUE((m.p0 + m.p1).isApprox(Eigen::Matrix2cd::Identity()));
    EXPECT_TRUE((m.p0 * m.p1).isZero());
    EXPECT_TRUE((m.s * m.s).isZero());
    Eigen::Vector2cd zero(1.0, 0.0), one(0.0, 1.0);
    EXPECT_TRUE((m.a * zero).isApprox(one));
    EXPECT_TRUE((m.a * one).isApprox(one));
}

TEST(IndexAlgebra, PairContagionTransitions)
{
    // Basis |b_n b_n'> with b_n the high bit: 00 = 0, 01 = 1, 10 = 2, 11 = 3.
    IndexMatrices m = build_index_matrices();
    Eigen::Matrix4cd expect = Eigen::Matrix4cd::Zero();
    expect(0, 0) = 1.0;
    expect(3, 1) = 1.0;
    expect(3, 2) = 1.0;
    expect(3, 3) = 1.0;
    EXPECT_TRUE(m.o.isApprox(expect));
    // Columns sum to one: summing over indices gives the ordinary potential.
    for (int c = 0; c < 4; ++c)
        EXPECT_NEAR(m.o.col(c).sum().real(), 1.0, 1e-15);
}

TEST(ModelSpec, CapAndValidation)
{
    ModelSpec s;
    s.atoms = 3;
    s.grid_points = 40;
    s.atom_packets.assign(3, {5.0, 1.0, 0.0});
    EXPECT_THROW(s.validate(), ConfigError);
    s = ModelSpec{};
    s.atoms = 4;
    EXPECT_THROW(s.validate(), ConfigError);
    s = ModelSpec{};
    s.atom_packets.pop_back();
    EXPECT_THROW(s.validate(), ConfigError);
    EXPECT_EQ(ModelSpec{}.amplitudes(), 4u * 16u * 16u * 16u);
}

TEST(InitialState, NormalisedProduct)
{
    ModelSpec s;
    Eigen::VectorXcd psi = initial_wavefunction(s);
    EXPECT_NEAR(psi.norm(), 1.0, 1e-14);
    SectorStack st = initial_stack(s);
    EXPECT_EQ(st.sectors.size(), 4u);
    for (std::size_t q = 1; q < 4; ++q)
        EXPECT_EQ(st.norm2(q), 0.0);
}

TEST(InitialState, BoseSymmetrisation)
{
    ModelSpec s;
    s.bose_symmetric = true;
    Eigen::VectorXcd psi = initial_wavefunction(s);
    const std::size_t m = s.grid_points;
    for (std::size_t y = 0; y < m; y += 3)
        for (std::size_t a = 0; a < m; ++a)
            for (std::size_t b = 0; b < m; ++b)
                EXPECT_NEAR(std::abs(psi[config_index(y, a, b, m)] - psi[config_index(y, b, a, m)]), 0.0, 1e-14);
}

TEST(Generator, SumRuleAgainstDirectEvolution)
{
    ModelSpec s;
    Generator gen(s);
    SectorEvolveOptions o;
    o.dt = 0.005;
    o.steps = 50;
    SectorStack out = evolve_sectors(initial_stack(s), gen, o);
    oracle::DenseDirect direct(s);
    Eigen::VectorXcd psi = direct.propagate(initial_wavefunction(s), 0.25);
    EXPECT_LT((out.total() - psi).norm() / psi.norm(), 1e-6);
}

TEST(Generator, SummedSectorsApplyOrdinaryHamiltonian)
{
    // sum_q (H' Phi)_q = H sum_q Phi_q for any stack.
    ModelSpec s;
    Generator gen(s);
    oracle::DenseDirect direct(s);
    Rng rng(9);
    std::normal_distribution<double> n;
    SectorStack in;
    in.atoms = s.atoms;
    for (std::size_t q = 0; q < 4; ++q) {
        Eigen::VectorXcd v(static_cast<Eigen::Index>(gen.configurations()));
        for (auto& x : v)
            x = cplx(n(rng), n(rng));
        in.sectors.push_back(v);
    }
    SectorStack out;
    gen.apply(in, out);
    Eigen::VectorXcd expect = direct.hamiltonian().cast<cplx>() * in.total();
    EXPECT_LT((out.total() - expect).norm() / expect.norm(), 1e-13);
}

TEST(Generator, SectorZeroEvolvesUnitarily)
{
    ModelSpec s;
    Generator gen(s);
    SectorEvolveOptions o;
    double worst = 0.0;
    evolve_sectors(initial_stack(s), gen, o,
                   [&](const SectorStack& st) { worst = std::max(worst, std::abs(st.norm2(0) - 1.0)); });
    EXPECT_LT(worst, 1e-8);
}

TEST(Generator, BlockPatternIsBitwiseSuperset)
{
    for (int atoms : {1, 2, 3}) {
        ModelSpec s;
        s.atoms = atoms;
        s.grid_points = atoms == 3 ? 8 : 12;
        s.atom_packets.clear();
        for (int a = 0; a < atoms; ++a)
            s.atom_packets.push_back({2.0 + 2.0 * a, 1.0, 0.0});
        s.particle.center = 1.0;
        Generator gen(s);
        auto pattern = gen.block_pattern();
        const std::size_t nq = s.sector_count();
        for (std::size_t q = 0; q < nq; ++q) {
            EXPECT_TRUE(pattern[q][q]);
            for (std::size_t src = 0; src < nq; ++src) {
                bool allowed = (q & src) == src && popcount(q) - popcount(src) <= 1;
                if (pattern[q][src])
                    EXPECT_TRUE(allowed) << "q=" << q << " src=" << src;
                // Every single-bit raise is realised by some coupling.
                if ((q & src) == src && popcount(q) - popcount(src) == 1)
                    EXPECT_TRUE(pattern[q][src]) << "q=" << q << " src=" << src;
            }
        }
    }
}

TEST(Generator, RejectsUnstableStep)
{
    ModelSpec s;
    Generator gen(s);
    SectorEvolveOptions o;
    o.dt = 2.0 * gen.stable_step();
    EXPECT_THROW(evolve_sectors(initial_stack(s), gen, o), ConfigError);
}

TEST(Intricacy, OneAtomOracleDecomposition)
{
    // With one atom, Phi_1 = Psi - Phi_0 exactly, where Phi_0 evolves with
    // the particle-atom coupling switched off.
    ModelSpec s = one_atom();
    Generator gen(s);
    SectorEvolveOptions o;
    o.dt = 0.01;
    o.steps = 150;
    SectorStack out = evolve_sectors(initial_stack(s), gen, o);

    ModelSpec free = s;
    free.particle_atom.strength = 0.0;
    oracle::DenseDirect with(s), without(free);
    Eigen::VectorXcd psi0 = initial_wavefunction(s);
    Eigen::VectorXcd psi = with.propagate(psi0, 1.5);
    Eigen::VectorXcd phi0 = without.propagate(psi0, 1.5);
    EXPECT_LT((out.sectors[0] - phi0).norm(), 1e-6);
    EXPECT_LT((out.sectors[1] - (psi - phi0)).norm(), 1e-6);

    IntricacyEstimate e = intricacy_from_sectors(out, s.grid_points);
    double n1 = (psi - phi0).squaredNorm();
    EXPECT_NEAR(e.diagonal, n1 / (1.0 + n1), 1e-6);
    EXPECT_LE(e.diagonal, 0.8);
}

TEST(Intricacy, ZeroWithoutCouplingAndGrowsEarly)
{
    ModelSpec s = one_atom();
    s.particle_atom.strength = 0.0;
    Generator gen(s);
    SectorEvolveOptions o;
    o.dt = 0.01;
    o.steps = 20;
    EXPECT_EQ(intricacy_from_sectors(evolve_sectors(initial_stack(s), gen, o), s.grid_points).diagonal, 0.0);

    ModelSpec c = one_atom();
    Generator g2(c);
    std::vector<double> series;
    evolve_sectors(initial_stack(c), g2, o, [&](const SectorStack& st) {
        series.push_back(intricacy_from_sectors(st, c.grid_points).diagonal);
    });
    for (std::size_t i = 1; i < series.size(); ++i)
        EXPECT_GE(series[i], series[i - 1]);
    EXPECT_GT(series.back(), 0.0);
}

TEST(Intricacy, RegionSelection)
{
    ModelSpec s = one_atom();
    Generator gen(s);
    SectorEvolveOptions o;
    o.dt = 0.01;
    o.steps = 50;
    SectorStack out = evolve_sectors(initial_stack(s), gen, o);
    IntricacyEstimate all = intricacy_from_sectors(out, s.grid_points);
    IntricacyEstimate part = intricacy_from_sectors(out, s.grid_points, {0, 12});
    IntricacyEstimate rest = intricacy_from_sectors(out, s.grid_points, {12, 24});
    EXPECT_NEAR(part.raw + rest.raw, all.raw, 1e-12);
    EXPECT_THROW(intricacy_from_sectors(out, s.grid_points, {5, 5}), ConfigError);
}

TEST(Symmetrize, ComponentsSumToTotal)
{
    ModelSpec s;
    Generator gen(s);
    SectorEvolveOptions o;
    o.steps = 10;
    SectorStack out = evolve_sectors(initial_stack(s), gen, o);
    SymmetricStack sym = symmetrize(out);
    EXPECT_EQ(sym.components.size(), 3u);
    EXPECT_LT((sym.total() - out.total()).norm(), 1e-14);
    EXPECT_LT((sym.components[1] - out.sectors[1] - out.sectors[2]).norm(), 1e-15);
    EXPECT_EQ(popcount(0b1011), 3);
}
