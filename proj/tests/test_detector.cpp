#include "intricacy/detector_model.hpp"
#include "intricacy/error.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace intricacy;
using namespace intricacy::detector;

namespace {

DetectorParams cell_10_lambda()
{
    DetectorParams p;
    p.cell_size = 10.0 * p.mean_free_path;
    return p;
}

} // namespace

TEST(Detector, ThermalVelocityAtZeroTemperature)
{
    EXPECT_EQ(thermal_velocity(0.0, 6.63e-23), 0.0);
}

TEST(Detector, ThermalVelocityArgon)
{
    const double v = std::sqrt(3.0 * 1.380649e-16 * 293.0 / (2.0 * 6.63e-23));
    EXPECT_NEAR(thermal_velocity(DetectorParams{}), v, 1e-9 * v);
    EXPECT_GT(v, 1e4);
    EXPECT_LT(v, 1e5);
}

TEST(Detector, FrontVelocityIsOneOverRootThree)
{
    DetectorParams p;
    EXPECT_NEAR(front_velocity(p) * std::sqrt(3.0), thermal_velocity(p), 1e-9);
}

TEST(Detector, DiffusionCoefficient)
{
    EXPECT_NEAR(diffusion_coefficient(1e-5, 1e-10), 1e-10 / 6e-10, 1e-15);
    EXPECT_THROW(diffusion_coefficient(0.0, 1e-10), ConfigError);
}

TEST(Detector, WallFluxOracle)
{
    DetectorParams p;
    const double vbar = std::sqrt(8.0 * 1.380649e-16 * p.temperature / (std::numbers::pi * p.env_molecule_mass));
    const double expect = p.env_number_density * vbar / 4.0 * p.box_size * p.box_size;
    EXPECT_NEAR(wall_collision_rate(p) / expect, 1.0, 1e-12);
    // Order 1e26 per second for a 10 cm box in air.
    EXPECT_GT(wall_collision_rate(p), 1e25);
    EXPECT_LT(wall_collision_rate(p), 1e27);
}

TEST(Detector, RateChainOracle)
{
    DetectorParams p = cell_10_lambda();
    FluctuationRate r = fluctuation_rate_A(p, 0.3, 0.7);
    const double cells = p.track_length / p.cell_size;
    const double f = 1.0 / (p.number_density * p.excitation_spacing * p.cell_size * p.cell_size);
    EXPECT_NEAR(r.cells_on_track, cells, 1e-9 * cells);
    EXPECT_NEAR(r.cell_intricacy, f, 1e-12 * f);
    EXPECT_NEAR(r.rate, 8.0 / (3.0 * std::numbers::pi) * cells * f / p.mean_free_time, 1e-6 * r.rate);
    EXPECT_NEAR(r.p1p2, 0.21, 1e-15);
    EXPECT_NEAR(r.quoted_scaling, 1e9, 1e-3);
}

TEST(Detector, RateDependsOnCellSize)
{
    DetectorParams a = cell_10_lambda();
    DetectorParams b = a;
    b.cell_size *= 2.0;
    // Explicit chain: (track / Lambda) / Lambda^2 goes like Lambda^-3.
    EXPECT_NEAR(fluctuation_rate_A(a, 0.5, 0.5).rate / fluctuation_rate_A(b, 0.5, 0.5).rate, 8.0, 1e-9);
}

TEST(Detector, RejectsCellSmallerThanMeanFreePath)
{
    DetectorParams p;
    p.cell_size = 0.5 * p.mean_free_path;
    EXPECT_THROW(p.validate(), ConfigError);
    EXPECT_THROW(fluctuation_rate_A(p, 0.5, 0.5), ConfigError);
}

TEST(Detector, RejectsBadProbabilities)
{
    EXPECT_THROW(fluctuation_rate_A(cell_10_lambda(), 0.5, 0.6), ConfigError);
    EXPECT_THROW(fluctuation_rate_A(cell_10_lambda(), -0.1, 1.1), ConfigError);
}

TEST(Detector, RejectsNonPositiveParameters)
{
    DetectorParams p;
    p.number_density = 0.0;
    EXPECT_THROW(p.validate(), ConfigError);
    p = DetectorParams{};
    p.temperature = -1.0;
    EXPECT_THROW(thermal_velocity(p), ConfigError);
}

TEST(Detector, ReferenceScaleEstimates)
{
    EstimateReport r = detector_estimates(cell_10_lambda());
    EXPECT_GT(r.fill_time, 1e-5);
    EXPECT_LT(r.fill_time, 1e-3);
    EXPECT_GT(r.concurrent_waves, 1e21);
    EXPECT_LT(r.concurrent_waves, 1e23);
    EXPECT_GT(r.fluctuation_rate, 1e8);
    EXPECT_LT(r.fluctuation_rate, 1e10);
    // Front width of a few mean free paths, a few 1e-5 cm.
    EXPECT_GT(r.front_width, 1e-5);
    EXPECT_LT(r.front_width, 1e-4);
}

TEST(Detector, FillTimeIsBoxOverFrontVelocity)
{
    DetectorParams p;
    EstimateReport r = detector_estimates(p, 5.0);
    EXPECT_NEAR(r.fill_time, p.box_size / front_velocity(p), 1e-15);
    EXPECT_NEAR(r.concurrent_waves, r.collision_rate * r.fill_time, 1e-6 * r.concurrent_waves);
    EXPECT_THROW(detector_estimates(p, 0.0), ConfigError);
}
