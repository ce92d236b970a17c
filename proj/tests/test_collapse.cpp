#include "intricacy/collapse.hpp"
#include "intricacy/error.hpp"

#include "support/oracles.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

using namespace intricacy;
using namespace intricacy::collapse;

namespace {

const double kPrefactor = 8.0 / (3.0 * std::numbers::pi);

// Direct evaluation of the pair covariance, entry by entry.
Eigen::MatrixXd covariance_oracle(const std::vector<double>& p, const std::vector<bool>& mute,
                                  const Eigen::MatrixXd& f, double dt)
{
    const std::size_t n = p.size();
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(n, n);
    auto fe = [&](Eigen::Index b, std::size_t j) { return mute[j] ? 0.0 : f(b, static_cast<Eigen::Index>(j)); };
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t k = 0; k < n; ++k) {
            if (j == k)
                continue;
            double s = 0.0;
            for (Eigen::Index b = 0; b < f.rows(); ++b) {
                double rest = 0.0;
                for (std::size_t m = 0; m < n; ++m)
                    if (m != j && m != k)
                        rest += p[m] * fe(b, m);
                s += (fe(b, j) + fe(b, k)) * (1.0 - rest);
            }
            c(j, k) = -kPrefactor * p[j] * p[k] * dt * s;
        }
    for (std::size_t j = 0; j < n; ++j)
        c(j, j) = -c.row(j).sum();
    return c;
}

BornOptions quick(std::uint64_t seed = 3, std::size_t trials = 1000)
{
    BornOptions o;
    o.trials = trials;
    o.seed = seed;
    return o;
}

} // namespace

TEST(ChannelState, Validation)
{
    EXPECT_THROW(ChannelState::make({1.0}), ConfigError);
    EXPECT_THROW(ChannelState::make({0.5, 0.6}), ConfigError);
    EXPECT_THROW(ChannelState::make({-0.1, 1.1}), ConfigError);
    EXPECT_THROW(ChannelState::make({0.5, 0.5}, {true}), ConfigError);
    auto s = ChannelState::make({0.0, 1.0});
    EXPECT_TRUE(s.collapsed());
    EXPECT_EQ(*s.winner(), 1u);
}

TEST(Schedule, CellsForSums)
{
    Eigen::MatrixXd f = IntricacySchedule::cells_for_sums({10.0, 0.0, 2.5});
    EXPECT_EQ(f.rows(), 10);
    EXPECT_NEAR(f.col(0).sum(), 10.0, 1e-12);
    EXPECT_NEAR(f.col(2).sum(), 2.5, 1e-12);
    EXPECT_EQ(f.col(1).sum(), 0.0);
    EXPECT_EQ(IntricacySchedule::cells_for_sums({0.3, 0.0}).rows(), 1);
    EXPECT_THROW(IntricacySchedule::cells_for_sums({-1.0, 1.0}), ConfigError);
}

TEST(Schedule, LogisticMatchesClosedForm)
{
    Eigen::MatrixXd f0(2, 2);
    f0 << 0.1, 0.0, 0.4, 0.9;
    auto s = IntricacySchedule::logistic(f0, 2.0);
    for (double t : {0.0, 0.5, 3.0, 10.0}) {
        Eigen::MatrixXd f = s.at(t);
        for (Eigen::Index i = 0; i < 4; ++i)
            EXPECT_NEAR(f.data()[i], oracle::logistic(f0.data()[i], t, 2.0), 1e-14);
    }
    EXPECT_THROW(IntricacySchedule::logistic(f0, 0.0), ConfigError);
}

TEST(Schedule, CascadeAndFrames)
{
    Eigen::MatrixXd f0 = Eigen::MatrixXd::Constant(1, 2, 0.1);
    auto c = IntricacySchedule::cascade(f0, 1.0);
    EXPECT_NEAR(c.at(1.0)(0, 0), 0.1 * std::exp(1.0), 1e-14);
    EXPECT_EQ(c.at(5.0)(0, 0), 1.0);

    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(1, 2), b = Eigen::MatrixXd::Constant(1, 2, 0.8);
    auto fr = IntricacySchedule::from_frames({0.0, 2.0}, {a, b});
    EXPECT_NEAR(fr.at(0.5)(0, 1), 0.2, 1e-14);
    EXPECT_EQ(fr.at(9.0)(0, 1), 0.8);
    EXPECT_EQ(fr.at(-1.0)(0, 1), 0.0);
    EXPECT_THROW(IntricacySchedule::from_frames({1.0, 1.0}, {a, b}), ConfigError);
    EXPECT_THROW(IntricacySchedule::constant(Eigen::MatrixXd::Constant(1, 2, 1.5)), ConfigError);
}

TEST(Schedule, FromField)
{
    kinetics::FieldHistory h;
    h.snapshots.push_back({0.0, {0.0, 0.5}});
    h.snapshots.push_back({1.0, {0.4, 1.0}});
    auto s = IntricacySchedule::from_field(h, 1, 3);
    EXPECT_EQ(s.kind(), ScheduleKind::from_field);
    EXPECT_EQ(s.cells(), 2u);
    EXPECT_NEAR(s.sums(0.5)(1), 0.95, 1e-14);
    EXPECT_EQ(s.sums(0.5)(0), 0.0);
    EXPECT_THROW(IntricacySchedule::from_field(h, 3, 3), ConfigError);
    EXPECT_EQ(schedule_kind_from_string(to_string(ScheduleKind::from_field)), ScheduleKind::from_field);
}

TEST(Covariance, TwoChannelClosedForm)
{
    auto s = ChannelState::make({0.3, 0.7}, {false, true});
    Eigen::MatrixXd f = IntricacySchedule::cells_for_sums({10.0, 0.0});
    Eigen::MatrixXd c = covariance_matrix(s, f, FluctuationModel{}, 0.01);
    const double v = kPrefactor * 0.3 * 0.7 * 10.0 * 0.01;
    EXPECT_NEAR(c(0, 0), v, 1e-15);
    EXPECT_NEAR(c(1, 1), v, 1e-15);
    EXPECT_NEAR(c(0, 1), -v, 1e-15);
}

TEST(Covariance, MatchesDirectEvaluation)
{
    std::vector<double> p{0.2, 0.3, 0.5};
    std::vector<bool> mute{false, true, false};
    Eigen::MatrixXd f(3, 3);
    f << 0.9, 0.0, 0.2, 0.5, 0.0, 0.7, 0.1, 0.0, 0.4;
    auto s = ChannelState::make(p, mute);
    CovarianceDiagnostics d;
    Eigen::MatrixXd c = covariance_matrix(s, f, FluctuationModel{}, 0.05, &d);
    EXPECT_LT((c - covariance_oracle(p, mute, f, 0.05)).norm(), 1e-15);
    EXPECT_FALSE(d.warning);
    EXPECT_LT(c.rowwise().sum().cwiseAbs().maxCoeff(), 1e-16);
    EXPECT_GE(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(c).eigenvalues().minCoeff(), -1e-16);
}

TEST(Covariance, PermutationSymmetry)
{
    std::vector<double> p{0.2, 0.3, 0.5};
    Eigen::MatrixXd f = Eigen::MatrixXd::Constant(2, 3, 0.6);
    Eigen::MatrixXd c = covariance_matrix(ChannelState::make(p), f, FluctuationModel{}, 1.0);
    Eigen::MatrixXd cp = covariance_matrix(ChannelState::make({0.5, 0.2, 0.3}), f, FluctuationModel{}, 1.0);
    // Permutation (0,1,2) -> (1,2,0).
    for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k)
            EXPECT_NEAR(c(j, k), cp((j + 1) % 3, (k + 1) % 3), 1e-15);
}

TEST(Covariance, VanishesAtCertainty)
{
    auto s = ChannelState::make({1.0, 0.0});
    Eigen::MatrixXd f = Eigen::MatrixXd::Constant(3, 2, 0.5);
    EXPECT_TRUE(covariance_matrix(s, f, FluctuationModel{}, 1.0).isZero());
}

TEST(Covariance, CustomProfileWeights)
{
    auto m = FluctuationModel::custom("sine");
    EXPECT_NEAR(m.weight(1.0), 1.0, 1e-15);
    EXPECT_NEAR(m.weight(0.0), 0.0, 1e-15);
    auto s = ChannelState::make({0.4, 0.6}, {false, true});
    Eigen::MatrixXd f = Eigen::MatrixXd::Constant(1, 2, 1.0);
    Eigen::MatrixXd c = covariance_matrix(s, f, m, 1.0);
    EXPECT_NEAR(c(0, 1), -kPrefactor * std::sin(0.2 * std::numbers::pi) * std::sin(0.3 * std::numbers::pi), 1e-14);
    EXPECT_THROW(FluctuationModel::custom("power", 1.5), ConfigError);
    EXPECT_THROW(FluctuationModel::custom("cubic"), ConfigError);
}

TEST(Increment, ZeroSumWithOracleVariance)
{
    auto s = ChannelState::make({0.5, 0.5});
    Eigen::MatrixXd f = IntricacySchedule::cells_for_sums({10.0, 10.0});
    Eigen::MatrixXd c = covariance_matrix(s, f, FluctuationModel{}, 0.01);
    const double expected = kPrefactor * 0.25 * 20.0 * 0.01;
    Rng rng(5);
    const int samples = 40000;
    double m2 = 0.0;
    for (int i = 0; i < samples; ++i) {
        Eigen::VectorXd xi = sample_increment(c, s, NoiseKind::gaussian, 0.05, rng);
        EXPECT_NEAR(xi.sum(), 0.0, 1e-16);
        m2 += xi(0) * xi(0);
    }
    EXPECT_NEAR(m2 / samples / expected, 1.0, 0.05);
}

TEST(Increment, ThreeChannelCovarianceRecovered)
{
    std::vector<double> p{0.2, 0.3, 0.5};
    Eigen::MatrixXd f = Eigen::MatrixXd::Constant(2, 3, 0.5);
    auto s = ChannelState::make(p);
    Eigen::MatrixXd c = covariance_matrix(s, f, FluctuationModel{}, 0.01);
    for (auto noise : {NoiseKind::gaussian, NoiseKind::compound_poisson}) {
        Rng rng(6);
        Eigen::MatrixXd emp = Eigen::MatrixXd::Zero(3, 3);
        const int samples = 40000;
        for (int i = 0; i < samples; ++i) {
            Eigen::VectorXd xi = sample_increment(c, s, noise, 0.05, rng);
            emp += xi * xi.transpose();
        }
        emp /= samples;
        EXPECT_LT((emp - c).norm() / c.norm(), 0.05);
    }
}

TEST(Step, MartingaleMean)
{
    auto s0 = ChannelState::make({0.3, 0.7}, {false, true});
    auto sched = IntricacySchedule::constant(IntricacySchedule::cells_for_sums({10.0, 0.0}));
    Rng rng(8);
    const int samples = 20000;
    double mean = 0.0;
    for (int i = 0; i < samples; ++i) {
        auto s = s0;
        fluctuation_step(s, sched, FluctuationModel{}, StepPolicy{}, rng);
        mean += s.p[0];
    }
    // One step: sigma is at most 0.1 * 0.3, so the standard error is < 3e-4.
    EXPECT_NEAR(mean / samples, 0.3, 1e-3);
}

TEST(Step, AdaptiveDtBound)
{
    auto s = ChannelState::make({0.05, 0.95});
    auto sched = IntricacySchedule::constant(IntricacySchedule::cells_for_sums({100.0, 100.0}));
    Rng rng(1);
    StepReport r = fluctuation_step(s, sched, FluctuationModel{}, StepPolicy{}, rng);
    const double unit = kPrefactor * 0.05 * 0.95 * 200.0;
    EXPECT_NEAR(r.dt, 0.1 * 0.1 * 0.05 * 0.05 / unit, 1e-18);
}

TEST(Step, CollapsedStateIsFixed)
{
    auto s = ChannelState::make({1.0, 0.0});
    auto sched = IntricacySchedule::constant(IntricacySchedule::cells_for_sums({5.0, 5.0}));
    Rng rng(1);
    fluctuation_step(s, sched, FluctuationModel{}, StepPolicy{}, rng);
    EXPECT_EQ(s.p[0], 1.0);
    EXPECT_EQ(s.p[1], 0.0);
}

TEST(Trial, SimplexAndAbsorption)
{
    auto s0 = ChannelState::make({0.2, 0.3, 0.5}, {false, false, true});
    auto sched = IntricacySchedule::constant(IntricacySchedule::cells_for_sums({3.0, 3.0, 0.0}));
    TrialOptions o;
    o.record_every = 1;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng rng = make_rng(99, seed);
        CollapseOutcome out = run_trial(s0, sched, FluctuationModel{}, StepPolicy{}, rng, o);
        ASSERT_TRUE(out.collapsed);
        EXPECT_EQ(out.revivals, 0u);
        std::vector<bool> dead(3, false);
        for (const auto& pt : out.trajectory) {
            double sum = 0.0;
            for (std::size_t j = 0; j < 3; ++j) {
                EXPECT_GE(pt.p[j], 0.0);
                if (dead[j])
                    EXPECT_EQ(pt.p[j], 0.0);
                if (pt.p[j] == 0.0)
                    dead[j] = true;
                sum += pt.p[j];
            }
            EXPECT_NEAR(sum, 1.0, 1e-12);
        }
        EXPECT_EQ(out.trajectory.back().p[*out.winner], 1.0);
        EXPECT_LT(out.clamp_bias, 1e-6);
    }
}

TEST(Trial, StepCapLeavesNoCollapse)
{
    auto s0 = ChannelState::make({0.5, 0.5});
    auto sched = IntricacySchedule::constant(IntricacySchedule::cells_for_sums({1.0, 1.0}));
    Rng rng(2);
    TrialOptions o;
    o.max_steps = 3;
    CollapseOutcome out = run_trial(s0, sched, FluctuationModel{}, StepPolicy{}, rng, o);
    EXPECT_FALSE(out.collapsed);
    EXPECT_EQ(out.steps, 3u);
    EXPECT_FALSE(out.winner.has_value());
}

TEST(Born, EqualChannels)
{
    auto s0 = ChannelState::make({0.5, 0.5});
    auto sched = IntricacySchedule::constant(IntricacySchedule::cells_for_sums({2.0, 2.0}));
    BornReport r = born_rule_experiment(s0, sched, FluctuationModel{}, StepPolicy{}, quick(4, 2000));
    EXPECT_EQ(r.no_collapse + r.failures, 0u);
    EXPECT_NEAR(r.frequency[0], 0.5, oracle::binomial_band(0.5, 2000));
    EXPECT_EQ(r.wins[0] + r.wins[1], 2000u);
}

TEST(Born, ScheduleKindsAndModels)
{
    auto s0 = ChannelState::make({0.3, 0.7}, {false, true});
    Eigen::MatrixXd f = IntricacySchedule::cells_for_sums({2.0, 0.0});
    const double band = oracle::binomial_band(0.3, 1000);

    auto check = [&](const IntricacySchedule& sched, const FluctuationModel& m, const StepPolicy& pol,
                     const char* label) {
        BornReport r = born_rule_experiment(s0, sched, m, pol, quick(7));
        EXPECT_EQ(r.no_collapse + r.failures, 0u) << label;
        EXPECT_NEAR(r.frequency[0], 0.3, band) << label;
    };
    check(IntricacySchedule::logistic(f * 0.5, 1.0), FluctuationModel{}, StepPolicy{}, "logistic");
    check(IntricacySchedule::cascade(f * 0.2, 0.5), FluctuationModel{}, StepPolicy{}, "cascade");
    check(IntricacySchedule::constant(f), FluctuationModel::custom("sine"), StepPolicy{}, "sine");
    StepPolicy poisson;
    poisson.noise = NoiseKind::compound_poisson;
    check(IntricacySchedule::constant(f), FluctuationModel{}, poisson, "compound-poisson");
}

TEST(Born, ThreadsDoNotChangeResults)
{
    auto s0 = ChannelState::make({0.4, 0.6});
    auto sched = IntricacySchedule::constant(IntricacySchedule::cells_for_sums({1.0, 1.0}));
    BornOptions serial = quick(12);
    BornOptions parallel = serial;
    parallel.threads = 3;
    BornReport a = born_rule_experiment(s0, sched, FluctuationModel{}, StepPolicy{}, serial);
    BornReport b = born_rule_experiment(s0, sched, FluctuationModel{}, StepPolicy{}, parallel);
    EXPECT_EQ(a.wins, b.wins);
    for (std::size_t i = 0; i < a.records.size(); ++i) {
        EXPECT_EQ(a.records[i].winner, b.records[i].winner);
        EXPECT_EQ(a.records[i].collapse_time, b.records[i].collapse_time);
    }
}

TEST(Born, CollapseFasterWithMoreIntricacy)
{
    auto s0 = ChannelState::make({0.5, 0.5}, {false, true});
    std::vector<double> medians;
    for (double sum : {1.0, 10.0, 100.0}) {
        auto sched = IntricacySchedule::constant(IntricacySchedule::cells_for_sums({sum, 0.0}));
        BornReport r = born_rule_experiment(s0, sched, FluctuationModel{}, StepPolicy{}, quick(5));
        std::vector<double> t;
        for (const auto& rec : r.records)
            t.push_back(rec.collapse_time);
        std::nth_element(t.begin(), t.begin() + t.size() / 2, t.end());
        medians.push_back(t[t.size() / 2]);
    }
    EXPECT_GT(medians[0], medians[1]);
    EXPECT_GT(medians[1], medians[2]);
    // Time scales as 1 / sum f.
    EXPECT_NEAR(medians[0] / medians[1], 10.0, 2.0);
}

TEST(Born, Validation)
{
    auto s0 = ChannelState::make({0.5, 0.5});
    auto sched = IntricacySchedule::constant(IntricacySchedule::cells_for_sums({1.0, 1.0}));
    EXPECT_THROW(born_rule_experiment(s0, sched, FluctuationModel{}, StepPolicy{}, quick(1, 999)), ConfigError);
    auto three = IntricacySchedule::constant(IntricacySchedule::cells_for_sums({1.0, 1.0, 1.0}));
    EXPECT_THROW(born_rule_experiment(s0, three, FluctuationModel{}, StepPolicy{}, quick()), ConfigError);
}
