#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "sinn/train.hpp"
#include "test_util.hpp"

using namespace sinn;

namespace {

SinnConfig tiny_config() { return SinnConfig{1, 2, 1, 1, 0.0}; }

SinnParams constant_grads(const SinnConfig& c, double value) {
    SinnParams g = init_params(c, 0);
    for_each_param(g, [&](const std::string&, Mat& m) { m.setConstant(value); });
    return g;
}

LossSpec smoke_spec(std::size_t t_max) {
    LossSpec spec;
    spec.t_max = t_max;
    spec.lag_subsample_m = std::min<std::size_t>(4, t_max);
    StatTarget acf;
    acf.kind = Statistic::AcfOfX;
    acf.weight = 1.0;
    for (std::size_t tau = 0; tau <= t_max; ++tau)
        acf.acf_train.push_back(std::exp(-0.5 * static_cast<double>(tau)));
    acf.acf_val = acf.acf_train;
    spec.targets.push_back(acf);
    return spec;
}

} // namespace

TEST(Adam, ZeroGradientIsAFixedPoint) {
    const auto c = tiny_config();
    const auto p = init_params(c, 5);
    TrainConfig cfg;
    auto [p2, st] = adam_step(p, constant_grads(c, 0.0), AdamState::zeros_like(p), cfg);
    const auto a = param_arrays(const_cast<SinnParams&>(p));
    const auto b = param_arrays(p2);
    for (std::size_t k = 0; k < a.size(); ++k) EXPECT_EQ(*a[k], *b[k]);
    EXPECT_EQ(st.step, 1u);
}

TEST(Adam, FirstStepBiasCorrectedUpdate) {
    // closed form: update = -lr * g / (|g| + eps) for the first step
    const auto c = tiny_config();
    const auto p = init_params(c, 5);
    TrainConfig cfg;
    auto [p2, st] = adam_step(p, constant_grads(c, 2.0), AdamState::zeros_like(p), cfg);
    const auto a = param_arrays(const_cast<SinnParams&>(p));
    const auto b = param_arrays(p2);
    const double expected = -1e-3 * 2.0 / (2.0 + 1e-8);
    for (std::size_t k = 0; k < a.size(); ++k)
        for (Eigen::Index i = 0; i < a[k]->size(); ++i) {
            const double delta = (*b[k])(i) - (*a[k])(i);
            EXPECT_NEAR(delta, expected, 1e-18);
        }
}

TEST(Adam, NonFiniteGradientsAreRejected) {
    const auto c = tiny_config();
    const auto p = init_params(c, 5);
    auto g = constant_grads(c, 1.0);
    g.w_m(0, 0) = std::numeric_limits<double>::quiet_NaN();
    EXPECT_THROW(adam_step(p, g, AdamState::zeros_like(p), TrainConfig{}), NumericError);
}

TEST(SelectLags, ContractAndErrors) {
    Xoshiro256 g(3);
    const auto full = select_lags(5, 5, g);
    EXPECT_EQ(full, (std::vector<std::size_t>{0, 1, 2, 3, 4, 5}));

    const auto some = select_lags(400, 20, g);
    EXPECT_EQ(some.size(), 21u);
    EXPECT_EQ(some.front(), 0u);
    for (std::size_t i = 1; i < some.size(); ++i) {
        EXPECT_GT(some[i], some[i - 1]);
        EXPECT_LE(some[i], 400u);
    }
    EXPECT_THROW(select_lags(400, 0, g), ParameterError);
    EXPECT_THROW(select_lags(10, 11, g), ParameterError);
}

TEST(Train, DisabledThresholdRunsExactlyMaxIterations) {
    SinnConfig c{1, 2, 1, 1, 0.0};
    TrainConfig tcfg;
    tcfg.batch_size = 8;
    tcfg.validation_size = 8;
    tcfg.eval_interval = 2;
    tcfg.max_iterations = 6;
    tcfg.stop_threshold = std::numeric_limits<double>::infinity();
    tcfg.base_seed = 42;
    const auto spec = smoke_spec(4);
    const auto result = train(c, tcfg, spec, NoiseSpec::gaussian(0, 1, 0), 16, 0.1);
    EXPECT_EQ(result.iterations, 6u);
    ASSERT_FALSE(result.report.entries.empty());
    EXPECT_EQ(result.report.entries.back().iteration, 6u);
    for (const auto& e : result.report.entries) {
        EXPECT_TRUE(std::isfinite(e.train_loss));
        EXPECT_TRUE(std::isfinite(e.val_loss));
        EXPECT_GE(e.train_loss, 0.0);
        EXPECT_GE(e.val_loss, 0.0);
    }
}

TEST(Train, ZeroLearningRateKeepsInitialParameters) {
    SinnConfig c{1, 2, 1, 1, 0.0};
    TrainConfig tcfg;
    tcfg.learning_rate = 0.0;
    tcfg.batch_size = 8;
    tcfg.validation_size = 8;
    tcfg.eval_interval = 3;
    tcfg.max_iterations = 3;
    tcfg.stop_threshold = std::numeric_limits<double>::infinity();
    tcfg.base_seed = 7;
    const auto result = train(c, tcfg, smoke_spec(4), NoiseSpec::gaussian(0, 1, 0), 16, 0.1);
    const auto init = init_params(c, derive_stream(7, detail::kSeedInit + 0));
    auto a = param_arrays(const_cast<SinnParams&>(result.params));
    auto b = param_arrays(const_cast<SinnParams&>(init));
    for (std::size_t k = 0; k < a.size(); ++k) EXPECT_EQ(*a[k], *b[k]);
}

TEST(Train, SerialDeterminism) {
    SinnConfig c{1, 2, 1, 1, 0.0};
    TrainConfig tcfg;
    tcfg.batch_size = 8;
    tcfg.validation_size = 8;
    tcfg.eval_interval = 2;
    tcfg.max_iterations = 4;
    tcfg.stop_threshold = std::numeric_limits<double>::infinity();
    tcfg.base_seed = 99;
    const auto spec = smoke_spec(4);
    const auto r1 = train(c, tcfg, spec, NoiseSpec::gaussian(0, 1, 0), 16, 0.1);
    const auto r2 = train(c, tcfg, spec, NoiseSpec::gaussian(0, 1, 0), 16, 0.1);
    ASSERT_EQ(r1.report.entries.size(), r2.report.entries.size());
    for (std::size_t i = 0; i < r1.report.entries.size(); ++i) {
        EXPECT_EQ(r1.report.entries[i].train_loss, r2.report.entries[i].train_loss);
        EXPECT_EQ(r1.report.entries[i].val_loss, r2.report.entries[i].val_loss);
    }
    auto a = param_arrays(const_cast<SinnParams&>(r1.params));
    auto b = param_arrays(const_cast<SinnParams&>(r2.params));
    for (std::size_t k = 0; k < a.size(); ++k) EXPECT_EQ(*a[k], *b[k]);
}

TEST(Train, ExhaustedRestartsCarryTheReport) {
    SinnConfig c{1, 1, 1, 1, 0.0};
    TrainConfig tcfg;
    tcfg.batch_size = 4;
    tcfg.validation_size = 4;
    tcfg.eval_interval = 2;
    tcfg.max_iterations = 4;
    tcfg.stop_threshold = 1e-30; // unreachable
    tcfg.max_restarts = 1;
    tcfg.base_seed = 3;
    try {
        (void)train(c, tcfg, smoke_spec(4), NoiseSpec::gaussian(0, 1, 0), 12, 0.1);
        FAIL() << "expected TrainingFailed";
    } catch (const TrainingFailed& failed) {
        EXPECT_FALSE(failed.report.entries.empty());
        EXPECT_TRUE(std::isfinite(failed.best_val_loss));
    }
}

TEST(Train, SelfConsistencyNoiseFloor) {
    // statistics of the model's own output used as the target: the loss of a
    // fresh generation sits at the sampling-noise floor
    SinnConfig c{1, 3, 1, 1, 0.0};
    const auto p = init_params(c, 88);
    const auto spec_noise = NoiseSpec::gaussian(0, 1, 0);
    const auto target = sinn_generate(p, c, spec_noise.with_seed(1), 100, 64, 0.1);
    const auto spec = ensemble_targets(target, nullptr, 10, 5,
                                       {{Statistic::AcfOfX, 1.0}, {Statistic::Pdf, 1.0}});
    const double l1 = evaluate_loss(sinn_generate(p, c, spec_noise.with_seed(2), 100, 64, 0.1),
                                    spec, false);
    const double l2 = evaluate_loss(sinn_generate(p, c, spec_noise.with_seed(3), 100, 64, 0.1),
                                    spec, false);
    EXPECT_LT(l1, 0.2);
    EXPECT_LT(l2, 0.2);
    EXPECT_LT(std::max(l1, l2) / std::min(l1, l2), 3.0);
}

TEST(Report, CsvRoundTrip) {
    TrainReport r;
    r.entries.push_back({100, 0.0123456789012345678, 0.2, 1.5});
    r.entries.push_back({200, 0.001, 0.0009, 3.25});
    const auto r2 = report_from_csv(to_csv(r));
    ASSERT_EQ(r2.entries.size(), 2u);
    for (std::size_t i = 0; i < 2; ++i) {
        EXPECT_EQ(r2.entries[i].iteration, r.entries[i].iteration);
        EXPECT_EQ(r2.entries[i].train_loss, r.entries[i].train_loss);
        EXPECT_EQ(r2.entries[i].val_loss, r.entries[i].val_loss);
        EXPECT_EQ(r2.entries[i].seconds, r.entries[i].seconds);
    }
    EXPECT_THROW(report_from_csv("nope"), FormatError);
}

TEST(EnsembleSelect, SortsTiesAndSaturates) {
    const auto c = tiny_config();
    std::vector<Candidate> cands;
    for (double v : {0.5, 0.2, 0.9, 0.2, 0.1})
        cands.push_back({init_params(c, 1), v});
    const auto top3 = ensemble_select(cands, 3);
    ASSERT_EQ(top3.size(), 3u);
    EXPECT_EQ(top3[0].extrapolated_val_loss, 0.1);
    EXPECT_EQ(top3[1].extrapolated_val_loss, 0.2);
    EXPECT_EQ(top3[2].extrapolated_val_loss, 0.2);
    // stable ordering keeps the earlier 0.2 candidate ahead: verify by tagging
    std::vector<Candidate> tagged;
    for (std::size_t i = 0; i < 4; ++i) {
        Candidate cd{init_params(c, 1), i < 2 ? 0.3 : 0.3};
        cd.params.w_m(0, 0) = static_cast<double>(i);
        tagged.push_back(cd);
    }
    const auto sel = ensemble_select(tagged, 4);
    for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(sel[i].params.w_m(0, 0), static_cast<double>(i));

    const auto all = ensemble_select(cands, 50);
    EXPECT_EQ(all.size(), cands.size());
    EXPECT_THROW(ensemble_select({}, 3), ParameterError);
}

TEST(EvaluateLoss, UsesHeldOutValidationCurves) {
    LossSpec spec;
    spec.t_max = 2;
    spec.lag_subsample_m = 1;
    StatTarget t;
    t.kind = Statistic::AcfOfX;
    t.weight = 1.0;
    t.acf_train = {1.0, 0.5, 0.25};
    t.acf_val = {1.0, 0.4, 0.30};
    spec.targets.push_back(t);

    Ensemble e(50, 32, 1, 1.0);
    Xoshiro256 g(4);
    for (std::size_t i = 0; i < e.batch; ++i) {
        double x = g.gaussian();
        for (std::size_t tt = 0; tt < e.time; ++tt) {
            x = 0.5 * x + g.gaussian();
            e.at(i, tt, 0) = x;
        }
    }
    const double on_train = evaluate_loss(e, spec, false);
    const double on_val = evaluate_loss(e, spec, true);
    EXPECT_NE(on_train, on_val);
}
