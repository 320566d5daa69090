#include <gtest/gtest.h>

#include <cstdio>
#include <fstream>

#include "sinn/config.hpp"
#include "sinn/experiment.hpp"
#include "sinn/io.hpp"

using namespace sinn;

namespace {

Ensemble sample_ensemble() {
    Ensemble e(3, 5, 2, 0.25);
    Xoshiro256 g(12);
    for (auto& v : e.data) v = g.gaussian();
    return e;
}

} // namespace

TEST(EnsembleIo, BinaryRoundTripIsBitExact) {
    const auto e = sample_ensemble();
    const std::string path = ::testing::TempDir() + "ens_roundtrip.sine";
    save_ensemble(path, e);
    const auto e2 = load_ensemble(path);
    EXPECT_EQ(e2.batch, e.batch);
    EXPECT_EQ(e2.time, e.time);
    EXPECT_EQ(e2.dim, e.dim);
    EXPECT_EQ(e2.dt, e.dt);
    EXPECT_EQ(e2.data, e.data);
    std::remove(path.c_str());
}

TEST(EnsembleIo, BadMagicIsAFormatError) {
    const std::string path = ::testing::TempDir() + "ens_bad.sine";
    save_ensemble(path, sample_ensemble());
    {
        std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
        f.write("NOPE", 4);
    }
    EXPECT_THROW(load_ensemble(path), FormatError);
    std::remove(path.c_str());
}

TEST(EnsembleIo, CsvRoundTrip) {
    const auto e = sample_ensemble();
    const auto e2 = ensemble_from_csv(ensemble_to_csv(e));
    EXPECT_EQ(e2.batch, e.batch);
    EXPECT_EQ(e2.time, e.time);
    EXPECT_EQ(e2.dim, e.dim);
    EXPECT_EQ(e2.dt, e.dt);
    EXPECT_EQ(e2.data, e.data);
    EXPECT_THROW(ensemble_from_csv(""), FormatError);
    EXPECT_THROW(ensemble_from_csv("dt=1,batch=2,time=2,dim=1\n0.5\n"), FormatError);
}

TEST(Config, ParseResolveFixpoint) {
    const auto c = load_preset("ou");
    const auto text = resolve_config(c);
    const auto c2 = parse_config(text);
    EXPECT_EQ(resolve_config(c2), text);
    EXPECT_EQ(c2.seed, c.seed);
    EXPECT_EQ(c2.train.base_seed, c.train.base_seed);
    EXPECT_EQ(c2.model.hidden_size, c.model.hidden_size);
    EXPECT_EQ(c2.t_max, c.t_max);
}

TEST(Config, UnknownKeyAndBadSyntaxAreRejected) {
    EXPECT_THROW(parse_config("system.kindd = ou\n"), FormatError);
    EXPECT_THROW(parse_config("just some words\n"), FormatError);
    // comments and blank lines are fine
    const auto c = parse_config("# header\n\nsystem.kind = ou # trailing\n");
    EXPECT_EQ(c.system_kind, "ou");
}

TEST(Config, AllPresetsValidate) {
    for (const auto& [name, _] : presets()) {
        const auto c = load_preset(name);
        EXPECT_EQ(c.name, name);
        EXPECT_NO_THROW(c.validate()) << name;
        EXPECT_DOUBLE_EQ(c.model_dt(), c.fine_dt * static_cast<double>(c.coarse_stride));
    }
    EXPECT_THROW(load_preset("nope"), ParameterError);
}

TEST(Config, PresetsMirrorTheReferenceSettings) {
    const auto ou = load_preset("ou");
    EXPECT_EQ(ou.system_kind, "ou");
    EXPECT_DOUBLE_EQ(ou.theta, 1.0);
    EXPECT_DOUBLE_EQ(ou.sigma, 0.5);
    EXPECT_DOUBLE_EQ(ou.model_dt(), 0.1);
    EXPECT_TRUE(ou.analytic_targets);
    EXPECT_EQ(ou.model.num_layers, 2u);
    EXPECT_LE(ou.model.hidden_size, 5u);
    EXPECT_DOUBLE_EQ(ou.train.stop_threshold, 1e-3);

    const auto dw = load_preset("double-well-v5");
    EXPECT_EQ(dw.system_kind, "double_well");
    EXPECT_DOUBLE_EQ(dw.v0, 5.0);
    EXPECT_DOUBLE_EQ(dw.model_dt(), 0.2);
    EXPECT_EQ(dw.trajectory_length, 401u); // 400 points spanning [0, 80]
    EXPECT_EQ(dw.model.hidden_size, 25u);
    EXPECT_EQ(dw.trajectory_count, 400u);

    const auto po = load_preset("poisson");
    EXPECT_EQ(po.noise_kind, "exponential");
    EXPECT_DOUBLE_EQ(po.noise_a, 1.0);

    const auto cg = load_preset("cg-chain");
    EXPECT_EQ(cg.n_particles, 100u);
}

TEST(Config, InvalidCombinationsAreRejected) {
    auto c = load_preset("ou");
    c.t_max = c.trajectory_length;
    EXPECT_THROW(c.validate(), ParameterError);
    c = load_preset("ou");
    c.acf_x_weight = 0;
    c.pdf_weight = 0;
    EXPECT_THROW(c.validate(), ParameterError);
    c = load_preset("fpu");
    c.system_kind = "martian";
    EXPECT_THROW(c.validate(), ParameterError);
}

TEST(Experiment, GenerateDataSplitsTrainAndValidation) {
    auto c = load_preset("ou");
    c.trajectory_count = 6;
    c.validation_count = 4;
    c.trajectory_length = 21;
    c.coarse_stride = 10;
    c.t_max = 10;
    c.lag_subsample_m = 5;
    const auto data = generate_data(c);
    EXPECT_EQ(data.coarse_train.batch, 6u);
    EXPECT_EQ(data.coarse_val.batch, 4u);
    EXPECT_EQ(data.coarse_train.time, 21u);
    EXPECT_DOUBLE_EQ(data.coarse_train.dt, 0.01);
    EXPECT_EQ(data.fine.batch, 10u);
    EXPECT_EQ(data.fine.time, 201u);
    // split preserves trajectories
    for (std::size_t t = 0; t < 21; ++t) {
        EXPECT_EQ(data.coarse_train.at(2, t, 0), data.fine.at(2, t * 10, 0));
        EXPECT_EQ(data.coarse_val.at(1, t, 0), data.fine.at(7, t * 10, 0));
    }
}

TEST(Experiment, ChainObservableIsExtracted) {
    auto c = load_preset("cg-chain");
    c.trajectory_count = 2;
    c.validation_count = 1;
    c.trajectory_length = 3;
    c.coarse_stride = 5;
    c.t_max = 2;
    c.lag_subsample_m = 1;
    c.burn_in_steps = 50;
    const auto data = generate_data(c);
    EXPECT_EQ(data.coarse_train.dim, 1u);
    EXPECT_EQ(data.fine.dim, 1u);
}

TEST(Experiment, AnalyticSpecRequiresOu) {
    auto c = load_preset("fpu");
    c.analytic_targets = true;
    EXPECT_THROW(build_loss_spec(c, nullptr, nullptr), ParameterError);
    auto ou = load_preset("ou");
    const auto spec = build_loss_spec(ou, nullptr, nullptr);
    EXPECT_EQ(spec.targets.size(), 2u);
    EXPECT_EQ(spec.t_max, ou.t_max);
    // analytic acf target is the exponential decay at the model step
    EXPECT_NEAR(spec.targets[0].acf_train[10], std::exp(-1.0), 1e-12);
}
