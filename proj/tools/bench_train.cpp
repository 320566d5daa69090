// Per-component timing of one training iteration; development aid.

#include <chrono>
#include <iostream>

#include "sinn/experiment.hpp"

using namespace sinn;
using Clock = std::chrono::steady_clock;

static double ms_since(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

int main(int argc, char** argv) {
    const std::string preset = argc > 1 ? argv[1] : "ou";
    auto c = load_preset(preset);
    const auto spec = c.analytic_targets
                          ? build_loss_spec(c, nullptr, nullptr)
                          : [&] {
                                auto data = generate_data(c);
                                return build_loss_spec(c, &data.coarse_train, &data.coarse_val);
                            }();
    auto params = init_params(c.model, 1);
    const auto noise =
        sample_noise(c.input_noise().with_seed(7), c.train.batch_size, c.trajectory_length,
                     c.model.input_dim);
    Xoshiro256 lag_rng(3);
    const double h_pool =
        std::pow(static_cast<double>(c.train.batch_size * c.trajectory_length), -0.2);

    Tape tape;
    for (int rep = 0; rep < 3; ++rep) {
        auto t0 = Clock::now();
        tape.clear();
        const auto graph = build_generator_graph(tape, c.model, params, noise);
        const double t_fwd = ms_since(t0);

        t0 = Clock::now();
        const auto lags = select_lags(c.t_max, c.lag_subsample_m, lag_rng);
        const int loss = build_loss(tape, graph.output_seq, spec, lags, h_pool);
        const double t_loss = ms_since(t0);

        t0 = Clock::now();
        tape.backward(loss);
        const double t_bwd = ms_since(t0);

        t0 = Clock::now();
        const auto grads = collect_gradients(tape, c.model, graph);
        TrainConfig tc = c.train;
        auto st = AdamState::zeros_like(params);
        std::tie(params, st) = adam_step(params, grads, st, tc);
        const double t_adam = ms_since(t0);

        std::cout << "fwd " << t_fwd << "ms  loss " << t_loss << "ms  bwd " << t_bwd
                  << "ms  adam " << t_adam << "ms  nodes " << tape.size() << "\n";
    }
    return 0;
}
