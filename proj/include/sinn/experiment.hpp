#ifndef SINN_EXPERIMENT_HPP
#define SINN_EXPERIMENT_HPP

#include <cstdint>
#include <string>

#include "sinn/config.hpp"
#include "sinn/io.hpp"

namespace sinn {

// Reference-data seed domain, kept apart from the training seed tags.
inline std::uint64_t data_seed(const ExperimentConfig& c) {
    return derive_stream(c.seed, 0xDA7AULL << 32);
}

// The trained observable of each system: the chain maps to its coarse
// particle position, everything else to the first state component.
inline Ensemble extract_observable(const ExperimentConfig& c, const Ensemble& full_state) {
    if (c.system_kind == "chain") return chain_observable(full_state, c.n_particles);
    return full_state.component(0);
}

struct GeneratedData {
    Ensemble fine;        // observable at the fine step
    Ensemble coarse_train;
    Ensemble coarse_val;
};

// Reference trajectories for training and validation in one simulation pass;
// the first trajectory_count coarse trajectories are the training targets,
// the remaining validation_count are held out for the validation loss.
inline GeneratedData generate_data(const ExperimentConfig& c) {
    c.validate();
    const SdeSystem system = c.build_system();
    SimulateOptions opt;
    opt.burn_in = c.burn_in_steps;
    const std::size_t total = c.trajectory_count + c.validation_count;
    const Ensemble full = simulate(system, c.fine_dt, c.fine_steps(), total, data_seed(c), opt);
    GeneratedData out;
    out.fine = extract_observable(c, full);
    const Ensemble coarse = coarse_grain(out.fine, c.coarse_stride);
    out.coarse_train = coarse.head(c.trajectory_count);
    out.coarse_val = coarse.slice(c.trajectory_count, c.validation_count);
    return out;
}

inline LossSpec build_loss_spec(const ExperimentConfig& c, const Ensemble* train_targets,
                                const Ensemble* val_targets) {
    if (c.analytic_targets) {
        if (c.system_kind != "ou")
            throw ParameterError("analytic targets are available for the ou system only");
        if (c.acf_x2_weight > 0)
            throw ParameterError("analytic targets support acf_x and pdf only");
        if (!(c.acf_x_weight > 0) || !(c.pdf_weight > 0))
            throw ParameterError("analytic ou targets need acf_x and pdf weights");
        return ou_targets(c.theta, c.sigma, c.model_dt(), c.t_max, c.lag_subsample_m,
                          c.train.batch_size * c.trajectory_length, c.acf_x_weight,
                          c.pdf_weight);
    }
    if (train_targets == nullptr)
        throw ParameterError("ensemble targets need generated reference data");
    return ensemble_targets(*train_targets, val_targets, c.t_max, c.lag_subsample_m,
                            c.target_kinds());
}

inline TrainResult run_training(const ExperimentConfig& c, const LossSpec& spec,
                                const EvalCallback& callback = nullptr) {
    return train(c.model, c.train, spec, c.input_noise(), c.trajectory_length, c.model_dt(),
                 callback);
}

} // namespace sinn

#endif
