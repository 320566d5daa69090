#ifndef SINN_CONFIG_HPP
#define SINN_CONFIG_HPP

#include <cstdint>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "sinn/errors.hpp"
#include "sinn/rng.hpp"
#include "sinn/sde.hpp"
#include "sinn/train.hpp"

namespace sinn {

// Flat key-value experiment description with dotted section names. Every
// shipped preset and every resolved-config provenance file uses this format.
struct ExperimentConfig {
    std::string name = "experiment";
    std::uint64_t seed = 0;

    // system.*
    std::string system_kind = "ou";
    double theta = 1.0, sigma = 0.5;                      // ou
    double alpha = 1.0, gamma = 1.0, beta = 1.0;          // fpu / chain / double-well
    double b = 1.0, lambda = 2.0, rate = 1.0;             // poisson
    double v0 = 5.0, x0 = 1.0;                            // double-well
    std::size_t n_particles = 100;                        // chain

    // data.*
    double fine_dt = 1e-3;
    std::size_t coarse_stride = 100;
    std::size_t trajectory_count = 400;
    std::size_t validation_count = 800;
    std::size_t trajectory_length = 401; // coarse samples per trajectory, t=0 included
    std::size_t burn_in_steps = 10000;

    // model.*
    SinnConfig model;
    std::string noise_kind = "gaussian";
    double noise_a = 0.0; // mean | lo | rate
    double noise_b = 1.0; // std | hi

    // loss.*
    bool analytic_targets = false;
    std::size_t t_max = 50;
    std::size_t lag_subsample_m = 20;
    double acf_x_weight = 0.0;
    double acf_x2_weight = 0.0;
    double pdf_weight = 0.0;

    // train.*
    TrainConfig train;

    double model_dt() const { return fine_dt * static_cast<double>(coarse_stride); }

    std::size_t fine_steps() const { return (trajectory_length - 1) * coarse_stride + 1; }

    void validate() const {
        if (trajectory_count < 1 || validation_count < 1 || trajectory_length < 2)
            throw ParameterError("config: counts must be >= 1 and trajectory_length >= 2");
        if (coarse_stride < 1) throw ParameterError("config: coarse_stride must be >= 1");
        if (!(fine_dt > 0)) throw ParameterError("config: fine_dt must be > 0");
        if (acf_x_weight <= 0 && acf_x2_weight <= 0 && pdf_weight <= 0)
            throw ParameterError("config: at least one loss target weight must be > 0");
        if (t_max >= trajectory_length)
            throw ParameterError("config: loss.t_max must be < trajectory_length");
        if (lag_subsample_m < 1 || lag_subsample_m > t_max)
            throw ParameterError("config: loss.lag_subsample_m must lie in [1, t_max]");
        model.validate();
        train.validate();
        build_system(); // validates system parameters
        input_noise().validate();
    }

    SdeSystem build_system() const {
        if (system_kind == "ou") return Ou{theta, sigma};
        if (system_kind == "fpu") return FpuLangevin{alpha, theta, gamma, beta};
        if (system_kind == "poisson") return PoissonPulse{b, lambda, rate};
        if (system_kind == "chain") return Chain{n_particles, alpha, theta, gamma, beta};
        if (system_kind == "double_well") return DoubleWell{v0, x0, gamma, beta};
        throw ParameterError("config: unknown system.kind " + system_kind);
    }

    NoiseSpec input_noise() const {
        if (noise_kind == "gaussian") return NoiseSpec::gaussian(noise_a, noise_b, 0);
        if (noise_kind == "uniform") return NoiseSpec::uniform(noise_a, noise_b, 0);
        if (noise_kind == "exponential") return NoiseSpec::exponential(noise_a, 0);
        throw ParameterError("config: unknown model.noise " + noise_kind);
    }

    std::vector<std::pair<Statistic, double>> target_kinds() const {
        std::vector<std::pair<Statistic, double>> kinds;
        if (acf_x_weight > 0) kinds.emplace_back(Statistic::AcfOfX, acf_x_weight);
        if (acf_x2_weight > 0) kinds.emplace_back(Statistic::AcfOfXSquared, acf_x2_weight);
        if (pdf_weight > 0) kinds.emplace_back(Statistic::Pdf, pdf_weight);
        return kinds;
    }
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

} // namespace detail

inline ExperimentConfig parse_config(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw FormatError("config: expected key = value: " + line);
        kv[detail::trim(line.substr(0, eq))] = detail::trim(line.substr(eq + 1));
    }

    ExperimentConfig c;
    bool base_seed_set = false;
    auto take = [&](const char* key) -> const std::string* {
        const auto it = kv.find(key);
        if (it == kv.end()) return nullptr;
        return &it->second;
    };
    auto as_double = [&](const char* key, double& out) {
        if (const auto* v = take(key)) out = std::stod(*v);
    };
    auto as_size = [&](const char* key, std::size_t& out) {
        if (const auto* v = take(key)) out = std::stoul(*v);
    };
    auto as_u64 = [&](const char* key, std::uint64_t& out) {
        if (const auto* v = take(key)) out = std::stoull(*v);
    };
    auto as_string = [&](const char* key, std::string& out) {
        if (const auto* v = take(key)) out = *v;
    };
    auto as_bool = [&](const char* key, bool& out) {
        if (const auto* v = take(key)) {
            if (*v == "true")
                out = true;
            else if (*v == "false")
                out = false;
            else
                throw FormatError(std::string("config: ") + key + " must be true or false");
        }
    };

    as_string("experiment.name", c.name);
    as_u64("experiment.seed", c.seed);
    as_string("system.kind", c.system_kind);
    as_double("system.theta", c.theta);
    as_double("system.sigma", c.sigma);
    as_double("system.alpha", c.alpha);
    as_double("system.gamma", c.gamma);
    as_double("system.beta", c.beta);
    as_double("system.b", c.b);
    as_double("system.lambda", c.lambda);
    as_double("system.rate", c.rate);
    as_double("system.v0", c.v0);
    as_double("system.x0", c.x0);
    as_size("system.n_particles", c.n_particles);
    as_double("data.fine_dt", c.fine_dt);
    as_size("data.coarse_stride", c.coarse_stride);
    as_size("data.trajectory_count", c.trajectory_count);
    as_size("data.validation_count", c.validation_count);
    as_size("data.trajectory_length", c.trajectory_length);
    as_size("data.burn_in_steps", c.burn_in_steps);
    as_size("model.num_layers", c.model.num_layers);
    as_size("model.hidden_size", c.model.hidden_size);
    as_size("model.input_dim", c.model.input_dim);
    as_size("model.output_dim", c.model.output_dim);
    as_double("model.dropout_prob", c.model.dropout_prob);
    as_string("model.noise", c.noise_kind);
    as_double("model.noise_a", c.noise_a);
    as_double("model.noise_b", c.noise_b);
    as_bool("loss.analytic", c.analytic_targets);
    as_size("loss.t_max", c.t_max);
    as_size("loss.lag_subsample_m", c.lag_subsample_m);
    as_double("loss.acf_x_weight", c.acf_x_weight);
    as_double("loss.acf_x2_weight", c.acf_x2_weight);
    as_double("loss.pdf_weight", c.pdf_weight);
    as_double("train.learning_rate", c.train.learning_rate);
    as_double("train.beta1", c.train.beta1);
    as_double("train.beta2", c.train.beta2);
    as_double("train.adam_epsilon", c.train.adam_epsilon);
    as_size("train.batch_size", c.train.batch_size);
    as_size("train.validation_size", c.train.validation_size);
    as_size("train.eval_interval", c.train.eval_interval);
    as_size("train.max_iterations", c.train.max_iterations);
    as_double("train.stop_threshold", c.train.stop_threshold);
    as_size("train.max_restarts", c.train.max_restarts);
    if (const auto* v = take("train.base_seed")) {
        c.train.base_seed = std::stoull(*v);
        base_seed_set = true;
    }
    if (!base_seed_set) c.train.base_seed = c.seed;
    c.train.lag_subsample_m = c.lag_subsample_m;

    static const char* known[] = {
        "experiment.name", "experiment.seed", "system.kind", "system.theta", "system.sigma",
        "system.alpha", "system.gamma", "system.beta", "system.b", "system.lambda",
        "system.rate", "system.v0", "system.x0", "system.n_particles", "data.fine_dt",
        "data.coarse_stride", "data.trajectory_count", "data.validation_count",
        "data.trajectory_length", "data.burn_in_steps", "model.num_layers",
        "model.hidden_size", "model.input_dim", "model.output_dim", "model.dropout_prob",
        "model.noise", "model.noise_a", "model.noise_b", "loss.analytic", "loss.t_max",
        "loss.lag_subsample_m", "loss.acf_x_weight", "loss.acf_x2_weight", "loss.pdf_weight",
        "train.learning_rate", "train.beta1", "train.beta2", "train.adam_epsilon",
        "train.batch_size", "train.validation_size", "train.eval_interval",
        "train.max_iterations", "train.stop_threshold", "train.max_restarts",
        "train.base_seed"};
    for (const auto& [key, _] : kv) {
        bool ok = false;
        for (const char* k : known)
            if (key == k) {
                ok = true;
                break;
            }
        if (!ok) throw FormatError("config: unknown key " + key);
    }
    return c;
}

// All fields materialized, for provenance files. parse(resolve(c)) == c.
inline std::string resolve_config(const ExperimentConfig& c) {
    std::ostringstream out;
    out.precision(17);
    out << "experiment.name = " << c.name << "\n";
    out << "experiment.seed = " << c.seed << "\n";
    out << "system.kind = " << c.system_kind << "\n";
    out << "system.theta = " << c.theta << "\n";
    out << "system.sigma = " << c.sigma << "\n";
    out << "system.alpha = " << c.alpha << "\n";
    out << "system.gamma = " << c.gamma << "\n";
    out << "system.beta = " << c.beta << "\n";
    out << "system.b = " << c.b << "\n";
    out << "system.lambda = " << c.lambda << "\n";
    out << "system.rate = " << c.rate << "\n";
    out << "system.v0 = " << c.v0 << "\n";
    out << "system.x0 = " << c.x0 << "\n";
    out << "system.n_particles = " << c.n_particles << "\n";
    out << "data.fine_dt = " << c.fine_dt << "\n";
    out << "data.coarse_stride = " << c.coarse_stride << "\n";
    out << "data.trajectory_count = " << c.trajectory_count << "\n";
    out << "data.validation_count = " << c.validation_count << "\n";
    out << "data.trajectory_length = " << c.trajectory_length << "\n";
    out << "data.burn_in_steps = " << c.burn_in_steps << "\n";
    out << "model.num_layers = " << c.model.num_layers << "\n";
    out << "model.hidden_size = " << c.model.hidden_size << "\n";
    out << "model.input_dim = " << c.model.input_dim << "\n";
    out << "model.output_dim = " << c.model.output_dim << "\n";
    out << "model.dropout_prob = " << c.model.dropout_prob << "\n";
    out << "model.noise = " << c.noise_kind << "\n";
    out << "model.noise_a = " << c.noise_a << "\n";
    out << "model.noise_b = " << c.noise_b << "\n";
    out << "loss.analytic = " << (c.analytic_targets ? "true" : "false") << "\n";
    out << "loss.t_max = " << c.t_max << "\n";
    out << "loss.lag_subsample_m = " << c.lag_subsample_m << "\n";
    out << "loss.acf_x_weight = " << c.acf_x_weight << "\n";
    out << "loss.acf_x2_weight = " << c.acf_x2_weight << "\n";
    out << "loss.pdf_weight = " << c.pdf_weight << "\n";
    out << "train.learning_rate = " << c.train.learning_rate << "\n";
    out << "train.beta1 = " << c.train.beta1 << "\n";
    out << "train.beta2 = " << c.train.beta2 << "\n";
    out << "train.adam_epsilon = " << c.train.adam_epsilon << "\n";
    out << "train.batch_size = " << c.train.batch_size << "\n";
    out << "train.validation_size = " << c.train.validation_size << "\n";
    out << "train.eval_interval = " << c.train.eval_interval << "\n";
    out << "train.max_iterations = " << c.train.max_iterations << "\n";
    out << "train.stop_threshold = " << c.train.stop_threshold << "\n";
    out << "train.max_restarts = " << c.train.max_restarts << "\n";
    out << "train.base_seed = " << c.train.base_seed << "\n";
    return out.str();
}

// Shipped experiment presets mirroring the reference parameter choices.
// Loss weights are calibrated so each statistic's sampling-noise floor sits
// well below the stopping threshold at the preset's ensemble sizes.
inline const std::map<std::string, std::string>& presets() {
    static const std::map<std::string, std::string> map = {
        {"ou", R"(experiment.name = ou
experiment.seed = 12061
system.kind = ou
system.theta = 1.0
system.sigma = 0.5
data.fine_dt = 0.001
data.coarse_stride = 100
data.trajectory_count = 400
data.validation_count = 800
data.trajectory_length = 401
data.burn_in_steps = 0
model.num_layers = 2
model.hidden_size = 5
model.noise = gaussian
model.noise_a = 0.0
model.noise_b = 1.0
loss.analytic = true
loss.t_max = 50
loss.lag_subsample_m = 20
loss.acf_x_weight = 0.08
loss.pdf_weight = 0.04
train.batch_size = 400
train.validation_size = 800
train.eval_interval = 100
train.max_iterations = 6000
train.stop_threshold = 0.001
train.max_restarts = 3
)"},
        {"fpu", R"(experiment.name = fpu
experiment.seed = 22062
system.kind = fpu
system.alpha = 1.0
system.theta = 1.0
system.gamma = 1.0
system.beta = 1.0
data.fine_dt = 0.001
data.coarse_stride = 200
data.trajectory_count = 400
data.validation_count = 800
data.trajectory_length = 401
model.num_layers = 2
model.hidden_size = 5
model.noise = gaussian
model.noise_a = 0.0
model.noise_b = 1.0
loss.t_max = 100
loss.lag_subsample_m = 20
loss.acf_x_weight = 0.05
loss.acf_x2_weight = 0.05
loss.pdf_weight = 0.05
train.batch_size = 400
train.validation_size = 800
train.eval_interval = 100
train.max_iterations = 8000
train.stop_threshold = 0.001
train.max_restarts = 3
)"},
        {"poisson", R"(experiment.name = poisson
experiment.seed = 32063
system.kind = poisson
system.b = 1.0
system.lambda = 2.0
system.rate = 1.0
data.fine_dt = 0.001
data.coarse_stride = 200
data.trajectory_count = 400
data.validation_count = 800
data.trajectory_length = 401
model.num_layers = 2
model.hidden_size = 5
model.noise = exponential
model.noise_a = 1.0
loss.t_max = 100
loss.lag_subsample_m = 20
loss.acf_x_weight = 0.05
loss.acf_x2_weight = 0.05
loss.pdf_weight = 0.05
train.batch_size = 400
train.validation_size = 800
train.eval_interval = 100
train.max_iterations = 8000
train.stop_threshold = 0.001
train.max_restarts = 3
)"},
        {"cg-chain", R"(experiment.name = cg-chain
experiment.seed = 42064
system.kind = chain
system.n_particles = 100
system.alpha = 1.0
system.theta = 1.0
system.gamma = 1.0
system.beta = 1.0
data.fine_dt = 0.001
data.coarse_stride = 100
data.trajectory_count = 400
data.validation_count = 800
data.trajectory_length = 401
model.num_layers = 2
model.hidden_size = 5
model.noise = gaussian
model.noise_a = 0.0
model.noise_b = 1.0
loss.t_max = 100
loss.lag_subsample_m = 20
loss.acf_x_weight = 0.05
loss.acf_x2_weight = 0.05
loss.pdf_weight = 0.05
train.batch_size = 400
train.validation_size = 800
train.eval_interval = 100
train.max_iterations = 8000
train.stop_threshold = 0.001
train.max_restarts = 3
)"},
        {"double-well-v4", R"(experiment.name = double-well-v4
experiment.seed = 52065
system.kind = double_well
system.v0 = 4.0
system.x0 = 1.0
system.gamma = 1.0
system.beta = 1.0
data.fine_dt = 0.001
data.coarse_stride = 200
data.trajectory_count = 400
data.validation_count = 800
data.trajectory_length = 401
model.num_layers = 2
model.hidden_size = 25
model.noise = gaussian
model.noise_a = 0.0
model.noise_b = 1.0
loss.t_max = 200
loss.lag_subsample_m = 20
loss.acf_x_weight = 0.02
loss.acf_x2_weight = 0.02
loss.pdf_weight = 0.02
train.batch_size = 400
train.validation_size = 800
train.eval_interval = 100
train.max_iterations = 6000
train.stop_threshold = 0.001
train.max_restarts = 3
)"},
        {"double-well-v5", R"(experiment.name = double-well-v5
experiment.seed = 62066
system.kind = double_well
system.v0 = 5.0
system.x0 = 1.0
system.gamma = 1.0
system.beta = 1.0
data.fine_dt = 0.001
data.coarse_stride = 200
data.trajectory_count = 400
data.validation_count = 800
data.trajectory_length = 401
model.num_layers = 2
model.hidden_size = 25
model.noise = gaussian
model.noise_a = 0.0
model.noise_b = 1.0
loss.t_max = 200
loss.lag_subsample_m = 20
loss.acf_x_weight = 0.02
loss.acf_x2_weight = 0.02
loss.pdf_weight = 0.02
train.batch_size = 400
train.validation_size = 800
train.eval_interval = 100
train.max_iterations = 6000
train.stop_threshold = 0.001
train.max_restarts = 3
)"},
        {"double-well-v6", R"(experiment.name = double-well-v6
experiment.seed = 72067
system.kind = double_well
system.v0 = 6.0
system.x0 = 1.0
system.gamma = 1.0
system.beta = 1.0
data.fine_dt = 0.001
data.coarse_stride = 500
data.trajectory_count = 400
data.validation_count = 800
data.trajectory_length = 161
model.num_layers = 2
model.hidden_size = 25
model.noise = gaussian
model.noise_a = 0.0
model.noise_b = 1.0
loss.t_max = 100
loss.lag_subsample_m = 20
loss.acf_x_weight = 0.02
loss.acf_x2_weight = 0.02
loss.pdf_weight = 0.02
train.batch_size = 400
train.validation_size = 800
train.eval_interval = 100
train.max_iterations = 6000
train.stop_threshold = 0.001
train.max_restarts = 3
)"},
    };
    return map;
}

inline ExperimentConfig load_preset(const std::string& name) {
    const auto it = presets().find(name);
    if (it == presets().end()) throw ParameterError("unknown preset: " + name);
    ExperimentConfig c = parse_config(it->second);
    c.validate();
    return c;
}

} // namespace sinn

#endif
