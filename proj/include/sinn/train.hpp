#ifndef SINN_TRAIN_HPP
#define SINN_TRAIN_HPP

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "sinn/nn.hpp"
#include "sinn/stats.hpp"

namespace sinn {

struct TrainConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_epsilon = 1e-8;
    std::size_t batch_size = 400;
    std::size_t validation_size = 800;
    std::size_t lag_subsample_m = 20;
    std::size_t eval_interval = 100;
    std::size_t max_iterations = 20000;
    double stop_threshold = 1e-3;
    std::size_t max_restarts = 2;
    std::uint64_t base_seed = 0;

    void validate() const {
        if (!(learning_rate >= 0)) throw ParameterError("learning_rate must be >= 0");
        if (!(beta1 > 0 && beta1 < 1) || !(beta2 > 0 && beta2 < 1))
            throw ParameterError("adam betas must lie in (0, 1)");
        if (!(adam_epsilon > 0)) throw ParameterError("adam_epsilon must be > 0");
        if (batch_size < 1 || validation_size < 1) throw ParameterError("batch sizes must be >= 1");
        if (eval_interval < 1) throw ParameterError("eval_interval must be >= 1");
        if (max_iterations < 1) throw ParameterError("max_iterations must be >= 1");
        if (!(stop_threshold > 0)) throw ParameterError("stop_threshold must be > 0");
    }
};

// First/second moment accumulators mirroring the canonical parameter layout.
struct AdamState {
    std::vector<Mat> m, v;
    std::uint64_t step = 0;

    static AdamState zeros_like(const SinnParams& p) {
        AdamState st;
        for_each_param(const_cast<SinnParams&>(p), [&](const std::string&, Mat& a) {
            st.m.push_back(Mat::Zero(a.rows(), a.cols()));
            st.v.push_back(Mat::Zero(a.rows(), a.cols()));
        });
        return st;
    }
};

template <class P>
std::vector<Mat*> param_arrays(P& params) {
    std::vector<Mat*> out;
    for_each_param(params, [&](const std::string&, Mat& m) { out.push_back(&m); });
    return out;
}

// Bias-corrected Adam update: p <- p - lr * m_hat / (sqrt(v_hat) + eps).
inline std::pair<SinnParams, AdamState> adam_step(const SinnParams& params,
                                                  const SinnParams& grads, AdamState state,
                                                  const TrainConfig& cfg) {
    SinnParams out = params;
    state.step += 1;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
    const auto ps = param_arrays(out);
    const auto gs = param_arrays(const_cast<SinnParams&>(grads));
    if (ps.size() != gs.size() || ps.size() != state.m.size())
        throw ShapeError("adam state layout mismatch");
    for (std::size_t k = 0; k < ps.size(); ++k) {
        Mat& p = *ps[k];
        const Mat& g = *gs[k];
        if (g.rows() != p.rows() || g.cols() != p.cols())
            throw ShapeError("adam gradient shape mismatch");
        if (!g.allFinite()) throw NumericError("non-finite gradient in adam_step");
        Mat& m = state.m[k];
        Mat& v = state.v[k];
        m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
        v = (cfg.beta2 * v.array() + (1.0 - cfg.beta2) * g.array().square()).matrix();
        p.array() -= cfg.learning_rate * (m.array() / bc1) /
                     ((v.array() / bc2).sqrt() + cfg.adam_epsilon);
    }
    return {std::move(out), std::move(state)};
}

// m distinct lags uniform without replacement from {1..t_max}, plus lag 0
// (which anchors the normalization), sorted ascending.
inline std::vector<std::size_t> select_lags(std::size_t t_max, std::size_t m, Xoshiro256& g) {
    if (m < 1) throw ParameterError("select_lags needs m >= 1");
    if (m > t_max) throw ParameterError("select_lags needs m <= t_max");
    std::vector<std::size_t> pool(t_max);
    for (std::size_t i = 0; i < t_max; ++i) pool[i] = i + 1;
    for (std::size_t i = 0; i < m; ++i) {
        const std::size_t j =
            i + static_cast<std::size_t>(g.uniform01() * static_cast<double>(t_max - i));
        std::swap(pool[i], pool[std::min(j, t_max - 1)]);
    }
    std::vector<std::size_t> lags(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(m));
    lags.push_back(0);
    std::sort(lags.begin(), lags.end());
    return lags;
}

enum class Statistic { AcfOfX, AcfOfXSquared, Pdf };

inline const char* statistic_name(Statistic s) {
    switch (s) {
    case Statistic::AcfOfX: return "acf_x";
    case Statistic::AcfOfXSquared: return "acf_x2";
    case Statistic::Pdf: return "pdf";
    }
    return "?";
}

// One training target: an autocorrelation curve (of the process or its
// square) over lags 0..t_max, or a probability density on a fixed grid.
// Ensemble-estimated targets keep separate train/validation curves; the pdf
// target keeps raw samples so it can be re-estimated at the bandwidth of
// whichever output pool it is compared against. Analytic Gaussian pdf
// targets are evaluated as the kernel-smoothed density N(0, var + h^2),
// which is the exact expectation of the estimator under the target law.
struct StatTarget {
    Statistic kind = Statistic::AcfOfX;
    double weight = 1.0;
    std::vector<double> acf_train, acf_val; // AcfOfX / AcfOfXSquared
    bool analytic_gaussian = false;         // Pdf
    double gaussian_variance = 0.0;
    std::vector<double> pdf_train_samples, pdf_val_samples;
    std::vector<double> grid;
};

struct LossSpec {
    std::vector<StatTarget> targets;
    std::size_t t_max = 50;
    std::size_t lag_subsample_m = 20;

    void validate() const {
        if (targets.empty()) throw ParameterError("loss spec needs at least one target");
        for (const auto& t : targets)
            if (!(t.weight > 0)) throw ParameterError("target weights must be > 0");
        if (lag_subsample_m < 1 || lag_subsample_m > t_max)
            throw ParameterError("lag_subsample_m must lie in [1, t_max]");
    }
};

inline std::vector<double> gaussian_density(const std::vector<double>& grid, double variance) {
    std::vector<double> out(grid.size());
    const double norm = 1.0 / std::sqrt(2.0 * std::numbers::pi * variance);
    for (std::size_t i = 0; i < grid.size(); ++i)
        out[i] = norm * std::exp(-grid[i] * grid[i] / (2.0 * variance));
    return out;
}

// Target density values at bandwidth h (smoothed analytic law, or a KDE of
// the stored target samples at the same h as the compared estimate).
inline std::vector<double> pdf_target_at(const StatTarget& t, double h, bool validation) {
    if (t.analytic_gaussian) return gaussian_density(t.grid, t.gaussian_variance + h * h);
    const auto& samples =
        (validation && !t.pdf_val_samples.empty()) ? t.pdf_val_samples : t.pdf_train_samples;
    return kde_with_bandwidth(samples, t.grid, h).density;
}

// ---- target builders ----

// Analytic OU targets: ACF(tau) = exp(-theta tau dt) and the Gaussian
// equilibrium density N(0, sigma^2 / 2 theta).
inline LossSpec ou_targets(double theta, double sigma, double dt, std::size_t t_max,
                           std::size_t m, std::size_t train_pool, double acf_weight,
                           double pdf_weight) {
    LossSpec spec;
    spec.t_max = t_max;
    spec.lag_subsample_m = m;

    StatTarget acf;
    acf.kind = Statistic::AcfOfX;
    acf.weight = acf_weight;
    acf.acf_train.resize(t_max + 1);
    for (std::size_t tau = 0; tau <= t_max; ++tau)
        acf.acf_train[tau] = std::exp(-theta * static_cast<double>(tau) * dt);
    acf.acf_val = acf.acf_train;
    spec.targets.push_back(std::move(acf));

    StatTarget pdf;
    pdf.kind = Statistic::Pdf;
    pdf.weight = pdf_weight;
    pdf.analytic_gaussian = true;
    pdf.gaussian_variance = sigma * sigma / (2.0 * theta);
    const double sd = std::sqrt(pdf.gaussian_variance);
    const double h = std::pow(static_cast<double>(train_pool), -0.2);
    const double span = 5.0 * sd + 3.0 * h;
    pdf.grid.resize(100);
    for (std::size_t i = 0; i < 100; ++i)
        pdf.grid[i] = -span + 2.0 * span * static_cast<double>(i) / 99.0;
    spec.targets.push_back(std::move(pdf));
    return spec;
}

// Targets estimated from a reference ensemble (1-dim), with a held-out
// validation ensemble when available.
inline LossSpec ensemble_targets(const Ensemble& train, const Ensemble* val, std::size_t t_max,
                                 std::size_t m,
                                 const std::vector<std::pair<Statistic, double>>& kinds) {
    if (train.dim != 1) throw ShapeError("ensemble targets need a 1-dim ensemble");
    LossSpec spec;
    spec.t_max = t_max;
    spec.lag_subsample_m = m;
    for (const auto& [kind, weight] : kinds) {
        StatTarget t;
        t.kind = kind;
        t.weight = weight;
        if (kind == Statistic::Pdf) {
            t.pdf_train_samples = train.data;
            if (val) t.pdf_val_samples = val->data;
            t.grid = kde_grid(t.pdf_train_samples);
        } else {
            const bool squared = kind == Statistic::AcfOfXSquared;
            t.acf_train = acf_brute(squared ? train.squared() : train, t_max).values;
            t.acf_val = val ? acf_brute(squared ? val->squared() : *val, t_max).values
                            : t.acf_train;
        }
        spec.targets.push_back(std::move(t));
    }
    return spec;
}

// ---- losses on the tape (training path) ----

namespace detail {

// Centered, lag-0 normalized ensemble ACF at the given lag set, compared to
// the target values with the combined L1+L2 loss averaged over the set.
// Lag 0 contributes an exact zero (both curves are 1 there) and is counted
// in the averaging only.
inline int acf_loss_node(Tape& tape, int y_node, const std::vector<std::size_t>& lags,
                         const std::vector<double>& target_full) {
    const auto n = tape.value(y_node).rows();
    const int centered = tape.sub(y_node, tape.mean_all(y_node));
    const int v0 = tape.mean_all(tape.square(centered));
    int sum = -1;
    for (const std::size_t tau : lags) {
        if (tau == 0) continue;
        const auto t = static_cast<int>(tau);
        const int head = tape.slice_rows(centered, 0, static_cast<int>(n) - t);
        const int tail = tape.slice_rows(centered, t, static_cast<int>(n) - t);
        const int acf_tau = tape.div(tape.mean_all(tape.mul(head, tail)), v0);
        const int delta = tape.sub(acf_tau, tape.constant(Mat::Constant(1, 1, target_full[tau])));
        const int term = tape.add(tape.abs(delta), tape.square(delta));
        sum = sum < 0 ? term : tape.add(sum, term);
    }
    if (sum < 0) throw ParameterError("acf loss needs at least one nonzero lag");
    return tape.scale(sum, 1.0 / static_cast<double>(lags.size()));
}

inline int pdf_loss_node(Tape& tape, int y_node, const std::vector<double>& grid,
                         const std::vector<double>& target_density, double h) {
    Mat grid_m(static_cast<Eigen::Index>(grid.size()), 1);
    Mat target_m(static_cast<Eigen::Index>(grid.size()), 1);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        grid_m(static_cast<Eigen::Index>(i), 0) = grid[i];
        target_m(static_cast<Eigen::Index>(i), 0) = target_density[i];
    }
    const int f = tape.kde_eval(y_node, grid_m, h);
    const int delta = tape.sub(f, tape.constant(std::move(target_m)));
    return tape.add(tape.mean_all(tape.abs(delta)), tape.mean_all(tape.square(delta)));
}

} // namespace detail

// Weighted total loss over the spec's targets for the generated sequence
// node (time x batch). Returns the scalar loss node.
inline int build_loss(Tape& tape, int y_node, const LossSpec& spec,
                      const std::vector<std::size_t>& lags, double h_pool) {
    int total = -1;
    int y_squared = -1;
    for (const auto& t : spec.targets) {
        int node = -1;
        switch (t.kind) {
        case Statistic::AcfOfX:
            node = detail::acf_loss_node(tape, y_node, lags, t.acf_train);
            break;
        case Statistic::AcfOfXSquared:
            if (y_squared < 0) y_squared = tape.square(y_node);
            node = detail::acf_loss_node(tape, y_squared, lags, t.acf_train);
            break;
        case Statistic::Pdf:
            node = detail::pdf_loss_node(tape, y_node, t.grid,
                                         pdf_target_at(t, h_pool, false), h_pool);
            break;
        }
        node = tape.scale(node, t.weight);
        total = total < 0 ? node : tape.add(total, node);
    }
    return total;
}

// Full-statistics loss of a generated ensemble against the targets
// (evaluation path, no gradients). Used for eps_T, eps_V and model selection.
inline double evaluate_loss(const Ensemble& gen, const LossSpec& spec, bool validation) {
    if (gen.dim != 1) throw ShapeError("evaluate_loss needs a 1-dim ensemble");
    const double h_pool =
        std::pow(static_cast<double>(gen.batch * gen.time), -0.2);
    double total = 0.0;
    std::optional<Ensemble> squared;
    for (const auto& t : spec.targets) {
        double value = 0.0;
        switch (t.kind) {
        case Statistic::AcfOfX:
        case Statistic::AcfOfXSquared: {
            const bool sq = t.kind == Statistic::AcfOfXSquared;
            if (sq && !squared) squared = gen.squared();
            const AcfCurve est = acf_brute(sq ? *squared : gen, spec.t_max);
            value = loss_values(est.values, validation ? t.acf_val : t.acf_train);
            break;
        }
        case Statistic::Pdf: {
            const PdfEstimate est = kde_with_bandwidth(gen.data, t.grid, h_pool);
            value = loss_values(est.density, pdf_target_at(t, h_pool, validation));
            break;
        }
        }
        total += t.weight * value;
    }
    return total;
}

// ---- training loop ----

struct TrainReportEntry {
    std::size_t iteration = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
    double seconds = 0.0;
};

struct TrainReport {
    std::vector<TrainReportEntry> entries;
};

inline std::string to_csv(const TrainReport& r) {
    std::string out = "iteration,train_loss,val_loss,seconds\n";
    for (const auto& e : r.entries) {
        std::ostringstream ss;
        ss.precision(17);
        ss << e.iteration << ',' << e.train_loss << ',' << e.val_loss << ',' << e.seconds
           << '\n';
        out += ss.str();
    }
    return out;
}

inline TrainReport report_from_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != "iteration,train_loss,val_loss,seconds")
        throw FormatError("train report csv: bad header");
    TrainReport r;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        TrainReportEntry e;
        std::istringstream row(line);
        char c;
        if (!(row >> e.iteration >> c >> e.train_loss >> c >> e.val_loss >> c >> e.seconds))
            throw FormatError("train report csv: bad row");
        r.entries.push_back(e);
    }
    return r;
}

struct TrainResult {
    SinnParams params;
    TrainReport report;
    double best_val_loss = std::numeric_limits<double>::infinity();
    std::size_t iterations = 0;
    std::size_t restarts_used = 0;
};

// Thrown when every restart budget is spent without meeting the stopping
// criterion; carries the best report and parameters seen.
class TrainingFailed : public Error {
public:
    TrainingFailed(std::string msg, TrainReport report, SinnParams best, double best_val)
        : Error("training-failed", msg), report(std::move(report)), best_params(std::move(best)),
          best_val_loss(best_val) {}
    TrainReport report;
    SinnParams best_params;
    double best_val_loss;
};

// Called at every evaluation with the fresh report entry, the current
// parameters and whether the validation loss improved.
using EvalCallback =
    std::function<void(const TrainReportEntry&, const SinnParams&, bool improved)>;

namespace detail {

// Seed-derivation tags; all training randomness hangs off base_seed.
inline constexpr std::uint64_t kSeedInit = 0xA0000000ULL;
inline constexpr std::uint64_t kSeedIteration = 0x4E000000ULL;  // hash(base_seed, iteration)
inline constexpr std::uint64_t kSeedLags = 0x1A600000ULL;
inline constexpr std::uint64_t kSeedValidation = 0x7A100000ULL;
inline constexpr std::uint64_t kSeedDropout = 0xD0000000ULL;

inline Ensemble ensemble_from_columns(const Mat& y, double dt) {
    // y is time x batch
    Ensemble e(static_cast<std::size_t>(y.cols()), static_cast<std::size_t>(y.rows()), 1, dt);
    for (Eigen::Index i = 0; i < y.cols(); ++i)
        for (Eigen::Index t = 0; t < y.rows(); ++t)
            e.at(static_cast<std::size_t>(i), static_cast<std::size_t>(t), 0) = y(t, i);
    return e;
}

} // namespace detail

// Adam training with fresh input noise per iteration, random lag
// subsampling, tracked train/validation losses, stall detection and
// retry-on-stall from a new random initialization.
inline TrainResult train(const SinnConfig& config, const TrainConfig& tcfg,
                         const LossSpec& spec, const NoiseSpec& input_noise, std::size_t steps,
                         double dt, const EvalCallback& callback = nullptr) {
    config.validate();
    tcfg.validate();
    spec.validate();
    if (config.output_dim != 1) throw ParameterError("training requires output_dim == 1");
    if (spec.t_max >= steps) throw ParameterError("t_max must be < sequence length");
    const bool threshold_enabled = std::isfinite(tcfg.stop_threshold);

    TrainResult result;
    SinnParams best_params;
    double best_val = std::numeric_limits<double>::infinity();
    bool have_best = false;
    std::size_t global_iter = 0;
    std::size_t eval_count = 0;
    const auto t_start = std::chrono::steady_clock::now();
    auto elapsed = [&] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    };

    Tape tape;
    for (std::size_t attempt = 0; attempt <= tcfg.max_restarts; ++attempt) {
        SinnParams params =
            init_params(config, derive_stream(tcfg.base_seed, detail::kSeedInit + attempt));
        AdamState adam = AdamState::zeros_like(params);
        Xoshiro256 lag_rng(derive_stream(tcfg.base_seed, detail::kSeedLags + attempt));
        Xoshiro256 dropout_rng(derive_stream(tcfg.base_seed, detail::kSeedDropout + attempt));
        double attempt_best_val = std::numeric_limits<double>::infinity();
        std::size_t evals_since_improvement = 0;
        bool stalled = false;

        for (std::size_t it = 1; it <= tcfg.max_iterations; ++it) {
            ++global_iter;
            const auto noise_seed =
                derive_stream(tcfg.base_seed, detail::kSeedIteration + global_iter);
            const Ensemble noise = sample_noise(input_noise.with_seed(noise_seed),
                                                tcfg.batch_size, steps, config.input_dim);
            tape.clear();
            const GeneratorGraph graph = build_generator_graph(
                tape, config, params, noise, config.dropout_prob > 0.0, &dropout_rng);
            const auto lags = select_lags(spec.t_max, spec.lag_subsample_m, lag_rng);
            const double h_pool = std::pow(
                static_cast<double>(tcfg.batch_size * steps), -0.2);
            const int loss = build_loss(tape, graph.output_seq, spec, lags, h_pool);
            tape.backward(loss);
            const SinnParams grads = collect_gradients(tape, config, graph);
            std::tie(params, adam) = adam_step(params, grads, adam, tcfg);

            const bool last_of_attempt = it == tcfg.max_iterations;
            if (global_iter % tcfg.eval_interval == 0 || last_of_attempt) {
                ++eval_count;
                // eps_T: this iteration's batch with the full lag range.
                const Ensemble batch_output =
                    detail::ensemble_from_columns(tape.value(graph.output_seq), dt);
                const double eps_t = evaluate_loss(batch_output, spec, false);
                const Ensemble val = sinn_generate(
                    params, config,
                    input_noise.with_seed(
                        derive_stream(tcfg.base_seed, detail::kSeedValidation + eval_count)),
                    tcfg.validation_size, steps, dt);
                const double eps_v = evaluate_loss(val, spec, true);

                TrainReportEntry entry{global_iter, eps_t, eps_v, elapsed()};
                result.report.entries.push_back(entry);
                const bool improved = eps_v < best_val;
                if (improved) {
                    best_val = eps_v;
                    best_params = params;
                    have_best = true;
                }
                if (callback) callback(entry, params, improved);

                if (threshold_enabled && eps_t <= tcfg.stop_threshold &&
                    eps_v <= tcfg.stop_threshold) {
                    result.params = params;
                    result.best_val_loss = eps_v;
                    result.iterations = global_iter;
                    result.restarts_used = attempt;
                    return result;
                }
                // Stall rule: no >1% validation improvement across 10
                // consecutive evaluations triggers a restart.
                if (eps_v < 0.99 * attempt_best_val) {
                    attempt_best_val = eps_v;
                    evals_since_improvement = 0;
                } else if (++evals_since_improvement >= 10 && threshold_enabled) {
                    stalled = true;
                }
            }
            if (stalled) break;
        }

        if (!threshold_enabled) {
            // Stopping disabled: a full max_iterations run is the result.
            result.params = params;
            result.best_val_loss = best_val;
            result.iterations = global_iter;
            result.restarts_used = attempt;
            return result;
        }
    }

    throw TrainingFailed("stopping criterion not met after " +
                             std::to_string(tcfg.max_restarts + 1) + " attempts",
                         std::move(result.report), have_best ? best_params : SinnParams{},
                         best_val);
}

// ---- ensemble selection ----

struct Candidate {
    SinnParams params;
    double extrapolated_val_loss = 0.0;
};

// Re-scored candidates sorted by extrapolated validation loss ascending;
// ties break toward the earlier candidate. The first element is the best
// model.
inline std::vector<Candidate> ensemble_select(const std::vector<Candidate>& candidates,
                                              std::size_t top_k) {
    if (candidates.empty()) throw ParameterError("ensemble_select needs candidates");
    if (top_k < 1) throw ParameterError("ensemble_select needs top_k >= 1");
    std::vector<std::size_t> order(candidates.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return candidates[a].extrapolated_val_loss < candidates[b].extrapolated_val_loss;
    });
    std::vector<Candidate> out;
    for (std::size_t i = 0; i < std::min(top_k, candidates.size()); ++i)
        out.push_back(candidates[order[i]]);
    return out;
}

// Validation loss of trajectories extrapolated beyond the training horizon,
// scored on the time window where the target statistics are known.
inline double evaluate_extrapolated(const SinnConfig& config, const SinnParams& params,
                                    const LossSpec& spec, const NoiseSpec& input_noise,
                                    std::size_t extended_steps, double dt,
                                    std::size_t trajectories, std::uint64_t seed) {
    if (spec.t_max >= extended_steps)
        throw ParameterError("extrapolation horizon must exceed t_max");
    const Ensemble gen = sinn_generate(params, config, input_noise.with_seed(seed),
                                       trajectories, extended_steps, dt);
    return evaluate_loss(gen, spec, true);
}

} // namespace sinn

#endif
