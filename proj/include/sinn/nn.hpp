#ifndef SINN_NN_HPP
#define SINN_NN_HPP

#include <Eigen/Core>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "sinn/ensemble.hpp"
#include "sinn/errors.hpp"
#include "sinn/parallel.hpp"
#include "sinn/rng.hpp"
#include "sinn/tape.hpp"

namespace sinn {

struct SinnConfig {
    std::size_t num_layers = 2;
    std::size_t hidden_size = 5;
    std::size_t input_dim = 1;
    std::size_t output_dim = 1;
    double dropout_prob = 0.0;

    void validate() const {
        if (num_layers < 1 || hidden_size < 1 || input_dim < 1 || output_dim < 1)
            throw ParameterError("sinn config dimensions must be >= 1");
        if (!(dropout_prob >= 0.0 && dropout_prob < 1.0))
            throw ParameterError("dropout_prob must lie in [0, 1)");
    }

    std::size_t layer_input(std::size_t layer) const {
        return layer == 0 ? input_dim : hidden_size;
    }
};

// Gate weights per layer; biases are stored as h x 1 matrices so every
// trainable array shares one type.
struct LayerParams {
    Mat w_f, w_i, w_o, w_c; // input weights, hidden x in_width
    Mat u_f, u_i, u_o, u_c; // recurrent weights, hidden x hidden
    Mat b_f, b_i, b_o, b_c; // biases, hidden x 1
};

struct SinnParams {
    std::vector<LayerParams> layers;
    Mat w_m; // readout, output_dim x hidden
};

// Canonical parameter order: per layer W_f W_i W_o W_c, U_f..U_c, b_f..b_c,
// then the readout. Initialization, Adam state, checkpoints and gradient
// layouts all follow this order.
template <class P, class Fn>
void for_each_param(P& params, Fn fn) {
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        auto& lp = params.layers[l];
        const std::string prefix = "layer" + std::to_string(l) + ".";
        fn(prefix + "w_f", lp.w_f);
        fn(prefix + "w_i", lp.w_i);
        fn(prefix + "w_o", lp.w_o);
        fn(prefix + "w_c", lp.w_c);
        fn(prefix + "u_f", lp.u_f);
        fn(prefix + "u_i", lp.u_i);
        fn(prefix + "u_o", lp.u_o);
        fn(prefix + "u_c", lp.u_c);
        fn(prefix + "b_f", lp.b_f);
        fn(prefix + "b_i", lp.b_i);
        fn(prefix + "b_o", lp.b_o);
        fn(prefix + "b_c", lp.b_c);
    }
    fn(std::string("readout.w_m"), params.w_m);
}

// Weights uniform on [-1/sqrt(hidden), +1/sqrt(hidden)] drawn row-major in
// canonical order; forget-gate biases start at +1, the others at 0.
inline SinnParams init_params(const SinnConfig& config, std::uint64_t seed) {
    config.validate();
    Xoshiro256 g(derive_stream(seed, 0));
    const double bound = 1.0 / std::sqrt(static_cast<double>(config.hidden_size));
    auto draw = [&](Mat& m, Eigen::Index rows, Eigen::Index cols) {
        m.resize(rows, cols);
        for (Eigen::Index r = 0; r < rows; ++r)
            for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = g.uniform(-bound, bound);
    };

    SinnParams p;
    p.layers.resize(config.num_layers);
    const auto h = static_cast<Eigen::Index>(config.hidden_size);
    for (std::size_t l = 0; l < config.num_layers; ++l) {
        auto& lp = p.layers[l];
        const auto in = static_cast<Eigen::Index>(config.layer_input(l));
        draw(lp.w_f, h, in);
        draw(lp.w_i, h, in);
        draw(lp.w_o, h, in);
        draw(lp.w_c, h, in);
        draw(lp.u_f, h, h);
        draw(lp.u_i, h, h);
        draw(lp.u_o, h, h);
        draw(lp.u_c, h, h);
        lp.b_f = Mat::Ones(h, 1);
        lp.b_i = Mat::Zero(h, 1);
        lp.b_o = Mat::Zero(h, 1);
        lp.b_c = Mat::Zero(h, 1);
    }
    draw(p.w_m, static_cast<Eigen::Index>(config.output_dim), h);
    return p;
}

inline void check_shapes(const SinnConfig& config, const SinnParams& p) {
    config.validate();
    if (p.layers.size() != config.num_layers) throw ShapeError("layer count mismatch");
    const auto h = static_cast<Eigen::Index>(config.hidden_size);
    for (std::size_t l = 0; l < p.layers.size(); ++l) {
        const auto& lp = p.layers[l];
        const auto in = static_cast<Eigen::Index>(config.layer_input(l));
        for (const Mat* m : {&lp.w_f, &lp.w_i, &lp.w_o, &lp.w_c})
            if (m->rows() != h || m->cols() != in) throw ShapeError("input weight shape mismatch");
        for (const Mat* m : {&lp.u_f, &lp.u_i, &lp.u_o, &lp.u_c})
            if (m->rows() != h || m->cols() != h) throw ShapeError("recurrent weight shape mismatch");
        for (const Mat* m : {&lp.b_f, &lp.b_i, &lp.b_o, &lp.b_c})
            if (m->rows() != h || m->cols() != 1) throw ShapeError("bias shape mismatch");
        for (const Mat* m : {&lp.w_f, &lp.w_i, &lp.w_o, &lp.w_c, &lp.u_f, &lp.u_i, &lp.u_o,
                             &lp.u_c, &lp.b_f, &lp.b_i, &lp.b_o, &lp.b_c})
            if (!m->allFinite()) throw NumericError("parameter array not finite");
    }
    if (p.w_m.rows() != static_cast<Eigen::Index>(config.output_dim) || p.w_m.cols() != h)
        throw ShapeError("readout shape mismatch");
    if (!p.w_m.allFinite()) throw NumericError("parameter array not finite");
}

// Optional one-layer demo cell: s' = tanh(A s + B x - theta).
inline Eigen::VectorXd vanilla_rnn_step(const Mat& A, const Mat& B,
                                        const Eigen::VectorXd& theta,
                                        const Eigen::VectorXd& s, const Eigen::VectorXd& x) {
    if (A.rows() != A.cols() || A.rows() != s.size() || B.rows() != s.size() ||
        B.cols() != x.size() || theta.size() != s.size())
        throw ShapeError("vanilla_rnn_step shape mismatch");
    Mat z = A * s + B * x - theta;
    act::tanh(z);
    return z.col(0);
}

// ---------------------------------------------------------------------------
// Tape-recorded forward pass (training path)
// ---------------------------------------------------------------------------

struct LayerNodeIds {
    int w_f, w_i, w_o, w_c;
    int u_f, u_i, u_o, u_c;
    int b_f, b_i, b_o, b_c;
};

struct GeneratorGraph {
    std::vector<LayerNodeIds> layers;
    int w_m = -1;
    std::vector<int> hidden;  // per-step top-layer h nodes
    std::vector<int> outputs; // per-step readout nodes (output_dim x batch)
    int output_seq = -1;      // time x batch concat (1-dim output models)
};

inline std::vector<LayerNodeIds> register_params(Tape& tape, const SinnConfig& config,
                                                 const SinnParams& p, int& w_m_id) {
    check_shapes(config, p);
    std::vector<LayerNodeIds> ids;
    for (const auto& lp : p.layers) {
        LayerNodeIds id{};
        id.w_f = tape.parameter(lp.w_f);
        id.w_i = tape.parameter(lp.w_i);
        id.w_o = tape.parameter(lp.w_o);
        id.w_c = tape.parameter(lp.w_c);
        id.u_f = tape.parameter(lp.u_f);
        id.u_i = tape.parameter(lp.u_i);
        id.u_o = tape.parameter(lp.u_o);
        id.u_c = tape.parameter(lp.u_c);
        id.b_f = tape.parameter(lp.b_f);
        id.b_i = tape.parameter(lp.b_i);
        id.b_o = tape.parameter(lp.b_o);
        id.b_c = tape.parameter(lp.b_c);
        ids.push_back(id);
    }
    w_m_id = tape.parameter(p.w_m);
    return ids;
}

// Read gradients back into the canonical parameter layout after backward().
inline SinnParams collect_gradients(const Tape& tape, const SinnConfig& config,
                                    const GeneratorGraph& graph) {
    SinnParams g;
    g.layers.resize(config.num_layers);
    for (std::size_t l = 0; l < config.num_layers; ++l) {
        const auto& id = graph.layers[l];
        auto& lp = g.layers[l];
        lp.w_f = tape.grad(id.w_f);
        lp.w_i = tape.grad(id.w_i);
        lp.w_o = tape.grad(id.w_o);
        lp.w_c = tape.grad(id.w_c);
        lp.u_f = tape.grad(id.u_f);
        lp.u_i = tape.grad(id.u_i);
        lp.u_o = tape.grad(id.u_o);
        lp.u_c = tape.grad(id.u_c);
        lp.b_f = tape.grad(id.b_f);
        lp.b_i = tape.grad(id.b_i);
        lp.b_o = tape.grad(id.b_o);
        lp.b_c = tape.grad(id.b_c);
    }
    g.w_m = tape.grad(graph.w_m);
    return g;
}

// LSTM forward with every operation recorded. Gate preactivations for all
// four gates are evaluated as one stacked product per layer and step; the
// stack order is f, i, o, c.
inline GeneratorGraph build_generator_graph(Tape& tape, const SinnConfig& config,
                                            const SinnParams& params, const Ensemble& input,
                                            bool dropout_on = false,
                                            Xoshiro256* dropout_rng = nullptr) {
    if (input.dim != config.input_dim) throw ShapeError("lstm input dim mismatch");
    const auto h = static_cast<Eigen::Index>(config.hidden_size);
    const auto batch = static_cast<Eigen::Index>(input.batch);
    const std::size_t steps = input.time;
    const bool mask_layers = dropout_on && config.dropout_prob > 0.0;
    if (mask_layers && dropout_rng == nullptr)
        throw ParameterError("dropout requires an rng stream");

    GeneratorGraph graph;
    graph.layers = register_params(tape, config, params, graph.w_m);

    std::vector<int> wstack(config.num_layers), ustack(config.num_layers),
        bstack(config.num_layers);
    for (std::size_t l = 0; l < config.num_layers; ++l) {
        const auto& id = graph.layers[l];
        wstack[l] = tape.concat_rows({id.w_f, id.w_i, id.w_o, id.w_c});
        ustack[l] = tape.concat_rows({id.u_f, id.u_i, id.u_o, id.u_c});
        bstack[l] = tape.concat_rows({id.b_f, id.b_i, id.b_o, id.b_c});
    }

    const int zero_state = tape.constant(Mat::Zero(2 * h, batch));
    std::vector<int> hc_prev(config.num_layers, zero_state);
    graph.hidden.reserve(steps);
    graph.outputs.reserve(steps);

    Mat u0(static_cast<Eigen::Index>(config.input_dim), batch);
    for (std::size_t t = 0; t < steps; ++t) {
        for (Eigen::Index k = 0; k < u0.rows(); ++k)
            for (Eigen::Index i = 0; i < batch; ++i)
                u0(k, i) = input.at(static_cast<std::size_t>(i), t, static_cast<std::size_t>(k));
        int u = tape.constant(u0);
        int top_hidden = -1;
        for (std::size_t l = 0; l < config.num_layers; ++l) {
            const int hc = tape.lstm_cell(wstack[l], u, ustack[l], hc_prev[l], bstack[l]);
            if (!tape.value(hc).allFinite())
                throw NumericError("non-finite lstm activation at step " + std::to_string(t));
            hc_prev[l] = hc;
            top_hidden = tape.slice_rows(hc, 0, static_cast<int>(h));
            u = top_hidden;
            if (mask_layers && l + 1 < config.num_layers) {
                Mat mask(h, batch);
                const double keep = 1.0 - config.dropout_prob;
                for (Eigen::Index r = 0; r < h; ++r)
                    for (Eigen::Index cidx = 0; cidx < batch; ++cidx)
                        mask(r, cidx) = dropout_rng->uniform01() < keep ? 1.0 / keep : 0.0;
                u = tape.mul(u, tape.constant(std::move(mask)));
            }
        }
        graph.hidden.push_back(top_hidden);
        graph.outputs.push_back(tape.matmul(graph.w_m, top_hidden));
    }

    if (config.output_dim == 1) graph.output_seq = tape.concat_rows(graph.outputs);
    return graph;
}

// ---------------------------------------------------------------------------
// Streaming forward pass (generation / evaluation path, no tape)
// ---------------------------------------------------------------------------

namespace detail {

struct LayerStack {
    Mat w, u, b; // stacked f,i,o,c blocks
};

inline std::vector<LayerStack> stack_params(const SinnConfig& config, const SinnParams& p) {
    std::vector<LayerStack> out(config.num_layers);
    const auto h = static_cast<Eigen::Index>(config.hidden_size);
    for (std::size_t l = 0; l < config.num_layers; ++l) {
        const auto& lp = p.layers[l];
        const auto in = static_cast<Eigen::Index>(config.layer_input(l));
        out[l].w.resize(4 * h, in);
        out[l].w << lp.w_f, lp.w_i, lp.w_o, lp.w_c;
        out[l].u.resize(4 * h, h);
        out[l].u << lp.u_f, lp.u_i, lp.u_o, lp.u_c;
        out[l].b.resize(4 * h, 1);
        out[l].b << lp.b_f, lp.b_i, lp.b_o, lp.b_c;
    }
    return out;
}

// One cell update for a batch of columns. z buffers are reused across steps.
inline void lstm_cell(const LayerStack& s, const Mat& u, Mat& hstate, Mat& cstate, Mat& z,
                      std::size_t step) {
    const auto h = hstate.rows();
    z = s.w * u;
    z.noalias() += s.u * hstate;
    z.array().colwise() += s.b.col(0).array();
    Mat f = z.middleRows(0, h);
    Mat i = z.middleRows(h, h);
    Mat o = z.middleRows(2 * h, h);
    Mat cbar = z.middleRows(3 * h, h);
    act::logistic(f);
    act::logistic(i);
    act::logistic(o);
    act::tanh(cbar);
    cstate = f.cwiseProduct(cstate) + i.cwiseProduct(cbar);
    Mat th = cstate;
    act::tanh(th);
    hstate = o.cwiseProduct(th);
    if (!cstate.allFinite() || !hstate.allFinite())
        throw NumericError("non-finite lstm activation at step " + std::to_string(step));
}

} // namespace detail

// Hidden sequence of the top layer for the given input (dropout optional).
inline Ensemble lstm_forward(const SinnParams& params, const SinnConfig& config,
                             const Ensemble& input, bool dropout_on = false,
                             Xoshiro256* dropout_rng = nullptr) {
    check_shapes(config, params);
    if (input.dim != config.input_dim) throw ShapeError("lstm input dim mismatch");
    const bool mask_layers = dropout_on && config.dropout_prob > 0.0;
    if (mask_layers && dropout_rng == nullptr)
        throw ParameterError("dropout requires an rng stream");
    const auto h = static_cast<Eigen::Index>(config.hidden_size);
    const auto batch = static_cast<Eigen::Index>(input.batch);
    const auto stacks = detail::stack_params(config, params);

    Ensemble out(input.batch, input.time, config.hidden_size, input.dt);
    std::vector<Mat> hstate(config.num_layers, Mat::Zero(h, batch));
    std::vector<Mat> cstate(config.num_layers, Mat::Zero(h, batch));
    Mat u0(static_cast<Eigen::Index>(config.input_dim), batch), z, u;
    for (std::size_t t = 0; t < input.time; ++t) {
        for (Eigen::Index k = 0; k < u0.rows(); ++k)
            for (Eigen::Index i = 0; i < batch; ++i)
                u0(k, i) = input.at(static_cast<std::size_t>(i), t, static_cast<std::size_t>(k));
        u = u0;
        for (std::size_t l = 0; l < config.num_layers; ++l) {
            detail::lstm_cell(stacks[l], u, hstate[l], cstate[l], z, t);
            u = hstate[l];
            if (mask_layers && l + 1 < config.num_layers) {
                const double keep = 1.0 - config.dropout_prob;
                for (Eigen::Index r = 0; r < h; ++r)
                    for (Eigen::Index c = 0; c < batch; ++c)
                        if (dropout_rng->uniform01() < keep)
                            u(r, c) /= keep;
                        else
                            u(r, c) = 0.0;
            }
        }
        for (Eigen::Index i = 0; i < batch; ++i)
            for (Eigen::Index k = 0; k < h; ++k)
                out.at(static_cast<std::size_t>(i), t, static_cast<std::size_t>(k)) =
                    hstate[config.num_layers - 1](k, i);
    }
    return out;
}

// Per-step linear map of the final hidden sequence.
inline Ensemble readout(const SinnParams& params, const SinnConfig& config,
                        const Ensemble& hidden, double dt_out) {
    if (hidden.dim != config.hidden_size) throw ShapeError("readout hidden width mismatch");
    Ensemble out(hidden.batch, hidden.time, config.output_dim, dt_out);
    for (std::size_t i = 0; i < hidden.batch; ++i)
        for (std::size_t t = 0; t < hidden.time; ++t)
            for (std::size_t r = 0; r < config.output_dim; ++r) {
                double acc = 0.0;
                for (std::size_t k = 0; k < config.hidden_size; ++k)
                    acc += params.w_m(static_cast<Eigen::Index>(r),
                                      static_cast<Eigen::Index>(k)) *
                           hidden.at(i, t, k);
                out.at(i, t, r) = acc;
            }
    return out;
}

// sample_noise -> lstm_forward (dropout off) -> readout, streamed in fixed
// trajectory chunks so long horizons stay within memory.
inline Ensemble sinn_generate(const SinnParams& params, const SinnConfig& config,
                              const NoiseSpec& noise_spec, std::size_t batch,
                              std::size_t steps, double dt_out) {
    check_shapes(config, params);
    noise_spec.validate();
    if (batch < 1 || steps < 1) throw ParameterError("sinn_generate requires batch, steps >= 1");
    const auto stacks = detail::stack_params(config, params);
    const auto h = static_cast<Eigen::Index>(config.hidden_size);
    const auto in_dim = static_cast<Eigen::Index>(config.input_dim);

    Ensemble out(batch, steps, config.output_dim, dt_out);
    constexpr std::size_t kChunk = 512;
    std::vector<std::size_t> starts;
    for (std::size_t b = 0; b < batch; b += kChunk) starts.push_back(b);

    parallel_for(starts.size(), [&](std::size_t ci) {
        const std::size_t begin = starts[ci];
        const auto width = static_cast<Eigen::Index>(std::min(kChunk, batch - begin));
        // noise for this chunk, trajectory-major, from the global sub-streams
        std::vector<double> noise(static_cast<std::size_t>(width) * steps *
                                  static_cast<std::size_t>(in_dim));
        for (Eigen::Index i = 0; i < width; ++i) {
            Xoshiro256 g(derive_stream(noise_spec.seed, begin + static_cast<std::size_t>(i)));
            double* dst = noise.data() + static_cast<std::size_t>(i) * steps *
                                             static_cast<std::size_t>(in_dim);
            for (std::size_t j = 0; j < steps * static_cast<std::size_t>(in_dim); ++j)
                dst[j] = noise_spec.draw(g);
        }
        std::vector<Mat> hstate(config.num_layers, Mat::Zero(h, width));
        std::vector<Mat> cstate(config.num_layers, Mat::Zero(h, width));
        Mat u(in_dim, width), z;
        for (std::size_t t = 0; t < steps; ++t) {
            for (Eigen::Index i = 0; i < width; ++i)
                for (Eigen::Index k = 0; k < in_dim; ++k)
                    u(k, i) = noise[(static_cast<std::size_t>(i) * steps + t) *
                                        static_cast<std::size_t>(in_dim) +
                                    static_cast<std::size_t>(k)];
            const Mat* feed = &u;
            for (std::size_t l = 0; l < config.num_layers; ++l) {
                detail::lstm_cell(stacks[l], *feed, hstate[l], cstate[l], z, t);
                feed = &hstate[l];
            }
            const Mat chi = params.w_m * hstate[config.num_layers - 1];
            for (Eigen::Index i = 0; i < width; ++i)
                for (std::size_t r = 0; r < config.output_dim; ++r)
                    out.at(begin + static_cast<std::size_t>(i), t, r) =
                        chi(static_cast<Eigen::Index>(r), i);
        }
    });
    return out;
}

// ---------------------------------------------------------------------------
// Checkpoint format: magic "SINN", version u32, config integers, then each
// parameter array as (name length u32, name, rank u32, dims u64...,
// little-endian f64 row-major). Bit-exact round trip.
// ---------------------------------------------------------------------------

namespace detail {

inline void write_u32(std::ostream& os, std::uint32_t v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof v);
}
inline void write_u64(std::ostream& os, std::uint64_t v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof v);
}
inline std::uint32_t read_u32(std::istream& is) {
    std::uint32_t v = 0;
    is.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!is) throw FormatError("checkpoint truncated");
    return v;
}
inline std::uint64_t read_u64(std::istream& is) {
    std::uint64_t v = 0;
    is.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!is) throw FormatError("checkpoint truncated");
    return v;
}

} // namespace detail

inline constexpr std::uint32_t kCheckpointVersion = 1;

inline void save_checkpoint(const std::string& path, const SinnConfig& config,
                            const SinnParams& params) {
    check_shapes(config, params);
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open checkpoint for writing: " + path);
    os.write("SINN", 4);
    detail::write_u32(os, kCheckpointVersion);
    detail::write_u32(os, static_cast<std::uint32_t>(config.num_layers));
    detail::write_u32(os, static_cast<std::uint32_t>(config.hidden_size));
    detail::write_u32(os, static_cast<std::uint32_t>(config.input_dim));
    detail::write_u32(os, static_cast<std::uint32_t>(config.output_dim));
    for_each_param(const_cast<SinnParams&>(params), [&](const std::string& name, Mat& m) {
        detail::write_u32(os, static_cast<std::uint32_t>(name.size()));
        os.write(name.data(), static_cast<std::streamsize>(name.size()));
        const bool vector_like = m.cols() == 1;
        detail::write_u32(os, vector_like ? 1u : 2u);
        detail::write_u64(os, static_cast<std::uint64_t>(m.rows()));
        if (!vector_like) detail::write_u64(os, static_cast<std::uint64_t>(m.cols()));
        for (Eigen::Index r = 0; r < m.rows(); ++r)
            for (Eigen::Index c = 0; c < m.cols(); ++c) {
                const double v = m(r, c);
                os.write(reinterpret_cast<const char*>(&v), sizeof v);
            }
    });
    if (!os) throw IoError("checkpoint write failed: " + path);
}

inline std::pair<SinnConfig, SinnParams> load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open checkpoint: " + path);
    char magic[4] = {};
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "SINN", 4) != 0)
        throw FormatError("checkpoint magic bytes are not SINN");
    const std::uint32_t version = detail::read_u32(is);
    if (version != kCheckpointVersion)
        throw FormatError("unsupported checkpoint version " + std::to_string(version));
    SinnConfig config;
    config.num_layers = detail::read_u32(is);
    config.hidden_size = detail::read_u32(is);
    config.input_dim = detail::read_u32(is);
    config.output_dim = detail::read_u32(is);
    config.validate();

    SinnParams params;
    params.layers.resize(config.num_layers);
    // Pre-size so the reader can verify names and shapes as it goes.
    const auto h = static_cast<Eigen::Index>(config.hidden_size);
    for (std::size_t l = 0; l < config.num_layers; ++l) {
        auto& lp = params.layers[l];
        const auto in = static_cast<Eigen::Index>(config.layer_input(l));
        for (Mat* m : {&lp.w_f, &lp.w_i, &lp.w_o, &lp.w_c}) m->resize(h, in);
        for (Mat* m : {&lp.u_f, &lp.u_i, &lp.u_o, &lp.u_c}) m->resize(h, h);
        for (Mat* m : {&lp.b_f, &lp.b_i, &lp.b_o, &lp.b_c}) m->resize(h, 1);
    }
    params.w_m.resize(static_cast<Eigen::Index>(config.output_dim), h);

    for_each_param(params, [&](const std::string& name, Mat& m) {
        const std::uint32_t name_len = detail::read_u32(is);
        std::string stored(name_len, '\0');
        is.read(stored.data(), name_len);
        if (!is || stored != name)
            throw FormatError("checkpoint parameter order mismatch at " + name);
        const std::uint32_t rank = detail::read_u32(is);
        const auto rows = static_cast<Eigen::Index>(detail::read_u64(is));
        const auto cols = rank == 1 ? 1 : static_cast<Eigen::Index>(detail::read_u64(is));
        if (rank < 1 || rank > 2 || rows != m.rows() || cols != m.cols())
            throw FormatError("checkpoint shape mismatch at " + name);
        for (Eigen::Index r = 0; r < rows; ++r)
            for (Eigen::Index c = 0; c < cols; ++c) {
                double v = 0;
                is.read(reinterpret_cast<char*>(&v), sizeof v);
                if (!is) throw FormatError("checkpoint truncated at " + name);
                m(r, c) = v;
            }
    });
    return {config, params};
}

} // namespace sinn

#endif
