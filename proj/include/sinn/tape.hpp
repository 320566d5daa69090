#ifndef SINN_TAPE_HPP
#define SINN_TAPE_HPP

#include <Eigen/Core>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "sinn/errors.hpp"

namespace sinn {

using Mat = Eigen::MatrixXd;

// Primitive array operations recorded on the tape. Values are evaluated
// eagerly when an operation is recorded; backward() replays the record in
// reverse, applying one adjoint rule per primitive with additive
// accumulation on fan-out.
enum class OpKind : std::uint8_t {
    Constant,
    Parameter,
    MatMul,
    Add,      // same shape, column-vector broadcast, or 1x1 scalar operand
    Sub,
    Mul,
    Div,
    Scale,    // multiply by a compile-time constant scalar
    Logistic,
    Tanh,
    Square,
    Abs,
    MeanAll,
    ConcatRows,
    SliceRows,
    KdeEval,  // Gaussian-kernel density of the flattened input on a fixed grid
    // One LSTM cell update as a fused primitive. Recording the update as
    // discrete array ops would materialize every intermediate on the tape;
    // the fused form caches only the gate activations and the (h, c) pair,
    // which roughly halves the memory traffic of a training step.
    LstmCell,
};

inline const char* op_name(OpKind k) {
    switch (k) {
    case OpKind::Constant: return "constant";
    case OpKind::Parameter: return "parameter";
    case OpKind::MatMul: return "matmul";
    case OpKind::Add: return "add";
    case OpKind::Sub: return "sub";
    case OpKind::Mul: return "mul";
    case OpKind::Div: return "div";
    case OpKind::Scale: return "scale";
    case OpKind::Logistic: return "logistic";
    case OpKind::Tanh: return "tanh";
    case OpKind::Square: return "square";
    case OpKind::Abs: return "abs";
    case OpKind::MeanAll: return "mean";
    case OpKind::ConcatRows: return "concat_rows";
    case OpKind::SliceRows: return "slice_rows";
    case OpKind::KdeEval: return "kde_eval";
    case OpKind::LstmCell: return "lstm_cell";
    }
    return "?";
}

namespace act {

// Shared activation kernels; the tape and the streaming forward pass use the
// same implementations so both paths agree.
inline void logistic(Mat& m) { m = (1.0 / (1.0 + (-m.array()).exp())).matrix(); }
inline void tanh(Mat& m) { m = m.array().tanh().matrix(); }

} // namespace act

struct TapeNode {
    OpKind op;
    int a = -1;
    int b = -1;
    std::vector<int> srcs; // ConcatRows / Affine operands
    Mat value;
    double scalar = 0.0;   // Scale factor | KdeEval bandwidth
    int row_begin = 0;     // SliceRows
    Mat aux;               // KdeEval grid (G x 1)
    bool needs_grad = false;
};

class Tape {
public:
    int constant(Mat v) { return push(OpKind::Constant, std::move(v)); }

    int parameter(Mat v) {
        const int id = push(OpKind::Parameter, std::move(v));
        params_.push_back(id);
        return id;
    }

    int matmul(int a, int b) {
        const Mat& A = value(a);
        const Mat& B = value(b);
        if (A.cols() != B.rows()) throw ShapeError("matmul inner dimensions differ");
        Mat v = A * B;
        return push(OpKind::MatMul, std::move(v), a, b);
    }

    int add(int a, int b) { return binary(OpKind::Add, a, b); }
    int sub(int a, int b) { return binary(OpKind::Sub, a, b); }
    int mul(int a, int b) { return binary(OpKind::Mul, a, b); }
    int div(int a, int b) { return binary(OpKind::Div, a, b); }

    int scale(int a, double factor) {
        Mat v = value(a) * factor;
        const int id = push(OpKind::Scale, std::move(v), a);
        nodes_[static_cast<std::size_t>(id)].scalar = factor;
        return id;
    }

    int logistic(int a) {
        Mat v = value(a);
        act::logistic(v);
        return push(OpKind::Logistic, std::move(v), a);
    }

    int tanh(int a) {
        Mat v = value(a);
        act::tanh(v);
        return push(OpKind::Tanh, std::move(v), a);
    }

    int square(int a) {
        Mat v = value(a).array().square().matrix();
        return push(OpKind::Square, std::move(v), a);
    }

    int abs(int a) {
        Mat v = value(a).array().abs().matrix();
        return push(OpKind::Abs, std::move(v), a);
    }

    int mean_all(int a) {
        Mat v(1, 1);
        v(0, 0) = value(a).mean();
        return push(OpKind::MeanAll, std::move(v), a);
    }

    int concat_rows(const std::vector<int>& srcs) {
        if (srcs.empty()) throw ShapeError("concat_rows needs at least one operand");
        Eigen::Index rows = 0;
        const Eigen::Index cols = value(srcs[0]).cols();
        for (int s : srcs) {
            if (value(s).cols() != cols) throw ShapeError("concat_rows column mismatch");
            rows += value(s).rows();
        }
        Mat v(rows, cols);
        Eigen::Index at = 0;
        for (int s : srcs) {
            v.middleRows(at, value(s).rows()) = value(s);
            at += value(s).rows();
        }
        const int id = push(OpKind::ConcatRows, std::move(v));
        nodes_[static_cast<std::size_t>(id)].srcs = srcs;
        refresh_needs_grad(id);
        return id;
    }

    int slice_rows(int a, int begin, int count) {
        const Mat& A = value(a);
        if (begin < 0 || count < 1 || begin + count > A.rows())
            throw ShapeError("slice_rows range out of bounds");
        Mat v = A.middleRows(begin, count);
        const int id = push(OpKind::SliceRows, std::move(v), a);
        nodes_[static_cast<std::size_t>(id)].row_begin = begin;
        return id;
    }

    // One LSTM cell step. hc_prev carries the previous hidden state stacked
    // over the cell state (2h x batch); wstack/ustack/bstack are the four
    // gate parameter blocks stacked in f, i, o, c order. The node value is
    // the updated [h; c]; the gate activations are cached for the adjoint.
    int lstm_cell(int wstack, int u, int ustack, int hc_prev, int bias) {
        const Mat& W = value(wstack);
        const Mat& U = value(ustack);
        const Mat& uv = value(u);
        const Mat& hc = value(hc_prev);
        const Mat& bv = value(bias);
        const auto h = U.cols();
        const auto batch = uv.cols();
        if (W.rows() != 4 * h || U.rows() != 4 * h || W.cols() != uv.rows() ||
            hc.rows() != 2 * h || hc.cols() != batch || bv.rows() != 4 * h || bv.cols() != 1)
            throw ShapeError("lstm_cell operand shapes are inconsistent");

        Mat z = W * uv;
        z.noalias() += U * hc.topRows(h);
        z.array().colwise() += bv.col(0).array();
        Mat f = z.middleRows(0, h);
        Mat i = z.middleRows(h, h);
        Mat o = z.middleRows(2 * h, h);
        Mat g = z.middleRows(3 * h, h);
        act::logistic(f);
        act::logistic(i);
        act::logistic(o);
        act::tanh(g);

        Mat v(2 * h, batch);
        v.bottomRows(h) = f.cwiseProduct(hc.bottomRows(h)) + i.cwiseProduct(g);
        Mat th = v.bottomRows(h);
        act::tanh(th);
        v.topRows(h) = o.cwiseProduct(th);

        Mat acts(4 * h, batch);
        acts.middleRows(0, h) = f;
        acts.middleRows(h, h) = i;
        acts.middleRows(2 * h, h) = o;
        acts.middleRows(3 * h, h) = g;

        const int id = push(OpKind::LstmCell, std::move(v));
        nodes_[static_cast<std::size_t>(id)].srcs = {wstack, u, ustack, hc_prev, bias};
        nodes_[static_cast<std::size_t>(id)].aux = std::move(acts);
        refresh_needs_grad(id);
        return id;
    }

    // Gaussian KDE of the flattened input samples, evaluated on `grid` with
    // bandwidth h. The grid and bandwidth are constants; the gradient flows
    // through the sample positions only.
    int kde_eval(int a, const Mat& grid, double h) {
        if (!(h > 0)) throw ParameterError("kde_eval bandwidth must be > 0");
        if (grid.cols() != 1 || grid.rows() < 1) throw ShapeError("kde_eval grid must be G x 1");
        const Mat& A = value(a);
        const auto n = A.size();
        if (n < 1) throw ShapeError("kde_eval needs samples");
        Mat v(grid.rows(), 1);
        Eigen::Map<const Eigen::ArrayXd> samples(A.data(), n);
        const double norm =
            1.0 / (static_cast<double>(n) * h * std::sqrt(2.0 * std::numbers::pi));
        for (Eigen::Index g = 0; g < grid.rows(); ++g)
            v(g, 0) = norm * (-0.5 * ((grid(g, 0) - samples) / h).square()).exp().sum();
        const int id = push(OpKind::KdeEval, std::move(v), a);
        nodes_[static_cast<std::size_t>(id)].scalar = h;
        nodes_[static_cast<std::size_t>(id)].aux = grid;
        return id;
    }

    const Mat& value(int id) const { return nodes_[static_cast<std::size_t>(id)].value; }
    std::size_t size() const { return nodes_.size(); }
    const std::vector<int>& parameters() const { return params_; }

    // Reverse sweep from a scalar root. Adjoints accumulate additively; the
    // result for any node is available through grad() until the next
    // backward() or clear().
    void backward(int root) {
        const auto& root_node = nodes_[static_cast<std::size_t>(root)];
        if (root_node.value.size() != 1)
            throw ShapeError("backward root must be a scalar node");
        adjoints_.assign(nodes_.size(), Mat());
        if (!root_node.needs_grad) return; // no trainable inputs below the root
        seed(root, Mat::Ones(1, 1));

        for (int id = static_cast<int>(nodes_.size()) - 1; id >= 0; --id) {
            if (!nodes_[static_cast<std::size_t>(id)].needs_grad) continue;
            Mat& g = adjoints_[static_cast<std::size_t>(id)];
            if (g.size() == 0) continue;
#ifdef SINN_TAPE_PROFILE
            const auto t0 = std::chrono::steady_clock::now();
            propagate(id, g);
            profile_ns[static_cast<int>(nodes_[static_cast<std::size_t>(id)].op)] +=
                std::chrono::duration_cast<std::chrono::nanoseconds>(
                    std::chrono::steady_clock::now() - t0).count();
            profile_count[static_cast<int>(nodes_[static_cast<std::size_t>(id)].op)]++;
#else
            propagate(id, g);
#endif
        }
        for (int p : params_)
            if (adjoints_[static_cast<std::size_t>(p)].size() != 0 &&
                !adjoints_[static_cast<std::size_t>(p)].allFinite())
                throw_nonfinite();
    }

    // Locate the earliest-processed primitive whose adjoint is not finite.
    [[noreturn]] void throw_nonfinite() const {
        for (std::size_t id = 0; id < nodes_.size(); ++id)
            if (adjoints_[id].size() != 0 && !adjoints_[id].allFinite())
                throw NumericError(std::string("non-finite adjoint at primitive ") +
                                   op_name(nodes_[id].op));
        throw NumericError("non-finite adjoint");
    }

    // Adjoint of a node after backward(); empty-shaped zero if untouched.
    Mat grad(int id) const {
        const Mat& g = adjoints_[static_cast<std::size_t>(id)];
        if (g.size() == 0) return Mat::Zero(value(id).rows(), value(id).cols());
        return g;
    }

    void clear() {
        nodes_.clear();
        params_.clear();
        adjoints_.clear();
    }

private:
    Mat sliced(int a, int begin, int count) const {
        const Mat& A = value(a);
        if (begin < 0 || count < 1 || begin + count > A.rows())
            throw ShapeError("slice range out of bounds");
        return A.middleRows(begin, count);
    }

    int push(OpKind op, Mat v, int a = -1, int b = -1) {
        TapeNode n;
        n.op = op;
        n.a = a;
        n.b = b;
        n.value = std::move(v);
        n.needs_grad = op == OpKind::Parameter ||
                       (a >= 0 && nodes_[static_cast<std::size_t>(a)].needs_grad) ||
                       (b >= 0 && nodes_[static_cast<std::size_t>(b)].needs_grad);
        nodes_.push_back(std::move(n));
        return static_cast<int>(nodes_.size()) - 1;
    }

    void refresh_needs_grad(int id) {
        TapeNode& n = nodes_[static_cast<std::size_t>(id)];
        for (int s : n.srcs)
            if (nodes_[static_cast<std::size_t>(s)].needs_grad) {
                n.needs_grad = true;
                return;
            }
    }

    enum class Broadcast { Same, ColVec, ScalarA, ScalarB };

    Broadcast classify(const Mat& A, const Mat& B) const {
        if (A.rows() == B.rows() && A.cols() == B.cols()) return Broadcast::Same;
        if (B.rows() == A.rows() && B.cols() == 1) return Broadcast::ColVec;
        if (A.size() == 1) return Broadcast::ScalarA;
        if (B.size() == 1) return Broadcast::ScalarB;
        throw ShapeError("elementwise operands are not broadcast-compatible");
    }

    int binary(OpKind op, int a, int b) {
        const Mat& A = value(a);
        const Mat& B = value(b);
        const Broadcast bc = classify(A, B);
        Mat v;
        auto apply = [&](const auto& x, const auto& y) {
            switch (op) {
            case OpKind::Add: v = (x + y).matrix(); break;
            case OpKind::Sub: v = (x - y).matrix(); break;
            case OpKind::Mul: v = (x * y).matrix(); break;
            case OpKind::Div: v = (x / y).matrix(); break;
            default: throw ShapeError("not a binary op");
            }
        };
        switch (bc) {
        case Broadcast::Same:
            apply(A.array(), B.array());
            break;
        case Broadcast::ColVec:
            v = A;
            switch (op) {
            case OpKind::Add: v.array().colwise() += B.col(0).array(); break;
            case OpKind::Sub: v.array().colwise() -= B.col(0).array(); break;
            case OpKind::Mul: v.array().colwise() *= B.col(0).array(); break;
            case OpKind::Div: v.array().colwise() /= B.col(0).array(); break;
            default: throw ShapeError("not a binary op");
            }
            break;
        case Broadcast::ScalarA:
            apply(A(0, 0), B.array());
            break;
        case Broadcast::ScalarB:
            apply(A.array(), B(0, 0));
            break;
        }
        return push(op, std::move(v), a, b);
    }

    void seed(int id, const Mat& g) {
        if (!nodes_[static_cast<std::size_t>(id)].needs_grad) return;
        Mat& a = adjoints_[static_cast<std::size_t>(id)];
        if (a.size() == 0)
            a = g;
        else
            a += g;
    }

    bool needs(int id) const { return nodes_[static_cast<std::size_t>(id)].needs_grad; }

    // Accumulate into operand `target`, reducing g over broadcast dimensions.
    void seed_reduced(int target, const Mat& g) {
        const Mat& tv = value(target);
        if (tv.rows() == g.rows() && tv.cols() == g.cols()) {
            seed(target, g);
        } else if (tv.size() == 1) {
            Mat s(1, 1);
            s(0, 0) = g.sum();
            seed(target, s);
        } else if (tv.cols() == 1 && tv.rows() == g.rows()) {
            seed(target, g.rowwise().sum());
        } else {
            throw ShapeError("adjoint broadcast reduction mismatch");
        }
    }

    void propagate(int id, const Mat& g) {
        const TapeNode& n = nodes_[static_cast<std::size_t>(id)];
        switch (n.op) {
        case OpKind::Constant:
        case OpKind::Parameter:
            return;
        case OpKind::MatMul:
            if (needs(n.a)) seed(n.a, g * value(n.b).transpose());
            if (needs(n.b)) seed(n.b, value(n.a).transpose() * g);
            return;
        case OpKind::Add:
            seed_reduced(n.a, g);
            seed_reduced(n.b, g);
            return;
        case OpKind::Sub:
            seed_reduced(n.a, g);
            seed_reduced(n.b, -g);
            return;
        case OpKind::Mul: {
            const Mat& A = value(n.a);
            const Mat& B = value(n.b);
            if (A.rows() == B.rows() && A.cols() == B.cols()) {
                seed(n.a, B.cwiseProduct(g));
                seed(n.b, A.cwiseProduct(g));
            } else {
                seed_reduced(n.a, expand(B, g.rows(), g.cols()).cwiseProduct(g));
                seed_reduced(n.b, expand(A, g.rows(), g.cols()).cwiseProduct(g));
            }
            return;
        }
        case OpKind::Div: {
            const Mat A = expand(value(n.a), g.rows(), g.cols());
            const Mat B = expand(value(n.b), g.rows(), g.cols());
            seed_reduced(n.a, (g.array() / B.array()).matrix());
            seed_reduced(n.b, (-g.array() * A.array() / (B.array() * B.array())).matrix());
            return;
        }
        case OpKind::Scale:
            seed(n.a, g * n.scalar);
            return;
        case OpKind::Logistic: {
            const Mat& y = n.value;
            seed(n.a, (g.array() * y.array() * (1.0 - y.array())).matrix());
            return;
        }
        case OpKind::Tanh: {
            const Mat& y = n.value;
            seed(n.a, (g.array() * (1.0 - y.array() * y.array())).matrix());
            return;
        }
        case OpKind::Square:
            seed(n.a, (g.array() * 2.0 * value(n.a).array()).matrix());
            return;
        case OpKind::Abs:
            seed(n.a, (g.array() * value(n.a).array().sign()).matrix());
            return;
        case OpKind::MeanAll: {
            const Mat& A = value(n.a);
            const double w = g(0, 0) / static_cast<double>(A.size());
            seed(n.a, Mat::Constant(A.rows(), A.cols(), w));
            return;
        }
        case OpKind::ConcatRows: {
            Eigen::Index at = 0;
            for (int s : n.srcs) {
                const Eigen::Index r = value(s).rows();
                seed(s, g.middleRows(at, r));
                at += r;
            }
            return;
        }
        case OpKind::SliceRows: {
            if (!needs(n.a)) return;
            Mat& target = adjoints_[static_cast<std::size_t>(n.a)];
            const Mat& A = value(n.a);
            if (target.size() == 0) target = Mat::Zero(A.rows(), A.cols());
            target.middleRows(n.row_begin, g.rows()) += g;
            return;
        }
        case OpKind::LstmCell: {
            const int wstack = n.srcs[0], u = n.srcs[1], ustack = n.srcs[2],
                      hc_prev = n.srcs[3], bias = n.srcs[4];
            const auto h = value(ustack).cols();
            const auto f = n.aux.middleRows(0, h).array();
            const auto i = n.aux.middleRows(h, h).array();
            const auto o = n.aux.middleRows(2 * h, h).array();
            const auto gi = n.aux.middleRows(3 * h, h).array();
            const auto c_new = n.value.bottomRows(h).array();
            const auto gh = g.topRows(h).array();
            const auto gc_in = g.bottomRows(h).array();

            const Eigen::ArrayXXd th = c_new.tanh();
            const Eigen::ArrayXXd gc = gc_in + gh * o * (1.0 - th * th);
            // gate preactivation adjoints, stacked in f, i, o, c order
            Mat gz(4 * h, g.cols());
            gz.middleRows(0, h) =
                (gc * value(hc_prev).bottomRows(h).array() * f * (1.0 - f)).matrix();
            gz.middleRows(h, h) = (gc * gi * i * (1.0 - i)).matrix();
            gz.middleRows(2 * h, h) = (gh * th * o * (1.0 - o)).matrix();
            gz.middleRows(3 * h, h) = (gc * i * (1.0 - gi * gi)).matrix();

            if (needs(wstack)) seed(wstack, gz * value(u).transpose());
            if (needs(u)) seed(u, value(wstack).transpose() * gz);
            if (needs(ustack)) seed(ustack, gz * value(hc_prev).topRows(h).transpose());
            if (needs(bias)) seed(bias, gz.rowwise().sum());
            if (needs(hc_prev)) {
                Mat& target = adjoints_[static_cast<std::size_t>(hc_prev)];
                if (target.size() == 0) target = Mat::Zero(2 * h, g.cols());
                target.topRows(h).noalias() += value(ustack).transpose() * gz;
                target.bottomRows(h).array() += gc * f;
            }
            return;
        }
        case OpKind::KdeEval: {
            if (!needs(n.a)) return;
            const Mat& A = value(n.a);
            const double h = n.scalar;
            const auto cnt = A.size();
            const double norm =
                1.0 / (static_cast<double>(cnt) * h * h * std::sqrt(2.0 * std::numbers::pi));
            Mat ga = Mat::Zero(A.rows(), A.cols());
            Eigen::Map<const Eigen::ArrayXd> samples(A.data(), cnt);
            Eigen::Map<Eigen::ArrayXd> acc(ga.data(), cnt);
            for (Eigen::Index gi = 0; gi < n.aux.rows(); ++gi) {
                const Eigen::ArrayXd z = (n.aux(gi, 0) - samples) / h;
                acc += (g(gi, 0) * norm) * ((-0.5 * z.square()).exp() * z);
            }
            seed(n.a, ga);
            return;
        }
        }
    }

    static Mat expand(const Mat& m, Eigen::Index rows, Eigen::Index cols) {
        if (m.rows() == rows && m.cols() == cols) return m;
        if (m.size() == 1) return Mat::Constant(rows, cols, m(0, 0));
        if (m.cols() == 1 && m.rows() == rows) return m.replicate(1, cols);
        throw ShapeError("broadcast expansion mismatch");
    }

    std::vector<TapeNode> nodes_;
    std::vector<int> params_;
    std::vector<Mat> adjoints_;

public:
#ifdef SINN_TAPE_PROFILE
    static inline long long profile_ns[32] = {};
    static inline long long profile_count[32] = {};
#endif
};

} // namespace sinn

#endif
