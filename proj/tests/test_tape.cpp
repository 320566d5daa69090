#include <gtest/gtest.h>

#include <functional>

#include "sinn/rng.hpp"
#include "sinn/tape.hpp"

using namespace sinn;

namespace {

Mat random_mat(Eigen::Index r, Eigen::Index c, Xoshiro256& g, double scale = 1.0) {
    Mat m(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index j = 0; j < c; ++j) m(i, j) = scale * g.gaussian();
    return m;
}

// Finite-difference check of d(scalar graph)/d(inputs) for a graph builder
// that registers every input as a parameter.
void check_graph(const std::function<int(Tape&, std::vector<int>&)>& build,
                 std::vector<Mat> inputs, double tol = 1e-6) {
    Tape tape;
    std::vector<int> ids;
    for (const auto& m : inputs) ids.push_back(tape.parameter(m));
    const int root = build(tape, ids);
    tape.backward(root);
    std::vector<Mat> grads;
    for (int id : ids) grads.push_back(tape.grad(id));

    const double step = 1e-6;
    for (std::size_t k = 0; k < inputs.size(); ++k) {
        for (Eigen::Index r = 0; r < inputs[k].rows(); ++r)
            for (Eigen::Index c = 0; c < inputs[k].cols(); ++c) {
                auto eval = [&](double delta) {
                    Tape t2;
                    std::vector<int> ids2;
                    for (std::size_t j = 0; j < inputs.size(); ++j) {
                        Mat m = inputs[j];
                        if (j == k) m(r, c) += delta;
                        ids2.push_back(t2.parameter(m));
                    }
                    return t2.value(build(t2, ids2))(0, 0);
                };
                const double fd = (eval(step) - eval(-step)) / (2.0 * step);
                EXPECT_NEAR(grads[k](r, c), fd, tol * std::max(1.0, std::abs(fd)))
                    << "input " << k << " entry (" << r << "," << c << ")";
            }
    }
}

} // namespace

TEST(Tape, MatMulGradients) {
    Xoshiro256 g(1);
    check_graph(
        [](Tape& t, std::vector<int>& ids) {
            return t.mean_all(t.matmul(ids[0], ids[1]));
        },
        {random_mat(3, 4, g), random_mat(4, 5, g)});
}

TEST(Tape, ElementwiseAndBroadcastGradients) {
    Xoshiro256 g(2);
    // same shape add/mul chain
    check_graph(
        [](Tape& t, std::vector<int>& ids) {
            return t.mean_all(t.mul(t.add(ids[0], ids[1]), t.sub(ids[0], ids[1])));
        },
        {random_mat(3, 3, g), random_mat(3, 3, g)});
    // column-vector bias broadcast
    check_graph(
        [](Tape& t, std::vector<int>& ids) {
            return t.mean_all(t.tanh(t.add(ids[0], ids[1])));
        },
        {random_mat(4, 6, g), random_mat(4, 1, g)});
    // scalar divisor
    check_graph(
        [](Tape& t, std::vector<int>& ids) {
            return t.mean_all(t.div(ids[0], t.mean_all(t.square(ids[1]))));
        },
        {random_mat(2, 5, g), random_mat(2, 5, g)});
}

TEST(Tape, ActivationGradients) {
    Xoshiro256 g(3);
    check_graph(
        [](Tape& t, std::vector<int>& ids) { return t.mean_all(t.logistic(ids[0])); },
        {random_mat(3, 7, g)});
    check_graph(
        [](Tape& t, std::vector<int>& ids) { return t.mean_all(t.tanh(ids[0])); },
        {random_mat(3, 7, g)});
    check_graph(
        [](Tape& t, std::vector<int>& ids) { return t.mean_all(t.square(ids[0])); },
        {random_mat(3, 7, g)});
    check_graph(
        [](Tape& t, std::vector<int>& ids) { return t.mean_all(t.abs(ids[0])); },
        {random_mat(3, 7, g)}); // entries are away from zero w.p. 1
    check_graph(
        [](Tape& t, std::vector<int>& ids) { return t.scale(t.mean_all(ids[0]), -2.5); },
        {random_mat(3, 7, g)});
}

TEST(Tape, ConcatSliceGradients) {
    Xoshiro256 g(4);
    check_graph(
        [](Tape& t, std::vector<int>& ids) {
            const int cat = t.concat_rows({ids[0], ids[1], ids[2]});
            const int a = t.slice_rows(cat, 1, 4); // spans the 0/1 boundary
            const int b = t.slice_rows(cat, 3, 4); // overlaps a and spans 1/2
            return t.mean_all(t.mul(a, b));
        },
        {random_mat(2, 3, g), random_mat(3, 3, g), random_mat(2, 3, g)});
}

TEST(Tape, KdeGradients) {
    Xoshiro256 g(5);
    Mat grid(7, 1);
    for (int i = 0; i < 7; ++i) grid(i, 0) = -1.5 + 0.5 * i;
    check_graph(
        [grid](Tape& t, std::vector<int>& ids) {
            const int f = t.kde_eval(ids[0], grid, 0.4);
            return t.add(t.mean_all(t.abs(t.sub(f, ids[1]))),
                         t.mean_all(t.square(t.sub(f, ids[1]))));
        },
        {random_mat(4, 5, g), random_mat(7, 1, g, 0.1)}, 1e-5);
}

TEST(Tape, FanOutAccumulatesAndDeadPathsAreZero) {
    Xoshiro256 g(6);
    Tape tape;
    const int x = tape.parameter(random_mat(3, 3, g));
    const int unused = tape.parameter(random_mat(2, 2, g));
    // x feeds the root through two paths: mean(x*x) + mean(tanh(x))
    const int root = tape.add(tape.mean_all(tape.mul(x, x)), tape.mean_all(tape.tanh(x)));
    tape.backward(root);
    const Mat gx = tape.grad(x);
    const Mat& xv = tape.value(x);
    for (Eigen::Index r = 0; r < 3; ++r)
        for (Eigen::Index c = 0; c < 3; ++c) {
            const double th = std::tanh(xv(r, c));
            EXPECT_NEAR(gx(r, c), (2.0 * xv(r, c) + (1.0 - th * th)) / 9.0, 1e-12);
        }
    const Mat gu = tape.grad(unused);
    for (Eigen::Index r = 0; r < 2; ++r)
        for (Eigen::Index c = 0; c < 2; ++c) EXPECT_EQ(gu(r, c), 0.0);
}

TEST(Tape, ReplayIsBitIdentical) {
    Xoshiro256 g(7);
    const Mat a = random_mat(4, 4, g), b = random_mat(4, 4, g);
    auto run = [&](Mat& ga, Mat& gb) {
        Tape tape;
        const int ia = tape.parameter(a);
        const int ib = tape.parameter(b);
        const int root =
            tape.mean_all(tape.abs(tape.sub(tape.tanh(tape.matmul(ia, ib)), tape.square(ib))));
        tape.backward(root);
        ga = tape.grad(ia);
        gb = tape.grad(ib);
        return tape.value(root)(0, 0);
    };
    Mat ga1, gb1, ga2, gb2;
    const double v1 = run(ga1, gb1);
    const double v2 = run(ga2, gb2);
    EXPECT_EQ(v1, v2);
    EXPECT_EQ(ga1, ga2);
    EXPECT_EQ(gb1, gb2);
}

TEST(Tape, ShapeErrorsAndScalarRoot) {
    Tape tape;
    const int a = tape.constant(Mat::Zero(2, 3));
    const int b = tape.constant(Mat::Zero(3, 3));
    EXPECT_THROW(tape.add(a, b), ShapeError);
    EXPECT_THROW(tape.slice_rows(a, 1, 5), ShapeError);
    EXPECT_THROW(tape.backward(a), ShapeError);
}
