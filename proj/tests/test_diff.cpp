#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "hvacmpc/tape.hpp"

using namespace hvacmpc;

namespace {

Tensor random_tensor(int rows, int cols, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> dist(lo, hi);
    Tensor t(rows, cols);
    for (int64_t i = 0; i < t.size(); ++i) t[i] = dist(rng);
    return t;
}

}  // namespace

TEST_CASE("matmul forward matches a hand-multiplied 2x3 * 3x2 product") {
    Tape tape;
    VarId a = tape.leaf(Tensor(2, 3, {1, 2, 3, 4, 5, 6}));
    VarId b = tape.leaf(Tensor(3, 2, {7, 8, 9, 10, 11, 12}));
    const Tensor& c = tape.value(tape.matmul(a, b));
    // row0: 1*7+2*9+3*11 = 58, 1*8+2*10+3*12 = 64
    // row1: 4*7+5*9+6*11 = 139, 4*8+5*10+6*12 = 154
    CHECK(c(0, 0) == 58.0);
    CHECK(c(0, 1) == 64.0);
    CHECK(c(1, 0) == 139.0);
    CHECK(c(1, 1) == 154.0);
}

TEST_CASE("hand chain rule through matmul and square") {
    // x = [1, 2], W = [1, 1]^T, y = xW = 3, L = y^2 = 9.
    // dL/dW = 2y * x^T = [6, 12]^T; dL/dx = 2y * W^T = [6, 6].
    Tape tape;
    VarId x = tape.leaf(Tensor(1, 2, {1, 2}));
    VarId w = tape.leaf(Tensor(2, 1, {1, 1}));
    VarId loss = tape.sum(tape.square(tape.matmul(x, w)));
    CHECK(tape.value(loss).item() == 9.0);
    tape.backward(loss);
    CHECK(tape.grad(w)(0, 0) == 6.0);
    CHECK(tape.grad(w)(1, 0) == 12.0);
    CHECK(tape.grad(x)(0, 0) == 6.0);
    CHECK(tape.grad(x)(0, 1) == 6.0);
}

TEST_CASE("gradients accumulate across reuse of the same node") {
    Tape tape;
    VarId x = tape.leaf(Tensor::scalar(3.0));
    VarId loss = tape.sum(tape.add(x, x));
    tape.backward(loss);
    CHECK(tape.grad(x).item() == 2.0);
}

TEST_CASE("row-broadcast add and its reduced gradient") {
    Tape tape;
    VarId a = tape.leaf(Tensor(2, 2, {1, 2, 3, 4}));
    VarId b = tape.leaf(Tensor(1, 2, {10, 20}));
    VarId s = tape.add(a, b);
    CHECK(tape.value(s)(1, 1) == 24.0);
    VarId loss = tape.sum(s);
    tape.backward(loss);
    // b is reused across both rows; its gradient sums over the batch.
    CHECK(tape.grad(b)(0, 0) == 2.0);
    CHECK(tape.grad(b)(0, 1) == 2.0);
    CHECK(tape.grad(a)(0, 0) == 1.0);
}

TEST_CASE("mse forward and gradient scale") {
    // pred [1,2], target [0,0]: mse = (1+4)/2 = 2.5, dpred = 2(p-t)/N = [1,2].
    Tape tape;
    VarId p = tape.leaf(Tensor(1, 2, {1, 2}));
    VarId t = tape.leaf(Tensor(1, 2, {0, 0}));
    VarId loss = tape.mse(p, t);
    CHECK(tape.value(loss).item() == 2.5);
    tape.backward(loss);
    CHECK(tape.grad(p)(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(tape.grad(p)(0, 1) == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("relu subgradient at zero is zero") {
    Tape tape;
    VarId x = tape.leaf(Tensor(1, 3, {-1.0, 0.0, 2.0}));
    VarId loss = tape.sum(tape.relu(x));
    CHECK(tape.value(loss).item() == 2.0);
    tape.backward(loss);
    CHECK(tape.grad(x)(0, 0) == 0.0);
    CHECK(tape.grad(x)(0, 1) == 0.0);
    CHECK(tape.grad(x)(0, 2) == 1.0);
}

TEST_CASE("clamp passes gradient strictly inside the bounds only") {
    Tape tape;
    VarId x = tape.leaf(Tensor(1, 4, {-2.0, 0.5, 1.0, 3.0}));
    VarId loss = tape.sum(tape.clamp_stopgrad(x, 0.0, 1.0));
    CHECK(tape.value(loss).item() == doctest::Approx(2.5));
    tape.backward(loss);
    CHECK(tape.grad(x)(0, 0) == 0.0);  // below
    CHECK(tape.grad(x)(0, 1) == 1.0);  // interior
    CHECK(tape.grad(x)(0, 2) == 0.0);  // exactly at the bound
    CHECK(tape.grad(x)(0, 3) == 0.0);  // above
}

TEST_CASE("concat then slice recovers each part with unit gradients") {
    Tape tape;
    VarId a = tape.leaf(Tensor(1, 2, {1, 2}));
    VarId b = tape.leaf(Tensor(1, 3, {3, 4, 5}));
    VarId cat = tape.concat_cols({a, b});
    CHECK(tape.value(cat).cols() == 5);
    VarId part = tape.slice_cols(cat, 2, 5);
    CHECK(tape.value(part)(0, 0) == 3.0);
    VarId loss = tape.sum(part);
    tape.backward(loss);
    CHECK(tape.grad(a)(0, 0) == 0.0);
    CHECK(tape.grad(b)(0, 2) == 1.0);
}

TEST_CASE("backward on a non-scalar root throws") {
    Tape tape;
    VarId x = tape.leaf(Tensor(1, 2, {1, 2}));
    CHECK_THROWS_AS(tape.backward(x), std::invalid_argument);
}

TEST_CASE("shape mismatches throw ShapeError naming the shapes") {
    Tape tape;
    VarId a = tape.leaf(Tensor(2, 3));
    VarId b = tape.leaf(Tensor(2, 2));
    CHECK_THROWS_AS(tape.matmul(a, b), ShapeError);
    CHECK_THROWS_AS(tape.add(a, b), ShapeError);
    try {
        tape.matmul(a, b);
    } catch (const ShapeError& e) {
        std::string msg = e.what();
        CHECK(msg.find("2x3") != std::string::npos);
        CHECK(msg.find("2x2") != std::string::npos);
    }
}

TEST_CASE("finite-difference agreement on every smooth primitive") {
    std::mt19937_64 rng(42);
    const double eps = 1e-5;
    const double tol = 1e-4;

    auto check_unary = [&](const char* name, auto&& build, double lo, double hi) {
        for (int rep = 0; rep < 100; ++rep) {
            Tensor p = random_tensor(2, 3, rng, lo, hi);
            double err = grad_check([&](Tape& t, VarId x) { return t.sum(build(t, x)); }, p, eps);
            INFO(name << " rep " << rep);
            CHECK(err < tol);
        }
    };
    check_unary("tanh", [](Tape& t, VarId x) { return t.tanh(x); }, -2.0, 2.0);
    check_unary("sigmoid", [](Tape& t, VarId x) { return t.sigmoid(x); }, -2.0, 2.0);
    check_unary("square", [](Tape& t, VarId x) { return t.square(x); }, -2.0, 2.0);
    check_unary("scalar_mul", [](Tape& t, VarId x) { return t.scalar_mul(x, -1.7); }, -2.0, 2.0);
    check_unary("mean", [](Tape& t, VarId x) { return t.mean(x); }, -2.0, 2.0);
    // Kinked primitives checked away from their kinks.
    check_unary("relu_positive", [](Tape& t, VarId x) { return t.relu(x); }, 0.5, 2.0);
    check_unary("relu_negative", [](Tape& t, VarId x) { return t.relu(x); }, -2.0, -0.5);
    check_unary("clamp_interior", [](Tape& t, VarId x) { return t.clamp_stopgrad(x, -5.0, 5.0); }, -2.0, 2.0);

    for (int rep = 0; rep < 100; ++rep) {
        Tensor other = random_tensor(3, 2, rng);
        Tensor p = random_tensor(2, 3, rng);
        double err = grad_check(
            [&](Tape& t, VarId x) { return t.sum(t.matmul(x, t.leaf(other))); }, p, eps);
        CHECK(err < tol);
        Tensor row = random_tensor(1, 3, rng);
        err = grad_check([&](Tape& t, VarId x) { return t.sum(t.hadamard(x, t.leaf(row))); }, p, eps);
        CHECK(err < tol);
        err = grad_check([&](Tape& t, VarId x) { return t.sum(t.sub(x, t.leaf(row))); }, p, eps);
        CHECK(err < tol);
        Tensor tgt = random_tensor(2, 3, rng);
        err = grad_check([&](Tape& t, VarId x) { return t.mse(x, t.leaf(tgt)); }, p, eps);
        CHECK(err < tol);
    }
}

TEST_CASE("finite-difference agreement through a random 3-layer tanh network") {
    std::mt19937_64 rng(7);
    Tensor w0 = random_tensor(6, 8, rng);
    Tensor b0 = random_tensor(1, 8, rng);
    Tensor w1 = random_tensor(8, 8, rng);
    Tensor b1 = random_tensor(1, 8, rng);
    Tensor w2 = random_tensor(8, 4, rng);
    Tensor b2 = random_tensor(1, 4, rng);
    auto net = [&](Tape& t, VarId x) {
        VarId h = t.tanh(t.add(t.matmul(x, t.leaf(w0)), t.leaf(b0)));
        h = t.tanh(t.add(t.matmul(h, t.leaf(w1)), t.leaf(b1)));
        return t.sum(t.square(t.add(t.matmul(h, t.leaf(w2)), t.leaf(b2))));
    };
    for (int rep = 0; rep < 20; ++rep) {
        Tensor p = random_tensor(3, 6, rng);
        CHECK(grad_check(net, p, 1e-5) < 1e-4);
    }
}

TEST_CASE("backward is deterministic: identical graphs give identical gradients") {
    auto run = [](std::vector<double>& out) {
        std::mt19937_64 rng(11);
        Tensor w = random_tensor(4, 4, rng);
        Tensor p = random_tensor(2, 4, rng);
        Tape tape;
        VarId x = tape.leaf(p);
        VarId loss = tape.sum(tape.square(tape.tanh(tape.matmul(x, tape.leaf(w)))));
        tape.backward(loss);
        out = tape.grad(x).data();
    };
    std::vector<double> g1, g2;
    run(g1);
    run(g2);
    REQUIRE(g1.size() == g2.size());
    for (size_t i = 0; i < g1.size(); ++i) CHECK(g1[i] == g2[i]);
}
