#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "coordmotion/grad_check.hpp"
#include "coordmotion/ops.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

#include <cmath>

using namespace coordmotion;
using testutil::max_abs_diff;
using testutil::random_tensor;

TEST_CASE("tensor basics and invariants") {
    Tensor t = Tensor::from_data({2, 3}, {1, 2, 3, 4, 5, 6});
    CHECK(t.numel() == 6);
    CHECK(t.at({1, 2}) == 6.0);
    CHECK_THROWS(Tensor::from_data({2, 2}, {1, 2, 3}));
    CHECK_THROWS(Tensor::from_data({2}, {1.0, std::nan("")}));
    CHECK_THROWS(Tensor::zeros({0, 3}));
    CHECK_THROWS(Tensor::from_data({2}, {1, 2}).value());

    // copies share the buffer
    Tensor alias = t;
    alias.data()[0] = 9.0;
    CHECK(t.at({0, 0}) == 9.0);
}

TEST_CASE("conv_channels scalar affine and identity kernel") {
    // 1x1x1 input [2], 1x1 kernel [3], bias [1] -> [7]
    Tensor x = Tensor::from_data({1, 1, 1}, {2});
    Tensor w = Tensor::from_data({1, 1, 1, 1}, {3});
    Tensor b = Tensor::from_data({1}, {1});
    CHECK(conv_channels(x, w, b, 0, 0).value() == 7.0);

    // delta kernel at center reproduces the input
    SeededRng rng(1);
    Tensor in = random_tensor({2, 4, 5}, rng);
    Tensor delta = Tensor::zeros({2, 2, 3, 3});
    delta.at({0, 0, 1, 1}) = 1.0;
    delta.at({1, 1, 1, 1}) = 1.0;
    Tensor zero_b = Tensor::zeros({2});
    CHECK(max_abs_diff(conv_channels(in, delta, zero_b, 1, 1), in) == 0.0);
}

TEST_CASE("conv_channels matches the loop oracle") {
    SeededRng rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        Tensor x = random_tensor({2, 3, 3}, rng);
        Tensor w = random_tensor({2, 2, 3, 3}, rng);
        Tensor b = random_tensor({2}, rng);
        CHECK(max_abs_diff(conv_channels(x, w, b, 1, 1), oracle::conv(x, w, b, 1, 1)) <= 1e-12);
    }
    Tensor x = random_tensor({2, 3, 3}, rng);
    CHECK_THROWS(conv_channels(x, random_tensor({2, 3, 3, 3}, rng), Tensor::zeros({2}), 1, 1));
    CHECK_THROWS(conv_channels(x, random_tensor({2, 2, 9, 9}, rng), Tensor::zeros({2}), 0, 0));
}

TEST_CASE("matmul_batch identity and oracle") {
    Tensor eye = Tensor::from_data({1, 2, 2}, {1, 0, 0, 1});
    SeededRng rng(3);
    Tensor x = random_tensor({1, 2, 4}, rng);
    CHECK(max_abs_diff(matmul_batch(eye, x), x) == 0.0);

    Tensor a = Tensor::from_data({1, 1, 1}, {2});
    Tensor b = Tensor::from_data({1, 1, 1}, {3});
    CHECK(matmul_batch(a, b).value() == 6.0);

    for (int trial = 0; trial < 20; ++trial) {
        Tensor p = random_tensor({2, 3, 4}, rng);
        Tensor q = random_tensor({2, 4, 2}, rng);
        CHECK(max_abs_diff(matmul_batch(p, q), oracle::matmul_batch(p, q)) <= 1e-12);
    }
    CHECK_THROWS(matmul_batch(random_tensor({2, 3, 4}, rng), random_tensor({2, 5, 2}, rng)));
    CHECK_THROWS(matmul_batch(random_tensor({2, 3, 4}, rng), random_tensor({3, 4, 2}, rng)));
}

TEST_CASE("softmax_rows stability, normalization, oracle") {
    Tensor flat = softmax_rows(Tensor::from_data({2}, {0, 0}));
    CHECK(flat.data()[0] == doctest::Approx(0.5).epsilon(1e-15));

    Tensor big = softmax_rows(Tensor::from_data({2}, {1000, 0}));
    CHECK(big.data()[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(big.data()[1] <= 1e-12);

    SeededRng rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        Tensor x = random_tensor({4, 5}, rng, -3.0, 3.0);
        Tensor y = softmax_rows(x);
        CHECK(max_abs_diff(y, oracle::softmax_rows(x)) <= 1e-12);
        for (int64_t r = 0; r < 4; ++r) {
            double sum = 0.0;
            for (int64_t c = 0; c < 5; ++c) sum += y.at({r, c});
            CHECK(std::abs(sum - 1.0) <= 1e-12);
        }
    }
    CHECK_THROWS(softmax_rows(Tensor::from_data({2}, {1.0, 2.0}) * Tensor::scalar(1e308) *
                              Tensor::scalar(1e308)));
}

TEST_CASE("cosine_similarity_rows geometry and properties") {
    Tensor ortho = cosine_similarity_rows(Tensor::from_data({2, 2}, {1, 0, 0, 1}));
    CHECK(ortho.at({0, 0}) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(ortho.at({0, 1}) == doctest::Approx(0.0).epsilon(1e-15));

    SeededRng rng(13);
    for (int trial = 0; trial < 50; ++trial) {
        Tensor x = random_tensor({4, 3}, rng);
        Tensor s = cosine_similarity_rows(x);
        CHECK(max_abs_diff(s, oracle::cosine_rows(x, kCosineEps)) <= 1e-12);
        // symmetry and range
        for (int64_t i = 0; i < 4; ++i)
            for (int64_t j = 0; j < 4; ++j) {
                CHECK(std::abs(s.at({i, j}) - s.at({j, i})) <= 1e-12);
                CHECK(s.at({i, j}) <= 1.0 + 1e-9);
                CHECK(s.at({i, j}) >= -1.0 - 1e-9);
            }
        // positive row scaling leaves the matrix unchanged
        Tensor scaled = Tensor::from_data(x.shape(), x.data());
        for (int64_t c = 0; c < 3; ++c) scaled.at({1, c}) *= 2.0;
        CHECK(max_abs_diff(cosine_similarity_rows(scaled), s) <= 1e-9);
    }
    CHECK_THROWS(cosine_similarity_rows(random_tensor({2, 2}, rng), 0.0));
}

TEST_CASE("activation definitional points") {
    Tensor x = Tensor::from_data({3}, {-2.0, 0.0, 1.5});
    CHECK(max_abs_diff(activation(x, ActivationKind::Identity), x) == 0.0);
    CHECK(activation(x, ActivationKind::Sigmoid).data()[1] == 0.5);
    CHECK(activation(x, ActivationKind::LeakyRelu).data()[0] ==
          doctest::Approx(-0.2).epsilon(1e-15));
    CHECK(activation(x, ActivationKind::Tanh).data()[2] ==
          doctest::Approx(std::tanh(1.5)).epsilon(1e-15));
    CHECK(activation_from_string("leaky_relu") == ActivationKind::LeakyRelu);
    CHECK_THROWS(activation_from_string("relu6"));
}

TEST_CASE("reduce, transpose, broadcast semantics") {
    Tensor c = Tensor::full({3, 4}, 2.5);
    CHECK(reduce_mean(c, {0, 1}).value() == 2.5);

    SeededRng rng(17);
    Tensor x = random_tensor({2, 3, 4}, rng);
    Tensor back = transpose(transpose(x, {2, 0, 1}), {1, 2, 0});
    CHECK(max_abs_diff(back, x) == 0.0);

    // broadcast subtract against a loop oracle
    Tensor big = random_tensor({4, 3, 5}, rng);
    Tensor small = random_tensor({1, 3, 5}, rng);
    Tensor diff = sub(big, small);
    for (int64_t n = 0; n < 4; ++n)
        for (int64_t d = 0; d < 3; ++d)
            for (int64_t t = 0; t < 5; ++t) {
                CHECK(std::abs(diff.at({n, d, t}) - (big.at({n, d, t}) - small.at({0, d, t}))) <=
                      1e-12);
            }
    CHECK_THROWS(add(random_tensor({2, 3}, rng), random_tensor({2, 4}, rng)));
    CHECK_THROWS(add(random_tensor({2, 3}, rng), random_tensor({2, 3, 1}, rng)));

    Tensor cc = concat({Tensor::full({2, 2}, 1.0), Tensor::full({2, 3}, 2.0)}, 1);
    CHECK(cc.shape() == std::vector<int64_t>{2, 5});
    CHECK(cc.at({1, 4}) == 2.0);
}

TEST_CASE("backward on simple graphs") {
    // loss = sum(w * x), x constant -> grad(w) = x
    Tensor w = Tensor::from_data({3}, {1, 2, 3}, true);
    Tensor x = Tensor::from_data({3}, {4, 5, 6});
    {
        ComputeTape tape;
        Tensor loss = reduce_sum_all(mul(w, x));
        tape.backward(loss);
        CHECK(max_abs_diff(w.grad(), x.data()) == 0.0);
    }
    // loss = sum(w^2) at w=[1,2] -> grad [2,4]
    Tensor w2 = Tensor::from_data({2}, {1, 2}, true);
    {
        ComputeTape tape;
        Tensor loss = reduce_sum_all(mul(w2, w2));
        tape.backward(loss);
        CHECK(max_abs_diff(w2.grad(), {2.0, 4.0}) <= 1e-15);
    }
}

TEST_CASE("backward error paths") {
    Tensor w = Tensor::from_data({2}, {1, 2}, true);
    {
        ComputeTape tape;
        Tensor vec = mul(w, w);
        CHECK_THROWS(tape.backward(vec));  // non-scalar
        CHECK_THROWS(tape.backward(w));    // detached parameter
        Tensor loss = reduce_sum_all(vec);
        tape.backward(loss);
        CHECK(w.has_grad());
    }
    CHECK(ComputeTape::active() == nullptr); // tape released on scope exit
}

TEST_CASE("only one tape can be active") {
    ComputeTape tape;
    CHECK_THROWS(ComputeTape());
}

TEST_CASE("grad accumulates across uses of the same tensor") {
    Tensor w = Tensor::from_data({1}, {3}, true);
    ComputeTape tape;
    Tensor loss = reduce_sum_all(mul(w, w)); // d/dw w^2 = 2w = 6
    tape.backward(loss);
    CHECK(w.grad()[0] == doctest::Approx(6.0).epsilon(1e-15));
}

TEST_CASE("grad_check on a quadratic is near-exact") {
    Tensor w = Tensor::from_data({3}, {0.5, -1.0, 2.0}, true);
    auto f = [&]() { return reduce_sum_all(mul(w, w)); };
    GradCheckReport report = grad_check(f, {{"w", w}}, 1e-5);
    CHECK(report.max_rel_err <= 1e-7);
    CHECK(report.pass(1e-4));
}

TEST_CASE("grad_check flags an intentionally wrong backward") {
    Tensor w = Tensor::from_data({2}, {0.7, -0.3}, true);
    auto f = [&]() {
        // forward computes sum(w*w) but the recorded backward has the wrong sign
        Tensor out = Tensor::scalar(w.data()[0] * w.data()[0] + w.data()[1] * w.data()[1]);
        ComputeTape* tape = ComputeTape::active();
        if (tape) {
            out.set_requires_grad(true);
            set_creator(out, tape);
            Tensor wc = w;
            Tensor oc = out;
            tape->record(out, [wc, oc]() mutable {
                auto& g = wc.ensure_grad();
                for (size_t i = 0; i < g.size(); ++i) g[i] -= 2.0 * wc.data()[i] * oc.grad()[0];
            });
        }
        return out;
    };
    GradCheckReport report = grad_check(f, {{"w", w}}, 1e-5);
    CHECK_FALSE(report.pass(1e-4));
}

TEST_CASE("grad_check rejects a nondeterministic objective") {
    int calls = 0;
    Tensor w = Tensor::from_data({1}, {1.0}, true);
    auto f = [&]() { return Tensor::scalar(static_cast<double>(++calls)); };
    CHECK_THROWS(grad_check(f, {{"w", w}}, 1e-5));
}

TEST_CASE("every kernel passes a finite-difference check") {
    SeededRng rng(23);
    const double tol = 1e-4;

    {
        Tensor x = random_tensor({2, 3, 4}, rng, -1, 1, true);
        Tensor w = random_tensor({3, 2, 1, 3}, rng, -1, 1, true);
        Tensor b = random_tensor({3}, rng, -1, 1, true);
        Tensor probe = random_tensor({3, 3, 4}, rng);
        auto f = [&]() { return reduce_sum_all(mul(conv_channels(x, w, b, 0, 1), probe)); };
        CHECK(grad_check(f, {{"x", x}, {"w", w}, {"b", b}}, 1e-5).pass(tol));
    }
    {
        Tensor a = random_tensor({2, 3, 4}, rng, -1, 1, true);
        Tensor b = random_tensor({2, 4, 2}, rng, -1, 1, true);
        Tensor probe = random_tensor({2, 3, 2}, rng);
        auto f = [&]() { return reduce_sum_all(mul(matmul_batch(a, b), probe)); };
        CHECK(grad_check(f, {{"a", a}, {"b", b}}, 1e-5).pass(tol));
    }
    {
        Tensor x = random_tensor({3, 5}, rng, -2, 2, true);
        Tensor probe = random_tensor({3, 5}, rng);
        auto f = [&]() { return reduce_sum_all(mul(softmax_rows(x), probe)); };
        CHECK(grad_check(f, {{"x", x}}, 1e-5).pass(tol));
    }
    {
        Tensor x = random_tensor({4, 3}, rng, -1, 1, true);
        Tensor probe = random_tensor({4, 4}, rng);
        auto f = [&]() { return reduce_sum_all(mul(cosine_similarity_rows(x), probe)); };
        CHECK(grad_check(f, {{"x", x}}, 1e-5).pass(tol));
    }
    for (ActivationKind kind : {ActivationKind::Identity, ActivationKind::Tanh,
                                ActivationKind::LeakyRelu, ActivationKind::Sigmoid}) {
        Tensor x = random_tensor({3, 4}, rng, -1.5, 1.5, true);
        Tensor probe = random_tensor({3, 4}, rng);
        auto f = [&]() { return reduce_sum_all(mul(activation(x, kind), probe)); };
        CHECK(grad_check(f, {{"x", x}}, 1e-5).pass(tol));
    }
    {
        Tensor x = random_tensor({2, 3, 4}, rng, -1, 1, true);
        Tensor probe = random_tensor({1, 3, 1}, rng);
        auto f = [&]() { return reduce_sum_all(mul(reduce_mean(x, {0, 2}), probe)); };
        CHECK(grad_check(f, {{"x", x}}, 1e-5).pass(tol));
    }
    {
        Tensor a = random_tensor({2, 1, 4}, rng, -1, 1, true);
        Tensor b = random_tensor({2, 3, 1}, rng, -1, 1, true);
        Tensor probe = random_tensor({2, 3, 4}, rng);
        auto fa = [&]() { return reduce_sum_all(mul(mul(a, b), probe)); };
        CHECK(grad_check(fa, {{"a", a}, {"b", b}}, 1e-5).pass(tol));
        auto fs = [&]() { return reduce_sum_all(mul(sub(a, b), probe)); };
        CHECK(grad_check(fs, {{"a", a}, {"b", b}}, 1e-5).pass(tol));
    }
    {
        Tensor x = random_tensor({3, 2, 4}, rng, -1, 1, true);
        Tensor probe = random_tensor({4, 3, 2}, rng);
        auto f = [&]() { return reduce_sum_all(mul(transpose(x, {2, 0, 1}), probe)); };
        CHECK(grad_check(f, {{"x", x}}, 1e-5).pass(tol));
    }
    {
        Tensor xs = random_tensor({2, 3}, rng, -1, 1, true);
        Tensor ys = random_tensor({2, 2}, rng, -1, 1, true);
        Tensor probe = random_tensor({2, 5}, rng);
        auto f = [&]() { return reduce_sum_all(mul(concat({xs, ys}, 1), probe)); };
        CHECK(grad_check(f, {{"xs", xs}, {"ys", ys}}, 1e-5).pass(tol));
    }
    {
        Tensor x = random_tensor({3, 2, 2}, rng, -1, 1, true);
        Tensor probe = random_tensor({2, 2}, rng);
        auto f = [&]() { return reduce_sum_all(mul(slice0(x, 1), probe)); };
        CHECK(grad_check(f, {{"x", x}}, 1e-5).pass(tol));
    }
    {
        Tensor pred = random_tensor({2, 3, 3}, rng, -1, 1, true);
        Tensor truth = random_tensor({2, 3, 3}, rng);
        auto f = [&]() { return mpjpe_loss(pred, truth); };
        CHECK(grad_check(f, {{"pred", pred}}, 1e-5).pass(tol));
    }
}

TEST_CASE("mpjpe_loss values and unit gradient") {
    Tensor a = Tensor::from_data({1, 1, 3}, {1, 2, 3});
    CHECK(mpjpe_loss(a, a).value() == 0.0);
    {
        // identical inputs: loss 0 and gradient 0
        Tensor p = Tensor::from_data({1, 1, 3}, {1, 2, 3}, true);
        ComputeTape tape;
        Tensor loss = mpjpe_loss(p, a);
        tape.backward(loss);
        for (double g : p.grad()) CHECK(g == 0.0);
    }

    Tensor pred = Tensor::from_data({1, 1, 3}, {3, 4, 0}, true);
    Tensor truth = Tensor::zeros({1, 1, 3});
    ComputeTape tape;
    Tensor loss = mpjpe_loss(pred, truth);
    CHECK(loss.value() == doctest::Approx(5.0).epsilon(1e-15));
    tape.backward(loss);
    CHECK(pred.grad()[0] == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(pred.grad()[1] == doctest::Approx(0.8).epsilon(1e-12));
    CHECK(pred.grad()[2] == doctest::Approx(0.0).epsilon(1e-12));

    CHECK_THROWS(mpjpe_loss(a, Tensor::zeros({2, 1, 3})));
}
