#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "coordmotion/gradcheck_suite.hpp"
#include "coordmotion/lie.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

#include <cmath>

using namespace coordmotion;
using testutil::max_abs_diff;
using testutil::random_tensor;

namespace {

LieParams make_params(const ModelConfig& cfg, ParameterStore& store, uint64_t seed = 42) {
    SeededRng rng(seed);
    return LieParams::create(cfg, store, "lie", rng);
}

} // namespace

TEST_CASE("adjacent path: delta kernel identity and locality") {
    ModelConfig cfg = toy_model_config();
    cfg.act = ActivationKind::Identity;
    ParameterStore store;
    LieParams params = make_params(cfg, store);
    const int64_t t = cfg.trajectory_dim;

    // delta kernel, zero bias -> output == input
    std::fill(params.w_adjacent.data().begin(), params.w_adjacent.data().end(), 0.0);
    std::fill(params.b_adjacent.data().begin(), params.b_adjacent.data().end(), 0.0);
    for (int64_t c = 0; c < t; ++c) params.w_adjacent.at({c, c, 1, 1}) = 1.0;

    SeededRng rng(1);
    Tensor x = random_tensor({cfg.joints, cfg.feature_dim, t}, rng);
    CHECK(max_abs_diff(adjacent_path(x, params, cfg.act), x) == 0.0);

    // single nonzero pixel spreads no further than its 3x3 neighborhood
    ParameterStore store2;
    LieParams params2 = make_params(cfg, store2, 7);
    std::fill(params2.b_adjacent.data().begin(), params2.b_adjacent.data().end(), 0.0);
    Tensor spark = Tensor::zeros({cfg.joints, cfg.feature_dim, t});
    for (int64_t c = 0; c < t; ++c) spark.at({2, 1, c}) = 1.0;
    Tensor out = adjacent_path(spark, params2, cfg.act);
    for (int64_t n = 0; n < cfg.joints; ++n)
        for (int64_t d = 0; d < cfg.feature_dim; ++d) {
            if (std::abs(n - 2) <= 1 && std::abs(d - 1) <= 1) continue;
            for (int64_t c = 0; c < t; ++c) CHECK(out.at({n, d, c}) == 0.0);
        }
}

TEST_CASE("adjacent path matches the loop oracle") {
    ModelConfig cfg = toy_model_config();
    ParameterStore store;
    LieParams params = make_params(cfg, store);
    SeededRng rng(3);
    for (int trial = 0; trial < 10; ++trial) {
        Tensor x = random_tensor({cfg.joints, cfg.feature_dim, cfg.trajectory_dim}, rng);
        CHECK(max_abs_diff(adjacent_path(x, params, cfg.act),
                           oracle::adjacent_path(x, params, cfg.act)) <= 1e-12);
    }
}

TEST_CASE("non-local attention: uniform case and single pixel") {
    ModelConfig cfg = toy_model_config();
    ParameterStore store;
    LieParams params = make_params(cfg, store);
    const int64_t pixels = cfg.joints * cfg.feature_dim;

    // identical pixels -> uniform attention, identical outputs
    SeededRng rng(5);
    Tensor x = Tensor::zeros({cfg.joints, cfg.feature_dim, cfg.trajectory_dim});
    for (int64_t c = 0; c < cfg.trajectory_dim; ++c) {
        const double v = rng.uniform(-1, 1);
        for (int64_t n = 0; n < cfg.joints; ++n)
            for (int64_t d = 0; d < cfg.feature_dim; ++d) x.at({n, d, c}) = v;
    }
    Tensor a = nonlocal_attention_weights(x, params);
    for (double v : a.data()) {
        CHECK(v == doctest::Approx(1.0 / static_cast<double>(pixels)).epsilon(1e-12));
    }
    Tensor y = nonlocal_attention(x, params);
    for (int64_t c = 0; c < cfg.trajectory_dim; ++c)
        for (int64_t n = 0; n < cfg.joints; ++n)
            for (int64_t d = 0; d < cfg.feature_dim; ++d) {
                CHECK(y.at({n, d, c}) == doctest::Approx(y.at({0, 0, c})).epsilon(1e-12));
            }

    // single pixel: A = [[1]], Y = out_map(g(q))
    Tensor q = random_tensor({1, 1, cfg.trajectory_dim}, rng);
    Tensor a1 = nonlocal_attention_weights(q, params);
    CHECK(a1.numel() == 1);
    CHECK(a1.value() == doctest::Approx(1.0).epsilon(1e-15));
    Tensor y1 = nonlocal_attention(q, params);
    const int64_t te = params.w_theta.dim(0);
    for (int64_t c = 0; c < cfg.trajectory_dim; ++c) {
        double expect = 0.0;
        for (int64_t e = 0; e < te; ++e) {
            double ge = 0.0;
            for (int64_t tc = 0; tc < cfg.trajectory_dim; ++tc) {
                ge += params.w_g.at({e, tc}) * q.at({0, 0, tc});
            }
            expect += params.w_out.at({c, e}) * ge;
        }
        CHECK(y1.at({0, 0, c}) == doctest::Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("non-local attention rows sum to one and match the oracle") {
    ModelConfig cfg = toy_model_config();
    ParameterStore store;
    LieParams params = make_params(cfg, store);
    SeededRng rng(7);
    for (int trial = 0; trial < 10; ++trial) {
        // N*D = 6 toy instance
        Tensor x = random_tensor({3, 2, cfg.trajectory_dim}, rng);
        Tensor a = nonlocal_attention_weights(x, params);
        for (int64_t i = 0; i < a.dim(0); ++i) {
            double sum = 0.0;
            for (int64_t j = 0; j < a.dim(1); ++j) sum += a.at({i, j});
            CHECK(std::abs(sum - 1.0) <= 1e-12);
        }
        CHECK(max_abs_diff(nonlocal_attention(x, params), oracle::nonlocal_attention(x, params)) <=
              1e-12);
    }
}

TEST_CASE("non-local attention is pixel-permutation equivariant; adjacent path is not") {
    ModelConfig cfg = toy_model_config();
    ParameterStore store;
    LieParams params = make_params(cfg, store);
    SeededRng rng(9);
    const int64_t n = cfg.joints, d = cfg.feature_dim, t = cfg.trajectory_dim;
    Tensor x = random_tensor({n, d, t}, rng);

    // a pixel permutation that crosses joint rows
    const int64_t pixels = n * d;
    std::vector<int64_t> perm(static_cast<size_t>(pixels));
    for (int64_t i = 0; i < pixels; ++i) perm[static_cast<size_t>(i)] = i;
    SeededRng perm_rng(11);
    perm_rng.shuffle(perm);

    auto permute_pixels = [&](const Tensor& in) {
        Tensor out = Tensor::zeros(in.shape());
        for (int64_t i = 0; i < pixels; ++i)
            for (int64_t c = 0; c < t; ++c) {
                out.data()[static_cast<size_t>(i * t + c)] =
                    in.data()[static_cast<size_t>(perm[static_cast<size_t>(i)] * t + c)];
            }
        return out;
    };

    Tensor y = nonlocal_attention(x, params);
    Tensor y_perm = nonlocal_attention(permute_pixels(x), params);
    CHECK(max_abs_diff(y_perm, permute_pixels(y)) <= 1e-12);

    // witness that the conv path genuinely depends on the arrangement
    Tensor adj = adjacent_path(x, params, cfg.act);
    Tensor adj_perm = adjacent_path(permute_pixels(x), params, cfg.act);
    CHECK(max_abs_diff(adj_perm, permute_pixels(adj)) > 1e-6);
}

TEST_CASE("distant path: zero preservation, identity reduction, oracle") {
    ModelConfig cfg = toy_model_config();
    cfg.act = ActivationKind::Identity;
    ParameterStore store;
    LieParams params = make_params(cfg, store);
    const int64_t t = cfg.trajectory_dim;

    // zero input, zero biases, an activation with act(0)=0 -> zero output
    std::fill(params.b_distant.data().begin(), params.b_distant.data().end(), 0.0);
    Tensor zeros = Tensor::zeros({cfg.joints, cfg.feature_dim, t});
    Tensor out0 = distant_path(zeros, params, ActivationKind::LeakyRelu);
    CHECK(max_abs_diff(out0, zeros) == 0.0);

    // identity W_distant -> F_distant == Y
    std::fill(params.w_distant.data().begin(), params.w_distant.data().end(), 0.0);
    for (int64_t c = 0; c < t; ++c) params.w_distant.at({c, c, 0, 0}) = 1.0;
    SeededRng rng(13);
    Tensor x = random_tensor({cfg.joints, cfg.feature_dim, t}, rng);
    CHECK(max_abs_diff(distant_path(x, params, ActivationKind::Identity),
                       nonlocal_attention(x, params)) <= 1e-12);

    ParameterStore store2;
    LieParams params2 = make_params(cfg, store2, 17);
    for (int trial = 0; trial < 10; ++trial) {
        Tensor xt = random_tensor({cfg.joints, cfg.feature_dim, t}, rng);
        CHECK(max_abs_diff(distant_path(xt, params2, ActivationKind::LeakyRelu),
                           oracle::distant_path(xt, params2, ActivationKind::LeakyRelu)) <= 1e-12);
    }
}

TEST_CASE("lie parameters pass the finite-difference check") {
    GradCheckReport report = run_module_gradcheck("lie");
    CHECK(report.pass(1e-4));
}
