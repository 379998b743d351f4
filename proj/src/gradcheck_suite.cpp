#include "coordmotion/gradcheck_suite.hpp"

#include "coordmotion/affm.hpp"
#include "coordmotion/gce.hpp"
#include "coordmotion/lie.hpp"
#include "coordmotion/mtde.hpp"
#include "coordmotion/network.hpp"

#include <stdexcept>

namespace coordmotion {

ModelConfig toy_model_config() {
    ModelConfig cfg;
    cfg.joints = 5;
    cfg.feature_dim = 4;
    cfg.trajectory_dim = 6;
    cfg.observed_frames = 4;
    cfg.predicted_frames = 4;
    cfg.timescales = {1, 3, 5};
    cfg.block_count = 2;
    cfg.laterals = {{1, 2}};
    cfg.affm_reduction = 3;
    cfg.seed = 42;
    return cfg;
}

const std::vector<std::string>& gradcheck_module_names() {
    static const std::vector<std::string> names = {"mtde", "gce", "lie", "affm", "net"};
    return names;
}

namespace {

constexpr double kGradCheckStep = 1e-5;

Tensor random_tensor(std::vector<int64_t> shape, SeededRng& rng) {
    Tensor t = Tensor::zeros(std::move(shape));
    for (auto& v : t.data()) v = rng.uniform(-1.0, 1.0);
    return t;
}

// linear functional of the module output keeps the objective scalar while
// exercising every output entry
Tensor probe(const Tensor& out, const Tensor& weights) {
    return reduce_sum_all(mul(out, weights));
}

} // namespace

GradCheckReport run_module_gradcheck(const std::string& module) {
    const ModelConfig cfg = toy_model_config();
    const int64_t n = cfg.joints, d = cfg.feature_dim, t = cfg.trajectory_dim;
    SeededRng rng(2024);

    if (module == "net") {
        CjreNet net(cfg);
        Tensor observed = random_tensor({cfg.observed_frames, n, 3}, rng);
        Tensor target = random_tensor({cfg.predicted_frames, n, 3}, rng);
        auto f = [&]() { return mpjpe_loss(net.forward(observed), target); };
        return grad_check(f, net.params().entries(), kGradCheckStep);
    }

    ParameterStore store;
    SeededRng init(cfg.seed);
    if (module == "mtde") {
        MtdeParams params = MtdeParams::create(cfg, store, "mtde", init);
        Tensor p = random_tensor({n, cfg.observed_frames, 3}, rng);
        Tensor v = random_tensor({n, cfg.observed_frames - 1, 3}, rng);
        Tensor w = random_tensor({n, 2 * cfg.observed_frames - 1, d}, rng);
        auto f = [&]() { return probe(mtde_forward(p, v, params, cfg.act), w); };
        return grad_check(f, store.entries(), kGradCheckStep);
    }
    if (module == "gce") {
        GceParams params = GceParams::create(cfg, store, "gce", init, /*with_ca=*/true);
        GceFlags flags{cfg.use_relative_joints, cfg.multi_graph, cfg.similarity};
        Tensor x = random_tensor({n, d, t}, rng);
        Tensor w = random_tensor({n, d, t}, rng);
        auto f = [&]() { return probe(gce_forward(x, params, cfg.act, flags), w); };
        return grad_check(f, store.entries(), kGradCheckStep);
    }
    if (module == "lie") {
        LieParams params = LieParams::create(cfg, store, "lie", init);
        Tensor x = random_tensor({n, d, t}, rng);
        Tensor w1 = random_tensor({n, d, t}, rng);
        Tensor w2 = random_tensor({n, d, t}, rng);
        auto f = [&]() {
            Tensor both = add(mul(adjacent_path(x, params, cfg.act), w1),
                              mul(distant_path(x, params, cfg.act), w2));
            return reduce_sum_all(both);
        };
        return grad_check(f, store.entries(), kGradCheckStep);
    }
    if (module == "affm") {
        AffmParams params = AffmParams::create(3 * static_cast<int>(t), cfg.affm_reduction, store,
                                               "affm", init);
        Tensor f1 = random_tensor({n, d, t}, rng);
        Tensor f2 = random_tensor({n, d, t}, rng);
        Tensor f3 = random_tensor({n, d, t}, rng);
        Tensor w = random_tensor({n, d, 3 * t}, rng);
        auto f = [&]() { return probe(affm_forward(f1, f2, f3, params, cfg.act), w); };
        return grad_check(f, store.entries(), kGradCheckStep);
    }
    throw std::invalid_argument("unknown gradcheck module '" + module +
                                "' (expected all|mtde|gce|lie|affm|net)");
}

} // namespace coordmotion
