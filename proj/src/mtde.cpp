#include "coordmotion/mtde.hpp"

#include <stdexcept>

namespace coordmotion {

MtdeParams MtdeParams::create(const ModelConfig& cfg, ParameterStore& store,
                              const std::string& prefix, SeededRng& rng) {
    MtdeParams p;
    p.timescales = cfg.timescales;
    const int64_t d = cfg.feature_dim;
    const int64_t fused_in = static_cast<int64_t>(cfg.timescales.size()) * d;
    auto make_branch = [&](const std::string& name) {
        Branch b;
        for (size_t i = 0; i < cfg.timescales.size(); ++i) {
            const int64_t k = cfg.timescales[i];
            const std::string base = prefix + "." + name + ".scale" + std::to_string(i);
            b.conv_w.push_back(store.create(base + ".w", {d, 3, 1, k}, 3 * k, rng));
            b.conv_b.push_back(store.create(base + ".b", {d}, 3 * k, rng));
        }
        b.fuse_w = store.create(prefix + "." + name + ".fuse.w", {d, fused_in, 1, 1}, fused_in, rng);
        b.fuse_b = store.create(prefix + "." + name + ".fuse.b", {d}, fused_in, rng);
        return b;
    };
    p.position = make_branch("pos");
    p.velocity = make_branch("vel");
    return p;
}

namespace {

// branch input [N x L x 3] -> dynamics [N x L x D]
Tensor branch_forward(const Tensor& in, const MtdeParams::Branch& branch,
                      const std::vector<int>& timescales, ActivationKind act) {
    // coordinates become conv channels: [3 x N x L]
    Tensor x = transpose(in, {2, 0, 1});
    std::vector<Tensor> scales;
    scales.reserve(timescales.size());
    for (size_t i = 0; i < timescales.size(); ++i) {
        const int pad = (timescales[i] - 1) / 2;
        Tensor c = conv_channels(x, branch.conv_w[i], branch.conv_b[i], 0, pad);
        scales.push_back(activation(c, act));
    }
    Tensor fusedin = concat(scales, 0);                              // [kD x N x L]
    Tensor fused = conv_channels(fusedin, branch.fuse_w, branch.fuse_b, 0, 0); // [D x N x L]
    return transpose(fused, {1, 2, 0});                              // [N x L x D]
}

} // namespace

Tensor mtde_forward(const Tensor& p, const Tensor& v, const MtdeParams& params,
                    ActivationKind act) {
    if (p.rank() != 3 || p.dim(2) != 3) {
        throw std::invalid_argument("mtde_forward positions must be [N x T_p x 3], got " +
                                    shape_to_string(p.shape()));
    }
    if (v.rank() != 3 || v.dim(2) != 3 || v.dim(0) != p.dim(0) || v.dim(1) != p.dim(1) - 1) {
        throw std::invalid_argument("mtde_forward velocities must be [N x (T_p-1) x 3], got " +
                                    shape_to_string(v.shape()) + " for positions " +
                                    shape_to_string(p.shape()));
    }
    if (p.dim(1) < 2) throw std::invalid_argument("mtde_forward needs T_p >= 2");
    Tensor dp = branch_forward(p, params.position, params.timescales, act);
    Tensor dv = branch_forward(v, params.velocity, params.timescales, act);
    return concat({dp, dv}, 1); // [N x (2*T_p-1) x D]
}

} // namespace coordmotion
