#include "coordmotion/network.hpp"

#include <stdexcept>

namespace coordmotion {

CjreNet::CjreNet(const ModelConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    SeededRng rng(cfg_.seed);
    const int64_t d = cfg_.feature_dim;
    const int64_t t = cfg_.trajectory_dim;
    const int64_t dyn_len = 2 * cfg_.observed_frames - 1;

    mtde_ = MtdeParams::create(cfg_, store_, "mtde", rng);
    w_in_ = store_.create("head.in.w", {t, dyn_len, 1, 1}, dyn_len, rng);
    b_in_ = store_.create("head.in.b", {t}, dyn_len, rng);

    const int streams = cfg_.stream_count();
    for (int b = 0; b < cfg_.block_count; ++b) {
        const std::string prefix = "block" + std::to_string(b + 1);
        Block block;
        if (cfg_.use_gce) {
            block.gce = GceParams::create(cfg_, store_, prefix + ".gce", rng,
                                          cfg_.use_relative_joints);
        }
        if (cfg_.use_lie) {
            block.lie = LieParams::create(cfg_, store_, prefix + ".lie", rng);
        }
        if (cfg_.use_affm) {
            block.affm = AffmParams::create(streams * static_cast<int>(t), cfg_.affm_reduction,
                                            store_, prefix + ".affm", rng);
        }
        block.proj_w = store_.create(prefix + ".proj.w", {t, streams * t, 1, 1}, streams * t, rng);
        block.proj_b = store_.create(prefix + ".proj.b", {t}, streams * t, rng);
        blocks_.push_back(std::move(block));
    }

    w_time_ = store_.create("head.time.w", {cfg_.predicted_frames, t, 1, 1}, t, rng);
    b_time_ = store_.create("head.time.b", {cfg_.predicted_frames}, t, rng);
    w_coord_ = store_.create("head.coord.w", {3, d, 1, 1}, d, rng);
    b_coord_ = store_.create("head.coord.b", {3}, d, rng);
}

Tensor CjreNet::input_head(const Tensor& x_d) const {
    const int64_t dyn_len = 2 * cfg_.observed_frames - 1;
    if (x_d.rank() != 3 || x_d.dim(1) != dyn_len || x_d.dim(2) != cfg_.feature_dim) {
        throw std::invalid_argument("input_head expects [N x " + std::to_string(dyn_len) + " x " +
                                    std::to_string(cfg_.feature_dim) + "], got " +
                                    shape_to_string(x_d.shape()));
    }
    // the dynamics-time axis becomes the channel axis: [(2T_p-1) x N x D]
    Tensor t_first = transpose(x_d, {1, 0, 2});
    Tensor mapped = activation(conv_channels(t_first, w_in_, b_in_, 0, 0), cfg_.act);
    return transpose(mapped, {1, 2, 0}); // [N x D x T]
}

Tensor CjreNet::cjre_block(const Tensor& x, int block_index, ForwardTrace* trace) const {
    const Block& block = blocks_.at(static_cast<size_t>(block_index));

    std::vector<Tensor> streams; // concat order: distant, ca, adjacent
    Tensor f_ca;
    if (block.gce) {
        GceFlags flags{cfg_.use_relative_joints, cfg_.multi_graph, cfg_.similarity};
        f_ca = gce_forward(x, *block.gce, cfg_.act, flags);
    }
    if (block.lie) {
        // serial ablation: local interactions conditioned on the GCE output
        const Tensor& lie_input = (cfg_.serial_mode && block.gce) ? f_ca : x;
        streams.push_back(distant_path(lie_input, *block.lie, cfg_.act));
        if (block.gce) streams.push_back(f_ca);
        streams.push_back(adjacent_path(lie_input, *block.lie, cfg_.act));
    } else {
        streams.push_back(f_ca);
    }

    Tensor fused = streams.size() == 1 ? streams[0] : concat(streams, 2);
    if (block.affm) {
        Tensor ratio = affm_gate(fused, *block.affm, cfg_.act);
        if (trace) trace->block_ratios.push_back(ratio.data());
        fused = affm_apply(fused, ratio);
    }

    // per-pixel bottleneck projection back to T channels, then residual add
    Tensor t_first = transpose(fused, {2, 0, 1});
    Tensor projected = conv_channels(t_first, block.proj_w, block.proj_b, 0, 0);
    return add(x, transpose(projected, {1, 2, 0}));
}

Tensor CjreNet::forward(const Tensor& observed, ForwardTrace* trace) const {
    if (observed.rank() != 3 || observed.dim(0) != cfg_.observed_frames ||
        observed.dim(1) != cfg_.joints || observed.dim(2) != 3) {
        throw std::invalid_argument("forward expects [" + std::to_string(cfg_.observed_frames) +
                                    " x " + std::to_string(cfg_.joints) + " x 3], got " +
                                    shape_to_string(observed.shape()));
    }
    Tensor p = transpose(observed, {1, 0, 2});                      // [N x T_p x 3]
    Tensor v = transpose(compute_velocity(observed), {1, 0, 2});    // [N x (T_p-1) x 3]

    Tensor x_d = mtde_forward(p, v, mtde_, cfg_.act);
    Tensor x = input_head(x_d);

    std::vector<Tensor> outputs;
    outputs.reserve(blocks_.size());
    for (int b = 0; b < cfg_.block_count; ++b) {
        Tensor input = x;
        for (auto [src, dst] : cfg_.laterals) {
            if (dst - 1 == b) input = add(input, outputs.at(static_cast<size_t>(src - 1)));
        }
        Tensor out = cjre_block(input, b, trace);
        outputs.push_back(out);
        x = out;
    }

    // output head: trajectory axis T -> T_out frames, then features D -> 3
    Tensor t_first = transpose(x, {2, 0, 1}); // [T x N x D]
    Tensor frames = conv_channels(t_first, w_time_, b_time_, 0, 0); // [T_out x N x D]
    Tensor d_first = transpose(frames, {2, 0, 1});                  // [D x T_out x N]
    Tensor coords = conv_channels(d_first, w_coord_, b_coord_, 0, 0); // [3 x T_out x N]
    Tensor pred = transpose(coords, {1, 2, 0});                       // [T_out x N x 3]

    if (cfg_.residual_output) {
        Tensor last = Tensor::zeros({1, cfg_.joints, 3});
        const auto& od = observed.data();
        auto& ld = last.data();
        const size_t off = static_cast<size_t>((cfg_.observed_frames - 1) * cfg_.joints * 3);
        for (size_t k = 0; k < ld.size(); ++k) ld[k] = od[off + k];
        pred = add(pred, last);
    }
    return pred;
}

void CjreNet::zero_output_head() {
    for (Tensor* t : {&w_time_, &b_time_, &w_coord_, &b_coord_}) {
        for (auto& v : t->data()) v = 0.0;
    }
}

} // namespace coordmotion
