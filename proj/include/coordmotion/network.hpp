#pragma once

#include "coordmotion/affm.hpp"
#include "coordmotion/config.hpp"
#include "coordmotion/gce.hpp"
#include "coordmotion/lie.hpp"
#include "coordmotion/motion.hpp"
#include "coordmotion/mtde.hpp"
#include "coordmotion/param_store.hpp"

#include <memory>
#include <optional>

namespace coordmotion {

// Per-forward instrumentation: the channel-attention gate of every block,
// feeding the relative-weight report.
struct ForwardTrace {
    std::vector<std::vector<double>> block_ratios;
};

// Input head into trajectory space, stacked CJRE blocks (GCE || LIE -> AFFM
// -> projection + residual) with additive lateral connections, and an output
// head of two 1x1 maps (trajectory axis T -> T_out, then feature axis D -> 3).
class CjreNet {
public:
    explicit CjreNet(const ModelConfig& cfg);

    // observed [T_p x N x 3] -> predicted [T_out x N x 3]
    Tensor forward(const Tensor& observed, ForwardTrace* trace = nullptr) const;

    // X_d [N x (2*T_p-1) x D] -> X [N x D x T]
    Tensor input_head(const Tensor& x_d) const;

    Tensor cjre_block(const Tensor& x, int block_index, ForwardTrace* trace = nullptr) const;

    const ModelConfig& config() const { return cfg_; }
    ParameterStore& params() { return store_; }
    const ParameterStore& params() const { return store_; }

    // test/ablation hook: zero the output head so that residual mode
    // reproduces the zero-velocity baseline exactly
    void zero_output_head();

    struct Block {
        std::optional<GceParams> gce;
        std::optional<LieParams> lie;
        std::optional<AffmParams> affm;
        Tensor proj_w, proj_b; // per-pixel map, stream_count*T -> T
    };

    const std::vector<Block>& blocks() const { return blocks_; }

private:
    ModelConfig cfg_;
    ParameterStore store_;
    MtdeParams mtde_;
    Tensor w_in_, b_in_;     // [T x (2*T_p-1) x 1 x 1], [T]
    std::vector<Block> blocks_;
    Tensor w_time_, b_time_; // [T_out x T x 1 x 1], [T_out]
    Tensor w_coord_, b_coord_; // [3 x D x 1 x 1], [3]
};

} // namespace coordmotion
