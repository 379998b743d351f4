#pragma once

#include "coordmotion/config.hpp"
#include "coordmotion/param_store.hpp"

namespace coordmotion {

// Multi-timescale Dynamics Extractor. Two branches (positions, velocities),
// each with one temporal conv per timescale (3 coordinate channels -> D,
// "same" zero padding, no inter-joint mixing) and a 1x1 fusion conv back to D.
struct MtdeParams {
    struct Branch {
        std::vector<Tensor> conv_w; // [D x 3 x 1 x k] per timescale
        std::vector<Tensor> conv_b; // [D]
        Tensor fuse_w;              // [D x (#timescales*D) x 1 x 1]
        Tensor fuse_b;              // [D]
    };
    Branch position;
    Branch velocity;
    std::vector<int> timescales;

    static MtdeParams create(const ModelConfig& cfg, ParameterStore& store,
                             const std::string& prefix, SeededRng& rng);
};

// p: [N x T_p x 3], v: [N x (T_p-1) x 3]  ->  X_d: [N x (2*T_p-1) x D]
// (position dynamics then velocity dynamics, concatenated along time)
Tensor mtde_forward(const Tensor& p, const Tensor& v, const MtdeParams& params,
                    ActivationKind act);

} // namespace coordmotion
