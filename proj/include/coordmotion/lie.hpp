#pragma once

#include "coordmotion/config.hpp"
#include "coordmotion/param_store.hpp"

namespace coordmotion {

// Local Interaction Extractor: a 3x3 convolutional path over the
// (joint, feature) plane for adjacent joints and a non-local attention path
// (no residual connection) for distant ones.
struct LieParams {
    Tensor w_adjacent, b_adjacent; // [T x T x 3 x 3]
    Tensor w_theta, w_phi, w_g;    // [T_e x T] per-pixel maps, no bias
    Tensor w_out;                  // [T x T_e] closes the bottleneck
    Tensor w_distant, b_distant;   // 1x1 conv T -> T

    static LieParams create(const ModelConfig& cfg, ParameterStore& store,
                            const std::string& prefix, SeededRng& rng);
};

// 3x3 zero-padded conv over (N, D) with trajectory channels, then activation.
// Relies on the kinematic-tree joint ordering for adjacency.
Tensor adjacent_path(const Tensor& x, const LieParams& params, ActivationKind act);

// Row-stochastic attention over the N*D pixels: A[i,j] = softmax_j(theta(q_i) . phi(q_j)).
Tensor nonlocal_attention_weights(const Tensor& x, const LieParams& params);

// Y = out_map(A . g(Q)), reshaped back to [N x D x T]. No residual add.
Tensor nonlocal_attention(const Tensor& x, const LieParams& params);

// F_distant = act(w_distant conv nonlocal_attention(X))
Tensor distant_path(const Tensor& x, const LieParams& params, ActivationKind act);

} // namespace coordmotion
