#pragma once

#include "coordmotion/config.hpp"
#include "coordmotion/param_store.hpp"

namespace coordmotion {

// Adaptive Feature Fusing Module: squeeze/excite channel attention over the
// concatenated feature streams.
struct AffmParams {
    Tensor w1, b1; // [W/r x W], [W/r]
    Tensor w2, b2; // [W x W/r], [W]
    int width = 0; // gate width = stream count * T

    static AffmParams create(int width, int reduction, ParameterStore& store,
                             const std::string& prefix, SeededRng& rng);
};

// ratio[c] = sigmoid(w2 . act(w1 . gap + b1) + b2), gap = GAP over (N, D);
// returned as [1 x 1 x W] so it broadcasts over the concatenation.
Tensor affm_gate(const Tensor& f_concat, const AffmParams& params, ActivationKind act);

// per-channel scaling of the concatenation (the "ratio forced to ones" hook)
Tensor affm_apply(const Tensor& f_concat, const Tensor& ratio);

// concat along trajectory channels in the order distant, ca, adjacent, then
// gate and scale
Tensor affm_forward(const Tensor& f_distant, const Tensor& f_ca, const Tensor& f_adjacent,
                    const AffmParams& params, ActivationKind act);

// Mean gate value per stream, normalized to sum to 1. Group order follows the
// concatenation: distant, ca, adjacent.
struct FusionReport {
    double w_distant = 0.0;
    double w_adjacent = 0.0;
    double w_ca = 0.0;
};

FusionReport relative_weights(const std::vector<double>& ratio);

} // namespace coordmotion
