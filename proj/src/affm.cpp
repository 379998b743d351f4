#include "coordmotion/affm.hpp"

#include <stdexcept>

namespace coordmotion {

AffmParams AffmParams::create(int width, int reduction, ParameterStore& store,
                              const std::string& prefix, SeededRng& rng) {
    if (width < 1 || reduction < 1 || width % reduction != 0) {
        throw std::invalid_argument("affm: width " + std::to_string(width) +
                                    " must be divisible by reduction " + std::to_string(reduction));
    }
    AffmParams p;
    p.width = width;
    const int64_t w = width;
    const int64_t hidden = width / reduction;
    p.w1 = store.create(prefix + ".squeeze.w", {hidden, w}, w, rng);
    p.b1 = store.create(prefix + ".squeeze.b", {hidden}, w, rng);
    p.w2 = store.create(prefix + ".excite.w", {w, hidden}, hidden, rng);
    p.b2 = store.create(prefix + ".excite.b", {w}, hidden, rng);
    return p;
}

Tensor affm_gate(const Tensor& f_concat, const AffmParams& params, ActivationKind act) {
    if (f_concat.rank() != 3 || f_concat.dim(2) != params.width) {
        throw std::invalid_argument("affm_gate expects [N x D x " + std::to_string(params.width) +
                                    "], got " + shape_to_string(f_concat.shape()));
    }
    const int64_t w = params.width;
    const int64_t hidden = params.w1.dim(0);
    Tensor gap = reshape(reduce_mean(f_concat, {0, 1}), {1, w, 1}); // [1 x W x 1]
    Tensor h = matmul_batch(reshape(params.w1, {1, hidden, w}), gap);
    h = activation(add(h, reshape(params.b1, {1, hidden, 1})), act);
    Tensor r = matmul_batch(reshape(params.w2, {1, w, hidden}), h);
    r = activation(add(r, reshape(params.b2, {1, w, 1})), ActivationKind::Sigmoid);
    return reshape(r, {1, 1, w});
}

Tensor affm_apply(const Tensor& f_concat, const Tensor& ratio) {
    return mul(f_concat, ratio);
}

Tensor affm_forward(const Tensor& f_distant, const Tensor& f_ca, const Tensor& f_adjacent,
                    const AffmParams& params, ActivationKind act) {
    if (f_distant.shape() != f_ca.shape() || f_ca.shape() != f_adjacent.shape()) {
        throw std::invalid_argument("affm_forward streams must share a shape");
    }
    Tensor f_concat = concat({f_distant, f_ca, f_adjacent}, 2);
    return affm_apply(f_concat, affm_gate(f_concat, params, act));
}

FusionReport relative_weights(const std::vector<double>& ratio) {
    if (ratio.empty() || ratio.size() % 3 != 0) {
        throw std::invalid_argument("relative_weights expects a 3T-length ratio vector");
    }
    const size_t t = ratio.size() / 3;
    double sums[3] = {0.0, 0.0, 0.0};
    for (size_t g = 0; g < 3; ++g) {
        for (size_t i = 0; i < t; ++i) sums[g] += ratio[g * t + i];
        sums[g] /= static_cast<double>(t);
    }
    const double total = sums[0] + sums[1] + sums[2];
    FusionReport report;
    report.w_distant = sums[0] / total;
    report.w_ca = sums[1] / total;
    report.w_adjacent = sums[2] / total;
    return report;
}

} // namespace coordmotion
