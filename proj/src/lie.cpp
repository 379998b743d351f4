#include "coordmotion/lie.hpp"

#include <stdexcept>

namespace coordmotion {

LieParams LieParams::create(const ModelConfig& cfg, ParameterStore& store,
                            const std::string& prefix, SeededRng& rng) {
    LieParams p;
    const int64_t t = cfg.trajectory_dim;
    const int64_t te = cfg.nonlocal_embed_dim();
    p.w_adjacent = store.create(prefix + ".adjacent.w", {t, t, 3, 3}, t * 9, rng);
    p.b_adjacent = store.create(prefix + ".adjacent.b", {t}, t * 9, rng);
    p.w_theta = store.create(prefix + ".theta.w", {te, t}, t, rng);
    p.w_phi = store.create(prefix + ".phi.w", {te, t}, t, rng);
    p.w_g = store.create(prefix + ".g.w", {te, t}, t, rng);
    p.w_out = store.create(prefix + ".out.w", {t, te}, te, rng);
    p.w_distant = store.create(prefix + ".distant.w", {t, t, 1, 1}, t, rng);
    p.b_distant = store.create(prefix + ".distant.b", {t}, t, rng);
    return p;
}

Tensor adjacent_path(const Tensor& x, const LieParams& params, ActivationKind act) {
    if (x.rank() != 3) {
        throw std::invalid_argument("adjacent_path expects [N x D x T], got " +
                                    shape_to_string(x.shape()));
    }
    Tensor t_first = transpose(x, {2, 0, 1}); // [T x N x D]
    Tensor conv = conv_channels(t_first, params.w_adjacent, params.b_adjacent, 1, 1);
    return transpose(activation(conv, act), {1, 2, 0});
}

namespace {

// rows [R x C] times w^T for w [O x C] -> [R x O]
Tensor linear_rows(const Tensor& rows, const Tensor& w) {
    const int64_t r = rows.dim(0), c = rows.dim(1), o = w.dim(0);
    Tensor wt = transpose(w, {1, 0});
    return reshape(
        matmul_batch(reshape(rows, {1, r, c}), reshape(wt, {1, c, o})), {r, o});
}

Tensor pixels_of(const Tensor& x) {
    // [N x D x T] -> [N*D x T]; q_i is the trajectory feature of pixel i
    return reshape(x, {x.dim(0) * x.dim(1), x.dim(2)});
}

} // namespace

Tensor nonlocal_attention_weights(const Tensor& x, const LieParams& params) {
    Tensor q = pixels_of(x);
    Tensor theta = linear_rows(q, params.w_theta); // [P x T_e]
    Tensor phi = linear_rows(q, params.w_phi);     // [P x T_e]
    const int64_t p = q.dim(0), te = theta.dim(1);
    Tensor scores = reshape(
        matmul_batch(reshape(theta, {1, p, te}), reshape(transpose(phi, {1, 0}), {1, te, p})),
        {p, p});
    return softmax_rows(scores);
}

Tensor nonlocal_attention(const Tensor& x, const LieParams& params) {
    if (x.rank() != 3) {
        throw std::invalid_argument("nonlocal_attention expects [N x D x T], got " +
                                    shape_to_string(x.shape()));
    }
    Tensor q = pixels_of(x);
    Tensor a = nonlocal_attention_weights(x, params); // [P x P]
    Tensor g = linear_rows(q, params.w_g);            // [P x T_e]
    const int64_t p = q.dim(0), te = g.dim(1);
    Tensor mixed = reshape(matmul_batch(reshape(a, {1, p, p}), reshape(g, {1, p, te})), {p, te});
    Tensor y = linear_rows(mixed, params.w_out);      // [P x T]
    return reshape(y, x.shape());
}

Tensor distant_path(const Tensor& x, const LieParams& params, ActivationKind act) {
    Tensor y = nonlocal_attention(x, params);
    Tensor t_first = transpose(y, {2, 0, 1});
    Tensor conv = conv_channels(t_first, params.w_distant, params.b_distant, 0, 0);
    return transpose(activation(conv, act), {1, 2, 0});
}

} // namespace coordmotion
