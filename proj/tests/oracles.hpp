#pragma once

// Independent loop oracles for every kernel and module. These read tensor
// buffers directly and recompute everything with plain nested loops; they
// never call the library kernels, so agreement is a real two-route check.

#include "coordmotion/config.hpp"
#include "coordmotion/network.hpp"
#include "coordmotion/tensor.hpp"

#include <vector>

namespace coordmotion::oracle {

double act(double x, ActivationKind kind);

// [C_in x H x W] (*) [C_out x C_in x kh x kw] + b, zero padding
Tensor conv(const Tensor& x, const Tensor& w, const Tensor& b, int pad_h, int pad_w);

Tensor matmul_batch(const Tensor& a, const Tensor& b);

Tensor softmax_rows(const Tensor& x);

Tensor cosine_rows(const Tensor& x, double eps);

double mpjpe(const Tensor& pred, const Tensor& truth);

// mean over frames/joints of per-joint error at one predicted frame (1-based)
double frame_error(const Tensor& pred, const Tensor& truth, int frame);

// ---- module oracles (canonical layouts as in the module contracts) ----

// p [N x T_p x 3], v [N x (T_p-1) x 3] -> [N x (2T_p-1) x D]
Tensor mtde(const Tensor& p, const Tensor& v, const MtdeParams& params, ActivationKind kind);

// weighted sum over joints: ca[0,d,t] = act(b + sum_n w_n x[n,d,t])
Tensor coordination_attractor(const Tensor& x, const Tensor& w_ca, const Tensor& b_ca,
                              ActivationKind kind);

Tensor feature_normalize(const Tensor& x, const Tensor& ca);

// emb[n,d,t'] = act(b[t'] + sum_t w[t',t] x_r[n,d,t])
Tensor gce_embedding(const Tensor& x_r, const Tensor& w_emb, const Tensor& b_emb,
                     ActivationKind kind);

// [G x N x N] slices of row similarities of x_emb [N x D x T]
Tensor relation_graphs(const Tensor& x_emb, Similarity similarity, bool multi_graph, double eps);

// z[n,d,t] = act(b[t] + sum_{t'} sum_j w[t,t',0,j] x[n,d-1+j,t'])
Tensor intra_features(const Tensor& x, const Tensor& w_intra, const Tensor& b_intra,
                      ActivationKind kind);

// f[n,d,t] = sum_m graphs[t or 0][n,m] z[m,d,t]
Tensor apply_graphs(const Tensor& graphs, const Tensor& z);

Tensor gce_forward(const Tensor& x, const GceParams& params, ActivationKind kind,
                   const GceFlags& flags, double eps);

Tensor adjacent_path(const Tensor& x, const LieParams& params, ActivationKind kind);

Tensor nonlocal_attention(const Tensor& x, const LieParams& params);

Tensor distant_path(const Tensor& x, const LieParams& params, ActivationKind kind);

Tensor affm_forward(const Tensor& f_distant, const Tensor& f_ca, const Tensor& f_adjacent,
                    const AffmParams& params, ActivationKind kind);

Tensor cjre_block(const Tensor& x, const CjreNet::Block& block, const ModelConfig& cfg);

// full forward pass from observed [T_p x N x 3]
Tensor network_forward(const CjreNet& net, const Tensor& observed);

} // namespace coordmotion::oracle
