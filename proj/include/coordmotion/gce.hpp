#pragma once

#include "coordmotion/config.hpp"
#include "coordmotion/param_store.hpp"

namespace coordmotion {

// Global Coordination Extractor: coordination attractor, feature
// normalization, per-channel relation graphs from row similarities, and
// relation-guided aggregation.
struct GceParams {
    Tensor w_ca, b_ca;       // joint-mixing 1x1 conv, N channels -> 1
    Tensor w_emb, b_emb;     // trajectory-axis 1x1 conv, T -> T
    Tensor w_intra, b_intra; // kernel-3 conv along the feature axis, T -> T channels

    // with_ca=false skips the attractor weights (relative-joint ablation off)
    static GceParams create(const ModelConfig& cfg, ParameterStore& store,
                            const std::string& prefix, SeededRng& rng, bool with_ca);
};

struct GceFlags {
    bool use_relative_joints = true;
    bool multi_graph = true;
    Similarity similarity = Similarity::Cosine;
};

// N x N relation matrices, one per trajectory channel (or a single shared one
// when multi_graph is off). Cosine slices are symmetric with unit diagonal on
// nonzero rows and entries in [-1, 1].
struct RelationGraphs {
    Tensor c_emb; // [G x N x N], G = T or 1
};

// CA[0,d,t] = act(sum_n w_n * X[n,d,t] + b); joints act as conv channels
Tensor coordination_attractor(const Tensor& x, const GceParams& params, ActivationKind act);

// X_r = X - CA (broadcast over the joint axis)
Tensor feature_normalize(const Tensor& x, const Tensor& ca);

// X_emb[n,d,t'] = act(sum_t w_emb[t',t] * X_r[n,d,t] + b[t'])
Tensor gce_embedding(const Tensor& x_r, const GceParams& params, ActivationKind act);

// per-channel row similarity of the [N x D] slices of X_emb [N x D x T]
RelationGraphs graphs_from_embedding(const Tensor& x_emb, Similarity similarity, bool multi_graph,
                                     double eps = kCosineEps);

RelationGraphs relation_graphs(const Tensor& x_r, const GceParams& params, ActivationKind act,
                               Similarity similarity, bool multi_graph);

// Z = act(w_intra conv X) along the feature axis only (no joint mixing)
Tensor intra_features(const Tensor& x, const GceParams& params, ActivationKind act);

// F_ca[:, :, t] = C_emb[t] . Z[:, :, t]  (N x N by N x D product per channel)
Tensor apply_graphs(const RelationGraphs& graphs, const Tensor& z);

Tensor gce_forward(const Tensor& x, const GceParams& params, ActivationKind act,
                   const GceFlags& flags);

} // namespace coordmotion
