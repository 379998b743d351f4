#include "coordmotion/gce.hpp"

#include <stdexcept>

namespace coordmotion {

GceParams GceParams::create(const ModelConfig& cfg, ParameterStore& store,
                            const std::string& prefix, SeededRng& rng, bool with_ca) {
    GceParams p;
    const int64_t n = cfg.joints;
    const int64_t t = cfg.trajectory_dim;
    if (with_ca) {
        p.w_ca = store.create(prefix + ".ca.w", {1, n, 1, 1}, n, rng);
        p.b_ca = store.create(prefix + ".ca.b", {1}, n, rng);
    }
    p.w_emb = store.create(prefix + ".emb.w", {t, t, 1, 1}, t, rng);
    p.b_emb = store.create(prefix + ".emb.b", {t}, t, rng);
    p.w_intra = store.create(prefix + ".intra.w", {t, t, 1, 3}, t * 3, rng);
    p.b_intra = store.create(prefix + ".intra.b", {t}, t * 3, rng);
    return p;
}

Tensor coordination_attractor(const Tensor& x, const GceParams& params, ActivationKind act) {
    if (x.rank() != 3) {
        throw std::invalid_argument("coordination_attractor expects [N x D x T], got " +
                                    shape_to_string(x.shape()));
    }
    // the joint axis already leads, so it is the channel axis of the conv
    return activation(conv_channels(x, params.w_ca, params.b_ca, 0, 0), act);
}

Tensor feature_normalize(const Tensor& x, const Tensor& ca) { return sub(x, ca); }

Tensor gce_embedding(const Tensor& x_r, const GceParams& params, ActivationKind act) {
    // trajectory axis becomes the channel axis: [T x N x D]
    Tensor t_first = transpose(x_r, {2, 0, 1});
    Tensor emb = activation(conv_channels(t_first, params.w_emb, params.b_emb, 0, 0), act);
    return transpose(emb, {1, 2, 0}); // [N x D x T]
}

RelationGraphs graphs_from_embedding(const Tensor& x_emb, Similarity similarity, bool multi_graph,
                                     double eps) {
    if (x_emb.rank() != 3) {
        throw std::invalid_argument("graphs_from_embedding expects [N x D x T], got " +
                                    shape_to_string(x_emb.shape()));
    }
    const int64_t n = x_emb.dim(0), t = x_emb.dim(2);
    auto similarity_of = [&](const Tensor& slice) {
        if (similarity == Similarity::Cosine) return cosine_similarity_rows(slice, eps);
        // ablation: row softmax of all-pairs dot products
        Tensor dots = matmul_batch(reshape(slice, {1, n, slice.dim(1)}),
                                   reshape(transpose(slice, {1, 0}), {1, slice.dim(1), n}));
        return reshape(softmax_rows(dots), {n, n});
    };

    RelationGraphs graphs;
    if (!multi_graph) {
        Tensor mean = reshape(reduce_mean(x_emb, {2}), {n, x_emb.dim(1)});
        graphs.c_emb = reshape(similarity_of(mean), {1, n, n});
        return graphs;
    }
    Tensor t_first = transpose(x_emb, {2, 0, 1}); // [T x N x D]
    std::vector<Tensor> slices;
    slices.reserve(static_cast<size_t>(t));
    for (int64_t i = 0; i < t; ++i) {
        slices.push_back(reshape(similarity_of(slice0(t_first, i)), {1, n, n}));
    }
    graphs.c_emb = concat(slices, 0);
    return graphs;
}

RelationGraphs relation_graphs(const Tensor& x_r, const GceParams& params, ActivationKind act,
                               Similarity similarity, bool multi_graph) {
    return graphs_from_embedding(gce_embedding(x_r, params, act), similarity, multi_graph);
}

Tensor intra_features(const Tensor& x, const GceParams& params, ActivationKind act) {
    // channels = trajectory axis; kernel 1x3 walks the feature axis only
    Tensor t_first = transpose(x, {2, 0, 1}); // [T x N x D]
    Tensor z = activation(conv_channels(t_first, params.w_intra, params.b_intra, 0, 1), act);
    return transpose(z, {1, 2, 0}); // [N x D x T]
}

Tensor apply_graphs(const RelationGraphs& graphs, const Tensor& z) {
    if (z.rank() != 3) {
        throw std::invalid_argument("apply_graphs expects Z as [N x D x T], got " +
                                    shape_to_string(z.shape()));
    }
    const int64_t t = z.dim(2);
    Tensor stacked = graphs.c_emb;
    if (stacked.dim(0) == 1 && t > 1) {
        stacked = concat(std::vector<Tensor>(static_cast<size_t>(t), stacked), 0);
    }
    if (stacked.dim(0) != t) {
        throw std::invalid_argument("apply_graphs: graph count " + std::to_string(stacked.dim(0)) +
                                    " does not match trajectory channels " + std::to_string(t));
    }
    Tensor z_t_first = transpose(z, {2, 0, 1});          // [T x N x D]
    Tensor mixed = matmul_batch(stacked, z_t_first);     // [T x N x D]
    return transpose(mixed, {1, 2, 0});                  // [N x D x T]
}

Tensor gce_forward(const Tensor& x, const GceParams& params, ActivationKind act,
                   const GceFlags& flags) {
    Tensor rel_input = x;
    if (flags.use_relative_joints) {
        Tensor ca = coordination_attractor(x, params, act);
        rel_input = feature_normalize(x, ca);
    }
    RelationGraphs graphs =
        relation_graphs(rel_input, params, act, flags.similarity, flags.multi_graph);
    Tensor z = intra_features(x, params, act);
    return apply_graphs(graphs, z);
}

} // namespace coordmotion
