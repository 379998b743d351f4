#pragma once

#include "coordmotion/tensor.hpp"

#include <string>
#include <vector>

namespace coordmotion {

enum class ActivationKind { Identity, Tanh, LeakyRelu, Sigmoid };

ActivationKind activation_from_string(const std::string& name);
std::string to_string(ActivationKind kind);

constexpr double kLeakySlope = 0.1;
constexpr double kCosineEps = 1e-8;

// 2-D cross-correlation with zero padding.
//   x: [C_in x H x W], w: [C_out x C_in x kh x kw], b: [C_out]
//   out: [C_out x H' x W'], H' = H + 2*pad_h - kh + 1
Tensor conv_channels(const Tensor& x, const Tensor& w, const Tensor& b, int pad_h, int pad_w);

// Independent matrix product per batch index: [B x M x K] * [B x K x P].
Tensor matmul_batch(const Tensor& a, const Tensor& b);

// Softmax over the last axis, max-subtracted for stability.
Tensor softmax_rows(const Tensor& x);

// All-pairs cosine similarity of the rows of a [N x D] matrix; eps guards
// zero-norm rows in the denominators.
Tensor cosine_similarity_rows(const Tensor& x, double eps = kCosineEps);

Tensor activation(const Tensor& x, ActivationKind kind);

// Mean over the given axes; reduced axes are kept with length 1 so the
// result broadcasts back against the input.
Tensor reduce_mean(const Tensor& x, const std::vector<int>& axes);

Tensor reduce_sum_all(const Tensor& x); // scalar

// Concatenation along an axis; inputs must agree on every other axis.
Tensor concat(const std::vector<Tensor>& xs, int axis);

Tensor transpose(const Tensor& x, const std::vector<int>& perm);

Tensor reshape(const Tensor& x, const std::vector<int64_t>& shape);

// Select index `i` along axis 0, dropping that axis.
Tensor slice0(const Tensor& x, int64_t i);

// Elementwise with broadcasting across singleton axes; ranks must match.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);

Tensor scale(const Tensor& x, double s);

// Differentiable mean per-joint position error over [T x N x 3] tensors:
// mean over frames and joints of the Euclidean norm of the per-joint error.
// The norm gradient uses e / max(||e||, 1e-12).
Tensor mpjpe_loss(const Tensor& pred, const Tensor& truth);

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }

} // namespace coordmotion
