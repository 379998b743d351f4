#include "coordmotion/ops.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace coordmotion {

namespace {

// Record the op on the active tape when any input carries gradient.
void maybe_record(const std::vector<Tensor>& inputs, Tensor& out, std::function<void()> fn) {
    ComputeTape* tape = ComputeTape::active();
    if (!tape) return;
    bool needs = false;
    for (const Tensor& t : inputs) {
        if (t.requires_grad()) {
            needs = true;
            break;
        }
    }
    if (!needs) return;
    out.set_requires_grad(true);
    set_creator(out, tape);
    tape->record(out, std::move(fn));
}

std::vector<int64_t> row_strides(const std::vector<int64_t>& shape) {
    std::vector<int64_t> s(shape.size(), 1);
    for (int i = static_cast<int>(shape.size()) - 2; i >= 0; --i) s[i] = s[i + 1] * shape[i + 1];
    return s;
}

} // namespace

ActivationKind activation_from_string(const std::string& name) {
    if (name == "identity") return ActivationKind::Identity;
    if (name == "tanh") return ActivationKind::Tanh;
    if (name == "leaky_relu") return ActivationKind::LeakyRelu;
    if (name == "sigmoid") return ActivationKind::Sigmoid;
    throw std::invalid_argument("unknown activation '" + name +
                                "' (expected identity|tanh|leaky_relu|sigmoid)");
}

std::string to_string(ActivationKind kind) {
    switch (kind) {
    case ActivationKind::Identity: return "identity";
    case ActivationKind::Tanh: return "tanh";
    case ActivationKind::LeakyRelu: return "leaky_relu";
    case ActivationKind::Sigmoid: return "sigmoid";
    }
    return "?";
}

Tensor conv_channels(const Tensor& x, const Tensor& w, const Tensor& b, int pad_h, int pad_w) {
    if (x.rank() != 3) {
        throw std::invalid_argument("conv_channels input must be [C_in x H x W], got " +
                                    shape_to_string(x.shape()));
    }
    if (w.rank() != 4) {
        throw std::invalid_argument("conv_channels kernel must be [C_out x C_in x kh x kw], got " +
                                    shape_to_string(w.shape()));
    }
    const int64_t c_in = x.dim(0), h = x.dim(1), width = x.dim(2);
    const int64_t c_out = w.dim(0), kh = w.dim(2), kw = w.dim(3);
    if (w.dim(1) != c_in) {
        throw std::invalid_argument("conv_channels channel mismatch: input has " +
                                    std::to_string(c_in) + " channels, kernel expects " +
                                    std::to_string(w.dim(1)));
    }
    if (b.rank() != 1 || b.dim(0) != c_out) {
        throw std::invalid_argument("conv_channels bias must be [C_out=" + std::to_string(c_out) +
                                    "], got " + shape_to_string(b.shape()));
    }
    if (pad_h < 0 || pad_w < 0) throw std::invalid_argument("conv_channels padding must be >= 0");
    const int64_t oh = h + 2 * pad_h - kh + 1;
    const int64_t ow = width + 2 * pad_w - kw + 1;
    if (oh < 1 || ow < 1) {
        throw std::invalid_argument("conv_channels kernel " + shape_to_string(w.shape()) +
                                    " does not fit padded input " + shape_to_string(x.shape()));
    }

    Tensor out = Tensor::zeros({c_out, oh, ow});
    {
        const auto& xd = x.data();
        const auto& wd = w.data();
        const auto& bd = b.data();
        auto& od = out.data();
        for (int64_t co = 0; co < c_out; ++co) {
            for (int64_t y = 0; y < oh; ++y) {
                for (int64_t z = 0; z < ow; ++z) {
                    double acc = bd[co];
                    for (int64_t ci = 0; ci < c_in; ++ci) {
                        for (int64_t i = 0; i < kh; ++i) {
                            const int64_t iy = y - pad_h + i;
                            if (iy < 0 || iy >= h) continue;
                            for (int64_t j = 0; j < kw; ++j) {
                                const int64_t iz = z - pad_w + j;
                                if (iz < 0 || iz >= width) continue;
                                acc += xd[(ci * h + iy) * width + iz] *
                                       wd[((co * c_in + ci) * kh + i) * kw + j];
                            }
                        }
                    }
                    od[(co * oh + y) * ow + z] = acc;
                }
            }
        }
    }

    Tensor xc = x, wc = w, bc = b;
    maybe_record({x, w, b}, out, [xc, wc, bc, out, pad_h, pad_w]() mutable {
        const auto& g = out.grad();
        const int64_t c_in = xc.dim(0), h = xc.dim(1), width = xc.dim(2);
        const int64_t c_out = wc.dim(0), kh = wc.dim(2), kw = wc.dim(3);
        const int64_t oh = out.dim(1), ow = out.dim(2);
        const bool need_x = xc.requires_grad();
        const bool need_w = wc.requires_grad();
        const bool need_b = bc.requires_grad();
        std::vector<double>* gx = need_x ? &xc.ensure_grad() : nullptr;
        std::vector<double>* gw = need_w ? &wc.ensure_grad() : nullptr;
        std::vector<double>* gb = need_b ? &bc.ensure_grad() : nullptr;
        const auto& xd = xc.data();
        const auto& wd = wc.data();
        for (int64_t co = 0; co < c_out; ++co) {
            for (int64_t y = 0; y < oh; ++y) {
                for (int64_t z = 0; z < ow; ++z) {
                    const double gval = g[(co * oh + y) * ow + z];
                    if (gval == 0.0) continue;
                    if (gb) (*gb)[co] += gval;
                    if (!gx && !gw) continue;
                    for (int64_t ci = 0; ci < c_in; ++ci) {
                        for (int64_t i = 0; i < kh; ++i) {
                            const int64_t iy = y - pad_h + i;
                            if (iy < 0 || iy >= h) continue;
                            for (int64_t j = 0; j < kw; ++j) {
                                const int64_t iz = z - pad_w + j;
                                if (iz < 0 || iz >= width) continue;
                                const size_t xi = (ci * h + iy) * width + iz;
                                const size_t wi = ((co * c_in + ci) * kh + i) * kw + j;
                                if (gw) (*gw)[wi] += gval * xd[xi];
                                if (gx) (*gx)[xi] += gval * wd[wi];
                            }
                        }
                    }
                }
            }
        }
    });
    return out;
}

Tensor matmul_batch(const Tensor& a, const Tensor& b) {
    if (a.rank() != 3 || b.rank() != 3) {
        throw std::invalid_argument("matmul_batch expects [B x M x K] and [B x K x P], got " +
                                    shape_to_string(a.shape()) + " and " +
                                    shape_to_string(b.shape()));
    }
    if (a.dim(0) != b.dim(0)) {
        throw std::invalid_argument("matmul_batch batch mismatch: " + shape_to_string(a.shape()) +
                                    " vs " + shape_to_string(b.shape()));
    }
    if (a.dim(2) != b.dim(1)) {
        throw std::invalid_argument("matmul_batch inner dimension mismatch: " +
                                    shape_to_string(a.shape()) + " vs " +
                                    shape_to_string(b.shape()));
    }
    const int64_t bn = a.dim(0), m = a.dim(1), k = a.dim(2), p = b.dim(2);
    Tensor out = Tensor::zeros({bn, m, p});
    {
        const auto& ad = a.data();
        const auto& bd = b.data();
        auto& od = out.data();
        for (int64_t bi = 0; bi < bn; ++bi) {
            const double* A = ad.data() + bi * m * k;
            const double* B = bd.data() + bi * k * p;
            double* O = od.data() + bi * m * p;
            for (int64_t i = 0; i < m; ++i) {
                for (int64_t kk = 0; kk < k; ++kk) {
                    const double av = A[i * k + kk];
                    if (av == 0.0) continue;
                    for (int64_t j = 0; j < p; ++j) O[i * p + j] += av * B[kk * p + j];
                }
            }
        }
    }

    Tensor ac = a, bc = b;
    maybe_record({a, b}, out, [ac, bc, out]() mutable {
        const auto& g = out.grad();
        const int64_t bn = ac.dim(0), m = ac.dim(1), k = ac.dim(2), p = bc.dim(2);
        std::vector<double>* ga = ac.requires_grad() ? &ac.ensure_grad() : nullptr;
        std::vector<double>* gb = bc.requires_grad() ? &bc.ensure_grad() : nullptr;
        const auto& ad = ac.data();
        const auto& bd = bc.data();
        for (int64_t bi = 0; bi < bn; ++bi) {
            const double* A = ad.data() + bi * m * k;
            const double* B = bd.data() + bi * k * p;
            const double* G = g.data() + bi * m * p;
            for (int64_t i = 0; i < m; ++i) {
                for (int64_t j = 0; j < p; ++j) {
                    const double gv = G[i * p + j];
                    if (gv == 0.0) continue;
                    for (int64_t kk = 0; kk < k; ++kk) {
                        if (ga) (*ga)[bi * m * k + i * k + kk] += gv * B[kk * p + j];
                        if (gb) (*gb)[bi * k * p + kk * p + j] += gv * A[i * k + kk];
                    }
                }
            }
        }
    });
    return out;
}

Tensor softmax_rows(const Tensor& x) {
    if (x.rank() < 1) throw std::invalid_argument("softmax_rows needs rank >= 1");
    x.check_finite("softmax_rows input");
    const int64_t k = x.dim(x.rank() - 1);
    const int64_t rows = x.numel() / k;
    Tensor out = Tensor::zeros(x.shape());
    {
        const auto& xd = x.data();
        auto& od = out.data();
        for (int64_t r = 0; r < rows; ++r) {
            const double* in = xd.data() + r * k;
            double* o = od.data() + r * k;
            double mx = in[0];
            for (int64_t i = 1; i < k; ++i) mx = std::max(mx, in[i]);
            double sum = 0.0;
            for (int64_t i = 0; i < k; ++i) {
                o[i] = std::exp(in[i] - mx);
                sum += o[i];
            }
            for (int64_t i = 0; i < k; ++i) o[i] /= sum;
        }
    }

    Tensor xc = x;
    maybe_record({x}, out, [xc, out, rows, k]() mutable {
        const auto& g = out.grad();
        const auto& y = out.data();
        auto& gx = xc.ensure_grad();
        for (int64_t r = 0; r < rows; ++r) {
            const double* gr = g.data() + r * k;
            const double* yr = y.data() + r * k;
            double dot = 0.0;
            for (int64_t i = 0; i < k; ++i) dot += gr[i] * yr[i];
            for (int64_t i = 0; i < k; ++i) gx[r * k + i] += yr[i] * (gr[i] - dot);
        }
    });
    return out;
}

Tensor cosine_similarity_rows(const Tensor& x, double eps) {
    if (x.rank() != 2) {
        throw std::invalid_argument("cosine_similarity_rows expects [N x D], got " +
                                    shape_to_string(x.shape()));
    }
    if (eps <= 0.0) throw std::invalid_argument("cosine_similarity_rows requires eps > 0");
    const int64_t n = x.dim(0), d = x.dim(1);
    Tensor out = Tensor::zeros({n, n});
    std::vector<double> norms(static_cast<size_t>(n));
    {
        const auto& xd = x.data();
        auto& od = out.data();
        for (int64_t i = 0; i < n; ++i) {
            double s = 0.0;
            for (int64_t c = 0; c < d; ++c) s += xd[i * d + c] * xd[i * d + c];
            norms[i] = std::max(std::sqrt(s), eps);
        }
        for (int64_t i = 0; i < n; ++i) {
            for (int64_t j = 0; j < n; ++j) {
                double dot = 0.0;
                for (int64_t c = 0; c < d; ++c) dot += xd[i * d + c] * xd[j * d + c];
                od[i * n + j] = dot / (norms[i] * norms[j]);
            }
        }
    }

    Tensor xc = x;
    maybe_record({x}, out, [xc, out, norms, eps, n, d]() mutable {
        // S[i,j] = <x_i,x_j> / (n_i n_j) with n_i = max(||x_i||, eps).
        // With H = G + G^T:
        //   dL/dx_k = sum_j H[k,j] x_j / (n_k n_j)
        //           - [||x_k|| > eps] (sum_j H[k,j] S[k,j]) x_k / n_k^2
        const auto& g = out.grad();
        const auto& s = out.data();
        const auto& xd = xc.data();
        auto& gx = xc.ensure_grad();
        for (int64_t k = 0; k < n; ++k) {
            double coeff = 0.0;
            for (int64_t j = 0; j < n; ++j) {
                const double hkj = g[k * n + j] + g[j * n + k];
                if (hkj == 0.0) continue;
                const double inv = hkj / (norms[k] * norms[j]);
                for (int64_t c = 0; c < d; ++c) gx[k * d + c] += inv * xd[j * d + c];
                coeff += hkj * s[k * n + j];
            }
            double row_norm_sq = 0.0;
            for (int64_t c = 0; c < d; ++c) row_norm_sq += xd[k * d + c] * xd[k * d + c];
            if (std::sqrt(row_norm_sq) > eps && coeff != 0.0) {
                const double f = coeff / (norms[k] * norms[k]);
                for (int64_t c = 0; c < d; ++c) gx[k * d + c] -= f * xd[k * d + c];
            }
        }
    });
    return out;
}

Tensor activation(const Tensor& x, ActivationKind kind) {
    Tensor out = Tensor::zeros(x.shape());
    {
        const auto& xd = x.data();
        auto& od = out.data();
        switch (kind) {
        case ActivationKind::Identity: od = xd; break;
        case ActivationKind::Tanh:
            for (size_t i = 0; i < xd.size(); ++i) od[i] = std::tanh(xd[i]);
            break;
        case ActivationKind::LeakyRelu:
            for (size_t i = 0; i < xd.size(); ++i)
                od[i] = xd[i] >= 0.0 ? xd[i] : kLeakySlope * xd[i];
            break;
        case ActivationKind::Sigmoid:
            for (size_t i = 0; i < xd.size(); ++i) od[i] = 1.0 / (1.0 + std::exp(-xd[i]));
            break;
        }
    }

    Tensor xc = x;
    maybe_record({x}, out, [xc, out, kind]() mutable {
        const auto& g = out.grad();
        const auto& xd = xc.data();
        const auto& y = out.data();
        auto& gx = xc.ensure_grad();
        switch (kind) {
        case ActivationKind::Identity:
            for (size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
            break;
        case ActivationKind::Tanh:
            for (size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * (1.0 - y[i] * y[i]);
            break;
        case ActivationKind::LeakyRelu:
            for (size_t i = 0; i < g.size(); ++i)
                gx[i] += g[i] * (xd[i] >= 0.0 ? 1.0 : kLeakySlope);
            break;
        case ActivationKind::Sigmoid:
            for (size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * y[i] * (1.0 - y[i]);
            break;
        }
    });
    return out;
}

Tensor reduce_mean(const Tensor& x, const std::vector<int>& axes) {
    const int r = x.rank();
    std::vector<bool> reduced(static_cast<size_t>(r), false);
    for (int a : axes) {
        if (a < 0 || a >= r) {
            throw std::invalid_argument("reduce_mean axis " + std::to_string(a) +
                                        " out of range for shape " + shape_to_string(x.shape()));
        }
        reduced[static_cast<size_t>(a)] = true;
    }
    std::vector<int64_t> out_shape = x.shape();
    int64_t count = 1;
    for (int i = 0; i < r; ++i) {
        if (reduced[static_cast<size_t>(i)]) {
            count *= out_shape[static_cast<size_t>(i)];
            out_shape[static_cast<size_t>(i)] = 1;
        }
    }
    Tensor out = Tensor::zeros(out_shape);
    const auto in_strides = row_strides(x.shape());
    const auto out_strides = row_strides(out_shape);
    {
        const auto& xd = x.data();
        auto& od = out.data();
        std::vector<int64_t> idx(static_cast<size_t>(r), 0);
        for (int64_t flat = 0; flat < x.numel(); ++flat) {
            int64_t rem = flat, o = 0;
            for (int i = 0; i < r; ++i) {
                const int64_t ix = rem / in_strides[static_cast<size_t>(i)];
                rem %= in_strides[static_cast<size_t>(i)];
                if (!reduced[static_cast<size_t>(i)]) o += ix * out_strides[static_cast<size_t>(i)];
            }
            od[static_cast<size_t>(o)] += xd[static_cast<size_t>(flat)];
        }
        for (auto& v : od) v /= static_cast<double>(count);
    }

    Tensor xc = x;
    maybe_record({x}, out, [xc, out, reduced, in_strides, out_strides, count, r]() mutable {
        const auto& g = out.grad();
        auto& gx = xc.ensure_grad();
        const double inv = 1.0 / static_cast<double>(count);
        for (int64_t flat = 0; flat < xc.numel(); ++flat) {
            int64_t rem = flat, o = 0;
            for (int i = 0; i < r; ++i) {
                const int64_t ix = rem / in_strides[static_cast<size_t>(i)];
                rem %= in_strides[static_cast<size_t>(i)];
                if (!reduced[static_cast<size_t>(i)]) o += ix * out_strides[static_cast<size_t>(i)];
            }
            gx[static_cast<size_t>(flat)] += g[static_cast<size_t>(o)] * inv;
        }
    });
    return out;
}

Tensor reduce_sum_all(const Tensor& x) {
    double s = 0.0;
    for (double v : x.data()) s += v;
    Tensor out = Tensor::scalar(s);
    Tensor xc = x;
    maybe_record({x}, out, [xc, out]() mutable {
        const double g = out.grad()[0];
        auto& gx = xc.ensure_grad();
        for (auto& v : gx) v += g;
    });
    return out;
}

Tensor concat(const std::vector<Tensor>& xs, int axis) {
    if (xs.empty()) throw std::invalid_argument("concat of zero tensors");
    const int r = xs[0].rank();
    if (axis < 0 || axis >= r) throw std::invalid_argument("concat axis out of range");
    std::vector<int64_t> out_shape = xs[0].shape();
    out_shape[static_cast<size_t>(axis)] = 0;
    for (const Tensor& t : xs) {
        if (t.rank() != r) throw std::invalid_argument("concat rank mismatch");
        for (int i = 0; i < r; ++i) {
            if (i != axis && t.dim(i) != xs[0].dim(i)) {
                throw std::invalid_argument("concat shape mismatch: " +
                                            shape_to_string(xs[0].shape()) + " vs " +
                                            shape_to_string(t.shape()));
            }
        }
        out_shape[static_cast<size_t>(axis)] += t.dim(axis);
    }
    Tensor out = Tensor::zeros(out_shape);

    // outer = product of axes before `axis`; inner = product after
    int64_t outer = 1, inner = 1;
    for (int i = 0; i < axis; ++i) outer *= out_shape[static_cast<size_t>(i)];
    for (int i = axis + 1; i < r; ++i) inner *= out_shape[static_cast<size_t>(i)];
    const int64_t out_axis = out_shape[static_cast<size_t>(axis)];
    {
        auto& od = out.data();
        int64_t offset = 0;
        for (const Tensor& t : xs) {
            const int64_t len = t.dim(axis);
            const auto& td = t.data();
            for (int64_t o = 0; o < outer; ++o) {
                std::copy(td.begin() + o * len * inner, td.begin() + (o + 1) * len * inner,
                          od.begin() + (o * out_axis + offset) * inner);
            }
            offset += len;
        }
    }

    std::vector<Tensor> copies = xs;
    Tensor outc = out;
    std::vector<int64_t> lens;
    lens.reserve(xs.size());
    for (const Tensor& t : xs) lens.push_back(t.dim(axis));
    maybe_record(xs, out, [copies, outc, lens, outer, inner, out_axis]() mutable {
        const auto& g = outc.grad();
        int64_t offset = 0;
        for (size_t k = 0; k < copies.size(); ++k) {
            const int64_t len = lens[k];
            if (copies[k].requires_grad()) {
                auto& gt = copies[k].ensure_grad();
                for (int64_t o = 0; o < outer; ++o) {
                    const double* src = g.data() + (o * out_axis + offset) * inner;
                    double* dst = gt.data() + o * len * inner;
                    for (int64_t i = 0; i < len * inner; ++i) dst[i] += src[i];
                }
            }
            offset += len;
        }
    });
    return out;
}

Tensor transpose(const Tensor& x, const std::vector<int>& perm) {
    const int r = x.rank();
    if (static_cast<int>(perm.size()) != r) {
        throw std::invalid_argument("transpose permutation rank mismatch");
    }
    std::vector<bool> seen(static_cast<size_t>(r), false);
    for (int p : perm) {
        if (p < 0 || p >= r || seen[static_cast<size_t>(p)]) {
            throw std::invalid_argument("transpose permutation is not a permutation");
        }
        seen[static_cast<size_t>(p)] = true;
    }
    std::vector<int64_t> out_shape(static_cast<size_t>(r));
    for (int i = 0; i < r; ++i) out_shape[static_cast<size_t>(i)] = x.dim(perm[static_cast<size_t>(i)]);
    Tensor out = Tensor::zeros(out_shape);
    const auto in_strides = row_strides(x.shape());
    const auto out_strides = row_strides(out_shape);
    {
        const auto& xd = x.data();
        auto& od = out.data();
        for (int64_t flat = 0; flat < out.numel(); ++flat) {
            int64_t rem = flat, src = 0;
            for (int i = 0; i < r; ++i) {
                const int64_t ix = rem / out_strides[static_cast<size_t>(i)];
                rem %= out_strides[static_cast<size_t>(i)];
                src += ix * in_strides[static_cast<size_t>(perm[static_cast<size_t>(i)])];
            }
            od[static_cast<size_t>(flat)] = xd[static_cast<size_t>(src)];
        }
    }

    Tensor xc = x;
    maybe_record({x}, out, [xc, out, in_strides, out_strides, perm, r]() mutable {
        const auto& g = out.grad();
        auto& gx = xc.ensure_grad();
        for (int64_t flat = 0; flat < out.numel(); ++flat) {
            int64_t rem = flat, src = 0;
            for (int i = 0; i < r; ++i) {
                const int64_t ix = rem / out_strides[static_cast<size_t>(i)];
                rem %= out_strides[static_cast<size_t>(i)];
                src += ix * in_strides[static_cast<size_t>(perm[static_cast<size_t>(i)])];
            }
            gx[static_cast<size_t>(src)] += g[static_cast<size_t>(flat)];
        }
    });
    return out;
}

Tensor reshape(const Tensor& x, const std::vector<int64_t>& shape) {
    Tensor out = Tensor::from_data(shape, x.data());
    if (out.numel() != x.numel()) {
        throw std::invalid_argument("reshape element count mismatch: " +
                                    shape_to_string(x.shape()) + " -> " + shape_to_string(shape));
    }
    Tensor xc = x;
    maybe_record({x}, out, [xc, out]() mutable {
        const auto& g = out.grad();
        auto& gx = xc.ensure_grad();
        for (size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
    });
    return out;
}

Tensor slice0(const Tensor& x, int64_t i) {
    if (x.rank() < 2) throw std::invalid_argument("slice0 needs rank >= 2");
    if (i < 0 || i >= x.dim(0)) {
        throw std::out_of_range("slice0 index " + std::to_string(i) + " out of range for " +
                                shape_to_string(x.shape()));
    }
    std::vector<int64_t> out_shape(x.shape().begin() + 1, x.shape().end());
    const int64_t block = x.numel() / x.dim(0);
    Tensor out = Tensor::from_data(
        out_shape, std::vector<double>(x.data().begin() + i * block, x.data().begin() + (i + 1) * block));
    Tensor xc = x;
    maybe_record({x}, out, [xc, out, i, block]() mutable {
        const auto& g = out.grad();
        auto& gx = xc.ensure_grad();
        for (int64_t k = 0; k < block; ++k) gx[static_cast<size_t>(i * block + k)] += g[static_cast<size_t>(k)];
    });
    return out;
}

namespace {

enum class BinOp { Add, Sub, Mul };

Tensor broadcast_binary(const Tensor& a, const Tensor& b, BinOp op) {
    if (a.rank() != b.rank()) {
        throw std::invalid_argument("broadcast requires equal ranks, got " +
                                    shape_to_string(a.shape()) + " and " +
                                    shape_to_string(b.shape()));
    }
    const int r = a.rank();
    std::vector<int64_t> out_shape(static_cast<size_t>(r));
    for (int i = 0; i < r; ++i) {
        const int64_t da = a.dim(i), db = b.dim(i);
        if (da != db && da != 1 && db != 1) {
            throw std::invalid_argument("incompatible broadcast shapes " +
                                        shape_to_string(a.shape()) + " and " +
                                        shape_to_string(b.shape()));
        }
        out_shape[static_cast<size_t>(i)] = std::max(da, db);
    }
    Tensor out = Tensor::zeros(out_shape);
    const auto out_strides = row_strides(out_shape);
    auto eff_strides = [&](const Tensor& t) {
        auto s = row_strides(t.shape());
        for (int i = 0; i < r; ++i)
            if (t.dim(i) == 1 && out_shape[static_cast<size_t>(i)] != 1) s[static_cast<size_t>(i)] = 0;
        return s;
    };
    const auto sa = eff_strides(a);
    const auto sb = eff_strides(b);
    {
        const auto& ad = a.data();
        const auto& bd = b.data();
        auto& od = out.data();
        for (int64_t flat = 0; flat < out.numel(); ++flat) {
            int64_t rem = flat, ia = 0, ib = 0;
            for (int i = 0; i < r; ++i) {
                const int64_t ix = rem / out_strides[static_cast<size_t>(i)];
                rem %= out_strides[static_cast<size_t>(i)];
                ia += ix * sa[static_cast<size_t>(i)];
                ib += ix * sb[static_cast<size_t>(i)];
            }
            const double x = ad[static_cast<size_t>(ia)], y = bd[static_cast<size_t>(ib)];
            od[static_cast<size_t>(flat)] = op == BinOp::Add ? x + y
                                          : op == BinOp::Sub ? x - y
                                                             : x * y;
        }
    }

    Tensor ac = a, bc = b;
    maybe_record({a, b}, out, [ac, bc, out, out_strides, sa, sb, op, r]() mutable {
        const auto& g = out.grad();
        std::vector<double>* ga = ac.requires_grad() ? &ac.ensure_grad() : nullptr;
        std::vector<double>* gb = bc.requires_grad() ? &bc.ensure_grad() : nullptr;
        const auto& ad = ac.data();
        const auto& bd = bc.data();
        for (int64_t flat = 0; flat < out.numel(); ++flat) {
            int64_t rem = flat, ia = 0, ib = 0;
            for (int i = 0; i < r; ++i) {
                const int64_t ix = rem / out_strides[static_cast<size_t>(i)];
                rem %= out_strides[static_cast<size_t>(i)];
                ia += ix * sa[static_cast<size_t>(i)];
                ib += ix * sb[static_cast<size_t>(i)];
            }
            const double gv = g[static_cast<size_t>(flat)];
            switch (op) {
            case BinOp::Add:
                if (ga) (*ga)[static_cast<size_t>(ia)] += gv;
                if (gb) (*gb)[static_cast<size_t>(ib)] += gv;
                break;
            case BinOp::Sub:
                if (ga) (*ga)[static_cast<size_t>(ia)] += gv;
                if (gb) (*gb)[static_cast<size_t>(ib)] -= gv;
                break;
            case BinOp::Mul:
                if (ga) (*ga)[static_cast<size_t>(ia)] += gv * bd[static_cast<size_t>(ib)];
                if (gb) (*gb)[static_cast<size_t>(ib)] += gv * ad[static_cast<size_t>(ia)];
                break;
            }
        }
    });
    return out;
}

} // namespace

Tensor add(const Tensor& a, const Tensor& b) { return broadcast_binary(a, b, BinOp::Add); }
Tensor sub(const Tensor& a, const Tensor& b) { return broadcast_binary(a, b, BinOp::Sub); }
Tensor mul(const Tensor& a, const Tensor& b) { return broadcast_binary(a, b, BinOp::Mul); }

Tensor scale(const Tensor& x, double s) {
    Tensor out = Tensor::zeros(x.shape());
    {
        const auto& xd = x.data();
        auto& od = out.data();
        for (size_t i = 0; i < xd.size(); ++i) od[i] = xd[i] * s;
    }
    Tensor xc = x;
    maybe_record({x}, out, [xc, out, s]() mutable {
        const auto& g = out.grad();
        auto& gx = xc.ensure_grad();
        for (size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * s;
    });
    return out;
}

Tensor mpjpe_loss(const Tensor& pred, const Tensor& truth) {
    if (pred.shape() != truth.shape()) {
        throw std::invalid_argument("mpjpe_loss shape mismatch: " + shape_to_string(pred.shape()) +
                                    " vs " + shape_to_string(truth.shape()));
    }
    if (pred.rank() != 3 || pred.dim(2) != 3) {
        throw std::invalid_argument("mpjpe_loss expects [T x N x 3], got " +
                                    shape_to_string(pred.shape()));
    }
    pred.check_finite("mpjpe_loss prediction");
    const int64_t joints_total = pred.dim(0) * pred.dim(1);
    double acc = 0.0;
    {
        const auto& pd = pred.data();
        const auto& td = truth.data();
        for (int64_t j = 0; j < joints_total; ++j) {
            const double ex = pd[j * 3] - td[j * 3];
            const double ey = pd[j * 3 + 1] - td[j * 3 + 1];
            const double ez = pd[j * 3 + 2] - td[j * 3 + 2];
            acc += std::sqrt(ex * ex + ey * ey + ez * ez);
        }
    }
    Tensor out = Tensor::scalar(acc / static_cast<double>(joints_total));

    Tensor pc = pred, tc = truth;
    maybe_record({pred, truth}, out, [pc, tc, out, joints_total]() mutable {
        const double g = out.grad()[0] / static_cast<double>(joints_total);
        std::vector<double>* gp = pc.requires_grad() ? &pc.ensure_grad() : nullptr;
        std::vector<double>* gt = tc.requires_grad() ? &tc.ensure_grad() : nullptr;
        const auto& pd = pc.data();
        const auto& td = tc.data();
        for (int64_t j = 0; j < joints_total; ++j) {
            const double ex = pd[j * 3] - td[j * 3];
            const double ey = pd[j * 3 + 1] - td[j * 3 + 1];
            const double ez = pd[j * 3 + 2] - td[j * 3 + 2];
            const double norm = std::max(std::sqrt(ex * ex + ey * ey + ez * ez), 1e-12);
            const double f = g / norm;
            if (gp) {
                (*gp)[j * 3] += f * ex;
                (*gp)[j * 3 + 1] += f * ey;
                (*gp)[j * 3 + 2] += f * ez;
            }
            if (gt) {
                (*gt)[j * 3] -= f * ex;
                (*gt)[j * 3 + 1] -= f * ey;
                (*gt)[j * 3 + 2] -= f * ez;
            }
        }
    });
    return out;
}

} // namespace coordmotion
