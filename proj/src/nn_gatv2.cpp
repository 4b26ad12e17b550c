#include "gwm/nn/gatv2.hpp"

#include <cmath>

#include "gwm/errors.hpp"
#include "gwm/kernels.hpp"
#include "gwm/nn/layers.hpp"

namespace gwm::nn {

namespace {

void glorot_uniform(std::vector<double>& w, std::size_t fan_in, std::size_t fan_out,
                    Rng& rng) {
    double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (double& x : w) x = rng.uniform(-bound, bound);
}

}  // namespace

Gatv2Layer::Gatv2Layer(ParamStore& store, const std::string& prefix, std::size_t in,
                       std::size_t out_per_head, std::size_t heads, std::size_t edge_dim,
                       Rng& rng)
    : in_(in), out_(out_per_head), heads_(heads), edge_dim_(edge_dim) {
    std::size_t width = heads * out_per_head;
    w_src_ = &store.add(prefix + ".w_src", width * in);
    w_dst_ = &store.add(prefix + ".w_dst", width * in);
    w_edge_ = &store.add(prefix + ".w_edge", width * edge_dim);
    b_src_ = &store.add(prefix + ".b_src", width);
    b_dst_ = &store.add(prefix + ".b_dst", width);
    att_ = &store.add(prefix + ".att", width);
    bias_ = &store.add(prefix + ".bias", width);
    glorot_uniform(w_src_->value, in, width, rng);
    glorot_uniform(w_dst_->value, in, width, rng);
    glorot_uniform(w_edge_->value, edge_dim, width, rng);
    glorot_uniform(att_->value, out_per_head, 1, rng);
}

void Gatv2Layer::forward(const double* x, std::size_t rows, const GraphEdges& edges,
                         double* y, Gatv2Cache& cache) const {
    if (edges.dst_ptr.size() != rows + 1) {
        throw ConfigError("gatv2: edge index does not match row count");
    }
    const auto& kb = kern::backend();
    std::size_t width = heads_ * out_;
    std::size_t ecount = edges.src.size();
    cache.xs.resize(rows * width);
    cache.xt.resize(rows * width);
    cache.xe.resize(ecount * width);
    cache.alpha.resize(ecount * heads_);

    kb.gemm_nt(x, w_src_->value.data(), cache.xs.data(), rows, width, in_, false);
    kb.gemm_nt(x, w_dst_->value.data(), cache.xt.data(), rows, width, in_, false);
    for (std::size_t r = 0; r < rows; ++r) {
        kb.vadd(b_src_->value.data(), cache.xs.data() + r * width, width);
        kb.vadd(b_dst_->value.data(), cache.xt.data() + r * width, width);
    }
    if (ecount > 0) {
        kb.gemm_nt(edges.feat.data(), w_edge_->value.data(), cache.xe.data(), ecount,
                   width, edge_dim_, false);
    }

    std::vector<double> score;
    std::vector<double> pre(out_);
    for (std::size_t i = 0; i < rows; ++i) {
        std::size_t begin = edges.dst_ptr[i];
        std::size_t end = edges.dst_ptr[i + 1];
        std::size_t deg = end - begin;
        double* yi = y + i * width;
        std::fill(yi, yi + width, 0.0);
        if (deg == 0) continue;
        score.resize(deg);
        for (std::size_t h = 0; h < heads_; ++h) {
            std::size_t off = h * out_;
            const double* xt_i = cache.xt.data() + i * width + off;
            const double* a = att_->value.data() + off;
            for (std::size_t e = begin; e < end; ++e) {
                const double* xs_j = cache.xs.data() + edges.src[e] * width + off;
                const double* xe_e = cache.xe.data() + e * width + off;
                double s = 0.0;
                for (std::size_t d = 0; d < out_; ++d) {
                    double v = xs_j[d] + xt_i[d] + xe_e[d];
                    pre[d] = v > 0.0 ? v : kNegativeSlope * v;
                    s += a[d] * pre[d];
                }
                score[e - begin] = s;
            }
            softmax_forward(score.data(), score.data(), 1, deg);
            for (std::size_t e = begin; e < end; ++e) {
                double w = score[e - begin];
                cache.alpha[e * heads_ + h] = w;
                kb.axpy(w, cache.xs.data() + edges.src[e] * width + off, yi + off, out_);
            }
        }
        kb.vadd(bias_->value.data(), yi, width);
    }
}

void Gatv2Layer::backward(const double* x, std::size_t rows, const GraphEdges& edges,
                          const Gatv2Cache& cache, const double* dy, double* dx) const {
    const auto& kb = kern::backend();
    std::size_t width = heads_ * out_;
    std::size_t ecount = edges.src.size();
    std::vector<double> dxs(rows * width, 0.0);
    std::vector<double> dxt(rows * width, 0.0);
    std::vector<double> dxe(ecount * width, 0.0);

    std::vector<double> dalpha;
    std::vector<double> dscore;
    for (std::size_t i = 0; i < rows; ++i) {
        std::size_t begin = edges.dst_ptr[i];
        std::size_t end = edges.dst_ptr[i + 1];
        std::size_t deg = end - begin;
        if (deg == 0) continue;
        const double* dyi = dy + i * width;
        kb.vadd(dyi, bias_->grad.data(), width);
        dalpha.resize(deg);
        dscore.resize(deg);
        for (std::size_t h = 0; h < heads_; ++h) {
            std::size_t off = h * out_;
            const double* xt_i = cache.xt.data() + i * width + off;
            const double* a = att_->value.data() + off;
            double* da = att_->grad.data() + off;
            for (std::size_t e = begin; e < end; ++e) {
                const double* xs_j = cache.xs.data() + edges.src[e] * width + off;
                dalpha[e - begin] = kb.dot(dyi + off, xs_j, out_);
                kb.axpy(cache.alpha[e * heads_ + h], dyi + off,
                        dxs.data() + edges.src[e] * width + off, out_);
            }
            // Rebuild this head's attention row to backprop the softmax.
            std::vector<double> alpha_row(deg);
            for (std::size_t e = begin; e < end; ++e) {
                alpha_row[e - begin] = cache.alpha[e * heads_ + h];
            }
            softmax_backward(alpha_row.data(), dalpha.data(), dscore.data(), 1, deg);
            for (std::size_t e = begin; e < end; ++e) {
                double ds = dscore[e - begin];
                const double* xs_j = cache.xs.data() + edges.src[e] * width + off;
                const double* xe_e = cache.xe.data() + e * width + off;
                double* dxs_j = dxs.data() + edges.src[e] * width + off;
                double* dxt_i = dxt.data() + i * width + off;
                double* dxe_e = dxe.data() + e * width + off;
                for (std::size_t d = 0; d < out_; ++d) {
                    double v = xs_j[d] + xt_i[d] + xe_e[d];
                    double lrelu = v > 0.0 ? v : kNegativeSlope * v;
                    double dlrelu = v > 0.0 ? 1.0 : kNegativeSlope;
                    da[d] += ds * lrelu;
                    double dpre = ds * a[d] * dlrelu;
                    dxs_j[d] += dpre;
                    dxt_i[d] += dpre;
                    dxe_e[d] += dpre;
                }
            }
        }
    }

    kb.gemm_tn(dxs.data(), x, w_src_->grad.data(), width, in_, rows, true);
    kb.gemm_tn(dxt.data(), x, w_dst_->grad.data(), width, in_, rows, true);
    if (ecount > 0) {
        kb.gemm_tn(dxe.data(), edges.feat.data(), w_edge_->grad.data(), width, edge_dim_,
                   ecount, true);
    }
    for (std::size_t r = 0; r < rows; ++r) {
        kb.vadd(dxs.data() + r * width, b_src_->grad.data(), width);
        kb.vadd(dxt.data() + r * width, b_dst_->grad.data(), width);
    }
    kb.gemm_nn(dxs.data(), w_src_->value.data(), dx, rows, in_, width, false);
    kb.gemm_nn(dxt.data(), w_dst_->value.data(), dx, rows, in_, width, true);
}

}  // namespace gwm::nn
