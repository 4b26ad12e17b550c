#include "gwm/nn/layers.hpp"

#include <algorithm>
#include <cmath>

#include "gwm/kernels.hpp"

namespace gwm::nn {

namespace {

// PyTorch-style fan-in uniform init for dense layers.
void uniform_fan_in(std::vector<double>& w, std::size_t fan_in, Rng& rng) {
    double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (double& x : w) x = rng.uniform(-bound, bound);
}

}  // namespace

Linear::Linear(ParamStore& store, const std::string& prefix, std::size_t in,
               std::size_t out, Rng& rng)
    : in_(in), out_(out) {
    w_ = &store.add(prefix + ".w", in * out);
    b_ = &store.add(prefix + ".b", out);
    uniform_fan_in(w_->value, in, rng);
    uniform_fan_in(b_->value, in, rng);
}

void Linear::forward(const double* x, std::size_t rows, double* y) const {
    const auto& k = kern::backend();
    k.gemm_nt(x, w_->value.data(), y, rows, out_, in_, false);
    for (std::size_t r = 0; r < rows; ++r) {
        k.vadd(b_->value.data(), y + r * out_, out_);
    }
}

void Linear::backward(const double* x, const double* dy, std::size_t rows, double* dx,
                      bool acc_dx) const {
    const auto& k = kern::backend();
    k.gemm_tn(dy, x, w_->grad.data(), out_, in_, rows, true);
    for (std::size_t r = 0; r < rows; ++r) {
        k.vadd(dy + r * out_, b_->grad.data(), out_);
    }
    if (dx != nullptr) {
        k.gemm_nn(dy, w_->value.data(), dx, rows, in_, out_, acc_dx);
    }
}

Mlp2::Mlp2(ParamStore& store, const std::string& prefix, std::size_t in,
           std::size_t hidden, std::size_t out, Rng& rng)
    : l1_(store, prefix + ".l1", in, hidden, rng), l2_(store, prefix + ".l2", hidden, out, rng) {}

void Mlp2::forward(const double* x, std::size_t rows, double* y, Mlp2Cache& cache) const {
    std::size_t hidden = l1_.out();
    cache.pre.resize(rows * hidden);
    cache.act.resize(rows * hidden);
    l1_.forward(x, rows, cache.pre.data());
    elu_forward(cache.pre.data(), cache.act.data(), rows * hidden);
    l2_.forward(cache.act.data(), rows, y);
}

void Mlp2::backward(const double* x, const Mlp2Cache& cache, const double* dy,
                    std::size_t rows, double* dx, bool acc_dx) const {
    std::size_t hidden = l1_.out();
    std::vector<double> dact(rows * hidden);
    l2_.backward(cache.act.data(), dy, rows, dact.data());
    elu_backward(cache.pre.data(), cache.act.data(), dact.data(), dact.data(),
                 rows * hidden);
    l1_.backward(x, dact.data(), rows, dx, acc_dx);
}

LayerNorm::LayerNorm(ParamStore& store, const std::string& prefix, std::size_t dim)
    : dim_(dim) {
    gamma_ = &store.add(prefix + ".gamma", dim);
    beta_ = &store.add(prefix + ".beta", dim);
    std::fill(gamma_->value.begin(), gamma_->value.end(), 1.0);
}

void LayerNorm::forward(const double* x, std::size_t rows, double* y,
                        LayerNormCache& cache) const {
    cache.xhat.resize(rows * dim_);
    cache.inv_std.resize(rows);
    const double* g = gamma_->value.data();
    const double* b = beta_->value.data();
    for (std::size_t r = 0; r < rows; ++r) {
        const double* xr = x + r * dim_;
        double mean = kern::backend().sum(xr, dim_) / static_cast<double>(dim_);
        double var = 0.0;
        for (std::size_t i = 0; i < dim_; ++i) {
            double d = xr[i] - mean;
            var += d * d;
        }
        var /= static_cast<double>(dim_);
        double inv = 1.0 / std::sqrt(var + kEps);
        cache.inv_std[r] = inv;
        double* xh = cache.xhat.data() + r * dim_;
        double* yr = y + r * dim_;
        for (std::size_t i = 0; i < dim_; ++i) {
            xh[i] = (xr[i] - mean) * inv;
            yr[i] = g[i] * xh[i] + b[i];
        }
    }
}

void LayerNorm::backward(const LayerNormCache& cache, const double* dy, std::size_t rows,
                         double* dx, bool acc_dx) const {
    const double* g = gamma_->value.data();
    double* dg = gamma_->grad.data();
    double* db = beta_->grad.data();
    std::vector<double> dxh(dim_);
    for (std::size_t r = 0; r < rows; ++r) {
        const double* dyr = dy + r * dim_;
        const double* xh = cache.xhat.data() + r * dim_;
        double mean_dxh = 0.0;
        double mean_dxh_xh = 0.0;
        for (std::size_t i = 0; i < dim_; ++i) {
            dg[i] += dyr[i] * xh[i];
            db[i] += dyr[i];
            dxh[i] = dyr[i] * g[i];
            mean_dxh += dxh[i];
            mean_dxh_xh += dxh[i] * xh[i];
        }
        mean_dxh /= static_cast<double>(dim_);
        mean_dxh_xh /= static_cast<double>(dim_);
        double inv = cache.inv_std[r];
        double* dxr = dx + r * dim_;
        for (std::size_t i = 0; i < dim_; ++i) {
            double v = inv * (dxh[i] - mean_dxh - xh[i] * mean_dxh_xh);
            dxr[i] = acc_dx ? dxr[i] + v : v;
        }
    }
}

void elu_forward(const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        y[i] = x[i] > 0.0 ? x[i] : std::expm1(x[i]);
    }
}

void elu_backward(const double* x, const double* y, const double* dy, double* dx,
                  std::size_t n, bool acc_dx) {
    for (std::size_t i = 0; i < n; ++i) {
        double v = dy[i] * (x[i] > 0.0 ? 1.0 : y[i] + 1.0);
        dx[i] = acc_dx ? dx[i] + v : v;
    }
}

void dropout_forward(const double* x, double* y, double* mask, std::size_t n, double p,
                     Rng& rng) {
    if (p <= 0.0) {
        std::fill(mask, mask + n, 1.0);
        std::copy(x, x + n, y);
        return;
    }
    double scale = 1.0 / (1.0 - p);
    for (std::size_t i = 0; i < n; ++i) {
        mask[i] = rng.uniform() < p ? 0.0 : scale;
        y[i] = x[i] * mask[i];
    }
}

void dropout_backward(const double* mask, const double* dy, double* dx, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) dx[i] = dy[i] * mask[i];
}

void softmax_forward(const double* x, double* y, std::size_t rows, std::size_t dim) {
    for (std::size_t r = 0; r < rows; ++r) {
        const double* xr = x + r * dim;
        double* yr = y + r * dim;
        double mx = *std::max_element(xr, xr + dim);
        double total = 0.0;
        for (std::size_t i = 0; i < dim; ++i) {
            yr[i] = std::exp(xr[i] - mx);
            total += yr[i];
        }
        for (std::size_t i = 0; i < dim; ++i) yr[i] /= total;
    }
}

void softmax_backward(const double* y, const double* dy, double* dx, std::size_t rows,
                      std::size_t dim, bool acc_dx) {
    for (std::size_t r = 0; r < rows; ++r) {
        const double* yr = y + r * dim;
        const double* dyr = dy + r * dim;
        double* dxr = dx + r * dim;
        double dot = kern::backend().dot(yr, dyr, dim);
        for (std::size_t i = 0; i < dim; ++i) {
            double v = yr[i] * (dyr[i] - dot);
            dxr[i] = acc_dx ? dxr[i] + v : v;
        }
    }
}

}  // namespace gwm::nn
