#include "gwm/nn/gru.hpp"

#include <cmath>

#include "gwm/kernels.hpp"
#include "gwm/nn/layers.hpp"

namespace gwm::nn {

GruCell::GruCell(ParamStore& store, const std::string& prefix, std::size_t in,
                 std::size_t hidden, Rng& rng)
    : in_(in), hidden_(hidden) {
    w_ih_ = &store.add(prefix + ".w_ih", 3 * hidden * in);
    w_hh_ = &store.add(prefix + ".w_hh", 3 * hidden * hidden);
    b_ih_ = &store.add(prefix + ".b_ih", 3 * hidden);
    b_hh_ = &store.add(prefix + ".b_hh", 3 * hidden);
    double bound = 1.0 / std::sqrt(static_cast<double>(hidden));
    for (auto* p : {w_ih_, w_hh_, b_ih_, b_hh_}) {
        for (double& x : p->value) x = rng.uniform(-bound, bound);
    }
}

void GruCell::forward(const double* x, const double* h, std::size_t rows, double* h_out,
                      GruCache& cache) const {
    const auto& k = kern::backend();
    std::size_t H = hidden_;
    cache.gi.resize(rows * 3 * H);
    cache.gh.resize(rows * 3 * H);
    cache.r.resize(rows * H);
    cache.z.resize(rows * H);
    cache.n.resize(rows * H);

    k.gemm_nt(x, w_ih_->value.data(), cache.gi.data(), rows, 3 * H, in_, false);
    k.gemm_nt(h, w_hh_->value.data(), cache.gh.data(), rows, 3 * H, H, false);
    for (std::size_t row = 0; row < rows; ++row) {
        double* gi = cache.gi.data() + row * 3 * H;
        double* gh = cache.gh.data() + row * 3 * H;
        k.vadd(b_ih_->value.data(), gi, 3 * H);
        k.vadd(b_hh_->value.data(), gh, 3 * H);
        double* r = cache.r.data() + row * H;
        double* z = cache.z.data() + row * H;
        double* n = cache.n.data() + row * H;
        const double* hp = h + row * H;
        double* ho = h_out + row * H;
        for (std::size_t i = 0; i < H; ++i) {
            r[i] = sigmoid(gi[i] + gh[i]);
            z[i] = sigmoid(gi[H + i] + gh[H + i]);
            n[i] = std::tanh(gi[2 * H + i] + r[i] * gh[2 * H + i]);
            ho[i] = (1.0 - z[i]) * n[i] + z[i] * hp[i];
        }
    }
}

void GruCell::backward(const double* x, const double* h, const GruCache& cache,
                       const double* dh_out, std::size_t rows, double* dx,
                       double* dh_in) const {
    const auto& k = kern::backend();
    std::size_t H = hidden_;
    std::vector<double> dgi(rows * 3 * H);
    std::vector<double> dgh(rows * 3 * H);

    for (std::size_t row = 0; row < rows; ++row) {
        const double* r = cache.r.data() + row * H;
        const double* z = cache.z.data() + row * H;
        const double* n = cache.n.data() + row * H;
        const double* gh = cache.gh.data() + row * 3 * H;
        const double* dho = dh_out + row * H;
        const double* hp = h + row * H;
        double* gi_g = dgi.data() + row * 3 * H;
        double* gh_g = dgh.data() + row * 3 * H;
        for (std::size_t i = 0; i < H; ++i) {
            double dn = dho[i] * (1.0 - z[i]);
            double dz = dho[i] * (hp[i] - n[i]);
            double dpre_n = dn * (1.0 - n[i] * n[i]);
            double dr = dpre_n * gh[2 * H + i];
            double dpre_r = dr * r[i] * (1.0 - r[i]);
            double dpre_z = dz * z[i] * (1.0 - z[i]);
            gi_g[i] = dpre_r;
            gi_g[H + i] = dpre_z;
            gi_g[2 * H + i] = dpre_n;
            gh_g[i] = dpre_r;
            gh_g[H + i] = dpre_z;
            gh_g[2 * H + i] = dpre_n * r[i];
        }
    }

    k.gemm_tn(dgi.data(), x, w_ih_->grad.data(), 3 * H, in_, rows, true);
    k.gemm_tn(dgh.data(), h, w_hh_->grad.data(), 3 * H, H, rows, true);
    for (std::size_t row = 0; row < rows; ++row) {
        k.vadd(dgi.data() + row * 3 * H, b_ih_->grad.data(), 3 * H);
        k.vadd(dgh.data() + row * 3 * H, b_hh_->grad.data(), 3 * H);
    }
    k.gemm_nn(dgi.data(), w_ih_->value.data(), dx, rows, in_, 3 * H, false);
    k.gemm_nn(dgh.data(), w_hh_->value.data(), dh_in, rows, H, 3 * H, false);
    for (std::size_t row = 0; row < rows; ++row) {
        const double* z = cache.z.data() + row * H;
        const double* dho = dh_out + row * H;
        double* dhi = dh_in + row * H;
        for (std::size_t i = 0; i < H; ++i) {
            dhi[i] += dho[i] * z[i];
        }
    }
}

}  // namespace gwm::nn
