#include "gwm/nn/attention.hpp"

#include <cmath>

#include "gwm/errors.hpp"
#include "gwm/kernels.hpp"

namespace gwm::nn {

MultiheadAttention::MultiheadAttention(ParamStore& store, const std::string& prefix,
                                       std::size_t dim, std::size_t heads, Rng& rng)
    : q_proj_(store, prefix + ".q", dim, dim, rng),
      k_proj_(store, prefix + ".k", dim, dim, rng),
      v_proj_(store, prefix + ".v", dim, dim, rng),
      o_proj_(store, prefix + ".o", dim, dim, rng),
      dim_(dim),
      heads_(heads),
      head_dim_(dim / heads) {
    if (dim % heads != 0) throw ConfigError("attention: dim must divide into heads");
}

void MultiheadAttention::forward(const double* x, std::size_t rows,
                                 const RowGroups& groups, double* y,
                                 MhaCache& cache) const {
    const auto& kb = kern::backend();
    cache.rows = rows;
    cache.q.resize(rows * dim_);
    cache.k.resize(rows * dim_);
    cache.v.resize(rows * dim_);
    cache.ctx.assign(rows * dim_, 0.0);
    q_proj_.forward(x, rows, cache.q.data());
    k_proj_.forward(x, rows, cache.k.data());
    v_proj_.forward(x, rows, cache.v.data());

    cache.group_offset.resize(groups.size());
    std::size_t total = 0;
    for (std::size_t g = 0; g < groups.size(); ++g) {
        cache.group_offset[g] = total;
        total += heads_ * groups[g].size() * groups[g].size();
    }
    cache.alpha.resize(total);

    double scale = 1.0 / std::sqrt(static_cast<double>(head_dim_));
    std::vector<double> score;
    for (std::size_t g = 0; g < groups.size(); ++g) {
        const auto& rows_g = groups[g];
        std::size_t m = rows_g.size();
        if (m == 0) continue;
        score.resize(m);
        for (std::size_t h = 0; h < heads_; ++h) {
            double* alpha = cache.alpha.data() + cache.group_offset[g] + h * m * m;
            std::size_t off = h * head_dim_;
            for (std::size_t i = 0; i < m; ++i) {
                const double* qi = cache.q.data() + rows_g[i] * dim_ + off;
                for (std::size_t j = 0; j < m; ++j) {
                    const double* kj = cache.k.data() + rows_g[j] * dim_ + off;
                    score[j] = scale * kb.dot(qi, kj, head_dim_);
                }
                softmax_forward(score.data(), alpha + i * m, 1, m);
                double* ctx = cache.ctx.data() + rows_g[i] * dim_ + off;
                for (std::size_t j = 0; j < m; ++j) {
                    kb.axpy(alpha[i * m + j], cache.v.data() + rows_g[j] * dim_ + off, ctx,
                            head_dim_);
                }
            }
        }
    }

    o_proj_.forward(cache.ctx.data(), rows, y);
    // Rows outside every group carry no context; keep their output at zero
    // rather than the output-projection bias.
    std::vector<std::uint8_t> in_group(rows, 0);
    for (const auto& rows_g : groups) {
        for (auto r : rows_g) in_group[r] = 1;
    }
    for (std::size_t r = 0; r < rows; ++r) {
        if (!in_group[r]) std::fill(y + r * dim_, y + (r + 1) * dim_, 0.0);
    }
}

void MultiheadAttention::backward(const double* x, const RowGroups& groups,
                                  const MhaCache& cache, const double* dy,
                                  double* dx) const {
    const auto& kb = kern::backend();
    std::size_t rows = cache.rows;

    std::vector<double> dy_masked(dy, dy + rows * dim_);
    std::vector<std::uint8_t> in_group(rows, 0);
    for (const auto& rows_g : groups) {
        for (auto r : rows_g) in_group[r] = 1;
    }
    for (std::size_t r = 0; r < rows; ++r) {
        if (!in_group[r]) {
            std::fill(dy_masked.begin() + r * dim_, dy_masked.begin() + (r + 1) * dim_,
                      0.0);
        }
    }

    std::vector<double> dctx(rows * dim_);
    o_proj_.backward(cache.ctx.data(), dy_masked.data(), rows, dctx.data());

    std::vector<double> dq(rows * dim_, 0.0);
    std::vector<double> dk(rows * dim_, 0.0);
    std::vector<double> dv(rows * dim_, 0.0);
    double scale = 1.0 / std::sqrt(static_cast<double>(head_dim_));
    std::vector<double> dalpha;
    std::vector<double> dscore;
    for (std::size_t g = 0; g < groups.size(); ++g) {
        const auto& rows_g = groups[g];
        std::size_t m = rows_g.size();
        if (m == 0) continue;
        dalpha.resize(m);
        dscore.resize(m);
        for (std::size_t h = 0; h < heads_; ++h) {
            const double* alpha = cache.alpha.data() + cache.group_offset[g] + h * m * m;
            std::size_t off = h * head_dim_;
            for (std::size_t i = 0; i < m; ++i) {
                const double* dctx_i = dctx.data() + rows_g[i] * dim_ + off;
                for (std::size_t j = 0; j < m; ++j) {
                    const double* vj = cache.v.data() + rows_g[j] * dim_ + off;
                    dalpha[j] = kb.dot(dctx_i, vj, head_dim_);
                    kb.axpy(alpha[i * m + j], dctx_i, dv.data() + rows_g[j] * dim_ + off,
                            head_dim_);
                }
                softmax_backward(alpha + i * m, dalpha.data(), dscore.data(), 1, m);
                const double* qi = cache.q.data() + rows_g[i] * dim_ + off;
                double* dqi = dq.data() + rows_g[i] * dim_ + off;
                for (std::size_t j = 0; j < m; ++j) {
                    double ds = dscore[j] * scale;
                    kb.axpy(ds, cache.k.data() + rows_g[j] * dim_ + off, dqi, head_dim_);
                    kb.axpy(ds, qi, dk.data() + rows_g[j] * dim_ + off, head_dim_);
                }
            }
        }
    }

    q_proj_.backward(x, dq.data(), rows, dx, false);
    k_proj_.backward(x, dk.data(), rows, dx, true);
    v_proj_.backward(x, dv.data(), rows, dx, true);
}

}  // namespace gwm::nn
