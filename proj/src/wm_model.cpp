#include "gwm/wm/model.hpp"

#include <cmath>

#include "gwm/errors.hpp"
#include "gwm/kernels.hpp"
#include "gwm/wm/features.hpp"

namespace gwm::wm {

Config WmConfig::to_meta() const {
    Config meta;
    meta.set_int("wm.n", n);
    meta.set_int("wm.factors", factors);
    meta.set_int("wm.classes", classes);
    meta.set_int("wm.hidden", hidden);
    meta.set_int("wm.embed_heads", embed_heads);
    meta.set_int("wm.embed_per_head", embed_per_head);
    meta.set_int("wm.latent_hidden", latent_hidden);
    meta.set_int("wm.mix_heads", mix_heads);
    meta.set_int("wm.global_dim", global_dim);
    meta.set_int("wm.dec_hidden", dec_hidden);
    meta.set_int("wm.dec_node", dec_node);
    meta.set_int("wm.head_hidden", head_hidden);
    meta.set_int("wm.rc_hidden", rc_hidden);
    meta.set_int("wm.adj_rank", adj_rank);
    meta.set_double("wm.dropout", dropout);
    meta.set_double("wm.unimix", unimix);
    return meta;
}

WmConfig WmConfig::from_meta(const Config& meta) {
    WmConfig cfg;
    cfg.n = static_cast<std::int32_t>(meta.get_int("wm.n"));
    cfg.factors = static_cast<std::int32_t>(meta.get_int("wm.factors"));
    cfg.classes = static_cast<std::int32_t>(meta.get_int("wm.classes"));
    cfg.hidden = static_cast<std::int32_t>(meta.get_int("wm.hidden"));
    cfg.embed_heads = static_cast<std::int32_t>(meta.get_int("wm.embed_heads"));
    cfg.embed_per_head = static_cast<std::int32_t>(meta.get_int("wm.embed_per_head"));
    cfg.latent_hidden = static_cast<std::int32_t>(meta.get_int("wm.latent_hidden"));
    cfg.mix_heads = static_cast<std::int32_t>(meta.get_int("wm.mix_heads"));
    cfg.global_dim = static_cast<std::int32_t>(meta.get_int("wm.global_dim"));
    cfg.dec_hidden = static_cast<std::int32_t>(meta.get_int("wm.dec_hidden"));
    cfg.dec_node = static_cast<std::int32_t>(meta.get_int("wm.dec_node"));
    cfg.head_hidden = static_cast<std::int32_t>(meta.get_int("wm.head_hidden"));
    cfg.rc_hidden = static_cast<std::int32_t>(meta.get_int("wm.rc_hidden"));
    cfg.adj_rank = static_cast<std::int32_t>(meta.get_int("wm.adj_rank"));
    cfg.dropout = meta.get_double("wm.dropout");
    cfg.unimix = meta.get_double("wm.unimix");
    return cfg;
}

WorldModel::WorldModel(const WmConfig& cfg, std::uint64_t init_seed)
    : cfg_(cfg),
      init_rng_(Rng::derived(init_seed, 0x11117777ULL)),
      gat1_(store_, "enc.gat1", kNodeFeatures, cfg.embed_per_head, cfg.embed_heads, 1,
            init_rng_),
      enc_ln1_(store_, "enc.ln1", cfg.embed_dim()),
      gat2_(store_, "enc.gat2", cfg.embed_dim(), cfg.embed_per_head, cfg.embed_heads, 1,
            init_rng_),
      enc_ln2_(store_, "enc.ln2", cfg.embed_dim()),
      in_proj_(store_, "dyn.in", cfg.z_dim() + 1, cfg.hidden, init_rng_),
      gru_(store_, "dyn.gru", cfg.hidden, cfg.hidden, init_rng_),
      mix_(store_, "dyn.mix", cfg.hidden, cfg.mix_heads, init_rng_),
      mix_ln_(store_, "dyn.ln", cfg.hidden),
      prior_head_(store_, "prior", cfg.hidden, cfg.latent_hidden, cfg.z_dim(), init_rng_),
      post_head_(store_, "post", cfg.hidden + cfg.embed_dim(), cfg.latent_hidden,
                 cfg.z_dim(), init_rng_),
      s_proj_(store_, "pool.s", cfg.hidden + cfg.z_dim(), cfg.global_dim, init_rng_),
      dec1_(store_, "dec.t1", cfg.global_dim, cfg.dec_hidden, init_rng_),
      dec2_(store_, "dec.t2", cfg.dec_hidden, cfg.n * cfg.dec_node, init_rng_),
      pos_head_(store_, "dec.pos", cfg.dec_node, cfg.head_hidden, 2, init_rng_),
      energy_head_(store_, "dec.energy", cfg.dec_node, cfg.head_hidden, 1, init_rng_),
      adj_proj_(store_, "dec.adj", cfg.dec_node, cfg.adj_rank, init_rng_),
      reward_head_(store_, "dec.reward", cfg.global_dim, cfg.rc_hidden, 1, init_rng_),
      cont_head_(store_, "dec.cont", cfg.global_dim, cfg.rc_hidden, 1, init_rng_) {}

std::size_t WorldModel::core_parameter_count() const {
    std::size_t n_bound = store_.find("dec.t2.w")->size() + store_.find("dec.t2.b")->size();
    return store_.parameter_count() - n_bound;
}

void WorldModel::encode(const double* feat, std::size_t rows, const nn::GraphEdges& edges,
                        bool train, Rng& rng, EncodeCache& cache) const {
    ++encoder_calls_;
    std::size_t e = cfg_.embed_dim();
    cache.rows = rows;
    cache.feat.assign(feat, feat + rows * kNodeFeatures);
    cache.y1.resize(rows * e);
    cache.y1n.resize(rows * e);
    cache.y1e.resize(rows * e);
    cache.m1.resize(rows * e);
    cache.x2.resize(rows * e);
    cache.y2.resize(rows * e);
    cache.y2n.resize(rows * e);
    cache.y2e.resize(rows * e);
    cache.m2.resize(rows * e);
    cache.embed.resize(rows * e);

    double p = train ? cfg_.dropout : 0.0;
    gat1_.forward(feat, rows, edges, cache.y1.data(), cache.g1);
    enc_ln1_.forward(cache.y1.data(), rows, cache.y1n.data(), cache.ln1);
    nn::elu_forward(cache.y1n.data(), cache.y1e.data(), rows * e);
    nn::dropout_forward(cache.y1e.data(), cache.x2.data(), cache.m1.data(), rows * e, p,
                        rng);
    gat2_.forward(cache.x2.data(), rows, edges, cache.y2.data(), cache.g2);
    enc_ln2_.forward(cache.y2.data(), rows, cache.y2n.data(), cache.ln2);
    nn::elu_forward(cache.y2n.data(), cache.y2e.data(), rows * e);
    nn::dropout_forward(cache.y2e.data(), cache.embed.data(), cache.m2.data(), rows * e,
                        p, rng);
}

void WorldModel::encode_backward(const EncodeCache& cache, const nn::GraphEdges& edges,
                                 const double* dembed) const {
    std::size_t rows = cache.rows;
    std::size_t e = cfg_.embed_dim();
    std::vector<double> buf(rows * e);
    std::vector<double> buf2(rows * e);
    std::vector<double> dfeat(rows * kNodeFeatures);

    nn::dropout_backward(cache.m2.data(), dembed, buf.data(), rows * e);
    nn::elu_backward(cache.y2n.data(), cache.y2e.data(), buf.data(), buf.data(), rows * e);
    enc_ln2_.backward(cache.ln2, buf.data(), rows, buf2.data());
    gat2_.backward(cache.x2.data(), rows, edges, cache.g2, buf2.data(), buf.data());

    nn::dropout_backward(cache.m1.data(), buf.data(), buf.data(), rows * e);
    nn::elu_backward(cache.y1n.data(), cache.y1e.data(), buf.data(), buf.data(), rows * e);
    enc_ln1_.backward(cache.ln1, buf.data(), rows, buf2.data());
    gat1_.backward(cache.feat.data(), rows, edges, cache.g1, buf2.data(), dfeat.data());
}

void WorldModel::dynamics(const double* h_prev, const double* z_prev, const double* a_prev,
                          std::size_t rows, const nn::RowGroups& groups,
                          DynCache& cache) const {
    std::size_t H = cfg_.hidden;
    std::size_t Z = cfg_.z_dim();
    cache.rows = rows;
    cache.za.resize(rows * (Z + 1));
    cache.gin.resize(rows * H);
    cache.h_raw.resize(rows * H);
    cache.mix_out.resize(rows * H);
    cache.resid.resize(rows * H);
    cache.h.resize(rows * H);
    for (std::size_t r = 0; r < rows; ++r) {
        double* za = cache.za.data() + r * (Z + 1);
        std::copy(z_prev + r * Z, z_prev + (r + 1) * Z, za);
        za[Z] = a_prev[r];
    }
    in_proj_.forward(cache.za.data(), rows, cache.gin.data());
    gru_.forward(cache.gin.data(), h_prev, rows, cache.h_raw.data(), cache.gru);
    mix_.forward(cache.h_raw.data(), rows, groups, cache.mix_out.data(), cache.mha);
    for (std::size_t i = 0; i < rows * H; ++i) {
        cache.resid[i] = cache.h_raw[i] + cache.mix_out[i];
    }
    mix_ln_.forward(cache.resid.data(), rows, cache.h.data(), cache.ln);
}

void WorldModel::dynamics_backward(const double* h_prev, const double* z_prev,
                                   const nn::RowGroups& groups, const DynCache& cache,
                                   const double* dh, double* dh_prev,
                                   double* dz_prev) const {
    (void)z_prev;
    std::size_t rows = cache.rows;
    std::size_t H = cfg_.hidden;
    std::size_t Z = cfg_.z_dim();
    std::vector<double> dresid(rows * H);
    mix_ln_.backward(cache.ln, dh, rows, dresid.data());
    std::vector<double> dh_raw(rows * H);
    mix_.backward(cache.h_raw.data(), groups, cache.mha, dresid.data(), dh_raw.data());
    kern::backend().vadd(dresid.data(), dh_raw.data(), rows * H);

    std::vector<double> dgin(rows * H);
    gru_.backward(cache.gin.data(), h_prev, cache.gru, dh_raw.data(), rows, dgin.data(),
                  dh_prev);
    std::vector<double> dza(rows * (Z + 1));
    in_proj_.backward(cache.za.data(), dgin.data(), rows, dza.data());
    for (std::size_t r = 0; r < rows; ++r) {
        kern::backend().vadd(dza.data() + r * (Z + 1), dz_prev + r * Z, Z);
    }
}

void WorldModel::latent_from_logits(LatentCache& cache, std::size_t rows, LatentMode mode,
                                    Rng& rng, bool want_z) const {
    std::size_t F = cfg_.factors;
    std::size_t K = cfg_.classes;
    std::size_t Z = F * K;
    cache.soft.resize(rows * Z);
    cache.probs.resize(rows * Z);
    nn::softmax_forward(cache.logits.data(), cache.soft.data(), rows * F, K);
    double u = cfg_.unimix;
    for (std::size_t i = 0; i < rows * Z; ++i) {
        cache.probs[i] = (1.0 - u) * cache.soft[i] + u / static_cast<double>(K);
    }
    if (!want_z) {
        cache.z.clear();
        return;
    }
    cache.z.assign(rows * Z, 0.0);
    if (mode == LatentMode::kProbs) {
        cache.z = cache.probs;
        return;
    }
    for (std::size_t rf = 0; rf < rows * F; ++rf) {
        const double* p = cache.probs.data() + rf * K;
        std::size_t pick = 0;
        if (mode == LatentMode::kSample) {
            double roll = rng.uniform();
            double acc = 0.0;
            pick = K - 1;
            for (std::size_t c = 0; c < K; ++c) {
                acc += p[c];
                if (roll < acc) {
                    pick = c;
                    break;
                }
            }
        } else {
            for (std::size_t c = 1; c < K; ++c) {
                if (p[c] > p[pick]) pick = c;
            }
        }
        cache.z[rf * K + pick] = 1.0;
    }
}

void WorldModel::latent_backward_to_logits(const LatentCache& cache, const double* dprobs,
                                           const double* dz, std::size_t rows,
                                           std::vector<double>& dlogits) const {
    std::size_t F = cfg_.factors;
    std::size_t K = cfg_.classes;
    std::size_t Z = F * K;
    std::vector<double> dp(rows * Z, 0.0);
    if (dprobs != nullptr) {
        kern::backend().vadd(dprobs, dp.data(), rows * Z);
    }
    // Straight-through: gradients w.r.t. z act on the mixed probabilities.
    if (dz != nullptr && !cache.z.empty()) {
        kern::backend().vadd(dz, dp.data(), rows * Z);
    }
    double u = cfg_.unimix;
    for (std::size_t i = 0; i < rows * Z; ++i) dp[i] *= (1.0 - u);
    dlogits.resize(rows * Z);
    nn::softmax_backward(cache.soft.data(), dp.data(), dlogits.data(), rows * F, K);
}

void WorldModel::prior_latent(const double* h, std::size_t rows, LatentMode mode,
                              Rng& rng, bool want_z, LatentCache& cache) const {
    cache.logits.resize(rows * cfg_.z_dim());
    prior_head_.forward(h, rows, cache.logits.data(), cache.head);
    latent_from_logits(cache, rows, mode, rng, want_z);
}

void WorldModel::prior_latent_backward(const double* h, const LatentCache& cache,
                                       const double* dprobs, const double* dz,
                                       std::size_t rows, double* dh) const {
    std::vector<double> dlogits;
    latent_backward_to_logits(cache, dprobs, dz, rows, dlogits);
    prior_head_.backward(h, cache.head, dlogits.data(), rows, dh, true);
}

void WorldModel::posterior_latent(const double* h, const double* embed, std::size_t rows,
                                  LatentMode mode, Rng& rng, LatentCache& cache) const {
    ++posterior_calls_;
    std::size_t H = cfg_.hidden;
    std::size_t E = cfg_.embed_dim();
    cache.input.resize(rows * (H + E));
    for (std::size_t r = 0; r < rows; ++r) {
        double* in = cache.input.data() + r * (H + E);
        std::copy(h + r * H, h + (r + 1) * H, in);
        std::copy(embed + r * E, embed + (r + 1) * E, in + H);
    }
    cache.logits.resize(rows * cfg_.z_dim());
    post_head_.forward(cache.input.data(), rows, cache.logits.data(), cache.head);
    latent_from_logits(cache, rows, mode, rng, true);
}

void WorldModel::posterior_latent_backward(const LatentCache& cache, const double* dprobs,
                                           const double* dz, std::size_t rows, double* dh,
                                           double* dembed) const {
    std::size_t H = cfg_.hidden;
    std::size_t E = cfg_.embed_dim();
    std::vector<double> dlogits;
    latent_backward_to_logits(cache, dprobs, dz, rows, dlogits);
    std::vector<double> din(rows * (H + E));
    post_head_.backward(cache.input.data(), cache.head, dlogits.data(), rows, din.data());
    for (std::size_t r = 0; r < rows; ++r) {
        const double* d = din.data() + r * (H + E);
        kern::backend().vadd(d, dh + r * H, H);
        std::copy(d + H, d + H + E, dembed + r * E);
    }
}

void WorldModel::pool_global(const double* h, const double* z, const std::uint8_t* alive,
                             std::size_t batch, PoolCache& cache) const {
    std::size_t n = cfg_.n;
    std::size_t H = cfg_.hidden;
    std::size_t Z = cfg_.z_dim();
    std::size_t G = cfg_.global_dim;
    std::size_t rows = batch * n;
    cache.hz.resize(rows * (H + Z));
    cache.pre.resize(rows * G);
    cache.act.resize(rows * G);
    cache.s.assign(batch * G, 0.0);
    cache.alive_count.assign(batch, 0);
    for (std::size_t r = 0; r < rows; ++r) {
        double* hz = cache.hz.data() + r * (H + Z);
        std::copy(h + r * H, h + (r + 1) * H, hz);
        std::copy(z + r * Z, z + (r + 1) * Z, hz + H);
    }
    s_proj_.forward(cache.hz.data(), rows, cache.pre.data());
    nn::elu_forward(cache.pre.data(), cache.act.data(), rows * G);
    for (std::size_t b = 0; b < batch; ++b) {
        double* s = cache.s.data() + b * G;
        std::int32_t count = 0;
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t r = b * n + i;
            if (!alive[r]) continue;
            ++count;
            kern::backend().vadd(cache.act.data() + r * G, s, G);
        }
        cache.alive_count[b] = count;
        if (count > 0) {
            kern::backend().scal(1.0 / count, s, G);
        }
    }
}

void WorldModel::pool_global_backward(const PoolCache& cache, const std::uint8_t* alive,
                                      std::size_t batch, const double* ds, double* dh,
                                      double* dz) const {
    std::size_t n = cfg_.n;
    std::size_t H = cfg_.hidden;
    std::size_t Z = cfg_.z_dim();
    std::size_t G = cfg_.global_dim;
    std::size_t rows = batch * n;
    std::vector<double> dact(rows * G, 0.0);
    for (std::size_t b = 0; b < batch; ++b) {
        if (cache.alive_count[b] == 0) continue;
        double w = 1.0 / cache.alive_count[b];
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t r = b * n + i;
            if (!alive[r]) continue;
            kern::backend().axpy(w, ds + b * G, dact.data() + r * G, G);
        }
    }
    nn::elu_backward(cache.pre.data(), cache.act.data(), dact.data(), dact.data(),
                     rows * G);
    std::vector<double> dhz(rows * (H + Z));
    s_proj_.backward(cache.hz.data(), dact.data(), rows, dhz.data());
    for (std::size_t r = 0; r < rows; ++r) {
        const double* d = dhz.data() + r * (H + Z);
        kern::backend().vadd(d, dh + r * H, H);
        kern::backend().vadd(d + H, dz + r * Z, Z);
    }
}

void WorldModel::decode(const double* s, std::size_t batch, DecodeCache& cache) const {
    std::size_t n = cfg_.n;
    std::size_t D = cfg_.dec_node;
    std::size_t rows = batch * n;
    cache.t1.resize(batch * cfg_.dec_hidden);
    cache.t1e.resize(batch * cfg_.dec_hidden);
    cache.e_pre.resize(rows * D);
    cache.e.resize(rows * D);
    cache.pos_out.resize(rows * 2);
    cache.energy_out.resize(rows);
    cache.we.resize(rows * cfg_.adj_rank);
    cache.adj_logits.resize(batch * n * n);

    dec1_.forward(s, batch, cache.t1.data());
    nn::elu_forward(cache.t1.data(), cache.t1e.data(), cache.t1.size());
    dec2_.forward(cache.t1e.data(), batch, cache.e_pre.data());
    nn::elu_forward(cache.e_pre.data(), cache.e.data(), cache.e_pre.size());

    pos_head_.forward(cache.e.data(), rows, cache.pos_out.data(), cache.pos);
    energy_head_.forward(cache.e.data(), rows, cache.energy_out.data(), cache.energy);
    adj_proj_.forward(cache.e.data(), rows, cache.we.data());
    std::size_t R = cfg_.adj_rank;
    for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) {
                double logit = kern::backend().dot(cache.we.data() + (b * n + i) * R,
                                                   cache.we.data() + (b * n + j) * R, R);
                cache.adj_logits[(b * n + i) * n + j] = logit;
                cache.adj_logits[(b * n + j) * n + i] = logit;
            }
            cache.adj_logits[(b * n + i) * n + i] = 0.0;
        }
    }
    decode_reward_cont(s, batch, cache);
}

void WorldModel::decode_reward_cont(const double* s, std::size_t batch,
                                    DecodeCache& cache) const {
    cache.reward_out.resize(batch);
    cache.cont_out.resize(batch);
    reward_head_.forward(s, batch, cache.reward_out.data(), cache.reward);
    cont_head_.forward(s, batch, cache.cont_out.data(), cache.cont);
}

void WorldModel::decode_backward(const double* s, std::size_t batch,
                                 const DecodeCache& cache, const double* dpos,
                                 const double* denergy, const double* dadj,
                                 const double* dreward, const double* dcont,
                                 double* ds) const {
    std::size_t n = cfg_.n;
    std::size_t D = cfg_.dec_node;
    std::size_t R = cfg_.adj_rank;
    std::size_t rows = batch * n;

    std::vector<double> de(rows * D, 0.0);
    pos_head_.backward(cache.e.data(), cache.pos, dpos, rows, de.data(), true);
    energy_head_.backward(cache.e.data(), cache.energy, denergy, rows, de.data(), true);

    // Adjacency logits are symmetric dot products; use the upper triangle of
    // dadj once per unordered pair.
    std::vector<double> dwe(rows * R, 0.0);
    for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) {
                double g = dadj[(b * n + i) * n + j];
                if (g == 0.0) continue;
                kern::backend().axpy(g, cache.we.data() + (b * n + j) * R,
                                     dwe.data() + (b * n + i) * R, R);
                kern::backend().axpy(g, cache.we.data() + (b * n + i) * R,
                                     dwe.data() + (b * n + j) * R, R);
            }
        }
    }
    adj_proj_.backward(cache.e.data(), dwe.data(), rows, de.data(), true);

    std::vector<double> de_pre(rows * D);
    nn::elu_backward(cache.e_pre.data(), cache.e.data(), de.data(), de_pre.data(),
                     rows * D);
    std::vector<double> dt1e(batch * cfg_.dec_hidden);
    dec2_.backward(cache.t1e.data(), de_pre.data(), batch, dt1e.data());
    nn::elu_backward(cache.t1.data(), cache.t1e.data(), dt1e.data(), dt1e.data(),
                     cache.t1.size());
    dec1_.backward(s, dt1e.data(), batch, ds, false);

    reward_head_.backward(s, cache.reward, dreward, batch, ds, true);
    cont_head_.backward(s, cache.cont, dcont, batch, ds, true);
}

double categorical_kl(const double* q, const double* p, std::int32_t factors,
                      std::int32_t classes) {
    double kl = 0.0;
    for (std::int32_t f = 0; f < factors; ++f) {
        for (std::int32_t c = 0; c < classes; ++c) {
            double qv = q[f * classes + c];
            double pv = p[f * classes + c];
            kl += qv * (std::log(qv) - std::log(pv));
        }
    }
    return kl;
}

void categorical_kl_backward(const double* q, const double* p, double scale,
                             std::int32_t factors, std::int32_t classes, double* dq,
                             double* dp) {
    for (std::int32_t i = 0; i < factors * classes; ++i) {
        dq[i] += scale * (std::log(q[i]) - std::log(p[i]) + 1.0);
        dp[i] += scale * (-q[i] / p[i]);
    }
}

}  // namespace gwm::wm
