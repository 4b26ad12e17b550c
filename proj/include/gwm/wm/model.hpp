#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gwm/config.hpp"
#include "gwm/nn/attention.hpp"
#include "gwm/nn/gatv2.hpp"
#include "gwm/nn/gru.hpp"
#include "gwm/nn/layers.hpp"
#include "gwm/nn/param.hpp"
#include "gwm/rng.hpp"

namespace gwm::wm {

// Architecture knobs. Only the second decoder trunk layer depends on n (it
// fans the global state out to one slot per node), so every other tensor is
// shared across node counts.
struct WmConfig {
    std::int32_t n = 50;
    std::int32_t factors = 8;
    std::int32_t classes = 8;
    std::int32_t hidden = 32;
    std::int32_t embed_heads = 4;
    std::int32_t embed_per_head = 16;
    std::int32_t latent_hidden = 64;
    std::int32_t mix_heads = 4;
    std::int32_t global_dim = 256;
    std::int32_t dec_hidden = 256;
    std::int32_t dec_node = 32;
    std::int32_t head_hidden = 64;
    std::int32_t rc_hidden = 128;
    std::int32_t adj_rank = 16;
    double dropout = 0.1;
    double unimix = 0.01;

    std::int32_t z_dim() const { return factors * classes; }
    std::int32_t embed_dim() const { return embed_heads * embed_per_head; }

    Config to_meta() const;
    static WmConfig from_meta(const Config& meta);
};

// How discrete latents are realized from their class distributions.
//  kSample: one-hot draw, gradients pass straight through to the probabilities
//  kMode:   one-hot argmax, same straight-through gradients
//  kProbs:  the mixed probabilities themselves (smooth, for gradient checks)
enum class LatentMode { kSample, kMode, kProbs };

struct EncodeCache {
    std::vector<double> feat;
    nn::Gatv2Cache g1;
    std::vector<double> y1, y1n, y1e, m1, x2;
    nn::LayerNormCache ln1;
    nn::Gatv2Cache g2;
    std::vector<double> y2, y2n, y2e, m2, embed;
    nn::LayerNormCache ln2;
    std::size_t rows = 0;
};

struct DynCache {
    std::vector<double> za;    // rows * (z_dim + 1)
    std::vector<double> gin;   // rows * hidden
    nn::GruCache gru;
    std::vector<double> h_raw;    // rows * hidden
    nn::MhaCache mha;
    std::vector<double> mix_out;  // rows * hidden
    std::vector<double> resid;    // rows * hidden
    nn::LayerNormCache ln;
    std::vector<double> h;        // rows * hidden, the carried state
    std::size_t rows = 0;
};

struct LatentCache {
    std::vector<double> soft;   // rows * z_dim, per-factor softmax
    std::vector<double> probs;  // rows * z_dim, after uniform mixing
    std::vector<double> z;      // rows * z_dim
    nn::Mlp2Cache head;
    std::vector<double> logits;  // rows * z_dim
    std::vector<double> input;   // posterior only: rows * (hidden + embed)
};

struct PoolCache {
    std::vector<double> hz;   // rows * (hidden + z_dim)
    std::vector<double> pre;  // rows * global_dim
    std::vector<double> act;  // rows * global_dim
    std::vector<double> s;    // batch * global_dim
    std::vector<std::int32_t> alive_count;  // batch
};

struct DecodeCache {
    std::vector<double> t1, t1e;      // batch * dec_hidden
    std::vector<double> e_pre, e;     // batch * n * dec_node
    nn::Mlp2Cache pos, energy, reward, cont;
    std::vector<double> pos_out;      // batch * n * 2
    std::vector<double> energy_out;   // batch * n
    std::vector<double> we;           // batch * n * adj_rank
    std::vector<double> adj_logits;   // batch * n * n (upper triangle used)
    std::vector<double> reward_out;   // batch
    std::vector<double> cont_out;     // batch
};

struct StepCache {
    EncodeCache enc;
    DynCache dyn;
    LatentCache prior;
    LatentCache post;
    PoolCache pool;
    DecodeCache dec;
    std::vector<std::uint8_t> alive;  // rows
    nn::RowGroups groups;
    nn::GraphEdges edges;
    std::vector<double> a_prev;  // rows
};

class WorldModel {
public:
    WorldModel(const WmConfig& cfg, std::uint64_t init_seed);

    const WmConfig& config() const { return cfg_; }
    nn::ParamStore& params() { return store_; }
    const nn::ParamStore& params() const { return store_; }

    // Parameters shared across node counts (everything except the n-sized
    // decoder fan-out).
    std::size_t core_parameter_count() const;

    // --- observation path ---------------------------------------------
    // rows = batch * n throughout; groups lists alive rows per batch lane.
    void encode(const double* feat, std::size_t rows, const nn::GraphEdges& edges,
                bool train, Rng& rng, EncodeCache& cache) const;
    void encode_backward(const EncodeCache& cache, const nn::GraphEdges& edges,
                         const double* dembed) const;

    void dynamics(const double* h_prev, const double* z_prev, const double* a_prev,
                  std::size_t rows, const nn::RowGroups& groups, DynCache& cache) const;
    // dh_prev is written, dz_prev is accumulated.
    void dynamics_backward(const double* h_prev, const double* z_prev,
                           const nn::RowGroups& groups, const DynCache& cache,
                           const double* dh, double* dh_prev, double* dz_prev) const;

    void prior_latent(const double* h, std::size_t rows, LatentMode mode, Rng& rng,
                      bool want_z, LatentCache& cache) const;
    // dprobs: gradient w.r.t. the mixed probabilities (KL terms); dz may be
    // null when z was not consumed. dh is accumulated.
    void prior_latent_backward(const double* h, const LatentCache& cache,
                               const double* dprobs, const double* dz,
                               std::size_t rows, double* dh) const;

    void posterior_latent(const double* h, const double* embed, std::size_t rows,
                          LatentMode mode, Rng& rng, LatentCache& cache) const;
    // dh is accumulated; dembed is written.
    void posterior_latent_backward(const LatentCache& cache, const double* dprobs,
                                   const double* dz, std::size_t rows, double* dh,
                                   double* dembed) const;

    void pool_global(const double* h, const double* z, const std::uint8_t* alive,
                     std::size_t batch, PoolCache& cache) const;
    // dh and dz are accumulated.
    void pool_global_backward(const PoolCache& cache, const std::uint8_t* alive,
                              std::size_t batch, const double* ds, double* dh,
                              double* dz) const;

    void decode(const double* s, std::size_t batch, DecodeCache& cache) const;
    // All gradients are w.r.t. raw head outputs; ds is written.
    void decode_backward(const double* s, std::size_t batch, const DecodeCache& cache,
                         const double* dpos, const double* denergy, const double* dadj,
                         const double* dreward, const double* dcont, double* ds) const;

    // Reward and continue heads alone, for imagination.
    void decode_reward_cont(const double* s, std::size_t batch, DecodeCache& cache) const;

    // --- purity accounting ----------------------------------------------
    // Imagination must never consult observations; these counters let tests
    // and the rollout code prove that.
    std::size_t encoder_calls() const { return encoder_calls_; }
    std::size_t posterior_calls() const { return posterior_calls_; }

    std::int32_t n() const { return cfg_.n; }

private:
    void latent_from_logits(LatentCache& cache, std::size_t rows, LatentMode mode,
                            Rng& rng, bool want_z) const;
    void latent_backward_to_logits(const LatentCache& cache, const double* dprobs,
                                   const double* dz, std::size_t rows,
                                   std::vector<double>& dlogits) const;

    WmConfig cfg_;
    nn::ParamStore store_;
    Rng init_rng_;

    nn::Gatv2Layer gat1_;
    nn::LayerNorm enc_ln1_;
    nn::Gatv2Layer gat2_;
    nn::LayerNorm enc_ln2_;

    nn::Linear in_proj_;
    nn::GruCell gru_;
    nn::MultiheadAttention mix_;
    nn::LayerNorm mix_ln_;

    nn::Mlp2 prior_head_;
    nn::Mlp2 post_head_;

    nn::Linear s_proj_;

    nn::Linear dec1_;
    nn::Linear dec2_;
    nn::Mlp2 pos_head_;
    nn::Mlp2 energy_head_;
    nn::Linear adj_proj_;
    nn::Mlp2 reward_head_;
    nn::Mlp2 cont_head_;

    mutable std::size_t encoder_calls_ = 0;
    mutable std::size_t posterior_calls_ = 0;
};

// Categorical KL(q || p) summed over the row's factors.
double categorical_kl(const double* q, const double* p, std::int32_t factors,
                      std::int32_t classes);
// Accumulates d(scale * KL)/dq and d(scale * KL)/dp into dq and dp.
void categorical_kl_backward(const double* q, const double* p, double scale,
                             std::int32_t factors, std::int32_t classes, double* dq,
                             double* dp);

}  // namespace gwm::wm
