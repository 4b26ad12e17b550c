#include "gwm/wm/train.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>

#include "gwm/errors.hpp"
#include "gwm/kernels.hpp"
#include "gwm/nn/checkpoint.hpp"
#include "gwm/symlog.hpp"

namespace gwm::wm {

WindowBatch build_window_batch(const data::Dataset& ds,
                               const std::map<std::string, sim::ScenarioConfig>& scenarios,
                               const std::vector<data::SequenceRef>& refs,
                               std::int32_t seq_len) {
    WindowBatch batch;
    batch.lanes = static_cast<std::int32_t>(refs.size());
    batch.n = ds.n;
    std::int32_t n = ds.n;
    std::size_t rows = static_cast<std::size_t>(batch.lanes) * n;
    batch.steps.resize(seq_len);

    for (std::int32_t t = 0; t < seq_len; ++t) {
        StepTargets& st = batch.steps[t];
        st.feat.assign(rows * kNodeFeatures, 0.0);
        st.alive.assign(rows, 0);
        st.a_prev.assign(rows, 0.0);
        st.pos_t.assign(rows * 2, 0.0);
        st.energy_t.assign(rows, 0.0);
        st.adj_t.assign(rows * n, 0);
        st.pair_m.assign(rows * n, 0);
        st.reward_t.assign(batch.lanes, 0.0);
        st.cont_t.assign(batch.lanes, 0);
        st.rc_m.assign(batch.lanes, 0);
    }

    for (std::int32_t lane = 0; lane < batch.lanes; ++lane) {
        const data::SequenceRef& ref = refs[lane];
        const data::Episode& ep = ds.episodes.at(ref.episode);
        auto it = scenarios.find(ep.scenario);
        if (it == scenarios.end()) {
            throw ConfigError("no scenario config for episode scenario '" + ep.scenario +
                              "'");
        }
        const sim::ScenarioConfig& sc = it->second;
        std::int32_t base = lane * n;

        for (std::int32_t t = 0; t < seq_len; ++t) {
            StepTargets& st = batch.steps[t];
            std::int32_t a = ref.offset + t;
            sim::NetSnapshot snap = ep.snapshot(a, sc.channel);

            node_features(snap, sc, st.feat.data() +
                                        static_cast<std::size_t>(base) * kNodeFeatures);
            append_edges(snap, sc, base, st.edges);

            st.groups.push_back({});
            std::vector<std::int32_t>& g = st.groups.back();
            g.resize(n);
            for (std::int32_t i = 0; i < n; ++i) g[i] = base + i;

            for (std::int32_t i = 0; i < n; ++i) {
                const sim::NodeState& node = snap.nodes[i];
                std::size_t r = static_cast<std::size_t>(base) + i;
                st.alive[r] = node.alive ? 1 : 0;
                if (node.alive) ++batch.alive_rows;
                if (a == 0) {
                    st.a_prev[r] = 0.0;
                } else if (t == 0) {
                    st.a_prev[r] = node.ch ? 1.0 : 0.0;
                } else {
                    st.a_prev[r] = ep.action[static_cast<std::size_t>(a - 1) * n + i];
                }
                st.pos_t[r * 2] = symlog(node.pos[0]);
                st.pos_t[r * 2 + 1] = symlog(node.pos[1]);
                st.energy_t[r] = symlog(node.energy);
            }
            for (std::int32_t i = 0; i < n; ++i) {
                for (std::int32_t j = i + 1; j < n; ++j) {
                    std::size_t p = (static_cast<std::size_t>(base) + i) * n + j;
                    st.adj_t[p] = snap.adj(i, j) ? 1 : 0;
                    bool both = snap.nodes[i].alive && snap.nodes[j].alive;
                    st.pair_m[p] = both ? 1 : 0;
                    if (both) ++batch.pair_count;
                }
            }
            if (a > 0) {
                st.reward_t[lane] = symlog(ep.reward[a - 1]);
                st.cont_t[lane] = ep.cont[a - 1];
                st.rc_m[lane] = 1;
                ++batch.rc_count;
            }
        }
    }
    return batch;
}

LossDenoms denoms_for(std::int64_t alive_rows, std::int64_t pair_count,
                      std::int64_t rc_count) {
    LossDenoms d;
    d.inv_alive = alive_rows > 0 ? 1.0 / static_cast<double>(alive_rows) : 0.0;
    d.inv_pairs = pair_count > 0 ? 1.0 / static_cast<double>(pair_count) : 0.0;
    d.inv_rc = rc_count > 0 ? 1.0 / static_cast<double>(rc_count) : 0.0;
    return d;
}

WmLoss& WmLoss::operator+=(const WmLoss& o) {
    pos += o.pos;
    energy += o.energy;
    adj += o.adj;
    reward += o.reward;
    cont += o.cont;
    kl += o.kl;
    total += o.total;
    recon += o.recon;
    cont_correct += o.cont_correct;
    cont_total += o.cont_total;
    return *this;
}

namespace {

void check_finite(const WmLoss& loss) {
    struct Named {
        const char* name;
        double value;
    };
    const Named parts[] = {{"position", loss.pos},   {"energy", loss.energy},
                           {"adjacency", loss.adj},  {"reward", loss.reward},
                           {"continue", loss.cont},  {"kl", loss.kl}};
    for (const Named& p : parts) {
        if (!std::isfinite(p.value)) {
            throw DivergenceError(std::string("world-model ") + p.name +
                                  " loss became non-finite");
        }
    }
}

}  // namespace

WmLoss unroll_window_batch(const WorldModel& model, const WindowBatch& batch,
                           const LossDenoms& denoms, const UnrollOptions& opt,
                           Rng& rng) {
    const WmConfig& cfg = model.config();
    if (batch.n != cfg.n) {
        throw ConfigError("window batch has n=" + std::to_string(batch.n) +
                          " but the model was built for n=" + std::to_string(cfg.n));
    }
    std::size_t lanes = batch.lanes;
    std::size_t n = cfg.n;
    std::size_t rows = lanes * n;
    std::size_t T = batch.steps.size();
    std::size_t H = cfg.hidden;
    std::size_t Z = cfg.z_dim();
    std::int32_t F = cfg.factors;
    std::int32_t K = cfg.classes;

    std::vector<StepCache> caches(T);
    std::vector<std::vector<double>> kl_grad_scale(T);

    std::vector<double> h0(rows * H, 0.0);
    LatentCache init_prior;
    model.prior_latent(h0.data(), rows, opt.mode, rng, true, init_prior);

    WmLoss loss;
    const double* h_prev = h0.data();
    const double* z_prev = init_prior.z.data();

    for (std::size_t t = 0; t < T; ++t) {
        const StepTargets& st = batch.steps[t];
        StepCache& c = caches[t];
        model.encode(st.feat.data(), rows, st.edges, opt.train, rng, c.enc);
        model.dynamics(h_prev, z_prev, st.a_prev.data(), rows, st.groups, c.dyn);
        model.prior_latent(c.dyn.h.data(), rows, opt.mode, rng, false, c.prior);
        model.posterior_latent(c.dyn.h.data(), c.enc.embed.data(), rows, opt.mode, rng,
                               c.post);
        model.pool_global(c.dyn.h.data(), c.post.z.data(), st.alive.data(), lanes,
                          c.pool);
        model.decode(c.pool.s.data(), lanes, c.dec);

        kl_grad_scale[t].assign(rows, 0.0);
        for (std::size_t r = 0; r < rows; ++r) {
            if (!st.alive[r]) continue;
            double kl = categorical_kl(c.post.probs.data() + r * Z,
                                       c.prior.probs.data() + r * Z, F, K);
            if (kl > opt.free_bits) {
                kl_grad_scale[t][r] = opt.beta * denoms.inv_alive;
                loss.kl += kl * denoms.inv_alive;
            } else {
                loss.kl += opt.free_bits * denoms.inv_alive;
            }
            double dx = c.dec.pos_out[r * 2] - st.pos_t[r * 2];
            double dy = c.dec.pos_out[r * 2 + 1] - st.pos_t[r * 2 + 1];
            loss.pos += (dx * dx + dy * dy) * denoms.inv_alive;
            double de = c.dec.energy_out[r] - st.energy_t[r];
            loss.energy += de * de * denoms.inv_alive;
        }
        for (std::size_t lane = 0; lane < lanes; ++lane) {
            for (std::size_t i = 0; i < n; ++i) {
                std::size_t row = lane * n + i;
                for (std::size_t j = i + 1; j < n; ++j) {
                    std::size_t p = row * n + j;
                    if (!st.pair_m[p]) continue;
                    loss.adj += nn::bce_with_logits(c.dec.adj_logits[p], st.adj_t[p]) *
                                denoms.inv_pairs;
                }
            }
            if (st.rc_m[lane]) {
                double dr = c.dec.reward_out[lane] - st.reward_t[lane];
                loss.reward += dr * dr * denoms.inv_rc;
                loss.cont += nn::bce_with_logits(c.dec.cont_out[lane], st.cont_t[lane]) *
                             denoms.inv_rc;
                bool pred = nn::sigmoid(c.dec.cont_out[lane]) > 0.5;
                if (pred == (st.cont_t[lane] != 0)) ++loss.cont_correct;
                ++loss.cont_total;
            }
        }
        h_prev = c.dyn.h.data();
        z_prev = c.post.z.data();
    }

    loss.recon = loss.pos + loss.energy + opt.adj_weight * loss.adj;
    loss.total = loss.recon + loss.reward + loss.cont + opt.beta * loss.kl;
    check_finite(loss);
    if (!opt.backward) return loss;

    std::vector<double> dh_carry(rows * H, 0.0);
    std::vector<double> dz_carry(rows * Z, 0.0);
    std::vector<double> dh_prev(rows * H);
    std::vector<double> dz_prev(rows * Z);
    std::vector<double> dq(rows * Z);
    std::vector<double> dp(rows * Z);
    std::vector<double> dembed(rows * cfg.embed_dim());
    std::vector<double> ds(lanes * cfg.global_dim);
    std::vector<double> dpos(rows * 2);
    std::vector<double> denergy(rows);
    std::vector<double> dadj(rows * n);
    std::vector<double> dreward(lanes);
    std::vector<double> dcont(lanes);

    for (std::size_t ti = T; ti-- > 0;) {
        const StepTargets& st = batch.steps[ti];
        StepCache& c = caches[ti];

        std::fill(dpos.begin(), dpos.end(), 0.0);
        std::fill(denergy.begin(), denergy.end(), 0.0);
        std::fill(dadj.begin(), dadj.end(), 0.0);
        std::fill(dreward.begin(), dreward.end(), 0.0);
        std::fill(dcont.begin(), dcont.end(), 0.0);
        for (std::size_t r = 0; r < rows; ++r) {
            if (!st.alive[r]) continue;
            dpos[r * 2] =
                2.0 * (c.dec.pos_out[r * 2] - st.pos_t[r * 2]) * denoms.inv_alive;
            dpos[r * 2 + 1] =
                2.0 * (c.dec.pos_out[r * 2 + 1] - st.pos_t[r * 2 + 1]) * denoms.inv_alive;
            denergy[r] =
                2.0 * (c.dec.energy_out[r] - st.energy_t[r]) * denoms.inv_alive;
        }
        for (std::size_t lane = 0; lane < lanes; ++lane) {
            for (std::size_t i = 0; i < n; ++i) {
                std::size_t row = lane * n + i;
                for (std::size_t j = i + 1; j < n; ++j) {
                    std::size_t p = row * n + j;
                    if (!st.pair_m[p]) continue;
                    dadj[p] = opt.adj_weight * denoms.inv_pairs *
                              nn::bce_with_logits_grad(c.dec.adj_logits[p], st.adj_t[p]);
                }
            }
            if (st.rc_m[lane]) {
                dreward[lane] = 2.0 * (c.dec.reward_out[lane] - st.reward_t[lane]) *
                                denoms.inv_rc;
                dcont[lane] = denoms.inv_rc *
                              nn::bce_with_logits_grad(c.dec.cont_out[lane],
                                                       st.cont_t[lane]);
            }
        }

        model.decode_backward(c.pool.s.data(), lanes, c.dec, dpos.data(), denergy.data(),
                              dadj.data(), dreward.data(), dcont.data(), ds.data());
        model.pool_global_backward(c.pool, st.alive.data(), lanes, ds.data(),
                                   dh_carry.data(), dz_carry.data());

        std::fill(dq.begin(), dq.end(), 0.0);
        std::fill(dp.begin(), dp.end(), 0.0);
        for (std::size_t r = 0; r < rows; ++r) {
            double scale = kl_grad_scale[ti][r];
            if (scale == 0.0) continue;
            categorical_kl_backward(c.post.probs.data() + r * Z,
                                    c.prior.probs.data() + r * Z, scale, F, K,
                                    dq.data() + r * Z, dp.data() + r * Z);
        }
        model.posterior_latent_backward(c.post, dq.data(), dz_carry.data(), rows,
                                        dh_carry.data(), dembed.data());
        model.encode_backward(c.enc, st.edges, dembed.data());
        model.prior_latent_backward(c.dyn.h.data(), c.prior, dp.data(), nullptr, rows,
                                    dh_carry.data());

        const double* hp = ti == 0 ? h0.data() : caches[ti - 1].dyn.h.data();
        const double* zp = ti == 0 ? init_prior.z.data() : caches[ti - 1].post.z.data();
        std::fill(dz_prev.begin(), dz_prev.end(), 0.0);
        model.dynamics_backward(hp, zp, st.groups, c.dyn, dh_carry.data(),
                                dh_prev.data(), dz_prev.data());
        std::swap(dh_carry, dh_prev);
        std::swap(dz_carry, dz_prev);
    }

    std::fill(dh_prev.begin(), dh_prev.end(), 0.0);
    model.prior_latent_backward(h0.data(), init_prior, nullptr, dz_carry.data(), rows,
                                dh_prev.data());
    return loss;
}

namespace {

std::uint64_t stream_id(std::int64_t epoch, std::int64_t batch, std::int64_t chunk) {
    return splitmix64((static_cast<std::uint64_t>(epoch) << 40) ^
                      (static_cast<std::uint64_t>(batch) << 16) ^
                      static_cast<std::uint64_t>(chunk));
}

WmLoss scaled(const WmLoss& sum, double inv) {
    WmLoss out = sum;
    out.pos *= inv;
    out.energy *= inv;
    out.adj *= inv;
    out.reward *= inv;
    out.cont *= inv;
    out.kl *= inv;
    out.total *= inv;
    out.recon *= inv;
    return out;
}

}  // namespace

WmTrainResult train_wm(WorldModel& model, const data::Dataset& ds,
                       const std::map<std::string, sim::ScenarioConfig>& scenarios,
                       const WmTrainConfig& cfg) {
    if (cfg.epochs < 0) throw ConfigError("epochs must be >= 0");
    if (cfg.batch_size <= 0) throw ConfigError("batch_size must be positive");
    if (cfg.chunk_lanes <= 0) throw ConfigError("chunk_lanes must be positive");
    if (model.config().n != ds.n) {
        throw ConfigError("world model built for n=" + std::to_string(model.config().n) +
                          " but the dataset has n=" + std::to_string(ds.n));
    }
    data::BatchSampler sampler(ds, cfg.seq_len);
    std::int64_t per_pass = ds.total_transitions() /
                            (static_cast<std::int64_t>(cfg.batch_size) * cfg.seq_len);
    std::int32_t batches = cfg.batches_per_epoch > 0
                               ? cfg.batches_per_epoch
                               : static_cast<std::int32_t>(std::max<std::int64_t>(1, per_pass));

    nn::AdamConfig acfg;
    acfg.lr = cfg.lr;
    nn::Adam adam(acfg);

    WmTrainResult res;
    std::ofstream log;
    bool artifacts = !cfg.out_dir.empty();
    if (artifacts) {
        std::filesystem::create_directories(cfg.out_dir);
        res.checkpoint_path = cfg.out_dir + "/wm.ckpt";
        res.log_path = cfg.out_dir + "/wm_train.csv";
        log.open(res.log_path, std::ios::trunc);
        if (!log) throw IoError("cannot open " + res.log_path + " for writing");
        log << "epoch,pos,energy,adj,reward,cont,kl,total,recon,cont_accuracy,"
               "grad_norm\n";
        log.flush();
    }

    auto save = [&](std::int32_t epochs_done) {
        if (!artifacts) return;
        Config meta = model.config().to_meta();
        meta.set_int("train.epochs_done", epochs_done);
        meta.set("train.seed", std::to_string(cfg.seed));
        std::set<std::string> names;
        for (const auto& ep : ds.episodes) names.insert(ep.scenario);
        std::string joined;
        for (const std::string& name : names) {
            if (!joined.empty()) joined += ",";
            joined += name;
        }
        meta.set("train.scenarios", joined);
        nn::save_checkpoint(res.checkpoint_path, model.params(), meta, adam.t(), true);
    };
    save(0);

    UnrollOptions opt;
    opt.mode = LatentMode::kSample;
    opt.train = true;
    opt.backward = true;
    opt.beta = cfg.beta;
    opt.free_bits = cfg.free_bits;

    for (std::int32_t e = 0; e < cfg.epochs; ++e) {
        WmLoss epoch_sum;
        double gnorm_sum = 0.0;
        for (std::int32_t b = 0; b < batches; ++b) {
            Rng sample_rng = Rng::derived(cfg.seed, stream_id(e, b, 0));
            std::vector<data::SequenceRef> refs = sampler.sample(cfg.batch_size,
                                                                 sample_rng);
            std::vector<WindowBatch> chunks;
            std::int64_t alive_rows = 0, pair_count = 0, rc_count = 0;
            for (std::size_t start = 0; start < refs.size();
                 start += cfg.chunk_lanes) {
                std::size_t stop = std::min(refs.size(),
                                            start + static_cast<std::size_t>(cfg.chunk_lanes));
                std::vector<data::SequenceRef> part(refs.begin() + start,
                                                    refs.begin() + stop);
                chunks.push_back(build_window_batch(ds, scenarios, part, cfg.seq_len));
                alive_rows += chunks.back().alive_rows;
                pair_count += chunks.back().pair_count;
                rc_count += chunks.back().rc_count;
            }
            LossDenoms denoms = denoms_for(alive_rows, pair_count, rc_count);

            model.params().zero_grad();
            WmLoss batch_loss;
            try {
                for (std::size_t ci = 0; ci < chunks.size(); ++ci) {
                    Rng chunk_rng = Rng::derived(cfg.seed, stream_id(e, b, 1 + ci));
                    batch_loss += unroll_window_batch(model, chunks[ci], denoms, opt,
                                                      chunk_rng);
                }
            } catch (const DivergenceError& err) {
                throw DivergenceError("epoch " + std::to_string(e) + " batch " +
                                      std::to_string(b) + ": " + err.what());
            }
            gnorm_sum += model.params().clip_grad_norm(cfg.grad_clip);
            adam.step(model.params());
            epoch_sum += batch_loss;
        }

        WmEpochStats stats;
        stats.epoch = e;
        stats.loss = scaled(epoch_sum, 1.0 / batches);
        stats.grad_norm = gnorm_sum / batches;
        res.history.push_back(stats);
        if (artifacts) {
            double acc = stats.loss.cont_total > 0
                             ? static_cast<double>(stats.loss.cont_correct) /
                                   static_cast<double>(stats.loss.cont_total)
                             : 0.0;
            log << e << ',' << format_double(stats.loss.pos) << ','
                << format_double(stats.loss.energy) << ','
                << format_double(stats.loss.adj) << ','
                << format_double(stats.loss.reward) << ','
                << format_double(stats.loss.cont) << ','
                << format_double(stats.loss.kl) << ','
                << format_double(stats.loss.total) << ','
                << format_double(stats.loss.recon) << ',' << format_double(acc) << ','
                << format_double(stats.grad_norm) << '\n';
            log.flush();
        }
        save(e + 1);
    }
    return res;
}

WmTrainResult train_wm(WorldModel& model, const data::Dataset& ds,
                       const WmTrainConfig& cfg) {
    return train_wm(model, ds, resolve_scenarios(ds), cfg);
}

}  // namespace gwm::wm
