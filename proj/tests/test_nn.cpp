#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <vector>

#include "gwm/config.hpp"
#include "gwm/errors.hpp"
#include "gwm/nn/attention.hpp"
#include "gwm/nn/checkpoint.hpp"
#include "gwm/nn/gatv2.hpp"
#include "gwm/nn/gru.hpp"
#include "gwm/nn/layers.hpp"
#include "gwm/nn/param.hpp"
#include "gwm/rng.hpp"

using namespace gwm;
using namespace gwm::nn;

namespace {

// Central difference of loss() with respect to one scalar slot.
double fd(const std::function<double()>& loss, double* slot, double h = 1e-6) {
    double orig = *slot;
    *slot = orig + h;
    double up = loss();
    *slot = orig - h;
    double down = loss();
    *slot = orig;
    return (up - down) / (2.0 * h);
}

// Relative error with an absolute floor so true-zero gradients are not
// compared against central-difference noise (~1e-10 for O(1) losses).
void check_close(double analytic, double numeric) {
    double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-4});
    CHECK(std::abs(analytic - numeric) / denom <= 1e-4);
}

// Compares every parameter gradient in the store against finite differences.
void check_param_grads(ParamStore& store, const std::function<double()>& loss) {
    for (auto& p : store.params()) {
        for (std::size_t i = 0; i < p->size(); ++i) {
            check_close(p->grad[i], fd(loss, &p->value[i]));
        }
    }
}

void check_buffer_grads(const std::function<double()>& loss, double* buf,
                        const double* analytic, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        check_close(analytic[i], fd(loss, &buf[i]));
    }
}

std::vector<double> random_vec(std::size_t n, Rng& rng, double scale = 1.0) {
    std::vector<double> v(n);
    for (double& x : v) x = rng.uniform(-scale, scale);
    return v;
}

double weighted_sum(const std::vector<double>& c, const std::vector<double>& y) {
    double total = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) total += c[i] * y[i];
    return total;
}

}  // namespace

TEST_CASE("param store bookkeeping") {
    ParamStore store;
    auto& a = store.add("a", 3);
    store.add("b", 2);
    CHECK(store.parameter_count() == 5);
    CHECK(store.find("a") == &a);
    CHECK(store.find("missing") == nullptr);
    CHECK_THROWS_AS(store.add("a", 1), ConfigError);

    a.grad = {3.0, 0.0, 4.0};
    store.find("b")->grad = {0.0, 0.0};
    CHECK(store.grad_norm() == doctest::Approx(5.0));

    double norm = store.clip_grad_norm(1.0);
    CHECK(norm == doctest::Approx(5.0));
    CHECK(store.grad_norm() == doctest::Approx(1.0));
    CHECK(a.grad[0] == doctest::Approx(0.6));

    store.zero_grad();
    CHECK(store.grad_norm() == 0.0);
}

TEST_CASE("adam matches the closed form for a constant gradient") {
    ParamStore store;
    auto& p = store.add("p", 2);
    p.value = {1.0, -2.0};
    Adam adam(AdamConfig{0.1, 0.9, 0.999, 1e-8});

    // With a constant gradient the bias corrections cancel exactly, so each
    // step moves by lr * g / (|g| + eps).
    for (int step = 1; step <= 3; ++step) {
        p.grad = {0.5, -0.25};
        adam.step(store);
        CHECK(adam.t() == step);
        CHECK(p.value[0] ==
              doctest::Approx(1.0 - step * 0.1 * 0.5 / (0.5 + 1e-8)).epsilon(1e-12));
        CHECK(p.value[1] ==
              doctest::Approx(-2.0 + step * 0.1 * 0.25 / (0.25 + 1e-8)).epsilon(1e-12));
    }
}

TEST_CASE("linear gradients match finite differences") {
    ParamStore store;
    Rng rng(11);
    Linear lin(store, "lin", 5, 4, rng);
    auto x = random_vec(3 * 5, rng);
    auto c = random_vec(3 * 4, rng);
    std::vector<double> y(3 * 4);

    auto loss = [&] {
        lin.forward(x.data(), 3, y.data());
        return weighted_sum(c, y);
    };
    loss();
    std::vector<double> dx(x.size());
    store.zero_grad();
    lin.backward(x.data(), c.data(), 3, dx.data());

    check_param_grads(store, loss);
    check_buffer_grads(loss, x.data(), dx.data(), x.size());
}

TEST_CASE("linear backward can skip or accumulate input gradients") {
    ParamStore store;
    Rng rng(3);
    Linear lin(store, "lin", 3, 2, rng);
    auto x = random_vec(2 * 3, rng);
    auto dy = random_vec(2 * 2, rng);
    lin.backward(x.data(), dy.data(), 2, nullptr);

    std::vector<double> dx(x.size(), 1.0);
    lin.backward(x.data(), dy.data(), 2, dx.data(), false);
    std::vector<double> acc(x.size(), 1.0);
    lin.backward(x.data(), dy.data(), 2, acc.data(), true);
    for (std::size_t i = 0; i < x.size(); ++i) {
        CHECK(acc[i] == doctest::Approx(1.0 + dx[i]));
    }
}

TEST_CASE("layer norm gradients match finite differences") {
    ParamStore store;
    Rng rng(5);
    LayerNorm ln(store, "ln", 6);
    // Nudge gamma and beta off their init so their gradients are generic.
    for (auto& p : store.params()) {
        for (double& v : p->value) v += rng.uniform(-0.3, 0.3);
    }
    auto x = random_vec(3 * 6, rng, 2.0);
    auto c = random_vec(3 * 6, rng);
    std::vector<double> y(3 * 6);
    LayerNormCache cache;

    auto loss = [&] {
        ln.forward(x.data(), 3, y.data(), cache);
        return weighted_sum(c, y);
    };
    loss();
    std::vector<double> dx(x.size());
    store.zero_grad();
    ln.backward(cache, c.data(), 3, dx.data());

    check_param_grads(store, loss);
    check_buffer_grads(loss, x.data(), dx.data(), x.size());
}

TEST_CASE("layer norm output is standardized") {
    ParamStore store;
    LayerNorm ln(store, "ln", 8);
    Rng rng(9);
    auto x = random_vec(2 * 8, rng, 5.0);
    std::vector<double> y(2 * 8);
    LayerNormCache cache;
    ln.forward(x.data(), 2, y.data(), cache);
    for (int r = 0; r < 2; ++r) {
        double mean = 0.0, var = 0.0;
        for (int i = 0; i < 8; ++i) mean += y[r * 8 + i];
        mean /= 8.0;
        for (int i = 0; i < 8; ++i) {
            var += (y[r * 8 + i] - mean) * (y[r * 8 + i] - mean);
        }
        var /= 8.0;
        CHECK(mean == doctest::Approx(0.0).epsilon(1e-9));
        CHECK(var == doctest::Approx(1.0).epsilon(1e-3));
    }
}

TEST_CASE("elu gradients match finite differences") {
    Rng rng(7);
    auto x = random_vec(10, rng, 2.0);
    auto c = random_vec(10, rng);
    std::vector<double> y(10);

    auto loss = [&] {
        elu_forward(x.data(), y.data(), 10);
        return weighted_sum(c, y);
    };
    loss();
    std::vector<double> dx(10);
    elu_backward(x.data(), y.data(), c.data(), dx.data(), 10);
    check_buffer_grads(loss, x.data(), dx.data(), 10);

    CHECK(y[0] == (x[0] > 0.0 ? x[0] : std::exp(x[0]) - 1.0));
}

TEST_CASE("dropout is inverted and deterministic under a fixed seed") {
    Rng data_rng(13);
    auto x = random_vec(64, data_rng);
    auto c = random_vec(64, data_rng);
    std::vector<double> y(64), mask(64);

    auto loss = [&] {
        Rng rng(21);
        dropout_forward(x.data(), y.data(), mask.data(), 64, 0.3, rng);
        return weighted_sum(c, y);
    };
    loss();
    int dropped = 0;
    for (double m : mask) {
        if (m == 0.0) {
            ++dropped;
        } else {
            CHECK(m == doctest::Approx(1.0 / 0.7));
        }
    }
    CHECK(dropped > 5);
    CHECK(dropped < 40);

    std::vector<double> dx(64);
    dropout_backward(mask.data(), c.data(), dx.data(), 64);
    check_buffer_grads(loss, x.data(), dx.data(), 64);

    // p = 0 is the identity and fills the mask with ones.
    Rng rng(1);
    dropout_forward(x.data(), y.data(), mask.data(), 64, 0.0, rng);
    CHECK(y == x);
    for (double m : mask) CHECK(m == 1.0);
}

TEST_CASE("softmax rows are distributions and gradients check out") {
    Rng rng(17);
    auto x = random_vec(2 * 5, rng, 3.0);
    auto c = random_vec(2 * 5, rng);
    std::vector<double> y(2 * 5);

    auto loss = [&] {
        softmax_forward(x.data(), y.data(), 2, 5);
        return weighted_sum(c, y);
    };
    loss();
    for (int r = 0; r < 2; ++r) {
        double total = 0.0;
        for (int i = 0; i < 5; ++i) {
            CHECK(y[r * 5 + i] > 0.0);
            total += y[r * 5 + i];
        }
        CHECK(total == doctest::Approx(1.0));
    }

    std::vector<double> dx(x.size());
    softmax_backward(y.data(), c.data(), dx.data(), 2, 5);
    check_buffer_grads(loss, x.data(), dx.data(), x.size());

    // Extreme logits stay finite.
    std::vector<double> big = {1000.0, -1000.0, 999.0};
    std::vector<double> yb(3);
    softmax_forward(big.data(), yb.data(), 1, 3);
    CHECK(std::isfinite(yb[0]));
    CHECK(yb[0] + yb[1] + yb[2] == doctest::Approx(1.0));
}

TEST_CASE("stable sigmoid and binary cross entropy") {
    CHECK(sigmoid(0.0) == doctest::Approx(0.5));
    CHECK(sigmoid(1000.0) == doctest::Approx(1.0));
    CHECK(sigmoid(-1000.0) == doctest::Approx(0.0));

    for (double logit : {-3.0, -0.5, 0.0, 0.7, 4.0}) {
        for (double target : {0.0, 0.3, 1.0}) {
            double p = sigmoid(logit);
            double naive = -target * std::log(p) - (1.0 - target) * std::log(1.0 - p);
            CHECK(bce_with_logits(logit, target) == doctest::Approx(naive));

            double slot = logit;
            auto loss = [&] { return bce_with_logits(slot, target); };
            check_close(bce_with_logits_grad(slot, target), fd(loss, &slot));
        }
    }
    CHECK(std::isfinite(bce_with_logits(1e4, 0.0)));
    CHECK(std::isfinite(bce_with_logits(-1e4, 1.0)));
}

TEST_CASE("gru gradients match finite differences") {
    ParamStore store;
    Rng rng(23);
    GruCell gru(store, "gru", 4, 5, rng);
    auto x = random_vec(3 * 4, rng);
    auto h = random_vec(3 * 5, rng);
    auto c = random_vec(3 * 5, rng);
    std::vector<double> h_out(3 * 5);
    GruCache cache;

    auto loss = [&] {
        gru.forward(x.data(), h.data(), 3, h_out.data(), cache);
        return weighted_sum(c, h_out);
    };
    loss();
    std::vector<double> dx(x.size());
    std::vector<double> dh(h.size());
    store.zero_grad();
    gru.backward(x.data(), h.data(), cache, c.data(), 3, dx.data(), dh.data());

    check_param_grads(store, loss);
    check_buffer_grads(loss, x.data(), dx.data(), x.size());
    check_buffer_grads(loss, h.data(), dh.data(), h.size());
}

TEST_CASE("gru keeps state when update gate saturates") {
    ParamStore store;
    Rng rng(29);
    GruCell gru(store, "gru", 2, 3, rng);
    // Huge update-gate bias forces z ~ 1, so h' ~ h regardless of input.
    Param* b_ih = store.find("gru.b_ih");
    for (int i = 3; i < 6; ++i) b_ih->value[i] = 50.0;

    auto x = random_vec(2, rng);
    std::vector<double> h = {0.3, -0.7, 1.1};
    std::vector<double> h_out(3);
    GruCache cache;
    gru.forward(x.data(), h.data(), 1, h_out.data(), cache);
    for (int i = 0; i < 3; ++i) {
        CHECK(h_out[i] == doctest::Approx(h[i]).epsilon(1e-9));
    }
}

TEST_CASE("attention gradients match finite differences") {
    ParamStore store;
    Rng rng(31);
    MultiheadAttention mha(store, "mha", 8, 2, rng);
    std::size_t rows = 6;
    auto x = random_vec(rows * 8, rng);
    auto c = random_vec(rows * 8, rng);
    std::vector<double> y(rows * 8);
    RowGroups groups = {{0, 2, 4}, {1, 5}};
    MhaCache cache;

    auto loss = [&] {
        mha.forward(x.data(), rows, groups, y.data(), cache);
        return weighted_sum(c, y);
    };
    loss();
    // Row 3 sits in no group and must stay silent.
    for (int i = 0; i < 8; ++i) CHECK(y[3 * 8 + i] == 0.0);

    std::vector<double> dx(x.size());
    store.zero_grad();
    mha.backward(x.data(), groups, cache, c.data(), dx.data());

    check_param_grads(store, loss);
    check_buffer_grads(loss, x.data(), dx.data(), x.size());
}

TEST_CASE("attention within a singleton group reduces to the value path") {
    ParamStore store;
    Rng rng(37);
    MultiheadAttention mha(store, "mha", 4, 2, rng);
    auto x = random_vec(4, rng);
    std::vector<double> y_single(4);
    MhaCache cache;
    RowGroups one = {{0}};
    mha.forward(x.data(), 1, one, y_single.data(), cache);
    // With one row the attention weight is exactly 1, so the output is
    // o_proj(v_proj(x)) whatever the scores are.
    for (double a : cache.alpha) CHECK(a == doctest::Approx(1.0));
}

TEST_CASE("gatv2 gradients match finite differences") {
    ParamStore store;
    Rng rng(41);
    Gatv2Layer gat(store, "gat", 4, 3, 2, 1, rng);
    std::size_t rows = 5;
    auto x = random_vec(rows * 4, rng);

    GraphEdges edges;
    edges.src = {0, 1, 2, 1, 0, 2, 3, 3};
    edges.dst_ptr = {0, 3, 5, 7, 8, 8};
    edges.feat = random_vec(edges.src.size(), rng);

    auto c = random_vec(rows * 6, rng);
    std::vector<double> y(rows * 6);
    Gatv2Cache cache;

    auto loss = [&] {
        gat.forward(x.data(), rows, edges, y.data(), cache);
        return weighted_sum(c, y);
    };
    loss();
    // Row 4 has no in-edges: all-zero output, not even a bias.
    for (int i = 0; i < 6; ++i) CHECK(y[4 * 6 + i] == 0.0);

    std::vector<double> dx(x.size());
    store.zero_grad();
    gat.backward(x.data(), rows, edges, cache, c.data(), dx.data());

    check_param_grads(store, loss);
    check_buffer_grads(loss, x.data(), dx.data(), x.size());
}

TEST_CASE("gatv2 attention normalizes over each row's in-edges") {
    ParamStore store;
    Rng rng(43);
    Gatv2Layer gat(store, "gat", 3, 2, 2, 1, rng);
    std::vector<double> x = random_vec(3 * 3, rng);
    GraphEdges edges;
    edges.src = {0, 1, 2, 1};
    edges.dst_ptr = {0, 3, 4, 4};
    edges.feat = {0.1, -0.2, 0.3, 0.0};
    std::vector<double> y(3 * 4);
    Gatv2Cache cache;
    gat.forward(x.data(), 3, edges, y.data(), cache);

    for (std::size_t h = 0; h < 2; ++h) {
        double total = 0.0;
        for (std::size_t e = 0; e < 3; ++e) total += cache.alpha[e * 2 + h];
        CHECK(total == doctest::Approx(1.0));
        CHECK(cache.alpha[3 * 2 + h] == doctest::Approx(1.0));
    }

    GraphEdges bad = edges;
    bad.dst_ptr.pop_back();
    CHECK_THROWS_AS(gat.forward(x.data(), 3, bad, y.data(), cache), ConfigError);
}

TEST_CASE("checkpoints round trip parameters and optimizer state") {
    auto dir = std::filesystem::temp_directory_path() / "gwm_nn_test";
    std::filesystem::create_directories(dir);
    auto path = (dir / "model.gwmckpt").string();

    auto build = [](ParamStore& store) {
        Rng rng(47);
        store.add("enc.w", 6);
        store.add("enc.b", 2);
        for (auto& p : store.params()) {
            for (double& v : p->value) v = rng.uniform(-1.0, 1.0);
        }
    };

    ParamStore a;
    build(a);
    Adam adam(AdamConfig{0.01});
    for (auto& p : a.params()) {
        for (double& g : p->grad) g = 0.5;
    }
    adam.step(a);

    Config meta;
    meta.set("arch", "test");
    meta.set_int("hidden", 2);
    save_checkpoint(path, a, meta, adam.t(), true);

    ParamStore b;
    Rng rng2(99);
    b.add("enc.w", 6);
    b.add("enc.b", 2);
    auto info = load_checkpoint(path, b);
    CHECK(info.adam_t == 1);
    CHECK(info.has_optimizer_state);
    CHECK(info.metadata.get_string("arch") == "test");
    CHECK(info.metadata.get_int("hidden") == 2);
    for (std::size_t i = 0; i < a.params().size(); ++i) {
        CHECK(a.params()[i]->value == b.params()[i]->value);
        CHECK(a.params()[i]->m == b.params()[i]->m);
        CHECK(a.params()[i]->v == b.params()[i]->v);
    }
    CHECK(read_checkpoint_metadata(path).get_string("arch") == "test");

    // Same file twice is byte-identical.
    auto path2 = (dir / "model2.gwmckpt").string();
    save_checkpoint(path2, a, meta, adam.t(), true);
    std::ifstream f1(path, std::ios::binary), f2(path2, std::ios::binary);
    std::vector<char> c1((std::istreambuf_iterator<char>(f1)),
                         std::istreambuf_iterator<char>());
    std::vector<char> c2((std::istreambuf_iterator<char>(f2)),
                         std::istreambuf_iterator<char>());
    CHECK(c1 == c2);

    SUBCASE("shape mismatch is rejected") {
        ParamStore c;
        c.add("enc.w", 5);
        c.add("enc.b", 2);
        CHECK_THROWS_AS(load_checkpoint(path, c), ConfigError);
    }
    SUBCASE("name mismatch is rejected") {
        ParamStore c;
        c.add("enc.w", 6);
        c.add("dec.b", 2);
        CHECK_THROWS_AS(load_checkpoint(path, c), ConfigError);
    }
    SUBCASE("tensor count mismatch is rejected") {
        ParamStore c;
        c.add("enc.w", 6);
        CHECK_THROWS_AS(load_checkpoint(path, c), ConfigError);
    }
    SUBCASE("corruption is detected") {
        std::ifstream in(path, std::ios::binary);
        std::vector<char> bytes((std::istreambuf_iterator<char>(in)),
                                std::istreambuf_iterator<char>());
        in.close();
        bytes[bytes.size() / 2] ^= 0x01;
        auto bad = (dir / "bad.gwmckpt").string();
        std::ofstream out(bad, std::ios::binary);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        out.close();
        ParamStore c;
        build(c);
        CHECK_THROWS_AS(load_checkpoint(bad, c), ChecksumError);
    }

    std::filesystem::remove_all(dir);
}
