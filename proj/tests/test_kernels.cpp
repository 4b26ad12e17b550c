#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "gwm/kernels.hpp"
#include "gwm/rng.hpp"

using gwm::kern::Backend;

namespace {

std::vector<double> random_vec(gwm::Rng& rng, std::size_t n) {
    std::vector<double> v(n);
    for (auto& x : v) x = rng.uniform(-2.0, 2.0);
    return v;
}

void check_close(double a, double b, double tol) {
    double scale = std::max({std::abs(a), std::abs(b), 1.0});
    CHECK(std::abs(a - b) <= tol * scale);
}

void check_all_close(const std::vector<double>& a, const std::vector<double>& b, double tol) {
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) check_close(a[i], b[i], tol);
}

// Summation order differs between backends, so comparisons use a small
// relative tolerance rather than exact equality.
constexpr double kTol = 1e-12;

void compare_backends(const Backend& ref, const Backend& alt) {
    gwm::Rng rng(1234);
    for (std::size_t n : {0u, 1u, 3u, 4u, 7u, 16u, 33u, 257u}) {
        auto x = random_vec(rng, n);
        auto y = random_vec(rng, n);

        check_close(ref.dot(x.data(), y.data(), n), alt.dot(x.data(), y.data(), n), kTol);
        check_close(ref.sum(x.data(), n), alt.sum(x.data(), n), kTol);
        check_close(ref.sumsq(x.data(), n), alt.sumsq(x.data(), n), kTol);

        auto y1 = y, y2 = y;
        ref.axpy(0.37, x.data(), y1.data(), n);
        alt.axpy(0.37, x.data(), y2.data(), n);
        check_all_close(y1, y2, kTol);

        y1 = y;
        y2 = y;
        ref.scal(-1.25, y1.data(), n);
        alt.scal(-1.25, y2.data(), n);
        check_all_close(y1, y2, kTol);

        y1 = y;
        y2 = y;
        ref.vadd(x.data(), y1.data(), n);
        alt.vadd(x.data(), y2.data(), n);
        check_all_close(y1, y2, kTol);

        y1 = y;
        y2 = y;
        ref.vmul(x.data(), y1.data(), n);
        alt.vmul(x.data(), y2.data(), n);
        check_all_close(y1, y2, kTol);
    }

    struct Shape {
        std::size_t m, n, k;
    };
    for (Shape sh : {Shape{1, 1, 1}, Shape{2, 3, 4}, Shape{5, 7, 9}, Shape{16, 16, 16},
                     Shape{33, 17, 65}, Shape{4, 31, 130}}) {
        auto a_nt = random_vec(rng, sh.m * sh.k);
        auto b_nt = random_vec(rng, sh.n * sh.k);
        for (bool acc : {false, true}) {
            auto c1 = random_vec(rng, sh.m * sh.n);
            auto c2 = c1;
            ref.gemm_nt(a_nt.data(), b_nt.data(), c1.data(), sh.m, sh.n, sh.k, acc);
            alt.gemm_nt(a_nt.data(), b_nt.data(), c2.data(), sh.m, sh.n, sh.k, acc);
            check_all_close(c1, c2, kTol);
        }

        auto a_nn = random_vec(rng, sh.m * sh.k);
        auto b_nn = random_vec(rng, sh.k * sh.n);
        for (bool acc : {false, true}) {
            auto c1 = random_vec(rng, sh.m * sh.n);
            auto c2 = c1;
            ref.gemm_nn(a_nn.data(), b_nn.data(), c1.data(), sh.m, sh.n, sh.k, acc);
            alt.gemm_nn(a_nn.data(), b_nn.data(), c2.data(), sh.m, sh.n, sh.k, acc);
            check_all_close(c1, c2, kTol);
        }

        auto a_tn = random_vec(rng, sh.k * sh.m);
        auto b_tn = random_vec(rng, sh.k * sh.n);
        for (bool acc : {false, true}) {
            auto c1 = random_vec(rng, sh.m * sh.n);
            auto c2 = c1;
            ref.gemm_tn(a_tn.data(), b_tn.data(), c1.data(), sh.m, sh.n, sh.k, acc);
            alt.gemm_tn(a_tn.data(), b_tn.data(), c2.data(), sh.m, sh.n, sh.k, acc);
            check_all_close(c1, c2, kTol);
        }
    }
}

}  // namespace

TEST_CASE("scalar kernels match naive oracles") {
    const Backend& k = gwm::kern::scalar_backend();
    gwm::Rng rng(77);
    auto x = random_vec(rng, 55);
    auto y = random_vec(rng, 55);

    double dot = 0.0, sum = 0.0, sumsq = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        dot += x[i] * y[i];
        sum += x[i];
        sumsq += x[i] * x[i];
    }
    CHECK(k.dot(x.data(), y.data(), x.size()) == doctest::Approx(dot).epsilon(1e-12));
    CHECK(k.sum(x.data(), x.size()) == doctest::Approx(sum).epsilon(1e-12));
    CHECK(k.sumsq(x.data(), x.size()) == doctest::Approx(sumsq).epsilon(1e-12));

    std::size_t m = 3, n = 4, p = 5;
    auto a = random_vec(rng, m * p);
    auto b = random_vec(rng, n * p);
    std::vector<double> c(m * n, 0.0);
    k.gemm_nt(a.data(), b.data(), c.data(), m, n, p, false);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double want = 0.0;
            for (std::size_t q = 0; q < p; ++q) want += a[i * p + q] * b[j * p + q];
            CHECK(c[i * n + j] == doctest::Approx(want).epsilon(1e-12));
        }
    }

    auto b2 = random_vec(rng, p * n);
    std::vector<double> c2(m * n, 0.0);
    k.gemm_nn(a.data(), b2.data(), c2.data(), m, n, p, false);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double want = 0.0;
            for (std::size_t q = 0; q < p; ++q) want += a[i * p + q] * b2[q * n + j];
            CHECK(c2[i * n + j] == doctest::Approx(want).epsilon(1e-12));
        }
    }

    auto a3 = random_vec(rng, p * m);
    std::vector<double> c3(m * n, 0.0);
    k.gemm_tn(a3.data(), b2.data(), c3.data(), m, n, p, false);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double want = 0.0;
            for (std::size_t q = 0; q < p; ++q) want += a3[q * m + i] * b2[q * n + j];
            CHECK(c3[i * n + j] == doctest::Approx(want).epsilon(1e-12));
        }
    }
}

TEST_CASE("simd backends agree with scalar") {
    const Backend& scalar = gwm::kern::scalar_backend();
    for (const auto& name : gwm::kern::available_backends()) {
        if (name == "scalar") continue;
        gwm::kern::set_backend(name);
        INFO("backend ", name);
        compare_backends(scalar, gwm::kern::backend());
    }
    gwm::kern::set_backend("auto");
}

TEST_CASE("backend selection respects overrides") {
    gwm::kern::set_backend("scalar");
    CHECK(std::string(gwm::kern::backend().name) == "scalar");
    CHECK_THROWS(gwm::kern::set_backend("no_such_backend"));
    gwm::kern::set_backend("auto");
    bool found = false;
    for (const auto& name : gwm::kern::available_backends()) {
        if (name == gwm::kern::backend().name) found = true;
    }
    CHECK(found);
}
