#include "gwm/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <stdexcept>

#if defined(__x86_64__) || defined(__i386__)
#include <immintrin.h>
#define GWM_HAVE_X86 1
#else
#define GWM_HAVE_X86 0
#endif

namespace gwm::kern {

namespace {

double dot_scalar(const double* x, const double* y, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
    return acc;
}

void axpy_scalar(double a, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void scal_scalar(double a, double* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) x[i] *= a;
}

void vadd_scalar(const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += x[i];
}

void vmul_scalar(const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] *= x[i];
}

double sum_scalar(const double* x, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i];
    return acc;
}

double sumsq_scalar(const double* x, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i] * x[i];
    return acc;
}

void gemm_nt_scalar(const double* a, const double* b, double* c,
                    std::size_t m, std::size_t n, std::size_t k, bool acc) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* ai = a + i * k;
        double* ci = c + i * n;
        for (std::size_t j = 0; j < n; ++j) {
            double v = dot_scalar(ai, b + j * k, k);
            ci[j] = acc ? ci[j] + v : v;
        }
    }
}

void gemm_nn_scalar(const double* a, const double* b, double* c,
                    std::size_t m, std::size_t n, std::size_t k, bool acc) {
    for (std::size_t i = 0; i < m; ++i) {
        double* ci = c + i * n;
        if (!acc) {
            for (std::size_t j = 0; j < n; ++j) ci[j] = 0.0;
        }
        const double* ai = a + i * k;
        for (std::size_t p = 0; p < k; ++p) {
            axpy_scalar(ai[p], b + p * n, ci, n);
        }
    }
}

void gemm_tn_scalar(const double* a, const double* b, double* c,
                    std::size_t m, std::size_t n, std::size_t k, bool acc) {
    if (!acc) {
        for (std::size_t i = 0; i < m * n; ++i) c[i] = 0.0;
    }
    for (std::size_t p = 0; p < k; ++p) {
        const double* ap = a + p * m;
        const double* bp = b + p * n;
        for (std::size_t i = 0; i < m; ++i) {
            axpy_scalar(ap[i], bp, c + i * n, n);
        }
    }
}

constexpr Backend kScalar = {
    "scalar",    dot_scalar,    axpy_scalar,    scal_scalar,
    vadd_scalar, vmul_scalar,   sum_scalar,     sumsq_scalar,
    gemm_nt_scalar, gemm_nn_scalar, gemm_tn_scalar,
};

#if GWM_HAVE_X86

__attribute__((target("avx2,fma")))
double hadd4(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(lo, _mm_unpackhi_pd(lo, lo)));
}

__attribute__((target("avx2,fma")))
double dot_avx2(const double* x, const double* y, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    __m256d acc2 = _mm256_setzero_pd();
    __m256d acc3 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 16 <= n; i += 16) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4), acc1);
        acc2 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 8), _mm256_loadu_pd(y + i + 8), acc2);
        acc3 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 12), _mm256_loadu_pd(y + i + 12), acc3);
    }
    for (; i + 4 <= n; i += 4) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
    }
    acc0 = _mm256_add_pd(_mm256_add_pd(acc0, acc1), _mm256_add_pd(acc2, acc3));
    double result = hadd4(acc0);
    for (; i < n; ++i) result += x[i] * y[i];
    return result;
}

__attribute__((target("avx2,fma")))
void axpy_avx2(double a, const double* x, double* y, std::size_t n) {
    __m256d va = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
        _mm256_storeu_pd(y + i + 4, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4)));
    }
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    }
    for (; i < n; ++i) y[i] += a * x[i];
}

__attribute__((target("avx2,fma")))
void scal_avx2(double a, double* x, std::size_t n) {
    __m256d va = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(x + i, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
    }
    for (; i < n; ++i) x[i] *= a;
}

__attribute__((target("avx2,fma")))
void vadd_avx2(const double* x, double* y, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    }
    for (; i < n; ++i) y[i] += x[i];
}

__attribute__((target("avx2,fma")))
void vmul_avx2(const double* x, double* y, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(y + i, _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    }
    for (; i < n; ++i) y[i] *= x[i];
}

__attribute__((target("avx2,fma")))
double sum_avx2(const double* x, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
    double result = hadd4(acc);
    for (; i < n; ++i) result += x[i];
    return result;
}

__attribute__((target("avx2,fma")))
double sumsq_avx2(const double* x, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d v = _mm256_loadu_pd(x + i);
        acc = _mm256_fmadd_pd(v, v, acc);
    }
    double result = hadd4(acc);
    for (; i < n; ++i) result += x[i] * x[i];
    return result;
}

// Four B rows share one pass over the A row, which keeps the A row in L1 and
// quarters the traffic on B for the sizes the model uses.
__attribute__((target("avx2,fma")))
void gemm_nt_avx2(const double* a, const double* b, double* c,
                  std::size_t m, std::size_t n, std::size_t k, bool acc) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* ai = a + i * k;
        double* ci = c + i * n;
        std::size_t j = 0;
        for (; j + 4 <= n; j += 4) {
            const double* b0 = b + j * k;
            const double* b1 = b0 + k;
            const double* b2 = b1 + k;
            const double* b3 = b2 + k;
            __m256d s0 = _mm256_setzero_pd();
            __m256d s1 = _mm256_setzero_pd();
            __m256d s2 = _mm256_setzero_pd();
            __m256d s3 = _mm256_setzero_pd();
            std::size_t p = 0;
            for (; p + 4 <= k; p += 4) {
                __m256d va = _mm256_loadu_pd(ai + p);
                s0 = _mm256_fmadd_pd(va, _mm256_loadu_pd(b0 + p), s0);
                s1 = _mm256_fmadd_pd(va, _mm256_loadu_pd(b1 + p), s1);
                s2 = _mm256_fmadd_pd(va, _mm256_loadu_pd(b2 + p), s2);
                s3 = _mm256_fmadd_pd(va, _mm256_loadu_pd(b3 + p), s3);
            }
            double r0 = hadd4(s0), r1 = hadd4(s1), r2 = hadd4(s2), r3 = hadd4(s3);
            for (; p < k; ++p) {
                double av = ai[p];
                r0 += av * b0[p];
                r1 += av * b1[p];
                r2 += av * b2[p];
                r3 += av * b3[p];
            }
            if (acc) {
                ci[j] += r0; ci[j + 1] += r1; ci[j + 2] += r2; ci[j + 3] += r3;
            } else {
                ci[j] = r0; ci[j + 1] = r1; ci[j + 2] = r2; ci[j + 3] = r3;
            }
        }
        for (; j < n; ++j) {
            double v = dot_avx2(ai, b + j * k, k);
            ci[j] = acc ? ci[j] + v : v;
        }
    }
}

__attribute__((target("avx2,fma")))
void gemm_nn_avx2(const double* a, const double* b, double* c,
                  std::size_t m, std::size_t n, std::size_t k, bool acc) {
    for (std::size_t i = 0; i < m; ++i) {
        double* ci = c + i * n;
        if (!acc) {
            for (std::size_t j = 0; j < n; ++j) ci[j] = 0.0;
        }
        const double* ai = a + i * k;
        std::size_t p = 0;
        for (; p + 2 <= k; p += 2) {
            __m256d va0 = _mm256_set1_pd(ai[p]);
            __m256d va1 = _mm256_set1_pd(ai[p + 1]);
            const double* b0 = b + p * n;
            const double* b1 = b0 + n;
            std::size_t j = 0;
            for (; j + 4 <= n; j += 4) {
                __m256d v = _mm256_loadu_pd(ci + j);
                v = _mm256_fmadd_pd(va0, _mm256_loadu_pd(b0 + j), v);
                v = _mm256_fmadd_pd(va1, _mm256_loadu_pd(b1 + j), v);
                _mm256_storeu_pd(ci + j, v);
            }
            for (; j < n; ++j) ci[j] += ai[p] * b0[j] + ai[p + 1] * b1[j];
        }
        for (; p < k; ++p) axpy_avx2(ai[p], b + p * n, ci, n);
    }
}

__attribute__((target("avx2,fma")))
void gemm_tn_avx2(const double* a, const double* b, double* c,
                  std::size_t m, std::size_t n, std::size_t k, bool acc) {
    if (!acc) {
        for (std::size_t i = 0; i < m * n; ++i) c[i] = 0.0;
    }
    for (std::size_t p = 0; p < k; ++p) {
        const double* ap = a + p * m;
        const double* bp = b + p * n;
        for (std::size_t i = 0; i < m; ++i) {
            axpy_avx2(ap[i], bp, c + i * n, n);
        }
    }
}

constexpr Backend kAvx2 = {
    "avx2",    dot_avx2,    axpy_avx2,    scal_avx2,
    vadd_avx2, vmul_avx2,   sum_avx2,     sumsq_avx2,
    gemm_nt_avx2, gemm_nn_avx2, gemm_tn_avx2,
};

bool cpu_has_avx2() {
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
}

#else

bool cpu_has_avx2() { return false; }

#endif  // GWM_HAVE_X86

std::atomic<const Backend*> g_backend{nullptr};

const Backend* resolve(const std::string& name) {
    if (name == "scalar") return &kScalar;
#if GWM_HAVE_X86
    if (name == "avx2") {
        if (!cpu_has_avx2()) throw std::runtime_error("kernels: cpu lacks avx2/fma");
        return &kAvx2;
    }
#else
    if (name == "avx2") throw std::runtime_error("kernels: avx2 backend requires x86");
#endif
    if (name == "auto") {
#if GWM_HAVE_X86
        if (cpu_has_avx2()) return &kAvx2;
#endif
        return &kScalar;
    }
    throw std::invalid_argument("kernels: unknown backend '" + name + "'");
}

}  // namespace

const Backend& backend() {
    const Backend* b = g_backend.load(std::memory_order_acquire);
    if (b == nullptr) {
        const char* env = std::getenv("GWM_KERNELS");
        b = resolve(env != nullptr ? env : "auto");
        g_backend.store(b, std::memory_order_release);
    }
    return *b;
}

void set_backend(const std::string& name) {
    g_backend.store(resolve(name), std::memory_order_release);
}

std::vector<std::string> available_backends() {
    std::vector<std::string> out{"scalar"};
    if (cpu_has_avx2()) out.push_back("avx2");
    return out;
}

const Backend& scalar_backend() { return kScalar; }

}  // namespace gwm::kern
