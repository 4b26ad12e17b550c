#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace gwm::kern {

// Dense double-precision primitives behind a runtime-selected backend.
// All matrices are row-major. gemm shape conventions:
//   gemm_nt: C(M,N) = A(M,K) * B(N,K)^T
//   gemm_nn: C(M,N) = A(M,K) * B(K,N)
//   gemm_tn: C(M,N) = A(K,M)^T * B(K,N)
// With acc=true the product is added into C, otherwise C is overwritten.
struct Backend {
    const char* name;
    double (*dot)(const double* x, const double* y, std::size_t n);
    void (*axpy)(double a, const double* x, double* y, std::size_t n);
    void (*scal)(double a, double* x, std::size_t n);
    void (*vadd)(const double* x, double* y, std::size_t n);
    void (*vmul)(const double* x, double* y, std::size_t n);
    double (*sum)(const double* x, std::size_t n);
    double (*sumsq)(const double* x, std::size_t n);
    void (*gemm_nt)(const double* a, const double* b, double* c,
                    std::size_t m, std::size_t n, std::size_t k, bool acc);
    void (*gemm_nn)(const double* a, const double* b, double* c,
                    std::size_t m, std::size_t n, std::size_t k, bool acc);
    void (*gemm_tn)(const double* a, const double* b, double* c,
                    std::size_t m, std::size_t n, std::size_t k, bool acc);
};

// Backend currently in effect. Resolved once on first call: the GWM_KERNELS
// environment variable ("scalar" or "avx2") wins, otherwise the best backend
// the CPU supports is picked.
const Backend& backend();

// Forces a specific backend ("scalar", "avx2", or "auto"). Throws
// std::invalid_argument for unknown names and std::runtime_error if the CPU
// lacks the requested instruction set.
void set_backend(const std::string& name);

// Backends usable on this machine, scalar first.
std::vector<std::string> available_backends();

const Backend& scalar_backend();

}  // namespace gwm::kern
