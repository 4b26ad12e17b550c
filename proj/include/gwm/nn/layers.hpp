#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "gwm/nn/param.hpp"
#include "gwm/rng.hpp"

namespace gwm::nn {

// Layers are stateless transforms bound to parameters in a ParamStore.
// forward() writes outputs; backward() takes the same inputs the forward saw
// plus the upstream gradient, writes input gradients, and accumulates
// parameter gradients. Callers own all activation buffers so a layer can be
// applied many times (across timesteps or graph positions) before the
// matching backward calls run in reverse order.

class Linear {
public:
    Linear(ParamStore& store, const std::string& prefix, std::size_t in, std::size_t out,
           Rng& rng);

    // y(rows, out) = x(rows, in) * W^T + b
    void forward(const double* x, std::size_t rows, double* y) const;
    // dx(rows, in) = dy * W; dW += dy^T x; db += column sums of dy.
    // With acc_dx the input gradient is added instead of overwritten; dx may
    // be null when the input gradient is not needed.
    void backward(const double* x, const double* dy, std::size_t rows, double* dx,
                  bool acc_dx = false) const;

    std::size_t in() const { return in_; }
    std::size_t out() const { return out_; }

private:
    Param* w_;
    Param* b_;
    std::size_t in_;
    std::size_t out_;
};

struct LayerNormCache {
    std::vector<double> xhat;     // rows * dim
    std::vector<double> inv_std;  // rows
};

class LayerNorm {
public:
    LayerNorm(ParamStore& store, const std::string& prefix, std::size_t dim);

    void forward(const double* x, std::size_t rows, double* y, LayerNormCache& cache) const;
    void backward(const LayerNormCache& cache, const double* dy, std::size_t rows,
                  double* dx, bool acc_dx = false) const;

    std::size_t dim() const { return dim_; }

private:
    Param* gamma_;
    Param* beta_;
    std::size_t dim_;
    static constexpr double kEps = 1e-5;
};

struct Mlp2Cache {
    std::vector<double> pre;  // rows * hidden, first linear output
    std::vector<double> act;  // rows * hidden, after ELU
};

// Linear -> ELU -> Linear.
class Mlp2 {
public:
    Mlp2(ParamStore& store, const std::string& prefix, std::size_t in, std::size_t hidden,
         std::size_t out, Rng& rng);

    void forward(const double* x, std::size_t rows, double* y, Mlp2Cache& cache) const;
    void backward(const double* x, const Mlp2Cache& cache, const double* dy,
                  std::size_t rows, double* dx, bool acc_dx = false) const;

    std::size_t in() const { return l1_.in(); }
    std::size_t out() const { return l2_.out(); }

private:
    Linear l1_;
    Linear l2_;
};

void elu_forward(const double* x, double* y, std::size_t n);
// dx = dy where x > 0, dy * (y + 1) otherwise; y must be the forward output.
void elu_backward(const double* x, const double* y, const double* dy, double* dx,
                  std::size_t n, bool acc_dx = false);

// Inverted dropout: mask entries are 0 or 1/(1-p). Forward with p == 0 fills
// the mask with ones so eval paths can share code.
void dropout_forward(const double* x, double* y, double* mask, std::size_t n, double p,
                     Rng& rng);
void dropout_backward(const double* mask, const double* dy, double* dx, std::size_t n);

// Row-wise numerically stable softmax.
void softmax_forward(const double* x, double* y, std::size_t rows, std::size_t dim);
// dx = y ⊙ (dy - sum(dy ⊙ y)) per row; y is the forward output.
void softmax_backward(const double* y, const double* dy, double* dx, std::size_t rows,
                      std::size_t dim, bool acc_dx = false);

inline double sigmoid(double x) {
    return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

// Binary cross entropy on a logit, stable for large |logit|.
inline double bce_with_logits(double logit, double target) {
    return std::max(logit, 0.0) - logit * target + std::log1p(std::exp(-std::abs(logit)));
}
inline double bce_with_logits_grad(double logit, double target) {
    return sigmoid(logit) - target;
}

}  // namespace gwm::nn
