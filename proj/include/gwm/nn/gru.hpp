#pragma once

#include <string>
#include <vector>

#include "gwm/nn/param.hpp"
#include "gwm/rng.hpp"

namespace gwm::nn {

struct GruCache {
    std::vector<double> gi;  // rows * 3H input-side pre-activations [r z n]
    std::vector<double> gh;  // rows * 3H hidden-side pre-activations [r z n]
    std::vector<double> r;   // rows * H
    std::vector<double> z;   // rows * H
    std::vector<double> n;   // rows * H
};

// Gated recurrent unit cell:
//   r = sigmoid(W_ir x + b_ir + W_hr h + b_hr)
//   z = sigmoid(W_iz x + b_iz + W_hz h + b_hz)
//   n = tanh(W_in x + b_in + r * (W_hn h + b_hn))
//   h' = (1 - z) * n + z * h
class GruCell {
public:
    GruCell(ParamStore& store, const std::string& prefix, std::size_t in,
            std::size_t hidden, Rng& rng);

    void forward(const double* x, const double* h, std::size_t rows, double* h_out,
                 GruCache& cache) const;
    // dx and dh_in are written; dh_in must receive the full gradient flowing
    // to the previous hidden state. Parameter gradients accumulate.
    void backward(const double* x, const double* h, const GruCache& cache,
                  const double* dh_out, std::size_t rows, double* dx,
                  double* dh_in) const;

    std::size_t in() const { return in_; }
    std::size_t hidden() const { return hidden_; }

private:
    Param* w_ih_;  // 3H x in
    Param* w_hh_;  // 3H x H
    Param* b_ih_;  // 3H
    Param* b_hh_;  // 3H
    std::size_t in_;
    std::size_t hidden_;
};

}  // namespace gwm::nn
