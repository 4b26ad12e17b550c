#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gwm/nn/param.hpp"
#include "gwm/rng.hpp"

namespace gwm::nn {

// Edges grouped by destination row in CSR form: the in-edges of row i occupy
// [dst_ptr[i], dst_ptr[i+1]) in src/feat. Attention normalizes over each
// row's in-edges, so rows that should see themselves need an explicit
// self-loop edge (zero edge features by convention).
struct GraphEdges {
    std::vector<std::int32_t> src;
    std::vector<std::size_t> dst_ptr;  // rows + 1 offsets
    std::vector<double> feat;          // edge_count * edge_dim
};

struct Gatv2Cache {
    std::vector<double> xs;     // rows * heads * out, source projections
    std::vector<double> xt;     // rows * heads * out, target projections
    std::vector<double> xe;     // edges * heads * out, edge projections
    std::vector<double> alpha;  // edges * heads
};

// Graph attention with the scoring order that keeps attention input-dependent:
// score(j -> i) = a . leaky_relu(xs_j + xt_i + xe_ij), alpha softmax-normalized
// over i's in-edges, out_i = sum_j alpha_ij xs_j (heads concatenated) + bias.
class Gatv2Layer {
public:
    Gatv2Layer(ParamStore& store, const std::string& prefix, std::size_t in,
               std::size_t out_per_head, std::size_t heads, std::size_t edge_dim,
               Rng& rng);

    // y has rows * heads * out_per_head entries. Rows with no in-edges
    // produce zeros.
    void forward(const double* x, std::size_t rows, const GraphEdges& edges, double* y,
                 Gatv2Cache& cache) const;
    // dx is written; edge features are treated as constants.
    void backward(const double* x, std::size_t rows, const GraphEdges& edges,
                  const Gatv2Cache& cache, const double* dy, double* dx) const;

    std::size_t out_dim() const { return heads_ * out_; }

private:
    Param* w_src_;   // (heads*out) x in
    Param* w_dst_;   // (heads*out) x in
    Param* w_edge_;  // (heads*out) x edge_dim
    Param* b_src_;   // heads*out
    Param* b_dst_;   // heads*out
    Param* att_;     // heads x out
    Param* bias_;    // heads*out
    std::size_t in_;
    std::size_t out_;
    std::size_t heads_;
    std::size_t edge_dim_;
    static constexpr double kNegativeSlope = 0.2;
};

}  // namespace gwm::nn
