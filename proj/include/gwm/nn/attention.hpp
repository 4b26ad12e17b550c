#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gwm/nn/layers.hpp"
#include "gwm/nn/param.hpp"
#include "gwm/rng.hpp"

namespace gwm::nn {

// Row indices that may attend to each other; rows absent from every group get
// zero output. Groups must be disjoint.
using RowGroups = std::vector<std::vector<std::int32_t>>;

struct MhaCache {
    std::vector<double> q;
    std::vector<double> k;
    std::vector<double> v;
    std::vector<double> ctx;
    std::vector<double> alpha;               // per group: heads * m * m weights
    std::vector<std::size_t> group_offset;   // start of each group in alpha
    std::size_t rows = 0;
};

// Scaled dot-product multi-head self-attention within row groups.
class MultiheadAttention {
public:
    MultiheadAttention(ParamStore& store, const std::string& prefix, std::size_t dim,
                       std::size_t heads, Rng& rng);

    void forward(const double* x, std::size_t rows, const RowGroups& groups, double* y,
                 MhaCache& cache) const;
    void backward(const double* x, const RowGroups& groups, const MhaCache& cache,
                  const double* dy, double* dx) const;

    std::size_t dim() const { return dim_; }

private:
    Linear q_proj_;
    Linear k_proj_;
    Linear v_proj_;
    Linear o_proj_;
    std::size_t dim_;
    std::size_t heads_;
    std::size_t head_dim_;
};

}  // namespace gwm::nn
