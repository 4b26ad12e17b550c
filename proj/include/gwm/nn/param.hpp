#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace gwm::nn {

// One named tensor with its gradient and optimizer moments. Layers hold
// pointers into the owning ParamStore; addresses stay stable because the
// store allocates each Param separately.
struct Param {
    std::string name;
    std::vector<double> value;
    std::vector<double> grad;
    std::vector<double> m;
    std::vector<double> v;

    std::size_t size() const { return value.size(); }
};

class ParamStore {
public:
    Param& add(const std::string& name, std::size_t size);
    Param* find(const std::string& name);
    const Param* find(const std::string& name) const;

    const std::vector<std::unique_ptr<Param>>& params() const { return params_; }
    std::size_t parameter_count() const;

    void zero_grad();
    double grad_norm() const;
    // Scales all gradients so their global norm is at most max_norm.
    // Returns the norm before clipping.
    double clip_grad_norm(double max_norm);

private:
    std::vector<std::unique_ptr<Param>> params_;
};

struct AdamConfig {
    double lr = 3e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

class Adam {
public:
    explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

    void step(ParamStore& store);

    std::int64_t t() const { return t_; }
    void set_t(std::int64_t t) { t_ = t; }
    const AdamConfig& config() const { return cfg_; }
    void set_lr(double lr) { cfg_.lr = lr; }

private:
    AdamConfig cfg_;
    std::int64_t t_ = 0;
};

}  // namespace gwm::nn
