#include "gwm/nn/param.hpp"

#include <cmath>

#include "gwm/errors.hpp"
#include "gwm/kernels.hpp"

namespace gwm::nn {

Param& ParamStore::add(const std::string& name, std::size_t size) {
    if (find(name) != nullptr) throw ConfigError("param store: duplicate name " + name);
    auto p = std::make_unique<Param>();
    p->name = name;
    p->value.assign(size, 0.0);
    p->grad.assign(size, 0.0);
    params_.push_back(std::move(p));
    return *params_.back();
}

Param* ParamStore::find(const std::string& name) {
    for (auto& p : params_) {
        if (p->name == name) return p.get();
    }
    return nullptr;
}

const Param* ParamStore::find(const std::string& name) const {
    for (const auto& p : params_) {
        if (p->name == name) return p.get();
    }
    return nullptr;
}

std::size_t ParamStore::parameter_count() const {
    std::size_t total = 0;
    for (const auto& p : params_) total += p->size();
    return total;
}

void ParamStore::zero_grad() {
    for (auto& p : params_) {
        std::fill(p->grad.begin(), p->grad.end(), 0.0);
    }
}

double ParamStore::grad_norm() const {
    const auto& k = kern::backend();
    double total = 0.0;
    for (const auto& p : params_) {
        total += k.sumsq(p->grad.data(), p->grad.size());
    }
    return std::sqrt(total);
}

double ParamStore::clip_grad_norm(double max_norm) {
    double norm = grad_norm();
    if (norm > max_norm && norm > 0.0) {
        const auto& k = kern::backend();
        double scale = max_norm / norm;
        for (auto& p : params_) {
            k.scal(scale, p->grad.data(), p->grad.size());
        }
    }
    return norm;
}

void Adam::step(ParamStore& store) {
    ++t_;
    double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (auto& p : store.params()) {
        if (p->m.empty()) {
            p->m.assign(p->size(), 0.0);
            p->v.assign(p->size(), 0.0);
        }
        for (std::size_t i = 0; i < p->size(); ++i) {
            double g = p->grad[i];
            p->m[i] = cfg_.beta1 * p->m[i] + (1.0 - cfg_.beta1) * g;
            p->v[i] = cfg_.beta2 * p->v[i] + (1.0 - cfg_.beta2) * g * g;
            double mhat = p->m[i] / bc1;
            double vhat = p->v[i] / bc2;
            p->value[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
        }
    }
}

}  // namespace gwm::nn
