#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "genlab/error.hpp"
#include "genlab/nn/mlp.hpp"
#include "genlab/tape.hpp"

namespace genlab {

enum class OptimizerKind : std::uint8_t { sgd, adam, rmsprop };

inline OptimizerKind parse_optimizer(std::string_view s) {
    if (s == "sgd") return OptimizerKind::sgd;
    if (s == "adam") return OptimizerKind::adam;
    if (s == "rmsprop") return OptimizerKind::rmsprop;
    throw ConfigError("unknown optimizer '" + std::string(s) + "'");
}

struct OptimizerConfig {
    OptimizerKind kind = OptimizerKind::adam;
    double lr = 2e-4;
    double beta1 = 0.5;    // adam first-moment decay
    double beta2 = 0.999;  // adam second-moment decay
    double rho = 0.9;      // rmsprop decay
    double eps = 1e-8;

    static OptimizerConfig sgd(double lr) { return {OptimizerKind::sgd, lr}; }
    static OptimizerConfig adam(double lr, double beta1, double beta2, double eps = 1e-8) {
        return {OptimizerKind::adam, lr, beta1, beta2, 0.9, eps};
    }
    static OptimizerConfig rmsprop(double lr, double rho, double eps = 1e-8) {
        return {OptimizerKind::rmsprop, lr, 0.5, 0.999, rho, eps};
    }
};

/// Per-parameter moment buffers plus step counter. Buffers are allocated on
/// the first step and must keep matching the parameter shapes afterwards.
template <std::floating_point T>
class Optimizer {
   public:
    explicit Optimizer(OptimizerConfig config) : config_(config) {
        if (!(config_.lr >= 0.0)) throw ConfigError("optimizer learning rate must be >= 0");
    }

    const OptimizerConfig& config() const noexcept { return config_; }
    std::uint64_t steps() const noexcept { return step_; }

    void step(std::span<Tensor<T>* const> params, std::span<const Tensor<T>* const> grads) {
        if (params.size() != grads.size()) {
            throw ContractError("optimizer: " + std::to_string(params.size()) + " parameters but " +
                                std::to_string(grads.size()) + " gradients");
        }
        if (first_.empty()) {
            for (auto* p : params) {
                first_.emplace_back(p->shape());
                second_.emplace_back(p->shape());
            }
        }
        if (first_.size() != params.size()) throw ContractError("optimizer: parameter count changed");
        for (std::size_t i = 0; i < params.size(); ++i) {
            if (grads[i] == nullptr) throw ContractError("optimizer: missing gradient for parameter " + std::to_string(i));
            if (params[i]->shape() != grads[i]->shape() || params[i]->shape() != first_[i].shape()) {
                throw ContractError("optimizer: parameter " + std::to_string(i) + " has shape " +
                                    shape_string(params[i]->shape()) + ", gradient " +
                                    shape_string(grads[i]->shape()));
            }
        }
        ++step_;
        const double lr = config_.lr;
        const double eps = config_.eps;
        switch (config_.kind) {
            case OptimizerKind::sgd:
                for (std::size_t i = 0; i < params.size(); ++i) {
                    auto p = params[i]->data();
                    auto g = grads[i]->data();
                    for (std::size_t k = 0; k < p.size(); ++k) p[k] -= static_cast<T>(lr * g[k]);
                }
                break;
            case OptimizerKind::rmsprop: {
                const double rho = config_.rho;
                for (std::size_t i = 0; i < params.size(); ++i) {
                    auto p = params[i]->data();
                    auto g = grads[i]->data();
                    auto v = second_[i].data();
                    for (std::size_t k = 0; k < p.size(); ++k) {
                        const double gk = g[k];
                        const double vk = rho * v[k] + (1.0 - rho) * gk * gk;
                        v[k] = static_cast<T>(vk);
                        p[k] -= static_cast<T>(lr * gk / (std::sqrt(vk) + eps));
                    }
                }
                break;
            }
            case OptimizerKind::adam: {
                const double b1 = config_.beta1, b2 = config_.beta2;
                const double c1 = 1.0 - std::pow(b1, static_cast<double>(step_));
                const double c2 = 1.0 - std::pow(b2, static_cast<double>(step_));
                for (std::size_t i = 0; i < params.size(); ++i) {
                    auto p = params[i]->data();
                    auto g = grads[i]->data();
                    auto m = first_[i].data();
                    auto v = second_[i].data();
                    for (std::size_t k = 0; k < p.size(); ++k) {
                        const double gk = g[k];
                        const double mk = b1 * m[k] + (1.0 - b1) * gk;
                        const double vk = b2 * v[k] + (1.0 - b2) * gk * gk;
                        m[k] = static_cast<T>(mk);
                        v[k] = static_cast<T>(vk);
                        p[k] -= static_cast<T>(lr * (mk / c1) / (std::sqrt(vk / c2) + eps));
                    }
                }
                break;
            }
        }
    }

    /// Updates `net` from the gradients of the parameter nodes in `bound`.
    void step(Mlp<T>& net, const BoundMlp& bound, const GradientMap<T>& grads) {
        auto params = net.parameters();
        if (bound.params.size() != params.size()) {
            throw ContractError("optimizer: bound network does not match parameter list");
        }
        std::vector<const Tensor<T>*> g;
        for (auto id : bound.params) {
            auto it = grads.find(id);
            if (it == grads.end()) {
                throw ContractError("optimizer: no gradient entry for node " + std::to_string(id.index));
            }
            g.push_back(&it->second);
        }
        step(std::span<Tensor<T>* const>(params), std::span<const Tensor<T>* const>(g));
    }

   private:
    OptimizerConfig config_;
    std::uint64_t step_ = 0;
    std::vector<Tensor<T>> first_;
    std::vector<Tensor<T>> second_;
};

}  // namespace genlab
