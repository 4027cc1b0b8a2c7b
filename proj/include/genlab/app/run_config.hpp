#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "genlab/error.hpp"
#include "genlab/models/losses.hpp"
#include "genlab/models/model_kind.hpp"
#include "genlab/models/trainers.hpp"

namespace genlab {

/// Settings for one CLI invocation. Paths left empty mean "not requested".
struct RunConfig {
    ModelKind model = ModelKind::gan;
    std::string data_dir = "data/mnist";
    std::uint64_t iters = 20000;
    std::size_t batch_size = 64;
    std::uint64_t seed = 0;
    std::size_t latent_dim = 100;
    std::optional<double> lr;  // Adam lr, or RMSProp lr for wgan
    double lambda = 1.0;
    double margin = kDefaultMargin;
    double clip = 0.01;
    std::size_t n_critic = 5;
    std::uint64_t eval_every = 1000;
    std::string checkpoint_out;
    std::string metrics_out;
    std::string classifier_path;
    std::size_t samples = 1000;
    std::size_t cols = 10;
    std::string checkpoint;  // input checkpoint for sample/eval
    std::string output;      // PGM path for sample, CSV path for eval
    std::size_t epochs = 5;  // classifier only
};

inline void validate(const RunConfig& rc) {
    auto positive = [](auto v, const char* flag) {
        if (v == 0) throw ConfigError(std::string(flag) + " must be positive");
    };
    positive(rc.iters, "--iters");
    positive(rc.batch_size, "--batch-size");
    positive(rc.latent_dim, "--latent-dim");
    positive(rc.n_critic, "--n-critic");
    positive(rc.eval_every, "--eval-every");
    positive(rc.samples, "--samples");
    positive(rc.cols, "--cols");
    positive(rc.epochs, "--epochs");
    if (rc.lr && !(*rc.lr > 0.0)) throw ConfigError("--lr must be positive");
    if (!(rc.lambda >= 0.0)) throw ConfigError("--lambda must be >= 0");
    if (!(rc.clip > 0.0)) throw ConfigError("--clip must be positive");
}

/// Flags that only affect some models; returns the names set for a model
/// that ignores them.
inline std::vector<std::string> irrelevant_flags(ModelKind model, const std::vector<std::string>& set_flags) {
    std::vector<std::string> out;
    for (const auto& f : set_flags) {
        const bool wgan_only = f == "--clip" || f == "--n-critic";
        const bool cvaegan_only = f == "--lambda" || f == "--margin";
        if ((wgan_only && model != ModelKind::wgan) || (cvaegan_only && model != ModelKind::cvaegan)) out.push_back(f);
    }
    return out;
}

inline ModelConfig to_model_config(const RunConfig& rc) {
    ModelConfig cfg;
    cfg.kind = rc.model;
    cfg.latent_dim = rc.latent_dim;
    cfg.seed = rc.seed;
    cfg.clip = rc.clip;
    cfg.n_critic = rc.n_critic;
    cfg.lambda = rc.lambda;
    cfg.margin = rc.margin;
    if (rc.lr) {
        if (rc.model == ModelKind::wgan) {
            cfg.rmsprop.lr = *rc.lr;
        } else {
            cfg.adam.lr = *rc.lr;
        }
    }
    return cfg;
}

}  // namespace genlab
