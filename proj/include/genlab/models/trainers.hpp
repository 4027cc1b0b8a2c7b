#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "genlab/data/rng.hpp"
#include "genlab/denormals.hpp"
#include "genlab/error.hpp"
#include "genlab/models/losses.hpp"
#include "genlab/models/model_kind.hpp"
#include "genlab/nn/mlp.hpp"
#include "genlab/nn/optimizer.hpp"
#include "genlab/tape.hpp"

namespace genlab {

/// Everything needed to build and train one of the generative models.
struct ModelConfig {
    ModelKind kind = ModelKind::gan;
    GanVariant gan_variant = GanVariant::nonsaturating;
    std::size_t data_width = 784;
    std::size_t latent_dim = 100;
    // Hidden widths from the data side inwards; the generator/decoder uses
    // them in reverse order.
    std::vector<std::size_t> hidden{392, 196, 98};
    OptimizerConfig adam = OptimizerConfig::adam(2e-4, 0.5, 0.999);
    OptimizerConfig rmsprop = OptimizerConfig::rmsprop(2e-4, 0.9);
    double clip = 0.01;
    std::size_t n_critic = 5;
    double lambda = 1.0;
    double margin = kDefaultMargin;
    std::uint64_t seed = 0;
};

struct StepMetrics {
    std::uint64_t iteration = 0;
    std::optional<double> loss_d;
    std::optional<double> loss_g;
    std::optional<double> recon;
    std::optional<double> kl;
    std::optional<bool> hinge_active;

    friend bool operator==(const StepMetrics&, const StepMetrics&) = default;
};

/// Supplies the next real batch (B x data_width, pixels in [0, 1]).
using BatchSource = std::function<Tensor<float>()>;

template <std::floating_point T>
Tensor<T> standard_normal(std::size_t rows, std::size_t cols, RngStream& rng) {
    std::vector<T> v(rows * cols);
    for (auto& x : v) x = static_cast<T>(rng.normal());
    return Tensor<T>(Shape{rows, cols}, std::move(v));
}

// ---------------------------------------------------------------------------
// Network builders

inline InitSpec init_spec_for(const ModelConfig& cfg) { return InitSpec{InitScheme::xavier_uniform, 0.02, cfg.seed}; }

inline Mlp<float> make_generator(const ModelConfig& cfg, Role role = Role::generator) {
    std::vector<std::size_t> dims{cfg.latent_dim};
    dims.insert(dims.end(), cfg.hidden.rbegin(), cfg.hidden.rend());
    dims.push_back(cfg.data_width);
    return init_mlp<float>(dims, Activation::sigmoid, init_spec_for(cfg), role);
}

inline Mlp<float> make_discriminator(const ModelConfig& cfg) {
    std::vector<std::size_t> dims{cfg.data_width};
    dims.insert(dims.end(), cfg.hidden.begin(), cfg.hidden.end());
    dims.push_back(1);
    const Activation last = cfg.kind == ModelKind::wgan ? Activation::identity : Activation::sigmoid;
    return init_mlp<float>(dims, last, init_spec_for(cfg), Role::discriminator);
}

inline Mlp<float> make_encoder(const ModelConfig& cfg) {
    std::vector<std::size_t> dims{cfg.data_width};
    dims.insert(dims.end(), cfg.hidden.begin(), cfg.hidden.end());
    dims.push_back(2 * cfg.latent_dim);  // [mu | logvar]
    return init_mlp<float>(dims, Activation::identity, init_spec_for(cfg), Role::encoder);
}

// ---------------------------------------------------------------------------

/// Common surface of the five trainable models.
class GenerativeModel {
   public:
    explicit GenerativeModel(ModelConfig config) : config_(std::move(config)) {
        if (config_.latent_dim == 0 || config_.data_width == 0) throw ConfigError("model widths must be positive");
    }
    virtual ~GenerativeModel() = default;

    GenerativeModel(const GenerativeModel&) = delete;
    GenerativeModel& operator=(const GenerativeModel&) = delete;

    ModelKind kind() const noexcept { return config_.kind; }
    const ModelConfig& config() const noexcept { return config_; }
    std::uint64_t iteration() const noexcept { return iteration_; }
    void set_iteration(std::uint64_t it) noexcept { iteration_ = it; }

    /// One iteration of the model's update schedule.
    StepMetrics train_step(const BatchSource& next_real, RngStream& rng) {
        ScopedFlushDenormals ftz;
        return step(next_real, rng);
    }

    /// Network mapping latent vectors to images (generator or decoder).
    virtual const Mlp<float>& sampler() const = 0;

    /// Named networks, in a fixed order ("generator", "discriminator", ...).
    virtual std::vector<std::pair<std::string, Mlp<float>*>> networks() = 0;

    std::vector<std::pair<std::string, const Mlp<float>*>> named_networks() const {
        std::vector<std::pair<std::string, const Mlp<float>*>> out;
        for (auto& [name, net] : const_cast<GenerativeModel*>(this)->networks()) out.emplace_back(name, net);
        return out;
    }

    /// Draws n latent vectors from N(0, I) and decodes them.
    Tensor<float> sample(std::size_t n, RngStream& rng) const {
        return infer(sampler(), standard_normal<float>(n, config_.latent_dim, rng));
    }

   protected:
    virtual StepMetrics step(const BatchSource& next_real, RngStream& rng) = 0;

    template <class F>
    auto guarded(std::string_view term, F&& f) const {
        try {
            return f();
        } catch (const NumericError& e) {
            throw NumericError(std::string(to_string(config_.kind)) + " training aborted: non-finite " +
                               std::string(term) + " at iteration " + std::to_string(iteration_ + 1) + " (" +
                               e.what() + ")");
        }
    }

    double finite_or_throw(double v, std::string_view term) const {
        if (!std::isfinite(v)) {
            throw NumericError(std::string(to_string(config_.kind)) + " training aborted: non-finite " +
                               std::string(term) + " at iteration " + std::to_string(iteration_ + 1));
        }
        return v;
    }

    ModelConfig config_;
    std::uint64_t iteration_ = 0;
};

/// Generator/discriminator pair with the log-loss objective.
class GanModel : public GenerativeModel {
   public:
    explicit GanModel(ModelConfig config)
        : GenerativeModel(std::move(config)),
          generator_(make_generator(config_)),
          discriminator_(make_discriminator(config_)),
          opt_g_(config_.adam),
          opt_d_(config_.adam) {}

    double update_discriminator(const Tensor<float>& real, RngStream& rng) {
        return guarded("discriminator loss", [&] {
            const Tensor<float> fake = infer(generator_, standard_normal<float>(real.rows(), config_.latent_dim, rng));
            Tape<float> tape;
            const auto params = bind_parameters(discriminator_, tape);
            const NodeId d_real = forward_bound(discriminator_, params, tape.leaf(real), tape);
            const NodeId d_fake = forward_bound(discriminator_, params, tape.leaf(fake), tape);
            const NodeId loss = discriminator_gan_loss(tape, d_real, d_fake);
            const auto grads = tape.backward(loss, params);
            opt_d_.step(discriminator_, BoundMlp{params, d_fake}, grads);
            return finite_or_throw(tape.value(loss).item(), "discriminator loss");
        });
    }

    double update_generator(std::size_t batch, RngStream& rng) {
        return guarded("generator loss", [&] {
            Tape<float> tape;
            const NodeId z = tape.leaf(standard_normal<float>(batch, config_.latent_dim, rng));
            const BoundMlp g = forward_mlp(generator_, z, tape);
            const auto d_params = bind_parameters(discriminator_, tape);
            const NodeId d_fake = forward_bound(discriminator_, d_params, g.output, tape);
            const NodeId loss = generator_gan_loss(tape, d_fake, config_.gan_variant);
            const auto grads = tape.backward(loss, g.params);
            opt_g_.step(generator_, g, grads);
            return finite_or_throw(tape.value(loss).item(), "generator loss");
        });
    }

    StepMetrics step(const BatchSource& next_real, RngStream& rng) override {
        const Tensor<float> real = next_real();
        StepMetrics m;
        m.loss_d = update_discriminator(real, rng);
        m.loss_g = update_generator(real.rows(), rng);
        m.iteration = ++iteration_;
        return m;
    }

    const Mlp<float>& sampler() const override { return generator_; }
    std::vector<std::pair<std::string, Mlp<float>*>> networks() override {
        return {{"generator", &generator_}, {"discriminator", &discriminator_}};
    }

    const Mlp<float>& generator() const { return generator_; }
    const Mlp<float>& discriminator() const { return discriminator_; }

   private:
    Mlp<float> generator_;
    Mlp<float> discriminator_;
    Optimizer<float> opt_g_;
    Optimizer<float> opt_d_;
};

/// Critic with unbounded output, weight clipping and several critic
/// updates per generator update.
class WganModel : public GenerativeModel {
   public:
    explicit WganModel(ModelConfig config)
        : GenerativeModel(std::move(config)),
          generator_(make_generator(config_)),
          critic_(make_discriminator(config_)),
          opt_g_(config_.rmsprop),
          opt_d_(config_.rmsprop) {
        if (config_.n_critic == 0) throw ConfigError("n_critic must be positive");
        // Start inside the clip box so the invariant holds from iteration 0.
        clip_weights(critic_, static_cast<float>(config_.clip));
    }

    double update_critic(const Tensor<float>& real, RngStream& rng) {
        return guarded("critic loss", [&] {
            const Tensor<float> fake = infer(generator_, standard_normal<float>(real.rows(), config_.latent_dim, rng));
            Tape<float> tape;
            const auto params = bind_parameters(critic_, tape);
            const NodeId d_real = forward_bound(critic_, params, tape.leaf(real), tape);
            const NodeId d_fake = forward_bound(critic_, params, tape.leaf(fake), tape);
            const NodeId loss = wgan_losses(tape, d_real, d_fake).loss_d;
            const auto grads = tape.backward(loss, params);
            opt_d_.step(critic_, BoundMlp{params, d_fake}, grads);
            clip_weights(critic_, static_cast<float>(config_.clip));
            return finite_or_throw(tape.value(loss).item(), "critic loss");
        });
    }

    double update_generator(std::size_t batch, RngStream& rng) {
        return guarded("generator loss", [&] {
            Tape<float> tape;
            const NodeId z = tape.leaf(standard_normal<float>(batch, config_.latent_dim, rng));
            const BoundMlp g = forward_mlp(generator_, z, tape);
            const auto d_params = bind_parameters(critic_, tape);
            const NodeId d_fake = forward_bound(critic_, d_params, g.output, tape);
            const NodeId loss = scale(tape, mean(tape, d_fake), -1.0f);
            const auto grads = tape.backward(loss, g.params);
            opt_g_.step(generator_, g, grads);
            return finite_or_throw(tape.value(loss).item(), "generator loss");
        });
    }

    /// Called after each critic update with the critic's max |w|; lets
    /// callers observe the clip invariant at every update.
    std::function<void(float)> on_critic_update;

    StepMetrics step(const BatchSource& next_real, RngStream& rng) override {
        StepMetrics m;
        std::size_t batch = 0;
        for (std::size_t k = 0; k < config_.n_critic; ++k) {
            const Tensor<float> real = next_real();
            batch = real.rows();
            m.loss_d = update_critic(real, rng);
            if (on_critic_update) on_critic_update(max_abs_parameter(critic_));
        }
        m.loss_g = update_generator(batch, rng);
        m.iteration = ++iteration_;
        return m;
    }

    const Mlp<float>& sampler() const override { return generator_; }
    std::vector<std::pair<std::string, Mlp<float>*>> networks() override {
        return {{"generator", &generator_}, {"discriminator", &critic_}};
    }

    const Mlp<float>& generator() const { return generator_; }
    const Mlp<float>& critic() const { return critic_; }

   private:
    Mlp<float> generator_;
    Mlp<float> critic_;
    Optimizer<float> opt_g_;
    Optimizer<float> opt_d_;
};

/// Encoder/decoder pair; helpers shared by the VAE and both VAE-GANs.
class VaeModel : public GenerativeModel {
   public:
    explicit VaeModel(ModelConfig config)
        : GenerativeModel(std::move(config)),
          encoder_(make_encoder(config_)),
          decoder_(make_generator(config_, Role::decoder)),
          opt_enc_(config_.adam),
          opt_dec_(config_.adam) {}

    StepMetrics step(const BatchSource& next_real, RngStream& rng) override {
        const Tensor<float> real = next_real();
        StepMetrics m = guarded("vae loss", [&] {
            Tape<float> tape;
            const Pass pass = encode_decode(tape, real, rng);
            const auto grads = tape.backward(pass.loss.total, pass.params());
            opt_enc_.step(encoder_, pass.enc, grads);
            opt_dec_.step(decoder_, pass.dec, grads);
            StepMetrics out;
            out.recon = finite_or_throw(tape.value(pass.loss.recon).item(), "reconstruction loss");
            out.kl = finite_or_throw(tape.value(pass.loss.kl).item(), "kl term");
            return out;
        });
        m.iteration = ++iteration_;
        return m;
    }

    /// Decoder output for the reparameterized encoding of `x`.
    Tensor<float> reconstruct(const Tensor<float>& x, RngStream& rng) const {
        Tape<float> tape;
        const Pass pass = encode_decode(tape, x, rng);
        return tape.value(pass.dec.output);
    }

    const Mlp<float>& sampler() const override { return decoder_; }
    std::vector<std::pair<std::string, Mlp<float>*>> networks() override {
        return {{"encoder", &encoder_}, {"decoder", &decoder_}};
    }

    const Mlp<float>& encoder() const { return encoder_; }
    const Mlp<float>& decoder() const { return decoder_; }

   protected:
    struct Pass {
        BoundMlp enc;
        BoundMlp dec;
        NodeId mu;
        NodeId logvar;
        VaeLoss loss;

        std::vector<NodeId> params() const {
            std::vector<NodeId> all = enc.params;
            all.insert(all.end(), dec.params.begin(), dec.params.end());
            return all;
        }
    };

    Pass encode_decode(Tape<float>& tape, const Tensor<float>& real, RngStream& rng) const {
        const auto latent = config_.latent_dim;
        const NodeId x = tape.leaf(real);
        Pass p;
        p.enc = forward_mlp(encoder_, x, tape);
        p.mu = slice_cols(tape, p.enc.output, 0, latent);
        p.logvar = slice_cols(tape, p.enc.output, latent, 2 * latent);
        const NodeId eps = tape.leaf(standard_normal<float>(real.rows(), latent, rng));
        const NodeId z = reparameterize(tape, p.mu, p.logvar, eps);
        p.dec = forward_mlp(decoder_, z, tape);
        p.loss = vae_loss(tape, x, p.dec.output, p.mu, p.logvar);
        return p;
    }

    Mlp<float> encoder_;
    Mlp<float> decoder_;
    Optimizer<float> opt_enc_;
    Optimizer<float> opt_dec_;
};

/// VAE whose reconstructions also face a discriminator. With
/// kind == cvaegan the adversarial term enters through the hinge
/// lambda * max(l_gan - margin, 0) instead of being added directly.
class VaeGanModel : public VaeModel {
   public:
    explicit VaeGanModel(ModelConfig config)
        : VaeModel(std::move(config)), discriminator_(make_discriminator(config_)), opt_d_(config_.adam) {
        if (!(config_.lambda >= 0.0)) throw ConfigError("lambda must be >= 0");
    }

    bool constrained() const noexcept { return config_.kind == ModelKind::cvaegan; }

    double update_discriminator(const Tensor<float>& real, RngStream& rng) {
        return guarded("discriminator loss", [&] {
            const Tensor<float> fake = reconstruct(real, rng);
            Tape<float> tape;
            const auto params = bind_parameters(discriminator_, tape);
            const NodeId d_real = forward_bound(discriminator_, params, tape.leaf(real), tape);
            const NodeId d_fake = forward_bound(discriminator_, params, tape.leaf(fake), tape);
            const NodeId loss = discriminator_gan_loss(tape, d_real, d_fake);
            const auto grads = tape.backward(loss, params);
            opt_d_.step(discriminator_, BoundMlp{params, d_fake}, grads);
            return finite_or_throw(tape.value(loss).item(), "discriminator loss");
        });
    }

    /// Joint encoder/decoder update; fills recon, kl, loss_g (the
    /// adversarial term) and, when constrained, hinge_active.
    StepMetrics update_autoencoder(const Tensor<float>& real, RngStream& rng) {
        return guarded("encoder/decoder loss", [&] {
            Tape<float> tape;
            const Pass pass = encode_decode(tape, real, rng);
            const auto d_params = bind_parameters(discriminator_, tape);
            const NodeId d_fake = forward_bound(discriminator_, d_params, pass.dec.output, tape);
            const NodeId l_gan = generator_adversarial_term(tape, d_fake);
            const NodeId objective =
                constrained() ? constrained_loss(tape, pass.loss.total, l_gan, static_cast<float>(config_.lambda),
                                                 static_cast<float>(config_.margin))
                              : add(tape, pass.loss.total, l_gan);
            const auto grads = tape.backward(objective, pass.params());
            opt_enc_.step(encoder_, pass.enc, grads);
            opt_dec_.step(decoder_, pass.dec, grads);
            StepMetrics out;
            out.loss_g = finite_or_throw(tape.value(l_gan).item(), "adversarial term");
            out.recon = finite_or_throw(tape.value(pass.loss.recon).item(), "reconstruction loss");
            out.kl = finite_or_throw(tape.value(pass.loss.kl).item(), "kl term");
            if (constrained()) out.hinge_active = *out.loss_g > static_cast<float>(config_.margin);
            return out;
        });
    }

    StepMetrics step(const BatchSource& next_real, RngStream& rng) override {
        const Tensor<float> real = next_real();
        const double loss_d = update_discriminator(real, rng);
        StepMetrics m = update_autoencoder(real, rng);
        m.loss_d = loss_d;
        m.iteration = ++iteration_;
        return m;
    }

    std::vector<std::pair<std::string, Mlp<float>*>> networks() override {
        return {{"encoder", &encoder_}, {"decoder", &decoder_}, {"discriminator", &discriminator_}};
    }

    const Mlp<float>& discriminator() const { return discriminator_; }

   private:
    Mlp<float> discriminator_;
    Optimizer<float> opt_d_;
};

inline std::unique_ptr<GenerativeModel> make_model(const ModelConfig& config) {
    switch (config.kind) {
        case ModelKind::gan: return std::make_unique<GanModel>(config);
        case ModelKind::wgan: return std::make_unique<WganModel>(config);
        case ModelKind::vae: return std::make_unique<VaeModel>(config);
        case ModelKind::vaegan:
        case ModelKind::cvaegan: return std::make_unique<VaeGanModel>(config);
        case ModelKind::classifier: break;
    }
    throw ConfigError("make_model: '" + std::string(to_string(config.kind)) + "' is not a generative model");
}

}  // namespace genlab
