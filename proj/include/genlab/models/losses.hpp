#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <string_view>

#include "genlab/error.hpp"
#include "genlab/tape.hpp"

namespace genlab {

enum class GanVariant : std::uint8_t { minimax, nonsaturating };

struct AdversarialLosses {
    NodeId loss_d;
    NodeId loss_g;
};

namespace detail {

template <class T>
void require_probabilities(const Tape<T>& tape, NodeId id, std::string_view what) {
    for (T v : tape.value(id).data()) {
        if (!(v >= T{0} && v <= T{1})) {
            throw ContractError(std::string(what) + " must hold probabilities in (0, 1), found " +
                                std::to_string(static_cast<double>(v)));
        }
    }
}

template <class T>
NodeId one_minus(Tape<T>& tape, NodeId t) {
    return add_scalar(tape, scale(tape, t, T{-1}), T{1});
}

}  // namespace detail

/// -mean[ln d_fake]: the generator's non-saturating adversarial term.
template <std::floating_point T>
NodeId generator_adversarial_term(Tape<T>& tape, NodeId d_fake) {
    detail::require_probabilities(tape, d_fake, "discriminator output on fakes");
    return scale(tape, mean(tape, log_safe(tape, d_fake)), T{-1});
}

/// -mean[ln d_real] - mean[ln(1 - d_fake)]
template <std::floating_point T>
NodeId discriminator_gan_loss(Tape<T>& tape, NodeId d_real, NodeId d_fake) {
    detail::require_probabilities(tape, d_real, "discriminator output on data");
    detail::require_probabilities(tape, d_fake, "discriminator output on fakes");
    const NodeId log_real = mean(tape, log_safe(tape, d_real));
    const NodeId log_fake_complement = mean(tape, log_safe(tape, detail::one_minus(tape, d_fake)));
    return scale(tape, add(tape, log_real, log_fake_complement), T{-1});
}

/// mean[ln(1 - d_fake)] for minimax, -mean[ln d_fake] for non-saturating.
template <std::floating_point T>
NodeId generator_gan_loss(Tape<T>& tape, NodeId d_fake, GanVariant variant) {
    if (variant == GanVariant::nonsaturating) return generator_adversarial_term(tape, d_fake);
    detail::require_probabilities(tape, d_fake, "discriminator output on fakes");
    return mean(tape, log_safe(tape, detail::one_minus(tape, d_fake)));
}

/// Discriminator and generator losses for the probability-output GAN.
template <std::floating_point T>
AdversarialLosses gan_losses(Tape<T>& tape, NodeId d_real, NodeId d_fake, GanVariant variant) {
    const NodeId loss_d = discriminator_gan_loss(tape, d_real, d_fake);
    return {loss_d, generator_gan_loss(tape, d_fake, variant)};
}

/// Critic losses with the constant offset dropped:
/// loss_d = -(mean d_real - mean d_fake), loss_g = -mean d_fake.
template <std::floating_point T>
AdversarialLosses wgan_losses(Tape<T>& tape, NodeId d_real, NodeId d_fake) {
    if (!tape.value(d_real).all_finite() || !tape.value(d_fake).all_finite()) {
        throw NumericError("wgan_losses: non-finite critic score");
    }
    const NodeId mean_real = mean(tape, d_real);
    const NodeId mean_fake = mean(tape, d_fake);
    const NodeId loss_d = sub(tape, mean_fake, mean_real);
    const NodeId loss_g = scale(tape, mean_fake, T{-1});
    return {loss_d, loss_g};
}

namespace detail {

template <class T>
std::size_t batch_rows(const Tensor<T>& t) {
    return t.rank() >= 2 ? t.dim(0) : 1;
}

}  // namespace detail

/// KL(N(mu, diag exp(logvar)) || N(0, I)), summed over latent dims and
/// averaged over the batch (rows).
template <std::floating_point T>
NodeId kl_diag_gaussian(Tape<T>& tape, NodeId mu, NodeId logvar) {
    detail::require_same_shape(tape, mu, logvar, "kl_diag_gaussian");
    const auto rows = detail::batch_rows(tape.value(mu));
    // 1 + logvar - mu^2 - exp(logvar)
    const NodeId inner =
        sub(tape, sub(tape, add_scalar(tape, logvar, T{1}), square(tape, mu)), exp(tape, logvar));
    return scale(tape, sum(tape, inner), static_cast<T>(-0.5 / static_cast<double>(rows)));
}

/// z = mu + exp(logvar / 2) * eps
template <std::floating_point T>
NodeId reparameterize(Tape<T>& tape, NodeId mu, NodeId logvar, NodeId eps) {
    detail::require_same_shape(tape, mu, logvar, "reparameterize");
    detail::require_same_shape(tape, mu, eps, "reparameterize");
    const NodeId sigma = exp(tape, scale(tape, logvar, T{0.5}));
    return add(tape, mu, mul(tape, sigma, eps));
}

struct VaeLoss {
    NodeId total;
    NodeId recon;  // squared error summed over pixels, averaged over rows
    NodeId kl;
};

template <std::floating_point T>
VaeLoss vae_loss(Tape<T>& tape, NodeId x, NodeId x_recon, NodeId mu, NodeId logvar) {
    detail::require_same_shape(tape, x, x_recon, "vae_loss");
    for (NodeId id : {x, x_recon}) {
        for (T v : tape.value(id).data()) {
            if (!(v >= T{0} && v <= T{1})) {
                throw DataError("vae_loss: pixel value " + std::to_string(static_cast<double>(v)) +
                                " outside [0, 1]");
            }
        }
    }
    const auto rows = detail::batch_rows(tape.value(x));
    const NodeId recon = scale(tape, sum(tape, square(tape, sub(tape, x_recon, x))),
                               static_cast<T>(1.0 / static_cast<double>(rows)));
    const NodeId kl = kl_diag_gaussian(tape, mu, logvar);
    return {add(tape, recon, kl), recon, kl};
}

/// l_vae - mean[ln d_fake]
template <std::floating_point T>
NodeId vaegan_generator_loss(Tape<T>& tape, NodeId l_vae, NodeId d_fake) {
    return add(tape, l_vae, generator_adversarial_term(tape, d_fake));
}

/// Default hinge margin: the adversarial term's value when the
/// discriminator outputs 1/2 everywhere.
inline constexpr double kDefaultMargin = std::numbers::ln2;

/// l_vae + lambda * max(l_gan - margin, 0)
template <std::floating_point T>
NodeId constrained_loss(Tape<T>& tape, NodeId l_vae, NodeId l_gan, T lambda, T margin) {
    if (!(lambda >= T{0})) {
        throw ConfigError("constrained_loss: lambda must be >= 0, got " + std::to_string(static_cast<double>(lambda)));
    }
    const NodeId excess = apply_unary(tape, Unary::relu, add_scalar(tape, l_gan, -margin));
    return add(tape, l_vae, scale(tape, excess, lambda));
}

}  // namespace genlab
