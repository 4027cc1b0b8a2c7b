#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "genlab/data/rng.hpp"
#include "genlab/error.hpp"
#include "genlab/tape.hpp"
#include "genlab/tensor.hpp"

namespace genlab {

enum class Activation : std::uint8_t { identity, relu, sigmoid, tanh };

inline std::string_view to_string(Activation a) {
    switch (a) {
        case Activation::identity: return "identity";
        case Activation::relu: return "relu";
        case Activation::sigmoid: return "sigmoid";
        case Activation::tanh: return "tanh";
    }
    return "?";
}

enum class Role : std::uint8_t { generator, discriminator, encoder, decoder, classifier };

inline std::string_view to_string(Role r) {
    switch (r) {
        case Role::generator: return "generator";
        case Role::discriminator: return "discriminator";
        case Role::encoder: return "encoder";
        case Role::decoder: return "decoder";
        case Role::classifier: return "classifier";
    }
    return "?";
}

enum class InitScheme : std::uint8_t { xavier_uniform, normal };

struct InitSpec {
    InitScheme scheme = InitScheme::xavier_uniform;
    double normal_stddev = 0.02;
    std::uint64_t seed = 0;
};

inline double xavier_bound(std::size_t fan_in, std::size_t fan_out) {
    return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

template <std::floating_point T>
struct Layer {
    Tensor<T> weight;  // in x out
    Tensor<T> bias;    // out
    Activation activation = Activation::identity;

    std::size_t in() const { return weight.rows(); }
    std::size_t out() const { return weight.cols(); }

    friend bool operator==(const Layer&, const Layer&) = default;
};

/// Stack of fully-connected layers.
template <std::floating_point T>
struct Mlp {
    std::vector<Layer<T>> layers;
    Role role = Role::generator;

    std::size_t input_width() const { return layers.front().in(); }
    std::size_t output_width() const { return layers.back().out(); }

    std::vector<std::size_t> dims() const {
        std::vector<std::size_t> d{input_width()};
        for (const auto& l : layers) d.push_back(l.out());
        return d;
    }

    /// Weights then bias for each layer, in layer order.
    std::vector<Tensor<T>*> parameters() {
        std::vector<Tensor<T>*> out;
        for (auto& l : layers) {
            out.push_back(&l.weight);
            out.push_back(&l.bias);
        }
        return out;
    }
    std::vector<const Tensor<T>*> parameters() const {
        std::vector<const Tensor<T>*> out;
        for (const auto& l : layers) {
            out.push_back(&l.weight);
            out.push_back(&l.bias);
        }
        return out;
    }

    /// "layer{i}.weight" / "layer{i}.bias", matching parameters() order.
    std::vector<std::string> parameter_names() const {
        std::vector<std::string> names;
        for (std::size_t i = 0; i < layers.size(); ++i) {
            names.push_back("layer" + std::to_string(i) + ".weight");
            names.push_back("layer" + std::to_string(i) + ".bias");
        }
        return names;
    }

    template <std::floating_point U>
    Mlp<U> cast() const {
        Mlp<U> out;
        out.role = role;
        for (const auto& l : layers) {
            out.layers.push_back(Layer<U>{l.weight.template cast<U>(), l.bias.template cast<U>(), l.activation});
        }
        return out;
    }

    friend bool operator==(const Mlp&, const Mlp&) = default;
};

/// Builds a network with len(dims) - 1 layers; weights drawn per `spec`,
/// biases zero. `activations` has one entry per layer.
template <std::floating_point T>
Mlp<T> init_mlp(const std::vector<std::size_t>& dims, const std::vector<Activation>& activations,
                const InitSpec& spec, Role role) {
    if (dims.size() < 2) throw ConfigError("init_mlp: need at least 2 dims");
    if (activations.size() != dims.size() - 1) {
        throw ConfigError("init_mlp: " + std::to_string(dims.size() - 1) + " layers but " +
                          std::to_string(activations.size()) + " activations");
    }
    if (std::any_of(dims.begin(), dims.end(), [](std::size_t d) { return d == 0; })) {
        throw ConfigError("init_mlp: dims must be positive");
    }
    RngStream rng(spec.seed, "init/" + std::string(to_string(role)));
    Mlp<T> net;
    net.role = role;
    for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
        const auto in = dims[i], out = dims[i + 1];
        std::vector<T> w(in * out);
        if (spec.scheme == InitScheme::xavier_uniform) {
            const double bound = xavier_bound(in, out);
            for (auto& v : w) v = static_cast<T>(rng.uniform(-bound, bound));
        } else {
            for (auto& v : w) v = static_cast<T>(spec.normal_stddev * rng.normal());
        }
        net.layers.push_back(
            Layer<T>{Tensor<T>(Shape{in, out}, std::move(w)), Tensor<T>::zeros(Shape{out}), activations[i]});
    }
    return net;
}

/// relu on every hidden layer, `last` on the output layer.
template <std::floating_point T>
Mlp<T> init_mlp(const std::vector<std::size_t>& dims, Activation last, const InitSpec& spec, Role role) {
    if (dims.size() < 2) throw ConfigError("init_mlp: need at least 2 dims");
    std::vector<Activation> acts(dims.size() - 1, Activation::relu);
    acts.back() = last;
    return init_mlp<T>(dims, acts, spec, role);
}

/// Node ids of a network's parameters and output after a forward pass.
struct BoundMlp {
    std::vector<NodeId> params;  // parameters() order
    NodeId output;
};

template <std::floating_point T>
NodeId apply_activation(Tape<T>& tape, Activation a, NodeId t) {
    switch (a) {
        case Activation::identity: return t;
        case Activation::relu: return apply_unary(tape, Unary::relu, t);
        case Activation::sigmoid: return apply_unary(tape, Unary::sigmoid, t);
        case Activation::tanh: return apply_unary(tape, Unary::tanh, t);
    }
    throw ConfigError("unknown activation");
}

/// Puts the parameters of `net` on `tape` as leaves, in parameters() order.
template <std::floating_point T>
std::vector<NodeId> bind_parameters(const Mlp<T>& net, Tape<T>& tape) {
    std::vector<NodeId> ids;
    for (const auto* p : net.parameters()) ids.push_back(tape.leaf(*p));
    return ids;
}

/// Chained affine + activation layers using already-bound parameter nodes.
/// Lets one set of parameter leaves serve several forward passes.
template <std::floating_point T>
NodeId forward_bound(const Mlp<T>& net, std::span<const NodeId> params, NodeId x, Tape<T>& tape) {
    const auto& xv = tape.value(x);
    if (net.layers.empty()) throw ConfigError("forward_mlp: empty network");
    if (params.size() != 2 * net.layers.size()) throw ContractError("forward_mlp: parameter binding mismatch");
    if (xv.rank() != 2 || xv.cols() != net.input_width()) {
        throw DimensionError("forward_mlp: " + std::string(to_string(net.role)) + " expects width " +
                             std::to_string(net.input_width()) + ", got input " + shape_string(xv.shape()));
    }
    NodeId h = x;
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        h = apply_activation(tape, net.layers[i].activation, affine(tape, h, params[2 * i], params[2 * i + 1]));
    }
    return h;
}

/// Records the chained affine + activation layers of `net` on `tape`.
template <std::floating_point T>
BoundMlp forward_mlp(const Mlp<T>& net, NodeId x, Tape<T>& tape) {
    BoundMlp bound;
    bound.params = bind_parameters(net, tape);
    bound.output = forward_bound(net, std::span<const NodeId>(bound.params), x, tape);
    return bound;
}

/// Forward pass on a scratch tape; returns the output values only.
template <std::floating_point T>
Tensor<T> infer(const Mlp<T>& net, const Tensor<T>& x) {
    Tape<T> tape;
    const auto bound = forward_mlp(net, tape.leaf(x), tape);
    return tape.value(bound.output);
}

/// Clamps every weight and bias coordinate into [-c, c].
template <std::floating_point T>
void clip_weights(Mlp<T>& net, T c) {
    if (!(c > T{0})) throw ConfigError("clip_weights: bound must be positive, got " + std::to_string(c));
    for (auto* p : net.parameters()) {
        for (auto& v : p->data()) v = std::clamp(v, -c, c);
    }
}

template <std::floating_point T>
T max_abs_parameter(const Mlp<T>& net) {
    T m{0};
    for (const auto* p : net.parameters()) {
        for (T v : p->data()) m = std::max(m, std::abs(v));
    }
    return m;
}

}  // namespace genlab
