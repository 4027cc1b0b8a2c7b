#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "genlab/error.hpp"
#include "genlab/tensor.hpp"

namespace genlab {

/// Index of a node on a Tape. Ids are assigned in recording order.
struct NodeId {
    std::uint32_t index = 0;
    friend auto operator<=>(const NodeId&, const NodeId&) = default;
};

enum class OpKind : std::uint8_t {
    leaf,
    affine,
    relu,
    sigmoid,
    tanh,
    exp,
    log_safe,
    sum,
    mean,
    add,
    sub,
    mul,
    square,
    scale,
    add_scalar,
    slice_cols,
    softmax_cross_entropy,
};

enum class Unary : std::uint8_t { relu, sigmoid, tanh, exp, log_safe };

inline Unary parse_unary(std::string_view name) {
    if (name == "relu") return Unary::relu;
    if (name == "sigmoid") return Unary::sigmoid;
    if (name == "tanh") return Unary::tanh;
    if (name == "exp") return Unary::exp;
    if (name == "log_safe") return Unary::log_safe;
    throw ConfigError("unknown unary op '" + std::string(name) + "'");
}

/// Clamp floor used by log_safe; the ceiling is 1 - kLogEpsilon.
inline constexpr double kLogEpsilon = 1e-7;

template <std::floating_point T>
using GradientMap = std::map<NodeId, Tensor<T>>;

template <std::floating_point T>
class Tape;

/// Backward rule: given dLoss/dOut, write dLoss/dInput[i] into grads[i] for
/// every i with need[i] set. Entries left untouched are treated as zero.
template <std::floating_point T>
using BackwardFn = std::function<void(const Tape<T>& tape, std::span<const NodeId> inputs,
                                      const Tensor<T>& out, const Tensor<T>& upstream,
                                      std::span<const bool> need, std::span<Tensor<T>> grads)>;

/// Append-only record of tensor operations for reverse-mode differentiation.
///
/// A Tape is single-threaded. Node inputs always refer to earlier nodes, so
/// the recording order is a valid topological order and backward() walks it
/// in reverse.
template <std::floating_point T>
class Tape {
   public:
    struct Node {
        OpKind kind;
        std::vector<NodeId> inputs;
        Tensor<T> value;
        BackwardFn<T> backward;
    };

    NodeId leaf(Tensor<T> value) {
        require_finite(value, "leaf");
        return push(OpKind::leaf, {}, std::move(value), nullptr);
    }

    /// Record an op whose forward value is already computed. Used by the
    /// built-in ops and by model-specific fused ops.
    NodeId record(OpKind kind, std::vector<NodeId> inputs, Tensor<T> value, BackwardFn<T> backward,
                  std::string_view label) {
        for (auto in : inputs) check_id(in);
        require_finite(value, label);
        return push(kind, std::move(inputs), std::move(value), std::move(backward));
    }

    const Tensor<T>& value(NodeId id) const {
        check_id(id);
        return nodes_[id.index].value;
    }

    const Node& node(NodeId id) const {
        check_id(id);
        return nodes_[id.index];
    }

    std::size_t size() const noexcept { return nodes_.size(); }

    /// Gradients of the scalar node `loss` with respect to each node in `wrt`.
    /// Nodes that do not influence the loss receive zero tensors.
    GradientMap<T> backward(NodeId loss, std::span<const NodeId> wrt) const {
        check_id(loss);
        const auto& loss_value = nodes_[loss.index].value;
        if (!loss_value.is_scalar()) {
            throw ContractError("backward() needs a scalar loss, got shape " +
                                shape_string(loss_value.shape()));
        }
        for (auto id : wrt) check_id(id);

        const std::size_t n = loss.index + 1;
        // A node participates if some requested node lies upstream of it.
        std::vector<bool> relevant(n, false);
        for (auto id : wrt) {
            if (id.index < n) relevant[id.index] = true;
        }
        for (std::size_t i = 0; i < n; ++i) {
            if (relevant[i]) continue;
            for (auto in : nodes_[i].inputs) {
                if (relevant[in.index]) {
                    relevant[i] = true;
                    break;
                }
            }
        }

        std::vector<Tensor<T>> grads(n);
        std::vector<bool> has_grad(n, false);
        grads[loss.index] = Tensor<T>::filled(loss_value.shape(), T{1});
        has_grad[loss.index] = true;

        for (std::size_t i = n; i-- > 0;) {
            if (!has_grad[i] || !relevant[i]) continue;
            const Node& nd = nodes_[i];
            if (nd.inputs.empty()) continue;

            bool any = false;
            std::vector<bool> need_vec(nd.inputs.size());
            for (std::size_t k = 0; k < nd.inputs.size(); ++k) {
                need_vec[k] = relevant[nd.inputs[k].index];
                any = any || need_vec[k];
            }
            if (!any) continue;
            // std::vector<bool> has no contiguous storage.
            std::unique_ptr<bool[]> need(new bool[nd.inputs.size()]);
            for (std::size_t k = 0; k < nd.inputs.size(); ++k) need[k] = need_vec[k];

            std::vector<Tensor<T>> local(nd.inputs.size(), Tensor<T>(Shape{0}));
            nd.backward(*this, nd.inputs, nd.value, grads[i],
                        std::span<const bool>(need.get(), nd.inputs.size()), local);

            for (std::size_t k = 0; k < nd.inputs.size(); ++k) {
                if (!need[k] || local[k].empty()) continue;
                const auto target = nd.inputs[k].index;
                const auto& expected = nodes_[target].value.shape();
                if (local[k].shape() != expected) {
                    throw ContractError("backward rule produced gradient of shape " +
                                        shape_string(local[k].shape()) + " for input of shape " +
                                        shape_string(expected));
                }
                if (!has_grad[target]) {
                    grads[target] = std::move(local[k]);
                    has_grad[target] = true;
                } else {
                    auto dst = grads[target].data();
                    auto src = local[k].data();
                    for (std::size_t e = 0; e < dst.size(); ++e) dst[e] += src[e];
                }
            }
            // Interior gradients are no longer needed once propagated.
            if (std::find(wrt.begin(), wrt.end(), NodeId{static_cast<std::uint32_t>(i)}) ==
                wrt.end()) {
                grads[i] = Tensor<T>(Shape{0});
            }
        }

        GradientMap<T> out;
        for (auto id : wrt) {
            if (id.index < n && has_grad[id.index]) {
                require_finite(grads[id.index], "gradient");
                out.insert_or_assign(id, grads[id.index]);
            } else {
                out.insert_or_assign(id, Tensor<T>::zeros(nodes_[id.index].value.shape()));
            }
        }
        return out;
    }

   private:
    NodeId push(OpKind kind, std::vector<NodeId> inputs, Tensor<T> value, BackwardFn<T> backward) {
        if (nodes_.size() >= std::numeric_limits<std::uint32_t>::max()) {
            throw ContractError("tape is full");
        }
        nodes_.push_back(Node{kind, std::move(inputs), std::move(value), std::move(backward)});
        return NodeId{static_cast<std::uint32_t>(nodes_.size() - 1)};
    }

    void check_id(NodeId id) const {
        if (id.index >= nodes_.size()) {
            throw ContractError("node id " + std::to_string(id.index) + " is not on this tape (size " +
                                std::to_string(nodes_.size()) + ")");
        }
    }

    static void require_finite(const Tensor<T>& t, std::string_view what) {
        if (!t.all_finite()) {
            throw NumericError("non-finite value produced by " + std::string(what));
        }
    }

    std::vector<Node> nodes_;
};

// ---------------------------------------------------------------------------
// Operations

namespace detail {

template <class T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class T>
using ConstMap = Eigen::Map<const RowMatrix<T>>;
template <class T>
using MutMap = Eigen::Map<RowMatrix<T>>;

template <class T>
void require_same_shape(const Tape<T>& tape, NodeId a, NodeId b, std::string_view op) {
    const auto& sa = tape.value(a).shape();
    const auto& sb = tape.value(b).shape();
    if (sa != sb) {
        throw DimensionError(std::string(op) + ": shapes " + shape_string(sa) + " and " +
                             shape_string(sb) + " differ");
    }
}

template <class T>
T sigmoid(T x) {
    // Clamped to the open interval so downstream logs stay finite.
    constexpr T lo = std::numeric_limits<T>::min();
    constexpr T hi = T{1} - std::numeric_limits<T>::epsilon() / 2;
    T s;
    if (x >= T{0}) {
        s = T{1} / (T{1} + std::exp(-x));
    } else {
        const T e = std::exp(x);
        s = e / (T{1} + e);
    }
    return std::clamp(s, lo, hi);
}

template <class T>
constexpr T log_floor() {
    return static_cast<T>(kLogEpsilon);
}
template <class T>
constexpr T log_ceiling() {
    return static_cast<T>(1.0 - kLogEpsilon);
}

}  // namespace detail

/// out[r, c] = sum_k x[r, k] * w[k, c] + b[c]
template <std::floating_point T>
NodeId affine(Tape<T>& tape, NodeId x, NodeId w, NodeId b) {
    const auto& xv = tape.value(x);
    const auto& wv = tape.value(w);
    const auto& bv = tape.value(b);
    if (xv.rank() != 2 || wv.rank() != 2 || bv.rank() != 1 || xv.cols() != wv.rows() ||
        bv.dim(0) != wv.cols()) {
        throw DimensionError("affine: incompatible shapes x" + shape_string(xv.shape()) + " W" +
                             shape_string(wv.shape()) + " b" + shape_string(bv.shape()));
    }
    const auto rows = xv.rows(), in = xv.cols(), out = wv.cols();
    Tensor<T> y(Shape{rows, out});
    {
        detail::ConstMap<T> X(xv.data().data(), rows, in);
        detail::ConstMap<T> W(wv.data().data(), in, out);
        detail::MutMap<T> Y(y.data().data(), rows, out);
        Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>> B(bv.data().data(), out);
        Y.noalias() = X * W;
        Y.rowwise() += B;
    }
    auto back = [](const Tape<T>& tp, std::span<const NodeId> ins, const Tensor<T>&,
                   const Tensor<T>& up, std::span<const bool> need, std::span<Tensor<T>> g) {
        const auto& xv = tp.value(ins[0]);
        const auto& wv = tp.value(ins[1]);
        const auto rows = xv.rows(), in = xv.cols(), out = wv.cols();
        detail::ConstMap<T> dY(up.data().data(), rows, out);
        if (need[0]) {
            g[0] = Tensor<T>(xv.shape());
            detail::ConstMap<T> W(wv.data().data(), in, out);
            detail::MutMap<T> dX(g[0].data().data(), rows, in);
            dX.noalias() = dY * W.transpose();
        }
        if (need[1]) {
            g[1] = Tensor<T>(wv.shape());
            detail::ConstMap<T> X(xv.data().data(), rows, in);
            detail::MutMap<T> dW(g[1].data().data(), in, out);
            dW.noalias() = X.transpose() * dY;
        }
        if (need[2]) {
            g[2] = Tensor<T>(Shape{out});
            Eigen::Map<Eigen::Matrix<T, 1, Eigen::Dynamic>> dB(g[2].data().data(), out);
            dB = dY.colwise().sum();
        }
    };
    return tape.record(OpKind::affine, {x, w, b}, std::move(y), back, "affine");
}

/// Element-wise relu / sigmoid / tanh / exp / log_safe.
template <std::floating_point T>
NodeId apply_unary(Tape<T>& tape, Unary kind, NodeId t) {
    const auto& tv = tape.value(t);
    Tensor<T> y(tv.shape());
    auto src = tv.data();
    auto dst = y.data();
    OpKind op;
    switch (kind) {
        case Unary::relu:
            op = OpKind::relu;
            for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] > T{0} ? src[i] : T{0};
            break;
        case Unary::sigmoid:
            op = OpKind::sigmoid;
            for (std::size_t i = 0; i < src.size(); ++i) dst[i] = detail::sigmoid(src[i]);
            break;
        case Unary::tanh:
            op = OpKind::tanh;
            for (std::size_t i = 0; i < src.size(); ++i) dst[i] = std::tanh(src[i]);
            break;
        case Unary::exp:
            op = OpKind::exp;
            for (std::size_t i = 0; i < src.size(); ++i) dst[i] = std::exp(src[i]);
            break;
        case Unary::log_safe:
            op = OpKind::log_safe;
            for (std::size_t i = 0; i < src.size(); ++i) {
                dst[i] = std::log(std::clamp(src[i], detail::log_floor<T>(), detail::log_ceiling<T>()));
            }
            break;
        default:
            throw ConfigError("unknown unary op kind " + std::to_string(static_cast<int>(kind)));
    }
    auto back = [kind](const Tape<T>& tp, std::span<const NodeId> ins, const Tensor<T>& out,
                       const Tensor<T>& up, std::span<const bool> need, std::span<Tensor<T>> g) {
        if (!need[0]) return;
        const auto& xv = tp.value(ins[0]);
        g[0] = Tensor<T>(xv.shape());
        auto dx = g[0].data();
        auto x = xv.data();
        auto y = out.data();
        auto dy = up.data();
        for (std::size_t i = 0; i < dx.size(); ++i) {
            switch (kind) {
                case Unary::relu:
                    // Subgradient at the kink is 0.
                    dx[i] = x[i] > T{0} ? dy[i] : T{0};
                    break;
                case Unary::sigmoid:
                    dx[i] = dy[i] * y[i] * (T{1} - y[i]);
                    break;
                case Unary::tanh:
                    dx[i] = dy[i] * (T{1} - y[i] * y[i]);
                    break;
                case Unary::exp:
                    dx[i] = dy[i] * y[i];
                    break;
                case Unary::log_safe:
                    dx[i] = (x[i] >= detail::log_floor<T>() && x[i] <= detail::log_ceiling<T>())
                                ? dy[i] / x[i]
                                : T{0};
                    break;
            }
        }
    };
    return tape.record(op, {t}, std::move(y), back, "unary");
}

template <std::floating_point T>
NodeId relu(Tape<T>& tape, NodeId t) {
    return apply_unary(tape, Unary::relu, t);
}
template <std::floating_point T>
NodeId sigmoid(Tape<T>& tape, NodeId t) {
    return apply_unary(tape, Unary::sigmoid, t);
}
template <std::floating_point T>
NodeId exp(Tape<T>& tape, NodeId t) {
    return apply_unary(tape, Unary::exp, t);
}
template <std::floating_point T>
NodeId log_safe(Tape<T>& tape, NodeId t) {
    return apply_unary(tape, Unary::log_safe, t);
}

enum class Reduce : std::uint8_t { sum, mean };

/// Full reduction to a rank-0 tensor.
template <std::floating_point T>
NodeId reduce(Tape<T>& tape, Reduce kind, NodeId t) {
    const auto& tv = tape.value(t);
    if (tv.empty()) throw DomainError("reduce over an empty tensor");
    // Accumulate in double so 32-bit losses over large batches stay stable.
    double acc = 0.0;
    for (T v : tv.data()) acc += static_cast<double>(v);
    const auto n = static_cast<double>(tv.size());
    const T result = static_cast<T>(kind == Reduce::mean ? acc / n : acc);
    auto back = [kind](const Tape<T>& tp, std::span<const NodeId> ins, const Tensor<T>&,
                       const Tensor<T>& up, std::span<const bool> need, std::span<Tensor<T>> g) {
        if (!need[0]) return;
        const auto& xv = tp.value(ins[0]);
        T scale = up.item();
        if (kind == Reduce::mean) scale /= static_cast<T>(xv.size());
        g[0] = Tensor<T>::filled(xv.shape(), scale);
    };
    return tape.record(kind == Reduce::mean ? OpKind::mean : OpKind::sum, {t}, Tensor<T>::scalar(result),
                       back, "reduce");
}

template <std::floating_point T>
NodeId sum(Tape<T>& tape, NodeId t) {
    return reduce(tape, Reduce::sum, t);
}
template <std::floating_point T>
NodeId mean(Tape<T>& tape, NodeId t) {
    return reduce(tape, Reduce::mean, t);
}

namespace detail {

enum class Binary { add, sub, mul };

template <class T>
NodeId binary(Tape<T>& tape, Binary kind, NodeId a, NodeId b, std::string_view name) {
    require_same_shape(tape, a, b, name);
    const auto& av = tape.value(a);
    const auto& bv = tape.value(b);
    Tensor<T> y(av.shape());
    auto x0 = av.data();
    auto x1 = bv.data();
    auto dst = y.data();
    for (std::size_t i = 0; i < dst.size(); ++i) {
        dst[i] = kind == Binary::add ? x0[i] + x1[i] : kind == Binary::sub ? x0[i] - x1[i] : x0[i] * x1[i];
    }
    auto back = [kind](const Tape<T>& tp, std::span<const NodeId> ins, const Tensor<T>&,
                       const Tensor<T>& up, std::span<const bool> need, std::span<Tensor<T>> g) {
        if (kind == Binary::mul) {
            if (need[0]) {
                g[0] = Tensor<T>(up.shape());
                auto rhs = tp.value(ins[1]).data();
                for (std::size_t i = 0; i < rhs.size(); ++i) g[0][i] = up[i] * rhs[i];
            }
            if (need[1]) {
                g[1] = Tensor<T>(up.shape());
                auto lhs = tp.value(ins[0]).data();
                for (std::size_t i = 0; i < lhs.size(); ++i) g[1][i] = up[i] * lhs[i];
            }
            return;
        }
        if (need[0]) g[0] = up;
        if (need[1]) {
            g[1] = up;
            if (kind == Binary::sub) {
                for (auto& v : g[1].data()) v = -v;
            }
        }
    };
    const OpKind op = kind == Binary::add ? OpKind::add : kind == Binary::sub ? OpKind::sub : OpKind::mul;
    return tape.record(op, {a, b}, std::move(y), back, name);
}

}  // namespace detail

template <std::floating_point T>
NodeId add(Tape<T>& tape, NodeId a, NodeId b) {
    return detail::binary(tape, detail::Binary::add, a, b, "add");
}
template <std::floating_point T>
NodeId sub(Tape<T>& tape, NodeId a, NodeId b) {
    return detail::binary(tape, detail::Binary::sub, a, b, "sub");
}
template <std::floating_point T>
NodeId mul(Tape<T>& tape, NodeId a, NodeId b) {
    return detail::binary(tape, detail::Binary::mul, a, b, "mul");
}

template <std::floating_point T>
NodeId square(Tape<T>& tape, NodeId t) {
    const auto& tv = tape.value(t);
    Tensor<T> y(tv.shape());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = tv[i] * tv[i];
    auto back = [](const Tape<T>& tp, std::span<const NodeId> ins, const Tensor<T>&, const Tensor<T>& up,
                   std::span<const bool> need, std::span<Tensor<T>> g) {
        if (!need[0]) return;
        const auto& xv = tp.value(ins[0]);
        g[0] = Tensor<T>(xv.shape());
        for (std::size_t i = 0; i < xv.size(); ++i) g[0][i] = T{2} * xv[i] * up[i];
    };
    return tape.record(OpKind::square, {t}, std::move(y), back, "square");
}

/// c * t
template <std::floating_point T>
NodeId scale(Tape<T>& tape, NodeId t, T c) {
    const auto& tv = tape.value(t);
    Tensor<T> y(tv.shape());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = c * tv[i];
    auto back = [c](const Tape<T>&, std::span<const NodeId>, const Tensor<T>&, const Tensor<T>& up,
                    std::span<const bool> need, std::span<Tensor<T>> g) {
        if (!need[0]) return;
        g[0] = Tensor<T>(up.shape());
        for (std::size_t i = 0; i < up.size(); ++i) g[0][i] = c * up[i];
    };
    return tape.record(OpKind::scale, {t}, std::move(y), back, "scale");
}

/// t + c
template <std::floating_point T>
NodeId add_scalar(Tape<T>& tape, NodeId t, T c) {
    const auto& tv = tape.value(t);
    Tensor<T> y(tv.shape());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = tv[i] + c;
    auto back = [](const Tape<T>&, std::span<const NodeId>, const Tensor<T>&, const Tensor<T>& up,
                   std::span<const bool> need, std::span<Tensor<T>> g) {
        if (need[0]) g[0] = up;
    };
    return tape.record(OpKind::add_scalar, {t}, std::move(y), back, "add_scalar");
}

/// Columns [begin, end) of a rank-2 tensor.
template <std::floating_point T>
NodeId slice_cols(Tape<T>& tape, NodeId t, std::size_t begin, std::size_t end) {
    const auto& tv = tape.value(t);
    if (tv.rank() != 2 || begin >= end || end > tv.cols()) {
        throw DimensionError("slice_cols [" + std::to_string(begin) + ", " + std::to_string(end) +
                             ") out of range for shape " + shape_string(tv.shape()));
    }
    const auto rows = tv.rows(), width = end - begin;
    Tensor<T> y(Shape{rows, width});
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < width; ++c) y.at(r, c) = tv.at(r, begin + c);
    }
    auto back = [begin](const Tape<T>& tp, std::span<const NodeId> ins, const Tensor<T>&,
                        const Tensor<T>& up, std::span<const bool> need, std::span<Tensor<T>> g) {
        if (!need[0]) return;
        g[0] = Tensor<T>(tp.value(ins[0]).shape());
        for (std::size_t r = 0; r < up.rows(); ++r) {
            for (std::size_t c = 0; c < up.cols(); ++c) g[0].at(r, begin + c) = up.at(r, c);
        }
    };
    return tape.record(OpKind::slice_cols, {t}, std::move(y), back, "slice_cols");
}

}  // namespace genlab
