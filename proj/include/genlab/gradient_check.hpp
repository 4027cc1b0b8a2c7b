#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "genlab/error.hpp"
#include "genlab/tape.hpp"

namespace genlab {

/// Builds a scalar loss on `tape` from leaf nodes holding the checked inputs.
using CheckedFunction = std::function<NodeId(Tape<double>& tape, std::span<const NodeId> inputs)>;

struct GradientCheckResult {
    double max_relative_error = 0.0;
    std::size_t checked = 0;
    std::size_t skipped = 0;  // coordinates whose stencil crosses a relu kink or clamp edge
};

namespace detail {

// Which side of every non-smooth point the evaluation landed on.
inline std::vector<signed char> kink_pattern(const Tape<double>& tape) {
    std::vector<signed char> pattern;
    for (std::uint32_t i = 0; i < tape.size(); ++i) {
        const auto& nd = tape.node(NodeId{i});
        if (nd.kind != OpKind::relu && nd.kind != OpKind::log_safe) continue;
        for (double v : tape.value(nd.inputs[0]).data()) {
            if (nd.kind == OpKind::relu) {
                pattern.push_back(v > 0.0 ? 1 : 0);
            } else {
                pattern.push_back(v < kLogEpsilon ? -1 : v > 1.0 - kLogEpsilon ? 1 : 0);
            }
        }
    }
    return pattern;
}

}  // namespace detail

/// Compares reverse-mode gradients of `f` against central differences,
/// coordinate by coordinate, with step h = 1e-6 * max(1, |x_i|).
///
/// Relative error uses the denominator max(|analytic|, |numeric|, 1e-8).
/// A coordinate is skipped when its stencil changes which side of a relu
/// kink or log clamp some intermediate value lies on.
inline GradientCheckResult gradient_check(const CheckedFunction& f, std::vector<Tensor<double>> inputs) {
    auto evaluate = [&](const std::vector<Tensor<double>>& xs, Tape<double>& tape) {
        std::vector<NodeId> ids;
        ids.reserve(xs.size());
        for (const auto& x : xs) ids.push_back(tape.leaf(x));
        const NodeId out = f(tape, ids);
        if (!tape.value(out).is_scalar()) {
            throw ContractError("gradient_check: function output has shape " +
                                shape_string(tape.value(out).shape()) + ", expected a scalar");
        }
        return std::pair{out, ids};
    };

    Tape<double> base;
    auto [loss, ids] = evaluate(inputs, base);
    const auto grads = base.backward(loss, ids);
    const auto base_pattern = detail::kink_pattern(base);

    GradientCheckResult result;
    for (std::size_t t = 0; t < inputs.size(); ++t) {
        const auto& analytic = grads.at(ids[t]);
        for (std::size_t i = 0; i < inputs[t].size(); ++i) {
            const double x0 = inputs[t][i];
            const double h = 1e-6 * std::max(1.0, std::abs(x0));

            inputs[t][i] = x0 + h;
            Tape<double> plus;
            const double f_plus = plus.value(evaluate(inputs, plus).first).item();
            inputs[t][i] = x0 - h;
            Tape<double> minus;
            const double f_minus = minus.value(evaluate(inputs, minus).first).item();
            inputs[t][i] = x0;

            const auto pp = detail::kink_pattern(plus);
            const auto pm = detail::kink_pattern(minus);
            if (pp != base_pattern || pm != base_pattern) {
                ++result.skipped;
                continue;
            }

            const double numeric = (f_plus - f_minus) / (2.0 * h);
            const double a = analytic[i];
            const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
            result.max_relative_error = std::max(result.max_relative_error, std::abs(a - numeric) / denom);
            ++result.checked;
        }
    }
    return result;
}

inline GradientCheckResult gradient_check(const std::function<NodeId(Tape<double>&, NodeId)>& f,
                                          const Tensor<double>& x) {
    return gradient_check(
        [&](Tape<double>& tape, std::span<const NodeId> ids) { return f(tape, ids[0]); },
        std::vector<Tensor<double>>{x});
}

}  // namespace genlab
