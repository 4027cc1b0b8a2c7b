#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "genlab/error.hpp"
#include "genlab/tape.hpp"

namespace genlab {

/// Row-wise softmax with max-subtraction.
template <std::floating_point T>
Tensor<T> softmax_rows(const Tensor<T>& logits) {
    if (logits.rank() != 2) throw DimensionError("softmax: expected rank-2 logits, got " + shape_string(logits.shape()));
    Tensor<T> probs(logits.shape());
    const auto cols = logits.cols();
    for (std::size_t r = 0; r < logits.rows(); ++r) {
        auto row = logits.row(r);
        const T peak = *std::max_element(row.begin(), row.end());
        double total = 0.0;
        for (std::size_t c = 0; c < cols; ++c) {
            const double e = std::exp(static_cast<double>(row[c] - peak));
            probs.at(r, c) = static_cast<T>(e);
            total += e;
        }
        for (std::size_t c = 0; c < cols; ++c) probs.at(r, c) = static_cast<T>(probs.at(r, c) / total);
    }
    return probs;
}

template <std::floating_point T>
struct SoftmaxCrossEntropy {
    NodeId loss;        // scalar: mean over rows of -ln p[r, label_r]
    Tensor<T> probs;    // B x classes
};

/// Fused softmax + negative log-likelihood, averaged over the batch.
template <std::floating_point T>
SoftmaxCrossEntropy<T> softmax_cross_entropy(Tape<T>& tape, NodeId logits, std::span<const std::uint8_t> labels) {
    const auto& lv = tape.value(logits);
    if (lv.rank() != 2) throw DimensionError("softmax_cross_entropy: logits shape " + shape_string(lv.shape()));
    const auto rows = lv.rows(), classes = lv.cols();
    if (labels.size() != rows) {
        throw DimensionError("softmax_cross_entropy: " + std::to_string(rows) + " rows but " +
                             std::to_string(labels.size()) + " labels");
    }
    for (auto l : labels) {
        if (l >= classes) {
            throw DataError("softmax_cross_entropy: label " + std::to_string(l) + " outside [0, " +
                            std::to_string(classes) + ")");
        }
    }
    // log-sum-exp form keeps -ln p finite even when p underflows.
    double total = 0.0;
    for (std::size_t r = 0; r < rows; ++r) {
        auto row = lv.row(r);
        const double peak = *std::max_element(row.begin(), row.end());
        double z = 0.0;
        for (auto v : row) z += std::exp(static_cast<double>(v) - peak);
        total += -(static_cast<double>(row[labels[r]]) - peak - std::log(z));
    }
    Tensor<T> probs = softmax_rows(lv);
    std::vector<std::uint8_t> owned(labels.begin(), labels.end());
    auto back = [probs, owned = std::move(owned)](const Tape<T>&, std::span<const NodeId>, const Tensor<T>&,
                                                  const Tensor<T>& up, std::span<const bool> need,
                                                  std::span<Tensor<T>> g) {
        if (!need[0]) return;
        const auto rows = probs.rows();
        const T scale = up.item() / static_cast<T>(rows);
        g[0] = probs;
        for (std::size_t r = 0; r < rows; ++r) {
            g[0].at(r, owned[r]) -= T{1};
            for (std::size_t c = 0; c < probs.cols(); ++c) g[0].at(r, c) *= scale;
        }
    };
    const NodeId loss = tape.record(OpKind::softmax_cross_entropy, {logits},
                                    Tensor<T>::scalar(static_cast<T>(total / static_cast<double>(rows))), back,
                                    "softmax_cross_entropy");
    return {loss, std::move(probs)};
}

}  // namespace genlab
