#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "genlab/error.hpp"

namespace genlab {

inline constexpr std::size_t kDigitClasses = 10;
inline const double kMaxDigitEntropy = std::log(10.0);

/// Class histogram and its entropy for one evaluation of a generator.
struct EntropyReport {
    std::uint64_t iteration = 0;
    std::vector<double> histogram;  // p_i = count_i / total
    double mode_entropy = 0.0;      // nats
    std::size_t samples = 0;
};

struct ImageEntropyRecord {
    std::size_t index = 0;
    std::uint8_t predicted = 0;
    double entropy = 0.0;  // nats
};

/// Empirical class frequencies of hard labels.
inline std::vector<double> class_histogram(std::span<const std::uint8_t> labels, std::size_t n_classes = kDigitClasses) {
    if (labels.empty()) throw DomainError("class histogram of an empty label list");
    std::vector<std::size_t> counts(n_classes, 0);
    for (auto l : labels) {
        if (l >= n_classes) {
            throw DataError("label " + std::to_string(l) + " outside [0, " + std::to_string(n_classes) + ")");
        }
        ++counts[l];
    }
    std::vector<double> p(n_classes);
    for (std::size_t i = 0; i < n_classes; ++i) {
        p[i] = static_cast<double>(counts[i]) / static_cast<double>(labels.size());
    }
    return p;
}

/// -sum p ln p over a distribution, with 0 ln 0 = 0.
inline double entropy_nats(std::span<const double> p) {
    double h = 0.0;
    for (double v : p) {
        if (v > 0.0) h -= v * std::log(v);
    }
    return h;
}

/// Entropy (nats) of the empirical label distribution.
inline double mode_entropy(std::span<const std::uint8_t> labels, std::size_t n_classes = kDigitClasses) {
    const auto p = class_histogram(labels, n_classes);
    return entropy_nats(p);
}

/// Entropy (nats) of one predicted-probability row. Reported as a
/// nonnegative number: low means a confident prediction.
template <class T>
double image_entropy(std::span<const T> row) {
    double total = 0.0;
    for (T v : row) {
        if (!(v >= T{0})) throw ContractError("image_entropy: negative or NaN probability");
        total += static_cast<double>(v);
    }
    if (std::abs(total - 1.0) > 1e-6) {
        throw ContractError("image_entropy: probabilities sum to " + std::to_string(total) + ", expected 1");
    }
    double h = 0.0;
    for (T v : row) {
        const double p = static_cast<double>(v);
        if (p > 0.0) h -= p * std::log(p);
    }
    return std::max(h, 0.0);
}

inline double median(std::vector<double> values) {
    if (values.empty()) throw DomainError("median of an empty list");
    const auto mid = values.size() / 2;
    std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
    const double upper = values[mid];
    if (values.size() % 2 == 1) return upper;
    const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lower + upper);
}

}  // namespace genlab
