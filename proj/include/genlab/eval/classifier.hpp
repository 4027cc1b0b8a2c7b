#pragma once

#include <algorithm>
#include <cstdint>
#include <iostream>
#include <vector>

#include "genlab/data/batches.hpp"
#include "genlab/data/idx.hpp"
#include "genlab/data/rng.hpp"
#include "genlab/denormals.hpp"
#include "genlab/error.hpp"
#include "genlab/eval/entropy.hpp"
#include "genlab/models/trainers.hpp"
#include "genlab/nn/mlp.hpp"
#include "genlab/nn/optimizer.hpp"
#include "genlab/nn/softmax.hpp"

namespace genlab {

/// Test accuracy the reference classifier must reach to be trusted.
inline constexpr double kClassifierAccuracyFloor = 0.93;

struct ClassifierConfig {
    std::size_t hidden = 128;
    std::size_t epochs = 5;
    std::size_t batch_size = 100;
    OptimizerConfig optimizer = OptimizerConfig::adam(1e-3, 0.9, 0.999);
    std::uint64_t seed = 0;
};

struct ClassifierResult {
    Mlp<float> net;
    double test_accuracy = 0.0;
    bool passed_gate = false;
};

inline Mlp<float> make_classifier(std::size_t input_width, const ClassifierConfig& cfg) {
    return init_mlp<float>({input_width, cfg.hidden, kDigitClasses}, Activation::identity,
                           InitSpec{InitScheme::xavier_uniform, 0.02, cfg.seed}, Role::classifier);
}

/// Softmax probabilities, one row per image.
inline Tensor<float> classify(const Mlp<float>& classifier, const Tensor<float>& images) {
    for (float v : images.data()) {
        if (!(v >= 0.0f && v <= 1.0f)) throw DataError("classify: pixel outside [0, 1]");
    }
    return softmax_rows(infer(classifier, images));
}

inline std::vector<std::uint8_t> argmax_rows(const Tensor<float>& probs) {
    std::vector<std::uint8_t> out(probs.rows());
    for (std::size_t r = 0; r < probs.rows(); ++r) {
        auto row = probs.row(r);
        out[r] = static_cast<std::uint8_t>(std::max_element(row.begin(), row.end()) - row.begin());
    }
    return out;
}

inline double accuracy(const Mlp<float>& classifier, const IdxDataset& data) {
    std::size_t correct = 0;
    constexpr std::size_t chunk = 1000;
    for (std::size_t start = 0; start < data.size(); start += chunk) {
        const auto end = std::min(start + chunk, data.size());
        std::vector<float> pixels(data.images.data().begin() + static_cast<std::ptrdiff_t>(start * data.width()),
                                  data.images.data().begin() + static_cast<std::ptrdiff_t>(end * data.width()));
        const auto pred = argmax_rows(classify(classifier, Tensor<float>(Shape{end - start, data.width()}, std::move(pixels))));
        for (std::size_t i = 0; i < pred.size(); ++i) correct += pred[i] == data.labels[start + i];
    }
    return static_cast<double>(correct) / static_cast<double>(data.size());
}

/// Trains the 784-128-10 reference classifier with softmax cross-entropy
/// and reports its accuracy on `test`.
inline ClassifierResult train_classifier(const IdxDataset& train, const IdxDataset& test, const ClassifierConfig& cfg) {
    ScopedFlushDenormals ftz;
    ClassifierResult result{make_classifier(train.width(), cfg)};
    Optimizer<float> opt(cfg.optimizer);
    BatchPlan plan(train, cfg.batch_size, RngStream(cfg.seed, "classifier/batches"), true);
    const std::size_t steps = cfg.epochs * plan.batches_per_epoch();
    for (std::size_t s = 0; s < steps; ++s) {
        const Batch batch = plan.next();
        Tape<float> tape;
        const BoundMlp bound = forward_mlp(result.net, tape.leaf(batch.images), tape);
        const auto ce = softmax_cross_entropy(tape, bound.output, batch.labels);
        opt.step(result.net, bound, tape.backward(ce.loss, bound.params));
    }
    result.test_accuracy = accuracy(result.net, test);
    result.passed_gate = result.test_accuracy >= kClassifierAccuracyFloor;
    if (!result.passed_gate) {
        std::cerr << "warning: classifier test accuracy " << result.test_accuracy << " is below the "
                  << kClassifierAccuracyFloor << " floor; entropy measurements may be unreliable\n";
    }
    return result;
}

struct CheckpointEvaluation {
    EntropyReport report;
    std::vector<ImageEntropyRecord> images;

    std::vector<double> image_entropies() const {
        std::vector<double> out;
        out.reserve(images.size());
        for (const auto& r : images) out.push_back(r.entropy);
        return out;
    }
};

/// Samples `samples` images from `generator`, classifies them, and reports
/// mode entropy over hard labels plus per-image entropy.
inline CheckpointEvaluation evaluate_checkpoint(const Mlp<float>& generator, const Mlp<float>& classifier,
                                                std::size_t samples, RngStream& rng, std::uint64_t iteration = 0) {
    if (samples < 100) throw ConfigError("evaluate_checkpoint: need at least 100 samples");
    if (generator.output_width() != classifier.input_width()) {
        throw DimensionError("evaluate_checkpoint: generator emits width " + std::to_string(generator.output_width()) +
                             " but classifier expects " + std::to_string(classifier.input_width()));
    }
    CheckpointEvaluation eval;
    std::vector<std::uint8_t> predicted;
    predicted.reserve(samples);
    constexpr std::size_t chunk = 1000;
    for (std::size_t start = 0; start < samples; start += chunk) {
        const auto n = std::min(chunk, samples - start);
        const Tensor<float> images = infer(generator, standard_normal<float>(n, generator.input_width(), rng));
        const Tensor<float> probs = classify(classifier, images);
        const auto labels = argmax_rows(probs);
        for (std::size_t r = 0; r < n; ++r) {
            eval.images.push_back({start + r, labels[r], image_entropy(probs.row(r))});
            predicted.push_back(labels[r]);
        }
    }
    eval.report.iteration = iteration;
    eval.report.samples = samples;
    eval.report.histogram = class_histogram(predicted);
    eval.report.mode_entropy = entropy_nats(eval.report.histogram);
    return eval;
}

}  // namespace genlab
