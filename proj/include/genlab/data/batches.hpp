#pragma once

#include <cstdint>
#include <numeric>
#include <utility>
#include <vector>

#include "genlab/data/idx.hpp"
#include "genlab/data/rng.hpp"
#include "genlab/error.hpp"

namespace genlab {

struct Batch {
    Tensor<float> images;  // B x width
    std::vector<std::uint8_t> labels;
    std::vector<std::size_t> indices;  // dataset rows the batch was drawn from
};

/// Endless sequence of batches over a dataset. Each epoch walks a
/// permutation (Fisher-Yates from the plan's own stream when shuffling,
/// identity otherwise) and ends with a short batch if N % B != 0.
class BatchPlan {
   public:
    BatchPlan(const IdxDataset& data, std::size_t batch_size, RngStream rng, bool shuffle)
        : data_(&data), batch_size_(batch_size), rng_(std::move(rng)), shuffle_(shuffle) {
        if (batch_size_ == 0) throw ConfigError("batch size must be positive");
        if (data.size() == 0) throw ConfigError("cannot batch an empty dataset");
        if (batch_size_ > data.size()) {
            throw ConfigError("batch size " + std::to_string(batch_size_) + " exceeds dataset size " +
                              std::to_string(data.size()));
        }
        order_.resize(data.size());
        start_epoch();
    }

    Batch next() {
        if (cursor_ >= order_.size()) start_epoch();
        const std::size_t end = std::min(cursor_ + batch_size_, order_.size());
        const std::size_t width = data_->width();
        Batch batch;
        batch.indices.assign(order_.begin() + static_cast<std::ptrdiff_t>(cursor_),
                             order_.begin() + static_cast<std::ptrdiff_t>(end));
        std::vector<float> pixels;
        pixels.reserve(batch.indices.size() * width);
        for (auto idx : batch.indices) {
            auto row = data_->images.row(idx);
            pixels.insert(pixels.end(), row.begin(), row.end());
            batch.labels.push_back(data_->labels[idx]);
        }
        batch.images = Tensor<float>(Shape{batch.indices.size(), width}, std::move(pixels));
        cursor_ = end;
        return batch;
    }

    std::size_t batch_size() const noexcept { return batch_size_; }
    std::size_t batches_per_epoch() const noexcept { return (order_.size() + batch_size_ - 1) / batch_size_; }
    std::uint64_t epoch() const noexcept { return epoch_; }
    std::size_t cursor() const noexcept { return cursor_; }

   private:
    void start_epoch() {
        std::iota(order_.begin(), order_.end(), std::size_t{0});
        if (shuffle_) {
            for (std::size_t i = order_.size(); i > 1; --i) {
                const auto j = static_cast<std::size_t>(rng_.below(i));
                std::swap(order_[i - 1], order_[j]);
            }
        }
        cursor_ = 0;
        ++epoch_;
    }

    const IdxDataset* data_;
    std::size_t batch_size_;
    RngStream rng_;
    bool shuffle_;
    std::vector<std::size_t> order_;
    std::size_t cursor_ = 0;
    std::uint64_t epoch_ = 0;
};

}  // namespace genlab
