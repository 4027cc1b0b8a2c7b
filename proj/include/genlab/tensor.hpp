#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <functional>
#include <new>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "genlab/error.hpp"

namespace genlab {

using Shape = std::vector<std::size_t>;

inline std::size_t element_count(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>{});
}

inline std::string shape_string(const Shape& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << 'x';
        os << shape[i];
    }
    os << ']';
    return os.str();
}

/// Storage allocator with a fixed 64-byte alignment. Vectorized kernels
/// pick their loop peeling from the buffer address, so a fixed alignment
/// keeps floating-point results identical from run to run.
template <class T>
struct AlignedAllocator {
    using value_type = T;
    static constexpr std::align_val_t kAlignment{64};

    AlignedAllocator() noexcept = default;
    template <class U>
    AlignedAllocator(const AlignedAllocator<U>&) noexcept {}

    T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), kAlignment)); }
    void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, kAlignment); }

    template <class U>
    friend bool operator==(const AlignedAllocator&, const AlignedAllocator<U>&) noexcept {
        return true;
    }
};

/// Dense row-major array. Rank 0 (empty shape) holds a single scalar.
template <std::floating_point T>
class Tensor {
   public:
    using value_type = T;

    Tensor() : shape_{}, data_(1, T{0}) {}

    explicit Tensor(Shape shape) : shape_(std::move(shape)), data_(element_count(shape_), T{0}) {}

    Tensor(Shape shape, const std::vector<T>& data) : shape_(std::move(shape)), data_(data.begin(), data.end()) {
        if (element_count(shape_) != data_.size()) {
            throw DimensionError("tensor shape " + shape_string(shape_) + " needs " +
                                 std::to_string(element_count(shape_)) + " values, got " +
                                 std::to_string(data_.size()));
        }
    }

    static Tensor scalar(T value) { return Tensor(Shape{}, std::vector<T>{value}); }

    static Tensor filled(Shape shape, T value) {
        const auto n = element_count(shape);
        return Tensor(std::move(shape), std::vector<T>(n, value));
    }

    static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }

    /// 2-D convenience constructor from nested rows.
    static Tensor matrix(std::initializer_list<std::initializer_list<T>> rows) {
        std::vector<T> flat;
        std::size_t cols = rows.size() ? rows.begin()->size() : 0;
        for (const auto& r : rows) {
            if (r.size() != cols) throw DimensionError("ragged matrix literal");
            flat.insert(flat.end(), r.begin(), r.end());
        }
        return Tensor(Shape{rows.size(), cols}, std::move(flat));
    }

    static Tensor vector(std::initializer_list<T> values) {
        return Tensor(Shape{values.size()}, std::vector<T>(values));
    }

    const Shape& shape() const noexcept { return shape_; }
    std::size_t rank() const noexcept { return shape_.size(); }
    std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }
    bool is_scalar() const noexcept { return data_.size() == 1; }

    /// Rows/cols for rank-2 tensors.
    std::size_t rows() const { return shape_.at(0); }
    std::size_t cols() const { return shape_.at(1); }

    std::span<const T> data() const noexcept { return data_; }
    std::span<T> data() noexcept { return data_; }

    T operator[](std::size_t i) const { return data_[i]; }
    T& operator[](std::size_t i) { return data_[i]; }

    T at(std::size_t r, std::size_t c) const { return data_[r * shape_.at(1) + c]; }
    T& at(std::size_t r, std::size_t c) { return data_[r * shape_.at(1) + c]; }

    T item() const {
        if (data_.size() != 1) {
            throw ContractError("item() on non-scalar tensor of shape " + shape_string(shape_));
        }
        return data_[0];
    }

    std::span<const T> row(std::size_t r) const {
        const auto c = shape_.at(1);
        return std::span<const T>(data_).subspan(r * c, c);
    }

    bool all_finite() const noexcept {
        return std::all_of(data_.begin(), data_.end(), [](T v) { return std::isfinite(v); });
    }

    template <std::floating_point U>
    Tensor<U> cast() const {
        std::vector<U> out(data_.begin(), data_.end());
        return Tensor<U>(shape_, std::move(out));
    }

    Tensor reshaped(Shape shape) const {
        if (element_count(shape) != data_.size()) {
            throw DimensionError("cannot reshape " + shape_string(shape_) + " to " + shape_string(shape));
        }
        Tensor out = *this;
        out.shape_ = std::move(shape);
        return out;
    }

    friend bool operator==(const Tensor& a, const Tensor& b) = default;

   private:
    Shape shape_;
    std::vector<T, AlignedAllocator<T>> data_;
};

}  // namespace genlab
