#pragma once

#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace dlab {

// Dense row-major tensor. Shapes are plain vectors; most code indexes the
// flat buffer directly.
template <typename T>
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(std::vector<std::size_t> shape, T fill = T(0))
        : shape_(std::move(shape)),
          data_(numel_of(shape_), fill) {}

    Tensor(std::initializer_list<std::size_t> shape, T fill = T(0))
        : Tensor(std::vector<std::size_t>(shape), fill) {}

    static std::size_t numel_of(const std::vector<std::size_t>& shape) {
        std::size_t n = 1;
        for (std::size_t d : shape) n *= d;
        return n;
    }

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t numel() const { return data_.size(); }
    std::size_t dim(std::size_t i) const { return shape_.at(i); }
    std::size_t rank() const { return shape_.size(); }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }

    T& operator[](std::size_t i) { return data_[i]; }
    const T& operator[](std::size_t i) const { return data_[i]; }

    // 2D access, [rows, cols]
    T& at2(std::size_t r, std::size_t c) { return data_[r * shape_[1] + c]; }
    const T& at2(std::size_t r, std::size_t c) const { return data_[r * shape_[1] + c]; }

    // 4D access, [b, c, h, w]
    T& at4(std::size_t b, std::size_t c, std::size_t h, std::size_t w) {
        return data_[((b * shape_[1] + c) * shape_[2] + h) * shape_[3] + w];
    }
    const T& at4(std::size_t b, std::size_t c, std::size_t h, std::size_t w) const {
        return data_[((b * shape_[1] + c) * shape_[2] + h) * shape_[3] + w];
    }

    void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

    bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

    Tensor reshaped(std::vector<std::size_t> shape) const {
        if (numel_of(shape) != numel())
            throw std::invalid_argument("reshape: element count mismatch");
        Tensor out = *this;
        out.shape_ = std::move(shape);
        return out;
    }

    template <typename U>
    Tensor<U> cast() const {
        Tensor<U> out(shape_);
        for (std::size_t i = 0; i < numel(); ++i) out[i] = static_cast<U>(data_[i]);
        return out;
    }

    bool operator==(const Tensor& o) const { return shape_ == o.shape_ && data_ == o.data_; }

private:
    std::vector<std::size_t> shape_;
    std::vector<T> data_;
};

inline std::string shape_str(const std::vector<std::size_t>& s) {
    std::string out = "[";
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(s[i]);
    }
    return out + "]";
}

}  // namespace dlab
