#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace senc {

using Shape = std::vector<std::size_t>;

std::string shape_str(const Shape& shape);
std::size_t shape_numel(const Shape& shape);

// Dense row-major array. Everything the encoders compute is a rank-2 tensor
// (vectors are 1 x d, scalars 1 x 1); higher ranks are representable but no
// differentiable op consumes them. Models run in float; the double
// instantiation exists so gradient oracles can run the same op code without
// float rounding noise.
template <typename T>
class BasicTensor {
public:
    using value_type = T;

    BasicTensor() = default;
    explicit BasicTensor(Shape shape, T fill = T(0));
    BasicTensor(Shape shape, std::vector<T> data);

    static BasicTensor matrix(std::size_t rows, std::size_t cols, T fill = T(0)) {
        return BasicTensor({rows, cols}, fill);
    }
    static BasicTensor from_rows(std::initializer_list<std::initializer_list<T>> rows);
    static BasicTensor row(std::span<const T> values);

    const Shape& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    // Rank-2 accessors; a rank-1 tensor reads as a single row.
    std::size_t rows() const;
    std::size_t cols() const;

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }
    std::span<T> values() { return data_; }
    std::span<const T> values() const { return data_; }
    std::vector<T>& storage() { return data_; }
    const std::vector<T>& storage() const { return data_; }

    T& operator[](std::size_t i) { return data_[i]; }
    T operator[](std::size_t i) const { return data_[i]; }
    T& at(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
    T at(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }

    std::span<T> row_span(std::size_t r) { return {data_.data() + r * cols(), cols()}; }
    std::span<const T> row_span(std::size_t r) const { return {data_.data() + r * cols(), cols()}; }

    void fill(T v);
    bool all_finite() const;

    friend bool operator==(const BasicTensor& a, const BasicTensor& b) = default;

private:
    Shape shape_;
    std::vector<T> data_;
};

using Tensor = BasicTensor<float>;
using TensorD = BasicTensor<double>;

extern template class BasicTensor<float>;
extern template class BasicTensor<double>;

// Throws NumericError naming `where` if any value is NaN or infinite.
template <typename T>
void require_finite(const BasicTensor<T>& t, const std::string& where);

}  // namespace senc
