#include "senc/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "senc/errors.hpp"

namespace senc {

std::string shape_str(const Shape& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << 'x';
        os << shape[i];
    }
    os << ']';
    return os.str();
}

std::size_t shape_numel(const Shape& shape) {
    std::size_t n = 1;
    for (auto d : shape) n *= d;
    return n;
}

template <typename T>
BasicTensor<T>::BasicTensor(Shape shape, T fill) : shape_(std::move(shape)) {
    data_.assign(shape_numel(shape_), fill);
}

template <typename T>
BasicTensor<T>::BasicTensor(Shape shape, std::vector<T> data) : shape_(std::move(shape)), data_(std::move(data)) {
    if (shape_numel(shape_) != data_.size()) {
        throw DimensionError("tensor shape " + shape_str(shape_) + " holds " + std::to_string(shape_numel(shape_)) +
                             " values, got " + std::to_string(data_.size()));
    }
}

template <typename T>
BasicTensor<T> BasicTensor<T>::from_rows(std::initializer_list<std::initializer_list<T>> rows) {
    const std::size_t r = rows.size();
    const std::size_t c = r ? rows.begin()->size() : 0;
    std::vector<T> data;
    data.reserve(r * c);
    for (const auto& row : rows) {
        if (row.size() != c) throw DimensionError("ragged row list in from_rows");
        data.insert(data.end(), row.begin(), row.end());
    }
    return BasicTensor({r, c}, std::move(data));
}

template <typename T>
BasicTensor<T> BasicTensor<T>::row(std::span<const T> values) {
    return BasicTensor({1, values.size()}, std::vector<T>(values.begin(), values.end()));
}

template <typename T>
std::size_t BasicTensor<T>::rows() const {
    if (shape_.size() == 2) return shape_[0];
    if (shape_.size() == 1) return 1;
    throw DimensionError("expected a rank-2 tensor, got " + shape_str(shape_));
}

template <typename T>
std::size_t BasicTensor<T>::cols() const {
    if (shape_.size() == 2) return shape_[1];
    if (shape_.size() == 1) return shape_[0];
    throw DimensionError("expected a rank-2 tensor, got " + shape_str(shape_));
}

template <typename T>
void BasicTensor<T>::fill(T v) {
    std::fill(data_.begin(), data_.end(), v);
}

template <typename T>
bool BasicTensor<T>::all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](T v) { return std::isfinite(v); });
}

template <typename T>
void require_finite(const BasicTensor<T>& t, const std::string& where) {
    if (!t.all_finite()) {
        throw NumericError("non-finite value produced by " + where + " (shape " + shape_str(t.shape()) + ")");
    }
}

template class BasicTensor<float>;
template class BasicTensor<double>;
template void require_finite(const BasicTensor<float>&, const std::string&);
template void require_finite(const BasicTensor<double>&, const std::string&);

}  // namespace senc
