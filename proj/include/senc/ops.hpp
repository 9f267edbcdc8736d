#pragma once

#include <cstdint>
#include <span>
#include <type_traits>
#include <vector>

#include "senc/tape.hpp"

namespace senc {

using TokenId = std::int32_t;

// Differentiable ops over rank-2 tape values. Shape errors throw
// DimensionError naming both shapes; id and label range errors throw
// InputError. Instantiated for float and double.

template <typename T> BasicVar<T> matmul(BasicVar<T> a, BasicVar<T> b);             // a[m x k] . b[k x n]
template <typename T> BasicVar<T> matmul_transposed(BasicVar<T> a, BasicVar<T> b);  // a[m x k] . b[n x k]^T

template <typename T> BasicVar<T> add(BasicVar<T> a, BasicVar<T> b);
template <typename T> BasicVar<T> sub(BasicVar<T> a, BasicVar<T> b);
template <typename T> BasicVar<T> mul(BasicVar<T> a, BasicVar<T> b);
// bias [1 x n] added to every row
template <typename T> BasicVar<T> add_bias(BasicVar<T> a, BasicVar<T> bias);
template <typename T> BasicVar<T> scale(BasicVar<T> a, std::type_identity_t<T> factor);
template <typename T> BasicVar<T> scale_rows(BasicVar<T> a, std::vector<std::type_identity_t<T>> factors);
template <typename T> BasicVar<T> tanh(BasicVar<T> a);
template <typename T> BasicVar<T> relu(BasicVar<T> a);
template <typename T> BasicVar<T> abs(BasicVar<T> a);

// Max-subtracted row softmax.
template <typename T> BasicVar<T> softmax_rows(BasicVar<T> a);
// Mean negative log-likelihood of `labels` under the row softmax of
// `logits`; returns a [1 x 1] value.
template <typename T> BasicVar<T> cross_entropy(BasicVar<T> logits, std::span<const int> labels);

template <typename T> BasicVar<T> gather_rows(BasicVar<T> table, std::span<const TokenId> ids);
// Row i is the sum of the table rows listed in bags[i]; an empty bag gives
// a zero row.
template <typename T>
BasicVar<T> bag_sum(BasicVar<T> table, const std::vector<std::vector<TokenId>>& bags);

template <typename T>
BasicVar<T> layer_norm(BasicVar<T> a, BasicVar<T> gain, BasicVar<T> bias, std::type_identity_t<T> eps = T(1e-5));

template <typename T>
BasicVar<T> slice(BasicVar<T> a, std::size_t row0, std::size_t nrows, std::size_t col0, std::size_t ncols);
template <typename T> BasicVar<T> slice_rows(BasicVar<T> a, std::size_t row0, std::size_t nrows);
template <typename T> BasicVar<T> concat_cols(std::span<const BasicVar<T>> parts);
template <typename T> BasicVar<T> concat_rows(std::span<const BasicVar<T>> parts);

// Multi-head scaled dot-product attention over a batch of sentences stacked
// row-wise. q, k, v are [sum(lengths) x d] (q already scaled); sentence s owns
// rows [offset_s, offset_s + lengths[s]) and attends only within itself. Head
// h uses columns [h*d/heads, (h+1)*d/heads). Result equals, bit for bit,
// slicing each (sentence, head), softmax(q k^T) v, then concatenating. The
// softmax weights (heads * sum n^2 floats) are kept for backward and counted
// as activations.
template <typename T>
BasicVar<T> multi_head_attention(BasicVar<T> q, BasicVar<T> k, BasicVar<T> v, std::span<const std::size_t> lengths,
                                 std::size_t heads);

template <typename T> BasicVar<T> sum_rows(BasicVar<T> a);  // [m x n] -> [1 x n]
template <typename T> BasicVar<T> max_rows(BasicVar<T> a);  // [m x n] -> [1 x n], column-wise max
template <typename T> BasicVar<T> sum_all(BasicVar<T> a);   // -> [1 x 1]

inline Var concat_cols(const std::vector<Var>& parts) { return concat_cols(std::span<const Var>(parts)); }
inline Var concat_rows(const std::vector<Var>& parts) { return concat_rows(std::span<const Var>(parts)); }

template <typename T> std::vector<T> softmax(std::span<const T> logits);

}  // namespace senc
