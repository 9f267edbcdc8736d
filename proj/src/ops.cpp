#include "senc/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "senc/errors.hpp"

namespace senc {
namespace {

template <typename T>
std::string op_shapes(const char* op, const BasicTensor<T>& a, const BasicTensor<T>& b) {
    return std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
           shape_str(b.shape());
}

template <typename T>
void require_rank2(const char* op, const BasicTensor<T>& a) {
    if (a.rank() != 2) throw DimensionError(std::string(op) + ": expected rank 2, got " + shape_str(a.shape()));
}

template <typename T>
void require_same(const char* op, const BasicTensor<T>& a, const BasicTensor<T>& b) {
    require_rank2(op, a);
    require_rank2(op, b);
    if (a.shape() != b.shape()) throw DimensionError(op_shapes(op, a, b));
}

template <typename T, typename F>
BasicVar<T> unary(BasicVar<T> a, const char* name, F&& f, typename BasicTape<T>::BackwardFn back) {
    const BasicTensor<T>& x = a.value();
    require_rank2(name, x);
    BasicTensor<T> out(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = f(x[i]);
    const BasicVar<T> in[] = {a};
    return a.tape().record(std::move(out), in, std::move(back), name);
}

}  // namespace

template <typename T>
BasicVar<T> matmul(BasicVar<T> a, BasicVar<T> b) {
    const BasicTensor<T>& x = a.value();
    const BasicTensor<T>& y = b.value();
    require_rank2("matmul", x);
    require_rank2("matmul", y);
    if (x.cols() != y.rows()) throw DimensionError(op_shapes("matmul", x, y));
    const std::size_t m = x.rows(), k = x.cols(), n = y.cols();
    BasicTensor<T> out = BasicTensor<T>::matrix(m, n);
    for (std::size_t i = 0; i < m; ++i) {
        T* o = out.data() + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const T av = x[i * k + p];
            const T* yr = y.data() + p * n;
            for (std::size_t j = 0; j < n; ++j) o[j] += av * yr[j];
        }
    }
    BasicTape<T>& tape = a.tape();
    tape.count_multiply_adds(static_cast<std::uint64_t>(m) * k * n);
    const std::uint32_t ia = a.id(), ib = b.id();
    const BasicVar<T> in[] = {a, b};
    return tape.record(std::move(out), in, [ia, ib, m, k, n](BasicTape<T>& t, std::uint32_t self) {
        const BasicTensor<T>& g = t.grad_buffer(self);
        const BasicTensor<T>& x = t.value(ia);
        const BasicTensor<T>& y = t.value(ib);
        if (t.needs_grad(ia)) {
            BasicTensor<T>& ga = t.grad_buffer(ia);
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t p = 0; p < k; ++p) {
                    const T* gr = g.data() + i * n;
                    const T* yr = y.data() + p * n;
                    T s = T(0);
                    for (std::size_t j = 0; j < n; ++j) s += gr[j] * yr[j];
                    ga[i * k + p] += s;
                }
        }
        if (t.needs_grad(ib)) {
            BasicTensor<T>& gb = t.grad_buffer(ib);
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t p = 0; p < k; ++p) {
                    const T av = x[i * k + p];
                    const T* gr = g.data() + i * n;
                    T* out = gb.data() + p * n;
                    for (std::size_t j = 0; j < n; ++j) out[j] += av * gr[j];
                }
        }
    }, "matmul");
}

template <typename T>
BasicVar<T> matmul_transposed(BasicVar<T> a, BasicVar<T> b) {
    const BasicTensor<T>& x = a.value();
    const BasicTensor<T>& y = b.value();
    require_rank2("matmul_transposed", x);
    require_rank2("matmul_transposed", y);
    if (x.cols() != y.cols()) throw DimensionError(op_shapes("matmul_transposed", x, y));
    const std::size_t m = x.rows(), k = x.cols(), n = y.rows();
    BasicTensor<T> out = BasicTensor<T>::matrix(m, n);
    for (std::size_t i = 0; i < m; ++i) {
        const T* xr = x.data() + i * k;
        for (std::size_t j = 0; j < n; ++j) {
            const T* yr = y.data() + j * k;
            T s = T(0);
            for (std::size_t p = 0; p < k; ++p) s += xr[p] * yr[p];
            out[i * n + j] = s;
        }
    }
    BasicTape<T>& tape = a.tape();
    tape.count_multiply_adds(static_cast<std::uint64_t>(m) * k * n);
    const std::uint32_t ia = a.id(), ib = b.id();
    const BasicVar<T> in[] = {a, b};
    return tape.record(std::move(out), in, [ia, ib, m, k, n](BasicTape<T>& t, std::uint32_t self) {
        const BasicTensor<T>& g = t.grad_buffer(self);
        const BasicTensor<T>& x = t.value(ia);
        const BasicTensor<T>& y = t.value(ib);
        if (t.needs_grad(ia)) {
            BasicTensor<T>& ga = t.grad_buffer(ia);
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = 0; j < n; ++j) {
                    const T gv = g[i * n + j];
                    const T* yr = y.data() + j * k;
                    T* o = ga.data() + i * k;
                    for (std::size_t p = 0; p < k; ++p) o[p] += gv * yr[p];
                }
        }
        if (t.needs_grad(ib)) {
            BasicTensor<T>& gb = t.grad_buffer(ib);
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = 0; j < n; ++j) {
                    const T gv = g[i * n + j];
                    const T* xr = x.data() + i * k;
                    T* o = gb.data() + j * k;
                    for (std::size_t p = 0; p < k; ++p) o[p] += gv * xr[p];
                }
        }
    }, "matmul_transposed");
}

template <typename T>
BasicVar<T> add(BasicVar<T> a, BasicVar<T> b) {
    const BasicTensor<T>& x = a.value();
    const BasicTensor<T>& y = b.value();
    require_same("add", x, y);
    BasicTensor<T> out(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] + y[i];
    const std::uint32_t ia = a.id(), ib = b.id();
    const BasicVar<T> in[] = {a, b};
    return a.tape().record(std::move(out), in, [ia, ib](BasicTape<T>& t, std::uint32_t self) {
        const BasicTensor<T>& g = t.grad_buffer(self);
        for (std::uint32_t id : {ia, ib}) {
            if (!t.needs_grad(id)) continue;
            BasicTensor<T>& gi = t.grad_buffer(id);
            for (std::size_t i = 0; i < g.size(); ++i) gi[i] += g[i];
        }
    }, "add");
}

template <typename T>
BasicVar<T> sub(BasicVar<T> a, BasicVar<T> b) {
    const BasicTensor<T>& x = a.value();
    const BasicTensor<T>& y = b.value();
    require_same("sub", x, y);
    BasicTensor<T> out(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] - y[i];
    const std::uint32_t ia = a.id(), ib = b.id();
    const BasicVar<T> in[] = {a, b};
    return a.tape().record(std::move(out), in, [ia, ib](BasicTape<T>& t, std::uint32_t self) {
        const BasicTensor<T>& g = t.grad_buffer(self);
        if (t.needs_grad(ia)) {
            BasicTensor<T>& ga = t.grad_buffer(ia);
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
        }
        if (t.needs_grad(ib)) {
            BasicTensor<T>& gb = t.grad_buffer(ib);
            for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
        }
    }, "sub");
}

template <typename T>
BasicVar<T> mul(BasicVar<T> a, BasicVar<T> b) {
    const BasicTensor<T>& x = a.value();
    const BasicTensor<T>& y = b.value();
    require_same("mul", x, y);
    BasicTensor<T> out(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] * y[i];
    const std::uint32_t ia = a.id(), ib = b.id();
    const BasicVar<T> in[] = {a, b};
    return a.tape().record(std::move(out), in, [ia, ib](BasicTape<T>& t, std::uint32_t self) {
        const BasicTensor<T>& g = t.grad_buffer(self);
        const BasicTensor<T>& x = t.value(ia);
        const BasicTensor<T>& y = t.value(ib);
        if (t.needs_grad(ia)) {
            BasicTensor<T>& ga = t.grad_buffer(ia);
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * y[i];
        }
        if (t.needs_grad(ib)) {
            BasicTensor<T>& gb = t.grad_buffer(ib);
            for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * x[i];
        }
    }, "mul");
}

template <typename T>
BasicVar<T> add_bias(BasicVar<T> a, BasicVar<T> bias) {
    const BasicTensor<T>& x = a.value();
    const BasicTensor<T>& b = bias.value();
    require_rank2("add_bias", x);
    require_rank2("add_bias", b);
    if (b.rows() != 1 || b.cols() != x.cols()) throw DimensionError(op_shapes("add_bias", x, b));
    const std::size_t m = x.rows(), n = x.cols();
    BasicTensor<T> out(x.shape());
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out[i * n + j] = x[i * n + j] + b[j];
    const std::uint32_t ia = a.id(), ib = bias.id();
    const BasicVar<T> in[] = {a, bias};
    return a.tape().record(std::move(out), in, [ia, ib, m, n](BasicTape<T>& t, std::uint32_t self) {
        const BasicTensor<T>& g = t.grad_buffer(self);
        if (t.needs_grad(ia)) {
            BasicTensor<T>& ga = t.grad_buffer(ia);
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
        }
        if (t.needs_grad(ib)) {
            BasicTensor<T>& gb = t.grad_buffer(ib);
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = 0; j < n; ++j) gb[j] += g[i * n + j];
        }
    }, "add_bias");
}

template <typename T>
BasicVar<T> scale(BasicVar<T> a, std::type_identity_t<T> factor) {
    const std::uint32_t ia = a.id();
    return unary(a, "scale", [factor](T v) { return v * factor; },
                 [ia, factor](BasicTape<T>& t, std::uint32_t self) {
                     const BasicTensor<T>& g = t.grad_buffer(self);
                     BasicTensor<T>& ga = t.grad_buffer(ia);
                     for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * factor;
                 });
}

template <typename T>
BasicVar<T> scale_rows(BasicVar<T> a, std::vector<std::type_identity_t<T>> factors) {
    const BasicTensor<T>& x = a.value();
    require_rank2("scale_rows", x);
    if (factors.size() != x.rows()) {
        throw DimensionError("scale_rows: " + std::to_string(factors.size()) +
                             " factors for shape " + shape_str(x.shape()));
    }
    const std::size_t m = x.rows(), n = x.cols();
    BasicTensor<T> out(x.shape());
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out[i * n + j] = x[i * n + j] * factors[i];
    const std::uint32_t ia = a.id();
    const BasicVar<T> in[] = {a};
    return a.tape().record(std::move(out), in,
                           [ia, m, n, f = std::move(factors)](BasicTape<T>& t, std::uint32_t self) {
                               const BasicTensor<T>& g = t.grad_buffer(self);
                               BasicTensor<T>& ga = t.grad_buffer(ia);
                               for (std::size_t i = 0; i < m; ++i)
                                   for (std::size_t j = 0; j < n; ++j)
                                       ga[i * n + j] += g[i * n + j] * f[i];
                           },
                           "scale_rows");
}

template <typename T>
BasicVar<T> tanh(BasicVar<T> a) {
    const std::uint32_t ia = a.id();
    return unary(a, "tanh", [](T v) { return std::tanh(v); },
                 [ia](BasicTape<T>& t, std::uint32_t self) {
                     const BasicTensor<T>& g = t.grad_buffer(self);
                     const BasicTensor<T>& y = t.value(self);
                     BasicTensor<T>& ga = t.grad_buffer(ia);
                     for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * (T(1) - y[i] * y[i]);
                 });
}

template <typename T>
BasicVar<T> relu(BasicVar<T> a) {
    const std::uint32_t ia = a.id();
    return unary(a, "relu", [](T v) { return v > T(0) ? v : T(0); },
                 [ia](BasicTape<T>& t, std::uint32_t self) {
                     const BasicTensor<T>& g = t.grad_buffer(self);
                     const BasicTensor<T>& x = t.value(ia);
                     BasicTensor<T>& ga = t.grad_buffer(ia);
                     for (std::size_t i = 0; i < g.size(); ++i)
                         if (x[i] > T(0)) ga[i] += g[i];
                 });
}

template <typename T>
BasicVar<T> abs(BasicVar<T> a) {
    const std::uint32_t ia = a.id();
    return unary(a, "abs", [](T v) { return std::fabs(v); },
                 [ia](BasicTape<T>& t, std::uint32_t self) {
                     const BasicTensor<T>& g = t.grad_buffer(self);
                     const BasicTensor<T>& x = t.value(ia);
                     BasicTensor<T>& ga = t.grad_buffer(ia);
                     for (std::size_t i = 0; i < g.size(); ++i) {
                         if (x[i] > T(0)) ga[i] += g[i];
                         else if (x[i] < T(0)) ga[i] -= g[i];
                     }
                 });
}

template <typename T>
std::vector<T> softmax(std::span<const T> logits) {
    std::vector<T> out(logits.size());
    if (logits.empty()) return out;
    const T mx = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (std::size_t j = 0; j < logits.size(); ++j) {
        out[j] = std::exp(logits[j] - mx);
        sum += out[j];
    }
    const T inv = static_cast<T>(1.0 / sum);
    for (T& v : out) v *= inv;
    return out;
}

template <typename T>
BasicVar<T> softmax_rows(BasicVar<T> a) {
    const BasicTensor<T>& x = a.value();
    require_rank2("softmax_rows", x);
    const std::size_t m = x.rows(), n = x.cols();
    BasicTensor<T> out(x.shape());
    for (std::size_t i = 0; i < m; ++i) {
        auto p = softmax<T>(x.row_span(i));
        std::copy(p.begin(), p.end(), out.data() + i * n);
    }
    const std::uint32_t ia = a.id();
    const BasicVar<T> in[] = {a};
    return a.tape().record(std::move(out), in, [ia, m, n](BasicTape<T>& t, std::uint32_t self) {
        const BasicTensor<T>& g = t.grad_buffer(self);
        const BasicTensor<T>& y = t.value(self);
        BasicTensor<T>& ga = t.grad_buffer(ia);
        for (std::size_t i = 0; i < m; ++i) {
            T dot = T(0);
            for (std::size_t j = 0; j < n; ++j) dot += g[i * n + j] * y[i * n + j];
            for (std::size_t j = 0; j < n; ++j) ga[i * n + j] += y[i * n + j] * (g[i * n + j] - dot);
        }
    }, "softmax_rows");
}

template <typename T>
BasicVar<T> multi_head_attention(BasicVar<T> q, BasicVar<T> k, BasicVar<T> v, std::span<const std::size_t> lengths,
                                 std::size_t heads) {
    const BasicTensor<T>& Q = q.value();
    const BasicTensor<T>& K = k.value();
    const BasicTensor<T>& V = v.value();
    require_rank2("multi_head_attention", Q);
    if (K.shape() != Q.shape() || V.shape() != Q.shape())
        throw DimensionError(op_shapes("multi_head_attention", Q, K) + ", v " + shape_str(V.shape()));
    const std::size_t total = Q.rows(), d = Q.cols();
    if (heads == 0 || d % heads != 0)
        throw DimensionError("multi_head_attention: " + std::to_string(heads) + " heads do not divide width " +
                             std::to_string(d));
    if (std::accumulate(lengths.begin(), lengths.end(), std::size_t{0}) != total)
        throw DimensionError("multi_head_attention: lengths do not add up to " + std::to_string(total) + " rows");
    const std::size_t dk = d / heads;

    // softmax weights, sentence-major then head-major, n x n each
    std::vector<std::size_t> offsets, woff;
    std::size_t wsize = 0;
    for (std::size_t s = 0, r = 0; s < lengths.size(); r += lengths[s], ++s) {
        offsets.push_back(r);
        woff.push_back(wsize);
        wsize += heads * lengths[s] * lengths[s];
    }
    std::vector<T> w(wsize);
    BasicTensor<T> out = BasicTensor<T>::matrix(total, d);
    std::vector<T> row;
    std::uint64_t macs = 0;
    for (std::size_t s = 0; s < lengths.size(); ++s) {
        const std::size_t n = lengths[s], r0 = offsets[s];
        for (std::size_t h = 0; h < heads; ++h) {
            T* ws = w.data() + woff[s] + h * n * n;
            const std::size_t c0 = h * dk;
            row.resize(n);
            for (std::size_t i = 0; i < n; ++i) {
                const T* qr = Q.data() + (r0 + i) * d + c0;
                for (std::size_t j = 0; j < n; ++j) {
                    const T* kr = K.data() + (r0 + j) * d + c0;
                    T acc = T(0);
                    for (std::size_t p = 0; p < dk; ++p) acc += qr[p] * kr[p];
                    row[j] = acc;
                }
                auto pr = softmax<T>(std::span<const T>(row));
                std::copy(pr.begin(), pr.end(), ws + i * n);
                T* o = out.data() + (r0 + i) * d + c0;
                for (std::size_t j = 0; j < n; ++j) {
                    const T wv = ws[i * n + j];
                    const T* vr = V.data() + (r0 + j) * d + c0;
                    for (std::size_t c = 0; c < dk; ++c) o[c] += wv * vr[c];
                }
            }
            macs += 2 * static_cast<std::uint64_t>(n) * n * dk;
        }
    }
    BasicTape<T>& tape = q.tape();
    tape.count_multiply_adds(macs);
    tape.count_activation_floats(wsize);
    const std::uint32_t iq = q.id(), ik = k.id(), iv = v.id();
    const BasicVar<T> in[] = {q, k, v};
    std::vector<std::size_t> lens(lengths.begin(), lengths.end());
    return tape.record(
        std::move(out), in,
        [iq, ik, iv, d, dk, heads, lens = std::move(lens), offsets = std::move(offsets), woff = std::move(woff),
         w = std::move(w)](BasicTape<T>& t, std::uint32_t self) {
            const BasicTensor<T>& g = t.grad_buffer(self);
            const BasicTensor<T>& Q = t.value(iq);
            const BasicTensor<T>& K = t.value(ik);
            const BasicTensor<T>& V = t.value(iv);
            T* gq = t.needs_grad(iq) ? t.grad_buffer(iq).data() : nullptr;
            T* gk = t.needs_grad(ik) ? t.grad_buffer(ik).data() : nullptr;
            T* gv = t.needs_grad(iv) ? t.grad_buffer(iv).data() : nullptr;
            std::vector<T> dw;
            for (std::size_t s = 0; s < lens.size(); ++s) {
                const std::size_t n = lens[s], r0 = offsets[s];
                dw.resize(n);
                for (std::size_t h = 0; h < heads; ++h) {
                    const T* ws = w.data() + woff[s] + h * n * n;
                    const std::size_t c0 = h * dk;
                    for (std::size_t i = 0; i < n; ++i) {
                        const T* gr = g.data() + (r0 + i) * d + c0;
                        // dW row, then the softmax Jacobian gives dS row
                        T dot = T(0);
                        for (std::size_t j = 0; j < n; ++j) {
                            const T* vr = V.data() + (r0 + j) * d + c0;
                            T acc = T(0);
                            for (std::size_t c = 0; c < dk; ++c) acc += gr[c] * vr[c];
                            dw[j] = acc;
                            dot += acc * ws[i * n + j];
                            if (gv) {
                                T* o = gv + (r0 + j) * d + c0;
                                const T wv = ws[i * n + j];
                                for (std::size_t c = 0; c < dk; ++c) o[c] += wv * gr[c];
                            }
                        }
                        const T* qr = Q.data() + (r0 + i) * d + c0;
                        for (std::size_t j = 0; j < n; ++j) {
                            const T ds = ws[i * n + j] * (dw[j] - dot);
                            const T* kr = K.data() + (r0 + j) * d + c0;
                            if (gq) {
                                T* o = gq + (r0 + i) * d + c0;
                                for (std::size_t p = 0; p < dk; ++p) o[p] += ds * kr[p];
                            }
                            if (gk) {
                                T* o = gk + (r0 + j) * d + c0;
                                for (std::size_t p = 0; p < dk; ++p) o[p] += ds * qr[p];
                            }
                        }
                    }
                }
            }
        },
        "multi_head_attention");
}

template <typename T>
BasicVar<T> cross_entropy(BasicVar<T> logits, std::span<const int> labels) {
    const BasicTensor<T>& x = logits.value();
    require_rank2("cross_entropy", x);
    const std::size_t m = x.rows(), c = x.cols();
    if (labels.size() != m) {
        throw DimensionError("cross_entropy: " + std::to_string(labels.size()) +
                             " labels for logits " + shape_str(x.shape()));
    }
    if (m == 0) throw InputError("cross_entropy: empty batch");
    std::vector<T> probs(m * c);
    double loss = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const int y = labels[i];
        if (y < 0 || static_cast<std::size_t>(y) >= c) {
            throw InputError("cross_entropy: label " + std::to_string(y) + " outside [0, " +
                             std::to_string(c) + ")");
        }
        auto row = x.row_span(i);
        const T mx = *std::max_element(row.begin(), row.end());
        double sum = 0.0;
        for (std::size_t j = 0; j < c; ++j) sum += std::exp(static_cast<double>(row[j] - mx));
        const double log_z = std::log(sum) + mx;
        loss += log_z - row[y];
        for (std::size_t j = 0; j < c; ++j)
            probs[i * c + j] = static_cast<T>(std::exp(static_cast<double>(row[j]) - log_z));
    }
    BasicTensor<T> out({1, 1}, static_cast<T>(loss / static_cast<double>(m)));
    const std::uint32_t ia = logits.id();
    std::vector<int> ys(labels.begin(), labels.end());
    const BasicVar<T> in[] = {logits};
    return logits.tape().record(
        std::move(out), in,
        [ia, m, c, probs = std::move(probs), ys = std::move(ys)](BasicTape<T>& t, std::uint32_t self) {
            const T g = t.grad_buffer(self)[0] / static_cast<T>(m);
            BasicTensor<T>& ga = t.grad_buffer(ia);
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = 0; j < c; ++j) {
                    const T onehot = static_cast<int>(j) == ys[i] ? T(1) : T(0);
                    ga[i * c + j] += g * (probs[i * c + j] - onehot);
                }
        },
        "cross_entropy");
}

template <typename T>
BasicVar<T> gather_rows(BasicVar<T> table, std::span<const TokenId> ids) {
    const BasicTensor<T>& tab = table.value();
    require_rank2("gather_rows", tab);
    const std::size_t v = tab.rows(), d = tab.cols();
    BasicTensor<T> out = BasicTensor<T>::matrix(ids.size(), d);
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= v) {
            throw InputError("gather_rows: id " + std::to_string(ids[i]) +
                             " outside table of " + std::to_string(v) + " rows");
        }
        std::copy_n(tab.data() + ids[i] * d, d, out.data() + i * d);
    }
    const std::uint32_t it = table.id();
    std::vector<TokenId> idv(ids.begin(), ids.end());
    const BasicVar<T> in[] = {table};
    return table.tape().record(std::move(out), in,
                               [it, d, idv = std::move(idv)](BasicTape<T>& t, std::uint32_t self) {
                                   const BasicTensor<T>& g = t.grad_buffer(self);
                                   BasicTensor<T>& gt = t.grad_buffer(it);
                                   for (std::size_t i = 0; i < idv.size(); ++i) {
                                       T* dst = gt.data() + idv[i] * d;
                                       const T* src = g.data() + i * d;
                                       for (std::size_t j = 0; j < d; ++j) dst[j] += src[j];
                                   }
                               },
                               "gather_rows");
}

template <typename T>
BasicVar<T> bag_sum(BasicVar<T> table, const std::vector<std::vector<TokenId>>& bags) {
    const BasicTensor<T>& tab = table.value();
    require_rank2("bag_sum", tab);
    const std::size_t v = tab.rows(), d = tab.cols();
    BasicTensor<T> out = BasicTensor<T>::matrix(bags.size(), d);
    std::uint64_t adds = 0;
    for (std::size_t i = 0; i < bags.size(); ++i) {
        T* o = out.data() + i * d;
        for (TokenId id : bags[i]) {
            if (id < 0 || static_cast<std::size_t>(id) >= v) {
                throw InputError("bag_sum: id " + std::to_string(id) + " outside table of " +
                                 std::to_string(v) + " rows");
            }
            const T* src = tab.data() + id * d;
            for (std::size_t j = 0; j < d; ++j) o[j] += src[j];
        }
        adds += bags[i].size() * d;
    }
    BasicTape<T>& tape = table.tape();
    tape.count_multiply_adds(adds);
    const std::uint32_t it = table.id();
    const BasicVar<T> in[] = {table};
    return tape.record(std::move(out), in, [it, d, bags](BasicTape<T>& t, std::uint32_t self) {
        const BasicTensor<T>& g = t.grad_buffer(self);
        BasicTensor<T>& gt = t.grad_buffer(it);
        for (std::size_t i = 0; i < bags.size(); ++i)
            for (TokenId id : bags[i]) {
                T* dst = gt.data() + id * d;
                const T* src = g.data() + i * d;
                for (std::size_t j = 0; j < d; ++j) dst[j] += src[j];
            }
    }, "bag_sum");
}

template <typename T>
BasicVar<T> layer_norm(BasicVar<T> a, BasicVar<T> gain, BasicVar<T> bias, std::type_identity_t<T> eps) {
    const BasicTensor<T>& x = a.value();
    const BasicTensor<T>& gv = gain.value();
    const BasicTensor<T>& bv = bias.value();
    require_rank2("layer_norm", x);
    const std::size_t m = x.rows(), n = x.cols();
    if (n == 0) throw DimensionError("layer_norm: zero-width rows");
    if (gv.size() != n || bv.size() != n) throw DimensionError(op_shapes("layer_norm", x, gv));
    BasicTensor<T> out(x.shape());
    std::vector<T> xhat(m * n);
    std::vector<T> inv_std(m);
    for (std::size_t i = 0; i < m; ++i) {
        const T* r = x.data() + i * n;
        double mean = 0.0;
        for (std::size_t j = 0; j < n; ++j) mean += r[j];
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (std::size_t j = 0; j < n; ++j) var += (r[j] - mean) * (r[j] - mean);
        var /= static_cast<double>(n);
        const T is = static_cast<T>(1.0 / std::sqrt(var + eps));
        inv_std[i] = is;
        for (std::size_t j = 0; j < n; ++j) {
            const T h = static_cast<T>(r[j] - mean) * is;
            xhat[i * n + j] = h;
            out[i * n + j] = gv[j] * h + bv[j];
        }
    }
    const std::uint32_t ia = a.id(), ig = gain.id(), ib = bias.id();
    const BasicVar<T> in[] = {a, gain, bias};
    return a.tape().record(
        std::move(out), in,
        [ia, ig, ib, m, n, xhat = std::move(xhat), inv_std = std::move(inv_std)](BasicTape<T>& t,
                                                                                 std::uint32_t self) {
            const BasicTensor<T>& g = t.grad_buffer(self);
            const BasicTensor<T>& gv = t.value(ig);
            if (t.needs_grad(ig)) {
                BasicTensor<T>& gg = t.grad_buffer(ig);
                for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t j = 0; j < n; ++j) gg[j] += g[i * n + j] * xhat[i * n + j];
            }
            if (t.needs_grad(ib)) {
                BasicTensor<T>& gb = t.grad_buffer(ib);
                for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t j = 0; j < n; ++j) gb[j] += g[i * n + j];
            }
            if (t.needs_grad(ia)) {
                BasicTensor<T>& ga = t.grad_buffer(ia);
                const T inv_n = T(1) / static_cast<T>(n);
                for (std::size_t i = 0; i < m; ++i) {
                    T mean_d = T(0), mean_dx = T(0);
                    for (std::size_t j = 0; j < n; ++j) {
                        const T dh = g[i * n + j] * gv[j];
                        mean_d += dh;
                        mean_dx += dh * xhat[i * n + j];
                    }
                    mean_d *= inv_n;
                    mean_dx *= inv_n;
                    for (std::size_t j = 0; j < n; ++j) {
                        const T dh = g[i * n + j] * gv[j];
                        ga[i * n + j] += inv_std[i] * (dh - mean_d - xhat[i * n + j] * mean_dx);
                    }
                }
            }
        },
        "layer_norm");
}

template <typename T>
BasicVar<T> slice(BasicVar<T> a, std::size_t row0, std::size_t nrows, std::size_t col0, std::size_t ncols) {
    const BasicTensor<T>& x = a.value();
    require_rank2("slice", x);
    const std::size_t n = x.cols();
    if (row0 + nrows > x.rows() || col0 + ncols > n) {
        throw DimensionError("slice: rows [" + std::to_string(row0) + ", +" + std::to_string(nrows) +
                             ") cols [" + std::to_string(col0) + ", +" + std::to_string(ncols) +
                             ") outside " + shape_str(x.shape()));
    }
    BasicTensor<T> out = BasicTensor<T>::matrix(nrows, ncols);
    for (std::size_t i = 0; i < nrows; ++i)
        std::copy_n(x.data() + (row0 + i) * n + col0, ncols, out.data() + i * ncols);
    const std::uint32_t ia = a.id();
    const BasicVar<T> in[] = {a};
    return a.tape().record(std::move(out), in,
                           [ia, row0, nrows, col0, ncols, n](BasicTape<T>& t, std::uint32_t self) {
                               const BasicTensor<T>& g = t.grad_buffer(self);
                               BasicTensor<T>& ga = t.grad_buffer(ia);
                               for (std::size_t i = 0; i < nrows; ++i)
                                   for (std::size_t j = 0; j < ncols; ++j)
                                       ga[(row0 + i) * n + col0 + j] += g[i * ncols + j];
                           },
                           "slice");
}

template <typename T>
BasicVar<T> slice_rows(BasicVar<T> a, std::size_t row0, std::size_t nrows) {
    return slice(a, row0, nrows, 0, a.cols());
}

template <typename T>
BasicVar<T> concat_cols(std::span<const BasicVar<T>> parts) {
    if (parts.empty()) throw DimensionError("concat_cols: no inputs");
    const std::size_t m = parts[0].rows();
    std::size_t total = 0;
    std::vector<std::size_t> widths;
    for (const BasicVar<T>& p : parts) {
        require_rank2("concat_cols", p.value());
        if (p.rows() != m) throw DimensionError(op_shapes("concat_cols", parts[0].value(), p.value()));
        widths.push_back(p.cols());
        total += p.cols();
    }
    BasicTensor<T> out = BasicTensor<T>::matrix(m, total);
    std::size_t off = 0;
    for (const BasicVar<T>& p : parts) {
        const BasicTensor<T>& x = p.value();
        const std::size_t w = x.cols();
        for (std::size_t i = 0; i < m; ++i) std::copy_n(x.data() + i * w, w, out.data() + i * total + off);
        off += w;
    }
    std::vector<std::uint32_t> ids;
    for (const BasicVar<T>& p : parts) ids.push_back(p.id());
    return parts[0].tape().record(
        std::move(out), parts,
        [ids = std::move(ids), widths = std::move(widths), m, total](BasicTape<T>& t, std::uint32_t self) {
            const BasicTensor<T>& g = t.grad_buffer(self);
            std::size_t off = 0;
            for (std::size_t k = 0; k < ids.size(); ++k) {
                const std::size_t w = widths[k];
                if (t.needs_grad(ids[k])) {
                    BasicTensor<T>& gk = t.grad_buffer(ids[k]);
                    for (std::size_t i = 0; i < m; ++i)
                        for (std::size_t j = 0; j < w; ++j) gk[i * w + j] += g[i * total + off + j];
                }
                off += w;
            }
        },
        "concat_cols");
}

template <typename T>
BasicVar<T> concat_rows(std::span<const BasicVar<T>> parts) {
    if (parts.empty()) throw DimensionError("concat_rows: no inputs");
    const std::size_t n = parts[0].cols();
    std::size_t total = 0;
    for (const BasicVar<T>& p : parts) {
        require_rank2("concat_rows", p.value());
        if (p.cols() != n) throw DimensionError(op_shapes("concat_rows", parts[0].value(), p.value()));
        total += p.rows();
    }
    std::vector<T> data;
    data.reserve(total * n);
    std::vector<std::uint32_t> ids;
    std::vector<std::size_t> sizes;
    for (const BasicVar<T>& p : parts) {
        const auto& s = p.value().storage();
        data.insert(data.end(), s.begin(), s.end());
        ids.push_back(p.id());
        sizes.push_back(s.size());
    }
    return parts[0].tape().record(
        BasicTensor<T>({total, n}, std::move(data)), parts,
        [ids = std::move(ids), sizes = std::move(sizes)](BasicTape<T>& t, std::uint32_t self) {
            const BasicTensor<T>& g = t.grad_buffer(self);
            std::size_t off = 0;
            for (std::size_t k = 0; k < ids.size(); ++k) {
                if (t.needs_grad(ids[k])) {
                    BasicTensor<T>& gk = t.grad_buffer(ids[k]);
                    for (std::size_t i = 0; i < sizes[k]; ++i) gk[i] += g[off + i];
                }
                off += sizes[k];
            }
        },
        "concat_rows");
}

template <typename T>
BasicVar<T> sum_rows(BasicVar<T> a) {
    const BasicTensor<T>& x = a.value();
    require_rank2("sum_rows", x);
    const std::size_t m = x.rows(), n = x.cols();
    BasicTensor<T> out = BasicTensor<T>::matrix(1, n);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out[j] += x[i * n + j];
    BasicTape<T>& tape = a.tape();
    tape.count_multiply_adds(static_cast<std::uint64_t>(m) * n);
    const std::uint32_t ia = a.id();
    const BasicVar<T> in[] = {a};
    return tape.record(std::move(out), in, [ia, m, n](BasicTape<T>& t, std::uint32_t self) {
        const BasicTensor<T>& g = t.grad_buffer(self);
        BasicTensor<T>& ga = t.grad_buffer(ia);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j) ga[i * n + j] += g[j];
    }, "sum_rows");
}

template <typename T>
BasicVar<T> max_rows(BasicVar<T> a) {
    const BasicTensor<T>& x = a.value();
    require_rank2("max_rows", x);
    const std::size_t m = x.rows(), n = x.cols();
    if (m == 0) throw DimensionError("max_rows: no rows");
    BasicTensor<T> out = BasicTensor<T>::matrix(1, n);
    std::vector<std::size_t> argmax(n, 0);
    for (std::size_t j = 0; j < n; ++j) {
        T best = x[j];
        for (std::size_t i = 1; i < m; ++i)
            if (x[i * n + j] > best) {
                best = x[i * n + j];
                argmax[j] = i;
            }
        out[j] = best;
    }
    const std::uint32_t ia = a.id();
    const BasicVar<T> in[] = {a};
    return a.tape().record(std::move(out), in,
                           [ia, n, argmax = std::move(argmax)](BasicTape<T>& t, std::uint32_t self) {
                               const BasicTensor<T>& g = t.grad_buffer(self);
                               BasicTensor<T>& ga = t.grad_buffer(ia);
                               for (std::size_t j = 0; j < n; ++j) ga[argmax[j] * n + j] += g[j];
                           },
                           "max_rows");
}

template <typename T>
BasicVar<T> sum_all(BasicVar<T> a) {
    const BasicTensor<T>& x = a.value();
    double s = 0.0;
    for (T v : x.values()) s += v;
    const std::uint32_t ia = a.id();
    const BasicVar<T> in[] = {a};
    return a.tape().record(BasicTensor<T>({1, 1}, static_cast<T>(s)), in,
                           [ia](BasicTape<T>& t, std::uint32_t self) {
                               const T g = t.grad_buffer(self)[0];
                               BasicTensor<T>& ga = t.grad_buffer(ia);
                               for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g;
                           },
                           "sum_all");
}

#define SENC_INSTANTIATE_OPS(T)                                                                   \
    template std::vector<T> softmax<T>(std::span<const T>);                                       \
    template BasicVar<T> matmul(BasicVar<T>, BasicVar<T>);                                        \
    template BasicVar<T> matmul_transposed(BasicVar<T>, BasicVar<T>);                             \
    template BasicVar<T> add(BasicVar<T>, BasicVar<T>);                                           \
    template BasicVar<T> sub(BasicVar<T>, BasicVar<T>);                                           \
    template BasicVar<T> mul(BasicVar<T>, BasicVar<T>);                                           \
    template BasicVar<T> add_bias(BasicVar<T>, BasicVar<T>);                                      \
    template BasicVar<T> scale(BasicVar<T>, T);                                                   \
    template BasicVar<T> scale_rows(BasicVar<T>, std::vector<T>);                                 \
    template BasicVar<T> tanh(BasicVar<T>);                                                       \
    template BasicVar<T> relu(BasicVar<T>);                                                       \
    template BasicVar<T> abs(BasicVar<T>);                                                        \
    template BasicVar<T> softmax_rows(BasicVar<T>);                                               \
    template BasicVar<T> multi_head_attention(BasicVar<T>, BasicVar<T>, BasicVar<T>,              \
                                              std::span<const std::size_t>, std::size_t);         \
    template BasicVar<T> cross_entropy(BasicVar<T>, std::span<const int>);                        \
    template BasicVar<T> gather_rows(BasicVar<T>, std::span<const TokenId>);                      \
    template BasicVar<T> bag_sum(BasicVar<T>, const std::vector<std::vector<TokenId>>&);          \
    template BasicVar<T> layer_norm(BasicVar<T>, BasicVar<T>, BasicVar<T>, T);                    \
    template BasicVar<T> slice(BasicVar<T>, std::size_t, std::size_t, std::size_t, std::size_t);  \
    template BasicVar<T> slice_rows(BasicVar<T>, std::size_t, std::size_t);                       \
    template BasicVar<T> concat_cols(std::span<const BasicVar<T>>);                               \
    template BasicVar<T> concat_rows(std::span<const BasicVar<T>>);                               \
    template BasicVar<T> sum_rows(BasicVar<T>);                                                   \
    template BasicVar<T> max_rows(BasicVar<T>);                                                   \
    template BasicVar<T> sum_all(BasicVar<T>);

SENC_INSTANTIATE_OPS(float)
SENC_INSTANTIATE_OPS(double)

}  // namespace senc
