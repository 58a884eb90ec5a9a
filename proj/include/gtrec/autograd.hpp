#pragma once

// Minimal reverse-mode automatic differentiation over dense rank-1/rank-2
// tensors. Every op records a backward closure; backward(loss) replays them
// in reverse topological order. Values are checked for NaN/Inf after every
// forward op. T is float for training, double for gradient checking.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "gtrec/errors.hpp"

namespace gtrec::ad {

template <typename T>
class Tensor {
public:
    struct Node {
        std::vector<size_t> shape;
        std::vector<T> values;
        std::vector<T> grad;  // sized on first accumulation
        bool requires_grad = false;
        std::vector<std::shared_ptr<Node>> parents;
        std::function<void(Node&)> backward;

        size_t numel() const { return values.size(); }
        void ensure_grad() {
            if (grad.size() != values.size()) grad.assign(values.size(), T{0});
        }
    };

    Tensor() = default;

    static Tensor parameter(std::vector<size_t> shape, std::vector<T> values) {
        Tensor t = make(std::move(shape), std::move(values), "parameter");
        t.n_->requires_grad = true;
        return t;
    }
    static Tensor constant(std::vector<size_t> shape, std::vector<T> values) {
        return make(std::move(shape), std::move(values), "constant");
    }
    static Tensor scalar(T v) { return constant({1}, {v}); }
    template <typename U>
    static Tensor constant_cast(std::vector<size_t> shape, std::span<const U> values) {
        std::vector<T> v(values.begin(), values.end());
        return constant(std::move(shape), std::move(v));
    }

    bool defined() const { return n_ != nullptr; }
    const std::vector<size_t>& shape() const { return n_->shape; }
    size_t dim(size_t i) const { return n_->shape[i]; }
    size_t rank() const { return n_->shape.size(); }
    size_t numel() const { return n_->numel(); }
    const std::vector<T>& values() const { return n_->values; }
    std::vector<T>& values_mut() { return n_->values; }  // for optimizers / grad check
    const std::vector<T>& grad() const {
        n_->ensure_grad();
        return n_->grad;
    }
    bool requires_grad() const { return n_->requires_grad; }
    T item() const { return n_->values.at(0); }
    void zero_grad() { n_->grad.assign(n_->values.size(), T{0}); }

    std::shared_ptr<Node> node() const { return n_; }

    static Tensor make(std::vector<size_t> shape, std::vector<T> values, const char* op) {
        size_t n = 1;
        for (size_t d : shape) n *= d;
        if (n != values.size())
            throw ShapeMismatch(std::string(op) + ": shape/value size disagree");
        for (T v : values)
            if (!std::isfinite(static_cast<double>(v)))
                throw NonFiniteValue(std::string(op) + " produced NaN/Inf");
        Tensor t;
        t.n_ = std::make_shared<Node>();
        t.n_->shape = std::move(shape);
        t.n_->values = std::move(values);
        return t;
    }

private:
    std::shared_ptr<Node> n_;
};

namespace detail {

template <typename T>
using NodePtr = std::shared_ptr<typename Tensor<T>::Node>;

template <typename T>
Tensor<T> attach(Tensor<T> out, std::vector<NodePtr<T>> parents,
                 std::function<void(typename Tensor<T>::Node&)> backward) {
    bool needs = false;
    for (const auto& p : parents) needs = needs || p->requires_grad;
    if (needs) {
        out.node()->requires_grad = true;
        out.node()->parents = std::move(parents);
        out.node()->backward = std::move(backward);
    }
    return out;
}

template <typename T>
void require_rank(const Tensor<T>& t, size_t r, const char* op) {
    if (t.rank() != r) throw ShapeMismatch(std::string(op) + ": wrong rank");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// elementwise

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
    if (a.shape() != b.shape()) throw ShapeMismatch("add: shapes differ");
    std::vector<T> v(a.numel());
    for (size_t i = 0; i < v.size(); ++i) v[i] = a.values()[i] + b.values()[i];
    auto pa = a.node(), pb = b.node();
    return detail::attach<T>(
        Tensor<T>::make(a.shape(), std::move(v), "add"), {pa, pb},
        [pa, pb](typename Tensor<T>::Node& out) {
            if (pa->requires_grad) {
                pa->ensure_grad();
                for (size_t i = 0; i < out.grad.size(); ++i) pa->grad[i] += out.grad[i];
            }
            if (pb->requires_grad) {
                pb->ensure_grad();
                for (size_t i = 0; i < out.grad.size(); ++i) pb->grad[i] += out.grad[i];
            }
        });
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
    if (a.shape() != b.shape()) throw ShapeMismatch("sub: shapes differ");
    std::vector<T> v(a.numel());
    for (size_t i = 0; i < v.size(); ++i) v[i] = a.values()[i] - b.values()[i];
    auto pa = a.node(), pb = b.node();
    return detail::attach<T>(
        Tensor<T>::make(a.shape(), std::move(v), "sub"), {pa, pb},
        [pa, pb](typename Tensor<T>::Node& out) {
            if (pa->requires_grad) {
                pa->ensure_grad();
                for (size_t i = 0; i < out.grad.size(); ++i) pa->grad[i] += out.grad[i];
            }
            if (pb->requires_grad) {
                pb->ensure_grad();
                for (size_t i = 0; i < out.grad.size(); ++i) pb->grad[i] -= out.grad[i];
            }
        });
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
    if (a.shape() != b.shape()) throw ShapeMismatch("mul: shapes differ");
    std::vector<T> v(a.numel());
    for (size_t i = 0; i < v.size(); ++i) v[i] = a.values()[i] * b.values()[i];
    auto pa = a.node(), pb = b.node();
    return detail::attach<T>(
        Tensor<T>::make(a.shape(), std::move(v), "mul"), {pa, pb},
        [pa, pb](typename Tensor<T>::Node& out) {
            if (pa->requires_grad) {
                pa->ensure_grad();
                for (size_t i = 0; i < out.grad.size(); ++i)
                    pa->grad[i] += out.grad[i] * pb->values[i];
            }
            if (pb->requires_grad) {
                pb->ensure_grad();
                for (size_t i = 0; i < out.grad.size(); ++i)
                    pb->grad[i] += out.grad[i] * pa->values[i];
            }
        });
}

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T c) {
    std::vector<T> v(a.numel());
    for (size_t i = 0; i < v.size(); ++i) v[i] = a.values()[i] * c;
    auto pa = a.node();
    return detail::attach<T>(Tensor<T>::make(a.shape(), std::move(v), "scale"), {pa},
                             [pa, c](typename Tensor<T>::Node& out) {
                                 pa->ensure_grad();
                                 for (size_t i = 0; i < out.grad.size(); ++i)
                                     pa->grad[i] += out.grad[i] * c;
                             });
}

template <typename T>
Tensor<T> relu(const Tensor<T>& a) {
    std::vector<T> v(a.numel());
    for (size_t i = 0; i < v.size(); ++i) v[i] = a.values()[i] > T{0} ? a.values()[i] : T{0};
    auto pa = a.node();
    return detail::attach<T>(Tensor<T>::make(a.shape(), std::move(v), "relu"), {pa},
                             [pa](typename Tensor<T>::Node& out) {
                                 pa->ensure_grad();
                                 for (size_t i = 0; i < out.grad.size(); ++i)
                                     if (pa->values[i] > T{0}) pa->grad[i] += out.grad[i];
                             });
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& a) {
    std::vector<T> v(a.numel());
    for (size_t i = 0; i < v.size(); ++i) {
        const T x = a.values()[i];
        v[i] = x >= T{0} ? T{1} / (T{1} + std::exp(-x))
                         : std::exp(x) / (T{1} + std::exp(x));
    }
    auto pa = a.node();
    return detail::attach<T>(
        Tensor<T>::make(a.shape(), std::move(v), "sigmoid"), {pa},
        [pa](typename Tensor<T>::Node& out) {
            pa->ensure_grad();
            for (size_t i = 0; i < out.grad.size(); ++i)
                pa->grad[i] += out.grad[i] * out.values[i] * (T{1} - out.values[i]);
        });
}

// log sigmoid(x), evaluated without overflow on either tail
template <typename T>
Tensor<T> log_sigmoid(const Tensor<T>& a) {
    std::vector<T> v(a.numel());
    for (size_t i = 0; i < v.size(); ++i) {
        const T x = a.values()[i];
        v[i] = x >= T{0} ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
    }
    auto pa = a.node();
    return detail::attach<T>(
        Tensor<T>::make(a.shape(), std::move(v), "log_sigmoid"), {pa},
        [pa](typename Tensor<T>::Node& out) {
            pa->ensure_grad();
            for (size_t i = 0; i < out.grad.size(); ++i)
                pa->grad[i] += out.grad[i] * (T{1} - std::exp(out.values[i]));
        });
}

template <typename T>
Tensor<T> log(const Tensor<T>& a) {
    std::vector<T> v(a.numel());
    for (size_t i = 0; i < v.size(); ++i) v[i] = std::log(a.values()[i]);
    auto pa = a.node();
    return detail::attach<T>(Tensor<T>::make(a.shape(), std::move(v), "log"), {pa},
                             [pa](typename Tensor<T>::Node& out) {
                                 pa->ensure_grad();
                                 for (size_t i = 0; i < out.grad.size(); ++i)
                                     pa->grad[i] += out.grad[i] / pa->values[i];
                             });
}

// ---------------------------------------------------------------------------
// matrix ops

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
    detail::require_rank(a, 2, "matmul");
    detail::require_rank(b, 2, "matmul");
    const size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
    if (b.dim(0) != k) throw ShapeMismatch("matmul: inner dims differ");
    std::vector<T> v(m * n, T{0});
    const auto& av = a.values();
    const auto& bv = b.values();
    for (size_t i = 0; i < m; ++i)
        for (size_t p = 0; p < k; ++p) {
            const T aip = av[i * k + p];
            for (size_t j = 0; j < n; ++j) v[i * n + j] += aip * bv[p * n + j];
        }
    auto pa = a.node(), pb = b.node();
    return detail::attach<T>(
        Tensor<T>::make({m, n}, std::move(v), "matmul"), {pa, pb},
        [pa, pb, m, k, n](typename Tensor<T>::Node& out) {
            if (pa->requires_grad) {
                pa->ensure_grad();  // dA = dC B^T
                for (size_t i = 0; i < m; ++i)
                    for (size_t j = 0; j < n; ++j) {
                        const T g = out.grad[i * n + j];
                        for (size_t p = 0; p < k; ++p)
                            pa->grad[i * k + p] += g * pb->values[p * n + j];
                    }
            }
            if (pb->requires_grad) {
                pb->ensure_grad();  // dB = A^T dC
                for (size_t i = 0; i < m; ++i)
                    for (size_t p = 0; p < k; ++p) {
                        const T aip = pa->values[i * k + p];
                        for (size_t j = 0; j < n; ++j)
                            pb->grad[p * n + j] += aip * out.grad[i * n + j];
                    }
            }
        });
}

template <typename T>
Tensor<T> transpose(const Tensor<T>& a) {
    detail::require_rank(a, 2, "transpose");
    const size_t m = a.dim(0), n = a.dim(1);
    std::vector<T> v(m * n);
    for (size_t i = 0; i < m; ++i)
        for (size_t j = 0; j < n; ++j) v[j * m + i] = a.values()[i * n + j];
    auto pa = a.node();
    return detail::attach<T>(Tensor<T>::make({n, m}, std::move(v), "transpose"), {pa},
                             [pa, m, n](typename Tensor<T>::Node& out) {
                                 pa->ensure_grad();
                                 for (size_t i = 0; i < m; ++i)
                                     for (size_t j = 0; j < n; ++j)
                                         pa->grad[i * n + j] += out.grad[j * m + i];
                             });
}

// X (m x n) + b (n) broadcast over rows
template <typename T>
Tensor<T> add_rowvec(const Tensor<T>& x, const Tensor<T>& b) {
    detail::require_rank(x, 2, "add_rowvec");
    detail::require_rank(b, 1, "add_rowvec");
    const size_t m = x.dim(0), n = x.dim(1);
    if (b.dim(0) != n) throw ShapeMismatch("add_rowvec: width mismatch");
    std::vector<T> v(m * n);
    for (size_t i = 0; i < m; ++i)
        for (size_t j = 0; j < n; ++j) v[i * n + j] = x.values()[i * n + j] + b.values()[j];
    auto px = x.node(), pb = b.node();
    return detail::attach<T>(
        Tensor<T>::make({m, n}, std::move(v), "add_rowvec"), {px, pb},
        [px, pb, m, n](typename Tensor<T>::Node& out) {
            if (px->requires_grad) {
                px->ensure_grad();
                for (size_t i = 0; i < out.grad.size(); ++i) px->grad[i] += out.grad[i];
            }
            if (pb->requires_grad) {
                pb->ensure_grad();
                for (size_t i = 0; i < m; ++i)
                    for (size_t j = 0; j < n; ++j) pb->grad[j] += out.grad[i * n + j];
            }
        });
}

// concatenation along the last axis; rank 1 or rank 2 with equal row counts
template <typename T>
Tensor<T> concat_cols(const Tensor<T>& a, const Tensor<T>& b) {
    if (a.rank() != b.rank()) throw ShapeMismatch("concat_cols: rank mismatch");
    if (a.rank() == 1) {
        const size_t p = a.dim(0), q = b.dim(0);
        std::vector<T> v;
        v.reserve(p + q);
        v.insert(v.end(), a.values().begin(), a.values().end());
        v.insert(v.end(), b.values().begin(), b.values().end());
        auto pa = a.node(), pb = b.node();
        return detail::attach<T>(
            Tensor<T>::make({p + q}, std::move(v), "concat_cols"), {pa, pb},
            [pa, pb, p, q](typename Tensor<T>::Node& out) {
                if (pa->requires_grad) {
                    pa->ensure_grad();
                    for (size_t i = 0; i < p; ++i) pa->grad[i] += out.grad[i];
                }
                if (pb->requires_grad) {
                    pb->ensure_grad();
                    for (size_t i = 0; i < q; ++i) pb->grad[i] += out.grad[p + i];
                }
            });
    }
    detail::require_rank(a, 2, "concat_cols");
    const size_t m = a.dim(0), p = a.dim(1), q = b.dim(1);
    if (b.dim(0) != m) throw ShapeMismatch("concat_cols: row counts differ");
    std::vector<T> v(m * (p + q));
    for (size_t i = 0; i < m; ++i) {
        for (size_t j = 0; j < p; ++j) v[i * (p + q) + j] = a.values()[i * p + j];
        for (size_t j = 0; j < q; ++j) v[i * (p + q) + p + j] = b.values()[i * q + j];
    }
    auto pa = a.node(), pb = b.node();
    return detail::attach<T>(
        Tensor<T>::make({m, p + q}, std::move(v), "concat_cols"), {pa, pb},
        [pa, pb, m, p, q](typename Tensor<T>::Node& out) {
            if (pa->requires_grad) {
                pa->ensure_grad();
                for (size_t i = 0; i < m; ++i)
                    for (size_t j = 0; j < p; ++j)
                        pa->grad[i * p + j] += out.grad[i * (p + q) + j];
            }
            if (pb->requires_grad) {
                pb->ensure_grad();
                for (size_t i = 0; i < m; ++i)
                    for (size_t j = 0; j < q; ++j)
                        pb->grad[i * q + j] += out.grad[i * (p + q) + p + j];
            }
        });
}

// gathers rows of a (V x d) table; gradients scatter-add back
template <typename T>
Tensor<T> rows_lookup(const Tensor<T>& table, std::vector<size_t> indices) {
    detail::require_rank(table, 2, "rows_lookup");
    const size_t d = table.dim(1);
    for (size_t idx : indices)
        if (idx >= table.dim(0)) throw ShapeMismatch("rows_lookup: index out of range");
    std::vector<T> v(indices.size() * d);
    for (size_t i = 0; i < indices.size(); ++i)
        std::copy_n(table.values().begin() + static_cast<ptrdiff_t>(indices[i] * d), d,
                    v.begin() + static_cast<ptrdiff_t>(i * d));
    auto pt = table.node();
    const size_t rows = indices.size();
    return detail::attach<T>(
        Tensor<T>::make({rows, d}, std::move(v), "rows_lookup"), {pt},
        [pt, d, idx = std::move(indices)](typename Tensor<T>::Node& out) {
            pt->ensure_grad();
            for (size_t i = 0; i < idx.size(); ++i)
                for (size_t j = 0; j < d; ++j) pt->grad[idx[i] * d + j] += out.grad[i * d + j];
        });
}

template <typename T>
Tensor<T> row(const Tensor<T>& x, size_t i) {
    detail::require_rank(x, 2, "row");
    if (i >= x.dim(0)) throw ShapeMismatch("row: index out of range");
    const size_t n = x.dim(1);
    std::vector<T> v(x.values().begin() + static_cast<ptrdiff_t>(i * n),
                     x.values().begin() + static_cast<ptrdiff_t>((i + 1) * n));
    auto px = x.node();
    return detail::attach<T>(Tensor<T>::make({n}, std::move(v), "row"), {px},
                             [px, i, n](typename Tensor<T>::Node& out) {
                                 px->ensure_grad();
                                 for (size_t j = 0; j < n; ++j)
                                     px->grad[i * n + j] += out.grad[j];
                             });
}

template <typename T>
Tensor<T> dot(const Tensor<T>& a, const Tensor<T>& b) {
    detail::require_rank(a, 1, "dot");
    detail::require_rank(b, 1, "dot");
    if (a.dim(0) != b.dim(0)) throw DimMismatch("dot: lengths differ");
    T s{0};
    for (size_t i = 0; i < a.dim(0); ++i) s += a.values()[i] * b.values()[i];
    auto pa = a.node(), pb = b.node();
    return detail::attach<T>(Tensor<T>::make({1}, {s}, "dot"), {pa, pb},
                             [pa, pb](typename Tensor<T>::Node& out) {
                                 const T g = out.grad[0];
                                 if (pa->requires_grad) {
                                     pa->ensure_grad();
                                     for (size_t i = 0; i < pa->values.size(); ++i)
                                         pa->grad[i] += g * pb->values[i];
                                 }
                                 if (pb->requires_grad) {
                                     pb->ensure_grad();
                                     for (size_t i = 0; i < pb->values.size(); ++i)
                                         pb->grad[i] += g * pa->values[i];
                                 }
                             });
}

// ---------------------------------------------------------------------------
// normalization / attention / reductions

// row-wise layer norm with trainable gain and bias
template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gain, const Tensor<T>& bias,
                     T eps = T{1e-8}) {
    const bool vec = x.rank() == 1;
    const size_t m = vec ? 1 : x.dim(0);
    const size_t n = vec ? x.dim(0) : x.dim(1);
    if (gain.rank() != 1 || gain.dim(0) != n || bias.rank() != 1 || bias.dim(0) != n)
        throw ShapeMismatch("layer_norm: gain/bias must have the feature width");

    std::vector<T> v(m * n), xhat(m * n), inv_sigma(m);
    for (size_t i = 0; i < m; ++i) {
        const T* xr = x.values().data() + i * n;
        T mu{0};
        for (size_t j = 0; j < n; ++j) mu += xr[j];
        mu /= static_cast<T>(n);
        T var{0};
        for (size_t j = 0; j < n; ++j) var += (xr[j] - mu) * (xr[j] - mu);
        var /= static_cast<T>(n);
        const T is = T{1} / std::sqrt(var + eps);
        inv_sigma[i] = is;
        for (size_t j = 0; j < n; ++j) {
            xhat[i * n + j] = (xr[j] - mu) * is;
            v[i * n + j] = xhat[i * n + j] * gain.values()[j] + bias.values()[j];
        }
    }
    auto px = x.node(), pg = gain.node(), pb = bias.node();
    return detail::attach<T>(
        Tensor<T>::make(x.shape(), std::move(v), "layer_norm"), {px, pg, pb},
        [px, pg, pb, m, n, xhat = std::move(xhat),
         inv_sigma = std::move(inv_sigma)](typename Tensor<T>::Node& out) {
            for (size_t i = 0; i < m; ++i) {
                const T* dy = out.grad.data() + i * n;
                const T* xh = xhat.data() + i * n;
                if (pg->requires_grad) {
                    pg->ensure_grad();
                    for (size_t j = 0; j < n; ++j) pg->grad[j] += dy[j] * xh[j];
                }
                if (pb->requires_grad) {
                    pb->ensure_grad();
                    for (size_t j = 0; j < n; ++j) pb->grad[j] += dy[j];
                }
                if (px->requires_grad) {
                    px->ensure_grad();
                    T sum_dxhat{0}, sum_dxhat_xhat{0};
                    for (size_t j = 0; j < n; ++j) {
                        const T dxhat = dy[j] * pg->values[j];
                        sum_dxhat += dxhat;
                        sum_dxhat_xhat += dxhat * xh[j];
                    }
                    const T inv_n = T{1} / static_cast<T>(n);
                    for (size_t j = 0; j < n; ++j) {
                        const T dxhat = dy[j] * pg->values[j];
                        px->grad[i * n + j] +=
                            inv_sigma[i] *
                            (dxhat - inv_n * sum_dxhat - xh[j] * inv_n * sum_dxhat_xhat);
                    }
                }
            }
        });
}

// row-wise softmax over the last axis; with causal=true entry (i, j) for
// j > i is masked out (softmax over positions <= i)
template <typename T>
Tensor<T> softmax(const Tensor<T>& x, bool causal) {
    detail::require_rank(x, 2, "softmax");
    const size_t m = x.dim(0), n = x.dim(1);
    if (causal && m != n) throw ShapeMismatch("softmax: causal mask needs a square matrix");
    std::vector<T> v(m * n, T{0});
    for (size_t i = 0; i < m; ++i) {
        const size_t limit = causal ? i + 1 : n;
        const T* xr = x.values().data() + i * n;
        T mx = xr[0];
        for (size_t j = 1; j < limit; ++j) mx = std::max(mx, xr[j]);
        T denom{0};
        for (size_t j = 0; j < limit; ++j) {
            v[i * n + j] = std::exp(xr[j] - mx);
            denom += v[i * n + j];
        }
        for (size_t j = 0; j < limit; ++j) v[i * n + j] /= denom;
    }
    auto px = x.node();
    return detail::attach<T>(
        Tensor<T>::make({m, n}, std::move(v), "softmax"), {px},
        [px, m, n, causal](typename Tensor<T>::Node& out) {
            px->ensure_grad();
            for (size_t i = 0; i < m; ++i) {
                const size_t limit = causal ? i + 1 : n;
                const T* p = out.values.data() + i * n;
                const T* dy = out.grad.data() + i * n;
                T inner{0};
                for (size_t j = 0; j < limit; ++j) inner += dy[j] * p[j];
                for (size_t j = 0; j < limit; ++j)
                    px->grad[i * n + j] += p[j] * (dy[j] - inner);
            }
        });
}

template <typename T>
Tensor<T> sum_all(const Tensor<T>& a) {
    T s{0};
    for (T v : a.values()) s += v;
    auto pa = a.node();
    return detail::attach<T>(Tensor<T>::make({1}, {s}, "sum_all"), {pa},
                             [pa](typename Tensor<T>::Node& out) {
                                 pa->ensure_grad();
                                 for (size_t i = 0; i < pa->values.size(); ++i)
                                     pa->grad[i] += out.grad[0];
                             });
}

template <typename T>
Tensor<T> mean_all(const Tensor<T>& a) {
    T s{0};
    for (T v : a.values()) s += v;
    const T inv_n = T{1} / static_cast<T>(a.numel());
    auto pa = a.node();
    return detail::attach<T>(Tensor<T>::make({1}, {s * inv_n}, "mean_all"), {pa},
                             [pa, inv_n](typename Tensor<T>::Node& out) {
                                 pa->ensure_grad();
                                 for (size_t i = 0; i < pa->values.size(); ++i)
                                     pa->grad[i] += out.grad[0] * inv_n;
                             });
}

// inverted dropout; the mask is drawn from the caller's stream so the whole
// training run stays a function of (config, data, seed)
template <typename T>
Tensor<T> dropout(const Tensor<T>& a, double rate, std::mt19937_64& rng) {
    if (rate <= 0.0) return a;
    if (rate >= 1.0) throw ConfigError("dropout rate must be < 1");
    std::bernoulli_distribution keep(1.0 - rate);
    std::vector<T> mask(a.numel());
    const T inv_keep = T{1} / static_cast<T>(1.0 - rate);
    for (size_t i = 0; i < mask.size(); ++i) mask[i] = keep(rng) ? inv_keep : T{0};
    std::vector<T> v(a.numel());
    for (size_t i = 0; i < v.size(); ++i) v[i] = a.values()[i] * mask[i];
    auto pa = a.node();
    return detail::attach<T>(Tensor<T>::make(a.shape(), std::move(v), "dropout"), {pa},
                             [pa, mask = std::move(mask)](typename Tensor<T>::Node& out) {
                                 pa->ensure_grad();
                                 for (size_t i = 0; i < out.grad.size(); ++i)
                                     pa->grad[i] += out.grad[i] * mask[i];
                             });
}

// ---------------------------------------------------------------------------
// backward

template <typename T>
void backward(const Tensor<T>& loss) {
    if (loss.numel() != 1) throw ShapeMismatch("backward: loss must be scalar");
    using Node = typename Tensor<T>::Node;

    std::vector<Node*> order;
    std::unordered_set<Node*> visited;
    std::vector<std::pair<Node*, size_t>> stack{{loss.node().get(), 0}};
    visited.insert(loss.node().get());
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->parents.size()) {
            Node* parent = node->parents[next++].get();
            if (visited.insert(parent).second) stack.emplace_back(parent, 0);
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }

    loss.node()->ensure_grad();
    loss.node()->grad[0] += T{1};
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* node = *it;
        if (node->backward) {
            node->ensure_grad();
            node->backward(*node);
        }
    }
}

}  // namespace gtrec::ad
