#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <stdexcept>
#include <unordered_set>
#include <vector>

#include "dlab/tensor.hpp"

namespace dlab::ad {

// Reverse-mode tape over tensors. Every op allocates a fresh node; the
// backward closure reads the node's grad and accumulates into its parents.
// Graphs are per-step and per-sample scale, so the shared_ptr overhead is
// irrelevant next to the conv arithmetic.
template <typename T>
struct Node {
    Tensor<T> value;
    Tensor<T> grad;
    bool needs_grad = false;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(const Node&)> backprop;

    explicit Node(Tensor<T> v) : value(std::move(v)) {}
};

template <typename T>
using Var = std::shared_ptr<Node<T>>;

template <typename T>
Var<T> leaf(Tensor<T> value, bool needs_grad = false) {
    auto n = std::make_shared<Node<T>>(std::move(value));
    n->needs_grad = needs_grad;
    if (needs_grad) n->grad = Tensor<T>(n->value.shape());
    return n;
}

template <typename T>
Var<T> make_op(Tensor<T> value, std::vector<Var<T>> parents,
               std::function<void(const Node<T>&)> backprop) {
    auto n = std::make_shared<Node<T>>(std::move(value));
    for (auto& p : parents)
        if (p->needs_grad) n->needs_grad = true;
    if (n->needs_grad) {
        n->grad = Tensor<T>(n->value.shape());
        n->parents = std::move(parents);
        n->backprop = std::move(backprop);
    }
    return n;
}

// Ensures a parent's grad buffer exists before accumulation.
template <typename T>
Tensor<T>& grad_of(const Var<T>& p) {
    if (p->grad.numel() == 0) p->grad = Tensor<T>(p->value.shape());
    return p->grad;
}

template <typename T>
void backward(const Var<T>& root) {
    if (root->value.numel() != 1)
        throw std::invalid_argument("backward: root must be scalar");
    if (!root->needs_grad) return;

    // iterative post-order topo sort
    std::vector<Node<T>*> order;
    std::unordered_set<Node<T>*> seen;
    std::vector<std::pair<Node<T>*, std::size_t>> stack;
    stack.emplace_back(root.get(), 0);
    seen.insert(root.get());
    while (!stack.empty()) {
        auto& [node, idx] = stack.back();
        if (idx < node->parents.size()) {
            Node<T>* p = node->parents[idx++].get();
            if (p->needs_grad && seen.insert(p).second) stack.emplace_back(p, 0);
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }
    grad_of(root);
    root->grad[0] = T(1);
    for (auto it = order.rbegin(); it != order.rend(); ++it)
        if ((*it)->backprop) (*it)->backprop(**it);
}

// ---------------------------------------------------------------------------
// elementwise
// ---------------------------------------------------------------------------

template <typename T>
void check_same_shape(const Var<T>& a, const Var<T>& b, const char* op) {
    if (!a->value.same_shape(b->value))
        throw std::invalid_argument(std::string(op) + ": shape mismatch " +
                                    shape_str(a->value.shape()) + " vs " +
                                    shape_str(b->value.shape()));
}

template <typename T>
Var<T> add(Var<T> a, Var<T> b) {
    check_same_shape(a, b, "add");
    Tensor<T> v = a->value;
    for (std::size_t i = 0; i < v.numel(); ++i) v[i] += b->value[i];
    return make_op<T>(std::move(v), {a, b}, [a, b](const Node<T>& n) {
        if (a->needs_grad) {
            auto& g = grad_of(a);
            for (std::size_t i = 0; i < g.numel(); ++i) g[i] += n.grad[i];
        }
        if (b->needs_grad) {
            auto& g = grad_of(b);
            for (std::size_t i = 0; i < g.numel(); ++i) g[i] += n.grad[i];
        }
    });
}

template <typename T>
Var<T> sub(Var<T> a, Var<T> b) {
    check_same_shape(a, b, "sub");
    Tensor<T> v = a->value;
    for (std::size_t i = 0; i < v.numel(); ++i) v[i] -= b->value[i];
    return make_op<T>(std::move(v), {a, b}, [a, b](const Node<T>& n) {
        if (a->needs_grad) {
            auto& g = grad_of(a);
            for (std::size_t i = 0; i < g.numel(); ++i) g[i] += n.grad[i];
        }
        if (b->needs_grad) {
            auto& g = grad_of(b);
            for (std::size_t i = 0; i < g.numel(); ++i) g[i] -= n.grad[i];
        }
    });
}

template <typename T>
Var<T> mul(Var<T> a, Var<T> b) {
    check_same_shape(a, b, "mul");
    Tensor<T> v = a->value;
    for (std::size_t i = 0; i < v.numel(); ++i) v[i] *= b->value[i];
    return make_op<T>(std::move(v), {a, b}, [a, b](const Node<T>& n) {
        if (a->needs_grad) {
            auto& g = grad_of(a);
            for (std::size_t i = 0; i < g.numel(); ++i) g[i] += n.grad[i] * b->value[i];
        }
        if (b->needs_grad) {
            auto& g = grad_of(b);
            for (std::size_t i = 0; i < g.numel(); ++i) g[i] += n.grad[i] * a->value[i];
        }
    });
}

template <typename T>
Var<T> div(Var<T> a, Var<T> b) {
    check_same_shape(a, b, "div");
    Tensor<T> v = a->value;
    for (std::size_t i = 0; i < v.numel(); ++i) v[i] /= b->value[i];
    return make_op<T>(std::move(v), {a, b}, [a, b](const Node<T>& n) {
        if (a->needs_grad) {
            auto& g = grad_of(a);
            for (std::size_t i = 0; i < g.numel(); ++i) g[i] += n.grad[i] / b->value[i];
        }
        if (b->needs_grad) {
            auto& g = grad_of(b);
            for (std::size_t i = 0; i < g.numel(); ++i)
                g[i] -= n.grad[i] * a->value[i] / (b->value[i] * b->value[i]);
        }
    });
}

// k*a + c, elementwise with scalar k and c
template <typename T>
Var<T> affine(Var<T> a, T k, T c) {
    Tensor<T> v = a->value;
    for (std::size_t i = 0; i < v.numel(); ++i) v[i] = k * v[i] + c;
    return make_op<T>(std::move(v), {a}, [a, k](const Node<T>& n) {
        auto& g = grad_of(a);
        for (std::size_t i = 0; i < g.numel(); ++i) g[i] += k * n.grad[i];
    });
}

// elementwise product with a constant tensor (no grad through c)
template <typename T>
Var<T> mul_const(Var<T> a, const Tensor<T>& c) {
    if (!a->value.same_shape(c))
        throw std::invalid_argument("mul_const: shape mismatch");
    Tensor<T> v = a->value;
    for (std::size_t i = 0; i < v.numel(); ++i) v[i] *= c[i];
    return make_op<T>(std::move(v), {a}, [a, c](const Node<T>& n) {
        auto& g = grad_of(a);
        for (std::size_t i = 0; i < g.numel(); ++i) g[i] += n.grad[i] * c[i];
    });
}

// a + constant tensor (used for noise injection; grad is identity)
template <typename T>
Var<T> add_const(Var<T> a, const Tensor<T>& c) {
    if (!a->value.same_shape(c))
        throw std::invalid_argument("add_const: shape mismatch");
    Tensor<T> v = a->value;
    for (std::size_t i = 0; i < v.numel(); ++i) v[i] += c[i];
    return make_op<T>(std::move(v), {a}, [a](const Node<T>& n) {
        auto& g = grad_of(a);
        for (std::size_t i = 0; i < g.numel(); ++i) g[i] += n.grad[i];
    });
}

template <typename T>
Var<T> square(Var<T> a) {
    return mul(a, a);
}

// x^p for constant p; callers keep the base nonnegative
template <typename T>
Var<T> pow_const(Var<T> a, T p) {
    Tensor<T> v = a->value;
    for (std::size_t i = 0; i < v.numel(); ++i) v[i] = std::pow(v[i], p);
    return make_op<T>(std::move(v), {a}, [a, p](const Node<T>& n) {
        auto& g = grad_of(a);
        for (std::size_t i = 0; i < g.numel(); ++i)
            g[i] += n.grad[i] * p * std::pow(a->value[i], p - T(1));
    });
}

template <typename T>
Var<T> log_(Var<T> a) {
    Tensor<T> v = a->value;
    for (std::size_t i = 0; i < v.numel(); ++i) v[i] = std::log(v[i]);
    return make_op<T>(std::move(v), {a}, [a](const Node<T>& n) {
        auto& g = grad_of(a);
        for (std::size_t i = 0; i < g.numel(); ++i) g[i] += n.grad[i] / a->value[i];
    });
}

// max(a, floor); grad passes only where a > floor
template <typename T>
Var<T> max_scalar(Var<T> a, T floor) {
    Tensor<T> v = a->value;
    for (std::size_t i = 0; i < v.numel(); ++i) v[i] = std::max(v[i], floor);
    return make_op<T>(std::move(v), {a}, [a, floor](const Node<T>& n) {
        auto& g = grad_of(a);
        for (std::size_t i = 0; i < g.numel(); ++i)
            if (a->value[i] > floor) g[i] += n.grad[i];
    });
}

template <typename T>
Var<T> tanh_(Var<T> a) {
    Tensor<T> v = a->value;
    for (std::size_t i = 0; i < v.numel(); ++i) v[i] = std::tanh(v[i]);
    return make_op<T>(std::move(v), {a}, [a](const Node<T>& n) {
        auto& g = grad_of(a);
        for (std::size_t i = 0; i < g.numel(); ++i)
            g[i] += n.grad[i] * (T(1) - n.value[i] * n.value[i]);
    });
}

template <typename T>
Var<T> sigmoid(Var<T> a) {
    Tensor<T> v = a->value;
    for (std::size_t i = 0; i < v.numel(); ++i) v[i] = T(1) / (T(1) + std::exp(-v[i]));
    return make_op<T>(std::move(v), {a}, [a](const Node<T>& n) {
        auto& g = grad_of(a);
        for (std::size_t i = 0; i < g.numel(); ++i)
            g[i] += n.grad[i] * n.value[i] * (T(1) - n.value[i]);
    });
}

// ---------------------------------------------------------------------------
// shape / reductions
// ---------------------------------------------------------------------------

template <typename T>
Var<T> reshape(Var<T> a, std::vector<std::size_t> shape) {
    Tensor<T> v = a->value.reshaped(shape);
    return make_op<T>(std::move(v), {a}, [a](const Node<T>& n) {
        auto& g = grad_of(a);
        for (std::size_t i = 0; i < g.numel(); ++i) g[i] += n.grad[i];
    });
}

template <typename T>
Var<T> sum_all(Var<T> a) {
    T s = 0;
    for (std::size_t i = 0; i < a->value.numel(); ++i) s += a->value[i];
    Tensor<T> v({1});
    v[0] = s;
    return make_op<T>(std::move(v), {a}, [a](const Node<T>& n) {
        auto& g = grad_of(a);
        for (std::size_t i = 0; i < g.numel(); ++i) g[i] += n.grad[0];
    });
}

template <typename T>
Var<T> mean_all(Var<T> a) {
    const T inv = T(1) / static_cast<T>(a->value.numel());
    return affine(sum_all(a), inv, T(0));
}

// sum over every axis but the first: [B, ...] -> [B]
template <typename T>
Var<T> sum_tail(Var<T> a) {
    const std::size_t batch = a->value.dim(0);
    const std::size_t per = a->value.numel() / batch;
    Tensor<T> v({batch});
    for (std::size_t b = 0; b < batch; ++b) {
        T s = 0;
        for (std::size_t i = 0; i < per; ++i) s += a->value[b * per + i];
        v[b] = s;
    }
    return make_op<T>(std::move(v), {a}, [a, batch, per](const Node<T>& n) {
        auto& g = grad_of(a);
        for (std::size_t b = 0; b < batch; ++b)
            for (std::size_t i = 0; i < per; ++i) g[b * per + i] += n.grad[b];
    });
}

template <typename T>
Var<T> mean_tail(Var<T> a) {
    const T inv = T(1) / static_cast<T>(a->value.numel() / a->value.dim(0));
    return affine(sum_tail(a), inv, T(0));
}

// columns [from, to) of a 2D tensor
template <typename T>
Var<T> slice_cols(Var<T> a, std::size_t from, std::size_t to) {
    const std::size_t rows = a->value.dim(0);
    const std::size_t cols = a->value.dim(1);
    if (to > cols || from >= to) throw std::invalid_argument("slice_cols: bad range");
    Tensor<T> v({rows, to - from});
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = from; c < to; ++c) v.at2(r, c - from) = a->value.at2(r, c);
    return make_op<T>(std::move(v), {a}, [a, from, to, rows](const Node<T>& n) {
        auto& g = grad_of(a);
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = from; c < to; ++c)
                g[r * a->value.dim(1) + c] += n.grad[r * (to - from) + (c - from)];
    });
}

template <typename T>
Var<T> concat_cols(Var<T> a, Var<T> b) {
    const std::size_t rows = a->value.dim(0);
    if (b->value.dim(0) != rows) throw std::invalid_argument("concat_cols: row mismatch");
    const std::size_t ca = a->value.dim(1), cb = b->value.dim(1);
    Tensor<T> v({rows, ca + cb});
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < ca; ++c) v.at2(r, c) = a->value.at2(r, c);
        for (std::size_t c = 0; c < cb; ++c) v.at2(r, ca + c) = b->value.at2(r, c);
    }
    return make_op<T>(std::move(v), {a, b}, [a, b, rows, ca, cb](const Node<T>& n) {
        if (a->needs_grad) {
            auto& g = grad_of(a);
            for (std::size_t r = 0; r < rows; ++r)
                for (std::size_t c = 0; c < ca; ++c) g[r * ca + c] += n.grad[r * (ca + cb) + c];
        }
        if (b->needs_grad) {
            auto& g = grad_of(b);
            for (std::size_t r = 0; r < rows; ++r)
                for (std::size_t c = 0; c < cb; ++c)
                    g[r * cb + c] += n.grad[r * (ca + cb) + ca + c];
        }
    });
}

// ---------------------------------------------------------------------------
// linear algebra / nn
// ---------------------------------------------------------------------------

// [B,n] x [n,m] -> [B,m]
template <typename T>
Var<T> matmul(Var<T> a, Var<T> w) {
    const std::size_t B = a->value.dim(0), n = a->value.dim(1);
    if (w->value.dim(0) != n)
        throw std::invalid_argument("matmul: inner dim mismatch");
    const std::size_t m = w->value.dim(1);
    Tensor<T> v({B, m});
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t k = 0; k < n; ++k) {
            const T av = a->value.at2(b, k);
            for (std::size_t j = 0; j < m; ++j) v.at2(b, j) += av * w->value.at2(k, j);
        }
    return make_op<T>(std::move(v), {a, w}, [a, w, B, n, m](const Node<T>& nd) {
        if (a->needs_grad) {
            auto& g = grad_of(a);
            for (std::size_t b = 0; b < B; ++b)
                for (std::size_t k = 0; k < n; ++k) {
                    T s = 0;
                    for (std::size_t j = 0; j < m; ++j)
                        s += nd.grad[b * m + j] * w->value.at2(k, j);
                    g[b * n + k] += s;
                }
        }
        if (w->needs_grad) {
            auto& g = grad_of(w);
            for (std::size_t b = 0; b < B; ++b)
                for (std::size_t k = 0; k < n; ++k) {
                    const T av = a->value.at2(b, k);
                    for (std::size_t j = 0; j < m; ++j)
                        g[k * m + j] += av * nd.grad[b * m + j];
                }
        }
    });
}

// adds a [m] row vector to every row of [B,m]
template <typename T>
Var<T> add_rowvec(Var<T> a, Var<T> bias) {
    const std::size_t B = a->value.dim(0), m = a->value.dim(1);
    if (bias->value.numel() != m) throw std::invalid_argument("add_rowvec: size mismatch");
    Tensor<T> v = a->value;
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t j = 0; j < m; ++j) v.at2(b, j) += bias->value[j];
    return make_op<T>(std::move(v), {a, bias}, [a, bias, B, m](const Node<T>& n) {
        if (a->needs_grad) {
            auto& g = grad_of(a);
            for (std::size_t i = 0; i < g.numel(); ++i) g[i] += n.grad[i];
        }
        if (bias->needs_grad) {
            auto& g = grad_of(bias);
            for (std::size_t b = 0; b < B; ++b)
                for (std::size_t j = 0; j < m; ++j) g[j] += n.grad[b * m + j];
        }
    });
}

// row-wise softmax on [B,K]
template <typename T>
Var<T> softmax(Var<T> a) {
    const std::size_t B = a->value.dim(0), K = a->value.dim(1);
    Tensor<T> v({B, K});
    for (std::size_t b = 0; b < B; ++b) {
        T mx = a->value.at2(b, 0);
        for (std::size_t k = 1; k < K; ++k) mx = std::max(mx, a->value.at2(b, k));
        T z = 0;
        for (std::size_t k = 0; k < K; ++k) {
            v.at2(b, k) = std::exp(a->value.at2(b, k) - mx);
            z += v.at2(b, k);
        }
        for (std::size_t k = 0; k < K; ++k) v.at2(b, k) /= z;
    }
    return make_op<T>(std::move(v), {a}, [a, B, K](const Node<T>& n) {
        auto& g = grad_of(a);
        for (std::size_t b = 0; b < B; ++b) {
            T dot = 0;
            for (std::size_t k = 0; k < K; ++k)
                dot += n.grad[b * K + k] * n.value[b * K + k];
            for (std::size_t k = 0; k < K; ++k)
                g[b * K + k] += n.value[b * K + k] * (n.grad[b * K + k] - dot);
        }
    });
}

// conv2d, [B,C,H,W] * [O,C,kh,kw] (+ bias [O]) with symmetric zero padding
template <typename T>
Var<T> conv2d(Var<T> x, Var<T> w, Var<T> bias, std::size_t stride, std::size_t pad) {
    const std::size_t B = x->value.dim(0), C = x->value.dim(1);
    const std::size_t H = x->value.dim(2), W = x->value.dim(3);
    const std::size_t O = w->value.dim(0), kh = w->value.dim(2), kw = w->value.dim(3);
    if (w->value.dim(1) != C)
        throw std::invalid_argument("conv2d: channel mismatch " + shape_str(x->value.shape()) +
                                    " vs " + shape_str(w->value.shape()));
    const std::size_t Ho = (H + 2 * pad - kh) / stride + 1;
    const std::size_t Wo = (W + 2 * pad - kw) / stride + 1;
    Tensor<T> v({B, O, Ho, Wo});
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t o = 0; o < O; ++o)
            for (std::size_t i = 0; i < Ho; ++i)
                for (std::size_t j = 0; j < Wo; ++j) {
                    T s = bias->value[o];
                    for (std::size_t c = 0; c < C; ++c)
                        for (std::size_t u = 0; u < kh; ++u) {
                            const std::ptrdiff_t hi =
                                static_cast<std::ptrdiff_t>(i * stride + u) -
                                static_cast<std::ptrdiff_t>(pad);
                            if (hi < 0 || hi >= static_cast<std::ptrdiff_t>(H)) continue;
                            for (std::size_t t = 0; t < kw; ++t) {
                                const std::ptrdiff_t wi =
                                    static_cast<std::ptrdiff_t>(j * stride + t) -
                                    static_cast<std::ptrdiff_t>(pad);
                                if (wi < 0 || wi >= static_cast<std::ptrdiff_t>(W)) continue;
                                s += x->value.at4(b, c, hi, wi) * w->value.at4(o, c, u, t);
                            }
                        }
                    v.at4(b, o, i, j) = s;
                }
    return make_op<T>(std::move(v), {x, w, bias},
                      [x, w, bias, B, C, H, W, O, kh, kw, Ho, Wo, stride, pad](const Node<T>& n) {
        Tensor<T>* gx = x->needs_grad ? &grad_of(x) : nullptr;
        Tensor<T>* gw = w->needs_grad ? &grad_of(w) : nullptr;
        Tensor<T>* gb = bias->needs_grad ? &grad_of(bias) : nullptr;
        for (std::size_t b = 0; b < B; ++b)
            for (std::size_t o = 0; o < O; ++o)
                for (std::size_t i = 0; i < Ho; ++i)
                    for (std::size_t j = 0; j < Wo; ++j) {
                        const T go = n.grad[((b * O + o) * Ho + i) * Wo + j];
                        if (go == T(0)) continue;
                        if (gb) (*gb)[o] += go;
                        for (std::size_t c = 0; c < C; ++c)
                            for (std::size_t u = 0; u < kh; ++u) {
                                const std::ptrdiff_t hi =
                                    static_cast<std::ptrdiff_t>(i * stride + u) -
                                    static_cast<std::ptrdiff_t>(pad);
                                if (hi < 0 || hi >= static_cast<std::ptrdiff_t>(H)) continue;
                                for (std::size_t t = 0; t < kw; ++t) {
                                    const std::ptrdiff_t wi =
                                        static_cast<std::ptrdiff_t>(j * stride + t) -
                                        static_cast<std::ptrdiff_t>(pad);
                                    if (wi < 0 || wi >= static_cast<std::ptrdiff_t>(W)) continue;
                                    if (gx)
                                        (*gx)[((b * C + c) * H + hi) * W + wi] +=
                                            go * w->value.at4(o, c, u, t);
                                    if (gw)
                                        (*gw)[((o * C + c) * kh + u) * kw + t] +=
                                            go * x->value.at4(b, c, hi, wi);
                                }
                            }
                    }
    });
}

// nearest-neighbour 2x upsampling on [B,C,H,W]
template <typename T>
Var<T> upsample2(Var<T> x) {
    const std::size_t B = x->value.dim(0), C = x->value.dim(1);
    const std::size_t H = x->value.dim(2), W = x->value.dim(3);
    Tensor<T> v({B, C, 2 * H, 2 * W});
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t c = 0; c < C; ++c)
            for (std::size_t i = 0; i < 2 * H; ++i)
                for (std::size_t j = 0; j < 2 * W; ++j)
                    v.at4(b, c, i, j) = x->value.at4(b, c, i / 2, j / 2);
    return make_op<T>(std::move(v), {x}, [x, B, C, H, W](const Node<T>& n) {
        auto& g = grad_of(x);
        for (std::size_t b = 0; b < B; ++b)
            for (std::size_t c = 0; c < C; ++c)
                for (std::size_t i = 0; i < 2 * H; ++i)
                    for (std::size_t j = 0; j < 2 * W; ++j)
                        g[((b * C + c) * H + i / 2) * W + j / 2] +=
                            n.grad[((b * C + c) * 2 * H + i) * 2 * W + j];
    });
}

// k x k uniform box mean over valid windows, per channel: [B,C,H,W] -> [B,C,H-k+1,W-k+1]
template <typename T>
Var<T> box_mean(Var<T> x, std::size_t k) {
    const std::size_t B = x->value.dim(0), C = x->value.dim(1);
    const std::size_t H = x->value.dim(2), W = x->value.dim(3);
    if (k > H || k > W) throw std::invalid_argument("box_mean: window larger than image");
    const std::size_t Ho = H - k + 1, Wo = W - k + 1;
    const T inv = T(1) / static_cast<T>(k * k);
    Tensor<T> v({B, C, Ho, Wo});
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t c = 0; c < C; ++c)
            for (std::size_t i = 0; i < Ho; ++i)
                for (std::size_t j = 0; j < Wo; ++j) {
                    T s = 0;
                    for (std::size_t u = 0; u < k; ++u)
                        for (std::size_t t = 0; t < k; ++t)
                            s += x->value.at4(b, c, i + u, j + t);
                    v.at4(b, c, i, j) = s * inv;
                }
    return make_op<T>(std::move(v), {x}, [x, B, C, H, W, Ho, Wo, k, inv](const Node<T>& n) {
        auto& g = grad_of(x);
        for (std::size_t b = 0; b < B; ++b)
            for (std::size_t c = 0; c < C; ++c)
                for (std::size_t i = 0; i < Ho; ++i)
                    for (std::size_t j = 0; j < Wo; ++j) {
                        const T go = n.grad[((b * C + c) * Ho + i) * Wo + j] * inv;
                        for (std::size_t u = 0; u < k; ++u)
                            for (std::size_t t = 0; t < k; ++t)
                                g[((b * C + c) * H + i + u) * W + j + t] += go;
                    }
    });
}

}  // namespace dlab::ad
