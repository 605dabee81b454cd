#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "aufd/tensor.hpp"

// Differentiable op set: matmul, elementwise add/sub/mul, scalar scale,
// transpose, reshape, row softmax, layer norm, GELU, mean/sum reductions,
// gather/scatter by row index, horizontal concat, and the two loss heads.
// Evaluation order is fixed and single-threaded, so repeated runs of the
// same graph are bit-identical.

namespace aufd {

template <typename S>
Eigen::Map<const MatRM<S>> as_mat(const ArrX<S>& a, Index r, Index c) {
    return Eigen::Map<const MatRM<S>>(a.data(), r, c);
}

template <typename S>
Eigen::Map<MatRM<S>> as_mat_mut(ArrX<S>& a, Index r, Index c) {
    return Eigen::Map<MatRM<S>>(a.data(), r, c);
}

namespace detail {

template <typename S>
void require_same_shape(const Tensor<S>& a, const Tensor<S>& b, const char* op) {
    if (a.shape() != b.shape())
        throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
}

} // namespace detail

template <typename S>
Tensor<S> matmul(const Tensor<S>& a, const Tensor<S>& b) {
    if (a.rank() != 2 || b.rank() != 2)
        throw ShapeError("matmul: expects rank-2 operands");
    if (a.cols() != b.rows())
        throw ShapeError("matmul: inner dimensions disagree, " + shape_str(a.shape()) + " * " +
                         shape_str(b.shape()));
    const Index m = a.rows(), k = a.cols(), n = b.cols();
    ArrX<S> out(m * n);
    as_mat_mut(out, m, n).noalias() = a.mat() * b.mat();
    return Tensor<S>::make("matmul", {m, n}, std::move(out), {a, b}, [m, k, n](TensorNode<S>& o) {
        auto& pa = *o.parents[0];
        auto& pb = *o.parents[1];
        const auto d_out = as_mat(o.grad, m, n);
        if (pa.requires_grad)
            as_mat_mut(pa.grad, m, k).noalias() += d_out * as_mat(pb.value, k, n).transpose();
        if (pb.requires_grad)
            as_mat_mut(pb.grad, k, n).noalias() += as_mat(pa.value, m, k).transpose() * d_out;
    });
}

template <typename S>
Tensor<S> add(const Tensor<S>& a, const Tensor<S>& b) {
    detail::require_same_shape(a, b, "add");
    ArrX<S> out = a.value() + b.value();
    return Tensor<S>::make("add", a.shape(), std::move(out), {a, b}, [](TensorNode<S>& o) {
        if (o.parents[0]->requires_grad) o.parents[0]->grad += o.grad;
        if (o.parents[1]->requires_grad) o.parents[1]->grad += o.grad;
    });
}

template <typename S>
Tensor<S> sub(const Tensor<S>& a, const Tensor<S>& b) {
    detail::require_same_shape(a, b, "sub");
    ArrX<S> out = a.value() - b.value();
    return Tensor<S>::make("sub", a.shape(), std::move(out), {a, b}, [](TensorNode<S>& o) {
        if (o.parents[0]->requires_grad) o.parents[0]->grad += o.grad;
        if (o.parents[1]->requires_grad) o.parents[1]->grad -= o.grad;
    });
}

template <typename S>
Tensor<S> mul(const Tensor<S>& a, const Tensor<S>& b) {
    detail::require_same_shape(a, b, "mul");
    ArrX<S> out = a.value() * b.value();
    return Tensor<S>::make("mul", a.shape(), std::move(out), {a, b}, [](TensorNode<S>& o) {
        if (o.parents[0]->requires_grad) o.parents[0]->grad += o.grad * o.parents[1]->value;
        if (o.parents[1]->requires_grad) o.parents[1]->grad += o.grad * o.parents[0]->value;
    });
}

template <typename S>
Tensor<S> scale(const Tensor<S>& a, S s) {
    ArrX<S> out = a.value() * s;
    return Tensor<S>::make("scale", a.shape(), std::move(out), {a}, [s](TensorNode<S>& o) {
        if (o.parents[0]->requires_grad) o.parents[0]->grad += o.grad * s;
    });
}

// Broadcast-add a 1xN row onto every row of an MxN matrix.
template <typename S>
Tensor<S> add_rowvec(const Tensor<S>& x, const Tensor<S>& row) {
    if (x.rank() != 2 || row.rank() != 2 || row.rows() != 1 || row.cols() != x.cols())
        throw ShapeError("add_rowvec: expects MxN plus 1xN, got " + shape_str(x.shape()) + " and " +
                         shape_str(row.shape()));
    const Index m = x.rows(), n = x.cols();
    ArrX<S> out(m * n);
    as_mat_mut(out, m, n) = x.mat().rowwise() + Eigen::Map<const Eigen::RowVectorX<S>>(row.value().data(), n);
    return Tensor<S>::make("add_rowvec", {m, n}, std::move(out), {x, row}, [m, n](TensorNode<S>& o) {
        if (o.parents[0]->requires_grad) o.parents[0]->grad += o.grad;
        if (o.parents[1]->requires_grad)
            as_mat_mut(o.parents[1]->grad, 1, n) += as_mat(o.grad, m, n).colwise().sum();
    });
}

template <typename S>
Tensor<S> transpose(const Tensor<S>& a) {
    if (a.rank() != 2) throw ShapeError("transpose: expects rank-2 tensor");
    const Index m = a.rows(), n = a.cols();
    ArrX<S> out(m * n);
    as_mat_mut(out, n, m) = a.mat().transpose();
    return Tensor<S>::make("transpose", {n, m}, std::move(out), {a}, [m, n](TensorNode<S>& o) {
        if (o.parents[0]->requires_grad)
            as_mat_mut(o.parents[0]->grad, m, n) += as_mat(o.grad, n, m).transpose();
    });
}

template <typename S>
Tensor<S> reshape(const Tensor<S>& a, Shape shape) {
    if (shape_size(shape) != a.size())
        throw ShapeError("reshape: element count changes from " + shape_str(a.shape()) + " to " +
                         shape_str(shape));
    ArrX<S> out = a.value();
    return Tensor<S>::make("reshape", std::move(shape), std::move(out), {a}, [](TensorNode<S>& o) {
        if (o.parents[0]->requires_grad) o.parents[0]->grad += o.grad;
    });
}

// Row-wise softmax with max subtraction. Each output row is non-negative
// and sums to one.
template <typename S>
Tensor<S> softmax_rows(const Tensor<S>& x) {
    if (x.rank() != 2) throw ShapeError("softmax_rows: expects rank-2 tensor");
    const Index m = x.rows(), n = x.cols();
    ArrX<S> out(m * n);
    for (Index i = 0; i < m; ++i) {
        auto row = x.value().segment(i * n, n);
        auto out_row = out.segment(i * n, n);
        const S row_max = row.maxCoeff();
        out_row = (row - row_max).exp();
        out_row /= out_row.sum();
    }
    return Tensor<S>::make("softmax_rows", {m, n}, std::move(out), {x}, [m, n](TensorNode<S>& o) {
        if (!o.parents[0]->requires_grad) return;
        for (Index i = 0; i < m; ++i) {
            auto y = o.value.segment(i * n, n);
            auto dy = o.grad.segment(i * n, n);
            const S dot = (dy * y).sum();
            o.parents[0]->grad.segment(i * n, n) += y * (dy - dot);
        }
    });
}

// Per-row layer normalization over the last dimension with learnable gain
// and bias (each 1xN).
template <typename S>
Tensor<S> layer_norm(const Tensor<S>& x, const Tensor<S>& gain, const Tensor<S>& bias, S eps = S(1e-5)) {
    if (x.rank() != 2) throw ShapeError("layer_norm: expects rank-2 input");
    const Index m = x.rows(), n = x.cols();
    if (gain.size() != n || bias.size() != n)
        throw ShapeError("layer_norm: gain/bias must have one entry per column");
    ArrX<S> out(m * n);
    ArrX<S> inv_std(m);
    for (Index i = 0; i < m; ++i) {
        auto row = x.value().segment(i * n, n);
        const S mean = row.mean();
        const S var = (row - mean).square().sum() / S(n);
        const S is = S(1) / std::sqrt(var + eps);
        inv_std[i] = is;
        out.segment(i * n, n) = ((row - mean) * is) * gain.value() + bias.value();
    }
    return Tensor<S>::make(
        "layer_norm", {m, n}, std::move(out), {x, gain, bias},
        [m, n, inv_std = std::move(inv_std)](TensorNode<S>& o) {
            auto& px = *o.parents[0];
            auto& pg = *o.parents[1];
            auto& pb = *o.parents[2];
            const ArrX<S>& g = pg.value;
            for (Index i = 0; i < m; ++i) {
                auto row = px.value.segment(i * n, n);
                auto dy = o.grad.segment(i * n, n);
                const S mean = row.mean();
                const S is = inv_std[i];
                const ArrX<S> xhat = (row - mean) * is;
                if (pg.requires_grad) pg.grad += dy * xhat;
                if (pb.requires_grad) pb.grad += dy;
                if (px.requires_grad) {
                    const ArrX<S> dxhat = dy * g;
                    const S sum_dxhat = dxhat.sum();
                    const S sum_dxhat_xhat = (dxhat * xhat).sum();
                    px.grad.segment(i * n, n) +=
                        is * (dxhat - (sum_dxhat + xhat * sum_dxhat_xhat) / S(n));
                }
            }
        });
}

// tanh-form GELU.
template <typename S>
Tensor<S> gelu(const Tensor<S>& x) {
    static const S k = S(std::sqrt(2.0 / M_PI));
    static const S c = S(0.044715);
    ArrX<S> u = k * (x.value() + c * x.value().cube());
    ArrX<S> t = u.tanh();
    ArrX<S> out = S(0.5) * x.value() * (S(1) + t);
    return Tensor<S>::make("gelu", x.shape(), std::move(out), {x}, [t = std::move(t)](TensorNode<S>& o) {
        if (!o.parents[0]->requires_grad) return;
        const ArrX<S>& xv = o.parents[0]->value;
        const ArrX<S> sech2 = S(1) - t.square();
        const ArrX<S> du = k * (S(1) + S(3) * c * xv.square());
        o.parents[0]->grad += o.grad * (S(0.5) * (S(1) + t) + S(0.5) * xv * sech2 * du);
    });
}

template <typename S>
Tensor<S> sum_all(const Tensor<S>& x) {
    ArrX<S> out(1);
    out[0] = x.value().sum();
    return Tensor<S>::make("sum_all", {1, 1}, std::move(out), {x}, [](TensorNode<S>& o) {
        if (o.parents[0]->requires_grad) o.parents[0]->grad += o.grad[0];
    });
}

template <typename S>
Tensor<S> mean_all(const Tensor<S>& x) {
    ArrX<S> out(1);
    out[0] = x.value().mean();
    const S inv_n = S(1) / S(x.size());
    return Tensor<S>::make("mean_all", {1, 1}, std::move(out), {x}, [inv_n](TensorNode<S>& o) {
        if (o.parents[0]->requires_grad) o.parents[0]->grad += o.grad[0] * inv_n;
    });
}

// Column-wise mean over rows: MxN -> 1xN.
template <typename S>
Tensor<S> mean_rows(const Tensor<S>& x) {
    if (x.rank() != 2) throw ShapeError("mean_rows: expects rank-2 tensor");
    const Index m = x.rows(), n = x.cols();
    ArrX<S> out(n);
    as_mat_mut(out, 1, n) = x.mat().colwise().mean();
    const S inv_m = S(1) / S(m);
    return Tensor<S>::make("mean_rows", {1, n}, std::move(out), {x}, [m, n, inv_m](TensorNode<S>& o) {
        if (!o.parents[0]->requires_grad) return;
        as_mat_mut(o.parents[0]->grad, m, n).rowwise() +=
            Eigen::Map<const Eigen::RowVectorX<S>>(o.grad.data(), n) * inv_m;
    });
}

template <typename S>
Tensor<S> gather_rows(const Tensor<S>& x, std::vector<int> rows) {
    if (x.rank() != 2) throw ShapeError("gather_rows: expects rank-2 tensor");
    const Index m = x.rows(), n = x.cols();
    for (int r : rows)
        if (r < 0 || r >= m)
            throw ContractError("gather_rows: index " + std::to_string(r) + " out of range [0," +
                                std::to_string(m) + ")");
    const Index k = static_cast<Index>(rows.size());
    ArrX<S> out(k * n);
    for (Index i = 0; i < k; ++i)
        out.segment(i * n, n) = x.value().segment(static_cast<Index>(rows[i]) * n, n);
    return Tensor<S>::make("gather_rows", {k, n}, std::move(out), {x},
                           [n, rows = std::move(rows)](TensorNode<S>& o) {
                               if (!o.parents[0]->requires_grad) return;
                               for (std::size_t i = 0; i < rows.size(); ++i)
                                   o.parents[0]->grad.segment(static_cast<Index>(rows[i]) * n, n) +=
                                       o.grad.segment(static_cast<Index>(i) * n, n);
                           });
}

// Places row i of x at positions[i] in an output with total_rows rows; every
// other row receives the broadcast fill row (the decoder's learnable
// placeholder).
template <typename S>
Tensor<S> scatter_rows_with_fill(const Tensor<S>& x, const std::vector<int>& positions, Index total_rows,
                                 const Tensor<S>& fill) {
    if (x.rank() != 2 || fill.rank() != 2 || fill.rows() != 1 || fill.cols() != x.cols())
        throw ShapeError("scatter_rows_with_fill: expects MxN plus 1xN fill");
    if (static_cast<Index>(positions.size()) != x.rows())
        throw ContractError("scatter_rows_with_fill: positions length " + std::to_string(positions.size()) +
                            " != rows " + std::to_string(x.rows()));
    const Index n = x.cols();
    std::vector<int> owner(static_cast<std::size_t>(total_rows), -1);
    for (std::size_t i = 0; i < positions.size(); ++i) {
        const int p = positions[i];
        if (p < 0 || p >= total_rows)
            throw ContractError("scatter_rows_with_fill: position " + std::to_string(p) + " out of range");
        if (owner[static_cast<std::size_t>(p)] != -1)
            throw ContractError("scatter_rows_with_fill: duplicate position " + std::to_string(p));
        owner[static_cast<std::size_t>(p)] = static_cast<int>(i);
    }
    ArrX<S> out(total_rows * n);
    for (Index r = 0; r < total_rows; ++r) {
        const int src = owner[static_cast<std::size_t>(r)];
        if (src >= 0)
            out.segment(r * n, n) = x.value().segment(static_cast<Index>(src) * n, n);
        else
            out.segment(r * n, n) = fill.value();
    }
    return Tensor<S>::make("scatter_rows_with_fill", {total_rows, n}, std::move(out), {x, fill},
                           [n, total_rows, owner = std::move(owner)](TensorNode<S>& o) {
                               auto& px = *o.parents[0];
                               auto& pf = *o.parents[1];
                               for (Index r = 0; r < total_rows; ++r) {
                                   const int src = owner[static_cast<std::size_t>(r)];
                                   if (src >= 0) {
                                       if (px.requires_grad)
                                           px.grad.segment(static_cast<Index>(src) * n, n) +=
                                               o.grad.segment(r * n, n);
                                   } else if (pf.requires_grad) {
                                       pf.grad += o.grad.segment(r * n, n);
                                   }
                               }
                           });
}

// Horizontal concat of same-height matrices (the per-head outputs).
template <typename S>
Tensor<S> hconcat(const std::vector<Tensor<S>>& parts) {
    if (parts.empty()) throw ShapeError("hconcat: no parts");
    const Index m = parts.front().rows();
    Index total = 0;
    std::vector<Index> widths;
    widths.reserve(parts.size());
    for (const auto& p : parts) {
        if (p.rank() != 2 || p.rows() != m) throw ShapeError("hconcat: row counts differ");
        widths.push_back(p.cols());
        total += p.cols();
    }
    ArrX<S> out(m * total);
    auto om = as_mat_mut(out, m, total);
    Index col = 0;
    for (const auto& p : parts) {
        om.middleCols(col, p.cols()) = p.mat();
        col += p.cols();
    }
    return Tensor<S>::make("hconcat", {m, total}, std::move(out), parts,
                           [m, total, widths = std::move(widths)](TensorNode<S>& o) {
                               const auto d_out = as_mat(o.grad, m, total);
                               Index c = 0;
                               for (std::size_t i = 0; i < widths.size(); ++i) {
                                   auto& p = *o.parents[i];
                                   if (p.requires_grad)
                                       as_mat_mut(p.grad, m, widths[i]) += d_out.middleCols(c, widths[i]);
                                   c += widths[i];
                               }
                           });
}

// Mean Huber loss: 0.5 e^2 for |e| <= delta, else delta (|e| - delta/2).
template <typename S>
Tensor<S> huber_loss(const Tensor<S>& pred, const Tensor<S>& target, S delta) {
    detail::require_same_shape(pred, target, "huber_loss");
    if (!(delta > S(0))) throw ShapeError("huber_loss: delta must be positive");
    const ArrX<S> e = pred.value() - target.value();
    const ArrX<S> ae = e.abs();
    ArrX<S> out(1);
    out[0] = (ae <= delta).select(S(0.5) * e.square(), delta * (ae - S(0.5) * delta)).mean();
    const S inv_n = S(1) / S(e.size());
    return Tensor<S>::make("huber_loss", {1, 1}, std::move(out), {pred, target},
                           [delta, inv_n, e = std::move(e)](TensorNode<S>& o) {
                               const ArrX<S> g =
                                   (e.abs() <= delta).select(e, delta * e.sign()) * (o.grad[0] * inv_n);
                               if (o.parents[0]->requires_grad) o.parents[0]->grad += g;
                               if (o.parents[1]->requires_grad) o.parents[1]->grad -= g;
                           });
}

// Focal loss on raw logits (one column), mean over the batch. For y=1 the
// per-sample term is -alpha (1-p)^gamma log p with p = sigmoid(z); the y=0
// term mirrors it. Probabilities are clamped to [1e-7, 1-1e-7].
template <typename S>
Tensor<S> sigmoid_focal_loss(const Tensor<S>& logits, std::vector<int> labels, S alpha, S gamma) {
    if (logits.rank() != 2 || logits.cols() != 1)
        throw ShapeError("sigmoid_focal_loss: expects Mx1 logits");
    if (static_cast<Index>(labels.size()) != logits.rows())
        throw ContractError("sigmoid_focal_loss: label count != logit count");
    const Index m = logits.rows();
    const S p_min = S(1e-7), p_max = S(1) - S(1e-7);
    ArrX<S> p(m);
    for (Index i = 0; i < m; ++i) {
        const S z = logits.value()[i];
        const S pi = z >= S(0) ? S(1) / (S(1) + std::exp(-z)) : std::exp(z) / (S(1) + std::exp(z));
        p[i] = std::min(p_max, std::max(p_min, pi));
    }
    ArrX<S> out(1);
    S acc = S(0);
    for (Index i = 0; i < m; ++i) {
        const S pi = p[i];
        acc += labels[static_cast<std::size_t>(i)] == 1
                   ? -alpha * std::pow(S(1) - pi, gamma) * std::log(pi)
                   : -(S(1) - alpha) * std::pow(pi, gamma) * std::log(S(1) - pi);
    }
    out[0] = acc / S(m);
    const S inv_m = S(1) / S(m);
    return Tensor<S>::make("sigmoid_focal_loss", {1, 1}, std::move(out), {logits},
                           [alpha, gamma, inv_m, p = std::move(p), labels = std::move(labels)](TensorNode<S>& o) {
                               if (!o.parents[0]->requires_grad) return;
                               for (Index i = 0; i < p.size(); ++i) {
                                   const S pi = p[i];
                                   const S dz =
                                       labels[static_cast<std::size_t>(i)] == 1
                                           ? alpha * std::pow(S(1) - pi, gamma) *
                                                 (gamma * pi * std::log(pi) - (S(1) - pi))
                                           : (S(1) - alpha) * std::pow(pi, gamma) *
                                                 (pi - gamma * (S(1) - pi) * std::log(S(1) - pi));
                                   o.parents[0]->grad[i] += o.grad[0] * inv_m * dz;
                               }
                           });
}

} // namespace aufd
