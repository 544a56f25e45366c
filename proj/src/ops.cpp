#include "mtlre/ops.hpp"

#include <cmath>
#include <sstream>

#include "mtlre/init.hpp"

namespace mtlre {

namespace {

Tape& same_tape(const Tensor& a, const Tensor& b, const char* op) {
    if (!a.valid() || !b.valid()) {
        throw ValidationError(std::string(op) + ": operand tensor is default-constructed");
    }
    if (&a.tape() != &b.tape()) {
        throw ValidationError(std::string(op) + ": operands live on different tapes");
    }
    return a.tape();
}

ConstMatMap mat_view(Tape& t, Index id) {
    const Shape& s = t.shape_of(id);
    return ConstMatMap(t.value_of(id).data(), s.rows(), s.cols());
}

enum class EwKind { add, sub, mul };
// How the two operand shapes line up: equal, one side scalar, or a length-n
// vector applied across the rows of an m x n matrix.
enum class EwMode { same, left_scalar, right_scalar, left_rowvec, right_rowvec };

EwMode classify(const Shape& a, const Shape& b, const char* op) {
    if (a == b) return EwMode::same;
    if (a.size() == 1) return EwMode::left_scalar;
    if (b.size() == 1) return EwMode::right_scalar;
    if (a.rank() == 1 && b.rank() == 2 && a.extent(0) == b.extent(1)) {
        return EwMode::left_rowvec;
    }
    if (b.rank() == 1 && a.rank() == 2 && b.extent(0) == a.extent(1)) {
        return EwMode::right_rowvec;
    }
    throw DimensionError(std::string(op) + ": shapes " + a.str() + " and " +
                         b.str() + " are not broadcast-compatible");
}

double apply(EwKind k, double x, double y) {
    switch (k) {
        case EwKind::add: return x + y;
        case EwKind::sub: return x - y;
        case EwKind::mul: return x * y;
    }
    return 0;
}

Tensor elementwise(const Tensor& a, const Tensor& b, EwKind kind, const char* op) {
    Tape& t = same_tape(a, b, op);
    EwMode mode = classify(a.shape(), b.shape(), op);
    const Vec& av = a.value();
    const Vec& bv = b.value();
    Shape out_shape;
    Vec out;
    switch (mode) {
        case EwMode::same: {
            out_shape = a.shape();
            out.resize(av.size());
            switch (kind) {
                case EwKind::add: out = av + bv; break;
                case EwKind::sub: out = av - bv; break;
                case EwKind::mul: out = av.cwiseProduct(bv); break;
            }
            break;
        }
        case EwMode::left_scalar: {
            out_shape = b.shape();
            out.resize(bv.size());
            for (Index i = 0; i < bv.size(); ++i) out[i] = apply(kind, av[0], bv[i]);
            break;
        }
        case EwMode::right_scalar: {
            out_shape = a.shape();
            out.resize(av.size());
            for (Index i = 0; i < av.size(); ++i) out[i] = apply(kind, av[i], bv[0]);
            break;
        }
        case EwMode::left_rowvec: {
            out_shape = b.shape();
            Index m = b.shape().rows(), n = b.shape().cols();
            out.resize(m * n);
            for (Index r = 0; r < m; ++r)
                for (Index c = 0; c < n; ++c)
                    out[r * n + c] = apply(kind, av[c], bv[r * n + c]);
            break;
        }
        case EwMode::right_rowvec: {
            out_shape = a.shape();
            Index m = a.shape().rows(), n = a.shape().cols();
            out.resize(m * n);
            for (Index r = 0; r < m; ++r)
                for (Index c = 0; c < n; ++c)
                    out[r * n + c] = apply(kind, av[r * n + c], bv[c]);
            break;
        }
    }
    Index aid = a.id(), bid = b.id();
    return t.make_node(out_shape, std::move(out), [aid, bid, kind, mode](Tape& tp, Index self) {
        const Vec& g = tp.grad_ref(self);
        const Vec& av2 = tp.value_of(aid);
        const Vec& bv2 = tp.value_of(bid);
        Vec& ga = tp.grad_ref(aid);
        Vec& gb = tp.grad_ref(bid);
        switch (mode) {
            case EwMode::same:
                switch (kind) {
                    case EwKind::add: ga += g; gb += g; break;
                    case EwKind::sub: ga += g; gb -= g; break;
                    case EwKind::mul:
                        ga += g.cwiseProduct(bv2);
                        gb += g.cwiseProduct(av2);
                        break;
                }
                break;
            case EwMode::left_scalar:
                switch (kind) {
                    case EwKind::add: ga[0] += g.sum(); gb += g; break;
                    case EwKind::sub: ga[0] += g.sum(); gb -= g; break;
                    case EwKind::mul:
                        ga[0] += g.dot(bv2);
                        gb += g * av2[0];
                        break;
                }
                break;
            case EwMode::right_scalar:
                switch (kind) {
                    case EwKind::add: ga += g; gb[0] += g.sum(); break;
                    case EwKind::sub: ga += g; gb[0] -= g.sum(); break;
                    case EwKind::mul:
                        ga += g * bv2[0];
                        gb[0] += g.dot(av2);
                        break;
                }
                break;
            case EwMode::left_rowvec: {
                Index m = tp.shape_of(self).rows(), n = tp.shape_of(self).cols();
                ConstMatMap G(g.data(), m, n);
                switch (kind) {
                    case EwKind::add:
                        ga += G.colwise().sum().transpose();
                        gb += g;
                        break;
                    case EwKind::sub:
                        ga += G.colwise().sum().transpose();
                        gb -= g;
                        break;
                    case EwKind::mul: {
                        ConstMatMap B(bv2.data(), m, n);
                        ga += G.cwiseProduct(B).colwise().sum().transpose();
                        MatMap GB(gb.data(), m, n);
                        for (Index r = 0; r < m; ++r)
                            GB.row(r) += G.row(r).cwiseProduct(av2.transpose());
                        break;
                    }
                }
                break;
            }
            case EwMode::right_rowvec: {
                Index m = tp.shape_of(self).rows(), n = tp.shape_of(self).cols();
                ConstMatMap G(g.data(), m, n);
                switch (kind) {
                    case EwKind::add:
                        ga += g;
                        gb += G.colwise().sum().transpose();
                        break;
                    case EwKind::sub:
                        ga += g;
                        gb -= G.colwise().sum().transpose();
                        break;
                    case EwKind::mul: {
                        ConstMatMap A(av2.data(), m, n);
                        gb += G.cwiseProduct(A).colwise().sum().transpose();
                        MatMap GA(ga.data(), m, n);
                        for (Index r = 0; r < m; ++r)
                            GA.row(r) += G.row(r).cwiseProduct(bv2.transpose());
                        break;
                    }
                }
                break;
            }
        }
    });
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) { return elementwise(a, b, EwKind::add, "add"); }
Tensor sub(const Tensor& a, const Tensor& b) { return elementwise(a, b, EwKind::sub, "sub"); }
Tensor mul(const Tensor& a, const Tensor& b) { return elementwise(a, b, EwKind::mul, "mul"); }

Tensor scale(const Tensor& a, double factor) {
    Tape& t = a.tape();
    Vec out = a.value() * factor;
    Index aid = a.id();
    return t.make_node(a.shape(), std::move(out), [aid, factor](Tape& tp, Index self) {
        tp.grad_ref(aid) += tp.grad_ref(self) * factor;
    });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    Tape& t = same_tape(a, b, "matmul");
    const Shape& sa = a.shape();
    const Shape& sb = b.shape();
    if (sa.rank() == 0 || sb.rank() == 0) {
        throw DimensionError("matmul: scalar operand (shapes " + sa.str() + ", " + sb.str() + ")");
    }
    // Promote vectors: left vector is a 1 x k row, right vector a k x 1 column.
    Index m = sa.rank() == 1 ? 1 : sa.extent(0);
    Index k = sa.rank() == 1 ? sa.extent(0) : sa.extent(1);
    Index k2 = sb.rank() == 1 ? sb.extent(0) : sb.extent(0);
    Index n = sb.rank() == 1 ? 1 : sb.extent(1);
    if (k != k2) {
        throw DimensionError("matmul: inner extents differ for shapes " + sa.str() +
                             " and " + sb.str());
    }
    ConstMatMap A(a.value().data(), m, k);
    ConstMatMap B(b.value().data(), k, n);
    Mat C = A * B;
    Shape out_shape;
    if (sa.rank() == 1 && sb.rank() == 1) out_shape = Shape::scalar();
    else if (sa.rank() == 1) out_shape = Shape::vector(n);
    else if (sb.rank() == 1) out_shape = Shape::vector(m);
    else out_shape = Shape::matrix(m, n);
    Vec flat = Eigen::Map<const Vec>(C.data(), C.size());
    Index aid = a.id(), bid = b.id();
    return t.make_node(out_shape, std::move(flat), [aid, bid, m, k, n](Tape& tp, Index self) {
        ConstMatMap G(tp.grad_ref(self).data(), m, n);
        ConstMatMap A2(tp.value_of(aid).data(), m, k);
        ConstMatMap B2(tp.value_of(bid).data(), k, n);
        MatMap GA(tp.grad_ref(aid).data(), m, k);
        GA += G * B2.transpose();
        MatMap GB(tp.grad_ref(bid).data(), k, n);
        GB += A2.transpose() * G;
    });
}

Tensor transpose(const Tensor& a) {
    if (a.shape().rank() != 2) {
        throw DimensionError("transpose: requires a matrix, got shape " + a.shape().str());
    }
    Tape& t = a.tape();
    Index m = a.shape().extent(0), n = a.shape().extent(1);
    Mat at = a.matrix().transpose();
    Vec flat = Eigen::Map<const Vec>(at.data(), at.size());
    Index aid = a.id();
    return t.make_node(Shape::matrix(n, m), std::move(flat), [aid, m, n](Tape& tp, Index self) {
        ConstMatMap G(tp.grad_ref(self).data(), n, m);
        MatMap GA(tp.grad_ref(aid).data(), m, n);
        GA += G.transpose();
    });
}

Tensor sigmoid(const Tensor& a) {
    Tape& t = a.tape();
    // 0.5*(1+tanh(x/2)) is the overflow-safe form.
    Vec out = (0.5 * (a.value().array() * 0.5).tanh() + 0.5).matrix();
    Index aid = a.id();
    return t.make_node(a.shape(), std::move(out), [aid](Tape& tp, Index self) {
        const Vec& y = tp.value_of(self);
        const Vec& g = tp.grad_ref(self);
        tp.grad_ref(aid).array() += g.array() * y.array() * (1.0 - y.array());
    });
}

Tensor tanh(const Tensor& a) {
    Tape& t = a.tape();
    Vec out = a.value().array().tanh().matrix();
    Index aid = a.id();
    return t.make_node(a.shape(), std::move(out), [aid](Tape& tp, Index self) {
        const Vec& y = tp.value_of(self);
        const Vec& g = tp.grad_ref(self);
        tp.grad_ref(aid).array() += g.array() * (1.0 - y.array().square());
    });
}

Tensor relu(const Tensor& a) {
    Tape& t = a.tape();
    Vec out = a.value().array().max(0.0).matrix();
    Index aid = a.id();
    return t.make_node(a.shape(), std::move(out), [aid](Tape& tp, Index self) {
        const Vec& x = tp.value_of(aid);
        const Vec& g = tp.grad_ref(self);
        Vec& ga = tp.grad_ref(aid);
        for (Index i = 0; i < x.size(); ++i) {
            if (x[i] > 0) ga[i] += g[i];
        }
    });
}

namespace {
// Softmax over contiguous or strided slices: `slices` runs, each `len` long,
// elements within a run spaced by `stride`, runs starting at r*start_step.
struct SliceLayout {
    Index slices, len, stride, start_step;
};

SliceLayout softmax_layout(const Shape& s, Index axis) {
    if (s.rank() == 0) {
        throw DimensionError("softmax: scalar input has no axis");
    }
    if (s.rank() == 1) {
        if (axis != 0) {
            throw DimensionError("softmax: axis " + std::to_string(axis) +
                                 " invalid for shape " + s.str());
        }
        return {1, s.extent(0), 1, 0};
    }
    Index r = s.extent(0), c = s.extent(1);
    if (axis == 1) return {r, c, 1, c};      // along rows
    if (axis == 0) return {c, r, c, 1};      // down columns
    throw DimensionError("softmax: axis " + std::to_string(axis) +
                         " invalid for shape " + s.str());
}
}  // namespace

Tensor softmax(const Tensor& a, Index axis) {
    Tape& t = a.tape();
    SliceLayout L = softmax_layout(a.shape(), axis);
    const Vec& x = a.value();
    Vec out(x.size());
    for (Index s = 0; s < L.slices; ++s) {
        Index base = s * L.start_step;
        double mx = x[base];
        for (Index i = 1; i < L.len; ++i) mx = std::max(mx, x[base + i * L.stride]);
        double z = 0;
        for (Index i = 0; i < L.len; ++i) {
            double e = std::exp(x[base + i * L.stride] - mx);
            out[base + i * L.stride] = e;
            z += e;
        }
        for (Index i = 0; i < L.len; ++i) out[base + i * L.stride] /= z;
    }
    Index aid = a.id();
    return t.make_node(a.shape(), std::move(out), [aid, L](Tape& tp, Index self) {
        const Vec& y = tp.value_of(self);
        const Vec& g = tp.grad_ref(self);
        Vec& ga = tp.grad_ref(aid);
        for (Index s = 0; s < L.slices; ++s) {
            Index base = s * L.start_step;
            double dot = 0;
            for (Index i = 0; i < L.len; ++i) {
                Index e = base + i * L.stride;
                dot += g[e] * y[e];
            }
            for (Index i = 0; i < L.len; ++i) {
                Index e = base + i * L.stride;
                ga[e] += y[e] * (g[e] - dot);
            }
        }
    });
}

Tensor concat(std::span<const Tensor> parts, Index axis) {
    if (parts.empty()) throw ValidationError("concat: no tensors given");
    Tape& t = parts[0].tape();
    Index rank = parts[0].shape().rank();
    if (rank == 0) throw DimensionError("concat: scalar parts are not concatenable");
    for (const Tensor& p : parts) {
        same_tape(parts[0], p, "concat");
        if (p.shape().rank() != rank) {
            throw DimensionError("concat: mixed ranks " + parts[0].shape().str() +
                                 " and " + p.shape().str());
        }
    }
    if (axis < 0 || axis >= rank) {
        throw DimensionError("concat: axis " + std::to_string(axis) +
                             " invalid for rank " + std::to_string(rank));
    }
    Index other = 1 - axis;  // the extent that must agree (rank-2 only)
    std::vector<Index> ids;
    std::vector<Index> offsets{0};
    Index total = 0;
    for (const Tensor& p : parts) {
        if (rank == 2 && p.shape().extent(other) != parts[0].shape().extent(other)) {
            throw DimensionError("concat: shapes " + parts[0].shape().str() + " and " +
                                 p.shape().str() + " differ off the concat axis");
        }
        total += p.shape().extent(axis);
        offsets.push_back(total);
        ids.push_back(p.id());
    }
    Shape out_shape = rank == 1 ? Shape::vector(total)
                    : axis == 0 ? Shape::matrix(total, parts[0].shape().extent(1))
                                : Shape::matrix(parts[0].shape().extent(0), total);
    Vec out(out_shape.size());
    {
        MatMap O(out.data(), out_shape.rows(), out_shape.cols());
        for (std::size_t i = 0; i < ids.size(); ++i) {
            ConstMatMap P = mat_view(t, ids[i]);
            if (rank == 1) {
                out.segment(offsets[i], P.size()) =
                    Eigen::Map<const Vec>(P.data(), P.size());
            } else if (axis == 0) {
                O.middleRows(offsets[i], P.rows()) = P;
            } else {
                O.middleCols(offsets[i], P.cols()) = P;
            }
        }
    }
    return t.make_node(out_shape, std::move(out),
                       [ids, offsets, axis, rank](Tape& tp, Index self) {
        const Shape& os = tp.shape_of(self);
        ConstMatMap G(tp.grad_ref(self).data(), os.rows(), os.cols());
        for (std::size_t i = 0; i < ids.size(); ++i) {
            const Shape& ps = tp.shape_of(ids[i]);
            if (rank == 1) {
                tp.grad_ref(ids[i]) +=
                    tp.grad_ref(self).segment(offsets[i], ps.size());
            } else if (axis == 0) {
                MatMap GP(tp.grad_ref(ids[i]).data(), ps.rows(), ps.cols());
                GP += G.middleRows(offsets[i], ps.rows());
            } else {
                MatMap GP(tp.grad_ref(ids[i]).data(), ps.rows(), ps.cols());
                GP += G.middleCols(offsets[i], ps.cols());
            }
        }
    });
}

Tensor concat(std::initializer_list<Tensor> parts, Index axis) {
    std::vector<Tensor> v(parts);
    return concat(std::span<const Tensor>(v), axis);
}

Tensor stack_rows(std::span<const Tensor> rows) {
    if (rows.empty()) throw ValidationError("stack_rows: no tensors given");
    Tape& t = rows[0].tape();
    Index n = rows[0].shape().size();
    std::vector<Index> ids;
    for (const Tensor& r : rows) {
        same_tape(rows[0], r, "stack_rows");
        if (r.shape().rank() != 1 || r.shape().extent(0) != n) {
            throw DimensionError("stack_rows: expected vectors of length " +
                                 std::to_string(n) + ", got " + r.shape().str());
        }
        ids.push_back(r.id());
    }
    Index m = static_cast<Index>(rows.size());
    Vec out(m * n);
    for (Index r = 0; r < m; ++r) out.segment(r * n, n) = rows[r].value();
    return t.make_node(Shape::matrix(m, n), std::move(out), [ids, n](Tape& tp, Index self) {
        const Vec& g = tp.grad_ref(self);
        for (std::size_t r = 0; r < ids.size(); ++r) {
            tp.grad_ref(ids[r]) += g.segment(static_cast<Index>(r) * n, n);
        }
    });
}

Tensor reshape(const Tensor& a, Shape target) {
    if (target.size() != a.shape().size()) {
        throw DimensionError("reshape: cannot view " + a.shape().str() + " as " +
                             target.str());
    }
    Tape& t = a.tape();
    Vec out = a.value();
    Index aid = a.id();
    return t.make_node(std::move(target), std::move(out), [aid](Tape& tp, Index self) {
        tp.grad_ref(aid) += tp.grad_ref(self);
    });
}

Tensor row(const Tensor& m, Index r) {
    if (m.shape().rank() != 2) {
        throw DimensionError("row: requires a matrix, got shape " + m.shape().str());
    }
    Index rows_n = m.shape().extent(0), cols_n = m.shape().extent(1);
    if (r < 0 || r >= rows_n) {
        throw DimensionError("row: index " + std::to_string(r) + " out of range for " +
                             m.shape().str());
    }
    Tape& t = m.tape();
    Vec out = m.value().segment(r * cols_n, cols_n);
    Index mid = m.id();
    return t.make_node(Shape::vector(cols_n), std::move(out), [mid, r, cols_n](Tape& tp, Index self) {
        tp.grad_ref(mid).segment(r * cols_n, cols_n) += tp.grad_ref(self);
    });
}

Tensor gather_rows(const Tensor& m, const std::vector<Index>& row_indices) {
    if (m.shape().rank() != 2) {
        throw DimensionError("gather_rows: requires a matrix, got shape " + m.shape().str());
    }
    if (row_indices.empty()) throw ValidationError("gather_rows: empty index list");
    Index rows_n = m.shape().extent(0), cols_n = m.shape().extent(1);
    for (Index r : row_indices) {
        if (r < 0 || r >= rows_n) {
            throw DimensionError("gather_rows: index " + std::to_string(r) +
                                 " out of range for " + m.shape().str());
        }
    }
    Tape& t = m.tape();
    Index k = static_cast<Index>(row_indices.size());
    Vec out(k * cols_n);
    for (Index i = 0; i < k; ++i) {
        out.segment(i * cols_n, cols_n) = m.value().segment(row_indices[i] * cols_n, cols_n);
    }
    Index mid = m.id();
    return t.make_node(Shape::matrix(k, cols_n), std::move(out),
                       [mid, row_indices, cols_n](Tape& tp, Index self) {
        const Vec& g = tp.grad_ref(self);
        Vec& gm = tp.grad_ref(mid);
        for (std::size_t i = 0; i < row_indices.size(); ++i) {
            gm.segment(row_indices[i] * cols_n, cols_n) +=
                g.segment(static_cast<Index>(i) * cols_n, cols_n);
        }
    });
}

Tensor sum(const Tensor& a) {
    Tape& t = a.tape();
    Vec out(1);
    out[0] = a.value().sum();
    Index aid = a.id();
    return t.make_node(Shape::scalar(), std::move(out), [aid](Tape& tp, Index self) {
        tp.grad_ref(aid).array() += tp.grad_ref(self)[0];
    });
}

Tensor cross_entropy(const Tensor& predictions, const Tensor& gold_onehot) {
    Tape& t = same_tape(predictions, gold_onehot, "cross_entropy");
    const Shape& sp = predictions.shape();
    const Shape& sg = gold_onehot.shape();
    if (sp.rank() != 2 || sg.rank() != 2 || !(sp == sg)) {
        throw DimensionError("cross_entropy: need matching matrices, got " + sp.str() +
                             " and " + sg.str());
    }
    Index n = sp.extent(0), c = sp.extent(1);
    const Vec& gv = gold_onehot.value();
    for (Index i = 0; i < n; ++i) {
        Index ones = 0;
        for (Index j = 0; j < c; ++j) {
            double v = gv[i * c + j];
            if (v == 1.0) ++ones;
            else if (v != 0.0) {
                throw ValidationError("cross_entropy: gold row " + std::to_string(i) +
                                      " has entry " + std::to_string(v) +
                                      " (rows must be one-hot)");
            }
        }
        if (ones != 1) {
            throw ValidationError("cross_entropy: gold row " + std::to_string(i) +
                                  " has " + std::to_string(ones) + " ones (rows must be one-hot)");
        }
    }
    constexpr double kFloor = 1e-12;
    const Vec& pv = predictions.value();
    double loss = 0;
    for (Index i = 0; i < n * c; ++i) {
        if (gv[i] != 0.0) loss -= gv[i] * std::log(std::max(pv[i], kFloor));
    }
    Vec out(1);
    out[0] = loss;
    Index pid = predictions.id(), gid = gold_onehot.id();
    return t.make_node(Shape::scalar(), std::move(out), [pid, gid](Tape& tp, Index self) {
        double g0 = tp.grad_ref(self)[0];
        const Vec& pv2 = tp.value_of(pid);
        const Vec& gv2 = tp.value_of(gid);
        Vec& gp = tp.grad_ref(pid);
        for (Index i = 0; i < pv2.size(); ++i) {
            // d/dp of log(max(p, floor)) is 1/p above the clamp, 0 below it.
            if (gv2[i] != 0.0 && pv2[i] >= kFloor) {
                gp[i] -= g0 * gv2[i] / pv2[i];
            }
        }
    });
}

Tensor dropout(const Tensor& a, double rate, std::mt19937_64& rng, bool training) {
    if (rate < 0.0 || rate >= 1.0) {
        throw ValidationError("dropout: rate " + std::to_string(rate) +
                              " outside [0, 1)");
    }
    if (!training || rate == 0.0) return a;  // exact identity
    Tape& t = a.tape();
    const Vec& x = a.value();
    double keep_scale = 1.0 / (1.0 - rate);
    Vec mask(x.size());
    for (Index i = 0; i < x.size(); ++i) {
        mask[i] = uniform01(rng) < rate ? 0.0 : keep_scale;
    }
    Vec out = x.cwiseProduct(mask);
    Index aid = a.id();
    return t.make_node(a.shape(), std::move(out), [aid, mask](Tape& tp, Index self) {
        tp.grad_ref(aid) += tp.grad_ref(self).cwiseProduct(mask);
    });
}

Tensor gradient_reversal(const Tensor& a, double lambda) {
    if (!std::isfinite(lambda)) {
        throw ValidationError("gradient_reversal: non-finite lambda");
    }
    Tape& t = a.tape();
    Vec out = a.value();
    Index aid = a.id();
    return t.make_node(a.shape(), std::move(out), [aid, lambda](Tape& tp, Index self) {
        tp.grad_ref(aid) -= lambda * tp.grad_ref(self);
    });
}

}  // namespace mtlre
