#include "hvacmpc/tape.hpp"

#include <cmath>
#include <stdexcept>

namespace hvacmpc {

namespace {

void require_same_or_row(const Tensor& a, const Tensor& b, const char* op) {
    bool row_bcast = b.rows() == 1 && b.cols() == a.cols();
    if (!a.same_shape(b) && !row_bcast)
        throw ShapeError(std::string(op) + ": incompatible shapes " + a.shape_str() + " and " + b.shape_str());
}

// Sums a full-shape gradient down to a 1xN row when the forward op broadcast.
Tensor reduce_rows(const Tensor& g) {
    Tensor out(1, g.cols());
    for (int r = 0; r < g.rows(); ++r)
        for (int c = 0; c < g.cols(); ++c) out(0, c) += g(r, c);
    return out;
}

}  // namespace

void Tape::check_finite(const Tensor& t, const char* op) const {
    for (double v : t.data())
        if (!std::isfinite(v)) throw std::domain_error(std::string(op) + ": non-finite result");
}

VarId Tape::leaf(Tensor value) {
    check_finite(value, "leaf");
    return push({Op::Leaf, std::move(value)});
}

VarId Tape::matmul(VarId a, VarId b) {
    const Tensor& A = nodes_[a].value;
    const Tensor& B = nodes_[b].value;
    if (A.cols() != B.rows())
        throw ShapeError("matmul: incompatible shapes " + A.shape_str() + " and " + B.shape_str());
    Tensor C(A.rows(), B.cols());
    const int m = A.rows(), k = A.cols(), n = B.cols();
    for (int i = 0; i < m; ++i) {
        for (int p = 0; p < k; ++p) {
            const double av = A(i, p);
            if (av == 0.0) continue;
            const double* brow = &B.data()[static_cast<size_t>(p) * n];
            double* crow = &C.data()[static_cast<size_t>(i) * n];
            for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
    check_finite(C, "matmul");
    return push({Op::MatMul, std::move(C), a, b});
}

VarId Tape::add(VarId a, VarId b) {
    const Tensor& A = nodes_[a].value;
    const Tensor& B = nodes_[b].value;
    require_same_or_row(A, B, "add");
    Tensor C = A;
    for (int r = 0; r < C.rows(); ++r)
        for (int c = 0; c < C.cols(); ++c) C(r, c) += B(B.rows() == 1 ? 0 : r, c);
    check_finite(C, "add");
    return push({Op::Add, std::move(C), a, b});
}

VarId Tape::sub(VarId a, VarId b) {
    const Tensor& A = nodes_[a].value;
    const Tensor& B = nodes_[b].value;
    require_same_or_row(A, B, "sub");
    Tensor C = A;
    for (int r = 0; r < C.rows(); ++r)
        for (int c = 0; c < C.cols(); ++c) C(r, c) -= B(B.rows() == 1 ? 0 : r, c);
    check_finite(C, "sub");
    return push({Op::Sub, std::move(C), a, b});
}

VarId Tape::scalar_mul(VarId a, double s) {
    Tensor C = nodes_[a].value;
    for (double& v : C.data()) v *= s;
    check_finite(C, "scalar_mul");
    Node n{Op::ScalarMul, std::move(C), a};
    n.s0 = s;
    return push(std::move(n));
}

VarId Tape::concat_cols(const std::vector<VarId>& parts) {
    if (parts.empty()) throw ShapeError("concat_cols: no inputs");
    int rows = nodes_[parts[0]].value.rows();
    int cols = 0;
    for (VarId p : parts) {
        const Tensor& t = nodes_[p].value;
        if (t.rows() != rows)
            throw ShapeError("concat_cols: row mismatch " + nodes_[parts[0]].value.shape_str() + " vs " + t.shape_str());
        cols += t.cols();
    }
    Tensor C(rows, cols);
    int off = 0;
    for (VarId p : parts) {
        const Tensor& t = nodes_[p].value;
        for (int r = 0; r < rows; ++r)
            for (int c = 0; c < t.cols(); ++c) C(r, off + c) = t(r, c);
        off += t.cols();
    }
    Node n{Op::ConcatCols, std::move(C)};
    n.inputs = parts;
    return push(std::move(n));
}

VarId Tape::slice_cols(VarId a, int c0, int c1) {
    const Tensor& A = nodes_[a].value;
    if (c0 < 0 || c1 > A.cols() || c0 >= c1)
        throw ShapeError("slice_cols: range [" + std::to_string(c0) + "," + std::to_string(c1) + ") out of " +
                         A.shape_str());
    Tensor C(A.rows(), c1 - c0);
    for (int r = 0; r < A.rows(); ++r)
        for (int c = c0; c < c1; ++c) C(r, c - c0) = A(r, c);
    Node n{Op::SliceCols, std::move(C), a};
    n.s0 = c0;
    n.s1 = c1;
    return push(std::move(n));
}

VarId Tape::tanh(VarId a) {
    Tensor C = nodes_[a].value;
    for (double& v : C.data()) v = std::tanh(v);
    return push({Op::Tanh, std::move(C), a});
}

VarId Tape::sigmoid(VarId a) {
    Tensor C = nodes_[a].value;
    for (double& v : C.data()) v = 1.0 / (1.0 + std::exp(-v));
    check_finite(C, "sigmoid");
    return push({Op::Sigmoid, std::move(C), a});
}

VarId Tape::relu(VarId a) {
    Tensor C = nodes_[a].value;
    for (double& v : C.data()) v = v > 0.0 ? v : 0.0;
    return push({Op::Relu, std::move(C), a});
}

VarId Tape::hadamard(VarId a, VarId b) {
    const Tensor& A = nodes_[a].value;
    const Tensor& B = nodes_[b].value;
    require_same_or_row(A, B, "hadamard");
    Tensor C = A;
    for (int r = 0; r < C.rows(); ++r)
        for (int c = 0; c < C.cols(); ++c) C(r, c) *= B(B.rows() == 1 ? 0 : r, c);
    check_finite(C, "hadamard");
    return push({Op::Hadamard, std::move(C), a, b});
}

VarId Tape::square(VarId a) {
    Tensor C = nodes_[a].value;
    for (double& v : C.data()) v *= v;
    check_finite(C, "square");
    return push({Op::Square, std::move(C), a});
}

VarId Tape::sum(VarId a) {
    double s = 0.0;
    for (double v : nodes_[a].value.data()) s += v;
    return push({Op::Sum, Tensor::scalar(s), a});
}

VarId Tape::mean(VarId a) {
    const Tensor& A = nodes_[a].value;
    if (A.size() == 0) throw ShapeError("mean: empty tensor");
    double s = 0.0;
    for (double v : A.data()) s += v;
    return push({Op::Mean, Tensor::scalar(s / A.size()), a});
}

VarId Tape::mse(VarId pred, VarId target) {
    const Tensor& P = nodes_[pred].value;
    const Tensor& T = nodes_[target].value;
    if (!P.same_shape(T))
        throw ShapeError("mse: incompatible shapes " + P.shape_str() + " and " + T.shape_str());
    double s = 0.0;
    for (int64_t i = 0; i < P.size(); ++i) {
        double d = P[i] - T[i];
        s += d * d;
    }
    check_finite(Tensor::scalar(s), "mse");
    return push({Op::Mse, Tensor::scalar(s / P.size()), pred, target});
}

VarId Tape::clamp_stopgrad(VarId a, double lo, double hi) {
    if (lo > hi) throw std::invalid_argument("clamp_stopgrad: lo > hi");
    Tensor C = nodes_[a].value;
    for (double& v : C.data()) v = v < lo ? lo : (v > hi ? hi : v);
    Node n{Op::Clamp, std::move(C), a};
    n.s0 = lo;
    n.s1 = hi;
    return push(std::move(n));
}

void Tape::accumulate(VarId id, const Tensor& g) {
    Tensor& dst = grads_[id];
    if (dst.size() == 0) {
        dst = g;
        return;
    }
    for (int64_t i = 0; i < dst.size(); ++i) dst[i] += g[i];
}

void Tape::backward(VarId root) {
    const Tensor& rv = nodes_[root].value;
    if (rv.rows() != 1 || rv.cols() != 1)
        throw std::invalid_argument("backward: root must be scalar, got " + rv.shape_str());

    grads_.assign(nodes_.size(), Tensor());
    grads_[root] = Tensor::scalar(1.0);

    for (VarId id = root; id >= 0; --id) {
        const Node& n = nodes_[id];
        const Tensor& g = grads_[id];
        if (g.size() == 0) continue;

        switch (n.op) {
            case Op::Leaf:
                break;
            case Op::MatMul: {
                const Tensor& A = nodes_[n.a].value;
                const Tensor& B = nodes_[n.b].value;
                // dA = g * B^T
                Tensor dA(A.rows(), A.cols());
                for (int i = 0; i < A.rows(); ++i)
                    for (int p = 0; p < A.cols(); ++p) {
                        double s = 0.0;
                        for (int j = 0; j < B.cols(); ++j) s += g(i, j) * B(p, j);
                        dA(i, p) = s;
                    }
                accumulate(n.a, dA);
                // dB = A^T * g
                Tensor dB(B.rows(), B.cols());
                for (int p = 0; p < B.rows(); ++p)
                    for (int i = 0; i < A.rows(); ++i) {
                        const double av = A(i, p);
                        if (av == 0.0) continue;
                        for (int j = 0; j < B.cols(); ++j) dB(p, j) += av * g(i, j);
                    }
                accumulate(n.b, dB);
                break;
            }
            case Op::Add: {
                accumulate(n.a, g);
                if (nodes_[n.b].value.rows() == 1 && g.rows() > 1)
                    accumulate(n.b, reduce_rows(g));
                else
                    accumulate(n.b, g);
                break;
            }
            case Op::Sub: {
                accumulate(n.a, g);
                Tensor neg = (nodes_[n.b].value.rows() == 1 && g.rows() > 1) ? reduce_rows(g) : g;
                for (double& v : neg.data()) v = -v;
                accumulate(n.b, neg);
                break;
            }
            case Op::ScalarMul: {
                Tensor d = g;
                for (double& v : d.data()) v *= n.s0;
                accumulate(n.a, d);
                break;
            }
            case Op::ConcatCols: {
                int off = 0;
                for (VarId p : n.inputs) {
                    const Tensor& t = nodes_[p].value;
                    Tensor d(t.rows(), t.cols());
                    for (int r = 0; r < t.rows(); ++r)
                        for (int c = 0; c < t.cols(); ++c) d(r, c) = g(r, off + c);
                    accumulate(p, d);
                    off += t.cols();
                }
                break;
            }
            case Op::SliceCols: {
                const Tensor& A = nodes_[n.a].value;
                Tensor d(A.rows(), A.cols());
                int c0 = static_cast<int>(n.s0);
                for (int r = 0; r < g.rows(); ++r)
                    for (int c = 0; c < g.cols(); ++c) d(r, c0 + c) = g(r, c);
                accumulate(n.a, d);
                break;
            }
            case Op::Tanh: {
                Tensor d = g;
                for (int64_t i = 0; i < d.size(); ++i) d[i] *= 1.0 - n.value[i] * n.value[i];
                accumulate(n.a, d);
                break;
            }
            case Op::Sigmoid: {
                Tensor d = g;
                for (int64_t i = 0; i < d.size(); ++i) d[i] *= n.value[i] * (1.0 - n.value[i]);
                accumulate(n.a, d);
                break;
            }
            case Op::Relu: {
                const Tensor& A = nodes_[n.a].value;
                Tensor d = g;
                for (int64_t i = 0; i < d.size(); ++i)
                    if (A[i] <= 0.0) d[i] = 0.0;
                accumulate(n.a, d);
                break;
            }
            case Op::Hadamard: {
                const Tensor& A = nodes_[n.a].value;
                const Tensor& B = nodes_[n.b].value;
                Tensor dA = g;
                for (int r = 0; r < dA.rows(); ++r)
                    for (int c = 0; c < dA.cols(); ++c) dA(r, c) *= B(B.rows() == 1 ? 0 : r, c);
                accumulate(n.a, dA);
                Tensor dBfull = g;
                for (int r = 0; r < dBfull.rows(); ++r)
                    for (int c = 0; c < dBfull.cols(); ++c) dBfull(r, c) *= A(r, c);
                if (B.rows() == 1 && g.rows() > 1)
                    accumulate(n.b, reduce_rows(dBfull));
                else
                    accumulate(n.b, dBfull);
                break;
            }
            case Op::Square: {
                const Tensor& A = nodes_[n.a].value;
                Tensor d = g;
                for (int64_t i = 0; i < d.size(); ++i) d[i] *= 2.0 * A[i];
                accumulate(n.a, d);
                break;
            }
            case Op::Sum: {
                const Tensor& A = nodes_[n.a].value;
                Tensor d(A.rows(), A.cols());
                for (double& v : d.data()) v = g[0];
                accumulate(n.a, d);
                break;
            }
            case Op::Mean: {
                const Tensor& A = nodes_[n.a].value;
                Tensor d(A.rows(), A.cols());
                double v0 = g[0] / A.size();
                for (double& v : d.data()) v = v0;
                accumulate(n.a, d);
                break;
            }
            case Op::Mse: {
                const Tensor& P = nodes_[n.a].value;
                const Tensor& T = nodes_[n.b].value;
                Tensor dP(P.rows(), P.cols());
                double scale = 2.0 * g[0] / P.size();
                for (int64_t i = 0; i < P.size(); ++i) dP[i] = scale * (P[i] - T[i]);
                accumulate(n.a, dP);
                Tensor dT = dP;
                for (double& v : dT.data()) v = -v;
                accumulate(n.b, dT);
                break;
            }
            case Op::Clamp: {
                const Tensor& A = nodes_[n.a].value;
                Tensor d = g;
                for (int64_t i = 0; i < d.size(); ++i)
                    if (A[i] <= n.s0 || A[i] >= n.s1) d[i] = 0.0;
                accumulate(n.a, d);
                break;
            }
        }
    }
}

double grad_check(const std::function<VarId(Tape&, VarId)>& f, const Tensor& point, double epsilon) {
    Tape tape;
    VarId x = tape.leaf(point);
    VarId root = f(tape, x);
    tape.backward(root);
    Tensor g_ad = tape.grad(x);

    auto eval = [&](const Tensor& p) {
        Tape t;
        VarId xv = t.leaf(p);
        return t.value(f(t, xv)).item();
    };

    double worst = 0.0;
    for (int64_t i = 0; i < point.size(); ++i) {
        Tensor plus = point, minus = point;
        plus[i] += epsilon;
        minus[i] -= epsilon;
        double g_fd = (eval(plus) - eval(minus)) / (2.0 * epsilon);
        double err = std::abs(g_ad[i] - g_fd) / std::max(1.0, std::abs(g_ad[i]));
        worst = std::max(worst, err);
    }
    return worst;
}

}  // namespace hvacmpc
