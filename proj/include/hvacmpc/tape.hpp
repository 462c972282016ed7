#pragma once

#include <functional>
#include <vector>

#include "hvacmpc/tensor.hpp"

namespace hvacmpc {

using VarId = int;

/// Reverse-mode autodiff over a per-evaluation tape. Each primitive records
/// its inputs and enough saved state to run its pullback; backward() walks the
/// tape in reverse and accumulates gradients in a fixed order.
class Tape {
public:
    /// Registers an input node. Leaves are what backward() reports gradients for.
    VarId leaf(Tensor value);

    const Tensor& value(VarId id) const { return nodes_[id].value; }
    int node_count() const { return static_cast<int>(nodes_.size()); }

    // Primitives. Shapes are checked on record; a mismatch throws ShapeError
    // naming both shapes.
    VarId matmul(VarId a, VarId b);
    VarId add(VarId a, VarId b);      // same shape, or (MxN) + (1xN) row broadcast
    VarId sub(VarId a, VarId b);      // same shape, or (MxN) - (1xN)
    VarId scalar_mul(VarId a, double s);
    VarId concat_cols(const std::vector<VarId>& parts);
    VarId slice_cols(VarId a, int c0, int c1);  // [c0, c1)
    VarId tanh(VarId a);
    VarId sigmoid(VarId a);
    VarId relu(VarId a);              // relu'(0) = 0
    VarId hadamard(VarId a, VarId b); // same shape, or (MxN) * (1xN) row broadcast
    VarId square(VarId a);
    VarId sum(VarId a);               // -> 1x1
    VarId mean(VarId a);              // -> 1x1
    VarId mse(VarId pred, VarId target);  // mean((pred-target)^2) -> 1x1
    /// Clamp to [lo, hi]; gradient passes where strictly inside, zero outside.
    VarId clamp_stopgrad(VarId a, double lo, double hi);

    /// Gradients of a scalar root w.r.t. every node. Throws on a non-scalar root.
    void backward(VarId root);
    const Tensor& grad(VarId id) const { return grads_[id]; }

private:
    enum class Op {
        Leaf, MatMul, Add, Sub, ScalarMul, ConcatCols, SliceCols,
        Tanh, Sigmoid, Relu, Hadamard, Square, Sum, Mean, Mse, Clamp
    };
    struct Node {
        Op op;
        Tensor value;
        VarId a = -1, b = -1;
        std::vector<VarId> inputs;  // ConcatCols only
        double s0 = 0.0, s1 = 0.0;  // scalar payload (scale / slice range / clamp bounds)
    };

    VarId push(Node n) {
        nodes_.push_back(std::move(n));
        return static_cast<VarId>(nodes_.size() - 1);
    }
    void check_finite(const Tensor& t, const char* op) const;
    void accumulate(VarId id, const Tensor& g);

    std::vector<Node> nodes_;
    std::vector<Tensor> grads_;
};

/// Central finite differences vs AD on a scalar-valued tensor function.
/// Returns max over coordinates of |g_ad - g_fd| / max(1, |g_ad|).
double grad_check(const std::function<VarId(Tape&, VarId)>& f, const Tensor& point, double epsilon);

}  // namespace hvacmpc
