#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace hvacmpc {

class ShapeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Dense row-major matrix of doubles. Everything in the autodiff layer is
/// two-dimensional: scalars are 1x1 and vectors are 1xN rows.
class Tensor {
public:
    Tensor() = default;
    Tensor(int rows, int cols) : rows_(rows), cols_(cols), data_(static_cast<size_t>(rows) * cols, 0.0) {
        if (rows < 0 || cols < 0) throw ShapeError("Tensor: negative dimension");
    }
    Tensor(int rows, int cols, std::vector<double> data) : rows_(rows), cols_(cols), data_(std::move(data)) {
        if (data_.size() != static_cast<size_t>(rows) * cols)
            throw ShapeError("Tensor: data length " + std::to_string(data_.size()) + " does not match " +
                             std::to_string(rows) + "x" + std::to_string(cols));
    }

    static Tensor scalar(double v) { return Tensor(1, 1, {v}); }
    static Tensor row(std::vector<double> v) {
        int n = static_cast<int>(v.size());
        return Tensor(1, n, std::move(v));
    }
    static Tensor zeros(int rows, int cols) { return Tensor(rows, cols); }
    static Tensor identity(int n) {
        Tensor t(n, n);
        for (int i = 0; i < n; ++i) t(i, i) = 1.0;
        return t;
    }

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    int64_t size() const { return static_cast<int64_t>(rows_) * cols_; }

    double& operator()(int r, int c) { return data_[static_cast<size_t>(r) * cols_ + c]; }
    double operator()(int r, int c) const { return data_[static_cast<size_t>(r) * cols_ + c]; }
    double& operator[](int64_t i) { return data_[static_cast<size_t>(i)]; }
    double operator[](int64_t i) const { return data_[static_cast<size_t>(i)]; }

    /// Value of a 1x1 tensor.
    double item() const {
        if (rows_ != 1 || cols_ != 1) throw ShapeError("item() on non-scalar tensor " + shape_str());
        return data_[0];
    }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    bool same_shape(const Tensor& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

    std::string shape_str() const { return "(" + std::to_string(rows_) + "x" + std::to_string(cols_) + ")"; }

private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<double> data_;
};

}  // namespace hvacmpc
