#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "mamba/errors.hpp"

namespace mamba {

using Shape = std::vector<int>;

std::string shape_str(const Shape& s);

// Dense row-major tensor of doubles. The data-taking constructor rejects
// non-finite values and shape/data size mismatches; the shape-only
// constructor zero-fills and is the fast path used by internal ops.
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(Shape shape);
    Tensor(Shape shape, std::vector<double> data);

    static Tensor scalar(double v);
    static Tensor zeros_like(const Tensor& t) { return Tensor(t.shape_); }

    const Shape& shape() const { return shape_; }
    int ndim() const { return static_cast<int>(shape_.size()); }
    int dim(int i) const { return shape_[static_cast<size_t>(i)]; }
    size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::vector<double>& vec() { return data_; }
    const std::vector<double>& vec() const { return data_; }

    double& operator[](size_t i) { return data_[i]; }
    double operator[](size_t i) const { return data_[i]; }

    // 2-D / 3-D accessors (row-major).
    double& at(int r, int c) { return data_[static_cast<size_t>(r) * dim(1) + c]; }
    double at(int r, int c) const { return data_[static_cast<size_t>(r) * dim(1) + c]; }
    double& at(int i, int j, int k) {
        return data_[(static_cast<size_t>(i) * dim(1) + j) * dim(2) + k];
    }
    double at(int i, int j, int k) const {
        return data_[(static_cast<size_t>(i) * dim(1) + j) * dim(2) + k];
    }

    bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }
    bool all_finite() const;
    std::string shape_string() const { return shape_str(shape_); }

private:
    Shape shape_;
    std::vector<double> data_;
};

} // namespace mamba
