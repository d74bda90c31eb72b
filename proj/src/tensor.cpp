#include "mamba/tensor.hpp"

#include <cmath>
#include <sstream>

namespace mamba {

std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << "[";
    for (size_t i = 0; i < s.size(); ++i) {
        if (i) os << ", ";
        os << s[i];
    }
    os << "]";
    return os.str();
}

static size_t checked_count(const Shape& shape) {
    size_t n = 1;
    for (int d : shape) {
        if (d <= 0) throw DimensionError("non-positive tensor dimension in " + shape_str(shape));
        n *= static_cast<size_t>(d);
    }
    return n;
}

Tensor::Tensor(Shape shape) : shape_(std::move(shape)) {
    data_.assign(checked_count(shape_), 0.0);
}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    if (checked_count(shape_) != data_.size()) {
        throw DimensionError("tensor shape " + shape_str(shape_) + " does not match data length " +
                             std::to_string(data_.size()));
    }
    if (!all_finite()) throw ContractError("tensor constructed with non-finite values");
}

Tensor Tensor::scalar(double v) {
    return Tensor({1}, {v});
}

bool Tensor::all_finite() const {
    for (double v : data_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

} // namespace mamba
