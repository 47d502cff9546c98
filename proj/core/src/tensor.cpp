#include "styletuner/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace styletuner {

std::size_t shape_numel(const std::vector<int>& shape) {
    std::size_t n = 1;
    for (int d : shape) {
        if (d < 0) throw std::invalid_argument("tensor shape must be non-negative");
        n *= static_cast<std::size_t>(d);
    }
    return n;
}

Tensor::Tensor(std::vector<int> shape_in) : shape(std::move(shape_in)) {
    data.assign(shape_numel(shape), 0.0);
}

Tensor Tensor::zeros(std::vector<int> shape_in) {
    return Tensor(std::move(shape_in));
}

Tensor Tensor::full(std::vector<int> shape_in, double value) {
    Tensor t(std::move(shape_in));
    t.fill(value);
    return t;
}

Tensor Tensor::scalar(double value) {
    Tensor t({1});
    t.data[0] = value;
    return t;
}

Tensor Tensor::randn(std::vector<int> shape_in, RandomSource& rng, double stddev) {
    Tensor t(std::move(shape_in));
    for (double& v : t.data) v = rng.normal() * stddev;
    return t;
}

bool Tensor::all_finite() const {
    return std::all_of(data.begin(), data.end(), [](double v) { return std::isfinite(v); });
}

double Tensor::max_abs_diff(const Tensor& other) const {
    if (!same_shape(other)) throw std::invalid_argument("max_abs_diff: shape mismatch");
    double m = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        m = std::max(m, std::abs(data[i] - other.data[i]));
    }
    return m;
}

void Tensor::fill(double value) {
    std::fill(data.begin(), data.end(), value);
}

}  // namespace styletuner
