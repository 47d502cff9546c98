#pragma once

#include <cstddef>
#include <vector>

#include "styletuner/rng.hpp"

namespace styletuner {

// Dense row-major tensor of doubles, rank 0..4. Small enough that all math in
// this project runs as plain loops over `data`.
struct Tensor {
    std::vector<int> shape;
    std::vector<double> data;

    Tensor() = default;
    explicit Tensor(std::vector<int> shape_in);

    static Tensor zeros(std::vector<int> shape_in);
    static Tensor full(std::vector<int> shape_in, double value);
    static Tensor scalar(double value);
    static Tensor randn(std::vector<int> shape_in, RandomSource& rng, double stddev = 1.0);

    std::size_t numel() const { return data.size(); }
    int rank() const { return static_cast<int>(shape.size()); }
    int dim(int i) const { return shape[static_cast<std::size_t>(i)]; }

    double& operator()(int i) { return data[static_cast<std::size_t>(i)]; }
    double operator()(int i) const { return data[static_cast<std::size_t>(i)]; }
    double& operator()(int i, int j) { return data[static_cast<std::size_t>(i) * shape[1] + j]; }
    double operator()(int i, int j) const {
        return data[static_cast<std::size_t>(i) * shape[1] + j];
    }
    double& operator()(int i, int j, int k) {
        return data[(static_cast<std::size_t>(i) * shape[1] + j) * shape[2] + k];
    }
    double operator()(int i, int j, int k) const {
        return data[(static_cast<std::size_t>(i) * shape[1] + j) * shape[2] + k];
    }
    double& operator()(int i, int j, int k, int l) {
        return data[((static_cast<std::size_t>(i) * shape[1] + j) * shape[2] + k) * shape[3] + l];
    }
    double operator()(int i, int j, int k, int l) const {
        return data[((static_cast<std::size_t>(i) * shape[1] + j) * shape[2] + k) * shape[3] + l];
    }

    bool same_shape(const Tensor& other) const { return shape == other.shape; }
    bool all_finite() const;
    double max_abs_diff(const Tensor& other) const;

    void fill(double value);
};

std::size_t shape_numel(const std::vector<int>& shape);

}  // namespace styletuner
