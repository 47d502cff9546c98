#pragma once

#include <vector>

#include "styletuner/params.hpp"

namespace styletuner {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Adaptive-moment optimizer with no weight decay. Parameters outside the
// registered slots (and rows outside a row slot) are never read or written,
// so everything frozen stays bit-exact.
class AdamOptimizer {
public:
    explicit AdamOptimizer(AdamConfig config) : config_(config) {}

    void add_full(Parameter* param);
    // Restricts updates of a (rows, width) matrix parameter to the given rows.
    void add_rows(Parameter* param, std::vector<int> rows);

    // Applies one update from the accumulated gradients.
    void step();
    int steps_taken() const { return t_; }

private:
    struct Slot {
        Parameter* param;
        std::vector<int> rows;  // empty = full tensor
        Tensor m;
        Tensor v;
    };

    void update_range(Slot& slot, std::size_t value_offset, std::size_t state_offset,
                      std::size_t count, double bc1, double bc2);

    AdamConfig config_;
    std::vector<Slot> slots_;
    int t_ = 0;
};

}  // namespace styletuner
