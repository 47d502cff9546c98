#include "styletuner/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace styletuner {

void AdamOptimizer::add_full(Parameter* param) {
    Slot slot;
    slot.param = param;
    slot.m = Tensor::zeros({static_cast<int>(param->value.numel())});
    slot.v = Tensor::zeros({static_cast<int>(param->value.numel())});
    slots_.push_back(std::move(slot));
}

void AdamOptimizer::add_rows(Parameter* param, std::vector<int> rows) {
    if (param->value.rank() != 2)
        throw std::invalid_argument("add_rows: parameter must be a matrix");
    const int width = param->value.dim(1);
    for (int r : rows) {
        if (r < 0 || r >= param->value.dim(0))
            throw std::out_of_range("add_rows: row out of range");
    }
    Slot slot;
    slot.param = param;
    slot.rows = std::move(rows);
    slot.m = Tensor::zeros({static_cast<int>(slot.rows.size()) * width});
    slot.v = Tensor::zeros({static_cast<int>(slot.rows.size()) * width});
    slots_.push_back(std::move(slot));
}

void AdamOptimizer::update_range(Slot& slot, std::size_t value_offset, std::size_t state_offset,
                                 std::size_t count, double bc1, double bc2) {
    for (std::size_t i = 0; i < count; ++i) {
        const double g = slot.param->grad.data[value_offset + i];
        double& m = slot.m.data[state_offset + i];
        double& v = slot.v.data[state_offset + i];
        m = config_.beta1 * m + (1.0 - config_.beta1) * g;
        v = config_.beta2 * v + (1.0 - config_.beta2) * g * g;
        const double m_hat = m / bc1;
        const double v_hat = v / bc2;
        slot.param->value.data[value_offset + i] -=
            config_.lr * m_hat / (std::sqrt(v_hat) + config_.eps);
    }
}

void AdamOptimizer::step() {
    ++t_;
    const double bc1 = 1.0 - std::pow(config_.beta1, t_);
    const double bc2 = 1.0 - std::pow(config_.beta2, t_);
    for (Slot& slot : slots_) {
        if (slot.rows.empty()) {
            update_range(slot, 0, 0, slot.param->value.numel(), bc1, bc2);
        } else {
            const auto width = static_cast<std::size_t>(slot.param->value.dim(1));
            for (std::size_t i = 0; i < slot.rows.size(); ++i) {
                update_range(slot, static_cast<std::size_t>(slot.rows[i]) * width, i * width,
                             width, bc1, bc2);
            }
        }
    }
}

}  // namespace styletuner
