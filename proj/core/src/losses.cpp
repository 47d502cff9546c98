#include "styletuner/losses.hpp"

#include <cmath>
#include <stdexcept>

namespace styletuner {

double weighted_reconstruction_loss(const Tensor& prediction, const Tensor& target, double w) {
    if (!prediction.same_shape(target))
        throw std::invalid_argument("weighted_reconstruction_loss: shape mismatch");
    if (!(w > 0.0)) throw std::invalid_argument("weighted_reconstruction_loss: w must be > 0");
    double s = 0.0;
    for (std::size_t i = 0; i < prediction.data.size(); ++i) {
        const double d = prediction.data[i] - target.data[i];
        s += d * d;
    }
    return w * s;
}

Tensor weighted_reconstruction_loss_grad(const Tensor& prediction, const Tensor& target,
                                         double w) {
    if (!prediction.same_shape(target))
        throw std::invalid_argument("weighted_reconstruction_loss_grad: shape mismatch");
    if (!(w > 0.0)) throw std::invalid_argument("weighted_reconstruction_loss_grad: w must be > 0");
    Tensor g(prediction.shape);
    for (std::size_t i = 0; i < prediction.data.size(); ++i)
        g.data[i] = 2.0 * w * (prediction.data[i] - target.data[i]);
    return g;
}

double content_loss(const Tensor& prediction, const Tensor& content_reference, double w) {
    return weighted_reconstruction_loss(prediction, content_reference, w);
}

double total_loss(double l_ldm, double l_content, double lambda1, double lambda2) {
    if (!std::isfinite(l_ldm) || !std::isfinite(l_content) || !std::isfinite(lambda1) ||
        !std::isfinite(lambda2))
        throw std::invalid_argument("total_loss: inputs must be finite");
    if (l_ldm < 0.0 || l_content < 0.0 || lambda1 < 0.0 || lambda2 < 0.0)
        throw std::invalid_argument("total_loss: inputs must be non-negative");
    return lambda1 * l_ldm + lambda2 * l_content;
}

}  // namespace styletuner
