#pragma once

#include "styletuner/tensor.hpp"

namespace styletuner {

// w * sum((prediction - target)^2). Zero iff the tensors are equal.
double weighted_reconstruction_loss(const Tensor& prediction, const Tensor& target, double w);

// Closed-form gradient with respect to `prediction`: 2w * (prediction - target).
Tensor weighted_reconstruction_loss_grad(const Tensor& prediction, const Tensor& target, double w);

// Same quadratic form applied to a content reference; exists so call sites
// name the content-preservation term explicitly.
double content_loss(const Tensor& prediction, const Tensor& content_reference, double w);

// lambda1 * l_ldm + lambda2 * l_content.
double total_loss(double l_ldm, double l_content, double lambda1, double lambda2);

}  // namespace styletuner
