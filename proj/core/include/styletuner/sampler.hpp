#pragma once

#include <cstdint>

#include "styletuner/backbone.hpp"
#include "styletuner/image.hpp"
#include "styletuner/schedule.hpp"

namespace styletuner {

// Ancestral sampling from noise down the full schedule; the backbone predicts
// the clean sample at every step. Deterministic for a fixed seed.
Tensor sample_latent(Backbone& backbone, const Conditioning& conditioning,
                     const NoiseSchedule& schedule, std::uint64_t seed);

// Same walk, mapped to an 8-bit RGB image of the requested pixel size.
ImageU8 sample(Backbone& backbone, const Conditioning& conditioning,
               const NoiseSchedule& schedule, std::uint64_t seed, int image_size);

}  // namespace styletuner
