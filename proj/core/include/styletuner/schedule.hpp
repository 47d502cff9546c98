#pragma once

#include <string>
#include <vector>

#include "styletuner/tensor.hpp"

namespace styletuner {

enum class ScheduleProfile { Linear, Cosine };

const char* to_string(ScheduleProfile profile);
ScheduleProfile schedule_profile_from_string(const std::string& name);

// Per-timestep diffusion coefficients under the variance-preserving
// convention alpha_t^2 + sigma_t^2 = 1. Index 0 is the clean sample
// (alpha_0 = 1, sigma_0 = 0); alpha is non-increasing, sigma non-decreasing.
struct NoiseSchedule {
    int num_steps = 0;
    std::vector<double> alphas;
    std::vector<double> sigmas;
    std::vector<double> weights;  // loss weights w_t, all > 0

    double alpha(int t) const { return alphas[static_cast<std::size_t>(t)]; }
    double sigma(int t) const { return sigmas[static_cast<std::size_t>(t)]; }
    double weight(int t) const { return weights[static_cast<std::size_t>(t)]; }

    void validate() const;  // throws std::invalid_argument on any broken invariant
};

// Deterministic for fixed inputs. `linear` interpolates alpha^2 linearly in t;
// `cosine` sets alpha = cos(u * pi/2) with u = t / (num_steps - 1).
NoiseSchedule build_schedule(int num_steps, ScheduleProfile profile);

// A latent tensor tagged with its position on the schedule.
struct LatentSample {
    Tensor data;  // (channels, height, width)
    int timestep = 0;
};

// alpha_t * x0 + sigma_t * epsilon, elementwise. x0 must sit at timestep 0.
LatentSample add_noise(const LatentSample& x0, const Tensor& epsilon, int t,
                       const NoiseSchedule& schedule);

}  // namespace styletuner
