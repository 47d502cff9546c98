#include "styletuner/sampler.hpp"

#include <algorithm>
#include <cmath>

#include "styletuner/rng.hpp"

namespace styletuner {

Tensor sample_latent(Backbone& backbone, const Conditioning& conditioning,
                     const NoiseSchedule& schedule, std::uint64_t seed) {
    schedule.validate();
    RandomSource rng(seed, "sampler");
    Tensor x(backbone.latent_shape());
    rng.fill_normal(x.data);

    for (int t = schedule.num_steps - 1; t >= 1; --t) {
        LatentSample current{x, t};
        Tensor x0_hat = backbone.denoise(current, conditioning);
        for (double& v : x0_hat.data) v = std::clamp(v, -1.0, 1.0);

        const double a_t = schedule.alpha(t);
        const double s_t = schedule.sigma(t);
        const double a_prev = schedule.alpha(t - 1);
        const double s_prev = schedule.sigma(t - 1);
        // Ancestral step: posterior noise scale for eta = 1.
        const double ratio = a_prev > 0.0 ? a_t / a_prev : 0.0;
        const double s_up = s_t > 0.0 ? (s_prev / s_t) * std::sqrt(std::max(0.0, 1.0 - ratio * ratio))
                                      : 0.0;
        const double s_dir = std::sqrt(std::max(0.0, s_prev * s_prev - s_up * s_up));

        for (std::size_t i = 0; i < x.data.size(); ++i) {
            const double eps_pred = (x.data[i] - a_t * x0_hat.data[i]) / s_t;
            x.data[i] = a_prev * x0_hat.data[i] + s_dir * eps_pred +
                        (s_up > 0.0 ? s_up * rng.normal() : 0.0);
        }
    }
    return x;
}

ImageU8 sample(Backbone& backbone, const Conditioning& conditioning,
               const NoiseSchedule& schedule, std::uint64_t seed, int image_size) {
    return latent_to_image(sample_latent(backbone, conditioning, schedule, seed), image_size);
}

}  // namespace styletuner
