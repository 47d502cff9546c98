#include "styletuner/schedule.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "styletuner/errors.hpp"

namespace styletuner {

const char* to_string(ScheduleProfile profile) {
    return profile == ScheduleProfile::Linear ? "linear" : "cosine";
}

ScheduleProfile schedule_profile_from_string(const std::string& name) {
    if (name == "linear") return ScheduleProfile::Linear;
    if (name == "cosine") return ScheduleProfile::Cosine;
    throw ValidationError("unknown schedule profile: " + name);
}

void NoiseSchedule::validate() const {
    if (num_steps < 2) throw std::invalid_argument("schedule: num_steps must be >= 2");
    const auto n = static_cast<std::size_t>(num_steps);
    if (alphas.size() != n || sigmas.size() != n || weights.size() != n)
        throw std::invalid_argument("schedule: coefficient lengths differ from num_steps");
    if (alphas[0] != 1.0 || sigmas[0] != 0.0)
        throw std::invalid_argument("schedule: t=0 must be the identity (alpha=1, sigma=0)");
    for (std::size_t t = 0; t < n; ++t) {
        if (alphas[t] < 0.0 || alphas[t] > 1.0 || sigmas[t] < 0.0 || sigmas[t] > 1.0)
            throw std::invalid_argument("schedule: coefficients must lie in [0,1]");
        if (weights[t] <= 0.0) throw std::invalid_argument("schedule: weights must be > 0");
        const double vp = alphas[t] * alphas[t] + sigmas[t] * sigmas[t];
        if (vp < 1.0 - 1e-6 || vp > 1.0 + 1e-6)
            throw std::invalid_argument("schedule: variance-preserving identity violated");
        if (t > 0 && (alphas[t] > alphas[t - 1] || sigmas[t] < sigmas[t - 1]))
            throw std::invalid_argument("schedule: monotonicity violated");
    }
}

NoiseSchedule build_schedule(int num_steps, ScheduleProfile profile) {
    if (num_steps < 2) throw std::invalid_argument("build_schedule: num_steps must be >= 2");
    NoiseSchedule s;
    s.num_steps = num_steps;
    s.alphas.resize(static_cast<std::size_t>(num_steps));
    s.sigmas.resize(static_cast<std::size_t>(num_steps));
    s.weights.assign(static_cast<std::size_t>(num_steps), 1.0);
    for (int t = 0; t < num_steps; ++t) {
        const double u = static_cast<double>(t) / (num_steps - 1);
        double alpha;
        if (profile == ScheduleProfile::Linear) {
            alpha = std::sqrt(1.0 - u);
        } else {
            alpha = std::cos(u * std::numbers::pi / 2.0);
        }
        const auto i = static_cast<std::size_t>(t);
        s.alphas[i] = alpha;
        s.sigmas[i] = std::sqrt(std::max(0.0, 1.0 - alpha * alpha));
    }
    s.alphas[0] = 1.0;
    s.sigmas[0] = 0.0;
    s.validate();
    return s;
}

LatentSample add_noise(const LatentSample& x0, const Tensor& epsilon, int t,
                       const NoiseSchedule& schedule) {
    if (x0.timestep != 0) throw std::invalid_argument("add_noise: input must sit at timestep 0");
    if (!x0.data.same_shape(epsilon)) throw std::invalid_argument("add_noise: shape mismatch");
    if (t < 0 || t >= schedule.num_steps) throw std::out_of_range("add_noise: timestep out of range");
    const double a = schedule.alpha(t);
    const double s = schedule.sigma(t);
    LatentSample out;
    out.timestep = t;
    out.data = Tensor(x0.data.shape);
    for (std::size_t i = 0; i < out.data.data.size(); ++i)
        out.data.data[i] = a * x0.data.data[i] + s * epsilon.data[i];
    return out;
}

}  // namespace styletuner
