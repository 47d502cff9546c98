#include "styletuner/params.hpp"

#include <cstdio>
#include <stdexcept>

#include "styletuner/errors.hpp"
#include "styletuner/rng.hpp"

namespace styletuner {

const char* to_string(ParamGroup group) {
    switch (group) {
        case ParamGroup::TokenEmbedding: return "token_embedding";
        case ParamGroup::TextAttention: return "text_attention";
        case ParamGroup::TextOther: return "text_other";
        case ParamGroup::DenoiserAttention: return "denoiser_attention";
        case ParamGroup::DenoiserOther: return "denoiser_other";
    }
    return "unknown";
}

ParamGroup param_group_from_string(const std::string& name) {
    if (name == "token_embedding") return ParamGroup::TokenEmbedding;
    if (name == "text_attention") return ParamGroup::TextAttention;
    if (name == "text_other") return ParamGroup::TextOther;
    if (name == "denoiser_attention") return ParamGroup::DenoiserAttention;
    if (name == "denoiser_other") return ParamGroup::DenoiserOther;
    throw ValidationError("unknown parameter group: " + name);
}

Parameter& ParameterRegistry::add(std::string name, ParamGroup group, Tensor value) {
    if (contains(name)) throw ConflictError("parameter already registered: " + name);
    params_.push_back(std::make_unique<Parameter>(std::move(name), group, std::move(value)));
    return *params_.back();
}

Parameter& ParameterRegistry::find(const std::string& name) {
    for (auto& p : params_) {
        if (p->name == name) return *p;
    }
    throw NotFoundError("parameter not found: " + name);
}

const Parameter& ParameterRegistry::find(const std::string& name) const {
    for (const auto& p : params_) {
        if (p->name == name) return *p;
    }
    throw NotFoundError("parameter not found: " + name);
}

bool ParameterRegistry::contains(const std::string& name) const {
    for (const auto& p : params_) {
        if (p->name == name) return true;
    }
    return false;
}

std::vector<Parameter*> ParameterRegistry::all() {
    std::vector<Parameter*> out;
    out.reserve(params_.size());
    for (auto& p : params_) out.push_back(p.get());
    return out;
}

std::vector<const Parameter*> ParameterRegistry::all() const {
    std::vector<const Parameter*> out;
    out.reserve(params_.size());
    for (const auto& p : params_) out.push_back(p.get());
    return out;
}

std::vector<Parameter*> ParameterRegistry::by_group(ParamGroup group) {
    std::vector<Parameter*> out;
    for (auto& p : params_) {
        if (p->group == group) out.push_back(p.get());
    }
    return out;
}

std::vector<const Parameter*> ParameterRegistry::by_group(ParamGroup group) const {
    std::vector<const Parameter*> out;
    for (const auto& p : params_) {
        if (p->group == group) out.push_back(p.get());
    }
    return out;
}

std::size_t ParameterRegistry::total_scalars() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p->value.numel();
    return n;
}

void ParameterRegistry::zero_grads() {
    for (auto& p : params_) p->zero_grad();
}

std::string ParameterRegistry::fingerprint() const {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (const auto& p : params_) {
        h = fnv1a64(p->name.data(), p->name.size(), h);
        const char* g = to_string(p->group);
        h = fnv1a64(g, std::string_view(g).size(), h);
        h = fnv1a64(p->value.shape.data(), p->value.shape.size() * sizeof(int), h);
        h = fnv1a64(p->value.data.data(), p->value.data.size() * sizeof(double), h);
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

}  // namespace styletuner
