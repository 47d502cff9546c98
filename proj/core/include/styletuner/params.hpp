#pragma once

#include <memory>
#include <string>
#include <vector>

#include "styletuner/tensor.hpp"

namespace styletuner {

// Every trainable array belongs to exactly one group. Stage selection and the
// freeze contracts are expressed in terms of these labels.
enum class ParamGroup {
    TokenEmbedding,
    TextAttention,
    TextOther,
    DenoiserAttention,
    DenoiserOther,
};

const char* to_string(ParamGroup group);
ParamGroup param_group_from_string(const std::string& name);

struct Parameter {
    std::string name;
    ParamGroup group;
    Tensor value;
    Tensor grad;  // same shape as value, accumulated by Graph::backward

    Parameter(std::string name_in, ParamGroup group_in, Tensor value_in)
        : name(std::move(name_in)), group(group_in), value(std::move(value_in)) {
        grad = Tensor::zeros(value.shape);
    }

    void zero_grad() { grad.fill(0.0); }
};

class ParameterRegistry {
public:
    Parameter& add(std::string name, ParamGroup group, Tensor value);
    Parameter& find(const std::string& name);
    const Parameter& find(const std::string& name) const;
    bool contains(const std::string& name) const;

    std::vector<Parameter*> all();
    std::vector<const Parameter*> all() const;
    std::vector<Parameter*> by_group(ParamGroup group);
    std::vector<const Parameter*> by_group(ParamGroup group) const;

    std::size_t size() const { return params_.size(); }
    std::size_t total_scalars() const;
    void zero_grads();

    // FNV-1a over the manifest (name, group, shape) and raw value bytes, in
    // registration order. Identifies a frozen parameter state.
    std::string fingerprint() const;

private:
    std::vector<std::unique_ptr<Parameter>> params_;
};

}  // namespace styletuner
