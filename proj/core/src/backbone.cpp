#include "styletuner/backbone.hpp"

#include <stdexcept>

#include "styletuner/errors.hpp"

namespace styletuner {

Conditioning Backbone::encode_text(std::span<const int> token_ids) {
    ad::Graph g;
    ad::Node* out = encode_text_node(g, token_ids);
    Conditioning c;
    c.vectors = out->value;
    c.styled = false;
    for (int id : token_ids) {
        if (id_in_registered_span(id)) {
            c.styled = true;
            break;
        }
    }
    return c;
}

Tensor Backbone::denoise(const LatentSample& noisy, const Conditioning& conditioning) {
    ad::Graph g;
    ad::Node* noisy_node = g.constant(noisy.data);
    ad::Node* cond_node = g.constant(conditioning.vectors);
    ad::Node* out = denoise_node(g, noisy_node, noisy.timestep, cond_node);
    if (!out->value.all_finite()) throw std::runtime_error("denoise: non-finite output");
    return out->value;
}

void Backbone::record_span(const StyleIdentifierSpan& span, const std::string& source_keywords,
                           const std::string& init_matrix_hash) {
    if (!span.valid()) throw std::invalid_argument("record_span: malformed span");
    for (const auto& rec : spans_) {
        if (rec.span.placeholder == span.placeholder)
            throw ConflictError("span already registered for placeholder " + span.placeholder);
        for (int id : rec.span.token_ids)
            for (int other : span.token_ids)
                if (id == other)
                    throw ConflictError("span token id already claimed: " + std::to_string(id));
    }
    spans_.push_back({span, source_keywords, init_matrix_hash});
}

const StyleIdentifierSpan* Backbone::find_span(const std::string& placeholder) const {
    for (const auto& rec : spans_) {
        if (rec.span.placeholder == placeholder) return &rec.span;
    }
    return nullptr;
}

bool Backbone::id_in_registered_span(int token_id) const {
    for (const auto& rec : spans_) {
        for (int id : rec.span.token_ids)
            if (id == token_id) return true;
    }
    return false;
}

}  // namespace styletuner
