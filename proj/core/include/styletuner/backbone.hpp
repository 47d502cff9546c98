#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "styletuner/autodiff.hpp"
#include "styletuner/identifier_span.hpp"
#include "styletuner/params.hpp"
#include "styletuner/schedule.hpp"
#include "styletuner/tokenizer.hpp"

namespace styletuner {

// Encoded prompt: one row per token. `styled` records whether the source
// prompt contained a registered style identifier.
struct Conditioning {
    Tensor vectors;  // (sequence_length, embed_dim)
    bool styled = false;
};

// A registered identifier span plus the provenance persisted in checkpoints.
struct SpanRecord {
    StyleIdentifierSpan span;
    std::string source_keywords;
    std::string init_matrix_hash;
};

// Conditional denoiser + text encoder pair. The toy model implements this
// interface; pretrained backbones plug in the same way by exposing their
// trainable arrays through the registry with group tags.
class Backbone {
public:
    virtual ~Backbone() = default;

    virtual std::vector<int> latent_shape() const = 0;
    virtual int embed_dim() const = 0;
    virtual int vocab_size() const = 0;
    virtual const FixtureTokenizer& tokenizer() const = 0;

    virtual ParameterRegistry& params() = 0;
    virtual const ParameterRegistry& params() const = 0;
    std::string fingerprint() const { return params().fingerprint(); }

    // Differentiable forward passes; the graph owns the returned nodes.
    virtual ad::Node* encode_text_node(ad::Graph& g, std::span<const int> token_ids) = 0;
    virtual ad::Node* denoise_node(ad::Graph& g, ad::Node* noisy, int timestep,
                                   ad::Node* conditioning) = 0;

    // Raw embedding-table rows before any attention (the lookup stage).
    virtual Tensor token_embedding_rows(std::span<const int> token_ids) const = 0;

    // Extends the embedding table; token ids for the new rows are
    // [vocab_size, vocab_size + rows). Existing rows are left untouched.
    virtual void append_embedding_rows(const Tensor& rows) = 0;

    virtual std::unique_ptr<Backbone> clone() const = 0;

    // No-grad wrappers over the graph builders.
    Conditioning encode_text(std::span<const int> token_ids);
    Tensor denoise(const LatentSample& noisy, const Conditioning& conditioning);

    // Identifier-span bookkeeping (persisted in checkpoints).
    void record_span(const StyleIdentifierSpan& span, const std::string& source_keywords,
                     const std::string& init_matrix_hash);
    const std::vector<SpanRecord>& span_records() const { return spans_; }
    const StyleIdentifierSpan* find_span(const std::string& placeholder) const;
    bool id_in_registered_span(int token_id) const;

protected:
    std::vector<SpanRecord> spans_;
};

}  // namespace styletuner
