#pragma once

#include <string>
#include <vector>

#include "styletuner/backbone.hpp"
#include "styletuner/identifier_span.hpp"
#include "styletuner/style_reasoning.hpp"
#include "styletuner/tokenizer.hpp"

namespace styletuner {

// Keyword embeddings gathered from the lookup table (pre-attention rows, one
// per sub-word token); the row count defines the identifier span width.
struct EmbeddingInitRecord {
    Tensor keyword_embeddings;  // (n, embed_dim)
    std::string source_keywords;
    std::string initialized_at;  // wall-clock provenance; never serialized into checkpoints
};

// Which embedding rows an optimization stage may touch. Everything outside
// the listed rows (and every non-embedding parameter) stays bit-exact.
struct FreezeMask {
    std::vector<int> trainable_rows;
    bool everything_else_frozen = true;
};

// Keywords producing more sub-word tokens than this are truncated (with a
// warning); bounds the prompt-length drift of expanded identifiers.
inline constexpr int kMaxIdentifierTokens = 8;

EmbeddingInitRecord compute_keyword_embeddings(const Backbone& backbone,
                                               const StyleKeywords& keywords);

// Allocates n contiguous ids past the current vocabulary and names them
// "V1*".."Vn*". The span is not registered until register_and_initialize.
StyleIdentifierSpan make_identifier_span(const Backbone& backbone, const std::string& placeholder,
                                         int n);

// Tokenizes the prompt with the single placeholder occurrence replaced by the
// span ids, in order. Text around the placeholder tokenizes normally.
std::vector<int> expand_identifier(const FixtureTokenizer& tokenizer, const std::string& prompt,
                                   const StyleIdentifierSpan& span);

// Appends the keyword rows to the embedding table as the span's initial
// values and records the span on the backbone. Pre-existing rows are left
// bitwise untouched.
void register_and_initialize(Backbone& backbone, const StyleIdentifierSpan& span,
                             const EmbeddingInitRecord& record);

// Stage-1 mask: exactly the span rows are trainable.
FreezeMask stage1_freeze_mask(const Backbone& backbone, const StyleIdentifierSpan& span);

std::string matrix_hash(const Tensor& matrix);

}  // namespace styletuner
