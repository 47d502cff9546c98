#include "styletuner/embedding_manager.hpp"

#include <cstdio>
#include <ctime>

#include "styletuner/errors.hpp"
#include "styletuner/rng.hpp"

namespace styletuner {

namespace {

std::string iso_now() {
    char buf[32];
    const std::time_t now = std::time(nullptr);
    std::tm tm_utc{};
    gmtime_r(&now, &tm_utc);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    return buf;
}

}  // namespace

std::string matrix_hash(const Tensor& matrix) {
    std::uint64_t h = fnv1a64(matrix.shape.data(), matrix.shape.size() * sizeof(int));
    h = fnv1a64(matrix.data.data(), matrix.data.size() * sizeof(double), h);
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

EmbeddingInitRecord compute_keyword_embeddings(const Backbone& backbone,
                                               const StyleKeywords& keywords) {
    std::vector<int> ids = backbone.tokenizer().tokenize(keywords.keywords);
    if (ids.empty())
        throw std::invalid_argument("compute_keyword_embeddings: keywords tokenize to no tokens");
    if (ids.size() > static_cast<std::size_t>(kMaxIdentifierTokens)) {
        std::fprintf(stderr,
                     "warning: keywords '%s' tokenize to %zu pieces, truncating to %d\n",
                     keywords.keywords.c_str(), ids.size(), kMaxIdentifierTokens);
        ids.resize(static_cast<std::size_t>(kMaxIdentifierTokens));
    }
    EmbeddingInitRecord record;
    record.keyword_embeddings = backbone.token_embedding_rows(ids);
    record.source_keywords = keywords.keywords;
    record.initialized_at = iso_now();
    return record;
}

StyleIdentifierSpan make_identifier_span(const Backbone& backbone, const std::string& placeholder,
                                         int n) {
    if (n < 1) throw std::invalid_argument("make_identifier_span: n must be >= 1");
    if (placeholder.empty()) throw std::invalid_argument("make_identifier_span: empty placeholder");
    StyleIdentifierSpan span;
    span.placeholder = placeholder;
    span.n = n;
    const int base = backbone.vocab_size();
    for (int i = 0; i < n; ++i) {
        span.token_names.push_back("V" + std::to_string(i + 1) + "*");
        span.token_ids.push_back(base + i);
    }
    return span;
}

std::vector<int> expand_identifier(const FixtureTokenizer& tokenizer, const std::string& prompt,
                                   const StyleIdentifierSpan& span) {
    if (!span.valid()) throw std::invalid_argument("expand_identifier: malformed span");
    const std::string& ph = span.placeholder;
    const std::size_t first = prompt.find(ph);
    if (first == std::string::npos)
        throw ValidationError("prompt does not contain the placeholder " + ph);
    if (prompt.find(ph, first + ph.size()) != std::string::npos)
        throw ValidationError("placeholder " + ph + " appears more than once in the prompt");

    std::vector<int> ids = tokenizer.tokenize(prompt.substr(0, first));
    ids.insert(ids.end(), span.token_ids.begin(), span.token_ids.end());
    const std::vector<int> tail = tokenizer.tokenize(prompt.substr(first + ph.size()));
    ids.insert(ids.end(), tail.begin(), tail.end());
    return ids;
}

void register_and_initialize(Backbone& backbone, const StyleIdentifierSpan& span,
                             const EmbeddingInitRecord& record) {
    if (!span.valid()) throw std::invalid_argument("register_and_initialize: malformed span");
    if (record.keyword_embeddings.rank() != 2 ||
        record.keyword_embeddings.dim(0) != span.n ||
        record.keyword_embeddings.dim(1) != backbone.embed_dim())
        throw std::invalid_argument("register_and_initialize: init matrix row count != span width");
    if (backbone.find_span(span.placeholder) != nullptr)
        throw ConflictError("span already registered for placeholder " + span.placeholder);
    const int base = backbone.vocab_size();
    for (int i = 0; i < span.n; ++i) {
        if (span.token_ids[static_cast<std::size_t>(i)] != base + i)
            throw ConflictError("span ids must be fresh contiguous ids past the vocabulary");
    }
    backbone.append_embedding_rows(record.keyword_embeddings);
    backbone.record_span(span, record.source_keywords, matrix_hash(record.keyword_embeddings));
}

FreezeMask stage1_freeze_mask(const Backbone& backbone, const StyleIdentifierSpan& span) {
    if (span.n < 1 || span.token_ids.empty())
        throw std::invalid_argument("stage1_freeze_mask: empty span");
    const StyleIdentifierSpan* registered = backbone.find_span(span.placeholder);
    if (registered == nullptr || registered->token_ids != span.token_ids)
        throw NotFoundError("stage1_freeze_mask: span is not registered on this backbone");
    FreezeMask mask;
    mask.trainable_rows = span.token_ids;
    mask.everything_else_frozen = true;
    return mask;
}

}  // namespace styletuner
