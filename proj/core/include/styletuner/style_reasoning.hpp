#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace styletuner {

struct ImagePayload {
    std::vector<std::uint8_t> bytes;
    std::string media_type = "image/png";
};

struct VlmRequest {
    std::string prompt_text;
    std::vector<ImagePayload> images;

    void validate() const;  // 1..16 images, non-empty prompt
};

struct StyleKeywords {
    std::string keywords;      // 1-3 concise descriptors, trimmed, no newlines
    std::string raw_response;  // as received from the client
};

class VlmClient {
public:
    virtual ~VlmClient() = default;
    virtual std::string send(const VlmRequest& request) = 0;

    int max_retries = 3;
    std::chrono::milliseconds timeout{30000};
};

// The style-analysis instruction sent with every request. Constant; callers
// may hash it to invalidate caches when the template changes.
std::string build_style_prompt();
std::uint64_t style_prompt_hash();

// Extracts the first balanced JSON object from the response (tolerating
// surrounding prose and markdown fences) and checks it against the expected
// single-key contract. Throws ParseError when no object parses and
// SchemaError when the object has the wrong shape.
StyleKeywords parse_keywords(const std::string& response);

// Prompt + send + parse with up to max_retries + 1 attempts; each attempt
// builds a fresh request. Throws ExtractionError carrying the last raw
// response once retries are exhausted.
StyleKeywords extract_style_keywords(const std::vector<ImagePayload>& images, VlmClient& client,
                                     bool per_image = false);

// Offline client: maps a hash of the image payloads onto a fixed keyword
// table, so results are pure functions of the request.
class MockVlmClient final : public VlmClient {
public:
    std::string send(const VlmRequest& request) override;
    static const std::vector<std::string>& keyword_table();
};

// Chat-completion-style endpoint speaking JSON with one text part and N
// base64 image parts. Configured from explicit values or the environment
// (STYLETUNER_VLM_ENDPOINT / STYLETUNER_VLM_API_KEY / STYLETUNER_VLM_MODEL).
class HttpVlmClient final : public VlmClient {
public:
    HttpVlmClient(std::string endpoint, std::string api_key, std::string model);
    static HttpVlmClient from_environment();

    std::string send(const VlmRequest& request) override;

private:
    std::string endpoint_;
    std::string api_key_;
    std::string model_;
};

struct KeywordCacheEntry {
    std::string category_id;
    std::string keywords;
    std::string raw_response;
    std::string timestamp;
    std::uint64_t template_hash = 0;
};

void save_keyword_cache(const KeywordCacheEntry& entry, const std::filesystem::path& path);
std::optional<KeywordCacheEntry> load_keyword_cache(const std::filesystem::path& path);

std::string base64_encode(const std::uint8_t* data, std::size_t size);

}  // namespace styletuner
