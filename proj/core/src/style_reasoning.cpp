#include "styletuner/style_reasoning.hpp"

#include <cstdlib>
#include <ctime>
#include <fstream>

#include <httplib.h>
#include <json.hpp>

#include "styletuner/errors.hpp"
#include "styletuner/rng.hpp"

namespace styletuner {

namespace {

using nlohmann::json;

constexpr const char* kStylePromptTemplate =
    "Analyze the provided images, depicting visual style keywords. Extract and describe the "
    "stylistic attributes related to geometric patterns, material aesthetics, or artistic "
    "techniques, and summary all the feature in 1–3 concise descriptive keywords for each "
    "stylistic category. Avoid references to specific objects, colors, or contextual elements. "
    "Return the results in a dictionary format with a single key of 'style keywords' and one "
    "single result.\n"
    "For examples, the answer might be:\n"
    "    {\n"
    "      \"style keywords\": \"geometric reliefs\"\n"
    "    }";

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t");
    return s.substr(begin, end - begin + 1);
}

std::string iso_timestamp() {
    char buf[32];
    const std::time_t now = std::time(nullptr);
    std::tm tm_utc{};
    gmtime_r(&now, &tm_utc);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    return buf;
}

}  // namespace

void VlmRequest::validate() const {
    if (prompt_text.empty()) throw std::invalid_argument("vlm request: empty prompt");
    if (images.empty() || images.size() > 16)
        throw std::invalid_argument("vlm request: image count must be in [1,16]");
}

std::string build_style_prompt() {
    return kStylePromptTemplate;
}

std::uint64_t style_prompt_hash() {
    return fnv1a64(std::string_view(kStylePromptTemplate));
}

StyleKeywords parse_keywords(const std::string& response) {
    // Scan for the first balanced object; string literals may contain braces.
    for (std::size_t start = 0; start < response.size(); ++start) {
        if (response[start] != '{') continue;
        int depth = 0;
        bool in_string = false, escaped = false;
        for (std::size_t i = start; i < response.size(); ++i) {
            const char c = response[i];
            if (in_string) {
                if (escaped)
                    escaped = false;
                else if (c == '\\')
                    escaped = true;
                else if (c == '"')
                    in_string = false;
                continue;
            }
            if (c == '"') {
                in_string = true;
            } else if (c == '{') {
                ++depth;
            } else if (c == '}') {
                if (--depth == 0) {
                    const json parsed =
                        json::parse(response.substr(start, i - start + 1), nullptr, false);
                    if (parsed.is_discarded() || !parsed.is_object()) break;
                    if (parsed.size() != 1)
                        throw SchemaError("keyword response must contain exactly one key");
                    const auto it = parsed.begin();
                    if (it.key() != "style keywords")
                        throw SchemaError("keyword response key must be 'style keywords', got '" +
                                          it.key() + "'");
                    if (!it.value().is_string())
                        throw SchemaError("keyword response value must be a string");
                    const std::string value = trim(it.value().get<std::string>());
                    if (value.empty()) throw SchemaError("keyword response value is empty");
                    if (value.find('\n') != std::string::npos ||
                        value.find('\r') != std::string::npos)
                        throw SchemaError("keyword response value contains newlines");
                    return StyleKeywords{value, response};
                }
            }
        }
    }
    throw ParseError("no JSON object found in response");
}

namespace {

// One attempt cycle over a fixed image set; nullopt when retries run out.
std::optional<StyleKeywords> try_extract(const std::vector<ImagePayload>& images,
                                         VlmClient& client, std::string& last_response) {
    const int attempts = client.max_retries + 1;
    for (int attempt = 0; attempt < attempts; ++attempt) {
        VlmRequest request;
        request.prompt_text = build_style_prompt();
        request.images = images;
        request.validate();
        last_response = client.send(request);
        try {
            return parse_keywords(last_response);
        } catch (const ParseError&) {
        } catch (const SchemaError&) {
        }
    }
    return std::nullopt;
}

}  // namespace

StyleKeywords extract_style_keywords(const std::vector<ImagePayload>& images, VlmClient& client,
                                     bool per_image) {
    if (images.empty()) throw std::invalid_argument("extract_style_keywords: no images");
    std::string last_response;
    if (per_image) {
        // One request per image; the first image that yields a valid response wins.
        for (const ImagePayload& img : images) {
            if (auto kw = try_extract({img}, client, last_response)) return *kw;
        }
    } else {
        if (auto kw = try_extract(images, client, last_response)) return *kw;
    }
    throw ExtractionError("keyword extraction exhausted its retries", last_response);
}

const std::vector<std::string>& MockVlmClient::keyword_table() {
    static const std::vector<std::string> table = {
        "geometric reliefs", "ink wash",      "woven texture",      "stained glass",
        "pastel gradients",  "mosaic tiles",  "crosshatch shading", "marble veining",
        "halftone dots",     "origami folds", "brushed metal",      "rustic grain",
    };
    return table;
}

std::string MockVlmClient::send(const VlmRequest& request) {
    request.validate();
    std::uint64_t h = fnv1a64(std::string_view(request.prompt_text));
    for (const ImagePayload& img : request.images) {
        h = fnv1a64(img.bytes.data(), img.bytes.size(), h);
        h = fnv1a64(img.media_type.data(), img.media_type.size(), h);
    }
    const auto& table = keyword_table();
    const std::string& kw = table[h % table.size()];
    return json{{"style keywords", kw}}.dump();
}

HttpVlmClient::HttpVlmClient(std::string endpoint, std::string api_key, std::string model)
    : endpoint_(std::move(endpoint)), api_key_(std::move(api_key)), model_(std::move(model)) {}

HttpVlmClient HttpVlmClient::from_environment() {
    const char* endpoint = std::getenv("STYLETUNER_VLM_ENDPOINT");
    const char* key = std::getenv("STYLETUNER_VLM_API_KEY");
    const char* model = std::getenv("STYLETUNER_VLM_MODEL");
    if (endpoint == nullptr)
        throw ValidationError("STYLETUNER_VLM_ENDPOINT is not set; pass --mock-vlm for offline runs");
    return HttpVlmClient(endpoint, key ? key : "", model ? model : "gpt-4o");
}

std::string HttpVlmClient::send(const VlmRequest& request) {
    request.validate();

    json content = json::array();
    content.push_back({{"type", "text"}, {"text", request.prompt_text}});
    for (const ImagePayload& img : request.images) {
        const std::string data_uri = "data:" + img.media_type + ";base64," +
                                     base64_encode(img.bytes.data(), img.bytes.size());
        content.push_back({{"type", "image_url"}, {"image_url", {{"url", data_uri}}}});
    }
    const json body = {{"model", model_},
                       {"messages", json::array({{{"role", "user"}, {"content", content}}})}};

    // endpoint = scheme://host[:port]; the chat path is fixed.
    httplib::Client http(endpoint_);
    http.set_connection_timeout(std::chrono::duration_cast<std::chrono::seconds>(timeout));
    http.set_read_timeout(std::chrono::duration_cast<std::chrono::seconds>(timeout));
    httplib::Headers headers;
    if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
    const auto res = http.Post("/v1/chat/completions", headers, body.dump(), "application/json");
    if (!res) throw IoError("vlm endpoint unreachable: " + endpoint_);
    if (res->status != 200)
        throw IoError("vlm endpoint returned status " + std::to_string(res->status));
    const json reply = json::parse(res->body, nullptr, false);
    if (reply.is_discarded()) throw ParseError("vlm endpoint returned malformed JSON");
    try {
        return reply.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception&) {
        throw SchemaError("vlm endpoint reply missing choices[0].message.content");
    }
}

void save_keyword_cache(const KeywordCacheEntry& entry, const std::filesystem::path& path) {
    json j = {{"category_id", entry.category_id},
              {"keywords", entry.keywords},
              {"raw_response", entry.raw_response},
              {"timestamp", entry.timestamp.empty() ? iso_timestamp() : entry.timestamp},
              {"template_hash", entry.template_hash}};
    std::filesystem::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw IoError("cannot write keyword cache: " + path.string());
    f << j.dump(2) << "\n";
}

std::optional<KeywordCacheEntry> load_keyword_cache(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) return std::nullopt;
    const json j = json::parse(f, nullptr, false);
    if (j.is_discarded()) return std::nullopt;
    KeywordCacheEntry entry;
    entry.category_id = j.value("category_id", "");
    entry.keywords = j.value("keywords", "");
    entry.raw_response = j.value("raw_response", "");
    entry.timestamp = j.value("timestamp", "");
    entry.template_hash = j.value("template_hash", std::uint64_t{0});
    if (entry.keywords.empty()) return std::nullopt;
    return entry;
}

std::string base64_encode(const std::uint8_t* data, std::size_t size) {
    static const char alphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
    std::string out;
    out.reserve((size + 2) / 3 * 4);
    for (std::size_t i = 0; i < size; i += 3) {
        const std::uint32_t b0 = data[i];
        const std::uint32_t b1 = i + 1 < size ? data[i + 1] : 0;
        const std::uint32_t b2 = i + 2 < size ? data[i + 2] : 0;
        const std::uint32_t triple = (b0 << 16) | (b1 << 8) | b2;
        out.push_back(alphabet[(triple >> 18) & 0x3f]);
        out.push_back(alphabet[(triple >> 12) & 0x3f]);
        out.push_back(i + 1 < size ? alphabet[(triple >> 6) & 0x3f] : '=');
        out.push_back(i + 2 < size ? alphabet[triple & 0x3f] : '=');
    }
    return out;
}

}  // namespace styletuner
