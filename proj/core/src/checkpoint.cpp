#include "styletuner/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include <json.hpp>

#include "styletuner/errors.hpp"

namespace styletuner {

namespace {

using nlohmann::json;

constexpr char kMagic[8] = {'S', 'T', 'Y', 'C', 'K', 'P', 'T', '1'};

void write_bytes(std::ofstream& f, const void* data, std::size_t size) {
    f.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
}

json config_to_json(const ToyModelConfig& c) {
    return json{{"embed_dim", c.embed_dim},
                {"denoiser_channels", c.denoiser_channels},
                {"latent_shape", c.latent_shape},
                {"vocab_size", c.vocab_size},
                {"num_attention_heads", c.num_attention_heads},
                {"seed", c.seed}};
}

ToyModelConfig config_from_json(const json& j) {
    ToyModelConfig c;
    c.embed_dim = j.at("embed_dim").get<int>();
    c.denoiser_channels = j.at("denoiser_channels").get<int>();
    c.latent_shape = j.at("latent_shape").get<std::vector<int>>();
    c.vocab_size = j.at("vocab_size").get<int>();
    c.num_attention_heads = j.at("num_attention_heads").get<int>();
    c.seed = j.at("seed").get<std::uint64_t>();
    return c;
}

}  // namespace

void save_checkpoint(const Backbone& backbone, const CheckpointMeta& meta,
                     const std::filesystem::path& path) {
    const auto* toy = dynamic_cast<const ToyBackbone*>(&backbone);
    if (toy == nullptr)
        throw std::invalid_argument("save_checkpoint: only the toy backbone serializes here");

    json header;
    header["format_version"] = kCheckpointFormatVersion;
    header["backbone"] = "toy-v1";
    header["model_config"] = config_to_json(toy->config());
    header["meta"] = {{"stage", meta.stage},
                      {"steps_completed", meta.steps_completed},
                      {"optimizer", meta.optimizer},
                      {"base_fingerprint", meta.base_fingerprint}};
    json spans = json::array();
    for (const SpanRecord& rec : backbone.span_records()) {
        spans.push_back({{"placeholder", rec.span.placeholder},
                         {"token_names", rec.span.token_names},
                         {"token_ids", rec.span.token_ids},
                         {"source_keywords", rec.source_keywords},
                         {"init_matrix_hash", rec.init_matrix_hash}});
    }
    header["spans"] = spans;
    json manifest = json::array();
    for (const Parameter* p : backbone.params().all()) {
        manifest.push_back(
            {{"name", p->name}, {"group", to_string(p->group)}, {"shape", p->value.shape}});
    }
    header["params"] = manifest;

    const std::string header_text = header.dump();
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open checkpoint for writing: " + path.string());
    write_bytes(f, kMagic, sizeof(kMagic));
    const std::uint32_t version = kCheckpointFormatVersion;
    write_bytes(f, &version, sizeof(version));
    const std::uint64_t header_len = header_text.size();
    write_bytes(f, &header_len, sizeof(header_len));
    write_bytes(f, header_text.data(), header_text.size());
    for (const Parameter* p : backbone.params().all())
        write_bytes(f, p->value.data.data(), p->value.data.size() * sizeof(double));
    if (!f) throw IoError("checkpoint write failed: " + path.string());
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw NotFoundError("checkpoint not found: " + path.string());

    char magic[8];
    f.read(magic, sizeof(magic));
    if (!f || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw DataError("not a checkpoint file: " + path.string());
    std::uint32_t version = 0;
    f.read(reinterpret_cast<char*>(&version), sizeof(version));
    if (!f || version != kCheckpointFormatVersion)
        throw DataError("unsupported checkpoint version in " + path.string());
    std::uint64_t header_len = 0;
    f.read(reinterpret_cast<char*>(&header_len), sizeof(header_len));
    std::string header_text(header_len, '\0');
    f.read(header_text.data(), static_cast<std::streamsize>(header_len));
    if (!f) throw DataError("truncated checkpoint header: " + path.string());

    json header = json::parse(header_text, nullptr, false);
    if (header.is_discarded() || header.value("backbone", "") != "toy-v1")
        throw DataError("malformed checkpoint header: " + path.string());

    LoadedCheckpoint out;
    out.config = config_from_json(header.at("model_config"));
    out.meta.stage = header.at("meta").at("stage").get<std::string>();
    out.meta.steps_completed = header.at("meta").at("steps_completed").get<int>();
    out.meta.optimizer = header.at("meta").at("optimizer").get<std::string>();
    out.meta.base_fingerprint = header.at("meta").at("base_fingerprint").get<std::string>();

    auto toy = std::make_unique<ToyBackbone>(out.config);
    for (const json& entry : header.at("params")) {
        const auto name = entry.at("name").get<std::string>();
        const auto shape = entry.at("shape").get<std::vector<int>>();
        Parameter& p = toy->params().find(name);
        if (param_group_from_string(entry.at("group").get<std::string>()) != p.group)
            throw DataError("checkpoint group mismatch for " + name);
        if (shape != p.value.shape) {
            // The embedding table may have grown through identifier registration.
            if (name != "text.embed" || shape.size() != 2 || shape[1] != p.value.shape[1] ||
                shape[0] < p.value.shape[0])
                throw DataError("checkpoint shape mismatch for " + name);
            Tensor extra = Tensor::zeros({shape[0] - p.value.shape[0], shape[1]});
            toy->append_embedding_rows(extra);
        }
        f.read(reinterpret_cast<char*>(p.value.data.data()),
               static_cast<std::streamsize>(p.value.data.size() * sizeof(double)));
        if (!f) throw DataError("truncated checkpoint arrays: " + path.string());
    }
    for (const json& s : header.at("spans")) {
        StyleIdentifierSpan span;
        span.placeholder = s.at("placeholder").get<std::string>();
        span.token_names = s.at("token_names").get<std::vector<std::string>>();
        span.token_ids = s.at("token_ids").get<std::vector<int>>();
        span.n = static_cast<int>(span.token_ids.size());
        toy->record_span(span, s.at("source_keywords").get<std::string>(),
                         s.at("init_matrix_hash").get<std::string>());
    }
    out.backbone = std::move(toy);
    return out;
}

}  // namespace styletuner
