#include "styletuner/trainer.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "styletuner/checkpoint.hpp"
#include "styletuner/errors.hpp"
#include "styletuner/imageio.hpp"
#include "styletuner/rng.hpp"
#include "styletuner/sampler.hpp"

namespace styletuner {

namespace {

using nlohmann::json;

void require_registered(const Backbone& backbone, const StyleIdentifierSpan& span) {
    const StyleIdentifierSpan* registered = backbone.find_span(span.placeholder);
    if (registered == nullptr || registered->token_ids != span.token_ids)
        throw NotFoundError("identifier span is not registered on this backbone");
}

std::vector<std::vector<int>> expanded_prompts(const Backbone& backbone,
                                               const std::vector<std::string>& objects,
                                               const StyleIdentifierSpan& span) {
    std::vector<std::vector<int>> out;
    out.reserve(objects.size());
    for (const std::string& object : objects)
        out.push_back(expand_identifier(backbone.tokenizer(), styled_prompt(object, span.placeholder),
                                        span));
    return out;
}

Parameter& embedding_table(Backbone& backbone) {
    return backbone.params().find("text.embed");
}

}  // namespace

void TrainingConfig::validate() const {
    if (stage1_steps < 1 || stage2_steps < 1)
        throw std::invalid_argument("config: step counts must be >= 1");
    if (!(stage1_lr > 0.0) || !(stage2_lr > 0.0))
        throw std::invalid_argument("config: learning rates must be > 0");
    if (batch_size < 1) throw std::invalid_argument("config: batch_size must be >= 1");
    if (image_size < 8) throw std::invalid_argument("config: image_size must be >= 8");
    if (!(lambda1 >= 0.0) || !(lambda2 >= 0.0) || !std::isfinite(lambda1) || !std::isfinite(lambda2))
        throw std::invalid_argument("config: lambda weights must be finite and >= 0");
    if (content_refs_per_object < 1)
        throw std::invalid_argument("config: content_refs_per_object must be >= 1");
    if (schedule_steps < 2) throw std::invalid_argument("config: schedule_steps must be >= 2");
    if (latent_size < 4 || latent_size % 2 != 0)
        throw std::invalid_argument("config: latent_size must be even and >= 4");
    if (eval_images_per_object < 1)
        throw std::invalid_argument("config: eval_images_per_object must be >= 1");
}

std::string training_config_to_json(const TrainingConfig& c) {
    const json j = {{"stage1_steps", c.stage1_steps},
                    {"stage1_lr", c.stage1_lr},
                    {"stage2_steps", c.stage2_steps},
                    {"stage2_lr", c.stage2_lr},
                    {"batch_size", c.batch_size},
                    {"image_size", c.image_size},
                    {"lambda1", c.lambda1},
                    {"lambda2", c.lambda2},
                    {"seed", c.seed},
                    {"schedule_profile", to_string(c.schedule_profile)},
                    {"content_refs_per_object", c.content_refs_per_object},
                    {"schedule_steps", c.schedule_steps},
                    {"latent_size", c.latent_size},
                    {"stage2_train_identifier_rows", c.stage2_train_identifier_rows},
                    {"stage2_content_branch", c.stage2_content_branch},
                    {"eval_images_per_object", c.eval_images_per_object},
                    {"refresh_keywords", c.refresh_keywords},
                    {"vlm_per_image", c.vlm_per_image}};
    return j.dump(2);
}

TrainingConfig training_config_from_json(const std::string& text) {
    const json j = json::parse(text, nullptr, false);
    if (j.is_discarded()) throw ValidationError("training config is not valid JSON");
    TrainingConfig c;
    c.stage1_steps = j.value("stage1_steps", c.stage1_steps);
    c.stage1_lr = j.value("stage1_lr", c.stage1_lr);
    c.stage2_steps = j.value("stage2_steps", c.stage2_steps);
    c.stage2_lr = j.value("stage2_lr", c.stage2_lr);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.image_size = j.value("image_size", c.image_size);
    c.lambda1 = j.value("lambda1", c.lambda1);
    c.lambda2 = j.value("lambda2", c.lambda2);
    c.seed = j.value("seed", c.seed);
    if (j.contains("schedule_profile"))
        c.schedule_profile = schedule_profile_from_string(j.at("schedule_profile").get<std::string>());
    c.content_refs_per_object = j.value("content_refs_per_object", c.content_refs_per_object);
    c.schedule_steps = j.value("schedule_steps", c.schedule_steps);
    c.latent_size = j.value("latent_size", c.latent_size);
    c.stage2_train_identifier_rows =
        j.value("stage2_train_identifier_rows", c.stage2_train_identifier_rows);
    c.stage2_content_branch = j.value("stage2_content_branch", c.stage2_content_branch);
    c.eval_images_per_object = j.value("eval_images_per_object", c.eval_images_per_object);
    c.refresh_keywords = j.value("refresh_keywords", c.refresh_keywords);
    c.vlm_per_image = j.value("vlm_per_image", c.vlm_per_image);
    c.validate();
    return c;
}

ToyModelConfig toy_config_for(const TrainingConfig& config) {
    ToyModelConfig m;
    m.latent_shape = {3, config.latent_size, config.latent_size};
    m.seed = config.seed;
    return m;
}

std::string styled_prompt(const std::string& object_name, const std::string& placeholder) {
    return "an " + object_name + " with " + placeholder + " style";
}

std::string unstyled_prompt(const std::string& object_name) {
    return "a photo of a " + object_name;
}

std::string record_to_json_line(const TrainStepRecord& r) {
    return json{{"step", r.step},
                {"stage", r.stage},
                {"l_ldm", r.l_ldm},
                {"l_content", r.l_content},
                {"l_total", r.l_total},
                {"t", r.timestep_sampled}}
        .dump();
}

std::vector<TrainStepRecord> read_records_log(const std::filesystem::path& path) {
    std::vector<TrainStepRecord> out;
    std::ifstream f(path);
    if (!f) return out;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        const json j = json::parse(line, nullptr, false);
        if (j.is_discarded()) throw DataError("malformed records log line in " + path.string());
        TrainStepRecord r;
        r.step = j.at("step").get<int>();
        r.stage = j.at("stage").get<int>();
        r.l_ldm = j.at("l_ldm").get<double>();
        r.l_content = j.at("l_content").get<double>();
        r.l_total = j.at("l_total").get<double>();
        r.timestep_sampled = j.at("t").get<int>();
        out.push_back(r);
    }
    return out;
}

void append_records_log(const std::filesystem::path& path,
                        const std::vector<TrainStepRecord>& records, bool truncate) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream f(path, truncate ? std::ios::trunc : std::ios::app);
    if (!f) throw IoError("cannot write records log: " + path.string());
    for (const TrainStepRecord& r : records) f << record_to_json_line(r) << "\n";
}

ContentReferences generate_content_references(Backbone& frozen_backbone,
                                              const std::vector<std::string>& objects,
                                              const TrainingConfig& config,
                                              const std::filesystem::path& cache_root) {
    if (objects.empty())
        throw std::invalid_argument("generate_content_references: empty object list");
    config.validate();

    const NoiseSchedule schedule = build_schedule(config.schedule_steps, config.schedule_profile);
    const std::string fingerprint = frozen_backbone.fingerprint();
    ContentReferences out;
    for (const std::string& object : objects) {
        ContentReferenceSet set;
        set.object_name = object;
        set.generator_fingerprint = fingerprint;
        set.prompt_used = unstyled_prompt(object);
        const auto dir = cache_root / fingerprint / object;
        std::filesystem::create_directories(dir);

        const std::vector<int> ids = frozen_backbone.tokenizer().tokenize(set.prompt_used);
        json seeds = json::array();
        for (int i = 0; i < config.content_refs_per_object; ++i) {
            const std::uint64_t seed = config.seed + static_cast<std::uint64_t>(i);
            seeds.push_back(seed);
            const auto img_path = dir / (std::to_string(seed) + ".png");
            if (std::filesystem::exists(img_path)) {
                set.images.push_back(read_png(img_path));
                continue;
            }
            const Conditioning cond = frozen_backbone.encode_text(ids);
            const ImageU8 img = sample(frozen_backbone, cond, schedule, seed, config.image_size);
            write_png(img, img_path);
            set.images.push_back(img);
            ++out.sampler_invocations;
        }
        const json index = {{"object", object},
                            {"fingerprint", fingerprint},
                            {"prompt", set.prompt_used},
                            {"image_size", config.image_size},
                            {"seeds", seeds}};
        std::ofstream idx(dir / "index.json", std::ios::trunc);
        idx << index.dump(2) << "\n";
        out.by_object.emplace(object, std::move(set));
    }
    return out;
}

namespace detail {

ad::Node* reconstruction_loss_node(ad::Graph& g, Backbone& backbone, const Tensor& x0, int t,
                                   const Tensor& epsilon, std::span<const int> token_ids,
                                   const NoiseSchedule& schedule) {
    const LatentSample noisy = add_noise({x0, 0}, epsilon, t, schedule);
    ad::Node* cond = backbone.encode_text_node(g, token_ids);
    ad::Node* pred = backbone.denoise_node(g, g.constant(noisy.data), t, cond);
    ad::Node* sse = g.sum_squared_diff(pred, g.constant(x0));
    return g.scale(sse, schedule.weight(t));
}

}  // namespace detail

std::vector<TrainStepRecord> run_stage1(Backbone& backbone,
                                        const std::vector<Tensor>& reference_latents,
                                        const std::vector<std::string>& objects,
                                        const StyleIdentifierSpan& span,
                                        const TrainingConfig& config, int step_base) {
    config.validate();
    require_registered(backbone, span);
    if (reference_latents.empty())
        throw std::invalid_argument("run_stage1: manifest has no reference images");
    if (objects.empty()) throw std::invalid_argument("run_stage1: no object names");

    const NoiseSchedule schedule = build_schedule(config.schedule_steps, config.schedule_profile);
    const auto prompts = expanded_prompts(backbone, objects, span);

    AdamOptimizer optimizer({config.stage1_lr});
    optimizer.add_rows(&embedding_table(backbone), span.token_ids);

    RandomSource rng(config.seed, "stage1");
    std::vector<TrainStepRecord> records;
    records.reserve(static_cast<std::size_t>(config.stage1_steps));
    Tensor epsilon(backbone.latent_shape());

    for (int step = 0; step < config.stage1_steps; ++step) {
        backbone.params().zero_grads();
        ad::Graph g;
        ad::Node* loss_sum = nullptr;
        int last_t = 0;
        for (int b = 0; b < config.batch_size; ++b) {
            const auto ref = rng.next_below(reference_latents.size());
            const auto obj = rng.next_below(objects.size());
            const int t = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(schedule.num_steps)));
            rng.fill_normal(epsilon.data);
            ad::Node* item = detail::reconstruction_loss_node(
                g, backbone, reference_latents[ref], t, epsilon, prompts[obj], schedule);
            loss_sum = loss_sum == nullptr ? item : g.add(loss_sum, item);
            last_t = t;
        }
        ad::Node* loss = g.scale(loss_sum, 1.0 / config.batch_size);
        const double value = loss->value.data[0];
        if (!std::isfinite(value))
            throw DivergenceError("stage 1 diverged at step " + std::to_string(step_base + step),
                                  step_base + step);
        g.backward(loss);
        optimizer.step();

        TrainStepRecord r;
        r.step = step_base + step;
        r.stage = 1;
        r.l_ldm = value;
        r.l_content = 0.0;
        r.l_total = value;
        r.timestep_sampled = last_t;
        records.push_back(r);
    }
    return records;
}

std::vector<TrainStepRecord> run_stage1(Backbone& backbone, const StyleCategoryManifest& manifest,
                                        const StyleIdentifierSpan& span,
                                        const TrainingConfig& config) {
    const auto shape = backbone.latent_shape();
    std::vector<Tensor> latents;
    for (const ImageU8& img : load_reference_images(manifest))
        latents.push_back(image_to_latent(img, shape[1], shape[2]));
    return run_stage1(backbone, latents, manifest.object_names, span, config);
}

std::vector<TrainStepRecord> run_stage2(Backbone& backbone,
                                        const std::vector<Tensor>& reference_latents,
                                        const std::vector<std::string>& objects,
                                        const StyleIdentifierSpan& span,
                                        const std::map<std::string, ContentReferenceSet>& content_refs,
                                        const TrainingConfig& config, int step_base) {
    config.validate();
    require_registered(backbone, span);
    if (reference_latents.empty())
        throw std::invalid_argument("run_stage2: manifest has no reference images");
    if (objects.empty()) throw std::invalid_argument("run_stage2: no object names");
    for (const std::string& object : objects) {
        const auto it = content_refs.find(object);
        if (it == content_refs.end() || it->second.images.empty())
            throw std::invalid_argument("run_stage2: missing content references for object '" +
                                        object + "'");
    }

    const auto shape = backbone.latent_shape();
    const NoiseSchedule schedule = build_schedule(config.schedule_steps, config.schedule_profile);
    const auto prompts = expanded_prompts(backbone, objects, span);
    std::vector<std::vector<int>> content_prompts;
    std::vector<std::vector<Tensor>> content_latents;
    for (const std::string& object : objects) {
        content_prompts.push_back(backbone.tokenizer().tokenize(unstyled_prompt(object)));
        std::vector<Tensor> latents;
        for (const ImageU8& img : content_refs.at(object).images)
            latents.push_back(image_to_latent(img, shape[1], shape[2]));
        content_latents.push_back(std::move(latents));
    }

    AdamOptimizer optimizer({config.stage2_lr});
    if (config.stage2_train_identifier_rows)
        optimizer.add_rows(&embedding_table(backbone), span.token_ids);
    for (Parameter* p : backbone.params().by_group(ParamGroup::TextAttention))
        optimizer.add_full(p);
    for (Parameter* p : backbone.params().by_group(ParamGroup::DenoiserAttention))
        optimizer.add_full(p);

    // Independent draw streams: skipping the content branch must not shift the
    // styled branch's samples.
    RandomSource style_rng(config.seed, "stage2.style");
    RandomSource content_rng(config.seed, "stage2.content");
    Tensor epsilon({shape[0], shape[1], shape[2]});

    std::vector<TrainStepRecord> records;
    records.reserve(static_cast<std::size_t>(config.stage2_steps));
    for (int step = 0; step < config.stage2_steps; ++step) {
        backbone.params().zero_grads();
        ad::Graph g;
        ad::Node* style_sum = nullptr;
        ad::Node* content_sum = nullptr;
        int last_t = 0;
        for (int b = 0; b < config.batch_size; ++b) {
            const auto ref = style_rng.next_below(reference_latents.size());
            const auto obj = style_rng.next_below(objects.size());
            const int t =
                static_cast<int>(style_rng.next_below(static_cast<std::uint64_t>(schedule.num_steps)));
            style_rng.fill_normal(epsilon.data);
            ad::Node* item = detail::reconstruction_loss_node(
                g, backbone, reference_latents[ref], t, epsilon, prompts[obj], schedule);
            style_sum = style_sum == nullptr ? item : g.add(style_sum, item);
            last_t = t;

            if (config.stage2_content_branch) {
                const auto cobj = content_rng.next_below(objects.size());
                const auto& pool = content_latents[cobj];
                const auto pick = content_rng.next_below(pool.size());
                const int t_prime = static_cast<int>(
                    content_rng.next_below(static_cast<std::uint64_t>(schedule.num_steps)));
                content_rng.fill_normal(epsilon.data);
                ad::Node* citem = detail::reconstruction_loss_node(
                    g, backbone, pool[pick], t_prime, epsilon, content_prompts[cobj], schedule);
                content_sum = content_sum == nullptr ? citem : g.add(content_sum, citem);
            }
        }
        ad::Node* l_ldm = g.scale(style_sum, 1.0 / config.batch_size);
        ad::Node* total = g.scale(l_ldm, config.lambda1);
        double l_content_value = 0.0;
        if (content_sum != nullptr) {
            ad::Node* l_content = g.scale(content_sum, 1.0 / config.batch_size);
            l_content_value = l_content->value.data[0];
            total = g.add(total, g.scale(l_content, config.lambda2));
        }
        const double total_value = total->value.data[0];
        if (!std::isfinite(total_value))
            throw DivergenceError("stage 2 diverged at step " + std::to_string(step_base + step),
                                  step_base + step);
        g.backward(total);
        optimizer.step();

        TrainStepRecord r;
        r.step = step_base + step;
        r.stage = 2;
        r.l_ldm = l_ldm->value.data[0];
        r.l_content = l_content_value;
        r.l_total = total_value;
        r.timestep_sampled = last_t;
        records.push_back(r);
    }
    return records;
}

std::vector<TrainStepRecord> run_stage2(Backbone& backbone, const StyleCategoryManifest& manifest,
                                        const StyleIdentifierSpan& span,
                                        const std::map<std::string, ContentReferenceSet>& content_refs,
                                        const TrainingConfig& config) {
    const auto shape = backbone.latent_shape();
    std::vector<Tensor> latents;
    for (const ImageU8& img : load_reference_images(manifest))
        latents.push_back(image_to_latent(img, shape[1], shape[2]));
    return run_stage2(backbone, latents, manifest.object_names, span, content_refs, config,
                      config.stage1_steps);
}

PipelineResult run_full_pipeline(const StyleCategoryManifest& manifest,
                                 const TrainingConfig& config, VlmClient& vlm,
                                 const RunPaths& paths) {
    config.validate();
    std::filesystem::create_directories(paths.run_root);
    std::filesystem::create_directories(paths.cache_root);
    const auto log_path = paths.run_root / "records.log";
    const auto stage1_path = paths.run_root / "stage1.ckpt";
    const auto stage2_path = paths.run_root / "stage2.ckpt";

    {  // resolved config snapshot; reproduces the run byte for byte
        std::ofstream f(paths.run_root / "config.json", std::ios::trunc);
        f << training_config_to_json(config) << "\n";
    }

    PipelineResult result;

    if (std::filesystem::exists(stage2_path)) {
        LoadedCheckpoint done = load_checkpoint(stage2_path);
        result.stage1_checkpoint = stage1_path;
        result.stage2_checkpoint = stage2_path;
        result.records = read_records_log(log_path);
        result.base_fingerprint = done.meta.base_fingerprint;
        if (const auto* span = done.backbone->find_span(manifest.placeholder)) result.span = *span;
        result.resumed_stage1 = true;
        result.resumed_stage2 = true;
        return result;
    }

    std::unique_ptr<Backbone> backbone = build_toy_backbone(toy_config_for(config));
    result.base_fingerprint = backbone->fingerprint();

    // Keyword extraction, cached per category keyed on the prompt template.
    const auto keyword_cache_path = paths.cache_root / "keywords" / (manifest.category_id + ".json");
    StyleKeywords keywords;
    bool have_keywords = false;
    if (!config.refresh_keywords) {
        if (manifest.cached_keywords) {
            keywords = *manifest.cached_keywords;
            have_keywords = true;
        } else if (auto cached = load_keyword_cache(keyword_cache_path);
                   cached && cached->template_hash == style_prompt_hash()) {
            keywords.keywords = cached->keywords;
            keywords.raw_response = cached->raw_response;
            have_keywords = true;
        }
    }
    if (!have_keywords) {
        std::vector<ImagePayload> payloads;
        for (const ImageU8& img : load_reference_images(manifest)) {
            ImagePayload payload;
            payload.bytes = encode_png(img);
            payloads.push_back(std::move(payload));
        }
        keywords = extract_style_keywords(payloads, vlm, config.vlm_per_image);
        KeywordCacheEntry entry;
        entry.category_id = manifest.category_id;
        entry.keywords = keywords.keywords;
        entry.raw_response = keywords.raw_response;
        entry.template_hash = style_prompt_hash();
        save_keyword_cache(entry, keyword_cache_path);
    }
    result.keywords = keywords;

    // The content generator is cloned before registration or any training.
    std::unique_ptr<Backbone> frozen = backbone->clone();

    const EmbeddingInitRecord init_record = compute_keyword_embeddings(*backbone, keywords);
    StyleIdentifierSpan span =
        make_identifier_span(*backbone, manifest.placeholder, init_record.keyword_embeddings.dim(0));
    register_and_initialize(*backbone, span, init_record);

    CheckpointMeta meta;
    meta.base_fingerprint = result.base_fingerprint;
    meta.stage = "init";
    save_checkpoint(*backbone, meta, paths.run_root / "init.ckpt");

    ContentReferences content = generate_content_references(
        *frozen, manifest.object_names, config, paths.cache_root / "content");
    result.content_sampler_invocations = content.sampler_invocations;

    if (std::filesystem::exists(stage1_path)) {
        LoadedCheckpoint loaded = load_checkpoint(stage1_path);
        backbone = std::move(loaded.backbone);
        const auto* loaded_span = backbone->find_span(manifest.placeholder);
        if (loaded_span == nullptr)
            throw DataError("stage-1 checkpoint lacks a span for " + manifest.placeholder);
        span = *loaded_span;
        result.resumed_stage1 = true;
    } else {
        try {
            const auto records = run_stage1(*backbone, manifest, span, config);
            append_records_log(log_path, records, /*truncate=*/true);
        } catch (const DivergenceError& e) {
            throw DivergenceError(std::string("stage1: ") + e.what(), e.step);
        }
        meta.stage = "stage1";
        meta.steps_completed = config.stage1_steps;
        save_checkpoint(*backbone, meta, stage1_path);
    }
    result.stage1_checkpoint = stage1_path;

    try {
        const auto records = run_stage2(*backbone, manifest, span, content.by_object, config);
        append_records_log(log_path, records, /*truncate=*/false);
    } catch (const DivergenceError& e) {
        throw DivergenceError(std::string("stage2: ") + e.what(), e.step);
    }
    meta.stage = "stage2";
    meta.steps_completed = config.stage1_steps + config.stage2_steps;
    save_checkpoint(*backbone, meta, stage2_path);
    result.stage2_checkpoint = stage2_path;
    result.span = span;
    result.records = read_records_log(log_path);
    return result;
}

}  // namespace styletuner
