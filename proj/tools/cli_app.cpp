#include "cli_app.hpp"

#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>

#include <CLI11.hpp>
#include <json.hpp>

#include "styletuner/checkpoint.hpp"
#include "styletuner/errors.hpp"
#include "styletuner/imageio.hpp"
#include "styletuner/manifest.hpp"
#include "styletuner/metrics.hpp"
#include "styletuner/sampler.hpp"
#include "styletuner/style_reasoning.hpp"
#include "styletuner/trainer.hpp"

namespace styletuner::cli {

namespace {

namespace fs = std::filesystem;

std::string iso_now() {
    char buf[32];
    const std::time_t now = std::time(nullptr);
    std::tm tm_utc{};
    gmtime_r(&now, &tm_utc);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    return buf;
}

std::string default_run_id(const std::string& category) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%s-%ld-%d", category.c_str(),
                  static_cast<long>(std::time(nullptr)), static_cast<int>(getpid()));
    return buf;
}

std::unique_ptr<VlmClient> make_vlm_client(bool mock) {
    if (mock) return std::make_unique<MockVlmClient>();
    return std::make_unique<HttpVlmClient>(HttpVlmClient::from_environment());
}

std::unique_ptr<Embedder> make_embedder(const std::string& kind) {
    if (kind == "mock") return std::make_unique<MockEmbedder>();
    if (kind == "real") return std::make_unique<RemoteClipEmbedder>(RemoteClipEmbedder::from_environment());
    throw ValidationError("unknown embedder '" + kind + "' (expected mock or real)");
}

// Expands the prompt through the checkpoint's span when its placeholder
// occurs; otherwise tokenizes the prompt as-is.
std::vector<int> prompt_to_ids(const Backbone& backbone, const std::string& prompt) {
    for (const SpanRecord& rec : backbone.span_records()) {
        if (prompt.find(rec.span.placeholder) != std::string::npos)
            return expand_identifier(backbone.tokenizer(), prompt, rec.span);
    }
    return backbone.tokenizer().tokenize(prompt);
}

struct EvalOptions {
    std::uint64_t seed = 0;
    int images_per_object = 2;
    int image_size = 256;
    int schedule_steps = 50;
    ScheduleProfile profile = ScheduleProfile::Linear;
};

CategoryScores evaluate_category(Backbone& backbone, const StyleCategoryManifest& manifest,
                                 const Embedder& embedder, const EvalOptions& opts,
                                 const fs::path& image_dir) {
    const NoiseSchedule schedule = build_schedule(opts.schedule_steps, opts.profile);
    const std::vector<ImageU8> references = load_reference_images(manifest);

    std::vector<std::string> prompts;
    for (const std::string& object : manifest.object_names)
        prompts.push_back(styled_prompt(object, manifest.placeholder));

    static const std::vector<std::string> kFallbackDistractors = {
        "a plain photograph", "an empty scene", "a blank canvas"};

    fs::create_directories(image_dir);
    double hist_acc = 0.0, iqa_acc = 0.0;
    double hits_weighted = 0.0;
    int total_images = 0;
    for (std::size_t oi = 0; oi < manifest.object_names.size(); ++oi) {
        std::vector<std::pair<ImageU8, std::string>> generated;
        const std::vector<int> ids = prompt_to_ids(backbone, prompts[oi]);
        const Conditioning cond = backbone.encode_text(ids);
        for (int i = 0; i < opts.images_per_object; ++i) {
            const std::uint64_t seed = opts.seed + static_cast<std::uint64_t>(i);
            ImageU8 img = sample(backbone, cond, schedule, seed, opts.image_size);
            write_png(img, image_dir / (manifest.object_names[oi] + "_" + std::to_string(seed) +
                                        ".png"));
            hist_acc += pixel_hist_score(img, references);
            iqa_acc += clip_iqa_score(img, embedder);
            generated.emplace_back(std::move(img), prompts[oi]);
            ++total_images;
        }
        std::vector<std::string> distractors;
        for (std::size_t oj = 0; oj < prompts.size(); ++oj)
            if (oj != oi) distractors.push_back(prompts[oj]);
        if (distractors.empty()) distractors = kFallbackDistractors;
        hits_weighted += clip_r_precision(generated, distractors, embedder) *
                         static_cast<double>(generated.size());
    }
    CategoryScores scores;
    scores.pixel_hist = hist_acc / total_images;
    scores.clip_iqa = iqa_acc / total_images;
    scores.clip_r_precision = hits_weighted / total_images;
    return scores;
}

int run(const std::vector<std::string>& args) {
    CLI::App app{"personalized text-to-image style fine-tuning toolkit"};
    app.require_subcommand(1);
    app.fallthrough();

    // Global knobs shared by the subcommands.
    TrainingConfig defaults;
    std::uint64_t seed = defaults.seed;
    double lambda1 = defaults.lambda1, lambda2 = defaults.lambda2;
    int stage1_steps = defaults.stage1_steps, stage2_steps = defaults.stage2_steps;
    double stage1_lr = defaults.stage1_lr, stage2_lr = defaults.stage2_lr;
    int image_size = defaults.image_size;
    bool mock_vlm = false;
    auto* opt_seed = app.add_option("--seed", seed, "base random seed");
    auto* opt_l1 = app.add_option("--lambda1", lambda1, "reconstruction loss weight");
    auto* opt_l2 = app.add_option("--lambda2", lambda2, "content preservation loss weight");
    auto* opt_s1 = app.add_option("--stage1-steps", stage1_steps, "stage-1 step count");
    auto* opt_s1lr = app.add_option("--stage1-lr", stage1_lr, "stage-1 learning rate");
    auto* opt_s2 = app.add_option("--stage2-steps", stage2_steps, "stage-2 step count");
    auto* opt_s2lr = app.add_option("--stage2-lr", stage2_lr, "stage-2 learning rate");
    auto* opt_img = app.add_option("--image-size", image_size, "pixel size of generated images");
    app.add_flag("--mock-vlm", mock_vlm, "use the offline deterministic VLM client");

    // make-corpus
    auto* cmd_corpus = app.add_subcommand("make-corpus", "generate a synthetic style corpus");
    std::string corpus_dir;
    int corpus_categories = 2;
    int corpus_size = 64;
    cmd_corpus->add_option("output_dir", corpus_dir, "corpus output directory")->required();
    cmd_corpus->add_option("--categories", corpus_categories, "number of style categories");
    cmd_corpus->add_option("--size", corpus_size, "reference image pixel size");

    // extract-keywords
    auto* cmd_extract = app.add_subcommand("extract-keywords", "run style keyword reasoning");
    std::string extract_manifest;
    std::string extract_cache = "cache";
    bool extract_refresh = false;
    bool vlm_per_image = false;
    cmd_extract->add_option("manifest", extract_manifest, "style category manifest")->required();
    cmd_extract->add_option("--cache-dir", extract_cache, "keyword cache directory");
    cmd_extract->add_flag("--refresh", extract_refresh, "ignore and overwrite any cached keywords");
    cmd_extract->add_flag("--per-image", vlm_per_image, "send one request per reference image");

    // train
    auto* cmd_train = app.add_subcommand("train", "run the two-stage fine-tuning pipeline");
    std::string train_manifest;
    std::string train_config_file;
    std::string run_root;
    std::string run_id;
    std::string train_cache = "cache";
    int latent_size = defaults.latent_size;
    int schedule_steps = defaults.schedule_steps;
    std::string profile_name = "linear";
    cmd_train->add_option("manifest", train_manifest, "style category manifest")->required();
    auto* opt_cfg = cmd_train->add_option("--config", train_config_file, "training config JSON file");
    cmd_train->add_option("--run-root", run_root, "run output directory (default runs/<run-id>)");
    cmd_train->add_option("--run-id", run_id, "identifier for this run");
    cmd_train->add_option("--cache-dir", train_cache, "cache directory for keywords and content refs");
    auto* opt_latent = cmd_train->add_option("--latent-size", latent_size, "toy latent height/width");
    auto* opt_sched = cmd_train->add_option("--schedule-steps", schedule_steps, "diffusion timestep count");
    auto* opt_profile = cmd_train->add_option("--profile", profile_name, "noise schedule profile (linear|cosine)");

    // generate
    auto* cmd_gen = app.add_subcommand("generate", "sample images from a checkpoint");
    std::string gen_checkpoint;
    std::string gen_prompt;
    std::string gen_out = "generated.png";
    int gen_schedule_steps = defaults.schedule_steps;
    std::string gen_profile = "linear";
    cmd_gen->add_option("checkpoint", gen_checkpoint, "checkpoint file")->required();
    cmd_gen->add_option("--prompt", gen_prompt, "text prompt; may contain the style placeholder")
        ->required();
    cmd_gen->add_option("--out", gen_out, "output PNG path");
    cmd_gen->add_option("--schedule-steps", gen_schedule_steps, "diffusion timestep count");
    cmd_gen->add_option("--profile", gen_profile, "noise schedule profile (linear|cosine)");

    // evaluate
    auto* cmd_eval = app.add_subcommand("evaluate", "score a checkpoint against a manifest");
    std::string eval_checkpoint;
    std::string eval_manifest;
    std::string embedder_kind = "mock";
    std::string eval_out;
    std::string eval_run_id = "run";
    int eval_images = defaults.eval_images_per_object;
    int eval_schedule_steps = defaults.schedule_steps;
    std::string eval_profile = "linear";
    cmd_eval->add_option("checkpoint", eval_checkpoint, "checkpoint file")->required();
    cmd_eval->add_option("manifest", eval_manifest, "style category manifest")->required();
    cmd_eval->add_option("--embedder", embedder_kind, "mock|real");
    cmd_eval->add_option("--out", eval_out, "report JSON path (default <checkpoint dir>/report.json)");
    cmd_eval->add_option("--run-id", eval_run_id, "run id recorded in the report");
    cmd_eval->add_option("--images-per-object", eval_images, "generated images per object");
    cmd_eval->add_option("--schedule-steps", eval_schedule_steps, "diffusion timestep count");
    cmd_eval->add_option("--profile", eval_profile, "noise schedule profile (linear|cosine)");

    // report
    auto* cmd_report = app.add_subcommand("report", "compare metric reports side by side");
    std::vector<std::string> report_files;
    cmd_report->add_option("results", report_files, "report JSON files")->required();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        app.exit(e);
        return 0;
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    if (cmd_corpus->parsed()) {
        const auto manifests = make_toy_corpus(corpus_dir, corpus_categories, seed, corpus_size);
        for (const auto& m : manifests) std::cout << m.string() << "\n";
        return 0;
    }

    if (cmd_extract->parsed()) {
        const StyleCategoryManifest manifest = load_manifest(extract_manifest);
        const auto cache_path =
            fs::path(extract_cache) / "keywords" / (manifest.category_id + ".json");
        if (!extract_refresh) {
            if (auto cached = load_keyword_cache(cache_path);
                cached && cached->template_hash == style_prompt_hash()) {
                std::cout << cached->keywords << "\n";
                return 0;
            }
        }
        auto client = make_vlm_client(mock_vlm);
        std::vector<ImagePayload> payloads;
        for (const ImageU8& img : load_reference_images(manifest))
            payloads.push_back({encode_png(img), "image/png"});
        const StyleKeywords kw = extract_style_keywords(payloads, *client, vlm_per_image);
        KeywordCacheEntry entry;
        entry.category_id = manifest.category_id;
        entry.keywords = kw.keywords;
        entry.raw_response = kw.raw_response;
        entry.template_hash = style_prompt_hash();
        save_keyword_cache(entry, cache_path);
        std::cout << kw.keywords << "\n";
        return 0;
    }

    if (cmd_train->parsed()) {
        const StyleCategoryManifest manifest = load_manifest(train_manifest);
        TrainingConfig config;
        if (opt_cfg->count() > 0) {
            std::ifstream f(train_config_file);
            if (!f) throw NotFoundError("config file not found: " + train_config_file);
            std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
            config = training_config_from_json(text);
        }
        // Flags override the config file which overrides defaults.
        if (opt_seed->count() > 0) config.seed = seed;
        if (opt_l1->count() > 0) config.lambda1 = lambda1;
        if (opt_l2->count() > 0) config.lambda2 = lambda2;
        if (opt_s1->count() > 0) config.stage1_steps = stage1_steps;
        if (opt_s1lr->count() > 0) config.stage1_lr = stage1_lr;
        if (opt_s2->count() > 0) config.stage2_steps = stage2_steps;
        if (opt_s2lr->count() > 0) config.stage2_lr = stage2_lr;
        if (opt_img->count() > 0) config.image_size = image_size;
        if (opt_latent->count() > 0) config.latent_size = latent_size;
        if (opt_sched->count() > 0) config.schedule_steps = schedule_steps;
        if (opt_profile->count() > 0)
            config.schedule_profile = schedule_profile_from_string(profile_name);
        config.validate();

        if (run_id.empty()) run_id = default_run_id(manifest.category_id);
        RunPaths paths;
        paths.run_root = run_root.empty() ? fs::path("runs") / run_id : fs::path(run_root);
        paths.cache_root = train_cache;

        auto client = make_vlm_client(mock_vlm);
        const PipelineResult result = run_full_pipeline(manifest, config, *client, paths);
        std::cout << "keywords: " << result.keywords.keywords << "\n"
                  << "identifier tokens: " << result.span.n << "\n"
                  << "records: " << result.records.size() << "\n"
                  << "stage1 checkpoint: " << result.stage1_checkpoint.string() << "\n"
                  << "stage2 checkpoint: " << result.stage2_checkpoint.string() << "\n";
        if (!result.records.empty())
            std::cout << "final l_total: " << result.records.back().l_total << "\n";
        return 0;
    }

    if (cmd_gen->parsed()) {
        LoadedCheckpoint loaded = load_checkpoint(gen_checkpoint);
        const NoiseSchedule schedule =
            build_schedule(gen_schedule_steps, schedule_profile_from_string(gen_profile));
        const std::vector<int> ids = prompt_to_ids(*loaded.backbone, gen_prompt);
        const Conditioning cond = loaded.backbone->encode_text(ids);
        const ImageU8 img = sample(*loaded.backbone, cond, schedule, seed, image_size);
        write_png(img, gen_out);
        std::cout << gen_out << "\n";
        return 0;
    }

    if (cmd_eval->parsed()) {
        LoadedCheckpoint loaded = load_checkpoint(eval_checkpoint);
        const StyleCategoryManifest manifest = load_manifest(eval_manifest);
        const auto embedder = make_embedder(embedder_kind);
        EvalOptions opts;
        opts.seed = seed;
        opts.images_per_object = eval_images;
        opts.image_size = image_size;
        opts.schedule_steps = eval_schedule_steps;
        opts.profile = schedule_profile_from_string(eval_profile);

        const fs::path ckpt_dir = fs::path(eval_checkpoint).parent_path();
        const fs::path report_path =
            eval_out.empty() ? ckpt_dir / "report.json" : fs::path(eval_out);
        const CategoryScores scores = evaluate_category(*loaded.backbone, manifest, *embedder,
                                                        opts, ckpt_dir / "generated");
        ReportMetadata meta;
        meta.run_id = eval_run_id;
        meta.embedder_id = embedder->id();
        meta.timestamp = iso_now();
        meta.distractor_pool = "styled prompts of the other objects in the manifest";
        const MetricReport report = build_report({{manifest.category_id, scores}}, meta);
        save_report(report, report_path);
        std::cout << render_report_table(report);
        std::cout << "report: " << report_path.string() << "\n";
        return 0;
    }

    if (cmd_report->parsed()) {
        std::vector<std::pair<std::string, CategoryScores>> methods;
        for (const std::string& file : report_files) {
            const MetricReport r = load_report(file);
            const std::string label =
                r.metadata.run_id.empty() ? fs::path(file).stem().string() : r.metadata.run_id;
            methods.emplace_back(label, r.aggregate);
        }
        std::cout << render_comparison_table(methods);
        return 0;
    }

    return 0;
}

}  // namespace

int dispatch(const std::vector<std::string>& args) {
    try {
        return run(args);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace styletuner::cli
