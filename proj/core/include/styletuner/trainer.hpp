#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "styletuner/backbone.hpp"
#include "styletuner/embedding_manager.hpp"
#include "styletuner/manifest.hpp"
#include "styletuner/optimizer.hpp"
#include "styletuner/schedule.hpp"
#include "styletuner/style_reasoning.hpp"
#include "styletuner/toy_backbone.hpp"

namespace styletuner {

struct TrainingConfig {
    int stage1_steps = 500;
    double stage1_lr = 1e-6;
    int stage2_steps = 2500;
    double stage2_lr = 5e-5;
    int batch_size = 1;
    int image_size = 256;
    double lambda1 = 1.0;
    double lambda2 = 1.0;
    std::uint64_t seed = 0;
    ScheduleProfile schedule_profile = ScheduleProfile::Linear;
    int content_refs_per_object = 4;

    // Desk-scale knobs for the toy backbone.
    int schedule_steps = 50;
    int latent_size = 16;
    // Stage 2 also updates the identifier rows by default; disable to fine-tune
    // attention only.
    bool stage2_train_identifier_rows = true;
    // Disables the content branch entirely, leaving a pure reconstruction
    // trajectory. With separate draw streams per branch, a run with lambda2=0
    // matches this trajectory bitwise.
    bool stage2_content_branch = true;
    int eval_images_per_object = 2;
    bool refresh_keywords = false;
    bool vlm_per_image = false;

    void validate() const;
};

std::string training_config_to_json(const TrainingConfig& config);
TrainingConfig training_config_from_json(const std::string& text);

ToyModelConfig toy_config_for(const TrainingConfig& config);

std::string styled_prompt(const std::string& object_name, const std::string& placeholder);
std::string unstyled_prompt(const std::string& object_name);

struct TrainStepRecord {
    int step = 0;
    int stage = 1;
    double l_ldm = 0.0;
    double l_content = 0.0;  // always 0 in stage 1
    double l_total = 0.0;
    int timestep_sampled = 0;
};

std::string record_to_json_line(const TrainStepRecord& record);
std::vector<TrainStepRecord> read_records_log(const std::filesystem::path& path);
void append_records_log(const std::filesystem::path& path,
                        const std::vector<TrainStepRecord>& records, bool truncate);

// Content reference images (the data-augmentation targets of the content
// branch), produced by the frozen base model and never by a tuned one.
struct ContentReferenceSet {
    std::string object_name;
    std::vector<ImageU8> images;
    std::string generator_fingerprint;
    std::string prompt_used;
};

struct ContentReferences {
    std::map<std::string, ContentReferenceSet> by_object;
    int sampler_invocations = 0;  // cache misses that actually ran the sampler
};

// Samples content_refs_per_object images per object with seeds seed+index,
// cached on disk under {cache_root}/{fingerprint}/{object}/{seed}.png and
// reused on rerun.
ContentReferences generate_content_references(Backbone& frozen_backbone,
                                              const std::vector<std::string>& objects,
                                              const TrainingConfig& config,
                                              const std::filesystem::path& cache_root);

namespace detail {
// w_t * ||denoise(alpha_t x0 + sigma_t eps, cond) - x0||^2 as a graph node.
ad::Node* reconstruction_loss_node(ad::Graph& g, Backbone& backbone, const Tensor& x0, int t,
                                   const Tensor& epsilon, std::span<const int> token_ids,
                                   const NoiseSchedule& schedule);
}  // namespace detail

// Stage 1: optimizes only the identifier-span embedding rows under the
// reconstruction loss. Every other parameter stays bit-exact.
std::vector<TrainStepRecord> run_stage1(Backbone& backbone,
                                        const std::vector<Tensor>& reference_latents,
                                        const std::vector<std::string>& objects,
                                        const StyleIdentifierSpan& span,
                                        const TrainingConfig& config, int step_base = 0);
std::vector<TrainStepRecord> run_stage1(Backbone& backbone, const StyleCategoryManifest& manifest,
                                        const StyleIdentifierSpan& span,
                                        const TrainingConfig& config);

// Stage 2: joint fine-tuning of the identifier rows plus both attention
// groups under lambda1 * L_reconstruction + lambda2 * L_content; the two
// branches draw (t, eps) from independent streams.
std::vector<TrainStepRecord> run_stage2(Backbone& backbone,
                                        const std::vector<Tensor>& reference_latents,
                                        const std::vector<std::string>& objects,
                                        const StyleIdentifierSpan& span,
                                        const std::map<std::string, ContentReferenceSet>& content_refs,
                                        const TrainingConfig& config, int step_base = 0);
std::vector<TrainStepRecord> run_stage2(Backbone& backbone, const StyleCategoryManifest& manifest,
                                        const StyleIdentifierSpan& span,
                                        const std::map<std::string, ContentReferenceSet>& content_refs,
                                        const TrainingConfig& config);

struct RunPaths {
    std::filesystem::path run_root;
    std::filesystem::path cache_root;
};

struct PipelineResult {
    std::filesystem::path stage1_checkpoint;
    std::filesystem::path stage2_checkpoint;
    std::vector<TrainStepRecord> records;
    StyleIdentifierSpan span;
    StyleKeywords keywords;
    std::string base_fingerprint;
    int content_sampler_invocations = 0;
    bool resumed_stage1 = false;
    bool resumed_stage2 = false;
};

// keyword extraction -> embedding initialization -> identifier registration ->
// content references from a frozen pre-training clone -> stage 1 -> stage 2.
// Each boundary is checkpointed under run_root and reruns resume from the
// latest completed boundary.
PipelineResult run_full_pipeline(const StyleCategoryManifest& manifest,
                                 const TrainingConfig& config, VlmClient& vlm,
                                 const RunPaths& paths);

}  // namespace styletuner
