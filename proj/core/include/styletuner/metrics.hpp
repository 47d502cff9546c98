#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "styletuner/image.hpp"

namespace styletuner {

// Image/text embedder behind the two CLIP-based metrics. Outputs are unit
// L2-norm vectors of a fixed dimension; implementations must be deterministic.
class Embedder {
public:
    virtual ~Embedder() = default;
    virtual std::vector<double> embed_image(const ImageU8& image) const = 0;
    virtual std::vector<double> embed_text(const std::string& text) const = 0;
    virtual int dim() const = 0;
    virtual std::string id() const = 0;
};

struct ColorHistogram {
    int bins_per_channel = 16;
    Tensor counts;  // (3, bins), each channel normalized to unit mass
};

ColorHistogram compute_color_histogram(const ImageU8& image, int bins);

// Histogram-intersection similarity in [0,1] between the generated image and
// the mean reference histogram; 1.0 iff the color distributions coincide.
double pixel_hist_score(const ImageU8& generated, const std::vector<ImageU8>& references,
                        int bins = 16);

// Fraction of images whose true prompt outranks every distractor under cosine
// similarity. Ties count as misses.
double clip_r_precision(const std::vector<std::pair<ImageU8, std::string>>& generated,
                        const std::vector<std::string>& distractor_prompts,
                        const Embedder& embedder);

const std::vector<std::pair<std::string, std::string>>& default_iqa_prompt_pairs();

// Antonym-prompt quality score: per pair, softmax over the two similarities
// (divided by the temperature) taken at the positive entry; mean over pairs.
double clip_iqa_score(const ImageU8& image, const Embedder& embedder,
                      const std::vector<std::pair<std::string, std::string>>& prompt_pairs =
                          default_iqa_prompt_pairs(),
                      double temperature = 0.01);

struct CategoryScores {
    double pixel_hist = 0.0;
    double clip_r_precision = 0.0;
    double clip_iqa = 0.0;
};

struct ReportMetadata {
    std::string run_id;
    std::string embedder_id;
    std::string timestamp;
    std::string distractor_pool;  // provenance of the R-Precision candidate pool
};

struct MetricReport {
    std::map<std::string, CategoryScores> per_category;
    CategoryScores aggregate;  // arithmetic means over categories
    ReportMetadata metadata;
};

MetricReport build_report(const std::map<std::string, CategoryScores>& results,
                          ReportMetadata metadata);

std::string render_report_table(const MetricReport& report);
// Multi-method comparison: best value per column marked *bold*, runner-up
// marked _underlined_ (when at least two methods are present).
std::string render_comparison_table(
    const std::vector<std::pair<std::string, CategoryScores>>& methods);

void save_report(const MetricReport& report, const std::filesystem::path& path);
MetricReport load_report(const std::filesystem::path& path);

// Deterministic offline embedder: image vectors come from color/intensity
// statistics through a fixed random projection, text vectors from hashed
// token features.
class MockEmbedder final : public Embedder {
public:
    MockEmbedder();
    std::vector<double> embed_image(const ImageU8& image) const override;
    std::vector<double> embed_text(const std::string& text) const override;
    int dim() const override { return 64; }
    std::string id() const override { return "mock-v1"; }

private:
    Tensor projection_;  // (dim, feature_count)
};

// Adapter for a real CLIP service speaking JSON over HTTP
// (STYLETUNER_EMBED_ENDPOINT); excluded from the offline acceptance path.
class RemoteClipEmbedder final : public Embedder {
public:
    RemoteClipEmbedder(std::string endpoint, int dim);
    static RemoteClipEmbedder from_environment();

    std::vector<double> embed_image(const ImageU8& image) const override;
    std::vector<double> embed_text(const std::string& text) const override;
    int dim() const override { return dim_; }
    std::string id() const override { return "remote-clip"; }

private:
    std::vector<double> request(const std::string& kind, const std::string& payload) const;
    std::string endpoint_;
    int dim_;
};

}  // namespace styletuner
