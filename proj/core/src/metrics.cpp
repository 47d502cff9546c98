#include "styletuner/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <httplib.h>
#include <json.hpp>

#include "styletuner/errors.hpp"
#include "styletuner/imageio.hpp"
#include "styletuner/rng.hpp"
#include "styletuner/style_reasoning.hpp"

namespace styletuner {

namespace {

using nlohmann::json;

void check_unit_norm(const std::vector<double>& v, const char* what) {
    double n = 0.0;
    for (double x : v) n += x * x;
    n = std::sqrt(n);
    if (std::abs(n - 1.0) > 1e-6)
        throw std::invalid_argument(std::string(what) + ": embedding is not unit-norm");
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw std::invalid_argument("cosine: dimension mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

void normalize(std::vector<double>& v) {
    double n = 0.0;
    for (double x : v) n += x * x;
    n = std::sqrt(n);
    if (n == 0.0) {
        v[0] = 1.0;
        return;
    }
    for (double& x : v) x /= n;
}

}  // namespace

ColorHistogram compute_color_histogram(const ImageU8& image, int bins) {
    if (bins < 1 || bins > 256) throw std::invalid_argument("histogram: bins must be in [1,256]");
    ColorHistogram h;
    h.bins_per_channel = bins;
    h.counts = Tensor::zeros({3, bins});
    const int total = image.width * image.height;
    if (total == 0) throw std::invalid_argument("histogram: empty image");
    for (int y = 0; y < image.height; ++y)
        for (int x = 0; x < image.width; ++x)
            for (int c = 0; c < 3; ++c) {
                const int bin = image.at(x, y, c) * bins / 256;
                h.counts(c, bin) += 1.0;
            }
    for (int c = 0; c < 3; ++c)
        for (int b = 0; b < bins; ++b) h.counts(c, b) /= total;
    return h;
}

double pixel_hist_score(const ImageU8& generated, const std::vector<ImageU8>& references,
                        int bins) {
    if (references.empty()) throw std::invalid_argument("pixel_hist_score: no reference images");
    const ColorHistogram gen = compute_color_histogram(generated, bins);
    Tensor ref_mean = Tensor::zeros({3, bins});
    for (const ImageU8& ref : references) {
        const ColorHistogram rh = compute_color_histogram(ref, bins);
        for (std::size_t i = 0; i < ref_mean.data.size(); ++i)
            ref_mean.data[i] += rh.counts.data[i];
    }
    for (double& v : ref_mean.data) v /= static_cast<double>(references.size());

    double score = 0.0;
    for (int c = 0; c < 3; ++c) {
        double intersection = 0.0;
        for (int b = 0; b < bins; ++b)
            intersection += std::min(gen.counts(c, b), ref_mean(c, b));
        score += intersection;
    }
    return score / 3.0;
}

double clip_r_precision(const std::vector<std::pair<ImageU8, std::string>>& generated,
                        const std::vector<std::string>& distractor_prompts,
                        const Embedder& embedder) {
    if (generated.empty()) throw std::invalid_argument("clip_r_precision: no generated images");
    if (distractor_prompts.empty())
        throw std::invalid_argument("clip_r_precision: no distractor prompts");
    for (std::size_t i = 0; i < distractor_prompts.size(); ++i)
        for (std::size_t j = i + 1; j < distractor_prompts.size(); ++j)
            if (distractor_prompts[i] == distractor_prompts[j])
                throw std::invalid_argument("clip_r_precision: duplicate prompt in distractor set");
    for (const auto& [image, prompt] : generated)
        for (const std::string& d : distractor_prompts)
            if (prompt == d)
                throw std::invalid_argument(
                    "clip_r_precision: true prompt duplicated in distractor set");

    std::vector<std::vector<double>> distractor_vecs;
    distractor_vecs.reserve(distractor_prompts.size());
    for (const std::string& d : distractor_prompts) {
        distractor_vecs.push_back(embedder.embed_text(d));
        check_unit_norm(distractor_vecs.back(), "clip_r_precision");
    }

    int hits = 0;
    for (const auto& [image, prompt] : generated) {
        const std::vector<double> img_vec = embedder.embed_image(image);
        check_unit_norm(img_vec, "clip_r_precision");
        const std::vector<double> true_vec = embedder.embed_text(prompt);
        check_unit_norm(true_vec, "clip_r_precision");
        const double true_sim = cosine(img_vec, true_vec);
        bool top = true;
        for (const auto& dv : distractor_vecs) {
            if (cosine(img_vec, dv) >= true_sim) {  // ties are misses
                top = false;
                break;
            }
        }
        if (top) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(generated.size());
}

const std::vector<std::pair<std::string, std::string>>& default_iqa_prompt_pairs() {
    static const std::vector<std::pair<std::string, std::string>> pairs = {
        {"Good photo.", "Bad photo."}};
    return pairs;
}

double clip_iqa_score(const ImageU8& image, const Embedder& embedder,
                      const std::vector<std::pair<std::string, std::string>>& prompt_pairs,
                      double temperature) {
    if (prompt_pairs.empty()) throw std::invalid_argument("clip_iqa_score: no prompt pairs");
    if (!(temperature > 0.0)) throw std::invalid_argument("clip_iqa_score: temperature must be > 0");
    const std::vector<double> img_vec = embedder.embed_image(image);
    check_unit_norm(img_vec, "clip_iqa_score");
    double acc = 0.0;
    for (const auto& [positive, negative] : prompt_pairs) {
        const double s_pos = cosine(img_vec, embedder.embed_text(positive));
        const double s_neg = cosine(img_vec, embedder.embed_text(negative));
        const double z_pos = s_pos / temperature;
        const double z_neg = s_neg / temperature;
        const double m = std::max(z_pos, z_neg);
        const double e_pos = std::exp(z_pos - m);
        const double e_neg = std::exp(z_neg - m);
        acc += e_pos / (e_pos + e_neg);
    }
    return acc / static_cast<double>(prompt_pairs.size());
}

MetricReport build_report(const std::map<std::string, CategoryScores>& results,
                          ReportMetadata metadata) {
    if (results.empty()) throw std::invalid_argument("build_report: no results");
    MetricReport report;
    report.per_category = results;
    report.metadata = std::move(metadata);
    for (const auto& [category, scores] : results) {
        report.aggregate.pixel_hist += scores.pixel_hist;
        report.aggregate.clip_r_precision += scores.clip_r_precision;
        report.aggregate.clip_iqa += scores.clip_iqa;
    }
    const auto n = static_cast<double>(results.size());
    report.aggregate.pixel_hist /= n;
    report.aggregate.clip_r_precision /= n;
    report.aggregate.clip_iqa /= n;
    return report;
}

namespace {

std::string fmt_score(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return buf;
}

std::string pad(const std::string& s, std::size_t width) {
    return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

}  // namespace

std::string render_report_table(const MetricReport& report) {
    std::ostringstream out;
    std::size_t name_width = std::string("aggregate").size();
    for (const auto& [category, scores] : report.per_category)
        name_width = std::max(name_width, category.size());
    out << pad("category", name_width) << "  pixel_hist  clip_r_precision  clip_iqa\n";
    for (const auto& [category, scores] : report.per_category) {
        out << pad(category, name_width) << "  " << pad(fmt_score(scores.pixel_hist), 10) << "  "
            << pad(fmt_score(scores.clip_r_precision), 16) << "  " << fmt_score(scores.clip_iqa)
            << "\n";
    }
    out << pad("aggregate", name_width) << "  " << pad(fmt_score(report.aggregate.pixel_hist), 10)
        << "  " << pad(fmt_score(report.aggregate.clip_r_precision), 16) << "  "
        << fmt_score(report.aggregate.clip_iqa) << "\n";
    return out.str();
}

std::string render_comparison_table(
    const std::vector<std::pair<std::string, CategoryScores>>& methods) {
    if (methods.empty()) throw std::invalid_argument("render_comparison_table: no methods");
    auto column = [&](int which) {
        std::vector<double> vals;
        for (const auto& [name, s] : methods)
            vals.push_back(which == 0 ? s.pixel_hist : which == 1 ? s.clip_r_precision : s.clip_iqa);
        return vals;
    };
    // Index of the best and second-best value per column; first occurrence wins
    // on ties so each column carries exactly one marker of each kind.
    auto rank_marks = [](const std::vector<double>& vals) {
        std::size_t best = 0;
        for (std::size_t i = 1; i < vals.size(); ++i)
            if (vals[i] > vals[best]) best = i;
        std::size_t second = vals.size();
        for (std::size_t i = 0; i < vals.size(); ++i) {
            if (i == best) continue;
            if (second == vals.size() || vals[i] > vals[second]) second = i;
        }
        return std::make_pair(best, second);
    };

    std::vector<std::vector<double>> cols = {column(0), column(1), column(2)};
    std::vector<std::pair<std::size_t, std::size_t>> marks;
    for (const auto& c : cols) marks.push_back(rank_marks(c));

    std::size_t name_width = std::string("method").size();
    for (const auto& [name, s] : methods) name_width = std::max(name_width, name.size());

    std::ostringstream out;
    out << pad("method", name_width) << "  pixel_hist  clip_r_precision  clip_iqa\n";
    for (std::size_t row = 0; row < methods.size(); ++row) {
        out << pad(methods[row].first, name_width);
        for (std::size_t c = 0; c < 3; ++c) {
            std::string cell = fmt_score(cols[c][row]);
            if (methods.size() >= 2) {
                if (row == marks[c].first)
                    cell = "*" + cell + "*";
                else if (row == marks[c].second)
                    cell = "_" + cell + "_";
            }
            out << "  " << pad(cell, c == 0 ? 10 : c == 1 ? 16 : 8);
        }
        out << "\n";
    }
    return out.str();
}

void save_report(const MetricReport& report, const std::filesystem::path& path) {
    json per_category = json::object();
    for (const auto& [category, s] : report.per_category) {
        per_category[category] = {{"pixel_hist", s.pixel_hist},
                                  {"clip_r_precision", s.clip_r_precision},
                                  {"clip_iqa", s.clip_iqa}};
    }
    const json j = {{"per_category", per_category},
                    {"aggregate",
                     {{"pixel_hist", report.aggregate.pixel_hist},
                      {"clip_r_precision", report.aggregate.clip_r_precision},
                      {"clip_iqa", report.aggregate.clip_iqa}}},
                    {"metadata",
                     {{"run_id", report.metadata.run_id},
                      {"embedder_id", report.metadata.embedder_id},
                      {"timestamp", report.metadata.timestamp},
                      {"distractor_pool", report.metadata.distractor_pool}}}};
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw IoError("cannot write report: " + path.string());
    f << j.dump(2) << "\n";
}

MetricReport load_report(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw NotFoundError("report not found: " + path.string());
    const json j = json::parse(f, nullptr, false);
    if (j.is_discarded()) throw DataError("malformed report: " + path.string());
    MetricReport report;
    for (const auto& [category, s] : j.at("per_category").items()) {
        CategoryScores scores;
        scores.pixel_hist = s.at("pixel_hist").get<double>();
        scores.clip_r_precision = s.at("clip_r_precision").get<double>();
        scores.clip_iqa = s.at("clip_iqa").get<double>();
        report.per_category.emplace(category, scores);
    }
    report.aggregate.pixel_hist = j.at("aggregate").at("pixel_hist").get<double>();
    report.aggregate.clip_r_precision = j.at("aggregate").at("clip_r_precision").get<double>();
    report.aggregate.clip_iqa = j.at("aggregate").at("clip_iqa").get<double>();
    report.metadata.run_id = j.at("metadata").value("run_id", "");
    report.metadata.embedder_id = j.at("metadata").value("embedder_id", "");
    report.metadata.timestamp = j.at("metadata").value("timestamp", "");
    report.metadata.distractor_pool = j.at("metadata").value("distractor_pool", "");
    return report;
}

MockEmbedder::MockEmbedder() {
    // 8-bin histogram per channel + per-channel mean and stddev = 30 features.
    RandomSource rng(0x5179u, "mock-embedder-projection");
    projection_ = Tensor::randn({64, 30}, rng, 1.0);
}

std::vector<double> MockEmbedder::embed_image(const ImageU8& image) const {
    std::vector<double> features(30, 0.0);
    const ColorHistogram h = compute_color_histogram(image, 8);
    for (int c = 0; c < 3; ++c)
        for (int b = 0; b < 8; ++b) features[static_cast<std::size_t>(c * 8 + b)] = h.counts(c, b);
    const double total = static_cast<double>(image.width) * image.height;
    for (int c = 0; c < 3; ++c) {
        double mean = 0.0, sq = 0.0;
        for (int y = 0; y < image.height; ++y)
            for (int x = 0; x < image.width; ++x) {
                const double v = image.at(x, y, c) / 255.0;
                mean += v;
                sq += v * v;
            }
        mean /= total;
        features[static_cast<std::size_t>(24 + c)] = mean;
        features[static_cast<std::size_t>(27 + c)] = std::sqrt(std::max(0.0, sq / total - mean * mean));
    }
    std::vector<double> out(64, 0.0);
    for (int i = 0; i < 64; ++i)
        for (int j = 0; j < 30; ++j) out[static_cast<std::size_t>(i)] += projection_(i, j) * features[static_cast<std::size_t>(j)];
    normalize(out);
    return out;
}

std::vector<double> MockEmbedder::embed_text(const std::string& text) const {
    std::vector<double> out(64, 0.0);
    std::istringstream stream(text);
    std::string token;
    bool any = false;
    while (stream >> token) {
        any = true;
        RandomSource rng(fnv1a64(token), "mock-embedder-text");
        for (double& v : out) v += rng.normal();
    }
    if (!any) out[0] = 1.0;
    normalize(out);
    return out;
}

RemoteClipEmbedder::RemoteClipEmbedder(std::string endpoint, int dim)
    : endpoint_(std::move(endpoint)), dim_(dim) {}

RemoteClipEmbedder RemoteClipEmbedder::from_environment() {
    const char* endpoint = std::getenv("STYLETUNER_EMBED_ENDPOINT");
    if (endpoint == nullptr)
        throw ValidationError("STYLETUNER_EMBED_ENDPOINT is not set; use --embedder mock offline");
    const char* dim = std::getenv("STYLETUNER_EMBED_DIM");
    return RemoteClipEmbedder(endpoint, dim ? std::atoi(dim) : 512);
}

std::vector<double> RemoteClipEmbedder::request(const std::string& kind,
                                                const std::string& payload) const {
    httplib::Client http(endpoint_);
    const json body = {{"type", kind}, {"input", payload}};
    const auto res = http.Post("/v1/embeddings", body.dump(), "application/json");
    if (!res) throw IoError("embedding endpoint unreachable: " + endpoint_);
    if (res->status != 200)
        throw IoError("embedding endpoint returned status " + std::to_string(res->status));
    const json reply = json::parse(res->body, nullptr, false);
    if (reply.is_discarded() || !reply.contains("embedding"))
        throw SchemaError("embedding endpoint reply missing 'embedding'");
    auto vec = reply.at("embedding").get<std::vector<double>>();
    if (static_cast<int>(vec.size()) != dim_)
        throw SchemaError("embedding endpoint returned wrong dimension");
    normalize(vec);
    return vec;
}

std::vector<double> RemoteClipEmbedder::embed_image(const ImageU8& image) const {
    const auto png = encode_png(image);
    return request("image", base64_encode(png.data(), png.size()));
}

std::vector<double> RemoteClipEmbedder::embed_text(const std::string& text) const {
    return request("text", text);
}

}  // namespace styletuner
