#include "styletuner/manifest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include <json.hpp>

#include "styletuner/errors.hpp"
#include "styletuner/imageio.hpp"
#include "styletuner/rng.hpp"

namespace styletuner {

namespace {

using nlohmann::json;

struct Rgb {
    std::uint8_t r, g, b;
};

// Palettes with strong, well-separated channel means so per-category color
// distributions are far apart under Pixel-Hist.
const Rgb kPalettes[][2] = {
    {{220, 60, 40}, {250, 200, 80}},   // ember
    {{30, 90, 200}, {160, 220, 250}},  // glacier
    {{40, 160, 70}, {220, 240, 170}},  // meadow
    {{130, 40, 160}, {240, 180, 240}}, // orchid
    {{200, 120, 30}, {90, 50, 20}},    // amber wood
    {{20, 30, 60}, {200, 210, 230}},   // midnight
    {{180, 30, 90}, {255, 220, 200}},  // rose
    {{60, 60, 60}, {230, 230, 230}},   // graphite
    {{10, 120, 120}, {220, 250, 240}}, // lagoon
    {{150, 150, 20}, {60, 80, 30}},    // olive
    {{240, 90, 140}, {120, 20, 60}},   // berry
    {{90, 130, 240}, {250, 250, 210}}, // periwinkle
};
constexpr int kPaletteCount = static_cast<int>(sizeof(kPalettes) / sizeof(kPalettes[0]));

const char* kObjectPool[] = {"car",  "apple", "tree",  "house", "boat",  "fish",
                             "bird", "cup",   "chair", "lamp",  "dog",   "cat",
                             "vase", "clock", "hat",   "shoe",  "bottle", "flower"};
constexpr int kObjectPoolSize = static_cast<int>(sizeof(kObjectPool) / sizeof(kObjectPool[0]));

enum class Pattern { Stripes, Checker, Rings, Diagonal, Blobs };

ImageU8 render_pattern(Pattern pattern, const Rgb& a, const Rgb& b, int size, int scale,
                       int phase, RandomSource& rng) {
    ImageU8 img(size, size);
    auto put = [&img](int x, int y, const Rgb& c) {
        img.at(x, y, 0) = c.r;
        img.at(x, y, 1) = c.g;
        img.at(x, y, 2) = c.b;
    };
    // Blob centers are drawn up front so pixel loops stay pure.
    std::vector<std::pair<int, int>> centers;
    if (pattern == Pattern::Blobs) {
        for (int i = 0; i < 6; ++i)
            centers.emplace_back(static_cast<int>(rng.next_below(static_cast<std::uint64_t>(size))),
                                 static_cast<int>(rng.next_below(static_cast<std::uint64_t>(size))));
    }
    const int radius = size / 5;
    for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) {
            bool first;
            switch (pattern) {
                case Pattern::Stripes: first = ((x + phase) / scale) % 2 == 0; break;
                case Pattern::Checker:
                    first = (((x + phase) / scale) + ((y + phase) / scale)) % 2 == 0;
                    break;
                case Pattern::Rings: {
                    const double cx = size / 2.0, cy = size / 2.0;
                    const double d = std::sqrt((x - cx) * (x - cx) + (y - cy) * (y - cy));
                    first = (static_cast<int>(d + phase) / scale) % 2 == 0;
                    break;
                }
                case Pattern::Diagonal: first = ((x + y + phase) / scale) % 2 == 0; break;
                case Pattern::Blobs: {
                    first = true;
                    for (const auto& [bx, by] : centers) {
                        const int dx = x - bx, dy = y - by;
                        if (dx * dx + dy * dy < radius * radius) {
                            first = false;
                            break;
                        }
                    }
                    break;
                }
            }
            put(x, y, first ? a : b);
        }
    }
    return img;
}

}  // namespace

StyleCategoryManifest load_manifest(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw NotFoundError("manifest not found: " + path.string());
    const json j = json::parse(f, nullptr, false);
    if (j.is_discarded()) throw ValidationError("manifest is not valid JSON: " + path.string());

    StyleCategoryManifest m;
    if (!j.contains("category_id") || !j.at("category_id").is_string() ||
        j.at("category_id").get<std::string>().empty())
        throw ValidationError("manifest field 'category_id' must be a non-empty string");
    m.category_id = j.at("category_id").get<std::string>();

    if (!j.contains("reference_images") || !j.at("reference_images").is_array() ||
        j.at("reference_images").empty())
        throw ValidationError("manifest field 'reference_images' must be a non-empty array");
    const auto base = path.parent_path();
    for (const json& entry : j.at("reference_images")) {
        if (!entry.is_string())
            throw ValidationError("manifest field 'reference_images' must hold path strings");
        std::filesystem::path p = entry.get<std::string>();
        if (p.is_relative()) p = base / p;
        m.reference_image_paths.push_back(p);
    }

    if (!j.contains("objects") || !j.at("objects").is_array() || j.at("objects").empty())
        throw ValidationError("manifest field 'objects' must be a non-empty array");
    std::set<std::string> seen;
    for (const json& entry : j.at("objects")) {
        if (!entry.is_string() || entry.get<std::string>().empty())
            throw ValidationError("manifest field 'objects' must hold non-empty strings");
        const auto name = entry.get<std::string>();
        if (!seen.insert(name).second)
            throw ValidationError("manifest field 'objects' contains duplicate: " + name);
        m.object_names.push_back(name);
    }

    m.placeholder = j.value("placeholder", std::string("[V*]"));
    if (m.placeholder.empty())
        throw ValidationError("manifest field 'placeholder' must be non-empty");
    if (j.contains("cached_keywords") && j.at("cached_keywords").is_object()) {
        StyleKeywords kw;
        kw.keywords = j.at("cached_keywords").value("keywords", "");
        kw.raw_response = j.at("cached_keywords").value("raw_response", "");
        if (!kw.keywords.empty()) m.cached_keywords = kw;
    }

    // Probe every image now so later stages can assume decodability.
    for (const auto& p : m.reference_image_paths) {
        if (!std::filesystem::exists(p))
            throw DataError("manifest references missing image: " + p.string());
        read_png(p);
    }
    return m;
}

void save_manifest(const StyleCategoryManifest& manifest, const std::filesystem::path& path) {
    json refs = json::array();
    const auto base = path.parent_path();
    for (const auto& p : manifest.reference_image_paths) {
        refs.push_back(p.lexically_relative(base).generic_string());
    }
    json j = {{"category_id", manifest.category_id},
              {"reference_images", refs},
              {"objects", manifest.object_names},
              {"placeholder", manifest.placeholder}};
    if (manifest.cached_keywords) {
        j["cached_keywords"] = {{"keywords", manifest.cached_keywords->keywords},
                                {"raw_response", manifest.cached_keywords->raw_response}};
    }
    std::filesystem::create_directories(base);
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw IoError("cannot write manifest: " + path.string());
    f << j.dump(2) << "\n";
}

std::vector<ImageU8> load_reference_images(const StyleCategoryManifest& manifest) {
    std::vector<ImageU8> images;
    images.reserve(manifest.reference_image_paths.size());
    for (const auto& p : manifest.reference_image_paths) images.push_back(read_png(p));
    return images;
}

std::vector<std::filesystem::path> make_toy_corpus(const std::filesystem::path& output_dir,
                                                   int num_categories, std::uint64_t seed,
                                                   int image_size) {
    if (num_categories < 1)
        throw std::invalid_argument("make_toy_corpus: num_categories must be >= 1");
    if (image_size < 8) throw std::invalid_argument("make_toy_corpus: image_size must be >= 8");
    std::error_code ec;
    std::filesystem::create_directories(output_dir, ec);
    if (ec) throw IoError("cannot create corpus directory: " + output_dir.string());

    std::vector<std::filesystem::path> manifests;
    for (int cat = 0; cat < num_categories; ++cat) {
        RandomSource rng(seed, "toy-corpus/" + std::to_string(cat));
        const auto pattern = static_cast<Pattern>(rng.next_below(5));
        const auto& palette = kPalettes[(cat + static_cast<int>(rng.next_below(3))) % kPaletteCount];

        char cat_name[32];
        std::snprintf(cat_name, sizeof(cat_name), "category_%02d", cat);
        const auto cat_dir = output_dir / cat_name;
        std::filesystem::create_directories(cat_dir, ec);
        if (ec) throw IoError("cannot create category directory: " + cat_dir.string());

        StyleCategoryManifest m;
        m.category_id = cat_name;
        const int scale = 3 + static_cast<int>(rng.next_below(4));
        for (int ref = 0; ref < 3; ++ref) {
            const int phase = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(scale * 2)));
            const ImageU8 img = render_pattern(pattern, palette[0], palette[1], image_size,
                                               scale, phase, rng);
            const auto img_path = cat_dir / ("ref_" + std::to_string(ref) + ".png");
            write_png(img, img_path);
            m.reference_image_paths.push_back(img_path);
        }
        const int first_obj = static_cast<int>(rng.next_below(kObjectPoolSize));
        m.object_names.push_back(kObjectPool[first_obj]);
        m.object_names.push_back(kObjectPool[(first_obj + 1 + static_cast<int>(rng.next_below(
                                                  kObjectPoolSize - 1))) % kObjectPoolSize]);
        if (m.object_names[0] == m.object_names[1])
            m.object_names[1] = kObjectPool[(first_obj + 1) % kObjectPoolSize];

        const auto manifest_path = cat_dir / "manifest.json";
        save_manifest(m, manifest_path);
        manifests.push_back(manifest_path);
    }
    return manifests;
}

}  // namespace styletuner
