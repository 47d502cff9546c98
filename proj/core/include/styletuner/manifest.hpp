#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "styletuner/image.hpp"
#include "styletuner/style_reasoning.hpp"

namespace styletuner {

// One style category: reference images, the objects used for generation and
// evaluation prompts, and an optional cached keyword result. Manifests are
// JSON files; image paths resolve relative to the manifest's directory.
struct StyleCategoryManifest {
    std::string category_id;
    std::vector<std::filesystem::path> reference_image_paths;
    std::vector<std::string> object_names;
    std::string placeholder = "[V*]";
    std::optional<StyleKeywords> cached_keywords;
};

// Parses and validates; probes every referenced image for decodability.
// Throws NotFoundError (missing file), ValidationError (schema, names the
// field) or DataError (undecodable image, names the path).
StyleCategoryManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const StyleCategoryManifest& manifest, const std::filesystem::path& path);

std::vector<ImageU8> load_reference_images(const StyleCategoryManifest& manifest);

// Synthetic desk-scale corpus: procedural textures (stripes, checker, rings,
// diagonal weave, noise blobs) over fixed palettes, three reference images
// per category. Deterministic per seed; returns the manifest paths.
std::vector<std::filesystem::path> make_toy_corpus(const std::filesystem::path& output_dir,
                                                   int num_categories, std::uint64_t seed,
                                                   int image_size = 64);

}  // namespace styletuner
