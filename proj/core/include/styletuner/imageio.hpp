#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "styletuner/image.hpp"

namespace styletuner {

// Deterministic PNG encoding (8-bit RGB, non-interlaced, zlib-compressed).
std::vector<std::uint8_t> encode_png(const ImageU8& image);
void write_png(const ImageU8& image, const std::filesystem::path& path);

// Decodes 8-bit grayscale/RGB/RGBA PNGs to RGB; throws DataError on anything
// the reader does not understand, naming the path.
ImageU8 decode_png(const std::vector<std::uint8_t>& bytes, const std::string& origin = "<memory>");
ImageU8 read_png(const std::filesystem::path& path);

}  // namespace styletuner
