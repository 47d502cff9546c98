#pragma once

#include <cstdint>
#include <vector>

#include "styletuner/tensor.hpp"

namespace styletuner {

// Interleaved 8-bit RGB image.
struct ImageU8 {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;  // size = width * height * 3

    ImageU8() = default;
    ImageU8(int width_in, int height_in);

    std::uint8_t& at(int x, int y, int c) {
        return pixels[static_cast<std::size_t>((y * width + x) * 3 + c)];
    }
    std::uint8_t at(int x, int y, int c) const {
        return pixels[static_cast<std::size_t>((y * width + x) * 3 + c)];
    }

    bool operator==(const ImageU8&) const = default;
};

// Box-average resampling; exact averages when the ratio is integral.
ImageU8 resize_area(const ImageU8& src, int width, int height);
// Nearest-neighbour resampling; preserves the palette exactly.
ImageU8 resize_nearest(const ImageU8& src, int width, int height);

// Pixel <-> latent conversions for the VAE-free toy backbone. Latents live in
// [-1, 1] with shape (3, h, w); images are downsampled by box-averaging on the
// way in and upsampled nearest-neighbour on the way out.
Tensor image_to_latent(const ImageU8& image, int latent_h, int latent_w);
ImageU8 latent_to_image(const Tensor& latent, int image_size);

}  // namespace styletuner
