#include "styletuner/image.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace styletuner {

ImageU8::ImageU8(int width_in, int height_in) : width(width_in), height(height_in) {
    if (width < 1 || height < 1) throw std::invalid_argument("image dimensions must be >= 1");
    pixels.assign(static_cast<std::size_t>(width) * height * 3, 0);
}

ImageU8 resize_area(const ImageU8& src, int width, int height) {
    if (width < 1 || height < 1) throw std::invalid_argument("resize_area: bad target size");
    if (src.width == width && src.height == height) return src;
    ImageU8 dst(width, height);
    const double sx = static_cast<double>(src.width) / width;
    const double sy = static_cast<double>(src.height) / height;
    for (int y = 0; y < height; ++y) {
        const int y0 = static_cast<int>(std::floor(y * sy));
        const int y1 = std::max(y0 + 1, static_cast<int>(std::ceil((y + 1) * sy)));
        for (int x = 0; x < width; ++x) {
            const int x0 = static_cast<int>(std::floor(x * sx));
            const int x1 = std::max(x0 + 1, static_cast<int>(std::ceil((x + 1) * sx)));
            for (int c = 0; c < 3; ++c) {
                double acc = 0.0;
                int count = 0;
                for (int yy = y0; yy < y1 && yy < src.height; ++yy)
                    for (int xx = x0; xx < x1 && xx < src.width; ++xx) {
                        acc += src.at(xx, yy, c);
                        ++count;
                    }
                dst.at(x, y, c) = static_cast<std::uint8_t>(std::lround(acc / count));
            }
        }
    }
    return dst;
}

ImageU8 resize_nearest(const ImageU8& src, int width, int height) {
    if (width < 1 || height < 1) throw std::invalid_argument("resize_nearest: bad target size");
    if (src.width == width && src.height == height) return src;
    ImageU8 dst(width, height);
    for (int y = 0; y < height; ++y) {
        const int sy = std::min(src.height - 1, y * src.height / height);
        for (int x = 0; x < width; ++x) {
            const int sx = std::min(src.width - 1, x * src.width / width);
            for (int c = 0; c < 3; ++c) dst.at(x, y, c) = src.at(sx, sy, c);
        }
    }
    return dst;
}

Tensor image_to_latent(const ImageU8& image, int latent_h, int latent_w) {
    const ImageU8 small = resize_area(image, latent_w, latent_h);
    Tensor latent({3, latent_h, latent_w});
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < latent_h; ++y)
            for (int x = 0; x < latent_w; ++x)
                latent(c, y, x) = static_cast<double>(small.at(x, y, c)) / 127.5 - 1.0;
    return latent;
}

ImageU8 latent_to_image(const Tensor& latent, int image_size) {
    if (latent.rank() != 3 || latent.dim(0) != 3)
        throw std::invalid_argument("latent_to_image: latent must be (3,h,w)");
    const int h = latent.dim(1), w = latent.dim(2);
    ImageU8 base(w, h);
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                const double v = (latent(c, y, x) + 1.0) * 127.5;
                base.at(x, y, c) =
                    static_cast<std::uint8_t>(std::clamp(std::lround(v), 0l, 255l));
            }
    return resize_nearest(base, image_size, image_size);
}

}  // namespace styletuner
