#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "easygt/error.hpp"

namespace easygt {

struct Rgb {
    std::uint8_t r = 0;
    std::uint8_t g = 0;
    std::uint8_t b = 0;

    friend bool operator==(const Rgb&, const Rgb&) = default;
};

/// C, M, Y in [0, 1]; K is the 8-bit black level min(255-R, 255-G, 255-B).
struct Cmyk {
    double c = 0.0;
    double m = 0.0;
    double y = 0.0;
    std::uint8_t k = 0;

    friend bool operator==(const Cmyk&, const Cmyk&) = default;
};

enum class Label : std::uint8_t { background = 0, nucleus = 1 };

/// Row-major raster with at least one pixel.
template <typename Pixel>
class Raster {
public:
    using value_type = Pixel;

    Raster(int width, int height, Pixel fill = Pixel{})
        : width_(checked_dim(width)), height_(checked_dim(height)),
          pixels_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill) {}

    Raster(int width, int height, std::vector<Pixel> pixels)
        : width_(checked_dim(width)), height_(checked_dim(height)), pixels_(std::move(pixels)) {
        if (pixels_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height))
            throw Error(Errc::invalid_argument, "pixel count does not match width x height");
    }

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    std::size_t size() const noexcept { return pixels_.size(); }

    Pixel& at(int x, int y) { return pixels_[index(x, y)]; }
    const Pixel& at(int x, int y) const { return pixels_[index(x, y)]; }

    std::span<Pixel> pixels() noexcept { return pixels_; }
    std::span<const Pixel> pixels() const noexcept { return pixels_; }

    bool same_shape(const auto& other) const noexcept {
        return width_ == other.width() && height_ == other.height();
    }

    friend bool operator==(const Raster&, const Raster&) = default;

private:
    static int checked_dim(int v) {
        if (v < 1)
            throw Error(Errc::invalid_argument, "image dimensions must be >= 1");
        return v;
    }

    std::size_t index(int x, int y) const noexcept {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
    }

    int width_;
    int height_;
    std::vector<Pixel> pixels_;
};

using RgbImage = Raster<Rgb>;
using GrayImage = Raster<std::uint8_t>;
using CmykImage = Raster<Cmyk>;
using BinaryMask = Raster<Label>;

inline std::size_t count_nucleus(const BinaryMask& mask) {
    std::size_t n = 0;
    for (Label l : mask.pixels())
        n += l == Label::nucleus ? 1 : 0;
    return n;
}

}  // namespace easygt
