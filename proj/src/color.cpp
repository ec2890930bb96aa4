#include "easygt/color.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace easygt {

namespace {

std::uint8_t clamp_u8(std::uint64_t v) noexcept {
    return static_cast<std::uint8_t>(std::min<std::uint64_t>(v, 255));
}

// Nearest integer to 255 * frac with ties rounded up. frac is a ratio of 8-bit integers, so
// any true half lies at least 1/510 away from every non-half value.
std::uint8_t scale_unit(double frac) noexcept {
    const double v = std::floor(frac * 255.0 + 0.5 + 1e-9);
    return static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
}

}  // namespace

std::uint8_t luma(Rgb p) noexcept {
    const unsigned sum = 299u * p.r + 587u * p.g + 114u * p.b + 500u;
    return static_cast<std::uint8_t>(sum / 1000u);
}

GrayImage to_grayscale(const RgbImage& img) {
    GrayImage out(img.width(), img.height());
    auto src = img.pixels();
    auto dst = out.pixels();
    for (std::size_t i = 0; i < src.size(); ++i)
        dst[i] = luma(src[i]);
    return out;
}

RgbImage color_balance(const RgbImage& img) {
    std::uint64_t sum_gray = 0;
    std::array<std::uint64_t, 3> sums{};
    for (Rgb p : img.pixels()) {
        sum_gray += luma(p);
        sums[0] += p.r;
        sums[1] += p.g;
        sums[2] += p.b;
    }
    for (std::uint64_t s : sums) {
        if (s == 0)
            throw Error(Errc::degenerate_channel, "a color channel has zero mean");
    }

    // mean(g) / mean(c) * v == v * sum_gray / sum_c. Rounded exactly in integer arithmetic;
    // 2 * 255 * 255 * pixel_count fits 64 bits for any image under ~1.4e14 pixels.
    auto scale = [&](std::uint8_t v, std::uint64_t sum_c) {
        const std::uint64_t num = 2 * static_cast<std::uint64_t>(v) * sum_gray + sum_c;
        return clamp_u8(num / (2 * sum_c));
    };

    // Per-channel lookup tables; the scale factor is constant over the image.
    std::array<std::array<std::uint8_t, 256>, 3> lut{};
    for (int c = 0; c < 3; ++c)
        for (int v = 0; v < 256; ++v)
            lut[c][v] = scale(static_cast<std::uint8_t>(v), sums[c]);

    RgbImage out(img.width(), img.height());
    auto src = img.pixels();
    auto dst = out.pixels();
    for (std::size_t i = 0; i < src.size(); ++i)
        dst[i] = Rgb{lut[0][src[i].r], lut[1][src[i].g], lut[2][src[i].b]};
    return out;
}

Cmyk to_cmyk(Rgb p) noexcept {
    const int c1 = 255 - p.r;
    const int m1 = 255 - p.g;
    const int y1 = 255 - p.b;
    const int k = std::min({c1, m1, y1});
    Cmyk out;
    out.k = static_cast<std::uint8_t>(k);
    if (k == 255)
        return out;
    const double denom = 255.0 - k;
    out.c = (c1 - k) / denom;
    out.m = (m1 - k) / denom;
    out.y = (y1 - k) / denom;
    return out;
}

CmykImage rgb_to_cmyk(const RgbImage& img) {
    CmykImage out(img.width(), img.height());
    auto src = img.pixels();
    auto dst = out.pixels();
    for (std::size_t i = 0; i < src.size(); ++i)
        dst[i] = to_cmyk(src[i]);
    return out;
}

GrayImage extract_m_channel(const CmykImage& img) {
    GrayImage out(img.width(), img.height());
    auto src = img.pixels();
    auto dst = out.pixels();
    for (std::size_t i = 0; i < src.size(); ++i)
        dst[i] = scale_unit(src[i].m);
    return out;
}

GrayImage magenta_plane(const RgbImage& img) {
    try {
        return extract_m_channel(rgb_to_cmyk(color_balance(img)));
    } catch (const Error& e) {
        if (e.code() != Errc::degenerate_channel)
            throw;
    }
    return extract_m_channel(rgb_to_cmyk(img));
}

}  // namespace easygt
