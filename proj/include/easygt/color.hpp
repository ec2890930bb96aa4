#pragma once

#include <cstdint>

#include "easygt/image.hpp"

namespace easygt {

/// BT.601 luma, round half up: (299 R + 587 G + 114 B + 500) / 1000.
std::uint8_t luma(Rgb p) noexcept;

GrayImage to_grayscale(const RgbImage& img);

/// Gray-world balance: every channel is scaled by mean(gray) / mean(channel), where gray is
/// the luma of the input image. Results are rounded half up and clamped to [0, 255].
/// Throws DegenerateChannel when a channel mean is zero.
RgbImage color_balance(const RgbImage& img);

/// Per-pixel CMYK with C, M, Y normalised by (255 - K). A pure black pixel (K = 255) maps to
/// C = M = Y = 0.
Cmyk to_cmyk(Rgb p) noexcept;
CmykImage rgb_to_cmyk(const RgbImage& img);

/// Magenta plane scaled to 0..255 (round half up).
GrayImage extract_m_channel(const CmykImage& img);

/// color_balance -> rgb_to_cmyk -> extract_m_channel. If the balance is degenerate the
/// unbalanced image is converted instead.
GrayImage magenta_plane(const RgbImage& img);

}  // namespace easygt
