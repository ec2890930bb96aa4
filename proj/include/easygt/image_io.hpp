#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "easygt/image.hpp"

namespace easygt {

namespace fs = std::filesystem;

/// Decodes a PNG, JPEG or BMP file. Alpha is dropped; grayscale files are replicated to RGB.
/// Throws NotFound for a missing path and DecodeError for undecodable bytes.
RgbImage load_image(const fs::path& path);
RgbImage decode_image(std::span<const std::uint8_t> bytes);

/// Reads a mask image; any gray level >= 128 is nucleus.
BinaryMask load_mask(const fs::path& path);

std::vector<std::uint8_t> encode_png(const RgbImage& img);
/// 8-bit single-channel PNG, 0 = background, 255 = nucleus.
std::vector<std::uint8_t> encode_mask_png(const BinaryMask& mask);

void save_png(const RgbImage& img, const fs::path& path);
void save_mask_png(const BinaryMask& mask, const fs::path& path);

std::vector<std::uint8_t> read_file(const fs::path& path);
/// Writes to a sibling temp file and renames it over the target.
void write_file_atomic(const fs::path& path, std::span<const std::uint8_t> bytes);

bool is_supported_image(const fs::path& path);
/// Supported image files directly inside dir, sorted by filename.
std::vector<fs::path> list_images(const fs::path& dir);

}  // namespace easygt
