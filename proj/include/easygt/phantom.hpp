#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "easygt/image.hpp"

namespace easygt {

struct Ellipse {
    double cx = 0.0;
    double cy = 0.0;
    double semi_major = 1.0;  // along the rotated x axis
    double semi_minor = 1.0;
    double angle = 0.0;  // radians
};

/// Per-object color: the object's RGB is drawn once from N(mean, sigma) per channel.
struct ColorDistribution {
    std::array<double, 3> mean{};
    std::array<double, 3> sigma{};
};

/// Synthetic stained smear: a pale background, red-cell discs, one white cell with a
/// cytoplasm disc and a 1-5 lobed nucleus. The nucleus lobes define the ground truth.
struct PhantomSpec {
    int width = 575;
    int height = 575;
    std::vector<Ellipse> nucleus_lobes;
    Ellipse cytoplasm;
    std::vector<Ellipse> red_cells;

    ColorDistribution background{{232, 208, 214}, {6, 6, 6}};
    ColorDistribution red_cell{{214, 150, 160}, {8, 8, 8}};
    ColorDistribution cytoplasm_color{{195, 161, 212}, {8, 8, 8}};
    ColorDistribution nucleus_color{{95, 45, 150}, {12, 12, 12}};

    double noise_sigma = 5.0;     // independent per channel
    double texture_sigma = 28.0;  // shared across channels, nucleus only
    double nucleus_edge = 6.0;    // width of the soft nucleus boundary, pixels
    double cell_edge = 3.0;
    double red_cell_edge = 2.0;

    std::uint64_t seed = 0;
};

struct Phantom {
    RgbImage image;
    BinaryMask truth;
};

/// Deterministic for a given spec. Throws InvalidSpec when the nucleus is missing, has more
/// than five lobes, leaves the frame, or rasterizes to no pixels.
Phantom generate_phantom(const PhantomSpec& spec);

/// Draws cell geometry and colors from the seed. Geometry scales with min(width, height) / 575.
PhantomSpec random_phantom_spec(std::uint64_t seed, int width = 575, int height = 575);

/// Seed of the i-th phantom of a suite.
std::uint64_t suite_member_seed(std::uint64_t suite_seed, std::size_t index) noexcept;

std::vector<Phantom> generate_suite(std::size_t count, std::uint64_t seed, int width = 575, int height = 575);

}  // namespace easygt
