#pragma once

#include <array>
#include <cstdint>
#include <utility>

#include "easygt/image.hpp"

namespace easygt {

inline constexpr int kLevels = 256;
inline constexpr double kDefaultAlpha = 0.3;

struct Histogram {
    std::array<std::uint64_t, kLevels> counts{};
    std::uint64_t total = 0;
    bool zero_ignored = false;

    int occupied_bins() const noexcept;
};

/// Thresholds for one image together with the annotator's offset.
struct ThresholdSet {
    double thv1 = 0.0;   // two-class threshold
    double thv2 = 0.0;   // upper three-class threshold
    double alpha = kDefaultAlpha;
    double uthv = 0.0;   // alpha * thv1 + (1 - alpha) * thv2
    int user_offset = 0;
    double effective = 0.0;  // uthv + user_offset clamped to [0, 255]
};

Histogram build_histogram(const GrayImage& img, bool ignore_zero);

/// Threshold t in [0, 254] maximising the two-class between-class variance with classes
/// [0..t] and (t..255]. Ties resolve to the smallest t. Throws DegenerateHistogram when fewer
/// than two bins are occupied.
int otsu_two_class(const Histogram& h);

/// Pair (t1, t2), t1 < t2 <= 254, maximising the three-class between-class variance with
/// classes [0..t1], (t1..t2], (t2..255]. Ties resolve lexicographically smallest. Throws
/// DegenerateHistogram when fewer than three bins are occupied.
std::pair<int, int> otsu_three_class(const Histogram& h);

/// Convex combination alpha * thv1 + (1 - alpha) * thv2; throws InvalidAlpha outside [0, 1].
double combine_thresholds(double thv1, double thv2, double alpha);

/// uthv + offset clamped to [0, 255].
double effective_threshold(double uthv, int user_offset) noexcept;

/// Nucleus iff value > threshold.
BinaryMask apply_threshold(const GrayImage& img, double threshold);

/// Histogram-derived thresholds of an already computed magenta plane.
ThresholdSet compute_thresholds(const GrayImage& magenta, double alpha, int user_offset);

struct Segmentation {
    BinaryMask mask;
    ThresholdSet thresholds;
};

/// Full pipeline: balance, CMYK magenta plane, zero-ignoring histogram, both Otsu searches,
/// fusion and the final cut at uthv + user_offset.
Segmentation segment(const RgbImage& img, double alpha, int user_offset = 0);

}  // namespace easygt
