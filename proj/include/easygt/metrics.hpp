#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "easygt/image.hpp"

namespace easygt {

struct ConfusionCounts {
    std::uint64_t tp = 0;
    std::uint64_t fp = 0;
    std::uint64_t fn = 0;
    std::uint64_t tn = 0;

    friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

struct EvalResult {
    double sensitivity = 0.0;
    double precision = 0.0;
    double dsc = 0.0;
};

/// Throws ShapeMismatch when the masks differ in size.
ConfusionCounts confusion_counts(const BinaryMask& pred, const BinaryMask& truth);

/// Sensitivity, precision and Dice. A 0/0 ratio scores 1.0 when both masks are empty and
/// 0.0 otherwise.
EvalResult evaluate(const ConfusionCounts& c) noexcept;

struct SweepRow {
    double alpha = 0.0;
    double sensitivity = 0.0;  // macro-averaged over images, in [0, 1]
    double precision = 0.0;
    double dsc = 0.0;
};

struct SweepReport {
    std::vector<SweepRow> rows;
    double best_alpha = 0.0;  // highest mean DSC, ties to the smallest alpha
    std::size_t dataset_size = 0;
    std::size_t failures = 0;  // images excluded because they could not be segmented
    std::vector<std::size_t> failed_indices;
};

/// Segments every image at each alpha (offset 0) and macro-averages the criteria over the
/// images that segment successfully. Throws EmptyDataset when there is nothing to average.
SweepReport alpha_sweep(std::span<const RgbImage> images, std::span<const BinaryMask> truths,
                        std::span<const double> alphas);

/// Inclusive grid "start:stop:step"; stop is reached within 1e-9.
std::vector<double> parse_alpha_grid(const std::string& spec);
std::vector<double> default_alpha_grid();

/// Percentage of a [0, 1] ratio with two decimals, e.g. 0.95423 -> "95.42".
std::string format_pct(double ratio);
/// Shortest fixed-point rendering up to 6 decimals: 0.3 -> "0.3", 1 -> "1".
std::string format_alpha(double alpha);

/// `alpha,sensitivity_pct,precision_pct,dsc_pct` followed by one line per row.
std::string sweep_to_csv(const SweepReport& report);
std::string sweep_to_json(const SweepReport& report);

}  // namespace easygt
