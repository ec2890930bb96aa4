#include "easygt/threshold.hpp"

#include <algorithm>
#include <limits>

#include "easygt/color.hpp"

namespace easygt {

namespace {

// Zeroth and first cumulative moments: n[t] = sum_{i<=t} h[i], s[t] = sum_{i<=t} i h[i].
struct Moments {
    std::array<std::uint64_t, kLevels> n{};
    std::array<std::uint64_t, kLevels> s{};

    explicit Moments(const Histogram& h) {
        std::uint64_t cn = 0, cs = 0;
        for (int i = 0; i < kLevels; ++i) {
            cn += h.counts[i];
            cs += h.counts[i] * static_cast<std::uint64_t>(i);
            n[i] = cn;
            s[i] = cs;
        }
    }
};

// Contribution sum_k S_k^2 / n_k of one class. Maximising the sum over classes is the same
// as maximising between-class variance, which equals (sum - S^2 / N) / N.
inline double class_term(std::uint64_t count, std::uint64_t moment) noexcept {
    if (count == 0)
        return 0.0;
    const double m = static_cast<double>(moment);
    return m * m / static_cast<double>(count);
}

}  // namespace

int Histogram::occupied_bins() const noexcept {
    return static_cast<int>(std::count_if(counts.begin(), counts.end(), [](std::uint64_t c) { return c > 0; }));
}

Histogram build_histogram(const GrayImage& img, bool ignore_zero) {
    Histogram h;
    for (std::uint8_t v : img.pixels())
        ++h.counts[v];
    h.zero_ignored = ignore_zero;
    if (ignore_zero)
        h.counts[0] = 0;
    for (std::uint64_t c : h.counts)
        h.total += c;
    return h;
}

int otsu_two_class(const Histogram& h) {
    if (h.occupied_bins() < 2)
        throw Error(Errc::degenerate_histogram, "two-class threshold needs at least 2 occupied bins");
    const Moments mo(h);
    const std::uint64_t n_all = mo.n[kLevels - 1];
    const std::uint64_t s_all = mo.s[kLevels - 1];

    int best_t = 0;
    double best = -std::numeric_limits<double>::infinity();
    for (int t = 0; t < kLevels - 1; ++t) {
        const double j = class_term(mo.n[t], mo.s[t]) + class_term(n_all - mo.n[t], s_all - mo.s[t]);
        if (j > best) {
            best = j;
            best_t = t;
        }
    }
    return best_t;
}

std::pair<int, int> otsu_three_class(const Histogram& h) {
    if (h.occupied_bins() < 3)
        throw Error(Errc::degenerate_histogram, "three-class thresholds need at least 3 occupied bins");
    const Moments mo(h);
    const std::uint64_t n_all = mo.n[kLevels - 1];
    const std::uint64_t s_all = mo.s[kLevels - 1];

    std::pair<int, int> best_pair{0, 1};
    double best = -std::numeric_limits<double>::infinity();
    for (int t1 = 0; t1 < kLevels - 2; ++t1) {
        const double low = class_term(mo.n[t1], mo.s[t1]);
        for (int t2 = t1 + 1; t2 < kLevels - 1; ++t2) {
            const double j = low + class_term(mo.n[t2] - mo.n[t1], mo.s[t2] - mo.s[t1]) +
                             class_term(n_all - mo.n[t2], s_all - mo.s[t2]);
            if (j > best) {
                best = j;
                best_pair = {t1, t2};
            }
        }
    }
    return best_pair;
}

double combine_thresholds(double thv1, double thv2, double alpha) {
    if (!(alpha >= 0.0 && alpha <= 1.0))
        throw Error(Errc::invalid_alpha, "alpha must be in [0,1]");
    return alpha * thv1 + (1.0 - alpha) * thv2;
}

double effective_threshold(double uthv, int user_offset) noexcept {
    return std::clamp(uthv + user_offset, 0.0, 255.0);
}

BinaryMask apply_threshold(const GrayImage& img, double threshold) {
    BinaryMask mask(img.width(), img.height());
    auto src = img.pixels();
    auto dst = mask.pixels();
    for (std::size_t i = 0; i < src.size(); ++i)
        dst[i] = src[i] > threshold ? Label::nucleus : Label::background;
    return mask;
}

ThresholdSet compute_thresholds(const GrayImage& magenta, double alpha, int user_offset) {
    if (!(alpha >= 0.0 && alpha <= 1.0))
        throw Error(Errc::invalid_alpha, "alpha must be in [0,1]");
    const Histogram h = build_histogram(magenta, /*ignore_zero=*/true);
    ThresholdSet ts;
    ts.thv1 = otsu_two_class(h);
    ts.thv2 = otsu_three_class(h).second;
    ts.alpha = alpha;
    ts.uthv = combine_thresholds(ts.thv1, ts.thv2, alpha);
    ts.user_offset = user_offset;
    ts.effective = effective_threshold(ts.uthv, user_offset);
    return ts;
}

Segmentation segment(const RgbImage& img, double alpha, int user_offset) {
    if (!(alpha >= 0.0 && alpha <= 1.0))
        throw Error(Errc::invalid_alpha, "alpha must be in [0,1]");
    const GrayImage magenta = magenta_plane(img);
    ThresholdSet ts = compute_thresholds(magenta, alpha, user_offset);
    return {apply_threshold(magenta, ts.effective), ts};
}

}  // namespace easygt
