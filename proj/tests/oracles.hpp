#pragma once

// Brute-force reference searches used to check the Otsu implementations. They evaluate the
// textbook definitions directly (class probabilities, class means, global mean) in long
// double and share no code with the library.

#include <array>
#include <cstdint>
#include <utility>

namespace easygt::testing {

using Counts = std::array<std::uint64_t, 256>;

struct ClassStats {
    long double weight = 0;  // probability mass
    long double mean = 0;
    long double variance = 0;
};

inline ClassStats class_stats(const Counts& h, int lo, int hi, long double total) {
    long double w = 0, m = 0;
    for (int i = lo; i <= hi; ++i) {
        w += h[i];
        m += static_cast<long double>(i) * h[i];
    }
    ClassStats s;
    s.weight = w / total;
    if (w == 0)
        return s;
    s.mean = m / w;
    long double v = 0;
    for (int i = lo; i <= hi; ++i)
        v += h[i] * (i - s.mean) * (i - s.mean);
    s.variance = v / w;
    return s;
}

inline long double total_of(const Counts& h) {
    long double t = 0;
    for (auto c : h)
        t += c;
    return t;
}

/// argmax_t w0 * w1 * (mu0 - mu1)^2 over t in [0, 254], smallest t on ties.
inline int oracle_two_class(const Counts& h) {
    const long double total = total_of(h);
    int best_t = 0;
    long double best = -1;
    for (int t = 0; t <= 254; ++t) {
        const ClassStats a = class_stats(h, 0, t, total);
        const ClassStats b = class_stats(h, t + 1, 255, total);
        const long double d = a.mean - b.mean;
        const long double v = a.weight * b.weight * d * d;
        if (v > best) {
            best = v;
            best_t = t;
        }
    }
    return best_t;
}

/// argmin_t of the within-class variance w0 s0^2 + w1 s1^2.
inline int oracle_two_class_within(const Counts& h) {
    const long double total = total_of(h);
    int best_t = 0;
    long double best = 1e300L;
    for (int t = 0; t <= 254; ++t) {
        const ClassStats a = class_stats(h, 0, t, total);
        const ClassStats b = class_stats(h, t + 1, 255, total);
        const long double v = a.weight * a.variance + b.weight * b.variance;
        if (v < best) {
            best = v;
            best_t = t;
        }
    }
    return best_t;
}

/// argmax over 0 <= t1 < t2 <= 254 of sum_k w_k (mu_k - mu)^2. The middle class is grown
/// one bin at a time, so the search is O(L^2).
inline std::pair<int, int> oracle_three_class(const Counts& h) {
    const long double total = total_of(h);
    long double global_sum = 0;
    for (int i = 0; i < 256; ++i)
        global_sum += static_cast<long double>(i) * h[i];
    const long double mu = global_sum / total;

    auto term = [&](long double n, long double s) {
        if (n == 0)
            return 0.0L;
        const long double d = s / n - mu;
        return (n / total) * d * d;
    };

    std::pair<int, int> best_pair{0, 1};
    long double best = -1;
    long double low_n = 0, low_s = 0;
    for (int t1 = 0; t1 <= 253; ++t1) {
        low_n += h[t1];
        low_s += static_cast<long double>(t1) * h[t1];
        long double mid_n = 0, mid_s = 0;
        for (int t2 = t1 + 1; t2 <= 254; ++t2) {
            mid_n += h[t2];
            mid_s += static_cast<long double>(t2) * h[t2];
            const long double high_n = total - low_n - mid_n;
            const long double high_s = global_sum - low_s - mid_s;
            const long double v = term(low_n, low_s) + term(mid_n, mid_s) + term(high_n, high_s);
            if (v > best) {
                best = v;
                best_pair = {t1, t2};
            }
        }
    }
    return best_pair;
}

/// argmin over pairs of the within-class variance, direct O(L^3) evaluation.
inline std::pair<int, int> oracle_three_class_within(const Counts& h) {
    const long double total = total_of(h);
    std::pair<int, int> best_pair{0, 1};
    long double best = 1e300L;
    for (int t1 = 0; t1 <= 253; ++t1) {
        const ClassStats a = class_stats(h, 0, t1, total);
        for (int t2 = t1 + 1; t2 <= 254; ++t2) {
            const ClassStats b = class_stats(h, t1 + 1, t2, total);
            const ClassStats c = class_stats(h, t2 + 1, 255, total);
            const long double v = a.weight * a.variance + b.weight * b.variance + c.weight * c.variance;
            if (v < best) {
                best = v;
                best_pair = {t1, t2};
            }
        }
    }
    return best_pair;
}

}  // namespace easygt::testing
