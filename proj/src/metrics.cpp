#include "easygt/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include <json.hpp>

#include "easygt/color.hpp"
#include "easygt/threshold.hpp"

namespace easygt {

namespace {

// n / d with the agreement convention for d == 0.
double ratio(std::uint64_t n, std::uint64_t d, bool both_empty) noexcept {
    if (d == 0)
        return both_empty ? 1.0 : 0.0;
    return static_cast<double>(n) / static_cast<double>(d);
}

double round_pct(double ratio) {
    return std::round(ratio * 10000.0) / 100.0;
}

double parse_number(const std::string& text, const std::string& spec) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(text, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != text.size() || !std::isfinite(v))
        throw Error(Errc::invalid_argument, "malformed alpha grid '" + spec + "'");
    return v;
}

}  // namespace

ConfusionCounts confusion_counts(const BinaryMask& pred, const BinaryMask& truth) {
    if (!pred.same_shape(truth))
        throw Error(Errc::shape_mismatch, "prediction " + std::to_string(pred.width()) + "x" +
                                              std::to_string(pred.height()) + " vs truth " +
                                              std::to_string(truth.width()) + "x" + std::to_string(truth.height()));
    ConfusionCounts c;
    auto p = pred.pixels();
    auto t = truth.pixels();
    for (std::size_t i = 0; i < p.size(); ++i) {
        const bool pn = p[i] == Label::nucleus;
        const bool tn = t[i] == Label::nucleus;
        if (pn && tn)
            ++c.tp;
        else if (pn)
            ++c.fp;
        else if (tn)
            ++c.fn;
        else
            ++c.tn;
    }
    return c;
}

EvalResult evaluate(const ConfusionCounts& c) noexcept {
    const bool both_empty = c.tp == 0 && c.fp == 0 && c.fn == 0;
    EvalResult r;
    r.sensitivity = ratio(c.tp, c.tp + c.fn, both_empty);
    r.precision = ratio(c.tp, c.tp + c.fp, both_empty);
    r.dsc = ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn, both_empty);
    return r;
}

SweepReport alpha_sweep(std::span<const RgbImage> images, std::span<const BinaryMask> truths,
                        std::span<const double> alphas) {
    if (images.size() != truths.size())
        throw Error(Errc::invalid_argument, "images and truths must have the same count");
    if (images.empty())
        throw Error(Errc::empty_dataset, "no images to evaluate");
    if (alphas.empty())
        throw Error(Errc::invalid_argument, "alpha grid is empty");
    for (double a : alphas) {
        if (!(a >= 0.0 && a <= 1.0))
            throw Error(Errc::invalid_alpha, "alpha must be in [0,1]");
    }

    SweepReport report;
    report.dataset_size = images.size();
    report.rows.resize(alphas.size());
    for (std::size_t k = 0; k < alphas.size(); ++k)
        report.rows[k].alpha = alphas[k];

    std::size_t used = 0;
    for (std::size_t i = 0; i < images.size(); ++i) {
        if (!images[i].same_shape(truths[i]))
            throw Error(Errc::shape_mismatch, "image " + std::to_string(i) + " does not match its truth mask");
        // The magenta plane and both Otsu thresholds do not depend on alpha.
        GrayImage magenta = magenta_plane(images[i]);
        ThresholdSet base;
        try {
            base = compute_thresholds(magenta, alphas[0], 0);
        } catch (const Error& e) {
            if (!e.is_degenerate())
                throw;
            report.failed_indices.push_back(i);
            continue;
        }
        ++used;
        for (std::size_t k = 0; k < alphas.size(); ++k) {
            const double uthv = combine_thresholds(base.thv1, base.thv2, alphas[k]);
            const EvalResult r =
                evaluate(confusion_counts(apply_threshold(magenta, effective_threshold(uthv, 0)), truths[i]));
            report.rows[k].sensitivity += r.sensitivity;
            report.rows[k].precision += r.precision;
            report.rows[k].dsc += r.dsc;
        }
    }
    report.failures = report.failed_indices.size();
    if (used == 0)
        throw Error(Errc::empty_dataset, "every image failed to segment");

    for (SweepRow& row : report.rows) {
        row.sensitivity /= static_cast<double>(used);
        row.precision /= static_cast<double>(used);
        row.dsc /= static_cast<double>(used);
    }
    const SweepRow* best = &report.rows.front();
    for (const SweepRow& row : report.rows) {
        if (row.dsc > best->dsc || (row.dsc == best->dsc && row.alpha < best->alpha))
            best = &row;
    }
    report.best_alpha = best->alpha;
    return report;
}

std::vector<double> parse_alpha_grid(const std::string& spec) {
    std::vector<std::string> parts;
    std::stringstream ss(spec);
    for (std::string item; std::getline(ss, item, ':');)
        parts.push_back(item);
    if (parts.size() != 3)
        throw Error(Errc::invalid_argument, "alpha grid must be start:stop:step, got '" + spec + "'");
    const double start = parse_number(parts[0], spec);
    const double stop = parse_number(parts[1], spec);
    const double step = parse_number(parts[2], spec);
    if (step <= 0.0)
        throw Error(Errc::invalid_argument, "alpha grid step must be > 0");
    if (start > stop + 1e-9)
        throw Error(Errc::invalid_argument, "alpha grid start exceeds stop");

    std::vector<double> grid;
    for (long i = 0;; ++i) {
        double a = start + static_cast<double>(i) * step;
        if (a > stop + 1e-9)
            break;
        // Snap to 12 decimals so 0.1 * 3 reads back as 0.3.
        a = std::round(a * 1e12) / 1e12;
        if (!(a >= 0.0 && a <= 1.0))
            throw Error(Errc::invalid_alpha, "alpha must be in [0,1]");
        grid.push_back(a);
    }
    return grid;
}

std::vector<double> default_alpha_grid() {
    return parse_alpha_grid("0:1:0.1");
}

std::string format_pct(double ratio) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", round_pct(ratio));
    return buf;
}

std::string format_alpha(double alpha) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", alpha);
    std::string s = buf;
    while (!s.empty() && s.back() == '0')
        s.pop_back();
    if (!s.empty() && s.back() == '.')
        s.pop_back();
    if (s == "-0")
        s = "0";
    return s;
}

std::string sweep_to_csv(const SweepReport& report) {
    std::string out = "alpha,sensitivity_pct,precision_pct,dsc_pct\n";
    for (const SweepRow& row : report.rows) {
        out += format_alpha(row.alpha) + "," + format_pct(row.sensitivity) + "," + format_pct(row.precision) + "," +
               format_pct(row.dsc) + "\n";
    }
    return out;
}

std::string sweep_to_json(const SweepReport& report) {
    nlohmann::ordered_json j;
    j["best_alpha"] = report.best_alpha;
    j["dataset_size"] = report.dataset_size;
    j["failures"] = report.failures;
    j["rows"] = nlohmann::ordered_json::array();
    for (const SweepRow& row : report.rows) {
        j["rows"].push_back({{"alpha", row.alpha},
                             {"sensitivity_pct", round_pct(row.sensitivity)},
                             {"precision_pct", round_pct(row.precision)},
                             {"dsc_pct", round_pct(row.dsc)}});
    }
    return j.dump(2) + "\n";
}

}  // namespace easygt
