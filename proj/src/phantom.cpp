#include "easygt/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace easygt {

namespace {

// std distributions are implementation-defined; these transforms keep output bit-identical
// across standard libraries.
class Sampler {
public:
    explicit Sampler(std::uint64_t seed) : engine_(seed) {}

    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    int integer(int lo, int hi) {
        return lo + static_cast<int>(engine_() % static_cast<std::uint64_t>(hi - lo + 1));
    }

    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = 1.0 - uniform();  // (0, 1]
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    std::array<double, 3> color(const ColorDistribution& d) {
        std::array<double, 3> c{};
        for (int i = 0; i < 3; ++i)
            c[i] = d.mean[i] + d.sigma[i] * normal();
        return c;
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

struct Box {
    int x0, y0, x1, y1;  // inclusive pixel range, possibly empty
};

Box bounding_box(const Ellipse& e, double margin, int width, int height) {
    const double c = std::cos(e.angle), s = std::sin(e.angle);
    const double a = e.semi_major, b = e.semi_minor;
    const double hx = std::sqrt(a * a * c * c + b * b * s * s) + margin;
    const double hy = std::sqrt(a * a * s * s + b * b * c * c) + margin;
    return {std::max(0, static_cast<int>(std::floor(e.cx - hx))), std::max(0, static_cast<int>(std::floor(e.cy - hy))),
            std::min(width - 1, static_cast<int>(std::ceil(e.cx + hx))),
            std::min(height - 1, static_cast<int>(std::ceil(e.cy + hy)))};
}

bool inside_frame(const Ellipse& e, int width, int height) {
    const double c = std::cos(e.angle), s = std::sin(e.angle);
    const double a = e.semi_major, b = e.semi_minor;
    const double hx = std::sqrt(a * a * c * c + b * b * s * s);
    const double hy = std::sqrt(a * a * s * s + b * b * c * c);
    return e.cx - hx >= 0.0 && e.cy - hy >= 0.0 && e.cx + hx <= width && e.cy + hy <= height;
}

// Normalised radius of the pixel centre: <= 1 inside the ellipse.
double radius(const Ellipse& e, int x, int y) {
    const double dx = x + 0.5 - e.cx, dy = y + 0.5 - e.cy;
    const double c = std::cos(e.angle), s = std::sin(e.angle);
    const double u = (dx * c + dy * s) / e.semi_major;
    const double v = (-dx * s + dy * c) / e.semi_minor;
    return std::sqrt(u * u + v * v);
}

// Soft coverage in [0, 1]; exactly 0.5 on the boundary, linear over `edge` pixels.
double coverage(const Ellipse& e, double r, double edge) {
    const double dist = (r - 1.0) * std::min(e.semi_major, e.semi_minor);
    return std::clamp(0.5 - dist / edge, 0.0, 1.0);
}

using Canvas = std::vector<std::array<double, 3>>;

void paint(Canvas& canvas, int width, int height, const Ellipse& e, double edge, const std::array<double, 3>& color) {
    const Box box = bounding_box(e, edge, width, height);
    for (int y = box.y0; y <= box.y1; ++y) {
        for (int x = box.x0; x <= box.x1; ++x) {
            const double w = coverage(e, radius(e, x, y), edge);
            if (w <= 0.0)
                continue;
            auto& px = canvas[static_cast<std::size_t>(y) * width + x];
            for (int ch = 0; ch < 3; ++ch)
                px[ch] = px[ch] * (1.0 - w) + color[ch] * w;
        }
    }
}

void validate(const PhantomSpec& spec) {
    if (spec.width < 1 || spec.height < 1)
        throw Error(Errc::invalid_spec, "phantom frame must be at least 1x1");
    if (spec.nucleus_lobes.empty() || spec.nucleus_lobes.size() > 5)
        throw Error(Errc::invalid_spec, "nucleus must have 1 to 5 lobes");
    if (!(spec.nucleus_edge > 0.0 && spec.cell_edge > 0.0 && spec.red_cell_edge > 0.0))
        throw Error(Errc::invalid_spec, "edge widths must be positive");
    auto positive_axes = [](const Ellipse& e) { return e.semi_major > 0.0 && e.semi_minor > 0.0; };
    if (!positive_axes(spec.cytoplasm) || !std::all_of(spec.red_cells.begin(), spec.red_cells.end(), positive_axes))
        throw Error(Errc::invalid_spec, "ellipse axes must be positive");
    for (const Ellipse& lobe : spec.nucleus_lobes) {
        if (!positive_axes(lobe))
            throw Error(Errc::invalid_spec, "nucleus lobe axes must be positive");
        if (!inside_frame(lobe, spec.width, spec.height))
            throw Error(Errc::invalid_spec, "nucleus lobe exceeds the frame");
    }
}

}  // namespace

Phantom generate_phantom(const PhantomSpec& spec) {
    validate(spec);
    const int w = spec.width, h = spec.height;
    const std::size_t n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
    Sampler rng(spec.seed);

    Canvas canvas(n, rng.color(spec.background));
    for (const Ellipse& rbc : spec.red_cells)
        paint(canvas, w, h, rbc, spec.red_cell_edge, rng.color(spec.red_cell));
    paint(canvas, w, h, spec.cytoplasm, spec.cell_edge, rng.color(spec.cytoplasm_color));

    // Lobes are blended once through the union of their coverages.
    std::vector<double> nucleus(n, 0.0);
    BinaryMask truth(w, h);
    for (const Ellipse& lobe : spec.nucleus_lobes) {
        const Box box = bounding_box(lobe, spec.nucleus_edge, w, h);
        for (int y = box.y0; y <= box.y1; ++y) {
            for (int x = box.x0; x <= box.x1; ++x) {
                const double r = radius(lobe, x, y);
                auto& cov = nucleus[static_cast<std::size_t>(y) * w + x];
                cov = std::max(cov, coverage(lobe, r, spec.nucleus_edge));
                if (r <= 1.0)
                    truth.at(x, y) = Label::nucleus;
            }
        }
    }
    if (count_nucleus(truth) == 0)
        throw Error(Errc::invalid_spec, "nucleus rasterizes to no pixels");

    const auto nucleus_rgb = rng.color(spec.nucleus_color);
    RgbImage image(w, h);
    auto out = image.pixels();
    for (std::size_t i = 0; i < n; ++i) {
        auto px = canvas[i];
        const double cov = nucleus[i];
        const double texture = spec.texture_sigma * rng.normal();
        std::array<double, 3> noise{};
        for (double& v : noise)
            v = spec.noise_sigma * rng.normal();
        std::array<std::uint8_t, 3> q{};
        for (int ch = 0; ch < 3; ++ch) {
            const double v = px[ch] * (1.0 - cov) + nucleus_rgb[ch] * cov + noise[ch] + cov * texture;
            q[ch] = static_cast<std::uint8_t>(std::clamp(std::round(v), 0.0, 255.0));
        }
        out[i] = Rgb{q[0], q[1], q[2]};
    }
    return {std::move(image), std::move(truth)};
}

PhantomSpec random_phantom_spec(std::uint64_t seed, int width, int height) {
    if (width < 1 || height < 1)
        throw Error(Errc::invalid_spec, "phantom frame must be at least 1x1");
    Sampler rng(seed ^ 0x5DEECE66DULL);
    const double scale = std::min(width, height) / 575.0;

    PhantomSpec spec;
    spec.width = width;
    spec.height = height;
    spec.seed = seed;
    spec.nucleus_edge = std::max(1.0, 6.0 * scale);
    spec.cell_edge = std::max(1.0, 3.0 * scale);
    spec.red_cell_edge = std::max(1.0, 2.0 * scale);

    const int red_cells = rng.integer(4, 8);
    for (int i = 0; i < red_cells; ++i) {
        Ellipse e;
        e.cx = rng.uniform(0.0, width);
        e.cy = rng.uniform(0.0, height);
        e.semi_major = rng.uniform(35.0, 50.0) * scale;
        e.semi_minor = e.semi_major * rng.uniform(0.9, 1.0);
        e.angle = rng.uniform(0.0, std::numbers::pi);
        spec.red_cells.push_back(e);
    }

    const double cx = width / 2.0 + rng.uniform(-40.0, 40.0) * scale;
    const double cy = height / 2.0 + rng.uniform(-40.0, 40.0) * scale;
    const double cell_radius = rng.uniform(95.0, 120.0) * scale;
    spec.cytoplasm = {cx, cy, cell_radius, cell_radius * rng.uniform(0.9, 1.0), rng.uniform(0.0, std::numbers::pi)};

    const int lobes = rng.integer(1, 5);
    for (int k = 0; k < lobes; ++k) {
        Ellipse lobe;
        if (lobes == 1) {
            lobe.cx = cx;
            lobe.cy = cy;
            lobe.semi_major = rng.uniform(0.55, 0.7) * cell_radius;
        } else {
            const double ang = 2.0 * std::numbers::pi * k / lobes + rng.uniform(-0.3, 0.3);
            lobe.cx = cx + 0.35 * cell_radius * std::cos(ang);
            lobe.cy = cy + 0.35 * cell_radius * std::sin(ang);
            lobe.semi_major = rng.uniform(0.35, 0.5) * cell_radius;
        }
        lobe.semi_minor = lobe.semi_major * rng.uniform(0.6, 1.0);
        lobe.angle = rng.uniform(0.0, std::numbers::pi);
        spec.nucleus_lobes.push_back(lobe);
    }
    return spec;
}

std::uint64_t suite_member_seed(std::uint64_t suite_seed, std::size_t index) noexcept {
    // splitmix64 finaliser
    std::uint64_t z = suite_seed + 0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(index) + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::vector<Phantom> generate_suite(std::size_t count, std::uint64_t seed, int width, int height) {
    std::vector<Phantom> suite;
    suite.reserve(count);
    for (std::size_t i = 0; i < count; ++i)
        suite.push_back(generate_phantom(random_phantom_spec(suite_member_seed(seed, i), width, height)));
    return suite;
}

}  // namespace easygt
