// easygt command line: batch segmentation, evaluation, alpha sweeps, phantom generation,
// session audits and the annotation server.
//
// Exit codes: 0 success, 1 usage or I/O error, 2 some images could not be processed.

#include <chrono>
#include <csignal>
#include <cstdio>
#include <iostream>
#include <map>
#include <pthread.h>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "easygt/image_io.hpp"
#include "easygt/metrics.hpp"
#include "easygt/phantom.hpp"
#include "easygt/service.hpp"
#include "easygt/session.hpp"
#include "easygt/threshold.hpp"

namespace {

using namespace easygt;

constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kPartial = 2;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void require_alpha(double alpha) {
    if (!(alpha >= 0.0 && alpha <= 1.0))
        throw UsageError("alpha must be in [0,1]");
}

void require_dir(const fs::path& dir, const char* what) {
    std::error_code ec;
    if (!fs::is_directory(dir, ec))
        throw UsageError(std::string(what) + " is not a directory: " + dir.string());
}

void make_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir, ec))
        throw UsageError("cannot create output directory " + dir.string());
}

std::string fixed3(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

/// Key used to pair images with masks across directories: the file stem without a leading
/// "img_" or "gt_", so img_0007.png, gt_0007.png and 0007.png all pair up.
std::string pairing_key(const fs::path& p) {
    std::string stem = p.stem().string();
    for (std::string_view prefix : {"img_", "gt_"}) {
        if (stem.rfind(prefix, 0) == 0 && stem.size() > prefix.size())
            return stem.substr(prefix.size());
    }
    return stem;
}

struct Pair {
    fs::path left;
    fs::path right;
};

std::vector<Pair> pair_directories(const fs::path& left_dir, const fs::path& right_dir) {
    std::map<std::string, fs::path> left, right;
    for (const auto& p : list_images(left_dir))
        left.emplace(pairing_key(p), p);
    for (const auto& p : list_images(right_dir))
        right.emplace(pairing_key(p), p);

    std::vector<std::string> unmatched;
    for (const auto& [key, path] : left) {
        if (!right.contains(key))
            unmatched.push_back(path.string());
    }
    for (const auto& [key, path] : right) {
        if (!left.contains(key))
            unmatched.push_back(path.string());
    }
    if (!unmatched.empty()) {
        std::string msg = "unmatched files:";
        for (const auto& u : unmatched)
            msg += "\n  " + u;
        throw UsageError(msg);
    }
    if (left.empty())
        throw UsageError("no images in " + left_dir.string());

    std::vector<Pair> pairs;
    for (const auto& [key, path] : left)
        pairs.push_back({path, right.at(key)});
    return pairs;
}

int run_segment(const fs::path& input, const fs::path& output, double alpha, int offset) {
    require_alpha(alpha);
    require_dir(input, "--input");
    const auto images = list_images(input);
    if (images.empty())
        throw UsageError("no images in " + input.string());
    make_dir(output);

    std::vector<std::string> degenerate;
    bool io_failure = false;
    std::cout << "image,thv1,thv2,uthv,effective\n";
    for (const auto& path : images) {
        const auto start = std::chrono::steady_clock::now();
        try {
            const Segmentation seg = segment(load_image(path), alpha, offset);
            save_mask_png(seg.mask, output / (path.stem().string() + ".png"));
            const double ms =
                std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
            const ThresholdSet& t = seg.thresholds;
            std::cout << path.filename().string() << ',' << fixed3(t.thv1) << ',' << fixed3(t.thv2) << ','
                      << fixed3(t.uthv) << ',' << fixed3(t.effective) << '\n';
            std::cerr << path.filename().string() << ": " << fixed3(ms) << " ms\n";
        } catch (const Error& e) {
            if (e.is_degenerate()) {
                degenerate.push_back(path.filename().string());
            } else {
                io_failure = true;
                std::cerr << "error: " << e.what() << '\n';
            }
        }
    }
    for (const auto& name : degenerate)
        std::cerr << "degenerate: " << name << '\n';
    if (io_failure)
        return kUsage;
    return degenerate.empty() ? kOk : kPartial;
}

int run_eval(const fs::path& pred_dir, const fs::path& gt_dir) {
    require_dir(pred_dir, "--pred");
    require_dir(gt_dir, "--gt");
    const auto pairs = pair_directories(pred_dir, gt_dir);

    std::string out = "image,sensitivity_pct,precision_pct,dsc_pct\n";
    double sens = 0, prec = 0, dsc = 0;
    for (const auto& [pred_path, gt_path] : pairs) {
        const EvalResult r = evaluate(confusion_counts(load_mask(pred_path), load_mask(gt_path)));
        out += pred_path.filename().string() + "," + format_pct(r.sensitivity) + "," + format_pct(r.precision) + "," +
               format_pct(r.dsc) + "\n";
        sens += r.sensitivity;
        prec += r.precision;
        dsc += r.dsc;
    }
    const double n = static_cast<double>(pairs.size());
    out += "MEAN," + format_pct(sens / n) + "," + format_pct(prec / n) + "," + format_pct(dsc / n) + "\n";
    std::cout << out;
    return kOk;
}

void write_text(const fs::path& path, const std::string& text) {
    write_file_atomic(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

int run_sweep(const fs::path& input, const fs::path& gt_dir, const std::string& grid_spec, const fs::path& csv_path,
              const fs::path& json_path) {
    require_dir(input, "--input");
    require_dir(gt_dir, "--gt");
    std::vector<double> grid;
    try {
        grid = parse_alpha_grid(grid_spec);
    } catch (const Error& e) {
        throw UsageError(e.what());
    }
    const auto pairs = pair_directories(input, gt_dir);

    std::vector<RgbImage> images;
    std::vector<BinaryMask> truths;
    for (const auto& [img_path, gt_path] : pairs) {
        images.push_back(load_image(img_path));
        truths.push_back(load_mask(gt_path));
    }
    const SweepReport report = alpha_sweep(images, truths, grid);
    const std::string csv = sweep_to_csv(report);
    std::cout << csv;
    if (!csv_path.empty())
        write_text(csv_path, csv);
    if (!json_path.empty())
        write_text(json_path, sweep_to_json(report));

    std::cerr << "best_alpha=" << format_alpha(report.best_alpha) << " dataset_size=" << report.dataset_size
              << " failures=" << report.failures << '\n';
    for (std::size_t i : report.failed_indices)
        std::cerr << "degenerate: " << pairs[i].left.filename().string() << '\n';
    return report.failures == 0 ? kOk : kPartial;
}

int run_phantom(int count, std::uint64_t seed, const fs::path& output, int size) {
    if (count < 1)
        throw UsageError("--count must be >= 1");
    if (size < 64)
        throw UsageError("--size must be >= 64");
    make_dir(output / "images");
    make_dir(output / "gt");
    for (int i = 0; i < count; ++i) {
        const Phantom p =
            generate_phantom(random_phantom_spec(suite_member_seed(seed, static_cast<std::size_t>(i)), size, size));
        char name[32];
        std::snprintf(name, sizeof name, "%04d.png", i);
        save_png(p.image, output / "images" / (std::string("img_") + name));
        save_mask_png(p.truth, output / "gt" / (std::string("gt_") + name));
    }
    std::cerr << "wrote " << count << " phantoms to " << output.string() << '\n';
    return kOk;
}

int run_audit(const fs::path& folder, double alpha) {
    require_alpha(alpha);
    const Session session = Session::open(folder, alpha, /*persist=*/false);
    const SessionSummary s = session.summary();
    std::cout << "images=" << s.image_count << " pending=" << s.pending << " accepted=" << s.accepted
              << " failed=" << s.failed << " orphaned=" << s.orphaned.size() << '\n';
    const auto issues = session.audit();
    for (const auto& issue : issues)
        std::cout << "issue: " << issue << '\n';
    return issues.empty() ? kOk : kPartial;
}

int run_serve(const fs::path& folder, const std::string& host, int port, double alpha, const fs::path& static_dir) {
    require_alpha(alpha);
    require_dir(folder, "--folder");

    // Block termination signals in every thread; a dedicated thread waits for them.
    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);

    Service service(Session::open(folder, alpha), Service::Options{static_dir});
    int bound = port;
    if (port == 0) {
        bound = service.bind_any_port(host);
        if (bound < 0)
            throw UsageError("cannot bind " + host);
    } else if (!service.bind(host, port)) {
        throw UsageError("cannot bind " + host + ":" + std::to_string(port) + " (port busy?)");
    }
    std::cout << "listening on http://" << host << ":" << bound << std::endl;

    std::thread waiter([&] {
        int sig = 0;
        sigwait(&signals, &sig);
        service.stop();
    });
    const bool ok = service.listen();
    pthread_kill(waiter.native_handle(), SIGTERM);
    waiter.join();
    return ok ? kOk : kUsage;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"easygt - white-blood-cell nucleus ground-truth toolkit"};
    app.require_subcommand(1);

    std::string input, output, pred, gt, folder, grid = "0:1:0.1", csv_out, json_out, host = "127.0.0.1", static_dir;
    double alpha = kDefaultAlpha;
    int offset = 0, count = 0, port = 8080, size = 575;
    std::uint64_t seed = 42;

    auto* seg = app.add_subcommand("segment", "Segment every image in a folder and write masks");
    seg->add_option("--input", input, "Image folder")->required();
    seg->add_option("--output", output, "Mask output folder")->required();
    seg->add_option("--alpha", alpha, "Threshold fusion weight in [0,1]");
    seg->add_option("--offset", offset, "Integer threshold offset");

    auto* ev = app.add_subcommand("eval", "Score predicted masks against ground truth");
    ev->add_option("--pred", pred, "Predicted mask folder")->required();
    ev->add_option("--gt", gt, "Ground-truth mask folder")->required();

    auto* sw = app.add_subcommand("sweep", "Sensitivity/precision/DSC over an alpha grid");
    sw->add_option("--input", input, "Image folder")->required();
    sw->add_option("--gt", gt, "Ground-truth mask folder")->required();
    sw->add_option("--alphas", grid, "Grid start:stop:step (inclusive)");
    sw->add_option("--csv", csv_out, "Also write the CSV report here");
    sw->add_option("--json", json_out, "Write the JSON report here");

    auto* ph = app.add_subcommand("phantom", "Generate synthetic smear images with exact masks");
    ph->add_option("--count", count, "Number of phantoms")->required();
    ph->add_option("--seed", seed, "Suite seed");
    ph->add_option("--output", output, "Output folder (images/ and gt/ are created)")->required();
    ph->add_option("--size", size, "Frame edge in pixels");

    auto* au = app.add_subcommand("audit", "Check status/file coherence of an annotation folder");
    au->add_option("--folder", folder, "Annotation folder")->required();
    au->add_option("--alpha", alpha, "Session alpha");

    auto* sv = app.add_subcommand("serve", "Run the annotation HTTP service");
    sv->add_option("--folder", folder, "Annotation folder")->required();
    sv->add_option("--port", port, "TCP port (0 picks a free one)");
    sv->add_option("--host", host, "Bind address");
    sv->add_option("--alpha", alpha, "Session alpha");
    sv->add_option("--static", static_dir, "UI bundle directory served at /");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    try {
        if (seg->parsed())
            return run_segment(input, output, alpha, offset);
        if (ev->parsed())
            return run_eval(pred, gt);
        if (sw->parsed())
            return run_sweep(input, gt, grid, csv_out, json_out);
        if (ph->parsed())
            return run_phantom(count, seed, output, size);
        if (au->parsed())
            return run_audit(folder, alpha);
        if (sv->parsed())
            return run_serve(folder, host, port, alpha, static_dir);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const Error& e) {
        std::cerr << "error: " << to_string(e.code()) << ": " << e.what() << '\n';
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    }
    return kUsage;
}
