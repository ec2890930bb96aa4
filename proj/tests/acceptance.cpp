// Acceptance checks: one PASS/FAIL line per criterion, non-zero exit if any fails.

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "cli_runner.hpp"
#include "easygt/color.hpp"
#include "easygt/image_io.hpp"
#include "easygt/metrics.hpp"
#include "easygt/phantom.hpp"
#include "easygt/service.hpp"
#include "easygt/session.hpp"
#include "easygt/threshold.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

namespace {

using namespace easygt;
using Clock = std::chrono::steady_clock;
using json = nlohmann::json;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
    bool pass = false;
    std::string detail;
};

// Collects failures with context; the first few are kept for the report line.
struct Checker {
    int failures = 0;
    std::vector<std::string> notes;
    void expect(bool ok, const std::string& what) {
        if (ok)
            return;
        ++failures;
        if (notes.size() < 5)
            notes.push_back(what);
    }
    std::string summary() const {
        std::string s;
        for (const auto& n : notes)
            s += (s.empty() ? "" : "; ") + n;
        return s;
    }
};

Outcome otsu_oracle() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(0x05A1);
    int two_bad = 0, three_bad = 0;
    for (int i = 0; i < 1000; ++i) {
        const Histogram h = testing::random_histogram(rng, 2);
        two_bad += otsu_two_class(h) != testing::oracle_two_class(h.counts);
    }
    for (int i = 0; i < 200; ++i) {
        const Histogram h = testing::random_histogram(rng, 3);
        three_bad += otsu_three_class(h) != testing::oracle_three_class(h.counts);
    }
    const double secs = seconds_since(t0);
    char buf[160];
    std::snprintf(buf, sizeof buf, "two-class mismatches %d/1000, three-class mismatches %d/200, %.2f s", two_bad,
                  three_bad, secs);
    return {two_bad == 0 && three_bad == 0 && secs < 5.0, buf};
}

Outcome metric_identities() {
    std::mt19937_64 rng(0xD1CE);
    Checker c;
    int identity_checked = 0;
    for (int i = 0; i < 1000; ++i) {
        // Include zeros so the empty-mask conventions are exercised.
        auto draw = [&] { return rng() % 8 == 0 ? 0 : rng() % 200000; };
        const ConfusionCounts k{draw(), draw(), draw(), draw()};
        const EvalResult r = evaluate(k);
        for (double v : {r.sensitivity, r.precision, r.dsc})
            c.expect(v >= 0.0 && v <= 1.0, "value outside [0,1]");
        if (r.precision + r.sensitivity > 0) {
            ++identity_checked;
            const double hm = 2 * r.precision * r.sensitivity / (r.precision + r.sensitivity);
            c.expect(std::abs(r.dsc - hm) <= 1e-12, "dsc identity violated");
        }
        const EvalResult swapped = evaluate({k.tp, k.fn, k.fp, k.tn});
        c.expect(swapped.dsc == r.dsc, "dsc not symmetric");
        c.expect(swapped.sensitivity == r.precision && swapped.precision == r.sensitivity,
                 "sensitivity/precision not exchanged");
    }
    return {c.failures == 0, std::to_string(identity_checked) + " identities checked, " + std::to_string(c.failures) +
                                 " violations" + (c.notes.empty() ? "" : " (" + c.summary() + ")")};
}

struct SuiteSweep {
    SweepReport report;
    double secs = 0;
};

SuiteSweep phantom_suite_sweep() {
    const auto t0 = Clock::now();
    std::vector<RgbImage> images;
    std::vector<BinaryMask> truths;
    for (Phantom& p : generate_suite(50, 42)) {
        images.push_back(std::move(p.image));
        truths.push_back(std::move(p.truth));
    }
    SuiteSweep s;
    s.report = alpha_sweep(images, truths, default_alpha_grid());
    s.secs = seconds_since(t0);
    return s;
}

Outcome pipeline_correctness(const SuiteSweep& s) {
    const auto it = std::find_if(s.report.rows.begin(), s.report.rows.end(),
                                 [](const SweepRow& r) { return std::abs(r.alpha - 0.3) < 1e-9; });
    const double dsc = it == s.report.rows.end() ? 0.0 : it->dsc;
    const double best = s.report.best_alpha;
    char buf[200];
    std::snprintf(buf, sizeof buf, "50 phantoms: DSC@0.3 = %s%%, best_alpha = %s, failures = %zu, %.1f s",
                  format_pct(dsc).c_str(), format_alpha(best).c_str(), s.report.failures, s.secs);
    return {dsc >= 0.95 && best >= 0.1 - 1e-9 && best <= 0.5 + 1e-9 && s.secs < 30.0, buf};
}

Outcome sensitivity_trend(const SuiteSweep& s) {
    std::string curve;
    bool monotone = s.report.rows.size() == 11;
    for (std::size_t k = 0; k < s.report.rows.size(); ++k) {
        if (k > 0 && s.report.rows[k].sensitivity < s.report.rows[k - 1].sensitivity - 1e-9)
            monotone = false;
        curve += (k ? " " : "") + format_pct(s.report.rows[k].sensitivity);
    }
    return {monotone, "sensitivity % over alpha 0..1: " + curve};
}

Outcome mask_inclusion() {
    std::mt19937_64 rng(0x1C1C);
    std::uniform_real_distribution<double> level(-1.0, 256.0);
    int violations = 0;
    for (int i = 0; i < 100; ++i) {
        const Phantom p = generate_phantom(random_phantom_spec(rng(), 160, 160));
        const GrayImage plane = magenta_plane(p.image);
        double ta = level(rng), tb = level(rng);
        if (ta > tb)
            std::swap(ta, tb);
        violations += !testing::is_subset(apply_threshold(plane, tb), apply_threshold(plane, ta));
    }
    return {violations == 0, std::to_string(violations) + " violations in 100 pairs"};
}

Outcome latency() {
    const Phantom p = generate_phantom(random_phantom_spec(7, 512, 512));
    std::vector<double> ms;
    std::size_t sink = 0;
    for (int i = 0; i < 50; ++i) {
        const auto t0 = Clock::now();
        sink += count_nucleus(segment(p.image, kDefaultAlpha).mask);
        ms.push_back(seconds_since(t0) * 1000.0);
    }
    std::sort(ms.begin(), ms.end());
    const double median = (ms[24] + ms[25]) / 2;
    char buf[120];
    std::snprintf(buf, sizeof buf, "median %.2f ms, max %.2f ms over 50 runs at 512x512 (%zu px)", median, ms.back(),
                  sink / 50);
    return {median <= 100.0, buf};
}

Outcome cli_determinism() {
    testing::TempDir dir;
    Checker c;
    const auto ph = testing::run_cli({"phantom", "--count", "6", "--seed", "42", "--size", "200", "--output", dir.path()});
    c.expect(ph.exit_code == 0, "phantom exit " + std::to_string(ph.exit_code));
    const std::string images = (dir / "images").string(), gt = (dir / "gt").string();

    std::vector<testing::RunResult> seg, sweep;
    for (const char* run : {"a", "b"}) {
        seg.push_back(testing::run_cli({"segment", "--input", images, "--output", (dir / (std::string("seg_") + run)).string()}));
        sweep.push_back(testing::run_cli({"sweep", "--input", images, "--gt", gt, "--json",
                                          (dir / (std::string("sweep_") + run + ".json")).string()}));
    }
    c.expect(seg[0].exit_code == 0 && seg[1].exit_code == 0, "segment failed");
    c.expect(sweep[0].exit_code == 0 && sweep[1].exit_code == 0, "sweep failed");
    c.expect(seg[0].out == seg[1].out, "segment stdout differs");
    c.expect(sweep[0].out == sweep[1].out, "sweep CSV differs");
    c.expect(testing::slurp(dir / "sweep_a.json") == testing::slurp(dir / "sweep_b.json"), "sweep JSON differs");
    std::size_t masks = 0;
    for (const auto& p : list_images(dir / "seg_a")) {
        ++masks;
        c.expect(testing::slurp(p) == testing::slurp(dir / "seg_b" / p.filename()), "mask differs: " + p.filename().string());
    }
    c.expect(masks == 6, "expected 6 masks");
    return {c.failures == 0, c.failures ? c.summary() : "masks, CSV and JSON byte-identical across two runs"};
}

std::string state_of(const Session& s) {
    auto num = [](const std::optional<double>& v) {
        char buf[40];
        if (!v)
            return std::string("null");
        std::snprintf(buf, sizeof buf, "%.17g", *v);
        return std::string(buf);
    };
    std::ostringstream out;
    for (const AnnotationRecord& r : s.records()) {
        out << r.image_id << '|' << to_string(r.status) << '|' << num(r.alpha) << '|' << num(r.thv1) << '|'
            << num(r.thv2) << '|' << num(r.uthv) << '|' << r.user_offset << '|' << r.mask_path.value_or("-") << '|'
            << r.updated_at << '\n';
    }
    return out.str();
}

// Runs one mutation in a child process that reports its in-memory state and then dies by
// SIGKILL, so no destructor or flush runs after the mutation returns.
std::optional<std::string> mutate_and_kill(const fs::path& folder, int op, std::size_t index, int delta) {
    int fds[2];
    if (pipe(fds) != 0)
        return std::nullopt;
    const pid_t pid = fork();
    if (pid == 0) {
        close(fds[0]);
        std::string state;
        try {
            Session s = Session::open(folder);
            try {
                if (op == 0)
                    s.adjust_threshold(index, delta);
                else if (op == 1)
                    s.accept(index);
                else
                    s.mark_failed(index);
            } catch (const Error& e) {
                if (!e.is_degenerate())
                    throw;
            }
            state = state_of(s);
        } catch (const std::exception& e) {
            state = std::string("ERROR ") + e.what();
        }
        for (std::size_t off = 0; off < state.size();) {
            const ssize_t n = write(fds[1], state.data() + off, state.size() - off);
            if (n <= 0)
                break;
            off += static_cast<std::size_t>(n);
        }
        raise(SIGKILL);
        _exit(127);
    }
    close(fds[1]);
    std::string state;
    char buf[4096];
    for (ssize_t n; (n = read(fds[0], buf, sizeof buf)) > 0;)
        state.append(buf, static_cast<std::size_t>(n));
    close(fds[0]);
    int status = 0;
    waitpid(pid, &status, 0);
    if (!WIFSIGNALED(status) || WTERMSIG(status) != SIGKILL)
        return std::nullopt;
    return state;
}

Outcome crash_safety() {
    testing::TempDir root;
    const fs::path templ = root / "template";
    testing::write_phantom_folder(templ, 3, 42, 80);
    testing::write_black_image(templ / "img_black.png", 40);

    std::mt19937_64 rng(0xC4A5);
    Checker c;
    int mutations = 0;
    for (int seq = 0; seq < 200; ++seq) {
        const fs::path folder = root / ("seq" + std::to_string(seq));
        fs::copy(templ, folder);
        const int length = 1 + static_cast<int>(rng() % 8);
        for (int step = 0; step < length; ++step) {
            const int op = static_cast<int>(rng() % 3);
            const std::size_t index = rng() % 4;
            const int delta = static_cast<int>(rng() % 61) - 30;
            const auto before_kill = mutate_and_kill(folder, op, index, delta);
            ++mutations;
            if (!before_kill || before_kill->rfind("ERROR", 0) == 0) {
                c.expect(false, "child failed in sequence " + std::to_string(seq));
                continue;
            }
            try {
                const Session recovered = Session::open(folder, kDefaultAlpha, false);
                c.expect(state_of(recovered) == *before_kill, "state diverged in sequence " + std::to_string(seq));
                c.expect(recovered.audit().empty(), "audit issues in sequence " + std::to_string(seq));
            } catch (const std::exception& e) {
                c.expect(false, std::string("reopen failed: ") + e.what());
            }
        }
        fs::remove_all(folder);
    }
    return {c.failures == 0, std::to_string(mutations) + " killed mutations over 200 sequences, " +
                                 std::to_string(c.failures) + " divergences" +
                                 (c.notes.empty() ? "" : " (" + c.summary() + ")")};
}

Outcome service_contract() {
    testing::TempDir dir;
    testing::write_phantom_folder(dir.path(), 4, 42, 128);
    testing::write_black_image(dir / "img_black.png", 64);

    Service service(Session::open(dir.path()));
    const int port = service.bind_any_port("127.0.0.1");
    if (port <= 0)
        return {false, "cannot bind a loopback port"};
    std::thread server([&] { service.listen(); });
    service.wait_until_ready();
    httplib::Client cli("127.0.0.1", port);

    Checker c;
    std::map<std::string, bool> codes_seen;
    auto check_error = [&](const httplib::Result& res, int status, const std::string& code, const std::string& what) {
        if (!res) {
            c.expect(false, what + ": no response");
            return;
        }
        c.expect(res->status == status, what + ": status " + std::to_string(res->status));
        try {
            const json j = json::parse(res->body);
            c.expect(j.at("code") == code && j.at("http_status") == status && !j.at("message").get<std::string>().empty(),
                     what + ": body " + res->body);
            codes_seen[code] = true;
        } catch (const std::exception&) {
            c.expect(false, what + ": body is not JSON");
        }
    };
    auto body_of = [&](const httplib::Result& res, const std::string& what) -> json {
        if (!res || res->status != 200) {
            c.expect(false, what + ": status " + (res ? std::to_string(res->status) : "none"));
            return json::object();
        }
        return json::parse(res->body);
    };

    // Happy paths.
    json s = body_of(cli.Get("/api/session"), "GET /api/session");
    c.expect(s.value("image_count", 0) == 5 && s.value("pending", 0) == 5 && s.value("cursor", -1) == 0 &&
                 s.value("default_alpha", 0.0) == 0.3,
             "cold summary " + s.dump());
    c.expect(body_of(cli.Get("/api/records"), "GET /api/records").size() == 5, "records listing");
    c.expect(body_of(cli.Get("/api/images/img_0001.png/record"), "GET record").value("status", "") == "pending",
             "record status");
    auto img = cli.Get("/api/images/img_0001.png");
    c.expect(img && img->status == 200 && img->body == testing::slurp(dir / "img_0001.png"), "image passthrough");

    // API/engine byte equality over a range of offsets.
    const RgbImage source = load_image(dir / "img_0002.png");
    for (int k = -20; k <= 20; k += 5) {
        auto res = cli.Get("/api/images/img_0002.png/mask?offset=" + std::to_string(k));
        const auto engine = encode_mask_png(segment(source, kDefaultAlpha, k).mask);
        c.expect(res && res->status == 200 && res->body == std::string(engine.begin(), engine.end()),
                 "mask bytes differ at offset " + std::to_string(k));
        c.expect(res && res->has_header("X-THV1") && res->has_header("X-THV2") && res->has_header("X-UTHV") &&
                     res->has_header("X-Effective"),
                 "threshold headers missing");
    }

    // Preview purity.
    const std::string sidecar = testing::slurp(dir / std::string(kSidecarName));
    for (int i = 0; i < 100; ++i)
        cli.Get("/api/images/img_000" + std::to_string(i % 4) + ".png/mask?offset=" + std::to_string(i % 41 - 20));
    c.expect(testing::slurp(dir / std::string(kSidecarName)) == sidecar, "sidecar changed by previews");

    // Mutations.
    json r = body_of(cli.Post("/api/images/img_0000.png/offset", R"({"delta": -3})", "application/json"), "POST offset");
    c.expect(r.value("user_offset", 0) == -3, "offset not applied");
    r = body_of(cli.Post("/api/images/img_0000.png/accept", "", "application/json"), "POST accept");
    c.expect(r.value("status", "") == "accepted" && fs::exists(dir / "masks/img_0000.png"), "accept");
    c.expect(r.value("cursor", -1) == 1, "cursor after accept");
    r = body_of(cli.Post("/api/images/img_0001.png/fail", "", "application/json"), "POST fail");
    c.expect(r.value("status", "") == "failed" && fs::exists(dir / "failed/img_0001.png"), "fail");
    s = body_of(cli.Post("/api/session/cursor", R"({"direction": "prev"})", "application/json"), "POST cursor");
    c.expect(s.value("accepted", 0) == 1 && s.value("failed", 0) == 1, "summary after mutations");

    // Every error code.
    check_error(cli.Get("/api/images/nope.png"), 404, "not_found", "unknown image");
    check_error(cli.Post("/api/images/nope.png/accept", "", "application/json"), 404, "not_found", "unknown accept");
    check_error(cli.Get("/api/images/img_black.png/mask"), 422, "degenerate_image", "degenerate preview");
    check_error(cli.Post("/api/images/img_black.png/accept", "", "application/json"), 409, "conflict",
                "degenerate accept");
    check_error(cli.Get("/api/images/img_0002.png/mask?offset=abc"), 400, "invalid_param", "offset=abc");
    check_error(cli.Post("/api/session/cursor", R"({"direction": "sideways"})", "application/json"), 400,
                "invalid_param", "bad direction");
    fs::remove(dir / "img_0003.png");
    check_error(cli.Get("/api/images/img_0003.png"), 500, "io_error", "deleted image");

    service.stop();
    server.join();
    const bool all_codes = codes_seen.size() == 5;
    c.expect(all_codes, "not every ApiError code exercised");
    return {c.failures == 0, c.failures ? c.summary() : "9 endpoints, 5/5 error codes, 100 pure previews, bytes match engine"};
}

}  // namespace

int main() {
    struct Criterion {
        const char* name;
        std::function<Outcome()> run;
    };
    std::optional<SuiteSweep> suite;
    auto with_suite = [&](auto fn) {
        return [&, fn] {
            if (!suite)
                suite = phantom_suite_sweep();
            return fn(*suite);
        };
    };
    const std::vector<Criterion> criteria{
        {"otsu-oracle-equivalence", otsu_oracle},
        {"metric-identities", metric_identities},
        {"pipeline-correctness", with_suite(pipeline_correctness)},
        {"sensitivity-trend", with_suite(sensitivity_trend)},
        {"mask-inclusion", mask_inclusion},
        {"latency", latency},
        {"cli-determinism", cli_determinism},
        {"crash-safety", crash_safety},
        {"service-contract", service_contract},
    };

    int failed = 0;
    for (const auto& c : criteria) {
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += !o.pass;
        std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", c.name, o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%zu/%zu criteria passed\n", criteria.size() - static_cast<std::size_t>(failed), criteria.size());
    return failed == 0 ? 0 : 1;
}
