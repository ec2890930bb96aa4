#include "easygt/service.hpp"

#include <charconv>
#include <mutex>
#include <shared_mutex>

#include <httplib.h>
#include <json.hpp>

#include "easygt/image_io.hpp"
#include "record_json.hpp"

namespace easygt {

using json = nlohmann::ordered_json;

namespace {

constexpr const char* kJson = "application/json";

void send_error(httplib::Response& res, const ApiError& err) {
    res.status = err.http_status;
    res.set_content(json{{"code", err.code}, {"message", err.message}, {"http_status", err.http_status}}.dump(),
                    kJson);
}

void send_json(httplib::Response& res, const json& body) {
    res.status = 200;
    res.set_content(body.dump(), kJson);
}

json summary_json(const SessionSummary& s, const Session& session) {
    json j{{"image_count", s.image_count}, {"pending", s.pending},   {"accepted", s.accepted},
           {"failed", s.failed},           {"cursor", s.cursor},     {"default_alpha", s.default_alpha}};
    j["current_image_id"] = session.size() > 0 ? json(session.record(s.cursor).image_id) : json(nullptr);
    j["orphaned"] = s.orphaned;
    return j;
}

json record_json(const AnnotationRecord& r, std::size_t cursor) {
    json j = detail::record_to_json(r);
    j["cursor"] = cursor;
    return j;
}

// Strict integer parse: optional sign and digits only.
std::optional<int> parse_int(std::string_view text) {
    int v = 0;
    const char* begin = text.data();
    const char* end = text.data() + text.size();
    if (!text.empty() && text.front() == '+')
        ++begin;
    const auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc{} || ptr != end || begin == end)
        return std::nullopt;
    return v;
}

std::string header_number(double v) {
    return json(v).dump();
}

}  // namespace

ApiError to_api_error(const Error& e, bool mutating) {
    switch (e.code()) {
    case Errc::not_found: return {"not_found", e.what(), 404};
    case Errc::degenerate_channel:
    case Errc::degenerate_histogram:
        return mutating ? ApiError{"conflict", e.what(), 409} : ApiError{"degenerate_image", e.what(), 422};
    case Errc::invalid_argument:
    case Errc::invalid_alpha: return {"invalid_param", e.what(), 400};
    default: return {"io_error", e.what(), 500};
    }
}

struct Service::Impl {
    Session session;
    Options options;
    mutable std::shared_mutex mutex;
    httplib::Server server;

    Impl(Session s, Options o) : session(std::move(s)), options(std::move(o)) {
        // SO_REUSEPORT would let a second server share the port silently.
        server.set_socket_options([](socket_t sock) {
            int yes = 1;
            setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const char*>(&yes), sizeof yes);
        });
        routes();
    }

    std::size_t index_of(const std::string& id) const {
        const auto idx = session.find(id);
        if (!idx)
            throw Error(Errc::not_found, "unknown image id: " + id);
        return *idx;
    }

    // Runs fn and converts engine errors into API errors.
    template <typename Fn>
    static void guarded(httplib::Response& res, bool mutating, Fn&& fn) {
        try {
            fn();
        } catch (const Error& e) {
            send_error(res, to_api_error(e, mutating));
        } catch (const std::exception& e) {
            send_error(res, {"io_error", e.what(), 500});
        }
    }

    template <typename Op>
    void mutate_record(const httplib::Request& req, httplib::Response& res, Op&& op) {
        guarded(res, true, [&] {
            std::unique_lock lock(mutex);
            const std::size_t idx = index_of(req.matches[1]);
            const AnnotationRecord& rec = op(idx);
            send_json(res, record_json(rec, session.cursor()));
        });
    }

    void routes() {
        server.Get("/api/session", [this](const httplib::Request&, httplib::Response& res) {
            guarded(res, false, [&] {
                std::shared_lock lock(mutex);
                send_json(res, summary_json(session.summary(), session));
            });
        });

        server.Get("/api/records", [this](const httplib::Request&, httplib::Response& res) {
            guarded(res, false, [&] {
                std::shared_lock lock(mutex);
                json arr = json::array();
                for (const auto& r : session.records())
                    arr.push_back(detail::record_to_json(r));
                send_json(res, arr);
            });
        });

        server.Get(R"(/api/images/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, false, [&] {
                fs::path path;
                {
                    std::shared_lock lock(mutex);
                    const std::size_t idx = index_of(req.matches[1]);
                    if (session.is_orphaned(idx))
                        throw Error(Errc::io_error, "image missing on disk: " + session.record(idx).image_id);
                    path = session.image_path(idx);
                }
                std::vector<std::uint8_t> bytes = read_file(path);
                const RgbImage img = decode_image(bytes);
                std::string ext = path.extension().string();
                for (char& c : ext)
                    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
                if (ext != ".png")
                    bytes = encode_png(img);
                res.status = 200;
                res.set_content(std::string(bytes.begin(), bytes.end()), "image/png");
            });
        });

        server.Get(R"(/api/images/([^/]+)/record)", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, false, [&] {
                std::shared_lock lock(mutex);
                send_json(res, record_json(session.record(index_of(req.matches[1])), session.cursor()));
            });
        });

        server.Get(R"(/api/images/([^/]+)/mask)", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, false, [&] {
                int offset = 0;
                if (req.has_param("offset")) {
                    const auto parsed = parse_int(req.get_param_value("offset"));
                    if (!parsed)
                        throw Error(Errc::invalid_argument, "offset must be an integer");
                    offset = *parsed;
                }
                fs::path path;
                double alpha = 0.0;
                {
                    std::shared_lock lock(mutex);
                    const std::size_t idx = index_of(req.matches[1]);
                    if (session.is_orphaned(idx))
                        throw Error(Errc::io_error, "image missing on disk: " + session.record(idx).image_id);
                    path = session.image_path(idx);
                    alpha = session.record(idx).alpha;
                }
                // Pure computation on an immutable source file; no lock needed.
                const Segmentation seg = segment(load_image(path), alpha, offset);
                const auto png = encode_mask_png(seg.mask);
                res.status = 200;
                res.set_header("X-THV1", header_number(seg.thresholds.thv1));
                res.set_header("X-THV2", header_number(seg.thresholds.thv2));
                res.set_header("X-UTHV", header_number(seg.thresholds.uthv));
                res.set_header("X-Effective", header_number(seg.thresholds.effective));
                res.set_content(std::string(png.begin(), png.end()), "image/png");
            });
        });

        server.Post(R"(/api/images/([^/]+)/offset)", [this](const httplib::Request& req, httplib::Response& res) {
            int delta = 0;
            try {
                const json body = json::parse(req.body);
                if (!body.contains("delta") || !body.at("delta").is_number_integer())
                    throw Error(Errc::invalid_argument, "body must be {\"delta\": <integer>}");
                const auto wide = body.at("delta").get<long long>();
                if (wide < std::numeric_limits<int>::min() || wide > std::numeric_limits<int>::max())
                    throw Error(Errc::invalid_argument, "delta out of range");
                delta = static_cast<int>(wide);
            } catch (const json::exception&) {
                send_error(res, {"invalid_param", "body must be {\"delta\": <integer>}", 400});
                return;
            } catch (const Error& e) {
                send_error(res, to_api_error(e, false));
                return;
            }
            mutate_record(req, res, [&](std::size_t idx) -> const AnnotationRecord& {
                return session.adjust_threshold(idx, delta);
            });
        });

        server.Post(R"(/api/images/([^/]+)/accept)", [this](const httplib::Request& req, httplib::Response& res) {
            mutate_record(req, res, [&](std::size_t idx) -> const AnnotationRecord& { return session.accept(idx); });
        });

        server.Post(R"(/api/images/([^/]+)/fail)", [this](const httplib::Request& req, httplib::Response& res) {
            mutate_record(req, res,
                          [&](std::size_t idx) -> const AnnotationRecord& { return session.mark_failed(idx); });
        });

        server.Post("/api/session/cursor", [this](const httplib::Request& req, httplib::Response& res) {
            Direction dir = Direction::next;
            try {
                const json body = json::parse(req.body);
                const std::string d = body.at("direction").get<std::string>();
                if (d == "next")
                    dir = Direction::next;
                else if (d == "prev")
                    dir = Direction::prev;
                else
                    throw Error(Errc::invalid_argument, "direction must be \"next\" or \"prev\"");
            } catch (const json::exception&) {
                send_error(res, {"invalid_param", "body must be {\"direction\": \"next\" | \"prev\"}", 400});
                return;
            } catch (const Error& e) {
                send_error(res, to_api_error(e, false));
                return;
            }
            guarded(res, true, [&] {
                std::unique_lock lock(mutex);
                session.navigate(dir);
                send_json(res, summary_json(session.summary(), session));
            });
        });

        std::error_code ec;
        if (!options.static_dir.empty() && fs::is_directory(options.static_dir, ec)) {
            server.set_mount_point("/", options.static_dir.string());
        } else {
            server.Get("/", [](const httplib::Request&, httplib::Response& res) {
                res.set_content("easygt service is running; no UI bundle is installed.\n", "text/plain");
            });
        }
    }
};

Service::Service(Session session) : Service(std::move(session), Options{}) {}

Service::Service(Session session, Options options)
    : impl_(std::make_unique<Impl>(std::move(session), std::move(options))) {}

Service::~Service() {
    impl_->server.stop();
}

bool Service::bind(const std::string& host, int port) {
    return impl_->server.bind_to_port(host, port);
}

int Service::bind_any_port(const std::string& host) {
    return impl_->server.bind_to_any_port(host);
}

bool Service::listen() {
    return impl_->server.listen_after_bind();
}

void Service::stop() {
    impl_->server.stop();
}

void Service::wait_until_ready() const {
    impl_->server.wait_until_ready();
}

SessionSummary Service::summary() const {
    std::shared_lock lock(impl_->mutex);
    return impl_->session.summary();
}

}  // namespace easygt
