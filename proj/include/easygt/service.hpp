#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <string_view>

#include "easygt/session.hpp"

namespace easygt {

/// Error payload of the HTTP API.
struct ApiError {
    std::string code;  // not_found, degenerate_image, invalid_param, io_error, conflict
    std::string message;
    int http_status = 500;
};

/// Local HTTP front end over a single Session.
///
///   GET  /api/session                  summary
///   GET  /api/records                  every record
///   GET  /api/images/{id}              source image (PNG, transcoded if needed)
///   GET  /api/images/{id}/record       one record
///   GET  /api/images/{id}/mask?offset  preview mask PNG with X-THV1/X-THV2/X-UTHV/X-Effective
///   POST /api/images/{id}/offset       {"delta": int}
///   POST /api/images/{id}/accept
///   POST /api/images/{id}/fail
///   POST /api/session/cursor           {"direction": "next" | "prev"}
///
/// Mutations are serialised behind one writer lock; previews segment without holding it.
class Service {
public:
    struct Options {
        std::filesystem::path static_dir;  // served at "/" when it exists
    };

    explicit Service(Session session);
    Service(Session session, Options options);
    ~Service();

    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    /// Returns false when the address cannot be bound (e.g. port busy).
    bool bind(const std::string& host, int port);
    /// Binds an ephemeral port and returns it, or -1.
    int bind_any_port(const std::string& host);
    /// Serves until stop() is called.
    bool listen();
    void stop();
    void wait_until_ready() const;

    /// Copy of the session state, taken under the reader lock.
    SessionSummary summary() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Maps an engine error to the API error set.
ApiError to_api_error(const Error& e, bool mutating);

}  // namespace easygt
