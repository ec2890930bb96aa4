#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace easygt {

enum class Errc {
    not_found,
    decode_error,
    degenerate_channel,
    degenerate_histogram,
    invalid_alpha,
    shape_mismatch,
    empty_dataset,
    invalid_spec,
    empty_session,
    io_error,
    invalid_argument,
};

std::string_view to_string(Errc code) noexcept;

/// Exception type thrown by every easygt operation.
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    Errc code() const noexcept { return code_; }

    /// True for the errors that make an image unsegmentable (the "failed" bucket).
    bool is_degenerate() const noexcept {
        return code_ == Errc::degenerate_channel || code_ == Errc::degenerate_histogram;
    }

private:
    Errc code_;
};

}  // namespace easygt
