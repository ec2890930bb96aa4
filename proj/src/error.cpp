#include "easygt/error.hpp"

namespace easygt {

std::string_view to_string(Errc code) noexcept {
    switch (code) {
    case Errc::not_found: return "NotFound";
    case Errc::decode_error: return "DecodeError";
    case Errc::degenerate_channel: return "DegenerateChannel";
    case Errc::degenerate_histogram: return "DegenerateHistogram";
    case Errc::invalid_alpha: return "InvalidAlpha";
    case Errc::shape_mismatch: return "ShapeMismatch";
    case Errc::empty_dataset: return "EmptyDataset";
    case Errc::invalid_spec: return "InvalidSpec";
    case Errc::empty_session: return "EmptySession";
    case Errc::io_error: return "IoError";
    case Errc::invalid_argument: return "InvalidArgument";
    }
    return "Unknown";
}

}  // namespace easygt
