#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "easygt/image.hpp"
#include "easygt/threshold.hpp"

namespace easygt {

namespace fs = std::filesystem;

enum class Status { pending, accepted, failed };

std::string_view to_string(Status s) noexcept;
std::optional<Status> parse_status(std::string_view text) noexcept;

enum class Direction { next, prev };

struct AnnotationRecord {
    std::string image_id;  // file name relative to the session root
    Status status = Status::pending;
    double alpha = kDefaultAlpha;
    std::optional<double> thv1;
    std::optional<double> thv2;
    std::optional<double> uthv;
    int user_offset = 0;
    std::optional<std::string> mask_path;  // relative to the session root
    std::string updated_at;                // ISO-8601 UTC

    friend bool operator==(const AnnotationRecord&, const AnnotationRecord&) = default;
};

struct SessionSummary {
    std::size_t image_count = 0;
    std::size_t pending = 0;
    std::size_t accepted = 0;
    std::size_t failed = 0;
    std::size_t cursor = 0;
    double default_alpha = kDefaultAlpha;
    std::vector<std::string> orphaned;  // records whose source image is gone
};

/// Everything the annotation UI shows for one image. For an image that cannot be segmented,
/// `failure` is set, `thresholds` is empty and the mask is all background.
struct View {
    RgbImage image;
    BinaryMask mask;
    std::optional<ThresholdSet> thresholds;
    AnnotationRecord record;
    std::optional<Errc> failure;
};

inline constexpr std::string_view kSidecarName = "easygt_session.json";
inline constexpr std::string_view kMaskDir = "masks";
inline constexpr std::string_view kFailedDir = "failed";

/// Annotation state for one image folder. Every mutation is persisted to the sidecar before
/// it returns (write temp, then rename), so reopening the folder restores the records.
///
/// Not synchronised: callers serialise mutations (the HTTP service holds the only writer).
class Session {
public:
    /// Scans `folder` (non-recursive), merges the sidecar if present, and places the cursor on
    /// the first pending record. Pending records adopt `alpha`; decided records keep theirs.
    /// With `persist` false the sidecar is left untouched (read-only inspection).
    /// Throws EmptySession when the folder holds no supported images and IoError when it
    /// cannot be read.
    static Session open(const fs::path& folder, double alpha = kDefaultAlpha, bool persist = true);

    const fs::path& root() const noexcept { return root_; }
    double default_alpha() const noexcept { return default_alpha_; }
    std::size_t cursor() const noexcept { return cursor_; }
    std::size_t size() const noexcept { return records_.size(); }
    std::span<const AnnotationRecord> records() const noexcept { return records_; }
    const AnnotationRecord& record(std::size_t index) const { return records_.at(index); }
    std::optional<std::size_t> find(std::string_view image_id) const;

    fs::path image_path(std::size_t index) const;
    fs::path mask_file(std::size_t index) const;
    fs::path failed_file(std::size_t index) const;
    bool is_orphaned(std::size_t index) const;

    SessionSummary summary() const;

    /// Segments the image at the record's alpha and offset. IoError if the file vanished.
    View view(std::size_t index) const;
    View current_view() const { return view(cursor_); }

    /// Segmentation at the record's alpha and an arbitrary offset; never mutates.
    Segmentation preview(std::size_t index, int user_offset) const;

    /// Shifts the offset, keeping uthv + offset within [0, 255]: the offset is clamped to
    /// [-ceil(uthv), ceil(255 - uthv)]. An accepted record returns to pending and loses its mask.
    const AnnotationRecord& adjust_threshold(std::size_t index, int delta);
    const AnnotationRecord& adjust_threshold(int delta) { return adjust_threshold(cursor_, delta); }

    /// Writes masks/<stem>.png at the effective threshold and advances to the next pending
    /// record. Throws the segmentation error for degenerate images.
    const AnnotationRecord& accept(std::size_t index);
    const AnnotationRecord& accept() { return accept(cursor_); }

    /// Copies the source image to failed/, drops any accepted mask, advances.
    const AnnotationRecord& mark_failed(std::size_t index);
    const AnnotationRecord& mark_failed() { return mark_failed(cursor_); }

    /// Moves the cursor by one, saturating at both ends.
    std::size_t navigate(Direction direction);
    void set_cursor(std::size_t index);

    /// Status/file coherence problems, one message each; empty when consistent.
    std::vector<std::string> audit() const;

private:
    Session() = default;

    void persist() const;
    void advance_from(std::size_t index);
    std::string mask_relpath(std::size_t index) const;
    /// Replaces records_[index] with `updated` once the sidecar write succeeds.
    const AnnotationRecord& commit(std::size_t index, AnnotationRecord updated);

    fs::path root_;
    double default_alpha_ = kDefaultAlpha;
    std::vector<AnnotationRecord> records_;
    std::size_t cursor_ = 0;
};

/// Current UTC time as e.g. 2026-10-16T09:30:00.123Z.
std::string utc_timestamp();

}  // namespace easygt
