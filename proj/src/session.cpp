#include "easygt/session.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <map>
#include <string>

#include <json.hpp>

#include "easygt/image_io.hpp"
#include "record_json.hpp"

namespace easygt {

using json = nlohmann::ordered_json;

namespace {

constexpr int kSidecarVersion = 1;

json optional_number(const std::optional<double>& v) {
    return v ? json(*v) : json(nullptr);
}

std::optional<double> read_optional_number(const json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null())
        return std::nullopt;
    return j.at(key).get<double>();
}

struct Sidecar {
    double default_alpha = kDefaultAlpha;
    std::vector<AnnotationRecord> records;
};

std::optional<Sidecar> read_sidecar(const fs::path& path) {
    std::error_code ec;
    if (!fs::exists(path, ec))
        return std::nullopt;
    const auto bytes = read_file(path);
    try {
        const json j = json::parse(bytes.begin(), bytes.end());
        if (j.at("version").get<int>() != kSidecarVersion)
            throw Error(Errc::io_error, "unsupported sidecar version in " + path.string());
        Sidecar s;
        s.default_alpha = j.at("default_alpha").get<double>();
        for (const json& r : j.at("records"))
            s.records.push_back(detail::record_from_json(r));
        return s;
    } catch (const json::exception& e) {
        throw Error(Errc::io_error, "corrupt sidecar " + path.string() + ": " + e.what());
    }
}

void set_thresholds(AnnotationRecord& r, const ThresholdSet& ts) {
    r.thv1 = ts.thv1;
    r.thv2 = ts.thv2;
    r.uthv = ts.uthv;
}

void remove_if_exists(const fs::path& path) {
    std::error_code ec;
    fs::remove(path, ec);
    if (ec)
        throw Error(Errc::io_error, "cannot remove " + path.string() + ": " + ec.message());
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec)
        throw Error(Errc::io_error, "cannot create " + dir.string() + ": " + ec.message());
}

}  // namespace

namespace detail {

json record_to_json(const AnnotationRecord& r) {
    return json{{"image_id", r.image_id},
                {"status", std::string(to_string(r.status))},
                {"alpha", r.alpha},
                {"thv1", optional_number(r.thv1)},
                {"thv2", optional_number(r.thv2)},
                {"uthv", optional_number(r.uthv)},
                {"user_offset", r.user_offset},
                {"mask_path", r.mask_path ? json(*r.mask_path) : json(nullptr)},
                {"updated_at", r.updated_at}};
}

AnnotationRecord record_from_json(const json& j) {
    AnnotationRecord r;
    r.image_id = j.at("image_id").get<std::string>();
    const auto status = parse_status(j.at("status").get<std::string>());
    if (!status)
        throw Error(Errc::io_error, "unknown status for " + r.image_id);
    r.status = *status;
    r.alpha = j.at("alpha").get<double>();
    r.thv1 = read_optional_number(j, "thv1");
    r.thv2 = read_optional_number(j, "thv2");
    r.uthv = read_optional_number(j, "uthv");
    r.user_offset = j.at("user_offset").get<int>();
    if (j.contains("mask_path") && !j.at("mask_path").is_null())
        r.mask_path = j.at("mask_path").get<std::string>();
    r.updated_at = j.value("updated_at", std::string{});
    return r;
}

}  // namespace detail

std::string_view to_string(Status s) noexcept {
    switch (s) {
    case Status::pending: return "pending";
    case Status::accepted: return "accepted";
    case Status::failed: return "failed";
    }
    return "pending";
}

std::optional<Status> parse_status(std::string_view text) noexcept {
    if (text == "pending")
        return Status::pending;
    if (text == "accepted")
        return Status::accepted;
    if (text == "failed")
        return Status::failed;
    return std::nullopt;
}

std::string utc_timestamp() {
    using namespace std::chrono;
    const auto now = system_clock::now();
    const std::time_t secs = system_clock::to_time_t(now);
    const auto millis = duration_cast<milliseconds>(now.time_since_epoch()).count() % 1000;
    std::tm tm{};
    gmtime_r(&secs, &tm);
    char buf[40];
    const std::size_t n = std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
    std::snprintf(buf + n, sizeof buf - n, ".%03dZ", static_cast<int>(millis));
    return buf;
}

Session Session::open(const fs::path& folder, double alpha, bool persist) {
    if (!(alpha >= 0.0 && alpha <= 1.0))
        throw Error(Errc::invalid_alpha, "alpha must be in [0,1]");
    std::error_code ec;
    if (!fs::is_directory(folder, ec))
        throw Error(Errc::io_error, "not a readable folder: " + folder.string());

    const auto images = list_images(folder);
    if (images.empty())
        throw Error(Errc::empty_session, "no supported images in " + folder.string());

    Session s;
    s.root_ = folder;
    s.default_alpha_ = alpha;

    std::map<std::string, AnnotationRecord> merged;
    if (auto sidecar = read_sidecar(folder / kSidecarName)) {
        for (auto& r : sidecar->records)
            merged.emplace(r.image_id, std::move(r));
    }
    const std::string now = utc_timestamp();
    for (const auto& path : images) {
        const std::string id = path.filename().string();
        if (merged.contains(id))
            continue;
        AnnotationRecord r;
        r.image_id = id;
        r.alpha = alpha;
        r.updated_at = now;
        merged.emplace(id, std::move(r));
    }
    for (auto& [id, r] : merged) {
        if (r.status != Status::pending || r.alpha == alpha)
            continue;
        r.alpha = alpha;
        r.uthv = (r.thv1 && r.thv2) ? std::optional(combine_thresholds(*r.thv1, *r.thv2, alpha)) : std::nullopt;
        if (r.uthv) {
            const double lo = -std::ceil(*r.uthv), hi = std::ceil(255.0 - *r.uthv);
            r.user_offset = static_cast<int>(std::clamp<double>(r.user_offset, lo, hi));
        }
    }
    for (auto& [id, r] : merged)
        s.records_.push_back(std::move(r));

    const auto first_pending = std::find_if(s.records_.begin(), s.records_.end(),
                                            [](const AnnotationRecord& r) { return r.status == Status::pending; });
    s.cursor_ = first_pending == s.records_.end() ? 0 : static_cast<std::size_t>(first_pending - s.records_.begin());
    if (persist)
        s.persist();
    return s;
}

std::optional<std::size_t> Session::find(std::string_view image_id) const {
    const auto it = std::lower_bound(records_.begin(), records_.end(), image_id,
                                     [](const AnnotationRecord& r, std::string_view id) { return r.image_id < id; });
    if (it == records_.end() || it->image_id != image_id)
        return std::nullopt;
    return static_cast<std::size_t>(it - records_.begin());
}

fs::path Session::image_path(std::size_t index) const {
    return root_ / records_.at(index).image_id;
}

std::string Session::mask_relpath(std::size_t index) const {
    const fs::path id = records_.at(index).image_id;
    const std::string stem = id.stem().string();
    const bool clash = std::any_of(records_.begin(), records_.end(), [&](const AnnotationRecord& other) {
        return other.image_id != id.string() && fs::path(other.image_id).stem().string() == stem;
    });
    // a.png and a.jpg would share masks/a.png; fall back to the full name.
    return std::string(kMaskDir) + "/" + (clash ? id.filename().string() : stem) + ".png";
}

fs::path Session::mask_file(std::size_t index) const {
    return root_ / mask_relpath(index);
}

fs::path Session::failed_file(std::size_t index) const {
    return root_ / kFailedDir / records_.at(index).image_id;
}

bool Session::is_orphaned(std::size_t index) const {
    std::error_code ec;
    return !fs::is_regular_file(image_path(index), ec);
}

SessionSummary Session::summary() const {
    SessionSummary sum;
    sum.image_count = records_.size();
    sum.cursor = cursor_;
    sum.default_alpha = default_alpha_;
    for (std::size_t i = 0; i < records_.size(); ++i) {
        switch (records_[i].status) {
        case Status::pending: ++sum.pending; break;
        case Status::accepted: ++sum.accepted; break;
        case Status::failed: ++sum.failed; break;
        }
        if (is_orphaned(i))
            sum.orphaned.push_back(records_[i].image_id);
    }
    return sum;
}

View Session::view(std::size_t index) const {
    const AnnotationRecord& rec = records_.at(index);
    if (is_orphaned(index))
        throw Error(Errc::io_error, "image missing on disk (orphaned record): " + rec.image_id);
    RgbImage image = load_image(image_path(index));
    try {
        Segmentation seg = segment(image, rec.alpha, rec.user_offset);
        return View{std::move(image), std::move(seg.mask), seg.thresholds, rec, std::nullopt};
    } catch (const Error& e) {
        if (!e.is_degenerate())
            throw;
        BinaryMask empty(image.width(), image.height());
        return View{std::move(image), std::move(empty), std::nullopt, rec, e.code()};
    }
}

Segmentation Session::preview(std::size_t index, int user_offset) const {
    const AnnotationRecord& rec = records_.at(index);
    if (is_orphaned(index))
        throw Error(Errc::io_error, "image missing on disk (orphaned record): " + rec.image_id);
    return segment(load_image(image_path(index)), rec.alpha, user_offset);
}

const AnnotationRecord& Session::adjust_threshold(std::size_t index, int delta) {
    AnnotationRecord updated = records_.at(index);
    if (!updated.uthv) {
        const ThresholdSet ts = preview(index, updated.user_offset).thresholds;
        set_thresholds(updated, ts);
    }
    const double uthv = *updated.uthv;
    const double lo = -std::ceil(uthv);
    const double hi = std::ceil(255.0 - uthv);
    const double wanted = static_cast<double>(updated.user_offset) + static_cast<double>(delta);
    updated.user_offset = static_cast<int>(std::clamp(wanted, lo, hi));

    if (updated.status == Status::accepted) {
        remove_if_exists(mask_file(index));
        updated.status = Status::pending;
        updated.mask_path.reset();
    }
    updated.updated_at = utc_timestamp();
    return commit(index, std::move(updated));
}

const AnnotationRecord& Session::accept(std::size_t index) {
    AnnotationRecord updated = records_.at(index);
    const Segmentation seg = preview(index, updated.user_offset);

    ensure_dir(root_ / kMaskDir);
    save_mask_png(seg.mask, mask_file(index));
    remove_if_exists(failed_file(index));

    set_thresholds(updated, seg.thresholds);
    updated.status = Status::accepted;
    updated.mask_path = mask_relpath(index);
    updated.updated_at = utc_timestamp();
    commit(index, std::move(updated));
    advance_from(index);
    return records_[index];
}

const AnnotationRecord& Session::mark_failed(std::size_t index) {
    AnnotationRecord updated = records_.at(index);
    if (is_orphaned(index))
        throw Error(Errc::io_error, "image missing on disk (orphaned record): " + updated.image_id);

    ensure_dir(root_ / kFailedDir);
    write_file_atomic(failed_file(index), read_file(image_path(index)));
    remove_if_exists(mask_file(index));

    updated.status = Status::failed;
    updated.mask_path.reset();
    updated.updated_at = utc_timestamp();
    commit(index, std::move(updated));
    advance_from(index);
    return records_[index];
}

std::size_t Session::navigate(Direction direction) {
    if (direction == Direction::next && cursor_ + 1 < records_.size())
        ++cursor_;
    else if (direction == Direction::prev && cursor_ > 0)
        --cursor_;
    return cursor_;
}

void Session::set_cursor(std::size_t index) {
    if (index >= records_.size())
        throw Error(Errc::invalid_argument, "cursor out of range");
    cursor_ = index;
}

std::vector<std::string> Session::audit() const {
    std::vector<std::string> issues;
    std::error_code ec;
    for (std::size_t i = 0; i < records_.size(); ++i) {
        const AnnotationRecord& r = records_[i];
        const bool has_mask = fs::exists(mask_file(i), ec);
        const bool has_failed_copy = fs::exists(failed_file(i), ec);
        if (is_orphaned(i))
            issues.push_back(r.image_id + ": source image missing (orphaned)");
        switch (r.status) {
        case Status::accepted:
            if (!r.mask_path || !has_mask) {
                issues.push_back(r.image_id + ": accepted but mask file missing");
            } else if (!is_orphaned(i)) {
                try {
                    const BinaryMask mask = load_mask(mask_file(i));
                    const RgbImage image = load_image(image_path(i));
                    if (!mask.same_shape(image))
                        issues.push_back(r.image_id + ": mask dimensions differ from the image");
                } catch (const Error& e) {
                    issues.push_back(r.image_id + ": " + e.what());
                }
            }
            if (has_failed_copy)
                issues.push_back(r.image_id + ": accepted but a failed copy exists");
            break;
        case Status::failed:
            if (r.mask_path || has_mask)
                issues.push_back(r.image_id + ": failed but a mask is present");
            if (!has_failed_copy)
                issues.push_back(r.image_id + ": failed but the failed copy is missing");
            break;
        case Status::pending:
            if (r.mask_path || has_mask)
                issues.push_back(r.image_id + ": pending but a mask is present");
            if (has_failed_copy)
                issues.push_back(r.image_id + ": pending but a failed copy exists");
            break;
        }
        if (r.uthv) {
            if (r.user_offset < -std::ceil(*r.uthv) || r.user_offset > std::ceil(255.0 - *r.uthv))
                issues.push_back(r.image_id + ": user offset outside the clamp range");
        }
    }
    return issues;
}

void Session::persist() const {
    json j;
    j["version"] = kSidecarVersion;
    j["default_alpha"] = default_alpha_;
    j["records"] = json::array();
    for (const AnnotationRecord& r : records_)
        j["records"].push_back(detail::record_to_json(r));
    const std::string text = j.dump(2) + "\n";
    write_file_atomic(root_ / kSidecarName,
                      std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

void Session::advance_from(std::size_t index) {
    auto pending = [&](std::size_t i) { return records_[i].status == Status::pending; };
    for (std::size_t i = index + 1; i < records_.size(); ++i) {
        if (pending(i)) {
            cursor_ = i;
            return;
        }
    }
    for (std::size_t i = 0; i < index; ++i) {
        if (pending(i)) {
            cursor_ = i;
            return;
        }
    }
    cursor_ = index;
}

const AnnotationRecord& Session::commit(std::size_t index, AnnotationRecord updated) {
    AnnotationRecord previous = std::exchange(records_.at(index), std::move(updated));
    try {
        persist();
    } catch (...) {
        records_[index] = std::move(previous);
        throw;
    }
    return records_[index];
}

}  // namespace easygt
