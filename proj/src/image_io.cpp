#include "easygt/image_io.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iterator>
#include <string>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

namespace easygt {

namespace {

RgbImage from_mat(const cv::Mat& decoded) {
    cv::Mat bgr = decoded;
    if (bgr.depth() != CV_8U)
        throw Error(Errc::decode_error, "only 8-bit images are supported");
    if (bgr.channels() != 3)
        throw Error(Errc::decode_error, "decoder returned an unexpected channel count");

    RgbImage img(bgr.cols, bgr.rows);
    for (int y = 0; y < bgr.rows; ++y) {
        const auto* row = bgr.ptr<cv::Vec3b>(y);
        for (int x = 0; x < bgr.cols; ++x)
            img.at(x, y) = Rgb{row[x][2], row[x][1], row[x][0]};
    }
    return img;
}

std::vector<std::uint8_t> encode(const cv::Mat& mat) {
    std::vector<std::uint8_t> out;
    const std::vector<int> params{cv::IMWRITE_PNG_COMPRESSION, 3};
    if (!cv::imencode(".png", mat, out, params))
        throw Error(Errc::io_error, "PNG encoding failed");
    return out;
}

constexpr int kReadFlags = cv::IMREAD_COLOR | cv::IMREAD_IGNORE_ORIENTATION;

}  // namespace

RgbImage load_image(const fs::path& path) {
    std::error_code ec;
    if (!fs::is_regular_file(path, ec))
        throw Error(Errc::not_found, "image not found: " + path.string());
    const auto bytes = read_file(path);
    try {
        return decode_image(bytes);
    } catch (const Error& e) {
        throw Error(e.code(), path.string() + ": " + e.what());
    }
}

RgbImage decode_image(std::span<const std::uint8_t> bytes) {
    if (bytes.empty())
        throw Error(Errc::decode_error, "empty file");
    // imdecode does not modify the buffer.
    const cv::Mat buf(1, static_cast<int>(bytes.size()), CV_8U, const_cast<std::uint8_t*>(bytes.data()));
    cv::Mat decoded;
    try {
        decoded = cv::imdecode(buf, kReadFlags);
    } catch (const cv::Exception& e) {
        throw Error(Errc::decode_error, std::string("cannot decode image: ") + e.what());
    }
    if (decoded.empty())
        throw Error(Errc::decode_error, "cannot decode image");
    return from_mat(decoded);
}

BinaryMask load_mask(const fs::path& path) {
    std::error_code ec;
    if (!fs::is_regular_file(path, ec))
        throw Error(Errc::not_found, "mask not found: " + path.string());
    const auto bytes = read_file(path);
    const cv::Mat buf(1, static_cast<int>(bytes.size()), CV_8U, const_cast<std::uint8_t*>(bytes.data()));
    cv::Mat gray;
    try {
        gray = cv::imdecode(buf, cv::IMREAD_GRAYSCALE | cv::IMREAD_IGNORE_ORIENTATION);
    } catch (const cv::Exception&) {
    }
    if (gray.empty() || gray.depth() != CV_8U)
        throw Error(Errc::decode_error, "cannot decode mask: " + path.string());

    BinaryMask mask(gray.cols, gray.rows);
    for (int y = 0; y < gray.rows; ++y) {
        const auto* row = gray.ptr<std::uint8_t>(y);
        for (int x = 0; x < gray.cols; ++x)
            mask.at(x, y) = row[x] >= 128 ? Label::nucleus : Label::background;
    }
    return mask;
}

std::vector<std::uint8_t> encode_png(const RgbImage& img) {
    cv::Mat bgr(img.height(), img.width(), CV_8UC3);
    for (int y = 0; y < img.height(); ++y) {
        auto* row = bgr.ptr<cv::Vec3b>(y);
        for (int x = 0; x < img.width(); ++x) {
            const Rgb p = img.at(x, y);
            row[x] = cv::Vec3b(p.b, p.g, p.r);
        }
    }
    return encode(bgr);
}

std::vector<std::uint8_t> encode_mask_png(const BinaryMask& mask) {
    cv::Mat gray(mask.height(), mask.width(), CV_8UC1);
    for (int y = 0; y < mask.height(); ++y) {
        auto* row = gray.ptr<std::uint8_t>(y);
        for (int x = 0; x < mask.width(); ++x)
            row[x] = mask.at(x, y) == Label::nucleus ? 255 : 0;
    }
    return encode(gray);
}

void save_png(const RgbImage& img, const fs::path& path) {
    write_file_atomic(path, encode_png(img));
}

void save_mask_png(const BinaryMask& mask, const fs::path& path) {
    write_file_atomic(path, encode_mask_png(mask));
}

std::vector<std::uint8_t> read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(Errc::io_error, "cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad())
        throw Error(Errc::io_error, "read failed: " + path.string());
    return bytes;
}

void write_file_atomic(const fs::path& path, std::span<const std::uint8_t> bytes) {
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw Error(Errc::io_error, "cannot write " + tmp.string());
        out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        out.flush();
        if (!out)
            throw Error(Errc::io_error, "write failed: " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw Error(Errc::io_error, "cannot replace " + path.string());
    }
}

bool is_supported_image(const fs::path& path) {
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext == ".png" || ext == ".jpg" || ext == ".jpeg" || ext == ".bmp";
}

std::vector<fs::path> list_images(const fs::path& dir) {
    std::error_code ec;
    fs::directory_iterator it(dir, ec);
    if (ec)
        throw Error(Errc::io_error, "cannot read directory " + dir.string() + ": " + ec.message());
    std::vector<fs::path> out;
    for (const auto& entry : it) {
        if (entry.is_regular_file(ec) && is_supported_image(entry.path()))
            out.push_back(entry.path());
    }
    std::sort(out.begin(), out.end(),
              [](const fs::path& a, const fs::path& b) { return a.filename().string() < b.filename().string(); });
    return out;
}

}  // namespace easygt
