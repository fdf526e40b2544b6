#include "pagevis/image.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>
#include <opencv2/imgcodecs.hpp>

namespace pagevis {

cv::Mat decode_image(std::span<const char> bytes) {
    if (bytes.empty()) throw ImageError("empty image data");
    const cv::Mat raw(1, static_cast<int>(bytes.size()), CV_8UC1, const_cast<char*>(bytes.data()));
    cv::Mat img;
    try {
        img = cv::imdecode(raw, cv::IMREAD_ANYCOLOR);
    } catch (const cv::Exception& e) {
        throw ImageError(fmt::format("image decode failed: {}", e.what()));
    }
    if (img.empty()) throw ImageError("image decode failed: unsupported or corrupt data");
    if (img.depth() != CV_8U) throw ImageError("only 8-bit images are supported");
    if (img.channels() == 4) {
        // drop alpha
        std::vector<cv::Mat> planes;
        cv::split(img, planes);
        planes.pop_back();
        cv::Mat bgr;
        cv::merge(planes, bgr);
        img = bgr;
    }
    return img;
}

cv::Mat downsample(const cv::Mat& src, int factor) {
    if (factor < 1) throw ImageError("downsample factor must be positive");
    if (src.depth() != CV_8U) throw ImageError("downsample expects an 8-bit image");
    if (factor == 1) return src.clone();

    const int channels = src.channels();
    const int out_w = (src.cols + factor - 1) / factor;
    const int out_h = (src.rows + factor - 1) / factor;
    cv::Mat dst(out_h, out_w, src.type());
    std::vector<unsigned> acc(static_cast<std::size_t>(out_w) * channels);

    for (int oy = 0; oy < out_h; ++oy) {
        std::fill(acc.begin(), acc.end(), 0u);
        const int y0 = oy * factor;
        const int y1 = std::min(src.rows, y0 + factor);
        for (int y = y0; y < y1; ++y) {
            const auto* row = src.ptr<unsigned char>(y);
            for (int x = 0; x < src.cols; ++x) {
                const int ox = x / factor;
                for (int c = 0; c < channels; ++c) acc[static_cast<std::size_t>(ox) * channels + c] += row[x * channels + c];
            }
        }
        auto* out = dst.ptr<unsigned char>(oy);
        const unsigned rows = static_cast<unsigned>(y1 - y0);
        for (int ox = 0; ox < out_w; ++ox) {
            const unsigned cols = static_cast<unsigned>(std::min(src.cols, (ox + 1) * factor) - ox * factor);
            const unsigned n = rows * cols;
            for (int c = 0; c < channels; ++c) {
                const unsigned sum = acc[static_cast<std::size_t>(ox) * channels + c];
                out[ox * channels + c] = static_cast<unsigned char>((sum + n / 2) / n);
            }
        }
    }
    return dst;
}

cv::Rect crop_rect(const cv::Size& size, const NormBox& box) {
    auto px = [](double v, int extent) { return std::clamp(static_cast<int>(std::lround(v * extent)), 0, extent); };
    const int x1 = px(box.x1(), size.width);
    const int x2 = px(box.x2(), size.width);
    const int y1 = px(box.y1(), size.height);
    const int y2 = px(box.y2(), size.height);
    return cv::Rect(x1, y1, std::max(0, x2 - x1), std::max(0, y2 - y1));
}

std::optional<cv::Mat> crop(const cv::Mat& image, const NormBox& box) {
    const auto r = crop_rect(image.size(), box);
    if (r.width <= 0 || r.height <= 0) return std::nullopt;
    return image(r).clone();
}

std::vector<unsigned char> encode_jpeg(const cv::Mat& image, int quality) {
    std::vector<unsigned char> buf;
    const std::vector<int> params = {cv::IMWRITE_JPEG_QUALITY, std::clamp(quality, 1, 100)};
    if (!cv::imencode(".jpg", image, buf, params)) throw ImageError("JPEG encoding failed");
    return buf;
}

}  // namespace pagevis
