#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <opencv2/core.hpp>

#include "pagevis/geometry.hpp"

namespace pagevis {

class ImageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Decodes JPEG/PNG bytes to an 8-bit image (1 or 3 channels).
cv::Mat decode_image(std::span<const char> bytes);

/// Integer-factor box filter. Output is ceil(W/f) x ceil(H/f); edge blocks
/// average only the source pixels they cover.
cv::Mat downsample(const cv::Mat& src, int factor);

/// Pixel rectangle [round(x1 W), round(x2 W)) x [round(y1 H), round(y2 H)).
/// Empty (width or height zero) when the box is sub-pixel at this scale.
cv::Rect crop_rect(const cv::Size& size, const NormBox& box);

/// Deep copy of crop_rect(); std::nullopt when the rectangle is empty.
std::optional<cv::Mat> crop(const cv::Mat& image, const NormBox& box);

std::vector<unsigned char> encode_jpeg(const cv::Mat& image, int quality);

}  // namespace pagevis
