#pragma once

// Fixture builders shared by the unit and acceptance tests.

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <opencv2/core.hpp>

#include "pagevis/image.hpp"
#include "pagevis/records.hpp"

namespace testsupport {

namespace fs = std::filesystem;

class TempDir {
public:
    TempDir() {
        std::random_device rd;
        for (;;) {
            path_ = fs::temp_directory_path() / ("pagevis-test-" + std::to_string(rd()));
            if (fs::create_directory(path_)) break;
        }
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const fs::path& path() const noexcept { return path_; }
    fs::path operator/(const fs::path& p) const { return path_ / p; }

private:
    fs::path path_;
};

inline void write_file(const fs::path& p, std::string_view bytes) {
    fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

inline std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Deterministic textured page image.
inline cv::Mat synthetic_image(int width, int height, unsigned seed) {
    cv::Mat m(height, width, CV_8UC3);
    for (int y = 0; y < height; ++y) {
        auto* row = m.ptr<unsigned char>(y);
        for (int x = 0; x < width; ++x) {
            row[3 * x + 0] = static_cast<unsigned char>((x * 7 + y * 3 + seed * 31) & 0xff);
            row[3 * x + 1] = static_cast<unsigned char>(((x / 16 + y / 16 + seed) % 2) * 200 + 20);
            row[3 * x + 2] = static_cast<unsigned char>((x ^ y ^ seed) & 0xff);
        }
    }
    return m;
}

inline std::string jpeg_bytes(const cv::Mat& m) {
    const auto v = pagevis::encode_jpeg(m, 92);
    return {v.begin(), v.end()};
}

struct AltoWord {
    std::string text;
    double hpos, vpos, width, height;
};

inline std::string alto_xml(double page_w, double page_h, const std::vector<AltoWord>& words) {
    std::ostringstream x;
    x << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<alto xmlns=\"http://www.loc.gov/standards/alto/ns-v2#\">\n"
      << "<Description><MeasurementUnit>inch1200</MeasurementUnit></Description>\n"
      << "<Layout><Page ID=\"P1\" WIDTH=\"" << page_w << "\" HEIGHT=\"" << page_h << "\">\n"
      << "<PrintSpace><TextBlock><TextLine>\n";
    for (const auto& w : words) {
        x << "<String CONTENT=\"" << w.text << "\" HPOS=\"" << w.hpos << "\" VPOS=\"" << w.vpos << "\" WIDTH=\""
          << w.width << "\" HEIGHT=\"" << w.height << "\"/>\n";
    }
    x << "</TextLine></TextBlock></PrintSpace></Page></Layout></alto>\n";
    return x.str();
}

/// A small word grid covering the page, so most boxes collect some OCR.
inline std::vector<AltoWord> word_grid(double page_w, double page_h, int cols, int rows) {
    std::vector<AltoWord> out;
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            out.push_back({"w" + std::to_string(r) + "_" + std::to_string(c), page_w * (c + 0.1) / cols,
                           page_h * (r + 0.1) / rows, page_w * 0.8 / cols, page_h * 0.6 / rows});
        }
    }
    return out;
}

/// Writes `n` image+ALTO page pairs under root/batch; returns manifest entries.
inline std::vector<std::string> make_corpus(const fs::path& root, const std::string& batch, int n) {
    std::vector<std::string> entries;
    for (int i = 0; i < n; ++i) {
        const auto dir = batch + "/sn83030214/1863-07-0" + std::to_string(1 + i % 9) + "/ed-1";
        const auto entry = dir + "/seq-" + std::to_string(i + 1) + ".jpg";
        write_file(root / entry, jpeg_bytes(synthetic_image(360 + 12 * i, 480, static_cast<unsigned>(i))));
        write_file(root / (dir + "/seq-" + std::to_string(i + 1) + ".xml"), alto_xml(9000, 12000, word_grid(9000, 12000, 6, 8)));
        entries.push_back(entry);
    }
    return entries;
}

/// Every regular file under `root`, relative path -> bytes.
inline std::map<std::string, std::string> snapshot(const fs::path& root) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (e.is_regular_file()) out[fs::relative(e.path(), root).generic_string()] = read_file(e.path());
    }
    return out;
}

}  // namespace testsupport
