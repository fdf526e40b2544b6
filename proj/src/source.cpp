#include "pagevis/source.hpp"

#include <algorithm>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>

#include "httplib.h"

#include <fmt/format.h>

namespace pagevis {
namespace fs = std::filesystem;

namespace {

std::string trim_slashes(std::string_view s) {
    while (!s.empty() && s.front() == '/') s.remove_prefix(1);
    while (!s.empty() && s.back() == '/') s.remove_suffix(1);
    return std::string(s);
}

bool escapes_root(std::string_view rel) {
    return fs::path(rel).lexically_normal().string().starts_with("..") || fs::path(rel).is_absolute();
}

}  // namespace

LocalSource::LocalSource(fs::path root) : root_(std::move(root)) {
    if (!fs::is_directory(root_)) throw SourceError(fmt::format("source directory {} is not readable", root_.string()));
}

std::string LocalSource::fetch(std::string_view relative_path) const {
    if (escapes_root(relative_path)) throw SourceError(fmt::format("path {} escapes the source root", relative_path));
    const auto path = root_ / fs::path(relative_path);
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SourceError(fmt::format("cannot read {}", path.string()));
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw SourceError(fmt::format("I/O error reading {}", path.string()));
    return std::move(ss).str();
}

std::vector<std::string> LocalSource::list(std::string_view prefix) const {
    const auto dir = trim_slashes(prefix);
    const auto start = dir.empty() ? root_ : root_ / dir;
    if (!fs::is_directory(start)) throw SourceError(fmt::format("{} is not a directory", start.string()));
    std::vector<std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(start)) {
        if (e.is_regular_file()) out.push_back(fs::relative(e.path(), root_).generic_string());
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<std::string> extract_links(std::string_view html) {
    static const std::regex href(R"(href\s*=\s*["']([^"']+)["'])", std::regex::icase);
    std::vector<std::string> out;
    for (std::cregex_iterator it(html.data(), html.data() + html.size(), href), end; it != end; ++it) {
        out.push_back((*it)[1].str());
    }
    return out;
}

HttpSource::HttpSource(std::string base_url) {
    static const std::regex url(R"(^(https?://[^/]+)(/.*)?$)", std::regex::icase);
    std::smatch m;
    if (!std::regex_match(base_url, m, url)) throw SourceError(fmt::format("not an http(s) URL: {}", base_url));
    origin_ = m[1].str();
    base_path_ = m[2].matched ? m[2].str() : "/";
    if (!base_path_.ends_with('/')) base_path_ += '/';
}

std::string HttpSource::get(const std::string& path) const {
    httplib::Client client(origin_);
    client.set_follow_location(true);
    client.set_connection_timeout(10);
    client.set_read_timeout(60);
    auto res = client.Get(path);
    if (!res) throw SourceError(fmt::format("GET {}{} failed: {}", origin_, path, httplib::to_string(res.error())));
    if (res->status != 200) throw SourceError(fmt::format("GET {}{} returned HTTP {}", origin_, path, res->status));
    return std::move(res->body);
}

std::string HttpSource::fetch(std::string_view relative_path) const {
    if (escapes_root(relative_path)) throw SourceError(fmt::format("path {} escapes the source root", relative_path));
    return get(base_path_ + trim_slashes(relative_path));
}

std::vector<std::string> HttpSource::list(std::string_view prefix) const {
    constexpr int kMaxDepth = 8;
    std::vector<std::string> files;
    std::set<std::string> seen;

    struct Pending {
        std::string rel_dir;  // "" or "a/b/"
        int depth;
    };
    const auto start = trim_slashes(prefix);
    std::vector<Pending> stack{{start.empty() ? std::string() : start + "/", 0}};
    while (!stack.empty()) {
        auto [dir, depth] = stack.back();
        stack.pop_back();
        if (!seen.insert(dir).second) continue;
        const auto html = get(base_path_ + dir);
        for (auto link : extract_links(html)) {
            if (link.empty() || link.front() == '?' || link.front() == '#' || link.front() == '/' ||
                link.starts_with("..") || link.find("://") != std::string::npos) {
                continue;
            }
            if (link.starts_with("./")) link.erase(0, 2);
            if (link.ends_with('/')) {
                if (depth + 1 <= kMaxDepth) stack.push_back({dir + link, depth + 1});
            } else {
                files.push_back(dir + link);
            }
        }
    }
    std::sort(files.begin(), files.end());
    files.erase(std::unique(files.begin(), files.end()), files.end());
    return files;
}

std::unique_ptr<PageSource> open_source(const std::string& location) {
    if (location.starts_with("http://") || location.starts_with("https://")) {
        return std::make_unique<HttpSource>(location);
    }
    return std::make_unique<LocalSource>(location);
}

}  // namespace pagevis
