#pragma once

#include <filesystem>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace pagevis {

class SourceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Read access to a tree mirroring the newspaper batch file structure.
/// Paths are '/'-separated and relative to the source root.
class PageSource {
public:
    virtual ~PageSource() = default;

    virtual std::string fetch(std::string_view relative_path) const = 0;

    /// Every file below `prefix` (a directory), relative to the root, sorted.
    virtual std::vector<std::string> list(std::string_view prefix) const = 0;

    virtual std::string describe() const = 0;
};

class LocalSource final : public PageSource {
public:
    explicit LocalSource(std::filesystem::path root);
    std::string fetch(std::string_view relative_path) const override;
    std::vector<std::string> list(std::string_view prefix) const override;
    std::string describe() const override { return root_.string(); }

private:
    std::filesystem::path root_;
};

/// HTTP(S) mirror. list() crawls HTML directory indexes (href links, with
/// trailing '/' meaning subdirectory) up to a fixed depth.
class HttpSource final : public PageSource {
public:
    explicit HttpSource(std::string base_url);
    std::string fetch(std::string_view relative_path) const override;
    std::vector<std::string> list(std::string_view prefix) const override;
    std::string describe() const override { return origin_ + base_path_; }

private:
    std::string get(const std::string& path) const;

    std::string origin_;     // scheme://host[:port]
    std::string base_path_;  // always ends with '/'
};

/// LocalSource for plain paths, HttpSource for http:// and https:// URLs.
std::unique_ptr<PageSource> open_source(const std::string& location);

/// href targets found in an HTML page, in document order.
std::vector<std::string> extract_links(std::string_view html);

}  // namespace pagevis
