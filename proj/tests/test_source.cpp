#include <thread>

#include "doctest.h"
#include "httplib.h"
#include "pagevis/pipeline.hpp"
#include "pagevis/source.hpp"
#include "support.hpp"

using namespace pagevis;
namespace fs = std::filesystem;

namespace {

/// Serves `root` over HTTP with plain directory-index pages.
class IndexServer {
public:
    explicit IndexServer(fs::path root) : root_(std::move(root)) {
        server_.Get(R"(/.*)", [this](const httplib::Request& req, httplib::Response& res) {
            const auto rel = req.path.substr(1);
            const auto p = root_ / rel;
            if (fs::is_directory(p)) {
                std::string html = "<html><body><a href=\"../\">Parent</a><a href=\"?C=M\">sort</a>\n";
                std::vector<std::string> names;
                for (const auto& e : fs::directory_iterator(p)) {
                    names.push_back(e.path().filename().string() + (e.is_directory() ? "/" : ""));
                }
                std::sort(names.begin(), names.end());
                for (const auto& n : names) html += "<a href=\"" + n + "\">" + n + "</a>\n";
                html += "<a href=\"https://elsewhere.example/x.jpg\">x</a></body></html>";
                res.set_content(html, "text/html");
            } else if (fs::is_regular_file(p)) {
                res.set_content(testsupport::read_file(p), "application/octet-stream");
            } else {
                res.status = 404;
            }
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~IndexServer() {
        server_.stop();
        thread_.join();
    }
    std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/"; }

private:
    fs::path root_;
    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
};

}  // namespace

TEST_SUITE("source") {

TEST_CASE("local source lists sorted relative paths and fetches bytes") {
    testsupport::TempDir dir;
    testsupport::write_file(dir / "b/x/2.txt", "two");
    testsupport::write_file(dir / "b/x/1.txt", "one");
    testsupport::write_file(dir / "other/3.txt", "three");
    LocalSource src(dir.path());
    CHECK(src.list("b") == std::vector<std::string>{"b/x/1.txt", "b/x/2.txt"});
    CHECK(src.list("").size() == 3);
    CHECK(src.fetch("b/x/2.txt") == "two");
    CHECK_THROWS_AS(src.fetch("b/x/missing.txt"), SourceError);
    CHECK_THROWS_AS(src.fetch("../etc/passwd"), SourceError);
    CHECK_THROWS_AS(src.list("nope"), SourceError);
    CHECK_THROWS_AS(LocalSource(dir / "no-such-root"), SourceError);
}

TEST_CASE("link extraction") {
    const auto links = extract_links(R"(<a href="a/">a</a> <A HREF='b.jpg'>b</A> <a class="x" href="c.xml">)");
    CHECK(links == std::vector<std::string>{"a/", "b.jpg", "c.xml"});
}

TEST_CASE("http source crawls directory indexes and fetches files") {
    testsupport::TempDir dir;
    const auto entries = testsupport::make_corpus(dir.path(), "batch_a", 3);
    testsupport::write_file(dir / "batch_a/README.txt", "notes");
    IndexServer server(dir.path());

    const auto src = open_source(server.url());
    const auto files = src->list("batch_a");
    CHECK(files.size() == 7);
    CHECK(std::is_sorted(files.begin(), files.end()));

    const auto built = build_manifest(*src, "batch_a");
    CHECK(built.manifest.entries == entries);
    CHECK(built.warnings.empty());

    CHECK(src->fetch(entries[0]) == testsupport::read_file(dir / entries[0]));
    CHECK_THROWS_AS(src->fetch("batch_a/missing.jpg"), SourceError);
    CHECK_THROWS_AS(src->fetch("../x"), SourceError);
}

TEST_CASE("unreachable http source is an I/O error") {
    HttpSource src("http://127.0.0.1:9/");
    CHECK_THROWS_AS(src.fetch("a.jpg"), SourceError);
    CHECK_THROWS_AS(HttpSource("ftp://x"), SourceError);
}

}  // TEST_SUITE
