#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include "leishquant/features.hpp"

using namespace lq;

namespace {

Region make_region(std::vector<std::pair<int, int>> pixels) {
    Region r;
    r.id = 1;
    std::sort(pixels.begin(), pixels.end(), [](auto a, auto b) {
        return a.second != b.second ? a.second < b.second : a.first < b.first;
    });
    r.pixels = std::move(pixels);
    return r;
}

// direction convention: 0=E, 1=NE, ... counterclockwise, image y pointing down
constexpr int kDx[8] = {1, 1, 0, -1, -1, -1, 0, 1};
constexpr int kDy[8] = {0, -1, -1, -1, 0, 1, 1, 1};

Region rasterized_disc(double radius) {
    std::vector<std::pair<int, int>> px;
    int r = static_cast<int>(radius) + 2;
    for (int y = -r; y <= r; ++y)
        for (int x = -r; x <= r; ++x)
            if (x * x + y * y <= radius * radius)
                px.push_back({x + r, y + r});
    return make_region(std::move(px));
}

}  // namespace

TEST_CASE("feature vector of a 2x2 square") {
    Region r = make_region({{0, 0}, {1, 0}, {0, 1}, {1, 1}});
    FeatureVector f = extract_features(r);
    CHECK(f.area == 4);
    CHECK(f.cx == doctest::Approx(0.5));
    CHECK(f.cy == doctest::Approx(0.5));
    CHECK(f.bbox.min_x == 0);
    CHECK(f.bbox.min_y == 0);
    CHECK(f.bbox.max_x == 1);
    CHECK(f.bbox.max_y == 1);
    CHECK(f.shape == ShapeClass::circular_or_elliptical);
}

TEST_CASE("feature vector of a single pixel") {
    Region r = make_region({{7, 3}});
    FeatureVector f = extract_features(r);
    CHECK(f.area == 1);
    CHECK(f.cx == doctest::Approx(7.0));
    CHECK(f.cy == doctest::Approx(3.0));
    CHECK(f.bbox.min_x == 7);
    CHECK(f.bbox.max_x == 7);
    CHECK(f.bbox.min_y == 3);
    CHECK(f.bbox.max_y == 3);
    CHECK(f.shape == ShapeClass::circular_or_elliptical);
    CHECK(r.contour.codes.empty());
}

TEST_CASE("thin line classifies as non-circular") {
    std::vector<std::pair<int, int>> px;
    for (int x = 0; x < 10; ++x)
        px.push_back({x, 0});
    Region r = make_region(std::move(px));
    CHECK(extract_features(r).shape == ShapeClass::other);
}

TEST_CASE("centroid canonical cases and summation oracle") {
    Region two = make_region({{0, 0}, {2, 0}});
    auto [cx2, cy2] = centroid(two);
    CHECK(cx2 == doctest::Approx(1.0));
    CHECK(cy2 == doctest::Approx(0.0));

    std::vector<std::pair<int, int>> block;
    for (int y = 10; y < 13; ++y)
        for (int x = 10; x < 13; ++x)
            block.push_back({x, y});
    Region b = make_region(std::move(block));
    auto [cbx, cby] = centroid(b);
    CHECK(cbx == doctest::Approx(11.0));
    CHECK(cby == doctest::Approx(11.0));

    std::mt19937 rng(5);
    std::set<std::pair<int, int>> seen;
    while (seen.size() < 50)
        seen.insert({static_cast<int>(rng() % 40), static_cast<int>(rng() % 40)});
    Region rand_region = make_region({seen.begin(), seen.end()});
    auto [cx, cy] = centroid(rand_region);
    double sx = 0, sy = 0;
    for (auto [x, y] : rand_region.pixels) {
        sx += x;
        sy += y;
    }
    CHECK(cx == doctest::Approx(sx / 50.0).epsilon(1e-9));
    CHECK(cy == doctest::Approx(sy / 50.0).epsilon(1e-9));
}

TEST_CASE("bounding box") {
    Region r = make_region({{1, 2}, {4, 7}});
    BBox bb = min_bbox(r);
    CHECK(bb.min_x == 1);
    CHECK(bb.min_y == 2);
    CHECK(bb.max_x == 4);
    CHECK(bb.max_y == 7);

    BBox single = min_bbox(make_region({{3, 3}}));
    CHECK(single.min_x == 3);
    CHECK(single.max_x == 3);
    CHECK(single.min_y == 3);
    CHECK(single.max_y == 3);

    std::mt19937 rng(6);
    std::set<std::pair<int, int>> seen;
    while (seen.size() < 30)
        seen.insert({static_cast<int>(rng() % 64), static_cast<int>(rng() % 64)});
    Region rr = make_region({seen.begin(), seen.end()});
    BBox got = min_bbox(rr);
    int mnx = 64, mny = 64, mxx = -1, mxy = -1;
    for (auto [x, y] : rr.pixels) {
        mnx = std::min(mnx, x);
        mny = std::min(mny, y);
        mxx = std::max(mxx, x);
        mxy = std::max(mxy, y);
    }
    CHECK(got.min_x == mnx);
    CHECK(got.min_y == mny);
    CHECK(got.max_x == mxx);
    CHECK(got.max_y == mxy);
}

TEST_CASE("chain code of a 2x2 block visits the four corners clockwise") {
    Region r = make_region({{0, 0}, {1, 0}, {0, 1}, {1, 1}});
    ChainCode c = freeman_chain(r);
    CHECK(c.start_x == 0);
    CHECK(c.start_y == 0);
    CHECK(c.codes == std::vector<int>{0, 6, 4, 2});
}

TEST_CASE("chain code of a horizontal bar uses only horizontal moves") {
    Region r = make_region({{0, 0}, {1, 0}, {2, 0}});
    ChainCode c = freeman_chain(r);
    CHECK(c.codes.size() == 4);
    for (int code : c.codes)
        CHECK((code == 0 || code == 4));
}

TEST_CASE("chain codes trace a closed boundary on random regions") {
    std::mt19937 rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        // grow a connected blob by random 4-neighbor accretion
        std::set<std::pair<int, int>> blob{{16, 16}};
        while (blob.size() < 5 + rng() % 60) {
            auto it = blob.begin();
            std::advance(it, rng() % blob.size());
            auto [x, y] = *it;
            switch (rng() % 4) {
                case 0: ++x; break;
                case 1: --x; break;
                case 2: ++y; break;
                default: --y; break;
            }
            if (x >= 0 && y >= 0 && x < 32 && y < 32)
                blob.insert({x, y});
        }
        Region r = make_region({blob.begin(), blob.end()});
        ChainCode c = freeman_chain(r);
        if (r.pixels.size() == 1) {
            CHECK(c.codes.empty());
            continue;
        }
        int x = c.start_x, y = c.start_y;
        CHECK(blob.count({x, y}) == 1);
        for (int code : c.codes) {
            x += kDx[code];
            y += kDy[code];
            CHECK(blob.count({x, y}) == 1);  // boundary walk stays inside the region
        }
        CHECK(x == c.start_x);
        CHECK(y == c.start_y);
    }
}

TEST_CASE("perimeter weights diagonal steps by sqrt(2)") {
    ChainCode c;
    c.codes = {0, 1, 2, 3};  // two straight, two diagonal
    CHECK(chain_perimeter(c) == doctest::Approx(2.0 + 2.0 * std::numbers::sqrt2));
}

TEST_CASE("shape descriptor separates discs from lines") {
    Region disc = rasterized_disc(10.0);
    ChainCode c = freeman_chain(disc);
    double ratio = 4.0 * std::numbers::pi * static_cast<double>(disc.pixels.size()) /
                   (chain_perimeter(c) * chain_perimeter(c));
    CHECK(ratio > 0.5);
    CHECK(shape_descriptor(c, static_cast<long long>(disc.pixels.size())) ==
          ShapeClass::circular_or_elliptical);

    std::vector<std::pair<int, int>> line;
    for (int x = 0; x < 20; ++x)
        line.push_back({x, 0});
    Region l = make_region(std::move(line));
    ChainCode lc = freeman_chain(l);
    double lratio = 4.0 * std::numbers::pi * 20.0 / (chain_perimeter(lc) * chain_perimeter(lc));
    CHECK(lratio < 0.5);
    CHECK(shape_descriptor(lc, 20) == ShapeClass::other);

    // degenerate two-pixel region defaults to circular
    Region two = make_region({{0, 0}, {1, 0}});
    CHECK(shape_descriptor(freeman_chain(two), 2) == ShapeClass::circular_or_elliptical);
}

TEST_CASE("discs classify circular across scales") {
    for (double radius : {3.0, 5.0, 8.0, 15.0, 25.0}) {
        Region disc = rasterized_disc(radius);
        CHECK(extract_features(disc).shape == ShapeClass::circular_or_elliptical);
    }
}

TEST_CASE("features are translation invariant up to the offset") {
    std::mt19937 rng(8);
    std::set<std::pair<int, int>> blob{{5, 5}};
    while (blob.size() < 40) {
        auto it = blob.begin();
        std::advance(it, rng() % blob.size());
        auto [x, y] = *it;
        blob.insert({x + static_cast<int>(rng() % 2), y + static_cast<int>(rng() % 2)});
    }
    Region a = make_region({blob.begin(), blob.end()});
    std::vector<std::pair<int, int>> shifted;
    for (auto [x, y] : blob)
        shifted.push_back({x + 13, y + 29});
    Region b = make_region(std::move(shifted));

    FeatureVector fa = extract_features(a);
    FeatureVector fb = extract_features(b);
    CHECK(fa.area == fb.area);
    CHECK(fb.cx == doctest::Approx(fa.cx + 13));
    CHECK(fb.cy == doctest::Approx(fa.cy + 29));
    CHECK(fb.bbox.min_x == fa.bbox.min_x + 13);
    CHECK(fb.bbox.max_y == fa.bbox.max_y + 29);
    CHECK(fa.shape == fb.shape);
    CHECK(a.contour.codes == b.contour.codes);
}
