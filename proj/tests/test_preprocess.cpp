#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "leishquant/preprocess.hpp"

using namespace lq;

TEST_CASE("histogram counts") {
    Plane two(2, 1);
    two.at(0, 0) = 0;
    two.at(1, 0) = 255;
    HistogramData h = histogram(two);
    CHECK(h.bins[0] == 1);
    CHECK(h.bins[255] == 1);
    CHECK(h.total == 2);

    Plane uniform(10, 10, 7);
    CHECK(histogram(uniform).bins[7] == 100);
}

TEST_CASE("histogram matches naive recount on random planes") {
    std::mt19937 rng(1);
    Plane p(64, 64);
    for (auto& v : p.data)
        v = static_cast<std::uint8_t>(rng() & 0xff);
    HistogramData h = histogram(p);
    std::uint64_t sum = 0;
    std::array<std::uint64_t, 256> oracle{};
    for (auto v : p.data)
        ++oracle[v];
    for (int i = 0; i < 256; ++i)
        CHECK(h.bins[i] == oracle[i]);
    for (auto b : h.bins)
        sum += b;
    CHECK(sum == 4096);
    CHECK(h.total == 4096);
}

TEST_CASE("round_half_up rounds half away from zero upward") {
    CHECK(round_half_up(127.5) == 128);
    CHECK(round_half_up(127.4999) == 127);
    CHECK(round_half_up(0.5) == 1);
    CHECK(round_half_up(2.0) == 2);
}

TEST_CASE("contrast stretch maps the percentile band linearly") {
    // plane engineered so the chosen percentiles give c=50, d=150
    Plane p(100, 1);
    for (int i = 0; i < 100; ++i)
        p.at(i, 0) = static_cast<std::uint8_t>(50 + i);  // 50..149
    auto [c, d] = percentile_bounds(histogram(p), 0.01, 1.0);
    CHECK(c == 50);
    CHECK(d == 149);

    // direct check of the mapping formula on a mid value: (100-50)*255/100 = 127.5 -> 128
    Plane q(3, 1);
    q.at(0, 0) = 50;
    q.at(1, 0) = 100;
    q.at(2, 0) = 150;
    // force c=50, d=150 via percentile choice on this 3-pixel plane
    Plane s = contrast_stretch(q, 0.01, 1.0);
    CHECK(s.at(0, 0) == 0);
    CHECK(s.at(1, 0) == 128);
    CHECK(s.at(2, 0) == 255);
}

TEST_CASE("contrast stretch with full-range bounds is the identity") {
    Plane p(16, 16);
    std::mt19937 rng(2);
    for (auto& v : p.data)
        v = static_cast<std::uint8_t>(rng() & 0xff);
    p.at(0, 0) = 0;
    p.at(1, 0) = 255;
    Plane s = contrast_stretch(p, 0.0, 1.0);
    for (std::size_t i = 0; i < p.data.size(); ++i)
        CHECK(s.data[i] == p.data[i]);
}

TEST_CASE("percentile bounds follow the nearest-rank order statistics") {
    Plane ramp(100, 1);
    for (int i = 0; i < 100; ++i)
        ramp.at(i, 0) = static_cast<std::uint8_t>(i);
    auto [c, d] = percentile_bounds(histogram(ramp), 0.05, 0.95);

    // sort-based oracle: value at ceil(p*n) in 1-based sorted order
    std::vector<int> sorted(ramp.data.begin(), ramp.data.end());
    std::sort(sorted.begin(), sorted.end());
    auto nearest_rank = [&](double p) {
        std::size_t r = static_cast<std::size_t>(std::ceil(p * sorted.size()));
        r = std::max<std::size_t>(r, 1);
        return sorted[r - 1];
    };
    CHECK(c == nearest_rank(0.05));
    CHECK(d == nearest_rank(0.95));

    // per-pixel recompute with endpoint clamping
    Plane s = contrast_stretch(ramp, 0.05, 0.95);
    for (int i = 0; i < 100; ++i) {
        int r = ramp.at(i, 0);
        int expect;
        if (r <= c)
            expect = 0;
        else if (r >= d)
            expect = 255;
        else
            expect = round_half_up(255.0 * (r - c) / (d - c));
        CHECK(static_cast<int>(s.at(i, 0)) == expect);
    }
}

TEST_CASE("contrast stretch is monotone non-decreasing") {
    std::mt19937 rng(3);
    Plane p(32, 32);
    for (auto& v : p.data)
        v = static_cast<std::uint8_t>(40 + (rng() % 120));
    Plane s = contrast_stretch(p, 0.05, 0.95);
    std::array<int, 256> mapped;
    mapped.fill(-1);
    for (std::size_t i = 0; i < p.data.size(); ++i)
        mapped[p.data[i]] = s.data[i];
    int prev = 0;
    for (int v = 0; v < 256; ++v) {
        if (mapped[v] < 0)
            continue;
        CHECK(mapped[v] >= prev);
        prev = mapped[v];
    }
}

TEST_CASE("degenerate stretch band is rejected") {
    Plane constant(8, 8, 42);
    CHECK_THROWS_AS(contrast_stretch(constant, 0.05, 0.95), StretchError);
}

TEST_CASE("histogram equalization") {
    Plane constant(4, 4, 9);
    Plane e = histogram_equalize(constant);
    for (auto v : e.data)
        CHECK(v == 255);

    Plane half(8, 2);
    for (int i = 0; i < 8; ++i) {
        half.at(i, 0) = 0;
        half.at(i, 1) = 255;
    }
    Plane eh = histogram_equalize(half);
    int low = eh.at(0, 0);
    CHECK((low == 127 || low == 128));
    CHECK(eh.at(0, 1) == 255);
}

TEST_CASE("equalizing an already uniform ramp is near-identity") {
    Plane ramp(256, 1);
    for (int i = 0; i < 256; ++i)
        ramp.at(i, 0) = static_cast<std::uint8_t>(i);
    Plane e = histogram_equalize(ramp);
    for (int i = 0; i < 256; ++i)
        CHECK(std::abs(static_cast<int>(e.at(i, 0)) - i) <= 1);
}

TEST_CASE("gaussian blur preserves constants") {
    Plane constant(9, 9, 77);
    Plane b = gaussian_blur(constant, 1.2, 5);
    for (auto v : b.data)
        CHECK(v == 77);
}

TEST_CASE("gaussian blur of an impulse reproduces the sampled kernel") {
    Plane p(9, 9, 0);
    p.at(4, 4) = 255;
    double sigma = 0.8;
    Plane b = gaussian_blur(p, sigma, 3);

    // direct 2-D kernel sampling oracle
    double w[3];
    double norm = 0.0;
    for (int i = -1; i <= 1; ++i) {
        w[i + 1] = std::exp(-(i * i) / (2.0 * sigma * sigma));
        norm += w[i + 1];
    }
    for (auto& x : w)
        x /= norm;
    for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
            int expect = round_half_up(255.0 * w[dx + 1] * w[dy + 1]);
            CHECK(static_cast<int>(b.at(4 + dx, 4 + dy)) == expect);
        }
    CHECK(b.at(0, 0) == 0);
}

TEST_CASE("large sigma with a fixed 3x3 kernel approaches a box filter") {
    Plane p(9, 9, 0);
    p.at(4, 4) = 90;
    Plane b = gaussian_blur(p, 1e6, 3);
    for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx)
            CHECK(static_cast<int>(b.at(4 + dx, 4 + dy)) == 10);  // 90/9
}
