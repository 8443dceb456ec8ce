#include "leishquant/features.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

namespace lq {

std::pair<double, double> centroid(const Region& region) {
    if (region.pixels.empty())
        throw std::invalid_argument("centroid: empty region");
    double sx = 0.0, sy = 0.0;
    for (auto [x, y] : region.pixels) {
        sx += x;
        sy += y;
    }
    double n = static_cast<double>(region.pixels.size());
    return {sx / n, sy / n};
}

BBox min_bbox(const Region& region) {
    if (region.pixels.empty())
        throw std::invalid_argument("min_bbox: empty region");
    BBox b{region.pixels[0].first, region.pixels[0].second, region.pixels[0].first,
           region.pixels[0].second};
    for (auto [x, y] : region.pixels) {
        b.min_x = std::min(b.min_x, x);
        b.min_y = std::min(b.min_y, y);
        b.max_x = std::max(b.max_x, x);
        b.max_y = std::max(b.max_y, y);
    }
    return b;
}

namespace {

// Freeman directions in image coordinates (y grows downward):
// 0 E, 1 NE, 2 N, 3 NW, 4 W, 5 SW, 6 S, 7 SE
constexpr int kDx[8] = {1, 1, 0, -1, -1, -1, 0, 1};
constexpr int kDy[8] = {0, -1, -1, -1, 0, 1, 1, 1};

}  // namespace

ChainCode freeman_chain(const Region& region) {
    if (region.pixels.empty())
        throw std::invalid_argument("freeman_chain: empty region");

    BBox b = min_bbox(region);
    const int w = b.max_x - b.min_x + 1;
    const int h = b.max_y - b.min_y + 1;
    std::vector<std::uint8_t> grid(static_cast<std::size_t>(w) * h, 0);
    for (auto [x, y] : region.pixels)
        grid[static_cast<std::size_t>(y - b.min_y) * w + (x - b.min_x)] = 1;
    auto inside = [&](int x, int y) {
        int lx = x - b.min_x, ly = y - b.min_y;
        return lx >= 0 && lx < w && ly >= 0 && ly < h &&
               grid[static_cast<std::size_t>(ly) * w + lx] != 0;
    };

    // top-most then left-most pixel
    int sx = region.pixels[0].first, sy = region.pixels[0].second;
    for (auto [x, y] : region.pixels)
        if (y < sy || (y == sy && x < sx)) {
            sx = x;
            sy = y;
        }

    ChainCode chain;
    chain.start_x = sx;
    chain.start_y = sy;
    if (region.pixels.size() == 1)
        return chain;

    // Moore neighbour trace, clockwise on screen; initial backtrack is west
    // (guaranteed background for the start pixel).
    int cx = sx, cy = sy;
    int back_dir = 4;  // direction from current pixel to its backtrack neighbour
    int first_code = -1;
    const std::size_t cap = 8 * region.pixels.size() + 16;
    while (chain.codes.size() < cap) {
        int found = -1;
        int dir = back_dir;
        for (int step = 0; step < 8; ++step) {
            dir = (dir + 7) % 8;  // clockwise in image coordinates
            if (inside(cx + kDx[dir], cy + kDy[dir])) {
                found = dir;
                break;
            }
        }
        if (found < 0)
            break;  // isolated pixel (already handled) - defensive
        if (cx == sx && cy == sy && first_code >= 0 && found == first_code)
            break;  // Jacob's stopping criterion
        if (first_code < 0)
            first_code = found;
        chain.codes.push_back(found);
        int nx = cx + kDx[found], ny = cy + kDy[found];
        // backtrack = last background neighbour checked before `found`
        int prev = (found + 1) % 8;
        int bx = cx + kDx[prev], by = cy + kDy[prev];
        cx = nx;
        cy = ny;
        // direction from new current pixel to that background neighbour
        back_dir = -1;
        for (int d = 0; d < 8; ++d)
            if (cx + kDx[d] == bx && cy + kDy[d] == by) {
                back_dir = d;
                break;
            }
        if (back_dir < 0)
            back_dir = (found + 4) % 8;  // fall back to reverse of the move
    }
    return chain;
}

double chain_perimeter(const ChainCode& chain) {
    double p = 0.0;
    for (int c : chain.codes)
        p += (c % 2 == 1) ? std::numbers::sqrt2 : 1.0;
    return p;
}

ShapeClass shape_descriptor(const ChainCode& chain, long long area, double cutoff) {
    if (chain.codes.empty() || area <= 2)
        return ShapeClass::circular_or_elliptical;
    double perimeter = chain_perimeter(chain);
    double ratio = 4.0 * std::numbers::pi * static_cast<double>(area) / (perimeter * perimeter);
    return ratio >= cutoff ? ShapeClass::circular_or_elliptical : ShapeClass::other;
}

FeatureVector extract_features(Region& region) {
    FeatureVector f;
    f.area = static_cast<long long>(region.pixels.size());
    std::tie(f.cx, f.cy) = centroid(region);
    f.bbox = min_bbox(region);
    region.contour = freeman_chain(region);
    f.shape = shape_descriptor(region.contour, f.area);
    return f;
}

}  // namespace lq
