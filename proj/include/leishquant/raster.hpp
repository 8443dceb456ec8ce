#pragma once

#include <string>
#include <vector>

#include "leishquant/plane.hpp"

namespace lq {

struct OverlayMarker {
    double x = 0, y = 0;
    enum Kind { macrophage, parasite, sub_centroid } kind = macrophage;
};

struct OverlayLink {
    double x1 = 0, y1 = 0;  // parasite end
    double x2 = 0, y2 = 0;  // macrophage end
};

struct AnnotationSet {
    std::vector<OverlayMarker> markers;
    std::vector<OverlayLink> links;
};

struct RgbImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> data;  // interleaved r,g,b

    RgbImage() = default;
    RgbImage(int w, int h) : width(w), height(h), data(static_cast<std::size_t>(w) * h * 3, 0) {}
    std::uint8_t* px(int x, int y) {
        return data.data() + (static_cast<std::size_t>(y) * width + x) * 3;
    }
    const std::uint8_t* px(int x, int y) const {
        return data.data() + (static_cast<std::size_t>(y) * width + x) * 3;
    }
};

// Loads an RGB raster (png/bmp/tiff/jpeg) or a JSON channel manifest
// {"macrophage": path, "parasite": path, "cytoplasm": path}.
ChannelSet load_image(const std::string& path);

ChannelSet load_manifest(const std::string& path);

// Inverse of channel splitting: r=cytoplasm, g=parasite, b=macrophage.
RgbImage merge_channels(const ChannelSet& channels);

RgbImage render_overlay(const ChannelSet& channels, const AnnotationSet& annotations);

void save_png(const RgbImage& image, const std::string& path);
void save_png(const Plane& plane, const std::string& path);

// Integer Bresenham segment; exposed for the overlay renderer.
std::vector<std::pair<int, int>> bresenham_line(int x0, int y0, int x1, int y1);

}  // namespace lq
