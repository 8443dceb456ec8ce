#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace lq {

// Single-channel 8-bit raster, row-major.
struct Plane {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> data;

    Plane() = default;
    Plane(int w, int h, std::uint8_t fill = 0) : width(w), height(h) {
        if (w < 1 || h < 1)
            throw std::invalid_argument("Plane: dimensions must be >= 1");
        data.assign(static_cast<std::size_t>(w) * h, fill);
    }

    std::uint8_t at(int x, int y) const {
        return data[static_cast<std::size_t>(y) * width + x];
    }
    std::uint8_t& at(int x, int y) {
        return data[static_cast<std::size_t>(y) * width + x];
    }
    bool in_bounds(int x, int y) const {
        return x >= 0 && x < width && y >= 0 && y < height;
    }
    std::size_t size() const { return data.size(); }

    void validate() const {
        if (width < 1 || height < 1)
            throw std::invalid_argument("Plane: dimensions must be >= 1");
        if (data.size() != static_cast<std::size_t>(width) * height)
            throw std::invalid_argument("Plane: data length does not match dimensions");
    }
};

// The three semantic channels of a fluorescence image.
struct ChannelSet {
    Plane macrophage;  // blue: macrophage nuclei
    Plane parasite;    // green: parasite nuclei
    Plane cytoplasm;   // red: nuclei + cytoplasm
    bool lossy_source = false;

    void validate() const {
        macrophage.validate();
        parasite.validate();
        cytoplasm.validate();
        if (macrophage.width != parasite.width || macrophage.width != cytoplasm.width ||
            macrophage.height != parasite.height || macrophage.height != cytoplasm.height)
            throw std::invalid_argument("ChannelSet: planes must share dimensions");
    }
    int width() const { return macrophage.width; }
    int height() const { return macrophage.height; }
};

struct BinaryMask {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> bits;

    BinaryMask() = default;
    BinaryMask(int w, int h) : width(w), height(h), bits(static_cast<std::size_t>(w) * h, 0) {}

    bool test(int x, int y) const {
        return bits[static_cast<std::size_t>(y) * width + x] != 0;
    }
    void set(int x, int y, bool v = true) {
        bits[static_cast<std::size_t>(y) * width + x] = v ? 1 : 0;
    }
};

}  // namespace lq
