#pragma once

#include <array>
#include <cstdint>

#include "leishquant/plane.hpp"

namespace lq {

struct HistogramData {
    std::array<std::uint64_t, 256> bins{};
    std::uint64_t total = 0;
};

struct StretchError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

HistogramData histogram(const Plane& plane);

// Rounds half away from zero; all image ops share this rule.
int round_half_up(double v);

// Percentile bounds via nearest-rank on the cumulative histogram.
std::pair<int, int> percentile_bounds(const HistogramData& hist, double low, double high);

// Linear stretch of [c, d] onto [0, 255]; throws StretchError when c == d.
Plane contrast_stretch(const Plane& plane, double low_percentile = 0.05,
                       double high_percentile = 0.95);

Plane histogram_equalize(const Plane& plane);

Plane gaussian_blur(const Plane& plane, double sigma, int kernel_size);

}  // namespace lq
