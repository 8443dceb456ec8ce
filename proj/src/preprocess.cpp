#include "leishquant/preprocess.hpp"

#include <algorithm>
#include <cmath>

namespace lq {

HistogramData histogram(const Plane& plane) {
    plane.validate();
    HistogramData h;
    for (std::uint8_t v : plane.data)
        ++h.bins[v];
    h.total = plane.size();
    return h;
}

int round_half_up(double v) {
    return static_cast<int>(std::floor(v + 0.5));
}

std::pair<int, int> percentile_bounds(const HistogramData& hist, double low, double high) {
    if (!(low >= 0.0 && low < high && high <= 1.0))
        throw std::invalid_argument("percentile_bounds: need 0 <= low < high <= 1");
    if (hist.total == 0)
        throw std::invalid_argument("percentile_bounds: empty histogram");

    // nearest-rank: value at position ceil(p*n) in sorted order, 1-indexed
    auto rank_value = [&](double p) {
        std::uint64_t rank = static_cast<std::uint64_t>(std::ceil(p * hist.total));
        rank = std::max<std::uint64_t>(rank, 1);
        std::uint64_t cum = 0;
        for (int i = 0; i < 256; ++i) {
            cum += hist.bins[i];
            if (cum >= rank)
                return i;
        }
        return 255;
    };
    return {rank_value(low), rank_value(high)};
}

Plane contrast_stretch(const Plane& plane, double low_percentile, double high_percentile) {
    HistogramData h = histogram(plane);
    auto [c, d] = percentile_bounds(h, low_percentile, high_percentile);
    if (c == d)
        throw StretchError("degenerate histogram: low and high percentiles coincide");

    std::array<std::uint8_t, 256> lut;
    for (int r = 0; r < 256; ++r) {
        int s = round_half_up((r - c) * 255.0 / (d - c));
        lut[r] = static_cast<std::uint8_t>(std::clamp(s, 0, 255));
    }
    Plane out(plane.width, plane.height);
    std::transform(plane.data.begin(), plane.data.end(), out.data.begin(),
                   [&](std::uint8_t v) { return lut[v]; });
    return out;
}

Plane histogram_equalize(const Plane& plane) {
    HistogramData h = histogram(plane);
    std::array<std::uint8_t, 256> lut;
    std::uint64_t cum = 0;
    for (int i = 0; i < 256; ++i) {
        cum += h.bins[i];
        double cdf = static_cast<double>(cum) / h.total;
        lut[i] = static_cast<std::uint8_t>(std::clamp(round_half_up(255.0 * cdf), 0, 255));
    }
    Plane out(plane.width, plane.height);
    std::transform(plane.data.begin(), plane.data.end(), out.data.begin(),
                   [&](std::uint8_t v) { return lut[v]; });
    return out;
}

Plane gaussian_blur(const Plane& plane, double sigma, int kernel_size) {
    if (sigma <= 0.0)
        throw std::invalid_argument("gaussian_blur: sigma must be > 0");
    if (kernel_size < 3 || kernel_size % 2 == 0)
        throw std::invalid_argument("gaussian_blur: kernel size must be odd and >= 3");
    plane.validate();

    const int half = kernel_size / 2;
    std::vector<double> kernel(kernel_size);
    double sum = 0.0;
    for (int i = -half; i <= half; ++i) {
        kernel[i + half] = std::exp(-(i * i) / (2.0 * sigma * sigma));
        sum += kernel[i + half];
    }
    for (double& k : kernel)
        k /= sum;

    auto clampx = [&](int x) { return std::clamp(x, 0, plane.width - 1); };
    auto clampy = [&](int y) { return std::clamp(y, 0, plane.height - 1); };

    // horizontal then vertical pass, edge replication
    std::vector<double> tmp(plane.size());
    for (int y = 0; y < plane.height; ++y) {
        for (int x = 0; x < plane.width; ++x) {
            double acc = 0.0;
            for (int i = -half; i <= half; ++i)
                acc += kernel[i + half] * plane.at(clampx(x + i), y);
            tmp[static_cast<std::size_t>(y) * plane.width + x] = acc;
        }
    }
    Plane out(plane.width, plane.height);
    for (int y = 0; y < plane.height; ++y) {
        for (int x = 0; x < plane.width; ++x) {
            double acc = 0.0;
            for (int i = -half; i <= half; ++i)
                acc += kernel[i + half] * tmp[static_cast<std::size_t>(clampy(y + i)) * plane.width + x];
            out.at(x, y) = static_cast<std::uint8_t>(std::clamp(round_half_up(acc), 0, 255));
        }
    }
    return out;
}

}  // namespace lq
