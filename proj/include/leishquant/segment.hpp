#pragma once

#include <array>
#include <optional>
#include <vector>

#include "leishquant/plane.hpp"
#include "leishquant/preprocess.hpp"

namespace lq {

enum class RegionKind { macrophage_nuclear, parasite_nuclear, cytoplasm, noise, unset };

struct ChainCode {
    int start_x = 0;
    int start_y = 0;
    std::vector<int> codes;  // 8-connected Freeman directions, 0 = east, counterclockwise
};

struct Region {
    int id = 0;
    std::vector<std::pair<int, int>> pixels;  // (x, y), raster order
    bool touches_border = false;
    RegionKind kind = RegionKind::unset;
    int parasite_count = 0;
    std::array<std::uint8_t, 3> color_code{};
    ChainCode contour;  // filled by feature extraction; otherwise unused
};

struct PeakAnalysis {
    std::vector<int> peaks;
    std::vector<int> valleys;
};

struct ThresholdSet {
    std::vector<int> levels;  // ascending, in [1, 255]
    int modality = 2;         // detected peak count
    bool constrained_suboptimal = false;
};

struct IntensityInterval {
    int lo = 1;
    int hi = 255;  // inclusive
};

// Moving-average smoothing followed by strict sign-change detection on the
// first difference. Plateaus report their midpoint.
PeakAnalysis count_peaks(const HistogramData& hist, int window = 31);

// Exhaustive maximization of the between-class variance; smallest maximizer wins.
int otsu_threshold(const HistogramData& hist);

// Multi-level extension with the search constrained to one interval per threshold.
ThresholdSet multi_otsu(const HistogramData& hist, int classes,
                        const std::vector<IntensityInterval>& valley_constraints);

// Builds the constraint intervals around detected valleys.
std::vector<IntensityInterval> valley_intervals(const PeakAnalysis& peaks, int half_width);

BinaryMask binarize(const Plane& plane, const ThresholdSet& thresholds, int foreground_class);

std::vector<Region> label_regions(const BinaryMask& mask, int connectivity = 4);

// Random-looking but id-stable display color (label map debug output).
std::array<std::uint8_t, 3> region_color(int id);

}  // namespace lq
