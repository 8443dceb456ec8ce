#include "leishquant/segment.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace lq {

PeakAnalysis count_peaks(const HistogramData& hist, int window) {
    if (window < 3 || window > 255 || window % 2 == 0)
        throw std::invalid_argument("count_peaks: window must be odd, in [3, 255]");

    // centered moving average, edge bins replicated so constants stay constant
    const int half = window / 2;
    std::array<double, 256> smooth{};
    for (int i = 0; i < 256; ++i) {
        double sum = 0.0;
        for (int j = i - half; j <= i + half; ++j)
            sum += static_cast<double>(hist.bins[std::clamp(j, 0, 255)]);
        smooth[i] = sum / window;
    }

    PeakAnalysis out;
    int last_sign = 0;
    int last_idx = -1;  // index of the last nonzero difference
    for (int i = 0; i < 255; ++i) {
        double d = smooth[i + 1] - smooth[i];
        int sign = (d > 1e-12) ? 1 : (d < -1e-12 ? -1 : 0);
        if (sign == 0)
            continue;
        if (last_sign == 1 && sign == -1)
            out.peaks.push_back((last_idx + 1 + i) / 2);
        else if (last_sign == -1 && sign == 1)
            out.valleys.push_back((last_idx + 1 + i) / 2);
        last_sign = sign;
        last_idx = i;
    }
    return out;
}

namespace {

struct HistPrefix {
    std::array<double, 257> weight{};  // weight[t] = sum of bins [0, t)
    std::array<double, 257> mass{};    // mass[t] = sum of i*bins[i] over [0, t)

    explicit HistPrefix(const HistogramData& h) {
        for (int i = 0; i < 256; ++i) {
            weight[i + 1] = weight[i] + static_cast<double>(h.bins[i]);
            mass[i + 1] = mass[i] + static_cast<double>(h.bins[i]) * i;
        }
    }
    double w(int lo, int hi) const { return weight[hi + 1] - weight[lo]; }  // [lo, hi]
    double m(int lo, int hi) const { return mass[hi + 1] - mass[lo]; }
};

int occupied_bins(const HistogramData& h) {
    int n = 0;
    for (auto b : h.bins)
        if (b > 0)
            ++n;
    return n;
}

// Between-class variance for the class bands induced by ascending thresholds.
double between_class_variance(const HistPrefix& p, const std::vector<int>& thresholds) {
    const double total = p.w(0, 255);
    const double mean_total = p.m(0, 255) / total;
    double sigma_b = 0.0;
    int lo = 0;
    for (std::size_t c = 0; c <= thresholds.size(); ++c) {
        int hi = (c < thresholds.size()) ? thresholds[c] - 1 : 255;
        double w = p.w(lo, hi);
        if (w > 0.0) {
            double mu = p.m(lo, hi) / w;
            sigma_b += (w / total) * (mu - mean_total) * (mu - mean_total);
        }
        lo = hi + 1;
    }
    return sigma_b;
}

}  // namespace

int otsu_threshold(const HistogramData& hist) {
    if (occupied_bins(hist) < 2)
        throw std::runtime_error("otsu_threshold: degenerate histogram (single class)");
    HistPrefix p(hist);
    int best_t = 1;
    double best = -1.0;
    std::vector<int> th(1);
    for (int t = 1; t <= 255; ++t) {
        th[0] = t;
        double v = between_class_variance(p, th);
        if (v > best + 1e-15) {
            best = v;
            best_t = t;
        }
    }
    return best_t;
}

std::vector<IntensityInterval> valley_intervals(const PeakAnalysis& peaks, int half_width) {
    std::vector<IntensityInterval> out;
    for (int v : peaks.valleys) {
        IntensityInterval iv;
        iv.lo = std::max(1, v - half_width);
        iv.hi = std::min(255, v + half_width);
        out.push_back(iv);
    }
    return out;
}

ThresholdSet multi_otsu(const HistogramData& hist, int classes,
                        const std::vector<IntensityInterval>& valley_constraints) {
    if (classes < 2)
        throw std::invalid_argument("multi_otsu: classes must be >= 2");
    if (classes > 3)
        throw std::runtime_error("multi_otsu: unsupported modality (more than 3 classes)");
    if (static_cast<int>(valley_constraints.size()) != classes - 1)
        throw std::invalid_argument("multi_otsu: need one constraint interval per threshold");
    for (const auto& iv : valley_constraints)
        if (iv.lo > iv.hi || iv.lo < 1 || iv.hi > 255)
            throw std::runtime_error("multi_otsu: empty or invalid constraint interval");
    if (occupied_bins(hist) < 2)
        throw std::runtime_error("multi_otsu: degenerate histogram (single class)");

    HistPrefix p(hist);
    ThresholdSet result;
    result.modality = classes;

    double best = -1.0;
    if (classes == 2) {
        std::vector<int> th(1);
        for (int t = valley_constraints[0].lo; t <= valley_constraints[0].hi; ++t) {
            th[0] = t;
            double v = between_class_variance(p, th);
            if (v > best + 1e-15) {
                best = v;
                result.levels = th;
            }
        }
    } else {
        std::vector<int> th(2);
        for (int t1 = valley_constraints[0].lo; t1 <= valley_constraints[0].hi; ++t1) {
            for (int t2 = valley_constraints[1].lo; t2 <= valley_constraints[1].hi; ++t2) {
                if (t2 <= t1)
                    continue;
                th[0] = t1;
                th[1] = t2;
                double v = between_class_variance(p, th);
                if (v > best + 1e-15) {
                    best = v;
                    result.levels = th;
                }
            }
        }
        if (result.levels.empty())
            throw std::runtime_error("multi_otsu: constraint intervals admit no ascending pair");
    }

    for (std::size_t i = 0; i < result.levels.size(); ++i) {
        const auto& iv = valley_constraints[i];
        if (result.levels[i] == iv.lo || result.levels[i] == iv.hi)
            result.constrained_suboptimal = true;
    }
    return result;
}

BinaryMask binarize(const Plane& plane, const ThresholdSet& thresholds, int foreground_class) {
    if (foreground_class < 0 || foreground_class > static_cast<int>(thresholds.levels.size()))
        throw std::invalid_argument("binarize: foreground class out of range");
    int lo = 0, hi = 255;
    if (foreground_class > 0)
        lo = thresholds.levels[foreground_class - 1];
    if (foreground_class < static_cast<int>(thresholds.levels.size()))
        hi = thresholds.levels[foreground_class] - 1;

    BinaryMask mask(plane.width, plane.height);
    for (int y = 0; y < plane.height; ++y)
        for (int x = 0; x < plane.width; ++x) {
            int v = plane.at(x, y);
            mask.set(x, y, v >= lo && v <= hi);
        }
    return mask;
}

namespace {

struct UnionFind {
    std::vector<int> parent;

    int make() {
        parent.push_back(static_cast<int>(parent.size()));
        return static_cast<int>(parent.size()) - 1;
    }
    int find(int a) {
        while (parent[a] != a) {
            parent[a] = parent[parent[a]];
            a = parent[a];
        }
        return a;
    }
    void unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a == b)
            return;
        if (a > b)
            std::swap(a, b);
        parent[b] = a;  // keep the smaller provisional label as root
    }
};

}  // namespace

std::array<std::uint8_t, 3> region_color(int id) {
    // splitmix-style scramble; avoids near-black
    std::uint32_t h = static_cast<std::uint32_t>(id) * 0x9E3779B9u;
    h ^= h >> 16;
    h *= 0x85EBCA6Bu;
    h ^= h >> 13;
    return {static_cast<std::uint8_t>(64 + (h & 0xBF)),
            static_cast<std::uint8_t>(64 + ((h >> 8) & 0xBF)),
            static_cast<std::uint8_t>(64 + ((h >> 16) & 0xBF))};
}

std::vector<Region> label_regions(const BinaryMask& mask, int connectivity) {
    if (connectivity != 4 && connectivity != 8)
        throw std::invalid_argument("label_regions: connectivity must be 4 or 8");

    const int w = mask.width, h = mask.height;
    std::vector<int> labels(static_cast<std::size_t>(w) * h, -1);
    UnionFind uf;

    // first pass: provisional labels + equivalences
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (!mask.test(x, y))
                continue;
            std::size_t idx = static_cast<std::size_t>(y) * w + x;
            int lbl = -1;
            auto consider = [&](int nx, int ny) {
                if (nx < 0 || ny < 0 || nx >= w || ny >= h)
                    return;
                int nl = labels[static_cast<std::size_t>(ny) * w + nx];
                if (nl < 0)
                    return;
                if (lbl < 0)
                    lbl = nl;
                else
                    uf.unite(lbl, nl);
            };
            consider(x - 1, y);
            consider(x, y - 1);
            if (connectivity == 8) {
                consider(x - 1, y - 1);
                consider(x + 1, y - 1);
            }
            if (lbl < 0)
                lbl = uf.make();
            labels[idx] = lbl;
        }
    }

    // second pass: resolve, assign final ids in raster order of first occurrence
    std::vector<int> final_id(uf.parent.size(), 0);
    std::vector<Region> regions;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            std::size_t idx = static_cast<std::size_t>(y) * w + x;
            if (labels[idx] < 0)
                continue;
            int root = uf.find(labels[idx]);
            if (final_id[root] == 0) {
                Region r;
                r.id = static_cast<int>(regions.size()) + 1;
                r.color_code = region_color(r.id);
                regions.push_back(std::move(r));
                final_id[root] = static_cast<int>(regions.size());
            }
            Region& r = regions[final_id[root] - 1];
            r.pixels.emplace_back(x, y);
            if (x == 0 || y == 0 || x == w - 1 || y == h - 1)
                r.touches_border = true;
        }
    }
    return regions;
}

}  // namespace lq
