#include "leishquant/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <random>
#include <stdexcept>

#include <json.hpp>

#include "leishquant/preprocess.hpp"
#include "leishquant/segment.hpp"

namespace lq {

namespace {

struct Rng {
    std::mt19937_64 gen;
    bool has_spare = false;
    double spare = 0.0;

    explicit Rng(std::uint64_t seed) : gen(seed) {}

    double uniform() {  // [0, 1)
        return (gen() >> 11) * (1.0 / 9007199254740992.0);
    }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    // Box-Muller; avoids stdlib distribution differences
    double normal(double mean, double sigma) {
        if (has_spare) {
            has_spare = false;
            return mean + sigma * spare;
        }
        double u1 = std::max(uniform(), 1e-300);
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        spare = r * std::sin(2.0 * std::numbers::pi * u2);
        has_spare = true;
        return mean + sigma * r * std::cos(2.0 * std::numbers::pi * u2);
    }
};

// Inverse standard normal CDF (Acklam's rational approximation, ~1e-9 accurate).
double normal_quantile(double p) {
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425, phigh = 1.0 - plow;
    if (p <= 0.0)
        return -std::numeric_limits<double>::infinity();
    if (p >= 1.0)
        return std::numeric_limits<double>::infinity();
    if (p < plow) {
        double q = std::sqrt(-2.0 * std::log(p));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    if (p > phigh) {
        double q = std::sqrt(-2.0 * std::log(1.0 - p));
        return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    double q = p - 0.5;
    double r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

// Lens area of two overlapping discs.
double overlap_area(double d, double r1, double r2) {
    if (d >= r1 + r2)
        return 0.0;
    if (d <= std::abs(r1 - r2)) {
        double rm = std::min(r1, r2);
        return std::numbers::pi * rm * rm;
    }
    double a1 = (d * d + r1 * r1 - r2 * r2) / (2.0 * d * r1);
    double a2 = (d * d + r2 * r2 - r1 * r1) / (2.0 * d * r2);
    a1 = std::clamp(a1, -1.0, 1.0);
    a2 = std::clamp(a2, -1.0, 1.0);
    double tri = 0.5 * std::sqrt(std::max(
                           0.0, (-d + r1 + r2) * (d + r1 - r2) * (d - r1 + r2) * (d + r1 + r2)));
    return r1 * r1 * std::acos(a1) + r2 * r2 * std::acos(a2) - tri;
}

// Distance producing the requested overlap fraction of the smaller disc.
double distance_for_overlap(double r1, double r2, double fraction) {
    double rm = std::min(r1, r2);
    double target = fraction * std::numbers::pi * rm * rm;
    double lo = std::abs(r1 - r2), hi = r1 + r2;
    for (int i = 0; i < 60; ++i) {
        double mid = 0.5 * (lo + hi);
        if (overlap_area(mid, r1, r2) > target)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

double sample_radius(Rng& rng, double area_mean, double area_sigma) {
    double a = rng.normal(area_mean, area_sigma);
    a = std::clamp(a, area_mean - 2.5 * area_sigma, area_mean + 2.5 * area_sigma);
    return std::sqrt(a / std::numbers::pi);
}

// Nuclei of one cluster, in coordinates relative to the cluster anchor.
std::vector<TruthNucleus> place_cluster(Rng& rng, int k, double area_mean, double area_sigma,
                                        double overlap_budget) {
    std::vector<TruthNucleus> nuclei;
    for (int i = 0; i < k; ++i) {
        TruthNucleus n;
        n.radius = sample_radius(rng, area_mean, area_sigma);
        n.expected_area = std::numbers::pi * n.radius * n.radius;
        if (i == 0) {
            n.cx = n.cy = 0.0;
        } else {
            for (int attempt = 0;; ++attempt) {
                const TruthNucleus& parent = nuclei[rng.gen() % nuclei.size()];
                double frac = rng.uniform(0.03, std::max(0.04, overlap_budget));
                double d = distance_for_overlap(parent.radius, n.radius, frac);
                double ang = rng.uniform(0.0, 2.0 * std::numbers::pi);
                n.cx = parent.cx + d * std::cos(ang);
                n.cy = parent.cy + d * std::sin(ang);
                // keep overlap with every other nucleus within budget
                bool ok = true;
                for (const auto& other : nuclei) {
                    double dd = std::hypot(n.cx - other.cx, n.cy - other.cy);
                    double rm = std::min(n.radius, other.radius);
                    if (overlap_area(dd, n.radius, other.radius) >
                        overlap_budget * std::numbers::pi * rm * rm) {
                        ok = false;
                        break;
                    }
                }
                if (ok)
                    break;
                if (attempt > 500)
                    throw std::runtime_error("placement error: cannot place cluster nucleus");
            }
        }
        nuclei.push_back(n);
    }
    // recentre on the cluster centroid
    double mx = 0.0, my = 0.0;
    for (const auto& n : nuclei) {
        mx += n.cx;
        my += n.cy;
    }
    mx /= k;
    my /= k;
    for (auto& n : nuclei) {
        n.cx -= mx;
        n.cy -= my;
    }
    return nuclei;
}

// Hard-edged disc profile: keeps channel histograms strictly bimodal and makes
// the thresholded area equal to the disc's pixel count at any cut level.
double disc_profile(double d, double radius) {
    return d <= radius ? 1.0 : 0.0;
}

struct FloatCanvas {
    int width, height;
    std::vector<double> v;
    FloatCanvas(int w, int h, double fill) : width(w), height(h) {
        v.assign(static_cast<std::size_t>(w) * h, fill);
    }
    void stamp(double cx, double cy, double radius, double level, double background) {
        int x0 = std::max(0, static_cast<int>(std::floor(cx - radius - 2)));
        int x1 = std::min(width - 1, static_cast<int>(std::ceil(cx + radius + 2)));
        int y0 = std::max(0, static_cast<int>(std::floor(cy - radius - 2)));
        int y1 = std::min(height - 1, static_cast<int>(std::ceil(cy + radius + 2)));
        for (int y = y0; y <= y1; ++y) {
            for (int x = x0; x <= x1; ++x) {
                double d = std::hypot(x - cx, y - cy);
                double val = background + (level - background) * disc_profile(d, radius);
                std::size_t i = static_cast<std::size_t>(y) * width + x;
                v[i] = std::max(v[i], val);
            }
        }
    }
    Plane finalize(Rng& rng, double noise_sigma) const {
        Plane p(width, height);
        if (noise_sigma <= 0.0) {
            for (std::size_t i = 0; i < v.size(); ++i)
                p.data[i] = static_cast<std::uint8_t>(std::clamp(round_half_up(v[i]), 0, 255));
            return p;
        }
        // Stratified Gaussian noise: pixels sharing the same pre-noise value get
        // the exact Gaussian quantiles (in shuffled order) instead of iid draws.
        // The marginal stays N(0, sigma^2) but the histogram of each flat region
        // is the smooth discretized Gaussian, free of sampling ripple.
        std::map<double, std::vector<std::size_t>> groups;
        for (std::size_t i = 0; i < v.size(); ++i)
            groups[v[i]].push_back(i);
        for (auto& [base, idx] : groups) {
            const std::size_t n = idx.size();
            // Fisher-Yates with the scene RNG keeps generation deterministic
            for (std::size_t k = n - 1; k > 0; --k) {
                std::size_t j = static_cast<std::size_t>(rng.uniform() * (k + 1));
                std::swap(idx[k], idx[std::min(j, k)]);
            }
            for (std::size_t k = 0; k < n; ++k) {
                double q = (static_cast<double>(k) + 0.5) / static_cast<double>(n);
                double val = base + noise_sigma * normal_quantile(q);
                // reflect at the range boundaries: clamping would pile the
                // noise tails into spikes at 0/255 and fake extra histogram modes
                for (int guard = 0; (val < 0.0 || val > 255.0) && guard < 8; ++guard) {
                    if (val < 0.0)
                        val = -val;
                    if (val > 255.0)
                        val = 510.0 - val;
                }
                p.data[idx[k]] = static_cast<std::uint8_t>(std::clamp(round_half_up(val), 0, 255));
            }
        }
        return p;
    }
};

double cluster_extent(const std::vector<TruthNucleus>& nuclei) {
    double e = 0.0;
    for (const auto& n : nuclei)
        e = std::max(e, std::hypot(n.cx, n.cy) + n.radius);
    return e;
}

}  // namespace

int GroundTruth::infected_count() const {
    std::vector<int> hosts;
    for (int h : associations)
        if (h >= 0)
            hosts.push_back(h);
    std::sort(hosts.begin(), hosts.end());
    hosts.erase(std::unique(hosts.begin(), hosts.end()), hosts.end());
    return static_cast<int>(hosts.size());
}

SyntheticScene generate(const SceneSpec& spec) {
    if (spec.width < 32 || spec.height < 32)
        throw std::invalid_argument("generate: canvas too small");
    Rng rng(spec.seed * 0x9E3779B97F4A7C15ULL + 1);

    SyntheticScene scene;
    GroundTruth& truth = scene.truth;

    const double assoc_radius = std::sqrt(spec.area_mean / std::numbers::pi);

    // expand cluster specs into a flat list of cluster sizes
    std::vector<int> macro_sizes, para_sizes;
    for (const auto& c : spec.macrophage_clusters)
        for (int i = 0; i < c.count; ++i)
            macro_sizes.push_back(c.size);
    for (const auto& c : spec.parasite_clusters)
        for (int i = 0; i < c.count; ++i)
            para_sizes.push_back(c.size);
    truth.macrophage_cluster_sizes = macro_sizes;
    truth.parasite_cluster_sizes = para_sizes;

    struct PlacedCluster {
        double cx, cy, bound;
        std::vector<TruthNucleus> nuclei;  // absolute coordinates
    };
    std::vector<PlacedCluster> macro_clusters;

    auto place_center = [&](double bound, auto&& accept) {
        double margin = bound + 8.0;
        if (2.0 * margin >= spec.width || 2.0 * margin >= spec.height)
            throw std::runtime_error("placement error: object larger than canvas");
        for (int attempt = 0; attempt < 4000; ++attempt) {
            double cx = rng.uniform(margin, spec.width - margin);
            double cy = rng.uniform(margin, spec.height - margin);
            if (accept(cx, cy))
                return std::pair<double, double>{cx, cy};
        }
        throw std::runtime_error("placement error: over-dense scene specification");
    };

    // macrophage clusters: keep nuclear regions of different clusters apart
    for (std::size_t ci = 0; ci < macro_sizes.size(); ++ci) {
        auto nuclei = place_cluster(rng, macro_sizes[ci], spec.area_mean, spec.area_sigma,
                                    spec.overlap_budget);
        double bound = cluster_extent(nuclei);
        double cyto_bound = bound * spec.cytoplasm_scale;
        auto [cx, cy] = place_center(cyto_bound, [&](double x, double y) {
            for (const auto& pc : macro_clusters)
                if (std::hypot(x - pc.cx, y - pc.cy) < bound + pc.bound + 3.0 * assoc_radius)
                    return false;
            return true;
        });
        PlacedCluster pc{cx, cy, bound, nuclei};
        for (auto& n : pc.nuclei) {
            n.cx += cx;
            n.cy += cy;
            n.cluster_index = static_cast<int>(ci);
            truth.macrophages.push_back(n);
        }
        macro_clusters.push_back(std::move(pc));
    }

    // infected parasites attach to the first macrophage nuclei
    const int n_macro = static_cast<int>(truth.macrophages.size());
    if (spec.infected_cells > n_macro)
        throw std::invalid_argument("generate: more infected cells than macrophage nuclei");
    for (int i = 0; i < spec.infected_cells; ++i) {
        const TruthNucleus& host = truth.macrophages[i];
        for (int p = 0; p < spec.parasites_per_cell; ++p) {
            TruthNucleus par;
            par.radius = sample_radius(rng, spec.area_mean, spec.area_sigma);
            par.expected_area = std::numbers::pi * par.radius * par.radius;
            double d = rng.uniform(0.2, 0.8) * assoc_radius;
            double ang = rng.uniform(0.0, 2.0 * std::numbers::pi);
            par.cx = host.cx + d * std::cos(ang);
            par.cy = host.cy + d * std::sin(ang);
            par.cluster_index = static_cast<int>(truth.parasites.size());
            truth.associations.push_back(i);
            truth.parasites.push_back(par);
        }
    }

    // explicit parasite clusters and free parasites stay clear of macrophages
    auto far_from_macrophages = [&](double x, double y, double r) {
        for (const auto& m : truth.macrophages) {
            double clearance = std::max(m.radius * spec.cytoplasm_scale + r + 4.0,
                                        3.0 * assoc_radius + r);
            if (std::hypot(x - m.cx, y - m.cy) < clearance)
                return false;
        }
        return true;
    };
    auto far_from_parasites = [&](double x, double y, double bound) {
        for (const auto& p : truth.parasites)
            if (std::hypot(x - p.cx, y - p.cy) < bound + p.radius + 6.0)
                return false;
        return true;
    };

    for (std::size_t ci = 0; ci < para_sizes.size(); ++ci) {
        auto nuclei = place_cluster(rng, para_sizes[ci], spec.area_mean, spec.area_sigma,
                                    spec.overlap_budget);
        double bound = cluster_extent(nuclei);
        auto [cx, cy] = place_center(bound, [&](double x, double y) {
            return far_from_macrophages(x, y, bound) && far_from_parasites(x, y, bound);
        });
        for (auto& n : nuclei) {
            n.cx += cx;
            n.cy += cy;
            n.cluster_index = -1;
            truth.associations.push_back(-1);
            truth.parasites.push_back(n);
        }
    }
    for (int i = 0; i < spec.free_parasites; ++i) {
        TruthNucleus par;
        par.radius = sample_radius(rng, spec.area_mean, spec.area_sigma);
        par.expected_area = std::numbers::pi * par.radius * par.radius;
        auto [cx, cy] = place_center(par.radius, [&](double x, double y) {
            return far_from_macrophages(x, y, par.radius) &&
                   far_from_parasites(x, y, par.radius);
        });
        par.cx = cx;
        par.cy = cy;
        par.cluster_index = -1;
        truth.associations.push_back(-1);
        truth.parasites.push_back(par);
    }

    // render the three channels
    FloatCanvas blue(spec.width, spec.height, spec.background);
    FloatCanvas green(spec.width, spec.height, spec.background);
    FloatCanvas red(spec.width, spec.height, spec.background);

    for (const auto& m : truth.macrophages) {
        blue.stamp(m.cx, m.cy, m.radius, spec.peak, spec.background);
        red.stamp(m.cx, m.cy, m.radius * spec.cytoplasm_scale, spec.cytoplasm_intensity,
                  spec.background);
        if (spec.trimodal_nuclear)
            blue.stamp(m.cx, m.cy, m.radius * spec.cytoplasm_scale, spec.cytoplasm_intensity,
                       spec.background);
    }
    for (const auto& p : truth.parasites) {
        green.stamp(p.cx, p.cy, p.radius, spec.peak, spec.background);
        if (spec.trimodal_nuclear)
            green.stamp(p.cx, p.cy, p.radius * spec.cytoplasm_scale, spec.cytoplasm_intensity,
                        spec.background);
    }
    scene.channels.macrophage = blue.finalize(rng, spec.noise_sigma);
    scene.channels.parasite = green.finalize(rng, spec.noise_sigma);
    scene.channels.cytoplasm = red.finalize(rng, spec.noise_sigma);
    scene.channels.validate();
    return scene;
}

ClusterSample make_cluster(int k, double area_mean, double area_sigma, double overlap_budget,
                           double noise_sigma, std::uint64_t seed) {
    Rng rng(seed * 0xD1B54A32D192ED03ULL + 7);
    auto nuclei = place_cluster(rng, k, area_mean, area_sigma, overlap_budget);
    double bound = cluster_extent(nuclei);
    int half = static_cast<int>(std::ceil(bound)) + 16;
    int size = 2 * half;

    FloatCanvas canvas(size, size, 20.0);
    for (auto& n : nuclei) {
        n.cx += half;
        n.cy += half;
        canvas.stamp(n.cx, n.cy, n.radius, 220.0, 20.0);
    }
    Plane plane = canvas.finalize(rng, noise_sigma);

    HistogramData hist = histogram(plane);
    int t = otsu_threshold(hist);
    ThresholdSet ts;
    ts.levels = {t};
    BinaryMask mask = binarize(plane, ts, 1);
    auto regions = label_regions(mask, 4);
    if (regions.empty())
        throw std::runtime_error("make_cluster: segmentation found no region");
    std::size_t largest = 0;
    for (std::size_t i = 1; i < regions.size(); ++i)
        if (regions[i].pixels.size() > regions[largest].pixels.size())
            largest = i;

    ClusterSample sample;
    sample.pixels = std::move(regions[largest].pixels);
    sample.nuclei = std::move(nuclei);
    return sample;
}

SceneSpec SceneSpec::load(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot read scene spec " + path);
    nlohmann::json j;
    in >> j;
    SceneSpec s;
    s.width = j.value("width", s.width);
    s.height = j.value("height", s.height);
    s.zoom_label = j.value("zoom", s.zoom_label);
    auto read_clusters = [](const nlohmann::json& arr) {
        std::vector<ClusterSpec> out;
        for (const auto& c : arr)
            out.push_back({c.value("size", 1), c.value("count", 0)});
        return out;
    };
    if (j.contains("macrophage_clusters"))
        s.macrophage_clusters = read_clusters(j["macrophage_clusters"]);
    if (j.contains("parasite_clusters"))
        s.parasite_clusters = read_clusters(j["parasite_clusters"]);
    s.infected_cells = j.value("infected_cells", s.infected_cells);
    s.parasites_per_cell = j.value("parasites_per_cell", s.parasites_per_cell);
    s.free_parasites = j.value("free_parasites", s.free_parasites);
    s.area_mean = j.value("area_mean", s.area_mean);
    s.area_sigma = j.value("area_sigma", s.area_sigma);
    s.overlap_budget = j.value("overlap_budget", s.overlap_budget);
    s.background = j.value("background", s.background);
    s.peak = j.value("peak", s.peak);
    s.cytoplasm_intensity = j.value("cytoplasm_intensity", s.cytoplasm_intensity);
    s.cytoplasm_scale = j.value("cytoplasm_scale", s.cytoplasm_scale);
    s.noise_sigma = j.value("noise_sigma", s.noise_sigma);
    s.trimodal_nuclear = j.value("trimodal_nuclear", s.trimodal_nuclear);
    s.seed = j.value("seed", s.seed);
    return s;
}

void SceneSpec::save(const std::string& path) const {
    nlohmann::ordered_json j;
    j["width"] = width;
    j["height"] = height;
    j["zoom"] = zoom_label;
    auto dump_clusters = [](const std::vector<ClusterSpec>& cs) {
        nlohmann::ordered_json arr = nlohmann::ordered_json::array();
        for (const auto& c : cs)
            arr.push_back({{"size", c.size}, {"count", c.count}});
        return arr;
    };
    j["macrophage_clusters"] = dump_clusters(macrophage_clusters);
    j["parasite_clusters"] = dump_clusters(parasite_clusters);
    j["infected_cells"] = infected_cells;
    j["parasites_per_cell"] = parasites_per_cell;
    j["free_parasites"] = free_parasites;
    j["area_mean"] = area_mean;
    j["area_sigma"] = area_sigma;
    j["overlap_budget"] = overlap_budget;
    j["background"] = background;
    j["peak"] = peak;
    j["cytoplasm_intensity"] = cytoplasm_intensity;
    j["cytoplasm_scale"] = cytoplasm_scale;
    j["noise_sigma"] = noise_sigma;
    j["trimodal_nuclear"] = trimodal_nuclear;
    j["seed"] = seed;
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot write scene spec " + path);
    out << j.dump(2) << "\n";
}

void GroundTruth::save(const std::string& path) const {
    nlohmann::ordered_json j;
    auto dump_nuclei = [](const std::vector<TruthNucleus>& ns) {
        nlohmann::ordered_json arr = nlohmann::ordered_json::array();
        for (const auto& n : ns)
            arr.push_back({{"cx", n.cx},
                           {"cy", n.cy},
                           {"radius", n.radius},
                           {"expected_area", n.expected_area},
                           {"cluster_index", n.cluster_index}});
        return arr;
    };
    j["macrophages"] = dump_nuclei(macrophages);
    j["parasites"] = dump_nuclei(parasites);
    j["macrophage_cluster_sizes"] = macrophage_cluster_sizes;
    j["parasite_cluster_sizes"] = parasite_cluster_sizes;
    j["associations"] = associations;
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot write ground truth " + path);
    out << j.dump(2) << "\n";
}

GroundTruth GroundTruth::load(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot read ground truth " + path);
    nlohmann::json j;
    in >> j;
    GroundTruth t;
    auto read_nuclei = [](const nlohmann::json& arr) {
        std::vector<TruthNucleus> out;
        for (const auto& n : arr) {
            TruthNucleus tn;
            tn.cx = n.value("cx", 0.0);
            tn.cy = n.value("cy", 0.0);
            tn.radius = n.value("radius", 0.0);
            tn.expected_area = n.value("expected_area", 0.0);
            tn.cluster_index = n.value("cluster_index", 0);
            out.push_back(tn);
        }
        return out;
    };
    t.macrophages = read_nuclei(j["macrophages"]);
    t.parasites = read_nuclei(j["parasites"]);
    t.macrophage_cluster_sizes = j.value("macrophage_cluster_sizes", std::vector<int>{});
    t.parasite_cluster_sizes = j.value("parasite_cluster_sizes", std::vector<int>{});
    t.associations = j.value("associations", std::vector<int>{});
    return t;
}

}  // namespace lq
