#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "leishquant/plane.hpp"

namespace lq {

// One cluster entry: `count` clusters of `size` nuclei each.
struct ClusterSpec {
    int size = 1;
    int count = 0;
};

struct SceneSpec {
    int width = 1024;
    int height = 1024;
    std::string zoom_label = "zoom5";
    std::vector<ClusterSpec> macrophage_clusters;  // e.g. {{1, 50}}
    std::vector<ClusterSpec> parasite_clusters;
    int infected_cells = 0;        // first n macrophage nuclei receive parasites
    int parasites_per_cell = 1;
    int free_parasites = 0;        // parasites away from every macrophage
    double area_mean = 300.0;      // thresholded nucleus area target
    double area_sigma = 48.0;
    double overlap_budget = 0.15;  // max pairwise overlap fraction inside a cluster
    double background = 20.0;
    double peak = 220.0;
    double cytoplasm_intensity = 90.0;
    double cytoplasm_scale = 2.2;  // cytoplasm radius = scale * nucleus radius
    double noise_sigma = 0.0;
    bool trimodal_nuclear = false;  // adds cytoplasm glow to the nuclear channels
    std::uint64_t seed = 0;

    static SceneSpec load(const std::string& path);
    void save(const std::string& path) const;
};

struct TruthNucleus {
    double cx = 0.0, cy = 0.0;
    double radius = 0.0;
    double expected_area = 0.0;
    int cluster_index = 0;  // index into cluster_sizes
};

struct GroundTruth {
    std::vector<TruthNucleus> macrophages;
    std::vector<TruthNucleus> parasites;
    std::vector<int> macrophage_cluster_sizes;
    std::vector<int> parasite_cluster_sizes;
    // parasite index -> macrophage nucleus index; -1 = free parasite
    std::vector<int> associations;

    int infected_count() const;
    void save(const std::string& path) const;
    static GroundTruth load(const std::string& path);
};

struct SyntheticScene {
    ChannelSet channels;
    GroundTruth truth;
};

SyntheticScene generate(const SceneSpec& spec);

// Renders a single cluster on a small canvas and segments it back out with the
// default Otsu + labeling path; used by SVM training and declustering tests.
struct ClusterSample {
    std::vector<std::pair<int, int>> pixels;
    std::vector<TruthNucleus> nuclei;
};

ClusterSample make_cluster(int k, double area_mean, double area_sigma, double overlap_budget,
                           double noise_sigma, std::uint64_t seed);

}  // namespace lq
