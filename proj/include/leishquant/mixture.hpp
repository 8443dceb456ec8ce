#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "leishquant/segment.hpp"

namespace lq {

struct Point {
    double x = 0.0;
    double y = 0.0;
};

using PointCloud = std::vector<Point>;

struct GaussianComponent {
    double weight = 1.0;
    double mean_x = 0.0, mean_y = 0.0;
    // symmetric 2x2 covariance
    double cov_xx = 1.0, cov_xy = 0.0, cov_yy = 1.0;
};

struct MixtureModel {
    std::vector<GaussianComponent> components;
    double log_likelihood = 0.0;
    int iterations_used = 0;
    bool converged = false;
    std::vector<double> ll_trace;  // log-likelihood after each EM iteration
};

struct EmOptions {
    double min_std = 1e-6;  // covariance eigenvalue floor is min_std^2
    int max_iter = 200;
    double tol = 1e-6;  // absolute log-likelihood improvement
};

struct KmeansOptions {
    int restarts = 10;
    double subset_fraction = 0.9;
    int max_iter = 100;
};

// Lloyd iterations over `restarts` random 90% subsets; the per-restart centroid
// sets are matched by greedy nearest pairing and averaged.
std::vector<Point> kmeans(const PointCloud& points, int k, const KmeansOptions& options = {},
                          std::uint64_t seed = 0);

MixtureModel em_fit(const PointCloud& points, int k, const EmOptions& options = {},
                    std::uint64_t seed = 0,
                    const std::optional<std::vector<Point>>& seeds = std::nullopt);

double log_likelihood(const MixtureModel& model, const PointCloud& points);

// Per-point responsibilities, row-normalized.
std::vector<std::vector<double>> responsibilities(const MixtureModel& model,
                                                  const PointCloud& points);

// Splits a multi-nucleic region into k sub-regions by maximum responsibility.
// Components left empty trigger a refit with one component fewer.
std::vector<Region> decluster(const Region& region, int k, const EmOptions& options = {},
                              std::uint64_t seed = 0);

PointCloud region_cloud(const Region& region);

}  // namespace lq
