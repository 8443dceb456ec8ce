#include "leishquant/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>

namespace lq {

namespace {

constexpr double kLog2Pi = 1.8378770664093453;  // log(2*pi)

struct PreparedComponent {
    double log_weight;
    double mx, my;
    double inv_xx, inv_xy, inv_yy;
    double log_norm;  // -0.5*(2*log(2pi) + log|S|)
};

PreparedComponent prepare(const GaussianComponent& c) {
    double det = c.cov_xx * c.cov_yy - c.cov_xy * c.cov_xy;
    if (det <= 0.0 || c.weight <= 0.0)
        throw std::runtime_error("em: invalid component (non-positive weight or covariance)");
    PreparedComponent p;
    p.log_weight = std::log(c.weight);
    p.mx = c.mean_x;
    p.my = c.mean_y;
    p.inv_xx = c.cov_yy / det;
    p.inv_yy = c.cov_xx / det;
    p.inv_xy = -c.cov_xy / det;
    p.log_norm = -kLog2Pi - 0.5 * std::log(det);
    return p;
}

double log_density(const PreparedComponent& p, const Point& pt) {
    double dx = pt.x - p.mx, dy = pt.y - p.my;
    double q = dx * dx * p.inv_xx + 2.0 * dx * dy * p.inv_xy + dy * dy * p.inv_yy;
    return p.log_norm - 0.5 * q;
}

// log(sum(exp(v))) over prepared per-component terms
double log_sum_exp(const std::vector<double>& v) {
    double m = *std::max_element(v.begin(), v.end());
    if (!std::isfinite(m))
        return m;
    double s = 0.0;
    for (double x : v)
        s += std::exp(x - m);
    return m + std::log(s);
}

// Clamp the eigenvalues of a symmetric 2x2 matrix from below.
void floor_covariance(GaussianComponent& c, double min_var) {
    double tr = c.cov_xx + c.cov_yy;
    double det = c.cov_xx * c.cov_yy - c.cov_xy * c.cov_xy;
    double disc = std::sqrt(std::max(0.0, tr * tr / 4.0 - det));
    double l1 = tr / 2.0 + disc;
    double l2 = tr / 2.0 - disc;
    if (l2 >= min_var && l1 >= min_var)
        return;

    // eigenvector for l1
    double vx, vy;
    if (std::abs(c.cov_xy) > 1e-300) {
        vx = l1 - c.cov_yy;
        vy = c.cov_xy;
    } else if (c.cov_xx >= c.cov_yy) {
        vx = 1.0;
        vy = 0.0;
    } else {
        vx = 0.0;
        vy = 1.0;
    }
    double n = std::hypot(vx, vy);
    if (n < 1e-300) {
        vx = 1.0;
        vy = 0.0;
        n = 1.0;
    }
    vx /= n;
    vy /= n;
    l1 = std::max(l1, min_var);
    l2 = std::max(l2, min_var);
    // reconstruct l1*v*v' + l2*w*w' with w perpendicular to v
    double wx = -vy, wy = vx;
    c.cov_xx = l1 * vx * vx + l2 * wx * wx;
    c.cov_xy = l1 * vx * vy + l2 * wx * wy;
    c.cov_yy = l1 * vy * vy + l2 * wy * wy;
}

}  // namespace

PointCloud region_cloud(const Region& region) {
    PointCloud cloud;
    cloud.reserve(region.pixels.size());
    for (auto [x, y] : region.pixels)
        cloud.push_back({static_cast<double>(x), static_cast<double>(y)});
    return cloud;
}

std::vector<Point> kmeans(const PointCloud& points, int k, const KmeansOptions& options,
                          std::uint64_t seed) {
    if (points.empty())
        throw std::invalid_argument("kmeans: empty point cloud");
    if (k < 1 || k > static_cast<int>(points.size()))
        throw std::invalid_argument("kmeans: k out of range");

    std::mt19937_64 rng(seed ^ 0x6b6d65616e73ULL);
    const std::size_t n = points.size();
    std::size_t subset = std::max<std::size_t>(
        static_cast<std::size_t>(k),
        static_cast<std::size_t>(std::ceil(options.subset_fraction * static_cast<double>(n))));

    auto lloyd = [&](const std::vector<std::size_t>& idx) {
        std::vector<Point> centers(k);
        // spread initial centers over distinct points (farthest-point style)
        std::vector<std::size_t> shuffled = idx;
        for (std::size_t i = shuffled.size(); i > 1; --i)
            std::swap(shuffled[i - 1], shuffled[rng() % i]);
        centers[0] = points[shuffled[0]];
        for (int c = 1; c < k; ++c) {
            double bestd = -1.0;
            std::size_t besti = shuffled[0];
            for (std::size_t i : shuffled) {
                double dmin = std::numeric_limits<double>::max();
                for (int cc = 0; cc < c; ++cc) {
                    double dx = points[i].x - centers[cc].x, dy = points[i].y - centers[cc].y;
                    dmin = std::min(dmin, dx * dx + dy * dy);
                }
                if (dmin > bestd) {
                    bestd = dmin;
                    besti = i;
                }
            }
            centers[c] = points[besti];
        }

        std::vector<int> assign(idx.size(), -1);
        for (int iter = 0; iter < options.max_iter; ++iter) {
            bool changed = false;
            for (std::size_t j = 0; j < idx.size(); ++j) {
                const Point& p = points[idx[j]];
                int best = 0;
                double bestd = std::numeric_limits<double>::max();
                for (int c = 0; c < k; ++c) {
                    double dx = p.x - centers[c].x, dy = p.y - centers[c].y;
                    double d = dx * dx + dy * dy;
                    if (d < bestd) {
                        bestd = d;
                        best = c;
                    }
                }
                if (assign[j] != best) {
                    assign[j] = best;
                    changed = true;
                }
            }
            if (!changed && iter > 0)
                break;
            std::vector<double> sx(k, 0.0), sy(k, 0.0);
            std::vector<int> cnt(k, 0);
            for (std::size_t j = 0; j < idx.size(); ++j) {
                sx[assign[j]] += points[idx[j]].x;
                sy[assign[j]] += points[idx[j]].y;
                ++cnt[assign[j]];
            }
            for (int c = 0; c < k; ++c) {
                if (cnt[c] > 0) {
                    centers[c].x = sx[c] / cnt[c];
                    centers[c].y = sy[c] / cnt[c];
                } else {
                    // empty cluster: move to the point farthest from its centre
                    double bestd = -1.0;
                    std::size_t besti = idx[0];
                    for (std::size_t j = 0; j < idx.size(); ++j) {
                        const Point& p = points[idx[j]];
                        const Point& cc = centers[assign[j]];
                        double dx = p.x - cc.x, dy = p.y - cc.y;
                        double d = dx * dx + dy * dy;
                        if (d > bestd) {
                            bestd = d;
                            besti = idx[j];
                        }
                    }
                    centers[c] = points[besti];
                }
            }
        }
        return centers;
    };

    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), 0);

    std::vector<std::vector<Point>> runs;
    for (int r = 0; r < std::max(1, options.restarts); ++r) {
        std::vector<std::size_t> idx = all;
        for (std::size_t i = idx.size(); i > 1; --i)
            std::swap(idx[i - 1], idx[rng() % i]);
        idx.resize(subset);
        std::sort(idx.begin(), idx.end());
        runs.push_back(lloyd(idx));
    }

    // greedy nearest pairing against the first run, then average
    std::vector<Point> avg = runs[0];
    std::vector<int> matched_count(k, 1);
    for (std::size_t r = 1; r < runs.size(); ++r) {
        std::vector<bool> used(k, false);
        for (int c = 0; c < k; ++c) {
            int best = -1;
            double bestd = std::numeric_limits<double>::max();
            for (int j = 0; j < k; ++j) {
                if (used[j])
                    continue;
                double dx = runs[0][c].x - runs[r][j].x, dy = runs[0][c].y - runs[r][j].y;
                double d = dx * dx + dy * dy;
                if (d < bestd) {
                    bestd = d;
                    best = j;
                }
            }
            used[best] = true;
            avg[c].x += runs[r][best].x;
            avg[c].y += runs[r][best].y;
            ++matched_count[c];
        }
    }
    for (int c = 0; c < k; ++c) {
        avg[c].x /= matched_count[c];
        avg[c].y /= matched_count[c];
    }
    return avg;
}

std::vector<std::vector<double>> responsibilities(const MixtureModel& model,
                                                  const PointCloud& points) {
    std::vector<PreparedComponent> prep;
    for (const auto& c : model.components)
        prep.push_back(prepare(c));

    std::vector<std::vector<double>> resp(points.size(),
                                          std::vector<double>(model.components.size()));
    std::vector<double> terms(model.components.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        for (std::size_t c = 0; c < prep.size(); ++c)
            terms[c] = prep[c].log_weight + log_density(prep[c], points[i]);
        double lse = log_sum_exp(terms);
        for (std::size_t c = 0; c < prep.size(); ++c)
            resp[i][c] = std::exp(terms[c] - lse);
    }
    return resp;
}

double log_likelihood(const MixtureModel& model, const PointCloud& points) {
    std::vector<PreparedComponent> prep;
    for (const auto& c : model.components)
        prep.push_back(prepare(c));
    std::vector<double> terms(prep.size());
    double ll = 0.0;
    for (const auto& pt : points) {
        for (std::size_t c = 0; c < prep.size(); ++c)
            terms[c] = prep[c].log_weight + log_density(prep[c], pt);
        ll += log_sum_exp(terms);
    }
    return ll;
}

MixtureModel em_fit(const PointCloud& points, int k, const EmOptions& options, std::uint64_t seed,
                    const std::optional<std::vector<Point>>& seeds) {
    if (points.empty())
        throw std::invalid_argument("em_fit: empty point cloud");
    if (k < 1 || k > static_cast<int>(points.size()))
        throw std::invalid_argument("em_fit: k out of range");

    const double min_var = options.min_std * options.min_std;
    const std::size_t n = points.size();

    std::vector<Point> means;
    if (seeds) {
        if (static_cast<int>(seeds->size()) != k)
            throw std::invalid_argument("em_fit: seed count must equal k");
        means = *seeds;
    } else if (k == 1) {
        double sx = 0.0, sy = 0.0;
        for (const auto& p : points) {
            sx += p.x;
            sy += p.y;
        }
        means = {{sx / n, sy / n}};
    } else {
        means = kmeans(points, k, {}, seed);
    }

    // isotropic initial covariance from the global point spread
    double mx = 0.0, my = 0.0;
    for (const auto& p : points) {
        mx += p.x;
        my += p.y;
    }
    mx /= n;
    my /= n;
    double var = 0.0;
    for (const auto& p : points) {
        double dx = p.x - mx, dy = p.y - my;
        var += dx * dx + dy * dy;
    }
    var = std::max(var / (2.0 * n), min_var);

    MixtureModel model;
    for (int c = 0; c < k; ++c) {
        GaussianComponent gc;
        gc.weight = 1.0 / k;
        gc.mean_x = means[c].x;
        gc.mean_y = means[c].y;
        gc.cov_xx = gc.cov_yy = var;
        gc.cov_xy = 0.0;
        model.components.push_back(gc);
    }

    double prev_ll = -std::numeric_limits<double>::infinity();
    std::vector<PreparedComponent> prep(k);
    std::vector<double> terms(k);
    std::vector<double> resp(k);

    for (int iter = 0; iter < options.max_iter; ++iter) {
        for (int c = 0; c < k; ++c)
            prep[c] = prepare(model.components[c]);

        std::vector<double> wsum(k, 0.0), sx(k, 0.0), sy(k, 0.0);
        std::vector<double> sxx(k, 0.0), sxy(k, 0.0), syy(k, 0.0);
        double ll = 0.0;

        for (const auto& pt : points) {
            for (int c = 0; c < k; ++c)
                terms[c] = prep[c].log_weight + log_density(prep[c], pt);
            double lse = log_sum_exp(terms);
            ll += lse;
            for (int c = 0; c < k; ++c) {
                double a = std::exp(terms[c] - lse);
                resp[c] = a;
                wsum[c] += a;
                sx[c] += a * pt.x;
                sy[c] += a * pt.y;
            }
            for (int c = 0; c < k; ++c) {
                // accumulate second moments around the running data, centered later
                sxx[c] += resp[c] * pt.x * pt.x;
                sxy[c] += resp[c] * pt.x * pt.y;
                syy[c] += resp[c] * pt.y * pt.y;
            }
        }

        model.ll_trace.push_back(ll);
        model.log_likelihood = ll;
        model.iterations_used = iter + 1;
        if (ll - prev_ll < options.tol && iter > 0) {
            model.converged = true;
            break;
        }
        prev_ll = ll;

        for (int c = 0; c < k; ++c) {
            if (wsum[c] < 1e-12) {
                // degenerate component: keep it where it is with floor covariance
                model.components[c].weight = 1e-12;
                continue;
            }
            GaussianComponent& gc = model.components[c];
            gc.weight = wsum[c] / static_cast<double>(n);
            gc.mean_x = sx[c] / wsum[c];
            gc.mean_y = sy[c] / wsum[c];
            gc.cov_xx = sxx[c] / wsum[c] - gc.mean_x * gc.mean_x;
            gc.cov_xy = sxy[c] / wsum[c] - gc.mean_x * gc.mean_y;
            gc.cov_yy = syy[c] / wsum[c] - gc.mean_y * gc.mean_y;
            floor_covariance(gc, min_var);
        }
        // renormalize weights onto the simplex
        double wtot = 0.0;
        for (const auto& gc : model.components)
            wtot += gc.weight;
        for (auto& gc : model.components)
            gc.weight /= wtot;
    }
    return model;
}

std::vector<Region> decluster(const Region& region, int k, const EmOptions& options,
                              std::uint64_t seed) {
    if (k < 1)
        throw std::invalid_argument("decluster: k must be >= 1");
    if (static_cast<int>(region.pixels.size()) < k)
        throw std::invalid_argument("decluster: region smaller than k");

    if (k == 1) {
        Region r = region;
        r.id = 1;
        return {r};
    }

    PointCloud cloud = region_cloud(region);
    MixtureModel model = em_fit(cloud, k, options, seed);
    auto resp = responsibilities(model, cloud);

    std::vector<std::vector<std::pair<int, int>>> buckets(k);
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        int best = 0;
        for (int c = 1; c < k; ++c)
            if (resp[i][c] > resp[i][best])
                best = c;
        buckets[best].push_back(region.pixels[i]);
    }

    for (const auto& bucket : buckets)
        if (bucket.empty())
            return decluster(region, k - 1, options, seed);  // refit with one fewer

    std::vector<Region> out;
    for (int c = 0; c < k; ++c) {
        Region r;
        r.id = c + 1;
        r.pixels = std::move(buckets[c]);
        r.touches_border = region.touches_border;
        r.kind = region.kind;
        r.color_code = region_color(region.id * 16 + c + 1);
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace lq
