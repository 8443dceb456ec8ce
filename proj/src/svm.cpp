#include "leishquant/svm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <stdexcept>

#include <json.hpp>

namespace lq {

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        s += a[i] * b[i];
    return s;
}

}  // namespace

double KernelSpec::eval(const std::vector<double>& a, const std::vector<double>& b) const {
    switch (type) {
        case KernelType::linear:
            return dot(a, b);
        case KernelType::polynomial:
            return std::pow(gamma * dot(a, b) + coef0, degree);
        case KernelType::rbf: {
            double d2 = 0.0;
            for (std::size_t i = 0; i < a.size(); ++i) {
                double d = a[i] - b[i];
                d2 += d * d;
            }
            return std::exp(-gamma * d2);
        }
        case KernelType::tanh_sigmoid:
            return std::tanh(gamma * dot(a, b) + coef0);
    }
    return 0.0;
}

std::vector<double> SvmModel::scale(const std::vector<double>& x) const {
    if (x.size() != scale_mean.size())
        throw std::runtime_error("model error: feature length mismatch");
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
        out[i] = (x[i] - scale_mean[i]) / scale_std[i];
    return out;
}

namespace {

double decision(const PairModel& pm, const KernelSpec& k, const std::vector<double>& x) {
    double f = pm.bias;
    for (std::size_t i = 0; i < pm.support_vectors.size(); ++i)
        f += pm.coefficients[i] * k.eval(pm.support_vectors[i], x);
    return f;
}

// Binary SMO (Platt's simplified variant with deterministic second-choice).
struct BinarySmo {
    const std::vector<std::vector<double>>& x;
    const std::vector<int>& y;  // +1 / -1
    const KernelSpec& kernel;
    const SmoOptions& opt;
    std::vector<double> alpha;
    std::vector<double> errors;
    std::vector<std::vector<double>> gram;
    double b = 0.0;

    BinarySmo(const std::vector<std::vector<double>>& xs, const std::vector<int>& ys,
              const KernelSpec& k, const SmoOptions& o)
        : x(xs), y(ys), kernel(k), opt(o), alpha(xs.size(), 0.0), errors(xs.size(), 0.0) {
        const std::size_t n = xs.size();
        gram.assign(n, std::vector<double>(n, 0.0));
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i; j < n; ++j)
                gram[i][j] = gram[j][i] = kernel.eval(xs[i], xs[j]);
        for (std::size_t i = 0; i < n; ++i)
            errors[i] = -static_cast<double>(ys[i]);  // f(x)=0 initially
    }

    double f(std::size_t i) const {
        double s = b;
        for (std::size_t j = 0; j < alpha.size(); ++j)
            if (alpha[j] > 0.0)
                s += alpha[j] * y[j] * gram[j][i];
        return s;
    }

    bool take_step(std::size_t i1, std::size_t i2) {
        if (i1 == i2)
            return false;
        double a1 = alpha[i1], a2 = alpha[i2];
        int y1 = y[i1], y2 = y[i2];
        double e1 = errors[i1], e2 = errors[i2];
        double s = y1 * y2;
        double lo, hi;
        if (y1 != y2) {
            lo = std::max(0.0, a2 - a1);
            hi = std::min(opt.C, opt.C + a2 - a1);
        } else {
            lo = std::max(0.0, a1 + a2 - opt.C);
            hi = std::min(opt.C, a1 + a2);
        }
        if (lo >= hi)
            return false;
        double eta = gram[i1][i1] + gram[i2][i2] - 2.0 * gram[i1][i2];
        double a2new;
        if (eta > 1e-12) {
            a2new = a2 + y2 * (e1 - e2) / eta;
            a2new = std::clamp(a2new, lo, hi);
        } else {
            // objective at the clip bounds
            double f1 = y1 * e1 - a1 * gram[i1][i1] - s * a2 * gram[i1][i2];
            double f2 = y2 * e2 - s * a1 * gram[i1][i2] - a2 * gram[i2][i2];
            double l1 = a1 + s * (a2 - lo);
            double h1 = a1 + s * (a2 - hi);
            double lobj = l1 * f1 + lo * f2 + 0.5 * l1 * l1 * gram[i1][i1] +
                          0.5 * lo * lo * gram[i2][i2] + s * lo * l1 * gram[i1][i2];
            double hobj = h1 * f1 + hi * f2 + 0.5 * h1 * h1 * gram[i1][i1] +
                          0.5 * hi * hi * gram[i2][i2] + s * hi * h1 * gram[i1][i2];
            if (lobj < hobj - 1e-12)
                a2new = lo;
            else if (hobj < lobj - 1e-12)
                a2new = hi;
            else
                a2new = a2;
        }
        if (std::abs(a2new - a2) < 1e-12 * (a2new + a2 + 1e-12))
            return false;
        double a1new = a1 + s * (a2 - a2new);

        double b1 = b - e1 - y1 * (a1new - a1) * gram[i1][i1] - y2 * (a2new - a2) * gram[i1][i2];
        double b2 = b - e2 - y1 * (a1new - a1) * gram[i1][i2] - y2 * (a2new - a2) * gram[i2][i2];
        double bnew;
        if (a1new > 0.0 && a1new < opt.C)
            bnew = b1;
        else if (a2new > 0.0 && a2new < opt.C)
            bnew = b2;
        else
            bnew = 0.5 * (b1 + b2);

        double db = bnew - b;
        for (std::size_t j = 0; j < errors.size(); ++j)
            errors[j] += y1 * (a1new - a1) * gram[i1][j] + y2 * (a2new - a2) * gram[i2][j] + db;

        alpha[i1] = a1new;
        alpha[i2] = a2new;
        b = bnew;
        return true;
    }

    bool examine(std::size_t i2) {
        double e2 = errors[i2];
        double r2 = e2 * y[i2];
        bool violates = (r2 < -opt.kkt_tol && alpha[i2] < opt.C) ||
                        (r2 > opt.kkt_tol && alpha[i2] > 0.0);
        if (!violates)
            return false;
        // second choice: maximize |e1 - e2|
        std::size_t best = i2;
        double bestgap = -1.0;
        for (std::size_t j = 0; j < alpha.size(); ++j) {
            if (j == i2)
                continue;
            double gap = std::abs(errors[j] - e2);
            if (gap > bestgap) {
                bestgap = gap;
                best = j;
            }
        }
        if (best != i2 && take_step(best, i2))
            return true;
        // fall back: sweep all in index order
        for (std::size_t j = 0; j < alpha.size(); ++j)
            if (j != i2 && take_step(j, i2))
                return true;
        return false;
    }

    void solve() {
        int pass = 0;
        bool examine_all = true;
        while (pass++ < opt.max_passes) {
            int changed = 0;
            for (std::size_t i = 0; i < alpha.size(); ++i) {
                if (!examine_all && (alpha[i] <= 0.0 || alpha[i] >= opt.C))
                    continue;
                if (examine(i))
                    ++changed;
            }
            if (examine_all) {
                if (changed == 0)
                    break;
                examine_all = false;
            } else if (changed == 0) {
                examine_all = true;
            }
        }
    }
};

}  // namespace

SvmModel train_svm(const std::vector<std::vector<double>>& samples,
                   const std::vector<int>& labels, const KernelSpec& kernel,
                   const SmoOptions& options) {
    if (samples.size() != labels.size() || samples.empty())
        throw std::invalid_argument("train_svm: samples/labels mismatch");

    std::map<int, int> counts;
    for (int l : labels)
        ++counts[l];
    if (counts.size() < 2)
        throw std::runtime_error("training error: need at least two classes");
    for (auto [cls, n] : counts)
        if (n < 2)
            throw std::runtime_error("training error: class " + std::to_string(cls) +
                                     " has fewer than two samples");

    const std::size_t dim = samples[0].size();
    for (const auto& s : samples)
        if (s.size() != dim)
            throw std::invalid_argument("train_svm: inconsistent feature lengths");

    SvmModel model;
    model.kernel = kernel;
    model.scale_mean.assign(dim, 0.0);
    model.scale_std.assign(dim, 0.0);
    for (const auto& s : samples)
        for (std::size_t i = 0; i < dim; ++i)
            model.scale_mean[i] += s[i];
    for (double& m : model.scale_mean)
        m /= static_cast<double>(samples.size());
    for (const auto& s : samples)
        for (std::size_t i = 0; i < dim; ++i) {
            double d = s[i] - model.scale_mean[i];
            model.scale_std[i] += d * d;
        }
    for (double& v : model.scale_std) {
        v = std::sqrt(v / static_cast<double>(samples.size()));
        if (v < 1e-12)
            v = 1.0;  // constant coefficient: leave centered
    }

    std::vector<std::vector<double>> scaled(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i)
        scaled[i] = model.scale(samples[i]);

    for (auto [cls, n] : counts)
        model.classes.push_back(cls);

    for (std::size_t a = 0; a < model.classes.size(); ++a) {
        for (std::size_t b = a + 1; b < model.classes.size(); ++b) {
            int ca = model.classes[a], cb = model.classes[b];
            std::vector<std::vector<double>> x;
            std::vector<int> y;
            for (std::size_t i = 0; i < scaled.size(); ++i) {
                if (labels[i] == ca) {
                    x.push_back(scaled[i]);
                    y.push_back(1);
                } else if (labels[i] == cb) {
                    x.push_back(scaled[i]);
                    y.push_back(-1);
                }
            }
            BinarySmo smo(x, y, kernel, options);
            smo.solve();

            PairModel pm;
            pm.class_a = ca;
            pm.class_b = cb;
            for (std::size_t i = 0; i < x.size(); ++i) {
                if (smo.alpha[i] > 1e-8) {
                    pm.support_vectors.push_back(x[i]);
                    pm.coefficients.push_back(smo.alpha[i] * y[i]);
                }
            }
            pm.bias = smo.b;
            model.pairs.push_back(std::move(pm));
        }
    }
    return model;
}

int SvmModel::predict(const std::vector<double>& features) const {
    if (!trained())
        throw std::runtime_error("model error: untrained model");
    std::vector<double> x = scale(features);
    std::map<int, int> votes;
    for (int c : classes)
        votes[c] = 0;
    for (const auto& pm : pairs) {
        double f = decision(pm, kernel, x);
        ++votes[f > 0.0 ? pm.class_a : pm.class_b];
    }
    int best = classes.front();
    int bestv = -1;
    for (int c : classes) {  // ascending: ties break toward the smaller class
        if (votes[c] > bestv) {
            bestv = votes[c];
            best = c;
        }
    }
    return best;
}

namespace {

const char* kernel_name(KernelType t) {
    switch (t) {
        case KernelType::linear: return "linear";
        case KernelType::polynomial: return "polynomial";
        case KernelType::rbf: return "rbf";
        case KernelType::tanh_sigmoid: return "tanh";
    }
    return "rbf";
}

KernelType kernel_from_name(const std::string& s) {
    if (s == "linear") return KernelType::linear;
    if (s == "polynomial") return KernelType::polynomial;
    if (s == "rbf") return KernelType::rbf;
    if (s == "tanh") return KernelType::tanh_sigmoid;
    throw std::runtime_error("model error: unknown kernel '" + s + "'");
}

}  // namespace

std::string SvmModel::to_json() const {
    nlohmann::ordered_json j;
    j["format"] = "leishquant-svm";
    j["version"] = 1;
    j["kernel"] = {{"type", kernel_name(kernel.type)},
                   {"degree", kernel.degree},
                   {"gamma", kernel.gamma},
                   {"coef0", kernel.coef0}};
    j["classes"] = classes;
    j["scale_mean"] = scale_mean;
    j["scale_std"] = scale_std;
    j["pairs"] = nlohmann::ordered_json::array();
    for (const auto& pm : pairs) {
        nlohmann::ordered_json pj;
        pj["class_a"] = pm.class_a;
        pj["class_b"] = pm.class_b;
        pj["support_vectors"] = pm.support_vectors;
        pj["coefficients"] = pm.coefficients;
        pj["bias"] = pm.bias;
        j["pairs"].push_back(std::move(pj));
    }
    return j.dump(2);
}

SvmModel SvmModel::from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    if (j.value("format", "") != "leishquant-svm")
        throw std::runtime_error("model error: not a classifier model file");
    SvmModel m;
    m.kernel.type = kernel_from_name(j["kernel"]["type"].get<std::string>());
    m.kernel.degree = j["kernel"]["degree"].get<int>();
    m.kernel.gamma = j["kernel"]["gamma"].get<double>();
    m.kernel.coef0 = j["kernel"]["coef0"].get<double>();
    m.classes = j["classes"].get<std::vector<int>>();
    m.scale_mean = j["scale_mean"].get<std::vector<double>>();
    m.scale_std = j["scale_std"].get<std::vector<double>>();
    for (const auto& pj : j["pairs"]) {
        PairModel pm;
        pm.class_a = pj["class_a"].get<int>();
        pm.class_b = pj["class_b"].get<int>();
        pm.support_vectors = pj["support_vectors"].get<std::vector<std::vector<double>>>();
        pm.coefficients = pj["coefficients"].get<std::vector<double>>();
        pm.bias = pj["bias"].get<double>();
        m.pairs.push_back(std::move(pm));
    }
    return m;
}

void SvmModel::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("model error: cannot write " + path);
    out << to_json() << "\n";
}

SvmModel SvmModel::load(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("model error: cannot read " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return from_json(text);
}

}  // namespace lq
