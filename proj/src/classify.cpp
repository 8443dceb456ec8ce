#include "leishquant/classify.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "leishquant/preprocess.hpp"

namespace lq {

void ParameterSet::validate() const {
    if (!(u > 0.0) || !(sigma > 0.0) || !(sigma < u))
        throw std::invalid_argument("ParameterSet: need 0 < sigma < u");
    if (!(noise_floor < u - 2.0 * sigma))
        throw std::invalid_argument("ParameterSet: noise floor must be below u - 2*sigma");
    if (max_class < 1)
        throw std::invalid_argument("ParameterSet: max_class must be >= 1");
}

ParameterSet default_zoom5() {
    return ParameterSet{"zoom5", 300.0, 48.0, 9, 156.0};
}

ParameterSet default_zoom10() {
    // area statistics scale with the square of the linear magnification
    return ParameterSet{"zoom10", 1200.0, 192.0, 9, 624.0};
}

ParameterSets ParameterSets::defaults() {
    return ParameterSets{default_zoom5(), default_zoom10()};
}

const ParameterSet& ParameterSets::by_label(const std::string& label) const {
    if (label == "zoom5")
        return zoom5;
    if (label == "zoom10")
        return zoom10;
    throw std::invalid_argument("unknown zoom label: " + label);
}

namespace {

ParameterSet parse_set(const nlohmann::json& j, const std::string& label,
                       const ParameterSet& fallback) {
    ParameterSet s = fallback;
    s.zoom_label = label;
    if (j.contains("u"))
        s.u = j["u"].get<double>();
    if (j.contains("sigma"))
        s.sigma = j["sigma"].get<double>();
    if (j.contains("max_class"))
        s.max_class = j["max_class"].get<int>();
    s.noise_floor = j.contains("noise_floor") ? j["noise_floor"].get<double>()
                                              : s.u - 3.0 * s.sigma;
    s.validate();
    return s;
}

}  // namespace

ParameterSets ParameterSets::load(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot read parameter file " + path);
    nlohmann::json j;
    in >> j;
    ParameterSets out = defaults();
    if (j.contains("zoom5"))
        out.zoom5 = parse_set(j["zoom5"], "zoom5", default_zoom5());
    if (j.contains("zoom10"))
        out.zoom10 = parse_set(j["zoom10"], "zoom10", default_zoom10());
    return out;
}

void ParameterSets::save(const std::string& path) const {
    nlohmann::ordered_json j;
    for (const ParameterSet* s : {&zoom5, &zoom10}) {
        j[s->zoom_label] = {{"u", s->u},
                            {"sigma", s->sigma},
                            {"max_class", s->max_class},
                            {"noise_floor", s->noise_floor}};
    }
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot write parameter file " + path);
    out << j.dump(2) << "\n";
}

std::string estimate_zoom(const std::vector<RegionArea>& macrophage_regions,
                          const ParameterSets& sets) {
    if (macrophage_regions.empty())
        throw std::runtime_error("estimation error: no macrophage regions");

    const double max5 = sets.zoom5.u + 2.0 * sets.zoom5.sigma;
    const double max10 = sets.zoom10.u + 2.0 * sets.zoom10.sigma;

    int zoom5_votes = 0, zoom10_votes = 0;
    int above_max10 = 0;
    const int total = static_cast<int>(macrophage_regions.size());
    for (const auto& r : macrophage_regions) {
        if (r.touches_border)
            continue;
        double a = static_cast<double>(r.area);
        if (a < max5)
            ++zoom5_votes;
        else if (a < max10)
            ++zoom10_votes;
        else
            ++above_max10;
    }

    const double gap_threshold = 0.1 * total;
    if (zoom10_votes - zoom5_votes > gap_threshold)
        return "zoom10";
    if (zoom5_votes - zoom10_votes > gap_threshold)
        return "zoom5";
    return above_max10 > 4 ? "zoom10" : "zoom5";
}

RuleVote rule_classify(long long area, const ParameterSet& set) {
    if (area <= 0)
        throw std::invalid_argument("rule_classify: area must be > 0");
    RuleVote v;
    if (static_cast<double>(area) <= set.noise_floor) {
        v.cls = 0;
        return v;
    }
    if (static_cast<double>(area) > (set.max_class + 0.5) * set.u) {
        v.unclassified = true;
        return v;
    }
    int k = round_half_up(static_cast<double>(area) / set.u);
    v.cls = std::clamp(k, 1, set.max_class);
    return v;
}

std::vector<double> LLFeatures::to_vector() const {
    std::vector<double> v;
    v.reserve(28);
    v.insert(v.end(), ll.begin(), ll.end());
    v.insert(v.end(), fod.begin(), fod.end());
    v.insert(v.end(), sod.begin(), sod.end());
    v.push_back(area);
    return v;
}

LLFeatures ll_feature_vector(const Region& region, const LLFeatureOptions& options,
                             std::uint64_t seed) {
    if (region.pixels.size() < 10)
        throw std::runtime_error("feature error: region smaller than 10 pixels");

    PointCloud cloud = region_cloud(region);
    if (cloud.size() > options.max_points) {
        // deterministic stride subsample keeps the k-sweep cost bounded
        PointCloud sub;
        sub.reserve(options.max_points);
        double stride = static_cast<double>(cloud.size()) / options.max_points;
        for (std::size_t i = 0; i < options.max_points; ++i)
            sub.push_back(cloud[static_cast<std::size_t>(i * stride)]);
        cloud = std::move(sub);
    }

    LLFeatures f;
    f.area = static_cast<double>(region.pixels.size());
    double prev_ll = 0.0;
    for (int k = 1; k <= 10; ++k) {
        MixtureModel model;
        try {
            model = em_fit(cloud, k, options.em, seed + k);
            if (k > 1 && model.log_likelihood < prev_ll) {
                // local optimum below the k-1 fit: retry from a different seed
                MixtureModel retry = em_fit(cloud, k, options.em, seed + k + 1000);
                if (retry.log_likelihood > model.log_likelihood)
                    model = std::move(retry);
            }
        } catch (const std::exception& e) {
            throw std::runtime_error(std::string("feature error: EM failed at k=") +
                                     std::to_string(k) + ": " + e.what());
        }
        f.ll[k - 1] = model.log_likelihood;
        prev_ll = model.log_likelihood;
    }
    for (int i = 0; i < 9; ++i)
        f.fod[i] = f.ll[i + 1] - f.ll[i];
    for (int i = 0; i < 8; ++i)
        f.sod[i] = f.fod[i + 1] - f.fod[i];
    return f;
}

int classify_ml(const LLFeatures& features, const SvmModel& model) {
    return model.predict(features.to_vector());
}

NucleiEstimate vote(int rule_vote, std::optional<int> svm_vote) {
    NucleiEstimate e;
    e.rule_vote = rule_vote;
    e.svm_vote = svm_vote;
    if (!svm_vote || *svm_vote == rule_vote) {
        e.final = rule_vote;
        e.agreed = true;
    } else if (std::abs(*svm_vote - rule_vote) <= 2) {
        e.final = *svm_vote;
        e.agreed = false;
    } else {
        e.final = rule_vote;
        e.agreed = false;
    }
    return e;
}

}  // namespace lq
