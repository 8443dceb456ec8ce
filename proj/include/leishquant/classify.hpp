#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "leishquant/mixture.hpp"
#include "leishquant/segment.hpp"
#include "leishquant/svm.hpp"

namespace lq {

// Zoom-level specific area statistics for the rule-based classifier.
struct ParameterSet {
    std::string zoom_label = "zoom5";
    double u = 300.0;      // mean uni-nucleic area, px
    double sigma = 48.0;   // area standard deviation, px
    int max_class = 9;
    double noise_floor = 156.0;  // u - 3*sigma

    void validate() const;
};

ParameterSet default_zoom5();
ParameterSet default_zoom10();

struct ParameterSets {
    ParameterSet zoom5;
    ParameterSet zoom10;

    const ParameterSet& by_label(const std::string& label) const;
    static ParameterSets defaults();
    static ParameterSets load(const std::string& path);  // JSON with "zoom5"/"zoom10" entries
    void save(const std::string& path) const;
};

// Region summary the classifiers consume.
struct RegionArea {
    long long area = 0;
    bool touches_border = false;
};

// Area-vote routine deciding between the two parameter sets.
std::string estimate_zoom(const std::vector<RegionArea>& macrophage_regions,
                          const ParameterSets& sets);

struct RuleVote {
    int cls = 0;          // 0 = noise
    bool unclassified = false;  // area beyond (max_class + 0.5) * u
};

RuleVote rule_classify(long long area, const ParameterSet& set);

// 28-coefficient feature vector: log-likelihoods for k = 1..10 plus their
// discrete first and second differences and the region area.
struct LLFeatures {
    std::array<double, 10> ll{};
    std::array<double, 9> fod{};
    std::array<double, 8> sod{};
    double area = 0.0;

    std::vector<double> to_vector() const;
};

struct LLFeatureOptions {
    EmOptions em;
    std::size_t max_points = 400;  // deterministic subsample cap for the k-sweep
};

LLFeatures ll_feature_vector(const Region& region, const LLFeatureOptions& options = {},
                             std::uint64_t seed = 0);

int classify_ml(const LLFeatures& features, const SvmModel& model);

struct NucleiEstimate {
    int rule_vote = 0;
    std::optional<int> svm_vote;
    int final = 0;
    bool agreed = true;
};

// SVM vote accepted only within the +-2 trust band around the rule vote.
NucleiEstimate vote(int rule_vote, std::optional<int> svm_vote);

}  // namespace lq
