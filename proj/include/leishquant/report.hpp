#pragma once

#include <optional>
#include <string>
#include <vector>

#include "leishquant/associate.hpp"
#include "leishquant/classify.hpp"

namespace lq {

struct InfectionReport {
    std::string image_path;
    std::string generated_at;  // "DD - MM - YYYY @ HH:MM"; empty = no timestamp line

    int macro_regions = 0;
    int macro_uni = 0;
    int macro_multi = 0;
    int para_regions = 0;
    int para_uni = 0;
    int para_multi = 0;
    int total_macrophages = 0;
    int total_parasites = 0;
    double sync_rate_macrophages = 100.0;  // percent
    double sync_rate_parasites = 100.0;
    double infection_ratio = 0.0;
    double avg_parasites_per_infected = 0.0;
    double avg_parasites_per_total = 0.0;

    // warning flags (sidecar / trailing warning lines, not the fixed body)
    bool zero_macrophages = false;
    bool lossy_input = false;
    bool degenerate_stretch = false;
};

// Per-channel classification outcome feeding the report.
struct ChannelStats {
    std::vector<NucleiEstimate> estimates;  // non-border regions, one entry each
    int unclassified = 0;                   // regions beyond the rule classifier's range
};

std::string current_report_timestamp();

InfectionReport compute_stats(const ChannelStats& macrophage, const ChannelStats& parasite,
                              const AssociationResult& association,
                              const std::string& image_path, bool with_timestamp = true);

std::string render_report(const InfectionReport& report);

double segmentation_accuracy(long long detected_correct, long long ground_truth_total);

struct EvalResult {
    double mean = 0.0;
    double stddev = 0.0;  // population form, divisor N
    double lower = 0.0;   // mean - 2*sigma
    double upper = 0.0;   // mean + 2*sigma
    double algorithm_value = 0.0;
    double algorithm_error = 0.0;  // |algorithm - mean|
    bool within_bounds = false;
};

EvalResult evaluate(double algorithm_value, const std::vector<double>& annotations);

}  // namespace lq
