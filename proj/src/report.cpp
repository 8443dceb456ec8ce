#include "leishquant/report.hpp"

#include <cmath>
#include <cstdio>
#include <ctime>
#include <sstream>
#include <stdexcept>

namespace lq {

std::string current_report_timestamp() {
    std::time_t now = std::time(nullptr);
    std::tm tm{};
    localtime_r(&now, &tm);
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%02d - %02d - %04d @ %02d:%02d", tm.tm_mday, tm.tm_mon + 1,
                  tm.tm_year + 1900, tm.tm_hour, tm.tm_min);
    return buf;
}

InfectionReport compute_stats(const ChannelStats& macrophage, const ChannelStats& parasite,
                              const AssociationResult& association,
                              const std::string& image_path, bool with_timestamp) {
    InfectionReport r;
    r.image_path = image_path;
    if (with_timestamp)
        r.generated_at = current_report_timestamp();

    auto tally = [](const ChannelStats& ch, int& regions, int& uni, int& multi, int& total,
                    double& sync) {
        regions = static_cast<int>(ch.estimates.size()) + ch.unclassified;
        uni = multi = total = 0;
        int agreed = 0;
        for (const auto& e : ch.estimates) {
            if (e.final == 1)
                ++uni;
            else if (e.final >= 2)
                ++multi;
            total += e.final;
            if (e.agreed)
                ++agreed;
        }
        sync = ch.estimates.empty() ? 100.0
                                    : 100.0 * agreed / static_cast<double>(ch.estimates.size());
    };
    tally(macrophage, r.macro_regions, r.macro_uni, r.macro_multi, r.total_macrophages,
          r.sync_rate_macrophages);
    tally(parasite, r.para_regions, r.para_uni, r.para_multi, r.total_parasites,
          r.sync_rate_parasites);

    const int infected = static_cast<int>(association.infected_macrophages.size());
    const int associated = static_cast<int>(association.pairs.size());
    if (r.total_macrophages > 0) {
        r.infection_ratio = static_cast<double>(infected) / r.total_macrophages;
        r.avg_parasites_per_total = static_cast<double>(associated) / r.total_macrophages;
    } else {
        r.zero_macrophages = true;
    }
    if (infected > 0)
        r.avg_parasites_per_infected = static_cast<double>(associated) / infected;
    return r;
}

namespace {

// fixed `decimals`, then strip trailing zeros (and a bare point): 100.0000 -> "100"
std::string trimmed_fixed(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
    std::string s(buf);
    if (s.find('.') != std::string::npos) {
        while (!s.empty() && s.back() == '0')
            s.pop_back();
        if (!s.empty() && s.back() == '.')
            s.pop_back();
    }
    return s;
}

std::string fixed(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
    return buf;
}

}  // namespace

std::string render_report(const InfectionReport& r) {
    std::ostringstream out;
    out << r.image_path << "\n";
    if (!r.generated_at.empty())
        out << "Report generated on: " << r.generated_at << "\n";
    out << "\n";
    out << "Macrophagic regions: " << r.macro_regions << "\n";
    out << "Uni-nucleic macrophagic regions: " << r.macro_uni << "\n";
    out << "Multi-nucleic macrophagic regions: " << r.macro_multi << "\n";
    out << "\n";
    out << "Parasitic regions: " << r.para_regions << "\n";
    out << "Uni-nucleic parasitic regions: " << r.para_uni << "\n";
    out << "Multi-nucleic parasitic regions: " << r.para_multi << "\n";
    out << "\n";
    out << "Total counted macrophages: " << r.total_macrophages << "\n";
    out << "Total counted parasites: " << r.total_parasites << "\n";
    out << "\n";
    out << "Classifier synchronization rate (macrophages): "
        << trimmed_fixed(r.sync_rate_macrophages, 4) << "%\n";
    out << "Classifier synchronization rate (parasites): "
        << trimmed_fixed(r.sync_rate_parasites, 4) << "%\n";
    out << "\n";
    out << "Overall infection ratio: " << fixed(r.infection_ratio, 8) << "\n";
    out << "\n";
    out << "Average parasites per infected macrophage: " << fixed(r.avg_parasites_per_infected, 7)
        << "\n";
    out << "Average parasites per total macrophages: " << fixed(r.avg_parasites_per_total, 7)
        << "\n";

    if (r.zero_macrophages || r.lossy_input || r.degenerate_stretch) {
        out << "\n";
        if (r.zero_macrophages)
            out << "Warning: no macrophages counted; ratios reported as 0\n";
        if (r.lossy_input)
            out << "Warning: lossy (JPEG) input image\n";
        if (r.degenerate_stretch)
            out << "Warning: degenerate contrast stretch; identity mapping applied\n";
    }
    return out.str();
}

double segmentation_accuracy(long long detected_correct, long long ground_truth_total) {
    if (ground_truth_total <= 0)
        throw std::invalid_argument("segmentation_accuracy: undefined for zero ground truth");
    return static_cast<double>(detected_correct) / static_cast<double>(ground_truth_total);
}

EvalResult evaluate(double algorithm_value, const std::vector<double>& annotations) {
    if (annotations.size() < 2)
        throw std::invalid_argument("evaluate: need at least two annotation values");
    EvalResult r;
    r.algorithm_value = algorithm_value;
    double n = static_cast<double>(annotations.size());
    for (double x : annotations)
        r.mean += x;
    r.mean /= n;
    for (double x : annotations)
        r.stddev += (x - r.mean) * (x - r.mean);
    r.stddev = std::sqrt(r.stddev / n);
    r.lower = r.mean - 2.0 * r.stddev;
    r.upper = r.mean + 2.0 * r.stddev;
    r.algorithm_error = std::abs(algorithm_value - r.mean);
    r.within_bounds = r.algorithm_error <= 2.0 * r.stddev;
    return r;
}

}  // namespace lq
