#pragma once

#include <optional>
#include <string>
#include <vector>

#include "leishquant/associate.hpp"
#include "leishquant/classify.hpp"
#include "leishquant/features.hpp"
#include "leishquant/raster.hpp"
#include "leishquant/report.hpp"

namespace lq {

struct PipelineConfig {
    // preprocessing
    double stretch_low = 0.05;
    double stretch_high = 0.95;
    bool equalize = false;
    bool blur = false;
    double blur_sigma = 1.0;
    int blur_kernel = 3;

    // segmentation
    int peak_window = 31;
    int valley_halfwidth = 20;
    int connectivity = 4;

    // classification
    ParameterSets params = ParameterSets::defaults();
    std::string zoom = "auto";  // "auto", "5" or "10"
    std::optional<SvmModel> model;

    // declustering
    EmOptions em;
    std::uint64_t seed = 0;

    // association
    AssociationMode assoc_mode = AssociationMode::both;
    double assoc_radius = 0.0;  // <= 0: derived from the active parameter set

    bool with_timestamp = true;
};

// Classification outcome for one labeled region.
struct RegionResult {
    int id = 0;
    RegionKind kind = RegionKind::unset;
    FeatureVector features;
    bool touches_border = false;
    std::optional<NucleiEstimate> estimate;  // absent for border/unclassified regions
    bool unclassified = false;
};

struct ImageAnalysis {
    InfectionReport report;
    std::string zoom_label;
    std::vector<RegionResult> macrophage_regions;
    std::vector<RegionResult> parasite_regions;
    int cytoplasm_regions = 0;
    std::vector<Nucleus> macrophage_nuclei;  // post-declustering centroids
    std::vector<Nucleus> parasite_nuclei;
    AssociationResult association;
    bool degenerate_stretch = false;
};

// Full single-image workflow on already-split channels.
ImageAnalysis analyze_channels(const ChannelSet& channels, const PipelineConfig& config,
                               const std::string& image_path);

ImageAnalysis analyze_file(const std::string& path, const PipelineConfig& config);

// JSON sidecar mirroring the report plus per-region detail.
std::string analysis_to_json(const ImageAnalysis& analysis);

// Per-region CSV (features dump / verbose report appendix).
std::string regions_to_csv(const ImageAnalysis& analysis);

AnnotationSet analysis_annotations(const ImageAnalysis& analysis);

}  // namespace lq
