#include "leishquant/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "leishquant/mixture.hpp"
#include "leishquant/preprocess.hpp"

namespace lq {

namespace {

Plane preprocess_channel(const Plane& plane, const PipelineConfig& cfg, bool& degenerate) {
    Plane out;
    try {
        out = contrast_stretch(plane, cfg.stretch_low, cfg.stretch_high);
    } catch (const StretchError&) {
        degenerate = true;
        out = plane;  // identity fallback
    }
    if (cfg.equalize)
        out = histogram_equalize(out);
    if (cfg.blur)
        out = gaussian_blur(out, cfg.blur_sigma, cfg.blur_kernel);
    return out;
}

// Histogram modality drives the threshold count; nuclei live in the top class.
bool single_intensity(const HistogramData& hist) {
    int occupied = 0;
    for (auto b : hist.bins)
        if (b > 0)
            ++occupied;
    return occupied < 2;
}

std::vector<Region> segment_nuclear_channel(const Plane& plane, const PipelineConfig& cfg) {
    HistogramData hist = histogram(plane);
    if (single_intensity(hist))
        return {};  // blank channel: nothing to threshold
    PeakAnalysis peaks = count_peaks(hist, cfg.peak_window);
    int modality = static_cast<int>(peaks.peaks.size());

    // Trimodal channels get the constrained two-threshold search; anything
    // else (including noisy comb histograms) falls back to plain Otsu.
    ThresholdSet ts;
    if (modality == 3 && peaks.valleys.size() >= 2) {
        auto intervals = valley_intervals(peaks, cfg.valley_halfwidth);
        intervals.resize(2);
        ts = multi_otsu(hist, 3, intervals);
    } else {
        ts.levels = {otsu_threshold(hist)};
        ts.modality = 2;
    }
    BinaryMask mask = binarize(plane, ts, static_cast<int>(ts.levels.size()));
    return label_regions(mask, cfg.connectivity);
}

std::vector<Region> segment_cytoplasm_channel(const Plane& plane, const PipelineConfig& cfg) {
    HistogramData hist = histogram(plane);
    if (single_intensity(hist))
        return {};
    ThresholdSet ts;
    ts.levels = {otsu_threshold(hist)};
    BinaryMask mask = binarize(plane, ts, 1);
    return label_regions(mask, cfg.connectivity);
}

struct ClassifiedChannel {
    std::vector<RegionResult> results;
    ChannelStats stats;
    std::vector<Nucleus> nuclei;  // declustered centroids of counted regions
};

ClassifiedChannel classify_channel(std::vector<Region>& regions, RegionKind kind,
                                   const ParameterSet& params, const PipelineConfig& cfg) {
    ClassifiedChannel out;
    int next_nucleus_id = 1;
    for (auto& region : regions) {
        region.kind = kind;
        RegionResult rr;
        rr.id = region.id;
        rr.kind = kind;
        rr.touches_border = region.touches_border;
        rr.features = extract_features(region);
        if (region.touches_border) {
            out.results.push_back(std::move(rr));
            continue;
        }

        RuleVote rv = rule_classify(rr.features.area, params);
        if (rv.unclassified) {
            rr.unclassified = true;
            ++out.stats.unclassified;
            out.results.push_back(std::move(rr));
            continue;
        }
        if (rv.cls == 0) {
            region.kind = RegionKind::noise;
            rr.kind = RegionKind::noise;
            NucleiEstimate est = vote(0, std::nullopt);
            rr.estimate = est;
            out.stats.estimates.push_back(est);
            out.results.push_back(std::move(rr));
            continue;
        }

        std::optional<int> svm_vote;
        if (rv.cls >= 2 && cfg.model && region.pixels.size() >= 10) {
            try {
                LLFeatureOptions opts;
                opts.em = cfg.em;
                LLFeatures f =
                    ll_feature_vector(region, opts, cfg.seed ^ (0x1000ULL * region.id));
                svm_vote = classify_ml(f, *cfg.model);
            } catch (const std::exception&) {
                svm_vote.reset();  // fall back to the rule vote alone
            }
        }
        NucleiEstimate est = vote(rv.cls, svm_vote);
        rr.estimate = est;
        out.stats.estimates.push_back(est);

        if (est.final == 1) {
            Nucleus n;
            n.id = next_nucleus_id++;
            n.cx = rr.features.cx;
            n.cy = rr.features.cy;
            out.nuclei.push_back(n);
        } else if (est.final >= 2) {
            auto subs = decluster(region, est.final, cfg.em, cfg.seed ^ (0x2000ULL * region.id));
            for (auto& sub : subs) {
                auto [cx, cy] = centroid(sub);
                Nucleus n;
                n.id = next_nucleus_id++;
                n.cx = cx;
                n.cy = cy;
                out.nuclei.push_back(n);
            }
        }
        out.results.push_back(std::move(rr));
    }
    return out;
}

}  // namespace

ImageAnalysis analyze_channels(const ChannelSet& channels, const PipelineConfig& config,
                               const std::string& image_path) {
    channels.validate();
    ImageAnalysis out;

    bool degenerate = false;
    Plane macro = preprocess_channel(channels.macrophage, config, degenerate);
    Plane para = preprocess_channel(channels.parasite, config, degenerate);
    Plane cyto = preprocess_channel(channels.cytoplasm, config, degenerate);
    out.degenerate_stretch = degenerate;

    auto macro_regions = segment_nuclear_channel(macro, config);
    auto para_regions = segment_nuclear_channel(para, config);
    auto cyto_regions = segment_cytoplasm_channel(cyto, config);
    out.cytoplasm_regions = static_cast<int>(cyto_regions.size());

    // zoom estimation from the macrophage region areas
    std::string zoom_label;
    if (config.zoom == "5") {
        zoom_label = "zoom5";
    } else if (config.zoom == "10") {
        zoom_label = "zoom10";
    } else if (config.zoom == "auto") {
        std::vector<RegionArea> areas;
        for (const auto& r : macro_regions)
            areas.push_back({static_cast<long long>(r.pixels.size()), r.touches_border});
        zoom_label = areas.empty() ? "zoom5" : estimate_zoom(areas, config.params);
    } else {
        throw std::invalid_argument("config error: zoom must be auto, 5 or 10");
    }
    out.zoom_label = zoom_label;
    const ParameterSet& params = config.params.by_label(zoom_label);

    ClassifiedChannel macro_cls =
        classify_channel(macro_regions, RegionKind::macrophage_nuclear, params, config);
    ClassifiedChannel para_cls =
        classify_channel(para_regions, RegionKind::parasite_nuclear, params, config);
    out.macrophage_regions = std::move(macro_cls.results);
    out.parasite_regions = std::move(para_cls.results);
    out.macrophage_nuclei = std::move(macro_cls.nuclei);
    out.parasite_nuclei = std::move(para_cls.nuclei);

    double radius = config.assoc_radius > 0.0 ? config.assoc_radius
                                              : default_association_radius(params.u);
    CytoplasmMap cyto_map(cyto_regions, channels.width(), channels.height());
    out.association = associate(out.macrophage_nuclei, out.parasite_nuclei, cyto_map,
                                config.assoc_mode, radius);

    out.report = compute_stats(macro_cls.stats, para_cls.stats, out.association, image_path,
                               config.with_timestamp);
    out.report.lossy_input = channels.lossy_source;
    out.report.degenerate_stretch = degenerate;
    return out;
}

ImageAnalysis analyze_file(const std::string& path, const PipelineConfig& config) {
    ChannelSet channels = load_image(path);
    return analyze_channels(channels, config, path);
}

namespace {

const char* kind_name(RegionKind k) {
    switch (k) {
        case RegionKind::macrophage_nuclear: return "macrophage-nuclear";
        case RegionKind::parasite_nuclear: return "parasite-nuclear";
        case RegionKind::cytoplasm: return "cytoplasm";
        case RegionKind::noise: return "noise";
        case RegionKind::unset: return "unset";
    }
    return "unset";
}

nlohmann::ordered_json region_json(const RegionResult& r) {
    nlohmann::ordered_json j;
    j["id"] = r.id;
    j["kind"] = kind_name(r.kind);
    j["area"] = r.features.area;
    j["cx"] = r.features.cx;
    j["cy"] = r.features.cy;
    j["bbox"] = {r.features.bbox.min_x, r.features.bbox.min_y, r.features.bbox.max_x,
                 r.features.bbox.max_y};
    j["shape"] = (r.features.shape == ShapeClass::circular_or_elliptical) ? 1 : 0;
    j["touches_border"] = r.touches_border;
    j["unclassified"] = r.unclassified;
    if (r.estimate) {
        j["rule_vote"] = r.estimate->rule_vote;
        if (r.estimate->svm_vote)
            j["svm_vote"] = *r.estimate->svm_vote;
        j["final"] = r.estimate->final;
        j["agreed"] = r.estimate->agreed;
    }
    return j;
}

}  // namespace

std::string analysis_to_json(const ImageAnalysis& a) {
    nlohmann::ordered_json j;
    j["image"] = a.report.image_path;
    j["zoom"] = a.zoom_label;
    j["report"] = {{"macrophagic_regions", a.report.macro_regions},
                   {"uni_nucleic_macrophagic", a.report.macro_uni},
                   {"multi_nucleic_macrophagic", a.report.macro_multi},
                   {"parasitic_regions", a.report.para_regions},
                   {"uni_nucleic_parasitic", a.report.para_uni},
                   {"multi_nucleic_parasitic", a.report.para_multi},
                   {"total_macrophages", a.report.total_macrophages},
                   {"total_parasites", a.report.total_parasites},
                   {"sync_rate_macrophages", a.report.sync_rate_macrophages},
                   {"sync_rate_parasites", a.report.sync_rate_parasites},
                   {"infection_ratio", a.report.infection_ratio},
                   {"avg_parasites_per_infected", a.report.avg_parasites_per_infected},
                   {"avg_parasites_per_total", a.report.avg_parasites_per_total}};
    j["warnings"] = {{"zero_macrophages", a.report.zero_macrophages},
                     {"lossy_input", a.report.lossy_input},
                     {"degenerate_stretch", a.report.degenerate_stretch}};
    j["association"] = {{"mode", to_string(a.association.mode)},
                        {"pairs", a.association.pairs},
                        {"unassociated", a.association.unassociated},
                        {"infected_macrophages",
                         std::vector<int>(a.association.infected_macrophages.begin(),
                                          a.association.infected_macrophages.end())}};
    j["cytoplasm_regions"] = a.cytoplasm_regions;
    j["macrophage_regions"] = nlohmann::ordered_json::array();
    for (const auto& r : a.macrophage_regions)
        j["macrophage_regions"].push_back(region_json(r));
    j["parasite_regions"] = nlohmann::ordered_json::array();
    for (const auto& r : a.parasite_regions)
        j["parasite_regions"].push_back(region_json(r));
    return j.dump(2);
}

std::string regions_to_csv(const ImageAnalysis& a) {
    std::ostringstream out;
    out << "id,kind,area,cx,cy,min_x,min_y,max_x,max_y,shape,touches_border,rule_vote,svm_vote,"
           "final\n";
    auto dump = [&](const std::vector<RegionResult>& rs) {
        for (const auto& r : rs) {
            out << r.id << ',' << kind_name(r.kind) << ',' << r.features.area << ','
                << r.features.cx << ',' << r.features.cy << ',' << r.features.bbox.min_x << ','
                << r.features.bbox.min_y << ',' << r.features.bbox.max_x << ','
                << r.features.bbox.max_y << ','
                << ((r.features.shape == ShapeClass::circular_or_elliptical) ? 1 : 0) << ','
                << (r.touches_border ? 1 : 0) << ',';
            if (r.estimate) {
                out << r.estimate->rule_vote << ',';
                if (r.estimate->svm_vote)
                    out << *r.estimate->svm_vote;
                out << ',' << r.estimate->final;
            } else {
                out << ",,";
            }
            out << '\n';
        }
    };
    dump(a.macrophage_regions);
    dump(a.parasite_regions);
    return out.str();
}

AnnotationSet analysis_annotations(const ImageAnalysis& a) {
    AnnotationSet ann;
    for (const auto& n : a.macrophage_nuclei)
        ann.markers.push_back({n.cx, n.cy, OverlayMarker::macrophage});
    for (const auto& n : a.parasite_nuclei)
        ann.markers.push_back({n.cx, n.cy, OverlayMarker::parasite});

    auto find = [](const std::vector<Nucleus>& ns, int id) -> const Nucleus* {
        for (const auto& n : ns)
            if (n.id == id)
                return &n;
        return nullptr;
    };
    for (auto [pid, mid] : a.association.pairs) {
        const Nucleus* p = find(a.parasite_nuclei, pid);
        const Nucleus* m = find(a.macrophage_nuclei, mid);
        if (p && m)
            ann.links.push_back({p->cx, p->cy, m->cx, m->cy});
    }
    return ann;
}

}  // namespace lq
