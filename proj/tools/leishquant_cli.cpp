// leishquant: batch quantification of Leishmania infection in fluorescence
// microscopy images. Subcommands: analyze, train, synth, eval, features.
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "leishquant/pipeline.hpp"
#include "leishquant/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum class LogLevel { quiet, normal, verbose };

struct CliOptions {
    lq::PipelineConfig pipe;
    std::string blur_arg;       // "<sigma>,<ksize>"
    std::string params_path;
    std::string model_path;
    std::string assoc_radius_arg = "auto";
    std::string assoc_mode_arg = "both";
    std::string out_dir;
    int jobs = 1;
    bool overlay = false;
    bool sidecar_json = false;
    bool label_map = false;
    bool no_timestamp = false;
    LogLevel level = LogLevel::normal;
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write " + path);
    out << text;
}

// Pre-parse --config so its values become defaults; explicit flags then win.
void apply_config_file(const std::string& path, CliOptions& o) {
    json j = json::parse(read_file(path));
    auto get = [&](const char* key, auto& dst) {
        if (j.contains(key))
            j.at(key).get_to(dst);
    };
    get("stretch-low", o.pipe.stretch_low);
    get("stretch-high", o.pipe.stretch_high);
    get("equalize", o.pipe.equalize);
    get("blur", o.blur_arg);
    get("peak-window", o.pipe.peak_window);
    get("valley-halfwidth", o.pipe.valley_halfwidth);
    get("connectivity", o.pipe.connectivity);
    get("params", o.params_path);
    get("zoom", o.pipe.zoom);
    get("model", o.model_path);
    get("em-max-iter", o.pipe.em.max_iter);
    get("em-min-std", o.pipe.em.min_std);
    get("seed", o.pipe.seed);
    get("assoc-mode", o.assoc_mode_arg);
    get("assoc-radius", o.assoc_radius_arg);
    get("jobs", o.jobs);
    get("out", o.out_dir);
    get("overlay", o.overlay);
    get("json", o.sidecar_json);
    get("no-timestamp", o.no_timestamp);
}

void finalize_options(CliOptions& o) {
    if (!o.blur_arg.empty()) {
        double sigma = 0.0;
        int ksize = 3;
        if (std::sscanf(o.blur_arg.c_str(), "%lf,%d", &sigma, &ksize) < 1)
            throw CLI::ValidationError("--blur", "expected <sigma>[,<ksize>]");
        o.pipe.blur = true;
        o.pipe.blur_sigma = sigma;
        o.pipe.blur_kernel = ksize;
    }
    if (!o.params_path.empty())
        o.pipe.params = lq::ParameterSets::load(o.params_path);
    if (!o.model_path.empty())
        o.pipe.model = lq::SvmModel::load(o.model_path);
    o.pipe.assoc_mode = lq::association_mode_from_string(o.assoc_mode_arg);
    if (o.assoc_radius_arg == "auto")
        o.pipe.assoc_radius = 0.0;
    else
        o.pipe.assoc_radius = std::stod(o.assoc_radius_arg);
    o.pipe.with_timestamp = !o.no_timestamp;
    if (o.jobs < 1)
        o.jobs = 1;
}

fs::path output_base(const std::string& image, const std::string& out_dir) {
    fs::path p(image);
    fs::path dir = out_dir.empty() ? p.parent_path() : fs::path(out_dir);
    return dir / p.stem();
}

void add_pipeline_flags(CLI::App* cmd, CliOptions& o) {
    cmd->add_option("--stretch-low", o.pipe.stretch_low, "lower stretch percentile");
    cmd->add_option("--stretch-high", o.pipe.stretch_high, "upper stretch percentile");
    cmd->add_flag("--equalize", o.pipe.equalize, "histogram equalization after the stretch");
    cmd->add_option("--blur", o.blur_arg, "gaussian blur <sigma>[,<ksize>]");
    cmd->add_option("--peak-window", o.pipe.peak_window, "histogram smoothing window");
    cmd->add_option("--valley-halfwidth", o.pipe.valley_halfwidth,
                    "multi-level threshold search half-width");
    cmd->add_option("--connectivity", o.pipe.connectivity, "labeling connectivity")
        ->check(CLI::IsMember({4, 8}));
    cmd->add_option("--params", o.params_path, "parameter set file (JSON)");
    cmd->add_option("--zoom", o.pipe.zoom, "zoom level")
        ->check(CLI::IsMember({"auto", "5", "10"}));
    cmd->add_option("--model", o.model_path, "trained classifier model (JSON)");
    cmd->add_option("--em-max-iter", o.pipe.em.max_iter, "EM iteration cap");
    cmd->add_option("--em-min-std", o.pipe.em.min_std, "EM covariance floor");
    cmd->add_option("--seed", o.pipe.seed, "random seed");
    cmd->add_option("--assoc-mode", o.assoc_mode_arg, "association mode")
        ->check(CLI::IsMember({"cytoplasm", "radius", "both"}));
    cmd->add_option("--assoc-radius", o.assoc_radius_arg, "association radius in px, or auto");
}

struct ImageOutcome {
    bool ok = false;
    std::string error;
    std::string report_text;
    std::string sidecar;
    std::string log;
    lq::ImageAnalysis analysis;
    lq::ChannelSet channels;
};

ImageOutcome process_image(const std::string& image, const CliOptions& o) {
    ImageOutcome out;
    try {
        out.channels = lq::load_image(image);
        out.analysis = lq::analyze_channels(out.channels, o.pipe, image);
        out.report_text = lq::render_report(out.analysis.report);
        if (o.level == LogLevel::verbose)
            out.report_text += "\n" + lq::regions_to_csv(out.analysis);
        if (o.sidecar_json)
            out.sidecar = lq::analysis_to_json(out.analysis);
        out.ok = true;
    } catch (const std::exception& e) {
        out.error = e.what();
    }
    return out;
}

void write_outputs(const std::string& image, const ImageOutcome& r, const CliOptions& o) {
    fs::path base = output_base(image, o.out_dir);
    write_file(base.string() + ".report.txt", r.report_text);
    if (o.sidecar_json)
        write_file(base.string() + ".analysis.json", r.sidecar);
    if (o.overlay) {
        lq::RgbImage img =
            lq::render_overlay(r.channels, lq::analysis_annotations(r.analysis));
        lq::save_png(img, base.string() + ".overlay.png");
    }
}

int run_analyze(const std::vector<std::string>& images, CliOptions& o) {
    finalize_options(o);
    if (!o.out_dir.empty())
        fs::create_directories(o.out_dir);

    std::vector<ImageOutcome> results(images.size());
    if (o.jobs <= 1 || images.size() <= 1) {
        for (std::size_t i = 0; i < images.size(); ++i)
            results[i] = process_image(images[i], o);
    } else {
        std::atomic<std::size_t> next{0};
        auto worker = [&] {
            for (std::size_t i = next.fetch_add(1); i < images.size(); i = next.fetch_add(1))
                results[i] = process_image(images[i], o);
        };
        std::vector<std::thread> pool;
        int n = std::min<std::size_t>(o.jobs, images.size());
        for (int t = 0; t < n; ++t)
            pool.emplace_back(worker);
        for (auto& t : pool)
            t.join();
    }

    // Writes and logs happen serially, in input order, so that parallel runs
    // are indistinguishable from serial ones.
    int failures = 0;
    for (std::size_t i = 0; i < images.size(); ++i) {
        const auto& r = results[i];
        if (!r.ok) {
            ++failures;
            std::cerr << "error: " << images[i] << ": " << r.error << "\n";
            continue;
        }
        try {
            write_outputs(images[i], r, o);
            if (o.level != LogLevel::quiet)
                std::cout << images[i] << ": " << r.analysis.report.total_macrophages
                          << " macrophages, " << r.analysis.report.total_parasites
                          << " parasites (" << r.analysis.zoom_label << ")\n";
        } catch (const std::exception& e) {
            ++failures;
            std::cerr << "error: " << images[i] << ": " << e.what() << "\n";
        }
    }
    return failures == 0 ? 0 : 1;
}

int run_features(const std::vector<std::string>& images, CliOptions& o) {
    finalize_options(o);
    int failures = 0;
    for (const auto& image : images) {
        ImageOutcome r = process_image(image, o);
        if (!r.ok) {
            ++failures;
            std::cerr << "error: " << image << ": " << r.error << "\n";
            continue;
        }
        std::string csv = lq::regions_to_csv(r.analysis);
        if (o.out_dir.empty()) {
            std::cout << csv;
        } else {
            fs::create_directories(o.out_dir);
            write_file((output_base(image, o.out_dir).string() + ".features.csv"), csv);
        }
    }
    return failures == 0 ? 0 : 1;
}

int run_synth(const std::string& spec_path, const std::string& out_dir) {
    lq::SceneSpec spec = lq::SceneSpec::load(spec_path);
    lq::SyntheticScene scene = lq::generate(spec);

    fs::path dir = out_dir.empty() ? fs::path(spec_path).parent_path() : fs::path(out_dir);
    fs::create_directories(dir.empty() ? "." : dir);
    std::string stem = fs::path(spec_path).stem().string();
    fs::path base = dir / stem;

    lq::save_png(scene.channels.macrophage, base.string() + "_macrophage.png");
    lq::save_png(scene.channels.parasite, base.string() + "_parasite.png");
    lq::save_png(scene.channels.cytoplasm, base.string() + "_cytoplasm.png");

    json manifest;
    manifest["macrophage"] = stem + "_macrophage.png";
    manifest["parasite"] = stem + "_parasite.png";
    manifest["cytoplasm"] = stem + "_cytoplasm.png";
    write_file(base.string() + "_manifest.json", manifest.dump(2) + "\n");
    scene.truth.save(base.string() + "_truth.json");

    std::cout << base.string() + "_manifest.json" << "\n";
    return 0;
}

struct TrainOptions {
    std::string corpus_path;  // CSV: label,f1..f28 per row; empty = synthetic corpus
    int classes = 5;
    int per_class = 40;
    double area_mean = 300.0;
    double area_sigma = 48.0;
    double noise_sigma = 5.0;
    std::uint64_t seed = 1;
    std::string kernel = "rbf";
    double gamma = 0.05;
    int degree = 3;
    double coef0 = 1.0;
    double C = 10.0;
    std::string out = "model.json";
};

void build_synth_corpus(const TrainOptions& t, std::vector<std::vector<double>>& samples,
                        std::vector<int>& labels) {
    // round-robin over classes so the sequential holdout split sees all of them
    for (int i = 0; i < t.per_class; ++i) {
        for (int k = 1; k <= t.classes; ++k) {
            bool made = false;
            for (int attempt = 0; attempt < 20; ++attempt) {
                std::uint64_t seed = t.seed + 7919ULL * k + 101ULL * i + attempt;
                lq::ClusterSample cs =
                    lq::make_cluster(k, t.area_mean, t.area_sigma, 0.15, t.noise_sigma, seed);
                if (cs.pixels.size() < 10)
                    continue;
                lq::Region region;
                region.id = 1;
                region.pixels = cs.pixels;
                lq::LLFeatures f = lq::ll_feature_vector(region, {}, seed);
                samples.push_back(f.to_vector());
                labels.push_back(k);
                made = true;
                break;
            }
            if (!made)
                throw std::runtime_error("training error: could not synthesize class " +
                                         std::to_string(k));
        }
    }
}

void load_csv_corpus(const std::string& path, std::vector<std::vector<double>>& samples,
                     std::vector<int>& labels) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open " + path);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || !(std::isdigit(line[0]) || line[0] == '-'))
            continue;  // header or blank
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ','))
            row.push_back(std::stod(cell));
        if (row.size() < 2)
            throw std::runtime_error("training error: malformed corpus row");
        labels.push_back(static_cast<int>(row[0]));
        samples.push_back(std::vector<double>(row.begin() + 1, row.end()));
    }
}

int run_train(const TrainOptions& t) {
    std::vector<std::vector<double>> samples;
    std::vector<int> labels;
    if (t.corpus_path.empty())
        build_synth_corpus(t, samples, labels);
    else
        load_csv_corpus(t.corpus_path, samples, labels);

    std::set<int> distinct(labels.begin(), labels.end());
    if (distinct.size() < 2)
        throw std::runtime_error("training error: corpus yields fewer than 2 classes");

    lq::KernelSpec kernel;
    if (t.kernel == "linear")
        kernel.type = lq::KernelType::linear;
    else if (t.kernel == "polynomial")
        kernel.type = lq::KernelType::polynomial;
    else if (t.kernel == "rbf")
        kernel.type = lq::KernelType::rbf;
    else if (t.kernel == "tanh")
        kernel.type = lq::KernelType::tanh_sigmoid;
    else
        throw CLI::ValidationError("--kernel", "expected linear|polynomial|rbf|tanh");
    kernel.gamma = t.gamma;
    kernel.degree = t.degree;
    kernel.coef0 = t.coef0;
    lq::SmoOptions smo;
    smo.C = t.C;

    // sequential 66% split for the holdout figure; the shipped model uses all data
    std::size_t cut = (samples.size() * 2) / 3;
    std::vector<std::vector<double>> head(samples.begin(), samples.begin() + cut);
    std::vector<int> head_labels(labels.begin(), labels.begin() + cut);
    lq::SvmModel holdout_model = lq::train_svm(head, head_labels, kernel, smo);
    int hits = 0;
    for (std::size_t i = cut; i < samples.size(); ++i)
        if (holdout_model.predict(samples[i]) == labels[i])
            ++hits;
    double holdout_acc =
        samples.size() > cut ? 100.0 * hits / static_cast<double>(samples.size() - cut) : 0.0;

    lq::SvmModel model = lq::train_svm(samples, labels, kernel, smo);
    model.save(t.out);

    std::cout << "classes:";
    for (int c : distinct) {
        int n = static_cast<int>(std::count(labels.begin(), labels.end(), c));
        std::cout << " " << c << "(x" << n << ")";
    }
    std::cout << "\nholdout accuracy (66% sequential split): ";
    std::printf("%.2f%%\n", holdout_acc);
    std::cout << "model written to " << t.out << "\n";
    return 0;
}

struct EvalOptions {
    std::vector<std::string> sidecars;
    std::string annotations_path;
};

// annotations file: {"<image stem>": {"macrophages": [..], "parasites": [..]}, ...}
int run_eval(const EvalOptions& e) {
    json ann = json::parse(read_file(e.annotations_path));
    if (ann.empty()) {
        std::cerr << "warning: empty annotation file\n";
        return 0;
    }
    std::printf("%-24s %-12s %10s %10s %10s %10s %10s %8s\n", "image", "metric", "alg", "mean",
                "stddev", "lower", "upper", "within");
    int skipped = 0;
    for (const auto& path : e.sidecars) {
        json side = json::parse(read_file(path));
        std::string stem = fs::path(side.value("image", path)).stem().string();
        if (!ann.contains(stem)) {
            std::cerr << "warning: no annotation for " << stem << ", skipped\n";
            ++skipped;
            continue;
        }
        const json& a = ann.at(stem);
        auto row = [&](const char* metric, double alg, const json& values) {
            std::vector<double> xs = values.get<std::vector<double>>();
            lq::EvalResult r = lq::evaluate(alg, xs);
            std::printf("%-24s %-12s %10.1f %10.1f %10.1f %10.1f %10.1f %8s\n", stem.c_str(),
                        metric, r.algorithm_value, r.mean, r.stddev, r.lower, r.upper,
                        r.within_bounds ? "yes" : "no");
        };
        const json& rep = side.at("report");
        if (a.contains("macrophages"))
            row("macrophages", rep.at("total_macrophages").get<double>(), a.at("macrophages"));
        if (a.contains("parasites"))
            row("parasites", rep.at("total_parasites").get<double>(), a.at("parasites"));
        if (a.contains("infected"))
            row("infected",
                side.at("association").at("infected_macrophages").size() * 1.0,
                a.at("infected"));
    }
    return skipped == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Leishmania infection quantification for fluorescence microscopy images"};
    app.require_subcommand(1);

    CliOptions opts;
    // --config values act as defaults; explicitly passed flags override them
    for (int i = 1; i < argc - 1; ++i) {
        if (std::string(argv[i]) == "--config") {
            try {
                apply_config_file(argv[i + 1], opts);
            } catch (const std::exception& e) {
                std::cerr << "config error: " << e.what() << "\n";
                return 2;
            }
        }
    }
    std::string config_path;
    std::vector<std::string> images;

    CLI::App* analyze = app.add_subcommand("analyze", "process images and write reports");
    analyze->add_option("images", images, "input images or channel manifests")->required();
    analyze->add_option("--config", config_path, "JSON config file; flags override");
    add_pipeline_flags(analyze, opts);
    analyze->add_option("--jobs", opts.jobs, "parallel image workers");
    analyze->add_option("--out", opts.out_dir, "output directory (default: image directory)");
    analyze->add_flag("--overlay", opts.overlay, "write annotated overlay PNGs");
    analyze->add_flag("--json", opts.sidecar_json, "write JSON sidecars");
    analyze->add_flag("--no-timestamp", opts.no_timestamp, "omit the report timestamp line");
    analyze->add_flag_callback("--quiet", [&] { opts.level = LogLevel::quiet; });
    analyze->add_flag_callback(
        "--verbose", [&] { opts.level = LogLevel::verbose; },
        "append the per-region CSV to each report");

    CLI::App* features = app.add_subcommand("features", "dump per-region feature CSV");
    features->add_option("images", images, "input images or channel manifests")->required();
    features->add_option("--config", config_path, "JSON config file; flags override");
    add_pipeline_flags(features, opts);
    features->add_option("--out", opts.out_dir, "output directory (default: stdout)");

    std::string synth_spec, synth_out;
    CLI::App* synth = app.add_subcommand("synth", "generate a synthetic benchmark scene");
    synth->add_option("--spec", synth_spec, "scene spec (JSON)")->required();
    synth->add_option("--out", synth_out, "output directory (default: spec directory)");

    TrainOptions topt;
    CLI::App* train = app.add_subcommand("train", "train the nuclei-count classifier");
    train->add_option("--corpus", topt.corpus_path,
                      "labeled feature CSV (label,f1..f28); omit for a synthetic corpus");
    train->add_option("--classes", topt.classes, "synthetic corpus class count");
    train->add_option("--per-class", topt.per_class, "regions per class");
    train->add_option("--area-mean", topt.area_mean, "nucleus area mean");
    train->add_option("--area-sigma", topt.area_sigma, "nucleus area deviation");
    train->add_option("--noise-sigma", topt.noise_sigma, "additive noise deviation");
    train->add_option("--seed", topt.seed, "random seed");
    train->add_option("--kernel", topt.kernel, "linear|polynomial|rbf|tanh");
    train->add_option("--gamma", topt.gamma, "kernel scale");
    train->add_option("--degree", topt.degree, "polynomial degree");
    train->add_option("--coef0", topt.coef0, "kernel offset");
    train->add_option("--C", topt.C, "soft-margin penalty");
    train->add_option("--out", topt.out, "model output path");

    EvalOptions eopt;
    CLI::App* eval = app.add_subcommand("eval", "compare sidecars against expert annotations");
    eval->add_option("sidecars", eopt.sidecars, "JSON sidecars from analyze --json")->required();
    eval->add_option("--annotations", eopt.annotations_path, "annotation JSON")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*analyze)
            return run_analyze(images, opts);
        if (*features)
            return run_features(images, opts);
        if (*synth)
            return run_synth(synth_spec, synth_out);
        if (*train)
            return run_train(topt);
        if (*eval)
            return run_eval(eopt);
    } catch (const CLI::ValidationError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
