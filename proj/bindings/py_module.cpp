// Python bindings for the batch analysis library. Thin layer: numpy arrays
// in, JSON strings / plain scalars out; the Python package parses the JSON.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdio>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "leishquant/mixture.hpp"
#include "leishquant/pipeline.hpp"
#include "leishquant/preprocess.hpp"
#include "leishquant/report.hpp"
#include "leishquant/segment.hpp"
#include "leishquant/synth.hpp"

namespace py = pybind11;
using namespace lq;

namespace {

Plane plane_from_array(const py::array_t<std::uint8_t, py::array::c_style>& arr) {
    if (arr.ndim() != 2)
        throw std::invalid_argument("expected a 2-D uint8 array");
    Plane p(static_cast<int>(arr.shape(1)), static_cast<int>(arr.shape(0)));
    std::memcpy(p.data.data(), arr.data(), p.data.size());
    return p;
}

py::array_t<std::uint8_t> array_from_plane(const Plane& p) {
    py::array_t<std::uint8_t> arr({p.height, p.width});
    std::memcpy(arr.mutable_data(), p.data.data(), p.data.size());
    return arr;
}

PipelineConfig config_from_json(const std::string& text) {
    PipelineConfig cfg;
    if (text.empty())
        return cfg;
    nlohmann::json j = nlohmann::json::parse(text);
    if (j.contains("stretch_low"))
        cfg.stretch_low = j["stretch_low"].get<double>();
    if (j.contains("stretch_high"))
        cfg.stretch_high = j["stretch_high"].get<double>();
    if (j.contains("equalize"))
        cfg.equalize = j["equalize"].get<bool>();
    if (j.contains("blur_sigma")) {
        cfg.blur = true;
        cfg.blur_sigma = j["blur_sigma"].get<double>();
    }
    if (j.contains("blur_kernel"))
        cfg.blur_kernel = j["blur_kernel"].get<int>();
    if (j.contains("peak_window"))
        cfg.peak_window = j["peak_window"].get<int>();
    if (j.contains("valley_halfwidth"))
        cfg.valley_halfwidth = j["valley_halfwidth"].get<int>();
    if (j.contains("connectivity"))
        cfg.connectivity = j["connectivity"].get<int>();
    if (j.contains("zoom"))
        cfg.zoom = j["zoom"].get<std::string>();
    if (j.contains("params"))
        cfg.params = ParameterSets::load(j["params"].get<std::string>());
    if (j.contains("model"))
        cfg.model = SvmModel::load(j["model"].get<std::string>());
    if (j.contains("seed"))
        cfg.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("assoc_mode"))
        cfg.assoc_mode = association_mode_from_string(j["assoc_mode"].get<std::string>());
    if (j.contains("assoc_radius"))
        cfg.assoc_radius = j["assoc_radius"].get<double>();
    if (j.contains("timestamp"))
        cfg.with_timestamp = j["timestamp"].get<bool>();
    return cfg;
}

py::dict analysis_outputs(const ImageAnalysis& a) {
    py::dict out;
    out["analysis"] = analysis_to_json(a);
    out["report"] = render_report(a.report);
    out["csv"] = regions_to_csv(a);
    return out;
}

}  // namespace

PYBIND11_MODULE(_leishquant, m) {
    m.doc() = "infection quantification for multi-channel fluorescence microscopy";

    m.def(
        "analyze",
        [](const py::array_t<std::uint8_t, py::array::c_style>& macrophage,
           const py::array_t<std::uint8_t, py::array::c_style>& parasite,
           const py::array_t<std::uint8_t, py::array::c_style>& cytoplasm,
           const std::string& config_json, const std::string& name) {
            ChannelSet channels;
            channels.macrophage = plane_from_array(macrophage);
            channels.parasite = plane_from_array(parasite);
            channels.cytoplasm = plane_from_array(cytoplasm);
            channels.validate();
            return analysis_outputs(
                analyze_channels(channels, config_from_json(config_json), name));
        },
        py::arg("macrophage"), py::arg("parasite"), py::arg("cytoplasm"),
        py::arg("config_json") = "", py::arg("name") = "array",
        "Run the full pipeline on three uint8 channel arrays.");

    m.def(
        "analyze_file",
        [](const std::string& path, const std::string& config_json) {
            return analysis_outputs(analyze_file(path, config_from_json(config_json)));
        },
        py::arg("path"), py::arg("config_json") = "",
        "Run the full pipeline on an image file or channel manifest.");

    m.def(
        "synthesize",
        [](const std::string& spec_json) {
            nlohmann::json j = nlohmann::json::parse(spec_json);
            std::string tmp = "/tmp/lq_py_spec.json";
            {
                std::ofstream out(tmp);
                out << j.dump();
            }
            SceneSpec spec = SceneSpec::load(tmp);
            std::remove(tmp.c_str());
            SyntheticScene scene = generate(spec);
            std::string tpath = "/tmp/lq_py_truth.json";
            scene.truth.save(tpath);
            std::ifstream in(tpath);
            std::string truth((std::istreambuf_iterator<char>(in)),
                              std::istreambuf_iterator<char>());
            std::remove(tpath.c_str());
            py::dict out;
            out["macrophage"] = array_from_plane(scene.channels.macrophage);
            out["parasite"] = array_from_plane(scene.channels.parasite);
            out["cytoplasm"] = array_from_plane(scene.channels.cytoplasm);
            out["truth"] = truth;
            return out;
        },
        py::arg("spec_json"),
        "Generate a synthetic benchmark scene from a JSON scene spec.");

    m.def(
        "contrast_stretch",
        [](const py::array_t<std::uint8_t, py::array::c_style>& arr, double low, double high) {
            return array_from_plane(contrast_stretch(plane_from_array(arr), low, high));
        },
        py::arg("image"), py::arg("low") = 0.05, py::arg("high") = 0.95);

    m.def(
        "otsu_threshold",
        [](const py::array_t<std::uint8_t, py::array::c_style>& arr) {
            return otsu_threshold(histogram(plane_from_array(arr)));
        },
        py::arg("image"));

    m.def(
        "label_regions",
        [](const py::array_t<std::uint8_t, py::array::c_style>& arr, int connectivity) {
            Plane p = plane_from_array(arr);
            BinaryMask mask(p.width, p.height);
            for (int y = 0; y < p.height; ++y)
                for (int x = 0; x < p.width; ++x)
                    mask.set(x, y, p.at(x, y) != 0);
            auto regions = label_regions(mask, connectivity);
            py::array_t<std::int32_t> labels({p.height, p.width});
            std::fill(labels.mutable_data(), labels.mutable_data() + p.data.size(), 0);
            auto view = labels.mutable_unchecked<2>();
            for (const Region& r : regions)
                for (auto [x, y] : r.pixels)
                    view(y, x) = r.id;
            return labels;
        },
        py::arg("mask"), py::arg("connectivity") = 4,
        "Label a binary mask; returns an int32 map, 0 = background.");

    m.def(
        "em_fit",
        [](const py::array_t<double, py::array::c_style>& points, int k, std::uint64_t seed) {
            if (points.ndim() != 2 || points.shape(1) != 2)
                throw std::invalid_argument("expected an (n, 2) float array");
            PointCloud cloud(points.shape(0));
            auto view = points.unchecked<2>();
            for (py::ssize_t i = 0; i < points.shape(0); ++i)
                cloud[i] = {view(i, 0), view(i, 1)};
            MixtureModel m2 = em_fit(cloud, k, {}, seed);
            py::list comps;
            for (const auto& c : m2.components) {
                py::dict d;
                d["weight"] = c.weight;
                d["mean"] = py::make_tuple(c.mean_x, c.mean_y);
                d["cov"] = py::make_tuple(c.cov_xx, c.cov_xy, c.cov_yy);
                comps.append(d);
            }
            py::dict out;
            out["components"] = comps;
            out["log_likelihood"] = m2.log_likelihood;
            out["converged"] = m2.converged;
            return out;
        },
        py::arg("points"), py::arg("k"), py::arg("seed") = 0);

    m.def(
        "evaluate",
        [](double algorithm_value, const std::vector<double>& annotations) {
            EvalResult r = evaluate(algorithm_value, annotations);
            py::dict out;
            out["mean"] = r.mean;
            out["stddev"] = r.stddev;
            out["lower"] = r.lower;
            out["upper"] = r.upper;
            out["error"] = r.algorithm_error;
            out["within_bounds"] = r.within_bounds;
            return out;
        },
        py::arg("algorithm_value"), py::arg("annotations"));

    m.def("segmentation_accuracy", &segmentation_accuracy, py::arg("detected_correct"),
          py::arg("ground_truth_total"));
}
