#include <doctest.h>

#include <cstdio>
#include <set>

#include "leishquant/pipeline.hpp"
#include "leishquant/synth.hpp"

using namespace lq;

TEST_CASE("empty scene renders background only") {
    SceneSpec spec;
    spec.width = 64;
    spec.height = 64;
    SyntheticScene scene = generate(spec);
    CHECK(scene.truth.macrophages.empty());
    CHECK(scene.truth.parasites.empty());
    CHECK(scene.truth.associations.empty());
    for (const Plane* p :
         {&scene.channels.macrophage, &scene.channels.parasite, &scene.channels.cytoplasm}) {
        CHECK(p->width == 64);
        for (auto v : p->data)
            CHECK(static_cast<int>(v) == 20);
    }
}

TEST_CASE("single noiseless macrophage segments to one region of nominal area") {
    SceneSpec spec;
    spec.width = 128;
    spec.height = 128;
    spec.macrophage_clusters = {{1, 1}};
    spec.noise_sigma = 0.0;
    spec.seed = 9;
    SyntheticScene scene = generate(spec);
    REQUIRE(scene.truth.macrophages.size() == 1);

    PipelineConfig cfg;
    cfg.stretch_low = 0.0;
    cfg.stretch_high = 1.0;
    cfg.zoom = "5";
    cfg.with_timestamp = false;
    ImageAnalysis a = analyze_channels(scene.channels, cfg, "synthetic");
    CHECK(a.report.macro_regions == 1);
    CHECK(a.report.total_macrophages == 1);
    REQUIRE(a.macrophage_regions.size() == 1);
    long long area = a.macrophage_regions[0].features.area;
    CHECK(area >= 300 - 3 * 48);
    CHECK(area <= 300 + 3 * 48);
}

TEST_CASE("generation is deterministic for a fixed seed") {
    SceneSpec spec;
    spec.width = 192;
    spec.height = 192;
    spec.macrophage_clusters = {{1, 4}, {2, 1}};
    spec.infected_cells = 2;
    spec.free_parasites = 1;
    spec.noise_sigma = 4.0;
    spec.seed = 77;
    SyntheticScene a = generate(spec);
    SyntheticScene b = generate(spec);
    CHECK(a.channels.macrophage.data == b.channels.macrophage.data);
    CHECK(a.channels.parasite.data == b.channels.parasite.data);
    CHECK(a.channels.cytoplasm.data == b.channels.cytoplasm.data);
    REQUIRE(a.truth.macrophages.size() == b.truth.macrophages.size());
    for (std::size_t i = 0; i < a.truth.macrophages.size(); ++i) {
        CHECK(a.truth.macrophages[i].cx == b.truth.macrophages[i].cx);
        CHECK(a.truth.macrophages[i].cy == b.truth.macrophages[i].cy);
    }
    CHECK(a.truth.associations == b.truth.associations);

    spec.seed = 78;
    SyntheticScene c = generate(spec);
    CHECK(a.channels.macrophage.data != c.channels.macrophage.data);
}

TEST_CASE("ground truth stays inside the canvas and links each parasite once") {
    SceneSpec spec;
    spec.width = 512;
    spec.height = 512;
    spec.macrophage_clusters = {{1, 12}};
    spec.parasite_clusters = {{2, 2}};
    spec.infected_cells = 6;
    spec.parasites_per_cell = 2;
    spec.free_parasites = 3;
    spec.noise_sigma = 3.0;
    spec.seed = 123;
    SyntheticScene scene = generate(spec);

    CHECK(scene.truth.macrophages.size() == 12);
    // 6 cells x 2 + 3 free + 2 clusters x 2
    CHECK(scene.truth.parasites.size() == 19);
    REQUIRE(scene.truth.associations.size() == scene.truth.parasites.size());
    for (const auto& n : scene.truth.macrophages) {
        CHECK(n.cx >= 0);
        CHECK(n.cx < spec.width);
        CHECK(n.cy >= 0);
        CHECK(n.cy < spec.height);
    }
    int hosted = 0;
    for (int host : scene.truth.associations) {
        CHECK(host >= -1);
        CHECK(host < static_cast<int>(scene.truth.macrophages.size()));
        if (host >= 0)
            ++hosted;
    }
    CHECK(hosted == 12);  // 6 infected cells x 2 parasites
    CHECK(scene.truth.infected_count() == 6);
}

TEST_CASE("rendered nuclear channels are bimodal under moderate noise") {
    for (double noise : {0.0, 5.0, 10.0}) {
        SceneSpec spec;
        spec.width = 384;
        spec.height = 384;
        spec.macrophage_clusters = {{1, 8}};
        spec.infected_cells = 4;
        spec.noise_sigma = noise;
        spec.seed = 31;
        SyntheticScene scene = generate(spec);
        for (const Plane* p : {&scene.channels.macrophage, &scene.channels.parasite}) {
            PeakAnalysis peaks = count_peaks(histogram(*p), 31);
            CHECK(peaks.peaks.size() == 2);
        }
    }
}

TEST_CASE("scene spec and ground truth round trip through JSON") {
    SceneSpec spec;
    spec.width = 448;
    spec.height = 320;
    spec.zoom_label = "zoom10";
    spec.macrophage_clusters = {{1, 3}, {4, 2}};
    spec.infected_cells = 2;
    spec.noise_sigma = 2.5;
    spec.seed = 99;
    std::string path = "/tmp/lq_scene_spec.json";
    spec.save(path);
    SceneSpec loaded = SceneSpec::load(path);
    CHECK(loaded.width == 448);
    CHECK(loaded.height == 320);
    CHECK(loaded.zoom_label == "zoom10");
    REQUIRE(loaded.macrophage_clusters.size() == 2);
    CHECK(loaded.macrophage_clusters[1].size == 4);
    CHECK(loaded.infected_cells == 2);
    CHECK(loaded.noise_sigma == 2.5);
    CHECK(loaded.seed == 99);
    std::remove(path.c_str());

    SyntheticScene scene = generate(spec);
    std::string tpath = "/tmp/lq_truth.json";
    scene.truth.save(tpath);
    GroundTruth truth = GroundTruth::load(tpath);
    CHECK(truth.macrophages.size() == scene.truth.macrophages.size());
    CHECK(truth.associations == scene.truth.associations);
    std::remove(tpath.c_str());
}

TEST_CASE("make_cluster yields one connected multi-nucleus sample") {
    for (int k : {1, 2, 3, 5}) {
        ClusterSample cs = make_cluster(k, 300.0, 48.0, 0.15, 5.0, 17 + k);
        CHECK(static_cast<int>(cs.nuclei.size()) == k);
        CHECK(cs.pixels.size() > 100u * k);
        // pixel count tracks k nominal nucleus areas, loosely
        CHECK(static_cast<double>(cs.pixels.size()) < k * 300.0 * 1.8 + 200.0);
    }
    ClusterSample a = make_cluster(3, 300.0, 48.0, 0.15, 5.0, 4);
    ClusterSample b = make_cluster(3, 300.0, 48.0, 0.15, 5.0, 4);
    CHECK(a.pixels == b.pixels);
}
