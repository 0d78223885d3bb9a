#include "doctest.h"

#include "lineportrait/pipeline.hpp"
#include "lineportrait/sketch_svg.hpp"
#include "support/oracles.hpp"
#include "support/test_model.hpp"

using namespace lineportrait;
using nlohmann::json;

TEST_CASE("all-white image yields an svg without polylines")
{
    PipelineConfig cfg;
    cfg.set_seed(1);
    const auto r = run_pipeline(RasterImage(64, 48), cfg, test_support::small_model());
    CHECK(r.edges.count() == 0);
    CHECK(r.feature_paths.empty());
    CHECK(r.shading.empty());
    CHECK(oracle::parse_svg_polylines(r.svg).polylines.empty());
}

TEST_CASE("fixture portrait: artifacts in stage order, page bounds and determinism")
{
    const auto img = load_image_file(LP_FIXTURE_DIR "/portrait_640x480.jpg");
    PipelineConfig cfg;
    cfg.set_seed(2024);
    std::vector<std::string> stages, artifacts;
    PipelineObserver obs;
    obs.on_stage = [&](Stage s) { stages.push_back(stage_name(s)); };
    obs.on_artifact = [&](const std::string& name, std::span<const std::uint8_t>) { artifacts.push_back(name); };
    const auto r = run_pipeline(img, cfg, test_support::small_model(), obs);

    CHECK(stages == std::vector<std::string>{"edges", "vectorize", "quantize", "shading", "plan"});
    CHECK(artifacts == std::vector<std::string>{"edges.png", "paths.json", "mask.png", "shading.json", "plan.svg"});
    CHECK(r.stage_seconds.size() == 5);
    CHECK(r.feature_paths.size() > 0);
    CHECK(r.shading.size() > 0);
    CHECK(r.document.paths.size() == r.feature_paths.size() + r.shading.size());
    CHECK(r.plan_stats.path_count == r.document.paths.size());
    for (const auto& p : r.document.paths)
        for (const auto& v : p.points) {
            CHECK(v.x >= cfg.page.margin - 1e-9);
            CHECK(v.x <= cfg.page.width - cfg.page.margin + 1e-9);
            CHECK(v.y >= cfg.page.margin - 1e-9);
            CHECK(v.y <= cfg.page.height - cfg.page.margin + 1e-9);
        }

    const auto again = run_pipeline(img, cfg, test_support::small_model());
    CHECK(again.svg == r.svg);

    PipelineConfig other = cfg;
    other.set_seed(7);
    CHECK(run_pipeline(img, other, test_support::small_model()).svg != r.svg);

    PipelineConfig human = cfg;
    human.top_down_order = true;
    const auto h = run_pipeline(img, human, test_support::small_model());
    CHECK(h.document.paths.size() == r.document.paths.size());
}

TEST_CASE("stage errors carry the stage name")
{
    PipelineConfig cfg;
    try {
        run_pipeline(RasterImage(3, 3), cfg, test_support::small_model());
        FAIL("expected a stage error");
    } catch (const StageError& e) {
        CHECK(e.stage() == Stage::edges);
        CHECK(std::string(e.what()).rfind("edges:", 0) == 0);
    }

    // Templates that do not match the model's vertex count fail in shading.
    StrokeModel broken = test_support::small_model();
    broken.templates = {resample_stroke(Path{{{0, 0}, {5, 5}}}, 8)};
    RasterImage dark(64, 48, {10, 10, 10});
    for (int x = 32; x < 64; ++x)
        for (int y = 0; y < 48; ++y)
            dark.at(x, y) = {240, 240, 240};
    try {
        run_pipeline(dark, cfg, broken);
        FAIL("expected a stage error");
    } catch (const StageError& e) {
        CHECK(e.stage() == Stage::shading);
    }
}

TEST_CASE("config json merge and validation")
{
    PipelineConfig base;
    const auto merged = merge_config(base, json::parse(R"({"colors": 6, "canny": {"high_threshold": 0.4},
                                                          "shading": {"count_target": 12, "rng_seed": 9},
                                                          "page": {"width": 210, "height": 297}})"));
    CHECK(merged.colors == 6);
    CHECK(merged.canny.high_threshold == 0.4);
    CHECK(merged.canny.low_threshold == base.canny.low_threshold);
    CHECK(merged.shading.count_target == 12);
    CHECK(merged.shading.rng_seed == 9);
    CHECK(merged.page.width == 210);

    const auto round = merge_config(PipelineConfig{}, to_json(merged));
    CHECK(to_json(round) == to_json(merged));

    CHECK_THROWS_AS(merge_config(base, json::parse(R"({"colour": 3})")), std::invalid_argument);
    CHECK_THROWS_AS(merge_config(base, json::parse(R"({"canny": {"sigma": 3}})")), std::invalid_argument);
    CHECK_THROWS(merge_config(base, json::parse(R"({"colors": "many"})")));

    PipelineConfig bad;
    bad.colors = 0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = {};
    bad.page.margin = 80;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("meta records every seed and input fingerprint")
{
    PipelineConfig cfg;
    cfg.set_seed(31337);
    const RasterImage img(4, 4, {1, 2, 3});
    const auto meta = make_meta(cfg, "{}", img);
    CHECK(meta["seeds"]["trace"] == 31337);
    CHECK(meta["seeds"]["shading"] == 31337);
    CHECK(meta["image"]["width"] == 4);
    CHECK(merge_config(PipelineConfig{}, meta["config"]).shading.rng_seed == 31337);
    CHECK(meta["model_fnv1a"].get<std::string>().size() == 16);

    const std::uint8_t a[] = {'a'};
    CHECK(fnv1a(std::span<const std::uint8_t>{}) == 0xcbf29ce484222325ull);
    CHECK(fnv1a(a) == 0xaf63dc4c8601ec8cull);
}
