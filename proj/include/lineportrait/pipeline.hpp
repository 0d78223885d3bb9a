#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "lineportrait/model_io.hpp"
#include "lineportrait/placement.hpp"
#include "lineportrait/planner.hpp"
#include "lineportrait/quantize.hpp"
#include "lineportrait/raster.hpp"
#include "lineportrait/vectorize.hpp"

namespace lineportrait {

struct PipelineConfig {
    CannyConfig canny;
    TraceConfig trace;
    int colors = 4;
    ShadingConfig shading;
    PageSpec page;
    bool top_down_order = false;
    std::string model_path;
    std::string output_dir;

    void validate() const;
    /// Uses one seed for every randomized stage.
    void set_seed(std::uint64_t seed);
};

nlohmann::json to_json(const PipelineConfig& cfg);
/// Applies the keys present in `j` on top of `base`; unknown keys are rejected.
PipelineConfig merge_config(const PipelineConfig& base, const nlohmann::json& j);

enum class Stage { edges, vectorize, quantize, shading, plan };

inline constexpr std::array<Stage, 5> kStages{Stage::edges, Stage::vectorize, Stage::quantize, Stage::shading,
                                              Stage::plan};

const char* stage_name(Stage s);

class StageError : public std::runtime_error {
public:
    StageError(Stage stage, const std::string& what)
        : std::runtime_error(std::string(stage_name(stage)) + ": " + what), stage_(stage)
    {
    }
    Stage stage() const { return stage_; }

private:
    Stage stage_;
};

struct PipelineObserver {
    std::function<void(Stage)> on_stage;
    std::function<void(const std::string& name, std::span<const std::uint8_t> bytes)> on_artifact;
};

struct PipelineResult {
    EdgeMap edges;
    std::vector<Path> feature_paths;  // simplified, image pixels
    Palette palette;
    ShadeMask mask;
    std::vector<Path> shading;        // page mm
    FillStats fill_stats;
    PlotDocument document;
    PlanStats plan_stats;
    std::string svg;
    std::vector<std::pair<std::string, double>> stage_seconds;
};

/// Runs every stage in order. Artifacts are reported to the observer as soon as the stage
/// that produces them finishes: edges.png, paths.json, mask.png, shading.json, plan.svg.
PipelineResult run_pipeline(const RasterImage& img, const PipelineConfig& cfg, const StrokeModel& model,
                            const PipelineObserver& observer = {});

/// Everything needed to rerun a job bit-exactly.
nlohmann::json make_meta(const PipelineConfig& cfg, const std::string& model_json, const RasterImage& img);

/// 64-bit FNV-1a, used to fingerprint inputs in meta.json.
std::uint64_t fnv1a(std::span<const std::uint8_t> bytes);

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_file(const std::filesystem::path& path, const std::string& text);
std::string read_file(const std::filesystem::path& path);

}  // namespace lineportrait
