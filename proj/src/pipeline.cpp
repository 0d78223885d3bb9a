#include "lineportrait/pipeline.hpp"

#include <chrono>
#include <fstream>
#include <sstream>

namespace lineportrait {

using nlohmann::json;

void PipelineConfig::validate() const
{
    canny.validate();
    if (!(trace.d > 0.0))
        throw std::invalid_argument("trace.d must be > 0");
    if (!(trace.simplify_tolerance >= 0.0))
        throw std::invalid_argument("trace.simplify_tolerance must be >= 0");
    if (colors < 1 || colors > 256)
        throw std::invalid_argument("colors must be in [1, 256]");
    shading.validate();
    if (!(page.width > 2 * page.margin && page.height > 2 * page.margin && page.margin >= 0.0))
        throw std::invalid_argument("page must be larger than twice its margin");
    if (!(page.pen_width > 0.0))
        throw std::invalid_argument("pen_width must be > 0");
}

void PipelineConfig::set_seed(std::uint64_t seed)
{
    trace.rng_seed = seed;
    shading.rng_seed = seed;
}

json to_json(const PipelineConfig& cfg)
{
    return {
        {"canny", {{"kernel_size", cfg.canny.kernel_size},
                   {"low_threshold", cfg.canny.low_threshold},
                   {"high_threshold", cfg.canny.high_threshold}}},
        {"trace", {{"d", cfg.trace.d},
                   {"simplify_tolerance", cfg.trace.simplify_tolerance},
                   {"rng_seed", cfg.trace.rng_seed}}},
        {"colors", cfg.colors},
        {"shading", {{"stroke_size", cfg.shading.stroke_size},
                     {"count_target", cfg.shading.count_target},
                     {"max_rejects", cfg.shading.max_rejects},
                     {"clearance", cfg.shading.clearance},
                     {"noise_scale", cfg.shading.noise_scale},
                     {"rng_seed", cfg.shading.rng_seed}}},
        {"page", {{"width", cfg.page.width},
                  {"height", cfg.page.height},
                  {"margin", cfg.page.margin},
                  {"pen_width", cfg.page.pen_width}}},
        {"top_down_order", cfg.top_down_order},
        {"model_path", cfg.model_path},
        {"output_dir", cfg.output_dir},
    };
}

namespace {

template <typename T>
void take(const json& obj, const char* key, T& field)
{
    if (obj.contains(key))
        field = obj.at(key).get<T>();
}

void reject_unknown(const json& obj, std::initializer_list<const char*> known, const std::string& where)
{
    for (const auto& [key, _] : obj.items()) {
        bool ok = false;
        for (const char* k : known)
            ok = ok || key == k;
        if (!ok)
            throw std::invalid_argument("unknown config key '" + where + key + "'");
    }
}

}  // namespace

PipelineConfig merge_config(const PipelineConfig& base, const json& j)
{
    PipelineConfig cfg = base;
    if (!j.is_object())
        throw std::invalid_argument("config must be a JSON object");
    reject_unknown(j, {"canny", "trace", "colors", "shading", "page", "top_down_order", "model_path", "output_dir"},
                   "");
    if (j.contains("canny")) {
        const auto& c = j["canny"];
        reject_unknown(c, {"kernel_size", "low_threshold", "high_threshold"}, "canny.");
        take(c, "kernel_size", cfg.canny.kernel_size);
        take(c, "low_threshold", cfg.canny.low_threshold);
        take(c, "high_threshold", cfg.canny.high_threshold);
    }
    if (j.contains("trace")) {
        const auto& t = j["trace"];
        reject_unknown(t, {"d", "simplify_tolerance", "rng_seed"}, "trace.");
        take(t, "d", cfg.trace.d);
        take(t, "simplify_tolerance", cfg.trace.simplify_tolerance);
        take(t, "rng_seed", cfg.trace.rng_seed);
    }
    take(j, "colors", cfg.colors);
    if (j.contains("shading")) {
        const auto& s = j["shading"];
        reject_unknown(s, {"stroke_size", "count_target", "max_rejects", "clearance", "noise_scale", "rng_seed"},
                       "shading.");
        take(s, "stroke_size", cfg.shading.stroke_size);
        take(s, "count_target", cfg.shading.count_target);
        take(s, "max_rejects", cfg.shading.max_rejects);
        take(s, "clearance", cfg.shading.clearance);
        take(s, "noise_scale", cfg.shading.noise_scale);
        take(s, "rng_seed", cfg.shading.rng_seed);
    }
    if (j.contains("page")) {
        const auto& p = j["page"];
        reject_unknown(p, {"width", "height", "margin", "pen_width"}, "page.");
        take(p, "width", cfg.page.width);
        take(p, "height", cfg.page.height);
        take(p, "margin", cfg.page.margin);
        take(p, "pen_width", cfg.page.pen_width);
    }
    take(j, "top_down_order", cfg.top_down_order);
    take(j, "model_path", cfg.model_path);
    take(j, "output_dir", cfg.output_dir);
    return cfg;
}

const char* stage_name(Stage s)
{
    switch (s) {
    case Stage::edges: return "edges";
    case Stage::vectorize: return "vectorize";
    case Stage::quantize: return "quantize";
    case Stage::shading: return "shading";
    case Stage::plan: return "plan";
    }
    return "unknown";
}

std::uint64_t fnv1a(std::span<const std::uint8_t> bytes)
{
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (auto b : bytes) {
        h ^= b;
        h *= 0x100000001b3ull;
    }
    return h;
}

namespace {

// Luma at or above which the darkest palette colour counts as the bare sheet.
constexpr double kBlankLuma = 0.98;

std::span<const std::uint8_t> as_bytes(const std::string& s)
{
    return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

std::string hex(std::uint64_t v)
{
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string shading_json(const std::vector<Path>& paths)
{
    json arr = json::array();
    for (const auto& p : paths) {
        json pts = json::array();
        for (const auto& v : p.points)
            pts.push_back({v.x, v.y});
        arr.push_back(std::move(pts));
    }
    return json{{"paths", std::move(arr)}, {"units", "mm"}}.dump();
}

}  // namespace

json make_meta(const PipelineConfig& cfg, const std::string& model_json, const RasterImage& img)
{
    std::vector<std::uint8_t> rgb;
    rgb.reserve(img.pixels.size() * 3);
    for (const auto& c : img.pixels)
        rgb.insert(rgb.end(), {c.r, c.g, c.b});
    return {
        {"config", to_json(cfg)},
        {"seeds", {{"trace", cfg.trace.rng_seed}, {"shading", cfg.shading.rng_seed}}},
        {"model_fnv1a", hex(fnv1a(as_bytes(model_json)))},
        {"image", {{"width", img.width}, {"height", img.height}, {"rgb_fnv1a", hex(fnv1a(rgb))}}},
    };
}

PipelineResult run_pipeline(const RasterImage& img, const PipelineConfig& cfg, const StrokeModel& model,
                            const PipelineObserver& observer)
{
    cfg.validate();
    PipelineResult r;
    auto emit = [&](const std::string& name, std::span<const std::uint8_t> bytes) {
        if (observer.on_artifact)
            observer.on_artifact(name, bytes);
    };

    auto run_stage = [&](Stage stage, auto&& body) {
        if (observer.on_stage)
            observer.on_stage(stage);
        const auto t0 = std::chrono::steady_clock::now();
        try {
            body();
        } catch (const StageError&) {
            throw;
        } catch (const std::exception& e) {
            throw StageError(stage, e.what());
        }
        const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
        r.stage_seconds.emplace_back(stage_name(stage), dt.count());
    };

    run_stage(Stage::edges, [&] {
        r.edges = canny(to_grayscale(img), cfg.canny);
        emit("edges.png", encode_png(r.edges));
    });

    run_stage(Stage::vectorize, [&] {
        const auto points = extract_points(r.edges);
        auto traced = trace_paths(points, cfg.trace);
        r.feature_paths.reserve(traced.paths.size());
        for (const auto& p : traced.paths)
            r.feature_paths.push_back(simplify(p, cfg.trace.simplify_tolerance));
        const PathsDocument doc{r.feature_paths, img.width, img.height, cfg.trace};
        emit("paths.json", as_bytes(to_json(doc)));
    });

    run_stage(Stage::quantize, [&] {
        r.palette = median_cut(img, cfg.colors);
        // A darkest colour as light as the sheet needs no ink: a blank photo gets no shading.
        if (luma(r.palette.colors[darkest_index(r.palette)]) / 255.0 >= kBlankLuma)
            r.mask = ShadeMask(img.width, img.height);
        else
            r.mask = darkest_mask(map_pixels(img, r.palette), r.palette);
        emit("mask.png", encode_png(r.mask));
    });

    // The image frame, not the content, is fitted to the page so that shading sizes and
    // clearances keep their millimetre meaning and blank inputs still produce a page.
    BoundingBox frame;
    frame.extend({0.0, 0.0});
    frame.extend({static_cast<double>(img.width), static_cast<double>(img.height)});
    const FitTransform fit = fit_to_page(frame, cfg.page);
    const PageTransform to_page{fit.scale, fit.offset};

    std::vector<Path> features_mm = r.feature_paths;
    for (auto& p : features_mm)
        for (auto& v : p.points)
            v = fit.apply(v);

    run_stage(Stage::shading, [&] {
        r.shading = fill_shading(r.mask, model.params, model.templates, features_mm, cfg.shading, to_page,
                                 &r.fill_stats);
        emit("shading.json", as_bytes(shading_json(r.shading)));
    });

    run_stage(Stage::plan, [&] {
        r.document.page_width = cfg.page.width;
        r.document.page_height = cfg.page.height;
        r.document.pen_width = cfg.page.pen_width;
        if (cfg.top_down_order) {
            r.document.paths = order_paths_top_down(features_mm, r.shading);
        } else {
            std::vector<Path> all = std::move(features_mm);
            all.insert(all.end(), r.shading.begin(), r.shading.end());
            r.document.paths = order_paths(all, {0.0, 0.0});
        }
        r.plan_stats = stats(r.document);
        r.svg = to_svg(r.document);
        emit("plan.svg", as_bytes(r.svg));
    });
    return r;
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

void write_file(const std::filesystem::path& path, const std::string& text)
{
    write_file(path, as_bytes(text));
}

std::string read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot read " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace lineportrait
