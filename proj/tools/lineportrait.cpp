// Command-line front end: train a stroke model, generate drawings, preview edges,
// plan existing paths and run the HTTP service.

#include <chrono>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <regex>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "lineportrait/model_io.hpp"
#include "lineportrait/pipeline.hpp"
#include "lineportrait/service.hpp"
#include "lineportrait/sketch_svg.hpp"

using namespace lineportrait;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

// Usage-class failures (bad flags, missing inputs) exit with 2.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::uint64_t time_seed()
{
    return static_cast<std::uint64_t>(std::chrono::system_clock::now().time_since_epoch().count());
}

void require_file(const std::string& path, const char* what)
{
    if (!fs::is_regular_file(path))
        throw UsageError(std::string(what) + " not found: " + path);
}

PageSpec parse_page(const std::string& text, PageSpec page)
{
    if (text == "A3") {
        page.width = 297.0, page.height = 420.0;
    } else if (text == "A4") {
        page.width = 210.0, page.height = 297.0;
    } else if (text == "A5") {
        page.width = 148.0, page.height = 210.0;
    } else {
        static const std::regex re(R"(([0-9]+(?:\.[0-9]+)?)x([0-9]+(?:\.[0-9]+)?))");
        std::smatch m;
        if (!std::regex_match(text, m, re))
            throw UsageError("--page expects A3, A4, A5 or WIDTHxHEIGHT in mm, got '" + text + "'");
        page.width = std::stod(m[1]);
        page.height = std::stod(m[2]);
    }
    return page;
}

void print_json(const json& j)
{
    std::cout << j.dump(2) << '\n';
}

struct TrainArgs {
    std::string sketch, out;
    int epochs = TrainConfig{}.epochs;
    int n = ModelDims{}.n;
    int latent = ModelDims{}.latent;
    double beta = TrainConfig{}.beta;
    std::optional<std::uint64_t> seed;
    bool quiet = false;
};

int run_train(const TrainArgs& a)
{
    require_file(a.sketch, "sketch");
    std::vector<StrokeGraph> strokes;
    std::size_t skipped = 0;
    for (const auto& p : load_sketch_svg_file(a.sketch)) {
        try {
            strokes.push_back(resample_stroke(p, a.n));
        } catch (const GeometryError&) {
            ++skipped;  // zero-length stroke
        }
    }
    if (strokes.empty())
        throw std::runtime_error("sketch contains no drawable strokes: " + a.sketch);

    TrainConfig cfg;
    cfg.epochs = a.epochs;
    cfg.beta = a.beta;
    cfg.rng_seed = a.seed.value_or(time_seed());
    cfg.dims.n = a.n;
    cfg.dims.latent = a.latent;
    cfg.validate();

    const auto t0 = std::chrono::steady_clock::now();
    const int every = std::max(1, cfg.epochs / 10);
    auto result = train(strokes, cfg, [&](int epoch, const LossTerms& l) {
        if (!a.quiet && (epoch % every == 0 || epoch + 1 == cfg.epochs))
            std::fprintf(stderr, "epoch %d loss %.6g (recon %.6g, kl %.6g)\n", epoch, l.total, l.reconstruction, l.kl);
    });
    const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;

    StrokeModel model{std::move(result.params), cfg, strokes};
    save_model_file(model, a.out);

    double err = 0.0;
    for (const auto& g : strokes)
        err += reconstruction_error(g, model.params);
    print_json({{"model", a.out},
                {"strokes", strokes.size()},
                {"skipped_strokes", skipped},
                {"epochs", cfg.epochs},
                {"seed", cfg.rng_seed},
                {"final_loss", result.loss_history.empty() ? 0.0 : result.loss_history.back()},
                {"mean_reconstruction_error", err / static_cast<double>(strokes.size())},
                {"parameters", model.params.parameter_count()},
                {"seconds", dt.count()}});
    return 0;
}

struct GenerateArgs {
    std::string image, model, out, config, page;
    std::optional<int> k;
    std::optional<double> d, stroke_size, clearance, noise;
    std::optional<int> count;
    std::optional<std::uint64_t> seed;
    bool human_order = false;
};

int run_generate(const GenerateArgs& a)
{
    require_file(a.model, "model file");
    require_file(a.image, "image");

    PipelineConfig cfg;
    if (!a.config.empty()) {
        require_file(a.config, "config file");
        cfg = merge_config(cfg, json::parse(read_file(a.config)));
    }
    if (a.k)
        cfg.colors = *a.k;
    if (a.d)
        cfg.trace.d = *a.d;
    if (a.stroke_size)
        cfg.shading.stroke_size = *a.stroke_size;
    if (a.count)
        cfg.shading.count_target = *a.count;
    if (a.clearance)
        cfg.shading.clearance = *a.clearance;
    if (a.noise)
        cfg.shading.noise_scale = *a.noise;
    if (!a.page.empty())
        cfg.page = parse_page(a.page, cfg.page);
    if (a.human_order)
        cfg.top_down_order = true;
    // A seed from the command line wins; a config file seed is kept; otherwise derive one.
    if (a.seed)
        cfg.set_seed(*a.seed);
    else if (a.config.empty())
        cfg.set_seed(time_seed());
    cfg.model_path = a.model;
    cfg.output_dir = a.out;
    try {
        cfg.validate();
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }

    const std::string model_json = read_file(a.model);
    const StrokeModel model = model_from_json(model_json);
    const RasterImage img = load_image_file(a.image);

    fs::create_directories(a.out);
    write_file(fs::path(a.out) / "meta.json", make_meta(cfg, model_json, img).dump(2));

    PipelineObserver obs;
    obs.on_artifact = [&](const std::string& name, std::span<const std::uint8_t> bytes) {
        write_file(fs::path(a.out) / name, bytes);
    };
    const auto t0 = std::chrono::steady_clock::now();
    const PipelineResult r = run_pipeline(img, cfg, model, obs);
    const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;

    json stages = json::object();
    for (const auto& [name, secs] : r.stage_seconds)
        stages[name] = secs;
    print_json({{"out", a.out},
                {"seed", cfg.trace.rng_seed},
                {"feature_paths", r.feature_paths.size()},
                {"shading_strokes", r.shading.size()},
                {"palette_size", r.palette.colors.size()},
                {"pen_down_mm", r.plan_stats.pen_down_mm},
                {"pen_up_mm", r.plan_stats.pen_up_mm},
                {"path_count", r.plan_stats.path_count},
                {"stage_seconds", stages},
                {"seconds", dt.count()}});
    return 0;
}

struct PreviewArgs {
    std::string image, out = "edges.png";
    CannyConfig canny;
};

int run_preview(const PreviewArgs& a)
{
    require_file(a.image, "image");
    try {
        a.canny.validate();
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    const auto edges = canny(to_grayscale(load_image_file(a.image)), a.canny);
    write_file(a.out, encode_png(edges));
    print_json({{"out", a.out}, {"width", edges.width}, {"height", edges.height}, {"edge_pixels", edges.count()}});
    return 0;
}

struct PlanArgs {
    std::string paths, out, page;
    double pen = PageSpec{}.pen_width;
    double margin = PageSpec{}.margin;
};

int run_plan(const PlanArgs& a)
{
    require_file(a.paths, "paths file");
    const PathsDocument doc = paths_from_json(read_file(a.paths));
    PageSpec page;
    if (!a.page.empty())
        page = parse_page(a.page, page);
    page.pen_width = a.pen;
    page.margin = a.margin;

    PlotDocument plot;
    plot.page_width = page.width;
    plot.page_height = page.height;
    plot.pen_width = page.pen_width;
    if (!doc.paths.empty()) {
        const auto scaled = scale_to_page(doc.paths, page);
        plot.paths = order_paths(scaled, {0.0, 0.0});
    }
    write_file(a.out, to_svg(plot));
    const PlanStats s = stats(plot);
    print_json({{"out", a.out}, {"pen_down_mm", s.pen_down_mm}, {"pen_up_mm", s.pen_up_mm}, {"path_count", s.path_count}});
    return 0;
}

struct ServeArgs {
    std::string host = "0.0.0.0", model, data = "data", static_dir;
    int port = 8080;
    std::optional<std::uint64_t> seed;
};

Service* g_service = nullptr;

int run_serve(const ServeArgs& a)
{
    require_file(a.model, "model file");
    ServiceConfig cfg;
    cfg.data_dir = resolve_data_dir(a.data);
    cfg.model_path = a.model;
    cfg.static_dir = a.static_dir;
    cfg.seed = a.seed;
    Service service(cfg, load_model_file(a.model));
    g_service = &service;
    std::signal(SIGINT, [](int) {
        if (g_service)
            g_service->stop();
    });
    std::signal(SIGTERM, [](int) {
        if (g_service)
            g_service->stop();
    });
    std::fprintf(stderr, "serving on http://%s:%d (data: %s)\n", a.host.c_str(), a.port,
                 cfg.data_dir.string().c_str());
    const bool ok = service.listen(a.host, a.port);
    g_service = nullptr;
    if (!ok) {
        std::fprintf(stderr, "error: cannot listen on %s:%d\n", a.host.c_str(), a.port);
        return kExitRuntime;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Line portraits for pen plotters"};
    app.require_subcommand(1);

    TrainArgs ta;
    auto* train_cmd = app.add_subcommand("train", "Train a stroke model from a template sketch SVG");
    train_cmd->add_option("--sketch", ta.sketch, "Template sketch (SVG)")->required();
    train_cmd->add_option("--out", ta.out, "Model file to write")->required();
    train_cmd->add_option("--epochs", ta.epochs, "Training epochs")->check(CLI::NonNegativeNumber);
    train_cmd->add_option("--n", ta.n, "Vertices per stroke (multiple of 4)")->check(CLI::PositiveNumber);
    train_cmd->add_option("--latent", ta.latent, "Latent size")->check(CLI::PositiveNumber);
    train_cmd->add_option("--beta", ta.beta, "KL weight")->check(CLI::NonNegativeNumber);
    train_cmd->add_option("--seed", ta.seed, "RNG seed (default: time-derived)");
    train_cmd->add_flag("--quiet", ta.quiet, "No progress output");

    GenerateArgs ga;
    auto* gen_cmd = app.add_subcommand("generate", "Turn a photo into a plotter-ready SVG");
    gen_cmd->add_option("--image", ga.image, "Input photo (PNG or JPEG)")->required();
    gen_cmd->add_option("--model", ga.model, "Model file from `train`")->required();
    gen_cmd->add_option("--out", ga.out, "Output directory")->required();
    gen_cmd->add_option("--config", ga.config, "Pipeline config JSON");
    gen_cmd->add_option("--k", ga.k, "Palette size");
    gen_cmd->add_option("--d", ga.d, "Tracing neighbour distance (px)");
    gen_cmd->add_option("--stroke-size", ga.stroke_size, "Shading stroke size (mm)");
    gen_cmd->add_option("--count", ga.count, "Target number of shading strokes");
    gen_cmd->add_option("--clearance", ga.clearance, "Minimum gap between lines (mm)");
    gen_cmd->add_option("--noise", ga.noise, "Latent noise for stroke variation");
    gen_cmd->add_option("--seed", ga.seed, "RNG seed (default: time-derived)");
    gen_cmd->add_option("--page", ga.page, "A3, A4, A5 or WIDTHxHEIGHT in mm");
    gen_cmd->add_flag("--human-order", ga.human_order, "Features first, then shading, top to bottom");

    PreviewArgs pa;
    auto* prev_cmd = app.add_subcommand("preview", "Write the edge map for an image");
    prev_cmd->add_option("--image", pa.image, "Input photo")->required();
    prev_cmd->add_option("--out", pa.out, "Output PNG");
    prev_cmd->add_option("--kernel", pa.canny.kernel_size, "Gaussian kernel size (odd)");
    prev_cmd->add_option("--low", pa.canny.low_threshold, "Low threshold, fraction of max gradient");
    prev_cmd->add_option("--high", pa.canny.high_threshold, "High threshold, fraction of max gradient");

    PlanArgs pl;
    auto* plan_cmd = app.add_subcommand("plan", "Fit, order and emit paths.json as SVG");
    plan_cmd->add_option("--paths", pl.paths, "paths.json")->required();
    plan_cmd->add_option("--out", pl.out, "Output SVG")->required();
    plan_cmd->add_option("--page", pl.page, "A3, A4, A5 or WIDTHxHEIGHT in mm");
    plan_cmd->add_option("--margin", pl.margin, "Page margin (mm)");
    plan_cmd->add_option("--pen", pl.pen, "Pen width (mm)");

    ServeArgs sa;
    auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP service");
    serve_cmd->add_option("--port", sa.port, "TCP port");
    serve_cmd->add_option("--host", sa.host, "Bind address");
    serve_cmd->add_option("--model", sa.model, "Model file")->required();
    serve_cmd->add_option("--data", sa.data, std::string("Data directory (overridden by ") + kDataDirEnv + ")");
    serve_cmd->add_option("--static", sa.static_dir, "Directory with the browser UI");
    serve_cmd->add_option("--seed", sa.seed, "Fixed seed for every job");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (*train_cmd)
            return run_train(ta);
        if (*gen_cmd)
            return run_generate(ga);
        if (*prev_cmd)
            return run_preview(pa);
        if (*plan_cmd)
            return run_plan(pl);
        if (*serve_cmd)
            return run_serve(sa);
    } catch (const UsageError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitUsage;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitRuntime;
    }
    return kExitUsage;
}
