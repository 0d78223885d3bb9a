#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "lineportrait/model_io.hpp"
#include "lineportrait/pipeline.hpp"

namespace lineportrait {

struct ServiceConfig {
    std::filesystem::path data_dir = "data";
    std::string model_path;
    PipelineConfig defaults;
    /// Directory served at "/" when non-empty (the browser UI build).
    std::string static_dir;
    /// Fixed seed for every job when set; otherwise each job draws a time-derived seed.
    std::optional<std::uint64_t> seed;
};

/// Environment variable that overrides ServiceConfig::data_dir.
inline constexpr const char* kDataDirEnv = "LINEPORTRAIT_DATA";

/// HTTP front end plus a single-worker job queue. Every job lives in
/// `<data_dir>/<id>/` with its input image, artifacts, job.json and meta.json.
///
///   POST /preview            image -> edge map PNG (kernel, low, high)
///   POST /portraits          image [+ config JSON] -> 202 {"id": ...}
///   GET  /portraits          gallery listing
///   GET  /portraits/{id}     job state
///   GET  /portraits/{id}/svg final drawing, 404 until done
///   GET  /portraits/{id}/artifacts/{name}
///   GET  /healthz
class Service {
public:
    Service(ServiceConfig cfg, StrokeModel model);
    ~Service();

    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    /// Binds and serves on a background thread. Port 0 picks a free port; the bound port is returned.
    int start(const std::string& host, int port);
    /// Binds and serves on the calling thread until stop() is called from elsewhere.
    bool listen(const std::string& host, int port);
    void stop();

    /// Queues a generation job from encoded image bytes. Throws std::invalid_argument on bad input.
    std::string submit(const std::string& image_bytes, const nlohmann::json& overrides = nlohmann::json::object());
    std::optional<nlohmann::json> job_state(const std::string& id) const;
    nlohmann::json gallery() const;
    /// Blocks until the queue is empty and the worker is idle.
    void wait_idle();

    const std::filesystem::path& data_dir() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Resolves the data directory: the environment override wins over `fallback`.
std::filesystem::path resolve_data_dir(const std::filesystem::path& fallback);

}  // namespace lineportrait
