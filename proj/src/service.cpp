#include "lineportrait/service.hpp"

#include <algorithm>
#include <chrono>
#include <condition_variable>
#include <cstdlib>
#include <deque>
#include <map>
#include <mutex>
#include <random>
#include <regex>
#include <thread>

#include "httplib.h"

namespace lineportrait {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

double now_seconds()
{
    using namespace std::chrono;
    return duration<double>(system_clock::now().time_since_epoch()).count();
}

std::uint64_t time_seed()
{
    using namespace std::chrono;
    const auto t = static_cast<std::uint64_t>(high_resolution_clock::now().time_since_epoch().count());
    // splitmix64 finaliser so consecutive jobs get unrelated seeds
    std::uint64_t z = t + 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

bool valid_id(const std::string& id)
{
    static const std::regex re("[0-9a-f]{16}");
    return std::regex_match(id, re);
}

std::string sniff_extension(const std::string& bytes)
{
    if (bytes.size() >= 8 && bytes.compare(0, 8, "\x89PNG\r\n\x1a\n") == 0)
        return ".png";
    return ".jpg";
}

// Atomic replace so readers never observe a half-written record.
void write_json_atomic(const fs::path& path, const json& j)
{
    const fs::path tmp = path.string() + ".tmp";
    write_file(tmp, j.dump(2));
    fs::rename(tmp, path);
}

void send_json(httplib::Response& res, int status, const json& body)
{
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message)
{
    send_json(res, status, {{"error", message}});
}

/// Field lookup across query string, url-encoded body and multipart parts.
std::optional<std::string> field(const httplib::Request& req, const std::string& key)
{
    if (req.has_param(key))
        return req.get_param_value(key);
    if (req.has_file(key))
        return req.get_file_value(key).content;
    return std::nullopt;
}

std::string upload_bytes(const httplib::Request& req)
{
    if (req.is_multipart_form_data()) {
        if (!req.has_file("image"))
            throw std::invalid_argument("multipart upload has no 'image' part");
        return req.get_file_value("image").content;
    }
    return req.body;
}

CannyConfig preview_params(const httplib::Request& req, CannyConfig cfg)
{
    auto number = [&](const char* key, auto& out) {
        if (auto v = field(req, key)) {
            std::size_t used = 0;
            double d = 0.0;
            try {
                d = std::stod(*v, &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used == 0 || used != v->size())
                throw std::invalid_argument(std::string("parameter '") + key + "' is not a number");
            out = static_cast<std::remove_reference_t<decltype(out)>>(d);
        }
    };
    number("kernel", cfg.kernel_size);
    number("low", cfg.low_threshold);
    number("high", cfg.high_threshold);
    cfg.validate();
    return cfg;
}

}  // namespace

fs::path resolve_data_dir(const fs::path& fallback)
{
    if (const char* env = std::getenv(kDataDirEnv); env && *env)
        return env;
    return fallback;
}

struct Service::Impl {
    ServiceConfig cfg;
    StrokeModel model;
    std::string model_json;
    httplib::Server server;
    std::thread listener;

    mutable std::mutex mu;
    std::condition_variable cv;
    std::map<std::string, json> jobs;  // id -> state record, mirrors job.json
    std::deque<std::string> queue;
    bool busy = false;
    bool stopping = false;
    std::thread worker;
    std::mt19937_64 id_rng{std::random_device{}() ^ time_seed()};

    Impl(ServiceConfig c, StrokeModel m) : cfg(std::move(c)), model(std::move(m)), model_json(model_to_json(model))
    {
        fs::create_directories(cfg.data_dir);
        recover();
        routes();
        worker = std::thread([this] { work(); });
    }

    ~Impl()
    {
        server.stop();
        if (listener.joinable())
            listener.join();
        {
            std::lock_guard lock(mu);
            stopping = true;
        }
        cv.notify_all();
        if (worker.joinable())
            worker.join();
    }

    fs::path job_dir(const std::string& id) const { return cfg.data_dir / id; }

    // Caller holds `mu`.
    void persist(const std::string& id) { write_json_atomic(job_dir(id) / "job.json", jobs.at(id)); }

    // Jobs left behind by a previous process: queued ones are resumed, interrupted ones failed.
    void recover()
    {
        std::vector<std::pair<double, std::string>> pending;
        for (const auto& entry : fs::directory_iterator(cfg.data_dir)) {
            const std::string id = entry.path().filename().string();
            if (!entry.is_directory() || !valid_id(id) || !fs::exists(entry.path() / "job.json"))
                continue;
            json state;
            try {
                state = json::parse(read_file(entry.path() / "job.json"));
            } catch (const std::exception&) {
                continue;
            }
            const std::string s = state.value("state", "");
            if (s == "running") {
                state["state"] = "failed";
                state["reason"] = "service stopped while the job was running";
                state["timestamps"]["failed"] = now_seconds();
            }
            jobs[id] = state;
            persist(id);
            if (s == "queued")
                pending.emplace_back(state["timestamps"].value("queued", 0.0), id);
        }
        std::sort(pending.begin(), pending.end());
        for (auto& [_, id] : pending)
            queue.push_back(id);
    }

    std::string new_id()
    {
        for (;;) {
            char buf[17];
            std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(id_rng()));
            if (!jobs.count(buf) && !fs::exists(job_dir(buf)))
                return buf;
        }
    }

    std::string submit(const std::string& bytes, const json& overrides)
    {
        if (bytes.empty())
            throw std::invalid_argument("empty image upload");
        // Decode up front so malformed uploads are rejected before a job exists.
        const auto span = std::span(reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size());
        RasterImage img;
        try {
            img = load_image(span);
        } catch (const std::exception& e) {
            throw std::invalid_argument(e.what());
        }

        PipelineConfig base = cfg.defaults;
        base.set_seed(cfg.seed.value_or(time_seed()));
        PipelineConfig pc = merge_config(base, overrides);
        pc.model_path = cfg.model_path;
        pc.validate();

        std::lock_guard lock(mu);
        const std::string id = new_id();
        const fs::path dir = job_dir(id);
        pc.output_dir = dir.string();
        fs::create_directories(dir);
        const std::string input_name = "input" + sniff_extension(bytes);
        write_file(dir / input_name, bytes);
        write_file(dir / "config.json", to_json(pc).dump(2));
        write_file(dir / "meta.json", make_meta(pc, model_json, img).dump(2));

        jobs[id] = {
            {"id", id},
            {"state", "queued"},
            {"stage", nullptr},
            {"stages", json::array()},
            {"timestamps", {{"queued", now_seconds()}}},
            {"artifacts", json::array({input_name, "config.json", "meta.json"})},
        };
        persist(id);
        queue.push_back(id);
        cv.notify_all();
        return id;
    }

    void work()
    {
        for (;;) {
            std::string id;
            {
                std::unique_lock lock(mu);
                cv.wait(lock, [&] { return stopping || !queue.empty(); });
                if (stopping)
                    return;
                id = queue.front();
                queue.pop_front();
                busy = true;
            }
            run_job(id);
            {
                std::lock_guard lock(mu);
                busy = false;
            }
            cv.notify_all();
        }
    }

    void run_job(const std::string& id)
    {
        const fs::path dir = job_dir(id);
        auto update = [&](auto&& fn) {
            std::lock_guard lock(mu);
            fn(jobs.at(id));
            persist(id);
        };

        try {
            const PipelineConfig pc = merge_config(PipelineConfig{}, json::parse(read_file(dir / "config.json")));
            std::string input;
            for (const char* name : {"input.png", "input.jpg"})
                if (fs::exists(dir / name))
                    input = (dir / name).string();
            const RasterImage img = load_image_file(input);

            PipelineObserver obs;
            obs.on_stage = [&](Stage s) {
                update([&](json& j) {
                    j["state"] = "running";
                    j["stage"] = stage_name(s);
                    j["stages"].push_back(stage_name(s));
                    j["timestamps"][stage_name(s)] = now_seconds();
                });
            };
            obs.on_artifact = [&](const std::string& name, std::span<const std::uint8_t> bytes) {
                write_file(dir / name, bytes);
                update([&](json& j) { j["artifacts"].push_back(name); });
            };
            const PipelineResult r = run_pipeline(img, pc, model, obs);
            update([&](json& j) {
                j["state"] = "done";
                j["stage"] = nullptr;
                j["timestamps"]["done"] = now_seconds();
                j["stats"] = {{"pen_down_mm", r.plan_stats.pen_down_mm},
                              {"pen_up_mm", r.plan_stats.pen_up_mm},
                              {"path_count", r.plan_stats.path_count},
                              {"feature_paths", r.feature_paths.size()},
                              {"shading_strokes", r.shading.size()}};
            });
        } catch (const std::exception& e) {
            update([&](json& j) {
                j["state"] = "failed";
                j["reason"] = e.what();
                j["timestamps"]["failed"] = now_seconds();
            });
        }
    }

    std::optional<json> state(const std::string& id) const
    {
        std::lock_guard lock(mu);
        auto it = jobs.find(id);
        if (it == jobs.end())
            return std::nullopt;
        return it->second;
    }

    // The gallery is a directory scan so that portraits copied in by hand show up too.
    json gallery() const
    {
        std::vector<json> items;
        for (const auto& entry : fs::directory_iterator(cfg.data_dir)) {
            const std::string id = entry.path().filename().string();
            if (!entry.is_directory() || !valid_id(id) || !fs::exists(entry.path() / "job.json"))
                continue;
            json s;
            if (auto mem = state(id)) {
                s = *mem;
            } else {
                try {
                    s = json::parse(read_file(entry.path() / "job.json"));
                } catch (const std::exception&) {
                    continue;
                }
            }
            json item{{"id", id}, {"state", s.value("state", "unknown")},
                      {"created", s["timestamps"].value("queued", 0.0)}};
            if (item["state"] == "done")
                item["svg"] = "/portraits/" + id + "/svg";
            items.push_back(std::move(item));
        }
        std::sort(items.begin(), items.end(), [](const json& a, const json& b) {
            return a["created"].get<double>() > b["created"].get<double>();
        });
        return {{"portraits", items}};
    }

    void routes()
    {
        server.set_payload_max_length(64ull << 20);

        server.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
            send_json(res, 200, {{"status", "ok"}});
        });

        // Stateless: nothing is written and no job state is touched.
        server.Post("/preview", [this](const httplib::Request& req, httplib::Response& res) {
            CannyConfig cc;
            RasterImage img;
            try {
                cc = preview_params(req, cfg.defaults.canny);
                const std::string bytes = upload_bytes(req);
                if (bytes.empty())
                    throw std::invalid_argument("empty image upload");
                img = load_image(std::span(reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size()));
            } catch (const std::exception& e) {
                return send_error(res, 400, e.what());
            }
            const auto png = encode_png(canny(to_grayscale(img), cc));
            res.set_content(std::string(png.begin(), png.end()), "image/png");
        });

        server.Post("/portraits", [this](const httplib::Request& req, httplib::Response& res) {
            try {
                json overrides = json::object();
                if (auto c = field(req, "config"); c && !c->empty())
                    overrides = json::parse(*c);
                const std::string id = submit(upload_bytes(req), overrides);
                send_json(res, 202, {{"id", id}, {"state_url", "/portraits/" + id}});
            } catch (const json::exception& e) {
                send_error(res, 400, std::string("bad config: ") + e.what());
            } catch (const std::invalid_argument& e) {
                send_error(res, 400, e.what());
            }
        });

        server.Get("/portraits", [this](const httplib::Request&, httplib::Response& res) {
            send_json(res, 200, gallery());
        });

        server.Get(R"(/portraits/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
            const std::string id = req.matches[1];
            auto s = valid_id(id) ? state(id) : std::nullopt;
            if (!s)
                return send_error(res, 404, "unknown portrait id");
            send_json(res, 200, *s);
        });

        server.Get(R"(/portraits/([^/]+)/svg)", [this](const httplib::Request& req, httplib::Response& res) {
            const std::string id = req.matches[1];
            auto s = valid_id(id) ? state(id) : std::nullopt;
            if (!s)
                return send_error(res, 404, "unknown portrait id");
            if ((*s)["state"] != "done")
                return send_error(res, 404, "portrait is not finished");
            res.set_content(read_file(job_dir(id) / "plan.svg"), "image/svg+xml");
        });

        server.Get(R"(/portraits/([^/]+)/artifacts/([^/]+))",
                   [this](const httplib::Request& req, httplib::Response& res) {
                       const std::string id = req.matches[1];
                       const std::string name = req.matches[2];
                       auto s = valid_id(id) ? state(id) : std::nullopt;
                       if (!s)
                           return send_error(res, 404, "unknown portrait id");
                       const auto& list = (*s)["artifacts"];
                       if (std::find(list.begin(), list.end(), name) == list.end())
                           return send_error(res, 404, "no such artifact");
                       std::string type = "application/octet-stream";
                       if (name.ends_with(".png"))
                           type = "image/png";
                       else if (name.ends_with(".jpg"))
                           type = "image/jpeg";
                       else if (name.ends_with(".svg"))
                           type = "image/svg+xml";
                       else if (name.ends_with(".json"))
                           type = "application/json";
                       res.set_content(read_file(job_dir(id) / name), type);
                   });

        if (!cfg.static_dir.empty())
            server.set_mount_point("/", cfg.static_dir);
    }
};

Service::Service(ServiceConfig cfg, StrokeModel model) : impl_(std::make_unique<Impl>(std::move(cfg), std::move(model)))
{
}

Service::~Service() = default;

int Service::start(const std::string& host, int port)
{
    const int bound = port == 0 ? impl_->server.bind_to_any_port(host) : (impl_->server.bind_to_port(host, port) ? port : -1);
    if (bound < 0)
        throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port));
    impl_->listener = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
    return bound;
}

bool Service::listen(const std::string& host, int port)
{
    return impl_->server.listen(host, port);
}

void Service::stop()
{
    impl_->server.stop();
    if (impl_->listener.joinable())
        impl_->listener.join();
}

std::string Service::submit(const std::string& image_bytes, const json& overrides)
{
    return impl_->submit(image_bytes, overrides);
}

std::optional<json> Service::job_state(const std::string& id) const
{
    return impl_->state(id);
}

json Service::gallery() const
{
    return impl_->gallery();
}

void Service::wait_idle()
{
    std::unique_lock lock(impl_->mu);
    impl_->cv.wait(lock, [&] { return impl_->queue.empty() && !impl_->busy; });
}

const fs::path& Service::data_dir() const
{
    return impl_->cfg.data_dir;
}

}  // namespace lineportrait
