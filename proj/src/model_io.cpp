#include "lineportrait/model_io.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace lineportrait {

using nlohmann::json;

namespace {

json matrix_to_json(const Matrix& m)
{
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c)
            row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

Matrix matrix_from_json(const json& j, Eigen::Index rows, Eigen::Index cols, const std::string& name)
{
    if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != rows)
        throw ShapeError("model weight '" + name + "' has the wrong row count");
    Matrix m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const auto& row = j[static_cast<std::size_t>(r)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
            throw ShapeError("model weight '" + name + "' has the wrong column count");
        for (Eigen::Index c = 0; c < cols; ++c)
            m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
    }
    return m;
}

json vector_to_json(const RowVector& v)
{
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i)
        out.push_back(v[i]);
    return out;
}

RowVector vector_from_json(const json& j, Eigen::Index size, const std::string& name)
{
    if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != size)
        throw ShapeError("model bias '" + name + "' has the wrong length");
    RowVector v(size);
    for (Eigen::Index i = 0; i < size; ++i)
        v[i] = j[static_cast<std::size_t>(i)].get<double>();
    return v;
}

json dims_to_json(const ModelDims& d)
{
    return {{"n", d.n}, {"h1", d.h1}, {"h2", d.h2}, {"L", d.latent}, {"d1", d.d1}, {"d2", d.d2}};
}

ModelDims dims_from_json(const json& j)
{
    ModelDims d;
    d.n = j.at("n").get<int>();
    d.h1 = j.at("h1").get<int>();
    d.h2 = j.at("h2").get<int>();
    d.latent = j.at("L").get<int>();
    d.d1 = j.at("d1").get<int>();
    d.d2 = j.at("d2").get<int>();
    d.validate();
    return d;
}

}  // namespace

std::string model_to_json(const StrokeModel& model)
{
    json weights = json::object();
    const auto layers = model.params.layers();
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const std::string name = ModelParams::kLayerNames[i];
        weights[name + ".weight"] = matrix_to_json(layers[i]->weight);
        weights[name + ".bias"] = vector_to_json(layers[i]->bias);
    }

    const auto& tc = model.train_config;
    json templates = json::array();
    for (const auto& t : model.templates)
        templates.push_back({{"scale", t.scale}, {"deltas", matrix_to_json(t.deltas)}});

    json j{
        {"version", kModelFormatVersion},
        {"dims", dims_to_json(model.params.dims)},
        {"weights", std::move(weights)},
        {"train_config",
         {{"epochs", tc.epochs},
          {"learning_rate", tc.learning_rate},
          {"beta", tc.beta},
          {"noise_scale", tc.noise_scale},
          {"rng_seed", tc.rng_seed}}},
        {"templates", std::move(templates)},
    };
    return j.dump();
}

StrokeModel model_from_json(const std::string& text)
{
    const json j = json::parse(text);
    const int version = j.at("version").get<int>();
    if (version != kModelFormatVersion)
        throw std::runtime_error("unsupported model file version " + std::to_string(version));

    StrokeModel model;
    model.params = ModelParams::zeros(dims_from_json(j.at("dims")));
    const auto& weights = j.at("weights");
    auto layers = model.params.layers();
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const std::string name = ModelParams::kLayerNames[i];
        auto* layer = layers[i];
        layer->weight = matrix_from_json(weights.at(name + ".weight"), layer->weight.rows(), layer->weight.cols(),
                                         name + ".weight");
        layer->bias = vector_from_json(weights.at(name + ".bias"), layer->bias.size(), name + ".bias");
    }

    if (j.contains("train_config")) {
        const auto& tc = j["train_config"];
        auto& cfg = model.train_config;
        cfg.epochs = tc.value("epochs", cfg.epochs);
        cfg.learning_rate = tc.value("learning_rate", cfg.learning_rate);
        cfg.beta = tc.value("beta", cfg.beta);
        cfg.noise_scale = tc.value("noise_scale", cfg.noise_scale);
        cfg.rng_seed = tc.value("rng_seed", cfg.rng_seed);
    }
    model.train_config.dims = model.params.dims;

    const int n = model.params.dims.n;
    for (const auto& jt : j.value("templates", json::array())) {
        StrokeGraph g;
        g.n = n;
        g.scale = jt.at("scale").get<double>();
        g.deltas = matrix_from_json(jt.at("deltas"), n, 2, "template deltas");
        g.edges = stroke_edges(n);
        model.templates.push_back(std::move(g));
    }
    return model;
}

void save_model_file(const StrokeModel& model, const std::string& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write model file: " + path);
    out << model_to_json(model);
}

StrokeModel load_model_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot open model file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return model_from_json(ss.str());
}

}  // namespace lineportrait
