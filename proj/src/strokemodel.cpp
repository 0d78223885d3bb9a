#include "lineportrait/strokemodel.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace lineportrait {

namespace {

void require(bool ok, const std::string& what)
{
    if (!ok)
        throw ShapeError(what);
}

RowVector standard_normal(int size, Rng& rng)
{
    std::normal_distribution<double> normal(0.0, 1.0);
    RowVector v(size);
    for (int i = 0; i < size; ++i)
        v[i] = normal(rng);
    return v;
}

Matrix relu(const Matrix& m)
{
    return m.cwiseMax(0.0);
}

RowVector relu(const RowVector& v)
{
    return v.cwiseMax(0.0);
}

template <typename M>
M relu_mask(const M& grad, const M& pre)
{
    return M((pre.array() > 0.0).select(grad.array(), 0.0));
}

// Max pooling that also records which source row won each output entry.
Matrix pool_with_argmax(const Matrix& h, std::vector<int>& argmax)
{
    const auto rows = h.rows() / 2, cols = h.cols();
    Matrix out(rows, cols);
    argmax.assign(static_cast<std::size_t>(rows * cols), 0);
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index c = 0; c < cols; ++c) {
            const bool first = h(2 * i, c) >= h(2 * i + 1, c);
            out(i, c) = first ? h(2 * i, c) : h(2 * i + 1, c);
            argmax[static_cast<std::size_t>(i * cols + c)] = static_cast<int>(first ? 2 * i : 2 * i + 1);
        }
    }
    return out;
}

Matrix unpool(const Matrix& grad, const std::vector<int>& argmax, Eigen::Index rows)
{
    Matrix out = Matrix::Zero(rows, grad.cols());
    for (Eigen::Index i = 0; i < grad.rows(); ++i)
        for (Eigen::Index c = 0; c < grad.cols(); ++c)
            out(argmax[static_cast<std::size_t>(i * grad.cols() + c)], c) += grad(i, c);
    return out;
}

RowVector flatten(const Matrix& m)
{
    return Eigen::Map<const RowVector>(m.data(), m.size());
}

Matrix reshape(const RowVector& v, Eigen::Index rows, Eigen::Index cols)
{
    return Eigen::Map<const Matrix>(v.data(), rows, cols);
}

struct GraphOperators {
    Matrix full;    // n vertices
    Matrix pooled;  // n/2 vertices after the first pooling
};

GraphOperators graph_operators(int n)
{
    return {normalized_adjacency(adjacency_matrix(n, stroke_edges(n))),
            normalized_adjacency(adjacency_matrix(n / 2, stroke_edges(n / 2)))};
}

struct Forward {
    Matrix ax, h1_pre, h1, p1;
    std::vector<int> arg1;
    Matrix ap1, h2_pre, h2, p2;
    std::vector<int> arg2;
    RowVector flat, enc, mu, logvar, z;
    RowVector a1_pre, a1, a2_pre, a2, out;
};

void check_graph(const StrokeGraph& graph, const ModelParams& params)
{
    require(graph.n == params.dims.n, "stroke has " + std::to_string(graph.n) + " vertices, model expects " +
                                          std::to_string(params.dims.n));
    require(graph.deltas.rows() == graph.n && graph.deltas.cols() == 2, "stroke deltas must be n x 2");
}

void forward_encoder(const ModelParams& p, const GraphOperators& ops, const Matrix& x, Forward& f)
{
    f.ax = ops.full * x;
    f.h1_pre = f.ax * p.conv1.weight;
    f.h1_pre.rowwise() += p.conv1.bias;
    f.h1 = relu(f.h1_pre);
    f.p1 = pool_with_argmax(f.h1, f.arg1);

    f.ap1 = ops.pooled * f.p1;
    f.h2_pre = f.ap1 * p.conv2.weight;
    f.h2_pre.rowwise() += p.conv2.bias;
    f.h2 = relu(f.h2_pre);
    f.p2 = pool_with_argmax(f.h2, f.arg2);

    f.flat = flatten(f.p2);
    f.enc = f.flat * p.enc_fc.weight + p.enc_fc.bias;
    const int latent = p.dims.latent;
    f.mu = f.enc.head(latent);
    f.logvar = f.enc.tail(latent);
}

void forward_decoder(const ModelParams& p, Forward& f)
{
    f.a1_pre = f.z * p.dec_fc1.weight + p.dec_fc1.bias;
    f.a1 = relu(f.a1_pre);
    f.a2_pre = f.a1 * p.dec_fc2.weight + p.dec_fc2.bias;
    f.a2 = relu(f.a2_pre);
    f.out = f.a2 * p.dec_fc3.weight + p.dec_fc3.bias;
}

void accumulate(ModelParams& into, const ModelParams& from, double weight)
{
    auto dst = into.layers();
    auto src = from.layers();
    for (std::size_t i = 0; i < dst.size(); ++i) {
        dst[i]->weight += weight * src[i]->weight;
        dst[i]->bias += weight * src[i]->bias;
    }
}

}  // namespace

std::vector<std::pair<int, int>> stroke_edges(int n)
{
    std::vector<std::pair<int, int>> edges;
    for (int i = 0; i + 1 < n; ++i)
        edges.emplace_back(i, i + 1);
    for (int i = 2; i < n; ++i)
        edges.emplace_back(0, i);
    return edges;
}

Matrix adjacency_matrix(int n, const std::vector<std::pair<int, int>>& edges)
{
    Matrix a = Matrix::Zero(n, n);
    for (const auto& [i, j] : edges) {
        require(i >= 0 && j >= 0 && i < n && j < n, "edge endpoint out of range");
        a(i, j) = 1.0;
        a(j, i) = 1.0;
    }
    return a;
}

Matrix normalized_adjacency(const Matrix& adjacency)
{
    require(adjacency.rows() == adjacency.cols(), "adjacency must be square");
    Matrix a = adjacency + Matrix::Identity(adjacency.rows(), adjacency.cols());
    const Eigen::VectorXd inv_sqrt = a.rowwise().sum().array().rsqrt();
    return inv_sqrt.asDiagonal() * a * inv_sqrt.asDiagonal();
}

StrokeGraph resample_stroke(const Path& path, int n)
{
    if (n < 4 || n % 4 != 0)
        throw std::invalid_argument("stroke vertex count must be a positive multiple of 4");
    const auto& pts = path.points;
    const double total = path_length(path);
    if (pts.size() < 2 || !(total > 0.0))
        throw GeometryError("cannot resample a zero-length stroke");

    std::vector<double> cumulative(pts.size(), 0.0);
    for (std::size_t i = 1; i < pts.size(); ++i)
        cumulative[i] = cumulative[i - 1] + distance(pts[i - 1], pts[i]);

    std::vector<Vec2> samples(static_cast<std::size_t>(n));
    std::size_t seg = 1;
    for (int k = 0; k < n; ++k) {
        const double s = total * k / (n - 1);
        while (seg + 1 < pts.size() && cumulative[seg] < s)
            ++seg;
        const double len = cumulative[seg] - cumulative[seg - 1];
        const double t = len > 0.0 ? std::clamp((s - cumulative[seg - 1]) / len, 0.0, 1.0) : 0.0;
        samples[k] = pts[seg - 1] + (pts[seg] - pts[seg - 1]) * t;
    }
    samples.back() = pts.back();

    const double scale = bounding_box(samples).diagonal();
    if (!(scale > 0.0))
        throw GeometryError("stroke has a degenerate bounding box");

    StrokeGraph g;
    g.n = n;
    g.scale = scale;
    g.deltas = Matrix::Zero(n, 2);
    for (int k = 1; k < n; ++k) {
        const Vec2 d = samples[k] - samples[k - 1];
        g.deltas(k, 0) = d.x / scale;
        g.deltas(k, 1) = d.y / scale;
    }
    g.edges = stroke_edges(n);
    return g;
}

Path deltas_to_path(const Matrix& deltas, double scale)
{
    Path path;
    path.points.reserve(static_cast<std::size_t>(deltas.rows()));
    Vec2 cursor;
    for (Eigen::Index i = 0; i < deltas.rows(); ++i) {
        if (i > 0)
            cursor += Vec2{deltas(i, 0), deltas(i, 1)};
        path.points.push_back(cursor * scale);
    }
    return path;
}

void ModelDims::validate() const
{
    if (n < 4 || n % 4 != 0)
        throw ShapeError("model n must be a positive multiple of 4");
    if (h1 < 1 || h2 < 1 || latent < 1 || d1 < 1 || d2 < 1)
        throw ShapeError("model layer widths must be positive");
}

ModelParams ModelParams::zeros(const ModelDims& dims)
{
    dims.validate();
    ModelParams p;
    p.dims = dims;
    p.conv1 = DenseLayer(2, dims.h1);
    p.conv2 = DenseLayer(dims.h1, dims.h2);
    p.enc_fc = DenseLayer(dims.n / 4 * dims.h2, 2 * dims.latent);
    p.dec_fc1 = DenseLayer(dims.latent, dims.d1);
    p.dec_fc2 = DenseLayer(dims.d1, dims.d2);
    p.dec_fc3 = DenseLayer(dims.d2, 2 * dims.n);
    return p;
}

ModelParams ModelParams::initialize(const ModelDims& dims, Rng& rng)
{
    ModelParams p = zeros(dims);
    for (auto* layer : p.layers()) {
        const auto fan_in = layer->weight.rows(), fan_out = layer->weight.cols();
        const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        std::uniform_real_distribution<double> uniform(-limit, limit);
        for (Eigen::Index i = 0; i < layer->weight.size(); ++i)
            layer->weight.data()[i] = uniform(rng);
    }
    return p;
}

std::size_t ModelParams::parameter_count() const
{
    std::size_t total = 0;
    for (const auto* layer : layers())
        total += static_cast<std::size_t>(layer->weight.size() + layer->bias.size());
    return total;
}

Matrix gcn_layer(const Matrix& features, const Matrix& adjacency, const Matrix& weight, const RowVector& bias)
{
    require(adjacency.rows() == features.rows() && adjacency.cols() == features.rows(),
            "adjacency must be n x n for n feature rows");
    require(weight.rows() == features.cols(), "weight rows must equal feature width");
    require(bias.size() == weight.cols(), "bias length must equal weight columns");
    Matrix pre = normalized_adjacency(adjacency) * features * weight;
    pre.rowwise() += bias;
    return relu(pre);
}

Matrix pool_pairwise(const Matrix& features)
{
    require(features.rows() % 2 == 0, "pairwise pooling needs an even vertex count");
    std::vector<int> ignored;
    return pool_with_argmax(features, ignored);
}

Encoding encode(const StrokeGraph& graph, const ModelParams& params)
{
    check_graph(graph, params);
    Forward f;
    forward_encoder(params, graph_operators(params.dims.n), graph.deltas, f);
    return {f.mu, f.logvar};
}

RowVector reparameterize(const RowVector& mu, const RowVector& logvar, Rng& rng)
{
    require(mu.size() == logvar.size(), "mu and logvar lengths differ");
    const RowVector eps = standard_normal(static_cast<int>(mu.size()), rng);
    return mu + ((0.5 * logvar).array().exp() * eps.array()).matrix();
}

Matrix decode(const RowVector& z, const ModelParams& params)
{
    require(z.size() == params.dims.latent, "latent vector has length " + std::to_string(z.size()) +
                                                ", model expects " + std::to_string(params.dims.latent));
    Forward f;
    f.z = z;
    forward_decoder(params, f);
    return reshape(f.out, params.dims.n, 2);
}

LossTerms vae_loss(const Matrix& recon, const Matrix& target, const RowVector& mu, const RowVector& logvar,
                   double beta)
{
    require(recon.rows() == target.rows() && recon.cols() == target.cols(), "recon and target shapes differ");
    require(mu.size() == logvar.size(), "mu and logvar lengths differ");
    LossTerms t;
    t.reconstruction = (recon - target).squaredNorm() / static_cast<double>(target.size());
    t.kl = -0.5 * (1.0 + logvar.array() - mu.array().square() - logvar.array().exp()).sum();
    t.total = t.reconstruction + beta * t.kl;
    return t;
}

LossGradient loss_and_gradient(const ModelParams& p, const StrokeGraph& graph, const RowVector& epsilon,
                               double beta)
{
    check_graph(graph, p);
    const int n = p.dims.n, latent = p.dims.latent;
    require(epsilon.size() == latent, "noise vector length must equal latent size");

    const auto ops = graph_operators(n);
    Forward f;
    forward_encoder(p, ops, graph.deltas, f);
    const RowVector std_dev = (0.5 * f.logvar).array().exp();
    f.z = f.mu + (std_dev.array() * epsilon.array()).matrix();
    forward_decoder(p, f);

    const RowVector target = flatten(graph.deltas);
    LossGradient result;
    result.loss = vae_loss(reshape(f.out, n, 2), graph.deltas, f.mu, f.logvar, beta);
    auto& g = result.gradient;
    g = ModelParams::zeros(p.dims);

    // Decoder.
    const RowVector d_out = 2.0 * (f.out - target) / static_cast<double>(target.size());
    g.dec_fc3.weight = f.a2.transpose() * d_out;
    g.dec_fc3.bias = d_out;
    const RowVector d_a2 = relu_mask<RowVector>(d_out * p.dec_fc3.weight.transpose(), f.a2_pre);
    g.dec_fc2.weight = f.a1.transpose() * d_a2;
    g.dec_fc2.bias = d_a2;
    const RowVector d_a1 = relu_mask<RowVector>(d_a2 * p.dec_fc2.weight.transpose(), f.a1_pre);
    g.dec_fc1.weight = f.z.transpose() * d_a1;
    g.dec_fc1.bias = d_a1;
    const RowVector d_z = d_a1 * p.dec_fc1.weight.transpose();

    // Reparameterization and KL term.
    RowVector d_enc(2 * latent);
    d_enc.head(latent) = d_z + beta * f.mu;
    d_enc.tail(latent) = (d_z.array() * 0.5 * std_dev.array() * epsilon.array() +
                          beta * 0.5 * (f.logvar.array().exp() - 1.0))
                             .matrix();

    // Encoder.
    g.enc_fc.weight = f.flat.transpose() * d_enc;
    g.enc_fc.bias = d_enc;
    const Matrix d_p2 = reshape(d_enc * p.enc_fc.weight.transpose(), f.p2.rows(), f.p2.cols());
    const Matrix d_h2 = relu_mask<Matrix>(unpool(d_p2, f.arg2, f.h2.rows()), f.h2_pre);
    g.conv2.weight = f.ap1.transpose() * d_h2;
    g.conv2.bias = d_h2.colwise().sum();
    const Matrix d_p1 = ops.pooled.transpose() * (d_h2 * p.conv2.weight.transpose());
    const Matrix d_h1 = relu_mask<Matrix>(unpool(d_p1, f.arg1, f.h1.rows()), f.h1_pre);
    g.conv1.weight = f.ax.transpose() * d_h1;
    g.conv1.bias = d_h1.colwise().sum();
    return result;
}

void TrainConfig::validate() const
{
    if (epochs < 0)
        throw std::invalid_argument("epochs must be >= 0");
    if (!(learning_rate > 0.0))
        throw std::invalid_argument("learning_rate must be > 0");
    if (!(beta >= 0.0))
        throw std::invalid_argument("beta must be >= 0");
    if (!(noise_scale >= 0.0))
        throw std::invalid_argument("noise_scale must be >= 0");
    dims.validate();
}

TrainResult train(const std::vector<StrokeGraph>& strokes, const TrainConfig& cfg, const EpochCallback& on_epoch)
{
    if (strokes.empty())
        throw std::invalid_argument("training needs at least one stroke");
    ModelDims dims = cfg.dims;
    dims.n = strokes.front().n;
    TrainConfig checked = cfg;
    checked.dims = dims;
    checked.validate();
    for (const auto& s : strokes)
        require(s.n == dims.n, "all training strokes must have the same vertex count");

    Rng rng(cfg.rng_seed);
    TrainResult result{ModelParams::initialize(dims, rng), {}};
    auto& params = result.params;
    result.loss_history.reserve(static_cast<std::size_t>(cfg.epochs));

    constexpr double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;
    ModelParams m = ModelParams::zeros(dims), v = ModelParams::zeros(dims);
    const double batch_weight = 1.0 / static_cast<double>(strokes.size());

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        ModelParams grad = ModelParams::zeros(dims);
        LossTerms epoch_loss;
        for (const auto& stroke : strokes) {
            const RowVector eps = standard_normal(dims.latent, rng);
            const auto lg = loss_and_gradient(params, stroke, eps, cfg.beta);
            accumulate(grad, lg.gradient, batch_weight);
            epoch_loss.total += lg.loss.total * batch_weight;
            epoch_loss.reconstruction += lg.loss.reconstruction * batch_weight;
            epoch_loss.kl += lg.loss.kl * batch_weight;
        }
        if (!std::isfinite(epoch_loss.total))
            throw TrainingError("training diverged: non-finite loss at epoch " + std::to_string(epoch), epoch);
        result.loss_history.push_back(epoch_loss.total);
        if (on_epoch)
            on_epoch(epoch, epoch_loss);

        const double correction1 = 1.0 - std::pow(beta1, epoch);
        const double correction2 = 1.0 - std::pow(beta2, epoch);
        const double step = cfg.learning_rate * std::sqrt(correction2) / correction1;
        auto pl = params.layers();
        auto gl = grad.layers();
        auto ml = m.layers();
        auto vl = v.layers();
        for (std::size_t i = 0; i < pl.size(); ++i) {
            auto update = [&](auto& param, const auto& g, auto& mom, auto& var) {
                mom = beta1 * mom + (1.0 - beta1) * g;
                var = beta2 * var + (1.0 - beta2) * g.cwiseProduct(g);
                param.array() -= step * mom.array() / (var.array().sqrt() + adam_eps);
            };
            update(pl[i]->weight, gl[i]->weight, ml[i]->weight, vl[i]->weight);
            update(pl[i]->bias, gl[i]->bias, ml[i]->bias, vl[i]->bias);
        }
    }
    return result;
}

Path sample_variation(const StrokeGraph& graph, const ModelParams& params, double noise_scale, Rng& rng)
{
    const auto enc = encode(graph, params);
    RowVector z = enc.mu;
    if (noise_scale > 0.0)
        z += noise_scale * standard_normal(params.dims.latent, rng);
    return deltas_to_path(decode(z, params), graph.scale);
}

Path sample_random(const ModelParams& params, double scale, Rng& rng)
{
    return deltas_to_path(decode(standard_normal(params.dims.latent, rng), params), scale);
}

Path reconstruct(const StrokeGraph& graph, const ModelParams& params)
{
    return deltas_to_path(decode(encode(graph, params).mu, params), graph.scale);
}

double reconstruction_error(const StrokeGraph& graph, const ModelParams& params)
{
    const Path original = deltas_to_path(graph.deltas, 1.0);
    const Path recon = deltas_to_path(decode(encode(graph, params).mu, params), 1.0);
    double total = 0.0;
    for (std::size_t i = 0; i < original.points.size(); ++i)
        total += distance(original.points[i], recon.points[i]);
    return total / static_cast<double>(original.points.size());
}

}  // namespace lineportrait
