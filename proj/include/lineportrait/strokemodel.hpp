#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "lineportrait/geometry.hpp"

namespace lineportrait {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::RowVectorXd;
using Rng = std::mt19937_64;

/// A stroke resampled to n equidistant vertices, stored as predecessor deltas in
/// normalized units (unit bounding-box diagonal). Vertex 0 is the reference vertex.
struct StrokeGraph {
    int n = 0;
    Matrix deltas;                          // n x 2, row 0 is (0,0)
    std::vector<std::pair<int, int>> edges; // 0-indexed, undirected
    double scale = 1.0;                     // original bounding-box diagonal
};

/// Chain edges (i, i+1) plus hub edges (0, i) for i >= 2: 2n-3 distinct edges.
std::vector<std::pair<int, int>> stroke_edges(int n);

Matrix adjacency_matrix(int n, const std::vector<std::pair<int, int>>& edges);

/// D^-1/2 (A + I) D^-1/2 with D the degree matrix of A + I.
Matrix normalized_adjacency(const Matrix& adjacency);

StrokeGraph resample_stroke(const Path& path, int n);

/// Absolute points from a delta matrix: row 0 is forced to the origin, result scaled by `scale`.
Path deltas_to_path(const Matrix& deltas, double scale);

struct ModelDims {
    int n = 32;
    int h1 = 16;
    int h2 = 32;
    int latent = 8;
    int d1 = 64;
    int d2 = 128;

    void validate() const;
    bool operator==(const ModelDims&) const = default;
};

/// Affine map y = x W + b with W of shape in x out.
struct DenseLayer {
    Matrix weight;
    RowVector bias;

    DenseLayer() = default;
    DenseLayer(int in, int out) : weight(Matrix::Zero(in, out)), bias(RowVector::Zero(out)) {}
};

struct ModelParams {
    ModelDims dims;
    DenseLayer conv1;    // 2 -> h1
    DenseLayer conv2;    // h1 -> h2
    DenseLayer enc_fc;   // n/4*h2 -> 2L (mu | log variance)
    DenseLayer dec_fc1;  // L -> d1
    DenseLayer dec_fc2;  // d1 -> d2
    DenseLayer dec_fc3;  // d2 -> 2n

    static constexpr std::array<const char*, 6> kLayerNames{"conv1", "conv2", "enc_fc",
                                                            "dec_fc1", "dec_fc2", "dec_fc3"};

    /// All-zero parameters of the given shape.
    static ModelParams zeros(const ModelDims& dims);
    /// Glorot-uniform weights, zero biases.
    static ModelParams initialize(const ModelDims& dims, Rng& rng);

    std::array<DenseLayer*, 6> layers() { return {&conv1, &conv2, &enc_fc, &dec_fc1, &dec_fc2, &dec_fc3}; }
    std::array<const DenseLayer*, 6> layers() const
    {
        return {&conv1, &conv2, &enc_fc, &dec_fc1, &dec_fc2, &dec_fc3};
    }
    std::size_t parameter_count() const;
};

/// H' = ReLU(norm(A + I) H W + b).
Matrix gcn_layer(const Matrix& features, const Matrix& adjacency, const Matrix& weight, const RowVector& bias);

/// Row i of the result is the element-wise max of rows 2i and 2i+1.
Matrix pool_pairwise(const Matrix& features);

struct Encoding {
    RowVector mu;
    RowVector logvar;
};

Encoding encode(const StrokeGraph& graph, const ModelParams& params);
RowVector reparameterize(const RowVector& mu, const RowVector& logvar, Rng& rng);
Matrix decode(const RowVector& z, const ModelParams& params);

struct LossTerms {
    double total = 0.0;
    double reconstruction = 0.0;
    double kl = 0.0;
};

/// Mean squared error plus beta-weighted Gaussian KL divergence against N(0, I).
LossTerms vae_loss(const Matrix& recon, const Matrix& target, const RowVector& mu, const RowVector& logvar,
                   double beta);

struct LossGradient {
    LossTerms loss;
    ModelParams gradient;
};

/// Loss for one stroke with a fixed noise draw `epsilon`, plus the exact gradient of that loss
/// with respect to every parameter.
LossGradient loss_and_gradient(const ModelParams& params, const StrokeGraph& graph, const RowVector& epsilon,
                               double beta);

struct TrainConfig {
    int epochs = 4000;
    double learning_rate = 1e-3;
    double beta = 1e-6;  // larger values collapse the posterior on one-shot data
    double noise_scale = 0.15;
    std::uint64_t rng_seed = 0;
    ModelDims dims;

    void validate() const;
};

class TrainingError : public std::runtime_error {
public:
    TrainingError(const std::string& what, int epoch) : std::runtime_error(what), epoch_(epoch) {}
    int epoch() const { return epoch_; }

private:
    int epoch_;
};

struct TrainResult {
    ModelParams params;
    std::vector<double> loss_history;  // one entry per epoch
};

using EpochCallback = std::function<void(int epoch, const LossTerms&)>;

/// Full-batch Adam over all strokes. dims.n is taken from the strokes.
TrainResult train(const std::vector<StrokeGraph>& strokes, const TrainConfig& cfg, const EpochCallback& on_epoch = {});

/// Decode mu(g) + noise_scale * eps into a path in the stroke's original units.
Path sample_variation(const StrokeGraph& graph, const ModelParams& params, double noise_scale, Rng& rng);

/// Decode z ~ N(0, I).
Path sample_random(const ModelParams& params, double scale, Rng& rng);

/// Path of decode(mu(g)) in original units.
Path reconstruct(const StrokeGraph& graph, const ModelParams& params);

/// Mean Euclidean distance between corresponding vertices of the normalized stroke and its reconstruction.
double reconstruction_error(const StrokeGraph& graph, const ModelParams& params);

}  // namespace lineportrait
