#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include "lineportrait/model_io.hpp"
#include "lineportrait/sketch_svg.hpp"
#include "lineportrait/strokemodel.hpp"
#include "support/oracles.hpp"

using namespace lineportrait;

namespace {

using Mat = std::vector<std::vector<double>>;

// Plain-loop reference network, written independently of the Eigen implementation.
Mat normalized(int n)
{
    Mat a(n, std::vector<double>(n, 0.0));
    for (int i = 0; i < n; ++i)
        a[i][i] = 1.0;
    for (int i = 0; i + 1 < n; ++i)
        a[i][i + 1] = a[i + 1][i] = 1.0;
    for (int i = 2; i < n; ++i)
        a[0][i] = a[i][0] = 1.0;
    std::vector<double> deg(n, 0.0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            deg[i] += a[i][j];
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            a[i][j] /= std::sqrt(deg[i] * deg[j]);
    return a;
}

Mat conv(const Mat& h, const Mat& a, const Matrix& w, const RowVector& b)
{
    const std::size_t n = h.size(), fin = h[0].size(), fout = static_cast<std::size_t>(w.cols());
    Mat out(n, std::vector<double>(fout, 0.0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t o = 0; o < fout; ++o) {
            double acc = b[o];
            for (std::size_t j = 0; j < n; ++j)
                for (std::size_t f = 0; f < fin; ++f)
                    acc += a[i][j] * h[j][f] * w(f, o);
            out[i][o] = std::max(0.0, acc);
        }
    return out;
}

Mat pool(const Mat& h)
{
    Mat out(h.size() / 2, std::vector<double>(h[0].size()));
    for (std::size_t i = 0; i < out.size(); ++i)
        for (std::size_t c = 0; c < h[0].size(); ++c)
            out[i][c] = std::max(h[2 * i][c], h[2 * i + 1][c]);
    return out;
}

std::vector<double> dense(const std::vector<double>& x, const DenseLayer& l, bool relu)
{
    std::vector<double> y(static_cast<std::size_t>(l.weight.cols()));
    for (std::size_t o = 0; o < y.size(); ++o) {
        double acc = l.bias[o];
        for (std::size_t i = 0; i < x.size(); ++i)
            acc += x[i] * l.weight(i, o);
        y[o] = relu ? std::max(0.0, acc) : acc;
    }
    return y;
}

std::vector<double> reference_encode(const StrokeGraph& g, const ModelParams& p)
{
    Mat x(g.n, std::vector<double>(2));
    for (int i = 0; i < g.n; ++i)
        x[i] = {g.deltas(i, 0), g.deltas(i, 1)};
    auto h = pool(conv(x, normalized(g.n), p.conv1.weight, p.conv1.bias));
    h = pool(conv(h, normalized(g.n / 2), p.conv2.weight, p.conv2.bias));
    std::vector<double> flat;
    for (const auto& row : h)
        flat.insert(flat.end(), row.begin(), row.end());
    return dense(flat, p.enc_fc, false);
}

std::vector<double> reference_decode(const std::vector<double>& z, const ModelParams& p)
{
    return dense(dense(dense(z, p.dec_fc1, true), p.dec_fc2, true), p.dec_fc3, false);
}

ModelParams random_params(const ModelDims& dims, std::uint64_t seed)
{
    Rng rng(seed);
    auto p = ModelParams::initialize(dims, rng);
    std::normal_distribution<double> nd(0.0, 0.3);
    for (auto* l : p.layers())
        for (Eigen::Index i = 0; i < l->bias.size(); ++i)
            l->bias[i] = nd(rng);
    return p;
}

Path half_circle(double radius)
{
    Path p;
    for (int i = 0; i <= 200; ++i) {
        const double t = std::numbers::pi * i / 200;
        p.points.push_back({radius * std::cos(t), -radius * std::sin(t)});
    }
    return p;
}

}  // namespace

TEST_CASE("resample a straight segment")
{
    const auto g = resample_stroke(Path{{{0, 0}, {3, 0}}}, 4);
    CHECK(g.n == 4);
    CHECK(g.scale == doctest::Approx(3.0));
    CHECK(g.deltas(0, 0) == 0.0);
    CHECK(g.deltas(0, 1) == 0.0);
    for (int i = 1; i < 4; ++i) {
        CHECK(g.deltas(i, 0) * g.scale == doctest::Approx(1.0));
        CHECK(g.deltas(i, 1) == doctest::Approx(0.0));
    }
    CHECK_THROWS_AS(resample_stroke(Path{{{1, 1}, {1, 1}}}, 4), GeometryError);
    CHECK_THROWS(resample_stroke(Path{{{0, 0}, {3, 0}}}, 6));
}

TEST_CASE("resampled points are equidistant and round trip through deltas")
{
    const auto g = resample_stroke(half_circle(10.0), 32);
    const Path back = deltas_to_path(g.deltas, g.scale);
    REQUIRE(back.size() == 32);
    CHECK(back.points[0] == Vec2{0, 0});
    // Arc-length spacing of the half circle is pi*r/31; chords are slightly shorter.
    const double chord = 2 * 10.0 * std::sin(std::numbers::pi / 31 / 2);
    for (int i = 0; i + 1 < 32; ++i)
        CHECK(oracle::dist(back.points[i], back.points[i + 1]) == doctest::Approx(chord).epsilon(0.01));
    CHECK(bounding_box(back.points).diagonal() == doctest::Approx(g.scale));
}

TEST_CASE("stroke edges follow chain plus hub")
{
    const auto e4 = stroke_edges(4);
    CHECK(e4.size() == 5);
    std::set<std::pair<int, int>> got;
    for (auto [a, b] : e4)
        got.insert({std::min(a, b) + 1, std::max(a, b) + 1});
    CHECK(got == std::set<std::pair<int, int>>{{1, 2}, {2, 3}, {3, 4}, {1, 3}, {1, 4}});
    for (int n : {8, 16, 32})
        CHECK(stroke_edges(n).size() == static_cast<std::size_t>(2 * n - 3));
}

TEST_CASE("gcn layer examples")
{
    // Lone vertex: normalized self loop is 1.
    Matrix h(1, 2);
    h << 0.7, 1.9;
    const Matrix out = gcn_layer(h, Matrix::Zero(1, 1), Matrix::Identity(2, 2), RowVector::Zero(2));
    CHECK(out(0, 0) == doctest::Approx(0.7));
    CHECK(out(0, 1) == doctest::Approx(1.9));

    CHECK(gcn_layer(Matrix::Zero(3, 2), adjacency_matrix(3, stroke_edges(3)), Matrix::Ones(2, 4),
                    RowVector::Zero(4))
              .isZero());

    // 3-vertex chain 0-1-2, degrees with self loops 2,3,2; H W = (1,2,3).
    Matrix a = Matrix::Zero(3, 3);
    a(0, 1) = a(1, 0) = a(1, 2) = a(2, 1) = 1;
    Matrix h3(3, 2);
    h3 << 1, 0, 0, 1, 1, 1;
    Matrix w(2, 1);
    w << 1, 2;
    const Matrix y = gcn_layer(h3, a, w, RowVector::Zero(1));
    const double s6 = std::sqrt(6.0);
    CHECK(y(0, 0) == doctest::Approx(0.5 * 1 + 2 / s6));
    CHECK(y(1, 0) == doctest::Approx(1 / s6 + 2.0 / 3.0 + 3 / s6));
    CHECK(y(2, 0) == doctest::Approx(2 / s6 + 0.5 * 3));
}

TEST_CASE("pairwise pooling")
{
    Matrix m(2, 2);
    m << 1, 5, 3, 2;
    const Matrix p = pool_pairwise(m);
    CHECK(p.rows() == 1);
    CHECK(p(0, 0) == 3);
    CHECK(p(0, 1) == 5);

    Matrix same = Matrix::Constant(6, 3, 2.5);
    CHECK(pool_pairwise(same) == Matrix::Constant(3, 3, 2.5));

    std::mt19937_64 rng(1);
    std::normal_distribution<double> nd;
    Matrix r(8, 5);
    for (Eigen::Index i = 0; i < r.size(); ++i)
        r.data()[i] = nd(rng);
    const Matrix pr = pool_pairwise(r);
    for (int i = 0; i < 4; ++i)
        for (int c = 0; c < 5; ++c)
            CHECK(pr(i, c) == std::max(r(2 * i, c), r(2 * i + 1, c)));
    CHECK_THROWS_AS(pool_pairwise(Matrix::Zero(3, 2)), ShapeError);
}

TEST_CASE("encode and decode agree with the plain-loop reference")
{
    const ModelDims tiny{8, 2, 2, 2, 3, 4};
    const auto g = resample_stroke(half_circle(4.0), 8);

    // Zero weights: outputs are the bias slices.
    auto zero = ModelParams::zeros(tiny);
    zero.enc_fc.bias << 0.1, -0.2, 0.3, -0.4;
    const auto ez = encode(g, zero);
    CHECK(ez.mu[0] == doctest::Approx(0.1));
    CHECK(ez.mu[1] == doctest::Approx(-0.2));
    CHECK(ez.logvar[0] == doctest::Approx(0.3));
    CHECK(ez.logvar[1] == doctest::Approx(-0.4));
    zero.dec_fc3.bias.setLinSpaced(16, 0.0, 1.5);
    const Matrix dz = decode(RowVector::Zero(2), zero);
    REQUIRE(dz.rows() == 8);
    REQUIRE(dz.cols() == 2);
    CHECK(dz(3, 1) == doctest::Approx(0.7));

    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto p = random_params(tiny, seed);
        const auto want = reference_encode(g, p);
        const auto enc = encode(g, p);
        for (int i = 0; i < 2; ++i) {
            CHECK(enc.mu[i] == doctest::Approx(want[i]).epsilon(1e-12));
            CHECK(enc.logvar[i] == doctest::Approx(want[2 + i]).epsilon(1e-12));
        }
        const std::vector<double> z{0.3 * seed, -0.7};
        const auto dec_want = reference_decode(z, p);
        RowVector zv(2);
        zv << z[0], z[1];
        const Matrix dec = decode(zv, p);
        for (int i = 0; i < 8; ++i)
            for (int c = 0; c < 2; ++c)
                CHECK(dec(i, c) == doctest::Approx(dec_want[2 * i + c]).epsilon(1e-12));
    }

    // Different strokes give different codes.
    const auto p = random_params(ModelDims{}, 3);
    const auto a = encode(resample_stroke(half_circle(5.0), 32), p);
    const auto b = encode(resample_stroke(Path{{{0, 0}, {3, 1}, {4, 7}}}, 32), p);
    CHECK((a.mu - b.mu).norm() > 1e-9);
}

TEST_CASE("loss examples")
{
    const Matrix t = Matrix::Ones(4, 2);
    CHECK(vae_loss(t, t, RowVector::Zero(2), RowVector::Zero(2), 1.0).total == 0.0);
    RowVector mu(2);
    mu << 1, 0;
    CHECK(vae_loss(t, t, mu, RowVector::Zero(2), 1.0).total == doctest::Approx(0.5));
    std::mt19937_64 rng(2);
    std::normal_distribution<double> nd;
    for (int i = 0; i < 50; ++i) {
        RowVector m(3), lv(3);
        for (int j = 0; j < 3; ++j)
            m[j] = nd(rng), lv[j] = 2 * nd(rng);
        CHECK(vae_loss(t, t, m, lv, 1.0).kl >= 0.0);
    }
    Matrix r = t;
    r(0, 0) = 3;
    CHECK(vae_loss(r, t, RowVector::Zero(2), RowVector::Zero(2), 0.0).reconstruction == doctest::Approx(0.5));
}

TEST_CASE("reparameterize")
{
    Rng rng(5);
    RowVector mu(3);
    mu << 1, -2, 0.5;
    const RowVector z = reparameterize(mu, RowVector::Constant(3, -100.0), rng);
    CHECK((z - mu).norm() < 1e-12);

    Rng a(17), b(17);
    CHECK(reparameterize(mu, RowVector::Zero(3), a) == reparameterize(mu, RowVector::Zero(3), b));

    Rng mc(123);
    const int samples = 10000;
    RowVector sum = RowVector::Zero(4), sq = RowVector::Zero(4);
    for (int i = 0; i < samples; ++i) {
        const RowVector s = reparameterize(RowVector::Zero(4), RowVector::Zero(4), mc);
        sum += s;
        sq += s.cwiseProduct(s);
    }
    for (int j = 0; j < 4; ++j) {
        const double mean = sum[j] / samples;
        CHECK(std::abs(mean) < 0.05);
        CHECK(std::abs(sq[j] / samples - mean * mean - 1.0) < 0.1);
    }
}

TEST_CASE("analytic gradients match finite differences")
{
    const ModelDims dims{8, 3, 4, 2, 6, 8};
    std::normal_distribution<double> nd;
    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
        Rng rng(seed * 101);
        Path p;
        for (int i = 0; i < 7; ++i)
            p.points.push_back({nd(rng) * 5, nd(rng) * 5});
        const auto g = resample_stroke(p, 8);
        RowVector eps(2);
        eps << nd(rng), nd(rng);
        CHECK(oracle::gradient_check(random_params(dims, seed), g, eps, 0.5).worst < 1e-3);
    }
}

TEST_CASE("training: zero epochs is the initialization, fixed seed is deterministic")
{
    const auto g = resample_stroke(half_circle(10.0), 8);
    TrainConfig cfg;
    cfg.dims = ModelDims{8, 4, 4, 2, 8, 8};
    cfg.rng_seed = 42;
    cfg.epochs = 0;
    const auto r0 = train({g}, cfg);
    Rng rng(42);
    const auto init = ModelParams::initialize(cfg.dims, rng);
    for (std::size_t i = 0; i < 6; ++i) {
        CHECK(r0.params.layers()[i]->weight == init.layers()[i]->weight);
        CHECK(r0.params.layers()[i]->bias == init.layers()[i]->bias);
    }
    CHECK(r0.loss_history.empty());

    cfg.epochs = 50;
    const auto r1 = train({g}, cfg), r2 = train({g}, cfg);
    CHECK(r1.loss_history == r2.loss_history);
    for (std::size_t i = 0; i < 6; ++i)
        CHECK(r1.params.layers()[i]->weight == r2.params.layers()[i]->weight);
    CHECK(r1.loss_history.back() < r1.loss_history.front());

    cfg.learning_rate = 0;
    CHECK_THROWS_AS(train({g}, cfg), std::invalid_argument);
}

TEST_CASE("sampling modes")
{
    TrainConfig cfg;
    cfg.rng_seed = 3;
    cfg.epochs = 300;
    const auto g = resample_stroke(half_circle(20.0), 32);
    const auto params = train({g}, cfg).params;
    Rng rng(1);
    const Path rec = reconstruct(g, params);
    CHECK(sample_variation(g, params, 0.0, rng).points == rec.points);

    Rng r1(9), r2(9);
    CHECK(sample_variation(g, params, 0.3, r1).points == sample_variation(g, params, 0.3, r2).points);

    const Path rnd = sample_random(params, 5.0, rng);
    CHECK(rnd.size() == 32);
    for (const auto& v : rnd.points)
        CHECK((std::isfinite(v.x) && std::isfinite(v.y)));
}

TEST_CASE("model json round trip keeps weights and templates")
{
    TrainConfig cfg;
    cfg.dims = ModelDims{8, 4, 4, 2, 8, 8};
    cfg.epochs = 5;
    cfg.rng_seed = 4;
    const auto g = resample_stroke(half_circle(3.0), 8);
    StrokeModel m{train({g}, cfg).params, cfg, {g}};
    const auto back = model_from_json(model_to_json(m));
    CHECK(back.params.dims == m.params.dims);
    for (std::size_t i = 0; i < 6; ++i) {
        CHECK(back.params.layers()[i]->weight == m.params.layers()[i]->weight);
        CHECK(back.params.layers()[i]->bias == m.params.layers()[i]->bias);
    }
    REQUIRE(back.templates.size() == 1);
    CHECK(back.templates[0].deltas == g.deltas);
    CHECK(back.templates[0].scale == g.scale);
    CHECK(back.train_config.rng_seed == 4);
    CHECK_THROWS(model_from_json(R"({"version": 99})"));
}

TEST_CASE("template sketch svg")
{
    const auto strokes = load_sketch_svg_file(LP_FIXTURE_DIR "/template_sketch.svg");
    CHECK(strokes.size() == 12);
    for (const auto& s : strokes)
        CHECK(s.size() >= 2);

    const auto simple = load_sketch_svg(R"(<svg><path d="M 0 0 L 10 0 l 0 5 M 3 3 H 8 V 9"/>
        <line x1="1" y1="2" x2="3" y2="4"/><polyline points="0,0 1,1 2,0"/></svg>)");
    REQUIRE(simple.size() == 4);
    CHECK(simple[0].points == std::vector<Vec2>{{0, 0}, {10, 0}, {10, 5}});
    CHECK(simple[1].points == std::vector<Vec2>{{3, 3}, {8, 3}, {8, 9}});
    CHECK(simple[2].points == std::vector<Vec2>{{1, 2}, {3, 4}});
    CHECK(simple[3].size() == 3);

    const auto circle = load_sketch_svg(R"(<svg><circle cx="5" cy="5" r="2"/></svg>)");
    REQUIRE(circle.size() == 1);
    for (const auto& v : circle[0].points)
        CHECK(oracle::dist(v, {5, 5}) == doctest::Approx(2.0));
}
