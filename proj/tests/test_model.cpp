#include "doctest.h"

#include "mmfnet/model.hpp"
#include "mmfnet/transform.hpp"
#include "oracles.hpp"

using namespace mmfnet;
using namespace mmfnet::model;

namespace {

ModelParams random_params(const ModelConfig& cfg, std::uint64_t seed) {
    Rng rng(seed);
    ModelParams p = init_params(cfg, rng);
    for (auto& s : p.scales) {
        s.mask = oracle::random_matrix(rng, s.mask.rows(), s.mask.cols()).array() + 1.0;
        s.weight = oracle::random_matrix(rng, s.weight.rows(), s.weight.cols(), 0.3);
        s.bias = oracle::random_vector(rng, s.bias.size(), 0.3);
    }
    return p;
}

double weighted_output(const Matrix& x, const ModelParams& p, const Matrix& r) {
    return forward_batch(x, p).output.cwiseProduct(r).sum();
}

}  // namespace

TEST_CASE("parameter counts") {
    CHECK(param_count(make_config(8, 4, {2, 8})) == 88);
    CHECK(param_count(make_config(8, 4, {2, 8}, false)) == 88 - 16);
    const std::int64_t expected = 3 * 720 + 3 * (96 * 720 + 96);
    CHECK(expected == 209808);
    CHECK(param_count(make_config(720, 96, {2, 24, 720})) == expected);

    Rng rng(1);
    CHECK(param_count(init_params(make_config(720, 96, {2, 24, 720}), rng)) == expected);
}

TEST_CASE("config validation") {
    CHECK_THROWS_AS(make_config(8, 0, {2}), ConfigError);
    CHECK_THROWS_AS(make_config(8, 4, {3}), DivisibilityError);
}

TEST_CASE("initialization") {
    const auto cfg = make_config(720, 96, {2, 24, 720});
    Rng a(5), b(5);
    const ModelParams pa = init_params(cfg, a);
    const ModelParams pb = init_params(cfg, b);
    REQUIRE(pa.scales.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(pa.scales[i].mask == pb.scales[i].mask);
        CHECK(pa.scales[i].weight == pb.scales[i].weight);
        CHECK(pa.scales[i].bias == pb.scales[i].bias);
        CHECK((pa.scales[i].mask.array() == 1.0).all());
    }
    CHECK(pa.scales[1].mask.rows() == 30);
    CHECK(pa.scales[1].mask.cols() == 24);

    const auto small = make_config(16, 4, {4, 16});
    const double bound = 1.0 / std::sqrt(16.0);
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        Rng r(seed);
        for (const auto& s : init_params(small, r).scales) {
            CHECK(s.weight.cwiseAbs().maxCoeff() <= bound);
            CHECK(s.bias.cwiseAbs().maxCoeff() <= bound);
        }
    }
}

TEST_CASE("zero head predicts zero") {
    const auto cfg = make_config(24, 12, {4, 24});
    Rng rng(2);
    ModelParams p = init_params(cfg, rng);
    for (auto& s : p.scales) {
        s.weight.setZero();
        s.bias.setZero();
    }
    const auto [y, trace] = forward(oracle::random_vector(rng, 24), p);
    CHECK(y == Vector::Zero(12));
}

TEST_CASE("a head built from a time-domain map reproduces that map") {
    const Index L = 32;
    Rng rng(3);
    const Vector x = oracle::random_vector(rng, L);

    auto with_map = [&](const Matrix& a) {
        ModelParams p = init_params(make_config(L, a.rows(), {L}), rng);
        p.scales[0].weight = transform::dct_basis(a.rows()) * a * transform::dct_basis(L).transpose();
        p.scales[0].bias.setZero();
        return forward(x, p).first;
    };

    CHECK(oracle::max_abs(Vector(with_map(Matrix::Identity(L, L)) - x)) < 1e-9);

    Matrix repeat_last = Matrix::Zero(8, L);
    repeat_last.col(L - 1).setOnes();
    CHECK(oracle::max_abs(Vector(with_map(repeat_last) - Vector::Constant(8, x(L - 1)))) < 1e-9);
}

TEST_CASE("forward is affine in the input") {
    const auto cfg = make_config(24, 6, {2, 6, 24});
    ModelParams p = random_params(cfg, 4);
    Rng rng(40);
    const Vector x = oracle::random_vector(rng, 24);
    const Vector y = oracle::random_vector(rng, 24);
    const double a = 1.7, b = -0.4;
    const Vector f0 = forward(Vector(Vector::Zero(24)), p).first;
    const Vector lhs = forward(Vector(a * x + b * y), p).first - f0;
    const Vector rhs = a * (forward(x, p).first - f0) + b * (forward(y, p).first - f0);
    CHECK(oracle::max_abs(Vector(lhs - rhs)) < 1e-9);

    for (auto& s : p.scales) s.bias.setZero();
    const Vector g = forward(Vector(a * x + b * y), p).first;
    CHECK(oracle::max_abs(Vector(g - a * forward(x, p).first - b * forward(y, p).first)) < 1e-9);
}

TEST_CASE("batched forward equals the per-sample sum of scale contributions") {
    const auto cfg = make_config(24, 6, {2, 6, 24});
    const ModelParams p = random_params(cfg, 5);
    Rng rng(50);
    const Matrix x = oracle::random_matrix(rng, 3, 24);
    const ForwardTrace t = forward_batch(x, p);

    for (Index b = 0; b < 3; ++b) {
        Vector expected = Vector::Zero(6);
        for (std::size_t i = 0; i < 3; ++i) {
            const Index s = cfg.ladder.segment_lengths()[i];
            const auto seg = transform::fragment(Vector(x.row(b).transpose()), s);
            const Matrix masked = transform::dct_matrix(seg).data.cwiseProduct(p.scales[i].mask);
            const Vector flat = transform::defragment({masked, 0});
            expected += oracle::naive_idct(p.scales[i].weight * flat + p.scales[i].bias);
        }
        CHECK(oracle::max_abs(Vector(t.output.row(b).transpose() - expected)) < 1e-12);
    }

    Matrix summed = Matrix::Zero(3, 6);
    for (std::size_t i = 0; i < 3; ++i) summed += t.scale_prediction(i);
    CHECK(oracle::max_abs(Matrix(summed - t.output)) < 1e-12);

    const Matrix grid = t.spectrum_grid(cfg, 1, 2);
    CHECK(grid.rows() == 4);
    CHECK(grid.cols() == 6);
}

TEST_CASE("mask of ones is bitwise identical to a disabled mask") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto on = make_config(24, 8, {2, 24});
        const auto off = make_config(24, 8, {2, 24}, false);
        Rng r1(seed), r2(seed);
        const ModelParams pon = init_params(on, r1);
        const ModelParams poff = init_params(off, r2);
        Rng rng(seed + 100);
        const Matrix x = oracle::random_matrix(rng, 5, 24);
        CHECK(forward_batch(x, pon).output == forward_batch(x, poff).output);
    }
}

TEST_CASE("channels share parameters and stay independent") {
    const auto cfg = make_config(16, 4, {4, 16});
    const ModelParams p = random_params(cfg, 6);
    Rng rng(60);
    const Vector a = oracle::random_vector(rng, 16);
    const Vector b = oracle::random_vector(rng, 16);

    Matrix same(16, 2);
    same << a, a;
    const Matrix ys = forward_multichannel(same, p);
    CHECK(ys.col(0) == ys.col(1));

    Matrix ab(16, 2), ba(16, 2);
    ab << a, b;
    ba << b, a;
    const Matrix yab = forward_multichannel(ab, p);
    const Matrix yba = forward_multichannel(ba, p);
    CHECK(yab.col(0) == yba.col(1));
    CHECK(yab.col(1) == yba.col(0));

    const Matrix y1 = forward_multichannel(Matrix(a), p);
    CHECK(oracle::max_abs(Vector(y1.col(0) - forward(a, p).first)) < 1e-14);
}

TEST_CASE("zero upstream gradient gives zero gradients") {
    const auto cfg = make_config(8, 4, {2, 8});
    const ModelParams p = random_params(cfg, 7);
    Rng rng(70);
    const Matrix x = oracle::random_matrix(rng, 3, 8);
    const ModelParams g = backward_batch(forward_batch(x, p), Matrix::Zero(3, 4), p);
    for (const auto& s : g.scales) {
        CHECK(s.mask.isZero(0.0));
        CHECK(s.weight.isZero(0.0));
        CHECK(s.bias.isZero(0.0));
    }
}

TEST_CASE("analytic gradients match central differences") {
    const auto cfg = make_config(8, 4, {2, 8});
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        ModelParams p = random_params(cfg, seed);
        Rng rng(seed + 1000);
        const Matrix x = oracle::random_matrix(rng, 3, 8);
        const Matrix r = oracle::random_matrix(rng, 3, 4);
        const ModelParams g = backward_batch(forward_batch(x, p), r, p);

        double worst = 0.0;
        for_each_tensor(p, g, [&](std::span<double> values, std::span<const double> grads) {
            for (std::size_t i = 0; i < values.size(); ++i) {
                const double numeric =
                    oracle::central_difference(&values[i], [&] { return weighted_output(x, p, r); });
                worst = std::max(worst, std::abs(numeric - grads[i]) / std::max(1.0, std::abs(numeric)));
            }
        });
        CHECK(worst < 1e-4);
    }
}

TEST_CASE("disabled mask drops mask gradients but keeps head gradients") {
    const auto on = make_config(8, 4, {2, 8});
    const auto off = make_config(8, 4, {2, 8}, false);
    Rng r1(9), r2(9);
    const ModelParams pon = init_params(on, r1);
    const ModelParams poff = init_params(off, r2);
    Rng rng(90);
    const Matrix x = oracle::random_matrix(rng, 4, 8);
    const Matrix r = oracle::random_matrix(rng, 4, 4);
    const ModelParams gon = backward_batch(forward_batch(x, pon), r, pon);
    const ModelParams goff = backward_batch(forward_batch(x, poff), r, poff);
    for (std::size_t i = 0; i < 2; ++i) {
        CHECK((goff.scales[i].mask.size() == 0 || goff.scales[i].mask.isZero(0.0)));
        CHECK(oracle::max_abs(Matrix(goff.scales[i].weight - gon.scales[i].weight)) < 1e-14);
        CHECK(oracle::max_abs(Vector(goff.scales[i].bias - gon.scales[i].bias)) < 1e-14);
    }
}

TEST_CASE("single-sample backward agrees with batched backward") {
    const auto cfg = make_config(8, 4, {2, 8});
    const ModelParams p = random_params(cfg, 10);
    Rng rng(100);
    const Vector x = oracle::random_vector(rng, 8);
    const Vector r = oracle::random_vector(rng, 4);
    const auto [y, trace] = forward(x, p);
    const ModelParams g1 = backward(trace, r, p);
    const ModelParams g2 = backward_batch(forward_batch(Matrix(x.transpose()), p), Matrix(r.transpose()), p);
    for (std::size_t i = 0; i < 2; ++i) {
        CHECK(oracle::max_abs(Matrix(g1.scales[i].weight - g2.scales[i].weight)) < 1e-14);
        CHECK(oracle::max_abs(Matrix(g1.scales[i].mask - g2.scales[i].mask)) < 1e-14);
    }
}
