#include "mmfnet/selftest.hpp"

#include <cmath>
#include <sstream>

#include "mmfnet/model.hpp"
#include "mmfnet/rin.hpp"
#include "mmfnet/transform.hpp"

namespace mmfnet::selftest {

namespace {

std::string sci(double v) {
    std::ostringstream s;
    s.precision(2);
    s << std::scientific << v;
    return s.str();
}

SuiteResult dct_suite(const Hooks& hooks) {
    Rng rng(2024);
    double worst_orth = 0.0;
    double worst_trip = 0.0;
    for (Index n = 2; n <= 64; ++n) {
        const Matrix& g = transform::dct_basis(n);
        worst_orth = std::max(worst_orth, (g.transpose() * g - Matrix::Identity(n, n)).cwiseAbs().maxCoeff());
    }
    for (int trial = 0; trial < 200; ++trial) {
        const Index n = 2 + static_cast<Index>(rng.below(63));
        Vector x(n);
        for (Index i = 0; i < n; ++i) x[i] = rng.uniform(-1.0, 1.0);
        const Vector back = transform::idct_row(Vector(transform::dct_row(x) * hooks.dct_scale_fault));
        worst_trip = std::max(worst_trip, (back - x).cwiseAbs().maxCoeff());
    }
    const bool ok = worst_orth < 1e-10 && worst_trip < 1e-10;
    return {"dct_roundtrip", ok, "max|G^T G - I| = " + sci(worst_orth) + ", max round-trip error = " + sci(worst_trip)};
}

double loss_of(const model::ModelParams& p, const Matrix& x, const Matrix& w) {
    return (model::forward_batch(x, p).output.array() * w.array()).sum();
}

SuiteResult gradient_suite() {
    double worst = 0.0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        Rng rng(seed);
        const auto cfg = model::make_config(8, 4, {2, 8});
        model::ModelParams params = model::init_params(cfg, rng);
        for (auto& sp : params.scales) {
            for (Index k = 0; k < sp.mask.size(); ++k) sp.mask.data()[k] = rng.uniform(0.5, 1.5);
        }
        Matrix x(3, 8), w(3, 4);
        for (Index k = 0; k < x.size(); ++k) x.data()[k] = rng.normal();
        for (Index k = 0; k < w.size(); ++k) w.data()[k] = rng.normal();
        const auto trace = model::forward_batch(x, params);
        model::ModelParams grads = model::backward_batch(trace, w, params);

        model::ModelParams probe = params;
        const double h = 1e-5;
        model::for_each_tensor(probe, grads, [&](std::span<double> p, std::span<const double> g) {
            for (std::size_t i = 0; i < p.size(); ++i) {
                const double saved = p[i];
                p[i] = saved + h;
                const double up = loss_of(probe, x, w);
                p[i] = saved - h;
                const double down = loss_of(probe, x, w);
                p[i] = saved;
                const double numeric = (up - down) / (2.0 * h);
                const double rel = std::abs(numeric - g[i]) / std::max(1.0, std::abs(numeric));
                worst = std::max(worst, rel);
            }
        });
    }
    return {"gradient_check", worst < 1e-4, "max relative error = " + sci(worst)};
}

SuiteResult rin_suite() {
    Rng rng(7);
    double worst_trip = 0.0;
    double worst_mean = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        Matrix x(96, 3);
        for (Index k = 0; k < x.size(); ++k) x.data()[k] = 10.0 * rng.normal() + 5.0;
        for (bool use_std : {false, true}) {
            auto [normalized, state] = rin::rin_forward(x, use_std);
            worst_mean = std::max(worst_mean, normalized.colwise().mean().cwiseAbs().maxCoeff());
            worst_trip = std::max(worst_trip, (rin::rin_inverse(normalized, state) - x).cwiseAbs().maxCoeff());
        }
    }
    const bool ok = worst_trip < 1e-12 && worst_mean < 1e-12;
    return {"rin_roundtrip", ok, "max round-trip error = " + sci(worst_trip) + ", max column mean = " + sci(worst_mean)};
}

SuiteResult mask_identity_suite() {
    Rng rng(11);
    const auto on = model::make_config(24, 6, {2, 6, 24}, true);
    model::ModelParams masked = model::init_params(on, rng);
    model::ModelParams unmasked = masked;
    unmasked.config.mask_enabled = false;
    Matrix x(5, 24);
    for (Index k = 0; k < x.size(); ++k) x.data()[k] = rng.normal();
    const Matrix a = model::forward_batch(x, masked).output;
    const Matrix b = model::forward_batch(x, unmasked).output;
    const bool ok = a == b;
    return {"mask_identity", ok, ok ? "bitwise equal" : "outputs differ"};
}

}  // namespace

std::vector<SuiteResult> run_selftest(const Hooks& hooks) {
    return {dct_suite(hooks), gradient_suite(), rin_suite(), mask_identity_suite()};
}

}  // namespace mmfnet::selftest
