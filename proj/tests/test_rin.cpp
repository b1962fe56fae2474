#include "doctest.h"

#include "mmfnet/rin.hpp"
#include "oracles.hpp"

using namespace mmfnet;
using namespace mmfnet::rin;

TEST_CASE("mean removal") {
    const auto [out, st] = rin_forward((Matrix(3, 1) << 1, 2, 3).finished());
    CHECK(out == (Matrix(3, 1) << -1, 0, 1).finished());
    CHECK(st.mean(0) == 2.0);
    CHECK(st.scale(0) == 1.0);
    CHECK_FALSE(st.use_std);
}

TEST_CASE("constant column with std scaling stays finite") {
    const auto [out, st] = rin_forward((Matrix(2, 1) << 5, 5).finished(), true, 1e-8);
    CHECK(out == Matrix::Zero(2, 1));
    CHECK(st.scale(0) == 1e-8);
}

TEST_CASE("zero-mean columns on random data") {
    Rng rng(21);
    const Matrix x = oracle::random_matrix(rng, 720, 7, 4.0).array() + 3.0;
    for (bool use_std : {false, true}) {
        const auto [out, st] = rin_forward(x, use_std);
        CHECK(out.colwise().mean().cwiseAbs().maxCoeff() < 1e-12);
        if (use_std) {
            const Vector sd = (out.array().square().colwise().mean()).sqrt().transpose();
            CHECK(oracle::max_abs(Vector(sd - Vector::Ones(7))) < 1e-12);
        }
    }
}

TEST_CASE("inverse") {
    RinState st;
    st.mean = (Vector(1) << 2).finished();
    st.scale = Vector::Ones(1);
    CHECK(rin_inverse(Matrix::Zero(2, 1), st) == (Matrix(2, 1) << 2, 2).finished());

    Rng rng(22);
    const Matrix x = oracle::random_matrix(rng, 96, 3, 10.0).array() - 4.0;
    for (bool use_std : {false, true}) {
        const auto [out, state] = rin_forward(x, use_std);
        CHECK(oracle::max_abs(Matrix(rin_inverse(out, state) - x)) < 1e-12);
    }
}

TEST_CASE("forward of an inverse recovers the stored statistics") {
    Rng rng(23);
    const Matrix pred = oracle::random_matrix(rng, 50, 4);
    const auto [centered, _] = rin_forward(pred, true);
    RinState st;
    st.use_std = true;
    st.mean = oracle::random_vector(rng, 4);
    st.scale = oracle::random_vector(rng, 4).cwiseAbs().array() + 0.5;
    const auto [again, st2] = rin_forward(rin_inverse(centered, st), true);
    CHECK(oracle::max_abs(Vector(st2.mean - st.mean)) < 1e-12);
    CHECK(oracle::max_abs(Vector(st2.scale - st.scale)) < 1e-12);
    CHECK(oracle::max_abs(Matrix(again - centered)) < 1e-12);
}
