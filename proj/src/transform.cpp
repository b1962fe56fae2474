#include "mmfnet/transform.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>

namespace mmfnet::transform {

namespace {

Matrix build_basis(Index n) {
    Matrix basis(n, n);
    const double dc = std::sqrt(1.0 / static_cast<double>(n));
    const double ac = std::sqrt(2.0 / static_cast<double>(n));
    const Index period = 4 * n;
    for (Index k = 0; k < n; ++k) {
        const double scale = k == 0 ? dc : ac;
        for (Index t = 0; t < n; ++t) {
            // angle = pi (2t + 1) k / (2N), reduced exactly modulo 2 pi first
            const Index m = ((2 * t + 1) * k) % period;
            const double angle = std::numbers::pi * static_cast<double>(m) / static_cast<double>(2 * n);
            basis(k, t) = scale * std::cos(angle);
        }
    }
    return basis;
}

}  // namespace

const Matrix& dct_basis(Index n) {
    if (n < 1) {
        throw EmptyInputError();
    }
    static std::mutex mutex;
    static std::map<Index, std::unique_ptr<const Matrix>> cache;
    std::lock_guard lock(mutex);
    auto& slot = cache[n];
    if (!slot) {
        slot = std::make_unique<const Matrix>(build_basis(n));
    }
    return *slot;
}

Vector dct_row(std::span<const double> x) {
    const auto n = static_cast<Index>(x.size());
    const Matrix& basis = dct_basis(n);
    return basis * Eigen::Map<const Vector>(x.data(), n);
}

Vector idct_row(std::span<const double> coefficients) {
    const auto n = static_cast<Index>(coefficients.size());
    const Matrix& basis = dct_basis(n);
    return basis.transpose() * Eigen::Map<const Vector>(coefficients.data(), n);
}

void dct_rows_inplace(Eigen::Ref<Matrix> rows) {
    const Matrix& basis = dct_basis(rows.cols());
    Matrix out = rows * basis.transpose();
    rows = out;
}

void idct_rows_inplace(Eigen::Ref<Matrix> rows) {
    const Matrix& basis = dct_basis(rows.cols());
    Matrix out = rows * basis;
    rows = out;
}

SpectrumMatrix dct_matrix(const SegmentMatrix& segments) {
    SpectrumMatrix spectrum{segments.data, segments.scale_index};
    dct_rows_inplace(spectrum.data);
    return spectrum;
}

SegmentMatrix idct_matrix(const SpectrumMatrix& spectrum) {
    SegmentMatrix segments{spectrum.data, spectrum.scale_index};
    idct_rows_inplace(segments.data);
    return segments;
}

SegmentMatrix fragment(std::span<const double> x, Index segment_length, int scale_index) {
    const auto length = static_cast<Index>(x.size());
    if (segment_length < 1 || length % segment_length != 0) {
        throw DivisibilityError(static_cast<long>(segment_length), static_cast<long>(length));
    }
    const Index rows = length / segment_length;
    return {Eigen::Map<const Matrix>(x.data(), rows, segment_length), scale_index};
}

Vector defragment(const SegmentMatrix& segments) {
    return Eigen::Map<const Vector>(segments.data.data(), segments.data.size());
}

}  // namespace mmfnet::transform
