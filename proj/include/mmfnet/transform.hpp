#pragma once

#include <span>

#include "mmfnet/core.hpp"

namespace mmfnet::transform {

/**
 * Orthonormal DCT-II / DCT-III pair.
 *
 *   X_k = a_k * sum_n x_n cos(pi/N (n + 1/2) k),   a_0 = sqrt(1/N), a_k = sqrt(2/N)
 *   x_n = sum_k a_k X_k cos(pi/N (n + 1/2) k)
 *
 * The unnormalized textbook kernels are inverses only up to 2/N; with this
 * scaling the basis matrix G (G(k, n) = a_k cos(...)) is orthogonal, the
 * inverse is G^T and Parseval holds exactly.
 */

/// Segments of one scale: row i holds samples [i*s, (i+1)*s) of the source.
struct SegmentMatrix {
    Matrix data;  // (n_segments, segment_length)
    int scale_index = 0;
};

/// Per-row DCT coefficients of a SegmentMatrix.
struct SpectrumMatrix {
    Matrix data;
    int scale_index = 0;
};

/// The N x N orthonormal DCT-II basis, cached per N. Thread-safe.
const Matrix& dct_basis(Index n);

Vector dct_row(std::span<const double> x);
Vector idct_row(std::span<const double> coefficients);

inline Vector dct_row(const Vector& x) { return dct_row(std::span<const double>(x.data(), x.size())); }
inline Vector idct_row(const Vector& c) { return idct_row(std::span<const double>(c.data(), c.size())); }

SpectrumMatrix dct_matrix(const SegmentMatrix& segments);
SegmentMatrix idct_matrix(const SpectrumMatrix& spectrum);

/// Row-wise transforms applied in place to every row of `rows`.
void dct_rows_inplace(Eigen::Ref<Matrix> rows);
void idct_rows_inplace(Eigen::Ref<Matrix> rows);

SegmentMatrix fragment(std::span<const double> x, Index segment_length, int scale_index = 0);
inline SegmentMatrix fragment(const Vector& x, Index segment_length, int scale_index = 0) {
    return fragment(std::span<const double>(x.data(), x.size()), segment_length, scale_index);
}

Vector defragment(const SegmentMatrix& segments);

}  // namespace mmfnet::transform
