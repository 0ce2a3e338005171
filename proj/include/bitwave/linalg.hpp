#pragma once

#include <cstddef>

namespace bitwave::nn::linalg {

// Row-major GEMM kernels: C = beta*C + A*B with the named transposes.
// Dimensions are those of the logical product: C is m x n, inner size k.

/// A: m x k, B: k x n
void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c,
             bool accumulate);
/// A: m x k, B: n x k
void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c,
             bool accumulate);
/// A: k x m, B: k x n
void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c,
             bool accumulate);

/// y = beta*y + A x, A: m x n
void gemv(std::size_t m, std::size_t n, const double* a, const double* x, double* y, bool accumulate);
/// y = beta*y + A^T x, A: m x n
void gemv_t(std::size_t m, std::size_t n, const double* a, const double* x, double* y, bool accumulate);
/// A += x y^T, A: m x n
void ger(std::size_t m, std::size_t n, const double* x, const double* y, double* a);

}  // namespace bitwave::nn::linalg
