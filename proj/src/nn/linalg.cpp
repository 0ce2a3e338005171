#include "bitwave/linalg.hpp"

#include <algorithm>

namespace bitwave::nn::linalg {

void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c,
             bool accumulate) {
  if (!accumulate) std::fill(c, c + m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = c + i * n;
    const double* arow = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = arow[p];
      const double* brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c,
             bool accumulate) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a + i * k;
    double* crow = c + i * n;
    for (std::size_t j = 0; j < n; ++j) {
      const double* brow = b + j * k;
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) acc += arow[p] * brow[p];
      crow[j] = accumulate ? crow[j] + acc : acc;
    }
  }
}

void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c,
             bool accumulate) {
  if (!accumulate) std::fill(c, c + m * n, 0.0);
  for (std::size_t p = 0; p < k; ++p) {
    const double* arow = a + p * m;
    const double* brow = b + p * n;
    for (std::size_t i = 0; i < m; ++i) {
      const double av = arow[i];
      double* crow = c + i * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

void gemv(std::size_t m, std::size_t n, const double* a, const double* x, double* y, bool accumulate) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* row = a + i * n;
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) acc += row[j] * x[j];
    y[i] = accumulate ? y[i] + acc : acc;
  }
}

void gemv_t(std::size_t m, std::size_t n, const double* a, const double* x, double* y, bool accumulate) {
  if (!accumulate) std::fill(y, y + n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    const double xv = x[i];
    const double* row = a + i * n;
    for (std::size_t j = 0; j < n; ++j) y[j] += xv * row[j];
  }
}

void ger(std::size_t m, std::size_t n, const double* x, const double* y, double* a) {
  for (std::size_t i = 0; i < m; ++i) {
    const double xv = x[i];
    double* row = a + i * n;
    for (std::size_t j = 0; j < n; ++j) row[j] += xv * y[j];
  }
}

}  // namespace bitwave::nn::linalg
