#include "metaload/kernels/dense.hpp"

#include <algorithm>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace metaload::kernels {
namespace {

// Row i of C. Each element accumulates over p = 0..k-1 in ascending order,
// which is what keeps the serial and parallel kernels bitwise identical.
inline void gemm_row(const GemmShape& s, const double* a, const double* b, double* c, std::size_t i) {
  const std::size_t m = s.m, n = s.n, k = s.k;
  double* crow = c + i * n;
  std::fill(crow, crow + n, 0.0);
  if (!s.trans_a && !s.trans_b) {
    const double* arow = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = arow[p];
      const double* brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  } else if (!s.trans_a && s.trans_b) {
    const double* arow = a + i * k;
    for (std::size_t j = 0; j < n; ++j) {
      const double* brow = b + j * k;
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) acc += arow[p] * brow[p];
      crow[j] = acc;
    }
  } else if (s.trans_a && !s.trans_b) {
    for (std::size_t p = 0; p < k; ++p) {
      const double av = a[p * m + i];
      const double* brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  } else {
    for (std::size_t j = 0; j < n; ++j) {
      const double* brow = b + j * k;
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) acc += a[p * m + i] * brow[p];
      crow[j] = acc;
    }
  }
}

}  // namespace

namespace serial {
void gemm(const GemmShape& s, std::span<const double> a, std::span<const double> b, std::span<double> c) {
  for (std::size_t i = 0; i < s.m; ++i) gemm_row(s, a.data(), b.data(), c.data(), i);
}
}  // namespace serial

namespace parallel {
void gemm(const GemmShape& s, std::span<const double> a, std::span<const double> b, std::span<double> c) {
  const auto rows = static_cast<std::ptrdiff_t>(s.m);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (std::ptrdiff_t i = 0; i < rows; ++i) {
    gemm_row(s, a.data(), b.data(), c.data(), static_cast<std::size_t>(i));
  }
}
}  // namespace parallel

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void gemm(const GemmShape& s, std::span<const double> a, std::span<const double> b, std::span<double> c) {
#ifdef _OPENMP
  if (s.m * s.n * s.k >= kParallelGemmWork && !omp_in_parallel() && omp_get_max_threads() > 1) {
    parallel::gemm(s, a, b, c);
    return;
  }
#endif
  serial::gemm(s, a, b, c);
}

}  // namespace metaload::kernels
