#pragma once

#include <cstddef>
#include <span>

/// Dense float64 kernels behind the autodiff ops.
///
/// `serial::` is the reference implementation, `parallel::` splits the output
/// rows across OpenMP threads. Every output element is accumulated in the same
/// order by both, so their results are bitwise identical regardless of the
/// thread count. The top-level functions dispatch between them.
namespace metaload::kernels {

struct GemmShape {
  std::size_t m = 0;  // rows of op(A) and C
  std::size_t n = 0;  // cols of op(B) and C
  std::size_t k = 0;  // contraction length
  bool trans_a = false;
  bool trans_b = false;
};

namespace serial {
/// C = op(A) * op(B). A is stored [m,k] (or [k,m] when transposed), B [k,n] (or [n,k]).
void gemm(const GemmShape& s, std::span<const double> a, std::span<const double> b, std::span<double> c);
}  // namespace serial

namespace parallel {
void gemm(const GemmShape& s, std::span<const double> a, std::span<const double> b, std::span<double> c);
}  // namespace parallel

/// Work (m*n*k) above which gemm() uses the parallel kernel, when not already
/// inside a parallel region and more than one thread is available.
inline constexpr std::size_t kParallelGemmWork = std::size_t{1} << 18;

void gemm(const GemmShape& s, std::span<const double> a, std::span<const double> b, std::span<double> c);

/// Threads an OpenMP parallel region would use here (1 without OpenMP).
int max_threads();

}  // namespace metaload::kernels
