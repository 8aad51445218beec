// Compiled with -mavx512f -mfma. Only reached after a CPUID check.

#include <immintrin.h>

#include <cmath>

#include "kernels_internal.hpp"
#include "ltd/simd/kernels.hpp"

namespace ltd::simd {
namespace {

double dot_avx512(const double* a, const double* b, std::size_t n) {
  __m512d s0 = _mm512_setzero_pd();
  __m512d s1 = _mm512_setzero_pd();
  __m512d s2 = _mm512_setzero_pd();
  __m512d s3 = _mm512_setzero_pd();
  std::size_t i = 0;
  for (; i + 32 <= n; i += 32) {
    s0 = _mm512_fmadd_pd(_mm512_loadu_pd(a + i), _mm512_loadu_pd(b + i), s0);
    s1 = _mm512_fmadd_pd(_mm512_loadu_pd(a + i + 8), _mm512_loadu_pd(b + i + 8), s1);
    s2 = _mm512_fmadd_pd(_mm512_loadu_pd(a + i + 16), _mm512_loadu_pd(b + i + 16), s2);
    s3 = _mm512_fmadd_pd(_mm512_loadu_pd(a + i + 24), _mm512_loadu_pd(b + i + 24), s3);
  }
  for (; i + 8 <= n; i += 8) {
    s0 = _mm512_fmadd_pd(_mm512_loadu_pd(a + i), _mm512_loadu_pd(b + i), s0);
  }
  if (i < n) {
    const __mmask8 mask = static_cast<__mmask8>((1u << (n - i)) - 1u);
    s1 = _mm512_fmadd_pd(_mm512_maskz_loadu_pd(mask, a + i), _mm512_maskz_loadu_pd(mask, b + i),
                         s1);
  }
  return _mm512_reduce_add_pd(_mm512_add_pd(_mm512_add_pd(s0, s1), _mm512_add_pd(s2, s3)));
}

void axpy_avx512(double alpha, const double* x, double* y, std::size_t n) {
  const __m512d va = _mm512_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    _mm512_storeu_pd(y + i, _mm512_fmadd_pd(va, _mm512_loadu_pd(x + i), _mm512_loadu_pd(y + i)));
  }
  if (i < n) {
    const __mmask8 mask = static_cast<__mmask8>((1u << (n - i)) - 1u);
    const __m512d xv = _mm512_maskz_loadu_pd(mask, x + i);
    const __m512d yv = _mm512_maskz_loadu_pd(mask, y + i);
    _mm512_mask_storeu_pd(y + i, mask, _mm512_fmadd_pd(va, xv, yv));
  }
}

struct MicroAvx512 {
  static constexpr std::size_t MR = 8;
  static constexpr std::size_t NR = 16;
  static void run(std::size_t kc, const double* ap, const double* bp, double* acc) {
    __m512d c[MR][2];
    for (auto& row : c) row[0] = row[1] = _mm512_setzero_pd();
    for (std::size_t p = 0; p < kc; ++p) {
      const __m512d b0 = _mm512_loadu_pd(bp);
      const __m512d b1 = _mm512_loadu_pd(bp + 8);
      for (std::size_t r = 0; r < MR; ++r) {
        const __m512d a = _mm512_set1_pd(ap[r]);
        c[r][0] = _mm512_fmadd_pd(a, b0, c[r][0]);
        c[r][1] = _mm512_fmadd_pd(a, b1, c[r][1]);
      }
      ap += MR;
      bp += NR;
    }
    for (std::size_t r = 0; r < MR; ++r) {
      _mm512_store_pd(acc + r * NR, c[r][0]);
      _mm512_store_pd(acc + r * NR + 8, c[r][1]);
    }
  }
};

void gemm_avx512(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k, double alpha,
                 const double* a, std::size_t lda, const double* b, std::size_t ldb, double beta,
                 double* c, std::size_t ldc) {
  detail::scale_c(m, n, beta, c, ldc);
  if (alpha == 0.0 || k == 0 || m == 0 || n == 0) return;
  if (m < 4) {
    small_m_gemm(ta, tb, m, n, k, alpha, a, lda, b, ldb, c, ldc, dot_avx512, axpy_avx512);
    return;
  }
  packed_gemm<MicroAvx512>(ta, tb, m, n, k, alpha, a, lda, b, ldb, c, ldc);
}

void adam_avx512(double* param, const double* grad, double* m, double* v, std::size_t n,
                 const AdamCoeffs& c) {
  const __m512d b1 = _mm512_set1_pd(c.beta1);
  const __m512d b2 = _mm512_set1_pd(c.beta2);
  const __m512d omb1 = _mm512_set1_pd(1.0 - c.beta1);
  const __m512d omb2 = _mm512_set1_pd(1.0 - c.beta2);
  const __m512d step = _mm512_set1_pd(c.step_size);
  const __m512d bc2 = _mm512_set1_pd(c.inv_sqrt_bc2);
  const __m512d eps = _mm512_set1_pd(c.eps);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m512d g = _mm512_loadu_pd(grad + i);
    const __m512d mi = _mm512_add_pd(_mm512_mul_pd(b1, _mm512_loadu_pd(m + i)),
                                     _mm512_mul_pd(omb1, g));
    const __m512d vi = _mm512_add_pd(_mm512_mul_pd(b2, _mm512_loadu_pd(v + i)),
                                     _mm512_mul_pd(_mm512_mul_pd(omb2, g), g));
    _mm512_storeu_pd(m + i, mi);
    _mm512_storeu_pd(v + i, vi);
    const __m512d denom = _mm512_add_pd(_mm512_mul_pd(_mm512_sqrt_pd(vi), bc2), eps);
    const __m512d upd = _mm512_div_pd(_mm512_mul_pd(step, mi), denom);
    _mm512_storeu_pd(param + i, _mm512_sub_pd(_mm512_loadu_pd(param + i), upd));
  }
  for (; i < n; ++i) {
    const double g = grad[i];
    m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g;
    v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g * g;
    param[i] -= c.step_size * m[i] / (std::sqrt(v[i]) * c.inv_sqrt_bc2 + c.eps);
  }
}

}  // namespace

namespace detail {

const KernelTable* avx512_table() {
  static const KernelTable table{Isa::kAvx512, "avx512", dot_avx512, axpy_avx512, gemm_avx512,
                                 adam_avx512};
  return &table;
}

}  // namespace detail
}  // namespace ltd::simd
