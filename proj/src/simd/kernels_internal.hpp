#pragma once

// Shared pieces for the per-ISA translation units. The packed GEMM driver is
// a template instantiated separately in each SIMD TU (each compiled with its
// own target flags), so it lives in an anonymous namespace.

#include <algorithm>
#include <cstddef>
#include <vector>

#include "ltd/simd/kernels.hpp"

namespace ltd::simd::detail {

void scale_c(std::size_t m, std::size_t n, double beta, double* c, std::size_t ldc);

const KernelTable* avx2_table();
const KernelTable* avx512_table();

}  // namespace ltd::simd::detail

namespace {

constexpr std::size_t kBlockK = 256;
constexpr std::size_t kBlockM = 128;
constexpr std::size_t kBlockN = 1024;

inline double elem_a(ltd::simd::Trans ta, const double* a, std::size_t lda, std::size_t i,
                     std::size_t p) {
  return ta == ltd::simd::Trans::kNo ? a[i * lda + p] : a[p * lda + i];
}

inline double elem_b(ltd::simd::Trans tb, const double* b, std::size_t ldb, std::size_t p,
                     std::size_t j) {
  return tb == ltd::simd::Trans::kNo ? b[p * ldb + j] : b[j * ldb + p];
}

// Micro must provide MR, NR and
//   static void run(std::size_t kc, const double* ap, const double* bp, double* acc)
// which writes the MR x NR tile sum_p ap[p*MR + r] * bp[p*NR + c] into acc
// (row-major, stride NR).
template <typename Micro>
void packed_gemm(ltd::simd::Trans ta, ltd::simd::Trans tb, std::size_t m, std::size_t n,
                 std::size_t k, double alpha, const double* a, std::size_t lda, const double* b,
                 std::size_t ldb, double* c, std::size_t ldc) {
  constexpr std::size_t MR = Micro::MR;
  constexpr std::size_t NR = Micro::NR;
  thread_local std::vector<double> apack;
  thread_local std::vector<double> bpack;
  alignas(64) double acc[MR * NR];

  for (std::size_t j0 = 0; j0 < n; j0 += kBlockN) {
    const std::size_t nc = std::min(kBlockN, n - j0);
    const std::size_t n_panels = (nc + NR - 1) / NR;
    for (std::size_t p0 = 0; p0 < k; p0 += kBlockK) {
      const std::size_t kc = std::min(kBlockK, k - p0);
      bpack.assign(n_panels * kc * NR, 0.0);
      for (std::size_t jp = 0; jp < n_panels; ++jp) {
        double* dst = bpack.data() + jp * kc * NR;
        const std::size_t jbase = j0 + jp * NR;
        const std::size_t cols = std::min(NR, n - jbase);
        if (tb == ltd::simd::Trans::kNo) {
          for (std::size_t p = 0; p < kc; ++p) {
            const double* src = b + (p0 + p) * ldb + jbase;
            std::copy(src, src + cols, dst + p * NR);
          }
        } else {
          for (std::size_t col = 0; col < cols; ++col) {
            const double* src = b + (jbase + col) * ldb + p0;
            for (std::size_t p = 0; p < kc; ++p) dst[p * NR + col] = src[p];
          }
        }
      }
      for (std::size_t i0 = 0; i0 < m; i0 += kBlockM) {
        const std::size_t mc = std::min(kBlockM, m - i0);
        const std::size_t m_panels = (mc + MR - 1) / MR;
        apack.assign(m_panels * kc * MR, 0.0);
        for (std::size_t ip = 0; ip < m_panels; ++ip) {
          double* dst = apack.data() + ip * kc * MR;
          const std::size_t ibase = i0 + ip * MR;
          const std::size_t rows = std::min(MR, m - ibase);
          if (ta == ltd::simd::Trans::kNo) {
            for (std::size_t r = 0; r < rows; ++r) {
              const double* src = a + (ibase + r) * lda + p0;
              for (std::size_t p = 0; p < kc; ++p) dst[p * MR + r] = src[p];
            }
          } else {
            for (std::size_t p = 0; p < kc; ++p) {
              const double* src = a + (p0 + p) * lda + ibase;
              std::copy(src, src + rows, dst + p * MR);
            }
          }
        }
        for (std::size_t jp = 0; jp < n_panels; ++jp) {
          const std::size_t jbase = j0 + jp * NR;
          const std::size_t cols = std::min(NR, n - jbase);
          for (std::size_t ip = 0; ip < m_panels; ++ip) {
            const std::size_t ibase = i0 + ip * MR;
            const std::size_t rows = std::min(MR, m - ibase);
            Micro::run(kc, apack.data() + ip * kc * MR, bpack.data() + jp * kc * NR, acc);
            for (std::size_t r = 0; r < rows; ++r) {
              double* crow = c + (ibase + r) * ldc + jbase;
              const double* arow = acc + r * NR;
              for (std::size_t col = 0; col < cols; ++col) crow[col] += alpha * arow[col];
            }
          }
        }
      }
    }
  }
}

// Few-row products (single-sample forward/backward) skip packing and run on
// dot/axpy so the weight matrix is streamed once.
template <typename Dot, typename Axpy>
void small_m_gemm(ltd::simd::Trans ta, ltd::simd::Trans tb, std::size_t m, std::size_t n,
                  std::size_t k, double alpha, const double* a, std::size_t lda, const double* b,
                  std::size_t ldb, double* c, std::size_t ldc, Dot dot, Axpy axpy) {
  thread_local std::vector<double> row;
  row.resize(k);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) row[p] = elem_a(ta, a, lda, i, p);
    double* crow = c + i * ldc;
    if (tb == ltd::simd::Trans::kYes) {
      for (std::size_t j = 0; j < n; ++j) crow[j] += alpha * dot(row.data(), b + j * ldb, k);
    } else {
      for (std::size_t p = 0; p < k; ++p) {
        const double s = alpha * row[p];
        if (s != 0.0) axpy(s, b + p * ldb, crow, n);
      }
    }
  }
}

}  // namespace
