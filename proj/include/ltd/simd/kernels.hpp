#pragma once

// Dense double-precision kernels behind the MLP stack.
//
// Every routine has a portable scalar reference and, where the host CPU
// supports it, AVX2+FMA and AVX-512F variants. The active table is picked
// once at first use from CPUID; LTD_SIMD=scalar|avx2|avx512 overrides it.

#include <cstddef>
#include <string_view>
#include <vector>

namespace ltd::simd {

enum class Isa { kScalar, kAvx2, kAvx512 };

enum class Trans { kNo, kYes };

struct AdamCoeffs {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double step_size = 0.0;     // lr / (1 - beta1^t)
  double inv_sqrt_bc2 = 1.0;  // 1 / sqrt(1 - beta2^t)
};

using DotFn = double (*)(const double* a, const double* b, std::size_t n);
using AxpyFn = void (*)(double alpha, const double* x, double* y, std::size_t n);
// C(m x n) = alpha * op(A) * op(B) + beta * C, row-major, op = transpose when
// Trans::kYes. op(A) is m x k, op(B) is k x n.
using GemmFn = void (*)(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k,
                        double alpha, const double* a, std::size_t lda, const double* b,
                        std::size_t ldb, double beta, double* c, std::size_t ldc);
using AdamFn = void (*)(double* param, const double* grad, double* m, double* v, std::size_t n,
                        const AdamCoeffs& c);

struct KernelTable {
  Isa isa;
  std::string_view name;
  DotFn dot;
  AxpyFn axpy;
  GemmFn gemm;
  AdamFn adam;
};

const KernelTable& scalar_table();
// nullptr when the variant was not compiled in or the CPU lacks the ISA.
const KernelTable* table_for(Isa isa);
std::vector<Isa> supported_isas();

const KernelTable& active();
// Test/benchmark hook; throws if the ISA is unsupported on this host.
void force(Isa isa);

std::string_view isa_name(Isa isa);
Isa parse_isa(std::string_view name);

}  // namespace ltd::simd
