#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "kernels_internal.hpp"
#include "ltd/simd/kernels.hpp"

namespace ltd::simd {
namespace {

bool cpu_has(Isa isa) {
#if defined(__x86_64__) || defined(__i386__)
  switch (isa) {
    case Isa::kScalar:
      return true;
    case Isa::kAvx2:
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
    case Isa::kAvx512:
      return __builtin_cpu_supports("avx512f");
  }
  return false;
#else
  return isa == Isa::kScalar;
#endif
}

const KernelTable* compiled_table(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return &scalar_table();
    case Isa::kAvx2:
#ifdef LTD_HAVE_AVX2
      return detail::avx2_table();
#else
      return nullptr;
#endif
    case Isa::kAvx512:
#ifdef LTD_HAVE_AVX512
      return detail::avx512_table();
#else
      return nullptr;
#endif
  }
  return nullptr;
}

const KernelTable* pick_default() {
  if (const char* env = std::getenv("LTD_SIMD"); env != nullptr && *env != '\0') {
    const KernelTable* t = table_for(parse_isa(env));
    if (t == nullptr) throw std::runtime_error(std::string("LTD_SIMD: unsupported isa ") + env);
    return t;
  }
  for (Isa isa : {Isa::kAvx512, Isa::kAvx2}) {
    if (const KernelTable* t = table_for(isa)) return t;
  }
  return &scalar_table();
}

std::atomic<const KernelTable*> g_active{nullptr};

}  // namespace

const KernelTable* table_for(Isa isa) { return cpu_has(isa) ? compiled_table(isa) : nullptr; }

std::vector<Isa> supported_isas() {
  std::vector<Isa> out;
  for (Isa isa : {Isa::kScalar, Isa::kAvx2, Isa::kAvx512}) {
    if (table_for(isa) != nullptr) out.push_back(isa);
  }
  return out;
}

const KernelTable& active() {
  const KernelTable* t = g_active.load(std::memory_order_acquire);
  if (t == nullptr) {
    t = pick_default();
    g_active.store(t, std::memory_order_release);
  }
  return *t;
}

void force(Isa isa) {
  const KernelTable* t = table_for(isa);
  if (t == nullptr) throw std::runtime_error("isa not supported on this host: " +
                                             std::string(isa_name(isa)));
  g_active.store(t, std::memory_order_release);
}

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return "scalar";
    case Isa::kAvx2:
      return "avx2";
    case Isa::kAvx512:
      return "avx512";
  }
  return "?";
}

Isa parse_isa(std::string_view name) {
  if (name == "scalar") return Isa::kScalar;
  if (name == "avx2") return Isa::kAvx2;
  if (name == "avx512") return Isa::kAvx512;
  throw std::invalid_argument("unknown isa: " + std::string(name));
}

}  // namespace ltd::simd
