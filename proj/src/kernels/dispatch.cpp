#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "fpk/kernels.hpp"

namespace fpk::kernels {

#if !defined(FPK_HAVE_AVX2)
const KernelTable* avx2_table() { return nullptr; }
#endif

namespace {

bool cpu_has_avx2() {
#if defined(FPK_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

const KernelTable* detect() {
  const char* forced = std::getenv("FPK_ISA");
  if (forced != nullptr && std::string(forced) == "scalar") return &scalar_table();
  if (cpu_has_avx2() && avx2_table() != nullptr) return avx2_table();
  return &scalar_table();
}

std::atomic<const KernelTable*>& slot() {
  static std::atomic<const KernelTable*> current{detect()};
  return current;
}

}  // namespace

std::string_view to_string(Isa isa) {
  switch (isa) {
    case Isa::scalar: return "scalar";
    case Isa::avx2: return "avx2";
  }
  return "unknown";
}

bool isa_supported(Isa isa) {
  if (isa == Isa::scalar) return true;
  return cpu_has_avx2() && avx2_table() != nullptr;
}

const KernelTable& active() { return *slot().load(std::memory_order_relaxed); }

void set_active(Isa isa) {
  if (!isa_supported(isa)) {
    throw std::invalid_argument("instruction set not supported: " + std::string(to_string(isa)));
  }
  slot().store(isa == Isa::scalar ? &scalar_table() : avx2_table(), std::memory_order_relaxed);
}

}  // namespace fpk::kernels
