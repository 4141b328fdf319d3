#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "brw/kernels/kernels.hpp"

namespace brw::kernels {

#if defined(BRW_HAVE_AVX2)
const KernelTable& avx2_table_impl();
#endif

const KernelTable* avx2_table() {
#if defined(BRW_HAVE_AVX2)
  static const bool supported = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  return supported ? &avx2_table_impl() : nullptr;
#else
  return nullptr;
#endif
}

std::string_view isa_name(Isa isa) { return isa == Isa::avx2 ? "avx2" : "scalar"; }

bool isa_available(Isa isa) { return isa == Isa::scalar || avx2_table() != nullptr; }

Isa best_available_isa() { return avx2_table() ? Isa::avx2 : Isa::scalar; }

Isa parse_isa(std::string_view name) {
  if (name == "scalar") return Isa::scalar;
  if (name == "avx2") return Isa::avx2;
  throw std::invalid_argument("unknown kernel ISA '" + std::string(name) + "'");
}

namespace {

const KernelTable* table_for(Isa isa) { return isa == Isa::avx2 ? avx2_table() : &scalar_table(); }

const KernelTable* initial_table() {
  if (const char* env = std::getenv("BRW_KERNEL_ISA"); env && *env) {
    const Isa isa = parse_isa(env);
    if (!isa_available(isa)) throw std::invalid_argument("BRW_KERNEL_ISA: avx2 not available");
    return table_for(isa);
  }
  return table_for(best_available_isa());
}

std::atomic<const KernelTable*>& active_slot() {
  static std::atomic<const KernelTable*> slot{initial_table()};
  return slot;
}

}  // namespace

const KernelTable& active() { return *active_slot().load(std::memory_order_acquire); }

void select_isa(Isa isa) {
  if (!isa_available(isa)) throw std::invalid_argument("kernel ISA not available on this CPU");
  active_slot().store(table_for(isa), std::memory_order_release);
}

}  // namespace brw::kernels
