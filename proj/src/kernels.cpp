// SPDX-License-Identifier: Apache-2.0

#include "brwire/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <string_view>

namespace brwire::kernels {
namespace {

const Ops* best_supported() {
#if defined(__x86_64__) || defined(_M_X64)
  if (avx2_available()) return &avx2_ops();
#endif
#if defined(__aarch64__)
  return &neon_ops();
#endif
  return &scalar_ops();
}

const Ops* lookup(std::string_view name) {
  if (name == "auto") return best_supported();
  if (name == "scalar") return &scalar_ops();
#if defined(__x86_64__) || defined(_M_X64)
  if (name == "avx2" && avx2_available()) return &avx2_ops();
#endif
#if defined(__aarch64__)
  if (name == "neon") return &neon_ops();
#endif
  return nullptr;
}

std::atomic<const Ops*>& slot() {
  static std::atomic<const Ops*> current{[] {
    if (const char* env = std::getenv("BRWIRE_KERNEL")) {
      if (const Ops* ops = lookup(env)) return ops;
    }
    return best_supported();
  }()};
  return current;
}

}  // namespace

const Ops& active() { return *slot().load(std::memory_order_relaxed); }

bool select(std::string_view name) {
  const Ops* ops = lookup(name);
  if (!ops) return false;
  slot().store(ops, std::memory_order_relaxed);
  return true;
}

}  // namespace brwire::kernels
