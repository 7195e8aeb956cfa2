#include <atomic>
#include <stdexcept>

#include "kernels_internal.hpp"

namespace lodom::kernels {

namespace {

Backend detect() {
#if defined(LODOM_HAVE_AVX2)
  if (__builtin_cpu_supports("avx2")) return Backend::kAvx2;
#endif
  return Backend::kScalar;
}

std::atomic<Backend>& current() {
  static std::atomic<Backend> backend{detect()};
  return backend;
}

}  // namespace

const char* name(Backend b) {
  switch (b) {
    case Backend::kScalar:
      return "scalar";
    case Backend::kAvx2:
      return "avx2";
  }
  return "unknown";
}

bool supported(Backend b) {
  if (b == Backend::kScalar) return true;
#if defined(LODOM_HAVE_AVX2)
  if (b == Backend::kAvx2) return __builtin_cpu_supports("avx2");
#endif
  return false;
}

Backend active() { return current().load(std::memory_order_relaxed); }

bool force(Backend b) {
  if (!supported(b)) return false;
  current().store(b, std::memory_order_relaxed);
  return true;
}

const Ops& ops(Backend b) {
  switch (b) {
    case Backend::kScalar:
      return detail::scalar_ops();
    case Backend::kAvx2:
#if defined(LODOM_HAVE_AVX2)
      if (supported(Backend::kAvx2)) return detail::avx2_ops();
#endif
      break;
  }
  throw std::runtime_error("kernels: backend not supported on this machine");
}

const Ops& ops() { return ops(active()); }

}  // namespace lodom::kernels
