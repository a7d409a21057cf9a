#include "dpr/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace dpr::kernels {

namespace {

bool cpu_has_avx2() noexcept {
#if defined(DPR_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

const KernelSet* pick_default() noexcept {
    if (const char* env = std::getenv("DPR_KERNELS")) {
        const std::string_view want(env);
        if (want == "scalar") return &detail::scalar_kernels();
        if (want == "avx2" && available(Backend::avx2)) return &kernel_set(Backend::avx2);
        if (want == "neon" && available(Backend::neon)) return &kernel_set(Backend::neon);
    }
    if (available(Backend::avx2)) return &kernel_set(Backend::avx2);
    if (available(Backend::neon)) return &kernel_set(Backend::neon);
    return &detail::scalar_kernels();
}

std::atomic<const KernelSet*>& current() noexcept {
    static std::atomic<const KernelSet*> ptr{pick_default()};
    return ptr;
}

} // namespace

bool available(Backend backend) noexcept {
    switch (backend) {
    case Backend::scalar:
        return true;
    case Backend::avx2:
        return cpu_has_avx2();
    case Backend::neon:
#if defined(DPR_HAVE_NEON)
        return true;
#else
        return false;
#endif
    }
    return false;
}

const KernelSet& kernel_set(Backend backend) {
    if (!available(backend))
        throw std::runtime_error("kernel backend '" + std::string(backend_name(backend)) +
                                 "' is not available on this machine");
    switch (backend) {
#if defined(DPR_HAVE_AVX2)
    case Backend::avx2:
        return detail::avx2_kernels();
#endif
#if defined(DPR_HAVE_NEON)
    case Backend::neon:
        return detail::neon_kernels();
#endif
    default:
        return detail::scalar_kernels();
    }
}

const KernelSet& active() noexcept { return *current().load(std::memory_order_acquire); }

Backend active_backend() noexcept { return active().backend; }

void select(Backend backend) { current().store(&kernel_set(backend), std::memory_order_release); }

std::string_view backend_name(Backend backend) noexcept {
    switch (backend) {
    case Backend::scalar:
        return "scalar";
    case Backend::avx2:
        return "avx2";
    case Backend::neon:
        return "neon";
    }
    return "unknown";
}

} // namespace dpr::kernels
