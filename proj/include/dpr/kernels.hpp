#pragma once

// Dense linear-algebra kernels behind the MLP. Each backend implements the
// same set of functions; the scalar one is the reference and the SIMD ones
// are checked against it in tests. The active backend is chosen once at
// startup from the CPU features (override with DPR_KERNELS=scalar|avx2|neon).
//
// Matrices are row-major, rows x cols.

#include <cstddef>
#include <span>
#include <string_view>

namespace dpr::kernels {

enum class Backend { scalar, avx2, neon };

struct KernelSet {
    Backend backend;
    std::string_view name;
    double (*dot)(const double* a, const double* b, std::size_t n);
    // y += alpha * x
    void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
    // y = W x + b
    void (*affine)(const double* w, const double* b, const double* x, double* y,
                   std::size_t rows, std::size_t cols);
    // y = W^T d
    void (*affine_transposed)(const double* w, const double* d, double* y, std::size_t rows,
                              std::size_t cols);
    // G += scale * u v^T
    void (*outer_accumulate)(double scale, const double* u, const double* v, double* g,
                             std::size_t rows, std::size_t cols);
    // y = max(x, 0)
    void (*relu)(const double* x, double* y, std::size_t n);
};

bool available(Backend backend) noexcept;
/// Kernel table for a specific backend; throws if it is not available here.
const KernelSet& kernel_set(Backend backend);
const KernelSet& active() noexcept;
Backend active_backend() noexcept;
/// Switches the process-wide backend. Not meant to be called while another
/// thread is inside a kernel.
void select(Backend backend);
std::string_view backend_name(Backend backend) noexcept;

namespace detail {
const KernelSet& scalar_kernels() noexcept;
#if defined(DPR_HAVE_AVX2)
const KernelSet& avx2_kernels() noexcept;
#endif
#if defined(DPR_HAVE_NEON)
const KernelSet& neon_kernels() noexcept;
#endif
} // namespace detail

inline double dot(std::span<const double> a, std::span<const double> b) {
    return active().dot(a.data(), b.data(), a.size());
}

inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    active().axpy(alpha, x.data(), y.data(), x.size());
}

} // namespace dpr::kernels
