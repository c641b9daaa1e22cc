#pragma once

#include <cstddef>

// Contiguous double-precision inner-loop kernels. Scalar reference
// implementations live in weq::kernels::ref; the top-level entry points
// dispatch once, at first use, to the widest instruction set the CPU
// supports (AVX2+FMA on x86-64, NEON on aarch64, scalar otherwise).
// The WEQ_SIMD environment variable ("scalar", "avx2", "neon", "auto")
// overrides detection.

namespace weq::kernels {

enum class SimdLevel { scalar, avx2, neon };

SimdLevel active_level();
const char* level_name(SimdLevel level);
const char* active_level_name();

// y := y + a*x
void axpy(double a, const double* x, double* y, std::size_t n);
// x := a*x
void scal(double a, double* x, std::size_t n);
// dst := a*src
void scale_into(double* dst, double a, const double* src, std::size_t n);
double dot(const double* x, const double* y, std::size_t n);
double sumsq(const double* x, std::size_t n);

namespace ref {
void axpy(double a, const double* x, double* y, std::size_t n);
void scal(double a, double* x, std::size_t n);
void scale_into(double* dst, double a, const double* src, std::size_t n);
double dot(const double* x, const double* y, std::size_t n);
double sumsq(const double* x, std::size_t n);
}  // namespace ref

}  // namespace weq::kernels
