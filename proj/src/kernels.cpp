#include "weq/kernels.hpp"

#include <cstdlib>
#include <cstring>

namespace weq::kernels {

namespace ref {

void axpy(double a, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void scal(double a, double* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) x[i] *= a;
}

void scale_into(double* dst, double a, const double* src, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) dst[i] = a * src[i];
}

double dot(const double* x, const double* y, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
    return acc;
}

double sumsq(const double* x, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i] * x[i];
    return acc;
}

}  // namespace ref

#if defined(__x86_64__)
namespace avx2 {
bool supported();
void axpy(double a, const double* x, double* y, std::size_t n);
void scal(double a, double* x, std::size_t n);
void scale_into(double* dst, double a, const double* src, std::size_t n);
double dot(const double* x, const double* y, std::size_t n);
double sumsq(const double* x, std::size_t n);
}  // namespace avx2
#endif

#if defined(__aarch64__)
namespace neon {
void axpy(double a, const double* x, double* y, std::size_t n);
void scal(double a, double* x, std::size_t n);
void scale_into(double* dst, double a, const double* src, std::size_t n);
double dot(const double* x, const double* y, std::size_t n);
double sumsq(const double* x, std::size_t n);
}  // namespace neon
#endif

namespace {

struct Dispatch {
    SimdLevel level;
    void (*axpy)(double, const double*, double*, std::size_t);
    void (*scal)(double, double*, std::size_t);
    void (*scale_into)(double*, double, const double*, std::size_t);
    double (*dot)(const double*, const double*, std::size_t);
    double (*sumsq)(const double*, std::size_t);
};

constexpr Dispatch kScalar{SimdLevel::scalar, &ref::axpy, &ref::scal,
                           &ref::scale_into, &ref::dot, &ref::sumsq};

Dispatch select() {
    const char* forced = std::getenv("WEQ_SIMD");
    bool want_auto = forced == nullptr || std::strcmp(forced, "auto") == 0;
    if (forced != nullptr && std::strcmp(forced, "scalar") == 0) return kScalar;
#if defined(__x86_64__)
    if ((want_auto || std::strcmp(forced, "avx2") == 0) && avx2::supported()) {
        return Dispatch{SimdLevel::avx2, &avx2::axpy, &avx2::scal,
                        &avx2::scale_into, &avx2::dot, &avx2::sumsq};
    }
#endif
#if defined(__aarch64__)
    if (want_auto || std::strcmp(forced, "neon") == 0) {
        return Dispatch{SimdLevel::neon, &neon::axpy, &neon::scal,
                        &neon::scale_into, &neon::dot, &neon::sumsq};
    }
#endif
    (void)want_auto;
    return kScalar;
}

const Dispatch& table() {
    static const Dispatch d = select();
    return d;
}

}  // namespace

SimdLevel active_level() { return table().level; }

const char* level_name(SimdLevel level) {
    switch (level) {
        case SimdLevel::avx2: return "avx2";
        case SimdLevel::neon: return "neon";
        case SimdLevel::scalar: break;
    }
    return "scalar";
}

const char* active_level_name() { return level_name(active_level()); }

void axpy(double a, const double* x, double* y, std::size_t n) { table().axpy(a, x, y, n); }
void scal(double a, double* x, std::size_t n) { table().scal(a, x, n); }
void scale_into(double* dst, double a, const double* src, std::size_t n) {
    table().scale_into(dst, a, src, n);
}
double dot(const double* x, const double* y, std::size_t n) { return table().dot(x, y, n); }
double sumsq(const double* x, std::size_t n) { return table().sumsq(x, n); }

}  // namespace weq::kernels
