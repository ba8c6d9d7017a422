#include "fluxlaw/fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>

namespace fluxlaw {

namespace {

std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

// Per-thread SIMD-aligned staging. Plans are made without FFTW_UNALIGNED, so
// every execution must go through buffers with fftw_malloc alignment.
struct Staging {
    double* real = nullptr;
    fftw_complex* half = nullptr;
    std::size_t real_cap = 0, half_cap = 0;
    ~Staging() {
        fftw_free(real);
        fftw_free(half);
    }
    void reserve(std::size_t r, std::size_t h) {
        if (r > real_cap) {
            fftw_free(real);
            real = fftw_alloc_real(r);
            real_cap = r;
        }
        if (h > half_cap) {
            fftw_free(half);
            half = fftw_alloc_complex(h);
            half_cap = h;
        }
    }
};

Staging& staging(std::size_t r, std::size_t h) {
    thread_local Staging s;
    s.reserve(r, h);
    return s;
}

}  // namespace

RealFft::RealFft(int d, int n) : d_(d), n_(n) {
    if (d < 1 || d > 3 || n < 2) throw std::invalid_argument("RealFft: bad shape");
    int dims[3] = {n, n, n};
    real_size_ = 1;
    for (int i = 0; i < d; ++i) real_size_ *= static_cast<std::size_t>(n);
    half_size_ = real_size_ / n * (n / 2 + 1);

    // Planning touches FFTW global state; execution with the new-array API
    // is thread safe. ESTIMATE keeps the plan (and the output bits) fixed.
    std::lock_guard<std::mutex> lock(planner_mutex());
    double* r = fftw_alloc_real(real_size_);
    fftw_complex* c = fftw_alloc_complex(half_size_);
    unsigned flags = FFTW_ESTIMATE;
    plan_fwd_ = fftw_plan_dft_r2c(d, dims, r, c, flags);
    plan_bwd_ = fftw_plan_dft_c2r(d, dims, c, r, flags | FFTW_DESTROY_INPUT);
    fftw_free(r);
    fftw_free(c);
    if (!plan_fwd_ || !plan_bwd_) throw std::runtime_error("RealFft: planning failed");
}

namespace {

bool aligned(const void* p) { return fftw_alignment_of(static_cast<double*>(const_cast<void*>(p))) == 0; }

}  // namespace

void* fft_alloc(std::size_t bytes) { return fftw_malloc(bytes); }
void fft_free(void* p) { fftw_free(p); }

void RealFft::forward(const double* in, std::complex<double>* out) const {
    if (aligned(in) && aligned(out)) {
        // r2c leaves its input intact
        fftw_execute_dft_r2c(static_cast<fftw_plan>(plan_fwd_), const_cast<double*>(in),
                             reinterpret_cast<fftw_complex*>(out));
        return;
    }
    Staging& s = staging(real_size_, half_size_);
    std::copy(in, in + real_size_, s.real);
    fftw_execute_dft_r2c(static_cast<fftw_plan>(plan_fwd_), s.real, s.half);
    auto* h = reinterpret_cast<const std::complex<double>*>(s.half);
    std::copy(h, h + half_size_, out);
}

void RealFft::backward(const std::complex<double>* in, double* out) const {
    Staging& s = staging(real_size_, half_size_);
    std::copy(in, in + half_size_, reinterpret_cast<std::complex<double>*>(s.half));
    if (aligned(out)) {
        fftw_execute_dft_c2r(static_cast<fftw_plan>(plan_bwd_), s.half, out);
        return;
    }
    fftw_execute_dft_c2r(static_cast<fftw_plan>(plan_bwd_), s.half, s.real);
    std::copy(s.real, s.real + real_size_, out);
}

void RealFft::backward_destroy(std::complex<double>* in, double* out) const {
    if (aligned(in) && aligned(out)) {
        fftw_execute_dft_c2r(static_cast<fftw_plan>(plan_bwd_), reinterpret_cast<fftw_complex*>(in), out);
        return;
    }
    backward(in, out);
}

const RealFft& real_fft(int d, int n) {
    static std::mutex m;
    static std::map<std::pair<int, int>, std::unique_ptr<RealFft>> cache;
    std::lock_guard<std::mutex> lock(m);
    auto& slot = cache[{d, n}];
    if (!slot) slot = std::make_unique<RealFft>(d, n);
    return *slot;
}

}  // namespace fluxlaw
