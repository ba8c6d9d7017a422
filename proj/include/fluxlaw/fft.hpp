#pragma once

#include <complex>
#include <cstddef>
#include <new>
#include <vector>

namespace fluxlaw {

void* fft_alloc(std::size_t bytes);
void fft_free(void* p);

/// SIMD-aligned storage. Buffers from this allocator skip the staging copies.
template <class T>
struct FftAllocator {
    using value_type = T;
    FftAllocator() = default;
    template <class U>
    FftAllocator(const FftAllocator<U>&) {}
    T* allocate(std::size_t n) {
        void* p = fft_alloc(n * sizeof(T));
        if (!p) throw std::bad_alloc();
        return static_cast<T*>(p);
    }
    void deallocate(T* p, std::size_t) { fft_free(p); }
    template <class U>
    bool operator==(const FftAllocator<U>&) const { return true; }
};

template <class T>
using aligned_vector = std::vector<T, FftAllocator<T>>;

/// Real-to-half-complex transforms on an n^d grid (FFTW, unnormalized).
/// Half storage keeps the last axis at n/2+1 entries.
class RealFft {
public:
    RealFft(int d, int n);

    std::size_t real_size() const { return real_size_; }
    std::size_t half_size() const { return half_size_; }
    int half_last() const { return n_ / 2 + 1; }

    void forward(const double* in, std::complex<double>* out) const;
    /// Input is copied, so it is left intact.
    void backward(const std::complex<double>* in, double* out) const;
    /// Overwrites `in`; no copies when both buffers are aligned.
    void backward_destroy(std::complex<double>* in, double* out) const;

private:
    int d_;
    int n_;
    std::size_t real_size_;
    std::size_t half_size_;
    void* plan_fwd_;
    void* plan_bwd_;
};

const RealFft& real_fft(int d, int n);

}  // namespace fluxlaw
