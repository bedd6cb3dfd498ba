#pragma once

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <new>
#include <vector>

#include "errors.hpp"
#include "parallel.hpp"

namespace tricomi {

using cplx = std::complex<double>;

template <class T>
struct FftwAllocator {
    using value_type = T;
    FftwAllocator() = default;
    template <class U>
    FftwAllocator(const FftwAllocator<U>&) {}
    T* allocate(std::size_t n) {
        void* p = fftw_malloc(n * sizeof(T));
        if (!p) throw std::bad_alloc();
        return static_cast<T*>(p);
    }
    void deallocate(T* p, std::size_t) { fftw_free(p); }
    template <class U>
    bool operator==(const FftwAllocator<U>&) const { return true; }
    template <class U>
    bool operator!=(const FftwAllocator<U>&) const { return false; }
};

using cvec = std::vector<cplx, FftwAllocator<cplx>>;
using rvec = std::vector<double>;

// N x N periodic grid on [-L, L)^2; index = iy * N + ix, x_j = -L + j h.
struct Grid {
    int N = 0;
    double L = 0;

    std::size_t size() const { return std::size_t(N) * N; }
    double h() const { return 2 * L / N; }
    double x(int j) const { return -L + j * h(); }
    double dk() const { return M_PI / L; }
    // signed integer frequency of FFT slot j
    int freq(int j) const { return j < N / 2 ? j : j - N; }
    double k(int j) const { return dk() * freq(j); }
    double cell_area() const { return h() * h(); }
    bool operator==(const Grid& o) const { return N == o.N && L == o.L; }

    void validate() const {
        if (N < 4 || (N & (N - 1)) != 0) throw DomainError("Grid: N must be a power of two >= 4");
        if (!(L > 0)) throw DomainError("Grid: L must be positive");
    }
};

// Plans are created once per N (FFTW_ESTIMATE, so plan choice is deterministic)
// and executed with the new-array interface on fftw_malloc'd storage.
class Fft {
public:
    static const Fft& get(int N) {
        static std::mutex mu;
        static std::map<int, std::unique_ptr<Fft>> cache;
        std::lock_guard<std::mutex> lk(mu);
        auto& p = cache[N];
        if (!p) p.reset(new Fft(N));
        return *p;
    }

    void forward(const cplx* in, cplx* out) const {
        fftw_execute_dft(fwd_, reinterpret_cast<fftw_complex*>(const_cast<cplx*>(in)),
                         reinterpret_cast<fftw_complex*>(out));
    }

    // normalized inverse
    void inverse(const cplx* in, cplx* out) const {
        fftw_execute_dft(bwd_, reinterpret_cast<fftw_complex*>(const_cast<cplx*>(in)),
                         reinterpret_cast<fftw_complex*>(out));
        const double s = 1.0 / (double(N_) * N_);
        std::size_t n = std::size_t(N_) * N_;
        for (std::size_t i = 0; i < n; ++i) out[i] *= s;
    }

    ~Fft() {
        fftw_destroy_plan(fwd_);
        fftw_destroy_plan(bwd_);
    }

private:
    explicit Fft(int N) : N_(N) {
        cvec a(std::size_t(N) * N), b(std::size_t(N) * N);
        auto* pa = reinterpret_cast<fftw_complex*>(a.data());
        auto* pb = reinterpret_cast<fftw_complex*>(b.data());
        fwd_ = fftw_plan_dft_2d(N, N, pa, pb, FFTW_FORWARD, FFTW_ESTIMATE);
        bwd_ = fftw_plan_dft_2d(N, N, pa, pb, FFTW_BACKWARD, FFTW_ESTIMATE);
    }
    int N_;
    fftw_plan fwd_, bwd_;
};

enum class Space { Physical, Spectral };

struct Field2D {
    Grid grid;
    cvec values;
    Space space = Space::Physical;

    Field2D() = default;
    Field2D(const Grid& g, Space s = Space::Physical) : grid(g), values(g.size(), cplx(0)), space(s) {}

    std::size_t size() const { return values.size(); }
    cplx& operator()(int ix, int iy) { return values[std::size_t(iy) * grid.N + ix]; }
    const cplx& operator()(int ix, int iy) const { return values[std::size_t(iy) * grid.N + ix]; }

    Field2D to_spectral() const {
        if (space == Space::Spectral) return *this;
        Field2D r(grid, Space::Spectral);
        Fft::get(grid.N).forward(values.data(), r.values.data());
        return r;
    }
    Field2D to_physical() const {
        if (space == Space::Physical) return *this;
        Field2D r(grid, Space::Physical);
        Fft::get(grid.N).inverse(values.data(), r.values.data());
        return r;
    }

    template <class F>
    static Field2D from_function(const Grid& g, F&& f) {
        Field2D r(g);
        for (int iy = 0; iy < g.N; ++iy)
            for (int ix = 0; ix < g.N; ++ix) r(ix, iy) = f(g.x(ix), g.x(iy));
        return r;
    }
};

// |xi|^2 on the FFT layout.
inline rvec wavenumber_sq(const Grid& g) {
    rvec k2(g.size());
    for (int iy = 0; iy < g.N; ++iy)
        for (int ix = 0; ix < g.N; ++ix) {
            double kx = g.k(ix), ky = g.k(iy);
            k2[std::size_t(iy) * g.N + ix] = kx * kx + ky * ky;
        }
    return k2;
}

// Integer |n|^2 = nx^2 + ny^2; |xi|^2 = dk^2 |n|^2 exactly.
inline std::vector<long> integer_wavenumber_sq(const Grid& g) {
    std::vector<long> k2(g.size());
    for (int iy = 0; iy < g.N; ++iy)
        for (int ix = 0; ix < g.N; ++ix) {
            long a = g.freq(ix), b = g.freq(iy);
            k2[std::size_t(iy) * g.N + ix] = a * a + b * b;
        }
    return k2;
}

// 2/3 rule: keep |nx|, |ny| <= N/3.
inline std::vector<unsigned char> dealias_mask(const Grid& g) {
    std::vector<unsigned char> m(g.size());
    int cut = g.N / 3;
    for (int iy = 0; iy < g.N; ++iy)
        for (int ix = 0; ix < g.N; ++ix)
            m[std::size_t(iy) * g.N + ix] = (std::abs(g.freq(ix)) <= cut && std::abs(g.freq(iy)) <= cut);
    return m;
}

inline double dealiased_rho_max(const Grid& g) { return g.dk() * (g.N / 3) * std::sqrt(2.0); }

// Spectral derivative d/dx (dir 0) or d/dy (dir 1) of a spectral field.
inline Field2D spectral_derivative(const Field2D& f, int dir) {
    if (f.space != Space::Spectral) throw ShapeError("spectral_derivative: expects spectral field");
    Field2D r(f.grid, Space::Spectral);
    const Grid& g = f.grid;
    for (int iy = 0; iy < g.N; ++iy)
        for (int ix = 0; ix < g.N; ++ix) {
            double k = dir == 0 ? g.k(ix) : g.k(iy);
            // the Nyquist slot has no antisymmetric partner
            if ((dir == 0 ? ix : iy) == g.N / 2) k = 0;
            r(ix, iy) = cplx(0, k) * f(ix, iy);
        }
    return r;
}

inline double sup_norm(const Field2D& f) {
    return parallel_max(f.size(), [&](std::size_t i) { return std::abs(f.values[i]); });
}

// Trapezoid (= rectangle on the periodic grid) integral of a physical field.
template <class F>
double grid_integral(const Grid& g, F&& f) {
    return g.cell_area() * parallel_sum<double>(g.size(), f);
}

}  // namespace tricomi
