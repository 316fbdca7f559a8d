// Sampled functions on a periodic grid: FFT with the convention
// fhat(k/L) = h * sum_j f(x_j) exp(-2 pi i (k/L) x_j), cutoff weights,
// the Hardy-Littlewood maximal function, and Calderon-Zygmund
// decomposition on the torus dyadic tree.
#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include "tfa/common.hpp"
#include "tfa/rational.hpp"

namespace tfa {

struct GridMismatch : std::invalid_argument {
    GridMismatch() : std::invalid_argument("grid: functions live on different grids") {}
};
struct RootAverageExceedsLevel : std::runtime_error {
    RootAverageExceedsLevel()
        : std::runtime_error("cz: average of |f| over the torus exceeds the level; raise alpha") {}
};

struct GridSpec {
    double L = 1.0;     // torus circumference
    std::size_t M = 0;  // number of samples, power of two

    GridSpec() = default;
    GridSpec(double length, std::size_t samples) : L(length), M(samples) {
        if (!(L > 0.0)) throw std::invalid_argument("grid: L must be positive");
        if (M == 0 || (M & (M - 1)) != 0) throw std::invalid_argument("grid: M must be a power of two");
    }

    double h() const { return L / static_cast<double>(M); }
    double x(std::size_t j) const { return static_cast<double>(j) * h(); }

    friend bool operator==(const GridSpec& a, const GridSpec& b) { return a.L == b.L && a.M == b.M; }
    friend bool operator!=(const GridSpec& a, const GridSpec& b) { return !(a == b); }
};

// In-place forward/inverse DFT (FFTW behind a plan cache). Forward uses
// the e^{-2 pi i jk/M} kernel and no normalization.
void dft_forward(std::vector<cplx>& data);
void dft_inverse_unnormalized(std::vector<cplx>& data);

/// Immutable grid function with a lazily computed spectrum.
/// spectrum()[k mod M] = fhat(k/L); copies share the cache.
class GridFunction {
public:
    GridFunction(GridSpec spec, std::vector<cplx> samples)
        : spec_(spec), samples_(std::move(samples)), cache_(std::make_shared<Cache>()) {
        if (samples_.size() != spec_.M) throw std::invalid_argument("grid: sample count != M");
    }

    /// Build from spectrum values fhat(k/L), k in [-M/2, M/2).
    static GridFunction from_spectrum(GridSpec spec, const std::vector<cplx>& spectrum_fft_order);

    const GridSpec& spec() const { return spec_; }
    std::size_t size() const { return spec_.M; }
    const std::vector<cplx>& samples() const { return samples_; }
    cplx operator[](std::size_t j) const { return samples_[j]; }

    /// Spectrum in FFT index order; computed once, thread-safe.
    const std::vector<cplx>& spectrum() const;

    /// fhat(k/L) for signed k in [-M/2, M/2).
    cplx spectrum_at(std::int64_t k) const {
        const auto& sp = spectrum();
        std::int64_t m = static_cast<std::int64_t>(spec_.M);
        std::int64_t idx = ((k % m) + m) % m;
        return sp[static_cast<std::size_t>(idx)];
    }

    /// Largest |k| with |fhat(k/L)| > tol * max|fhat| (0 for the zero function).
    std::int64_t band_limit(double tol = 1e-12) const;

    double norm_l1() const;  // h * sum |f|
    double norm_l2() const;  // (h * sum |f|^2)^(1/2)
    double norm_sup() const;

private:
    struct Cache {
        std::once_flag once;
        std::vector<cplx> freq;
    };

    GridSpec spec_;
    std::vector<cplx> samples_;
    std::shared_ptr<Cache> cache_;
};

/// Wrapped distance from x to the closed interval [a,b] on the torus [0,L).
double torus_dist(double x, double a, double b, double L);

/// chi-tilde_I^N: equals (1 + dist(x,I)/|I|)^{-N}, exactly 1 on I.
class CutoffWeight {
public:
    CutoffWeight(double a, double b, int exponent, double L)
        : a_(a), b_(b), len_(b - a), n_(exponent), L_(L) {
        if (!(len_ > 0.0) || exponent <= 0) throw std::invalid_argument("cutoff: bad interval or exponent");
    }
    CutoffWeight(const RatInterval& I, int exponent, double L)
        : CutoffWeight(I.lo.to_double(), I.hi.to_double(), exponent, L) {}

    double operator()(double x) const {
        double d = torus_dist(x, a_, b_, L_);
        if (d == 0.0) return 1.0;
        return std::pow(1.0 + d / len_, -n_);
    }

    double a() const { return a_; }
    double b() const { return b_; }
    int exponent() const { return n_; }

private:
    double a_, b_, len_;
    int n_;
    double L_;
};

/// h * sum_j |f(x_j)| w(x_j).
double weighted_l1(const GridFunction& f, const CutoffWeight& w);
/// (h * sum_j |f(x_j)|^2 w(x_j)^2)^(1/2); pass the half-exponent weight.
double weighted_l2(const GridFunction& f, const CutoffWeight& w);

/// Exact Hardy-Littlewood maximal function over all grid-aligned torus
/// intervals (O(M^2) sliding-window scan). Real-valued output.
GridFunction hl_maximal(const GridFunction& f);

/// Approximate variant restricted to dyadic intervals of the torus tree.
/// Never exceeds hl_maximal and may undershoot it by a bounded factor.
GridFunction hl_maximal_dyadic_approx(const GridFunction& f);

struct CZResult {
    GridFunction good;                                      // g
    std::vector<std::pair<RatInterval, GridFunction>> bad;  // (I, b_I)
    double level = 0.0;                                     // alpha
    double total_interval_length = 0.0;                     // sum |I|
    double cz_constant = 0.0;                               // sum|I| * alpha / ||f||_1
};

/// Dyadic stopping at level alpha on the torus tree rooted at [0,L):
/// selects maximal dyadic I with avg_I |f| > alpha, takes g = avg on
/// each I and g = f outside, b_I = (f - avg_I f) chi_I.
CZResult cz_decompose(const GridFunction& f, double alpha);

// Function I/O (External Interfaces): CSV "index,re,im" and raw
// little-endian binary with a 32-byte header (magic "TFGF").
void save_csv(const GridFunction& f, const std::string& path);
GridFunction load_csv(const std::string& path, double L);
void save_binary(const GridFunction& f, const std::string& path);
GridFunction load_binary(const std::string& path);

}  // namespace tfa
