// Evaluation of the n-linear form Lambda_m and operator T_m on grids:
// the reference tuple sweep with deterministic reduction, the n=3
// spectral-convolution fast path, the tensor-piece fast path, and the
// principal-value quadrature cross-check for the bilinear Hilbert
// transform.
#pragma once

#include <span>
#include <stdexcept>
#include <vector>

#include "tfa/grid.hpp"
#include "tfa/symbols.hpp"

namespace tfa {

struct BandLimitViolated : std::invalid_argument {
    explicit BandLimitViolated(const std::string& what) : std::invalid_argument("forms: " + what) {}
};
struct NotTensorFactorizable : std::runtime_error {
    NotTensorFactorizable() : std::runtime_error("forms: piece has no tensor factorization") {}
};

/// A form instance pins the symbol, grid and band limit. The invariant
/// n*B < M/2 keeps the frequency constraint k_1+...+k_n = 0 free of
/// aliasing (a sum of n in-band frequencies is determined by its residue
/// mod M).
struct FormInstance {
    Symbol symbol;
    GridSpec grid;
    std::int64_t band;

    FormInstance(Symbol m, GridSpec g, std::int64_t b) : symbol(std::move(m)), grid(g), band(b) {
        if (static_cast<std::uint64_t>(symbol.n()) * static_cast<std::uint64_t>(band) >= g.M / 2)
            throw BandLimitViolated("n*B must be < M/2");
    }
    int n() const { return symbol.n(); }
};

/// (1/L)^{n-1} sum over |k_i| <= B, sum k_i = 0 of m(k/L) prod fhat_i(k_i/L).
/// Partial sums are indexed by k_1 and combined with a fixed pairwise
/// tree, so the value is bit-stable across thread counts.
cplx eval_form(const FormInstance& form, std::span<const GridFunction> fs);

/// n=3 fast path via the spectral convolution of apply_operator;
/// O(M log M + M B). Must agree with eval_form to 1e-10 relative.
cplx eval_form_fast3(const FormInstance& form, std::span<const GridFunction> fs);

/// T with That(kappa/L) = (1/L)^{n-2} sum_{k_1+...+k_{n-1}=kappa}
/// m(k_1/L,...,k_{n-1}/L,-kappa/L) prod fhat_i(k_i/L). The (1/L)^{n-2}
/// factor makes the duality h sum T f_n = eval_form exact at every L.
GridFunction apply_operator(const FormInstance& form, std::span<const GridFunction> fs);

/// Fast path for a tensor piece c * prod phi_i(xi_i): per-factor band
/// filter, pointwise product, output filter. O(n M log M).
GridFunction apply_piece_fast(const SymbolPiece::Tensor& piece, const GridSpec& grid,
                              std::span<const GridFunction> fs);

/// Convenience: tensor path when available, otherwise the slow path on
/// the piece symbol.
GridFunction apply_piece_fast(const SymbolPiece& piece, const FormInstance& form,
                              std::span<const GridFunction> fs);

/// Band-filter f by a spectral window evaluated at k/L.
GridFunction band_filter(const GridFunction& f, const std::function<double(double)>& window);

/// Symmetric principal-value quadrature for the BHT:
///   sum over t = r*h/substeps, 0 < t <= t_max, of
///   [f1(x-t) f2(x+t) - f1(x+t) f2(x-t)] * (step/t),
/// pairing +t with -t before summation. Off-grid shifts (substeps > 1)
/// are sampled by spectral interpolation (exact for band-limited f).
GridFunction bht_pv_quadrature(const GridFunction& f1, const GridFunction& f2, double t_max,
                               int substeps = 1);

/// The multiplier the truncated PV integral actually has:
/// m(xi) = 2i Si(2 pi (xi_2 - xi_1) t_max); converges to pi i sgn only
/// as (xi_2-xi_1) t_max grows.
Symbol bht_truncated_symbol(double t_max);

/// Sine integral Si(x) = int_0^x sin(u)/u du, about 1e-12 accurate.
double sine_integral(double x);

}  // namespace tfa
