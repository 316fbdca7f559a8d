#include "tfa/forms.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>

namespace tfa {

namespace {

void check_inputs(const FormInstance& form, std::span<const GridFunction> fs, std::size_t expected) {
    if (fs.size() != expected) throw std::invalid_argument("forms: wrong number of functions");
    for (const auto& f : fs) {
        if (f.spec() != form.grid) throw GridMismatch();
        if (f.band_limit() > form.band)
            throw BandLimitViolated("input spectrum exceeds the instance band limit");
    }
}

}  // namespace

cplx eval_form(const FormInstance& form, std::span<const GridFunction> fs) {
    const int n = form.n();
    check_inputs(form, fs, static_cast<std::size_t>(n));
    const std::int64_t b = form.band;
    const double l = form.grid.L;

    std::vector<cplx> partial(2 * b + 1, cplx{0.0, 0.0});
    parallel_for(partial.size(), [&](std::size_t slot) {
        const std::int64_t k1 = static_cast<std::int64_t>(slot) - b;
        Vec xi(n);
        std::vector<std::int64_t> k(n);
        k[0] = k1;
        cplx acc{0.0, 0.0};
        // Sweep k_2..k_{n-1}; k_n is forced.
        std::function<void(int, std::int64_t, cplx)> rec = [&](int pos, std::int64_t sum, cplx prod) {
            if (pos == n - 1) {
                std::int64_t kn = -sum;
                if (kn < -b || kn > b) return;
                k[n - 1] = kn;
                for (int i = 0; i < n; ++i) xi(i) = static_cast<double>(k[i]) / l;
                acc += prod * form.symbol(xi) * fs[n - 1].spectrum_at(kn);
                return;
            }
            for (std::int64_t kk = -b; kk <= b; ++kk) {
                cplx c = fs[pos].spectrum_at(kk);
                if (c == cplx{0.0, 0.0}) continue;
                k[pos] = kk;
                rec(pos + 1, sum + kk, prod * c);
            }
        };
        cplx f1 = fs[0].spectrum_at(k1);
        if (f1 != cplx{0.0, 0.0}) rec(1, k1, f1);
        partial[slot] = acc;
    });
    cplx total = pairwise_reduce(std::move(partial));
    double scale = std::pow(1.0 / l, n - 1);
    return total * scale;
}

GridFunction apply_operator(const FormInstance& form, std::span<const GridFunction> fs) {
    const int n = form.n();
    check_inputs(form, fs, static_cast<std::size_t>(n - 1));
    const std::int64_t b = form.band;
    const double l = form.grid.L;
    const std::size_t m = form.grid.M;
    const std::int64_t out_band = (n - 1) * b;

    std::vector<cplx> spectrum(m, cplx{0.0, 0.0});
    std::vector<cplx> out_vals(2 * out_band + 1, cplx{0.0, 0.0});
    const double scale = std::pow(1.0 / l, n - 2);

    parallel_for(out_vals.size(), [&](std::size_t slot) {
        const std::int64_t kappa = static_cast<std::int64_t>(slot) - out_band;
        Vec xi(n);
        std::vector<std::int64_t> k(n);
        cplx acc{0.0, 0.0};
        std::function<void(int, std::int64_t, cplx)> rec = [&](int pos, std::int64_t sum, cplx prod) {
            if (pos == n - 2) {
                std::int64_t last = kappa - sum;
                if (last < -b || last > b) return;
                cplx c = fs[n - 2].spectrum_at(last);
                if (c == cplx{0.0, 0.0}) return;
                k[n - 2] = last;
                k[n - 1] = -kappa;
                for (int i = 0; i < n; ++i) xi(i) = static_cast<double>(k[i]) / l;
                acc += prod * c * form.symbol(xi);
                return;
            }
            for (std::int64_t kk = -b; kk <= b; ++kk) {
                cplx c = fs[pos].spectrum_at(kk);
                if (c == cplx{0.0, 0.0}) continue;
                k[pos] = kk;
                rec(pos + 1, sum + kk, prod * c);
            }
        };
        if (n == 2) {
            // Single linear factor: T-hat(kappa) = m(kappa,-kappa) f-hat(kappa).
            if (kappa >= -b && kappa <= b) {
                k[0] = kappa;
                k[1] = -kappa;
                for (int i = 0; i < n; ++i) xi(i) = static_cast<double>(k[i]) / l;
                acc = fs[0].spectrum_at(kappa) * form.symbol(xi);
            }
        } else {
            rec(0, 0, cplx{1.0, 0.0});
        }
        out_vals[slot] = acc * scale;
    });

    for (std::int64_t kappa = -out_band; kappa <= out_band; ++kappa) {
        std::int64_t idx = ((kappa % static_cast<std::int64_t>(m)) + m) % m;
        spectrum[static_cast<std::size_t>(idx)] = out_vals[static_cast<std::size_t>(kappa + out_band)];
    }
    return GridFunction::from_spectrum(form.grid, spectrum);
}

cplx eval_form_fast3(const FormInstance& form, std::span<const GridFunction> fs) {
    if (form.n() != 3) throw std::invalid_argument("forms: fast path is n=3 only");
    check_inputs(form, fs, 3);
    // Lambda = (1/L) sum_kappa That(kappa/L) fhat_3(-kappa/L), with That
    // from the spectral convolution.
    GridFunction t = apply_operator(form, fs.first(2));
    const std::int64_t out_band = 2 * form.band;
    cplx acc{0.0, 0.0};
    std::vector<cplx> terms;
    terms.reserve(2 * out_band + 1);
    for (std::int64_t kappa = -out_band; kappa <= out_band; ++kappa)
        terms.push_back(t.spectrum_at(kappa) * fs[2].spectrum_at(-kappa));
    acc = pairwise_reduce(std::move(terms));
    return acc / form.grid.L;
}

GridFunction band_filter(const GridFunction& f, const std::function<double(double)>& window) {
    const std::size_t m = f.size();
    const double l = f.spec().L;
    const auto& sp = f.spectrum();
    std::vector<cplx> out(m);
    const std::int64_t half = static_cast<std::int64_t>(m / 2);
    for (std::int64_t k = -half; k < half; ++k) {
        std::size_t idx = static_cast<std::size_t>(((k % static_cast<std::int64_t>(m)) + m) % m);
        double w = window(static_cast<double>(k) / l);
        out[idx] = w == 0.0 ? cplx{0.0, 0.0} : sp[idx] * w;
    }
    return GridFunction::from_spectrum(f.spec(), out);
}

GridFunction apply_piece_fast(const SymbolPiece::Tensor& piece, const GridSpec& grid,
                              std::span<const GridFunction> fs) {
    const int n = static_cast<int>(piece.axis_filters.size());
    if (static_cast<int>(fs.size()) != n - 1)
        throw std::invalid_argument("forms: tensor piece needs n-1 inputs");
    std::vector<GridFunction> filtered;
    filtered.reserve(n - 1);
    for (int i = 0; i < n - 1; ++i) {
        if (fs[i].spec() != grid) throw GridMismatch();
        const AxisBump& bump = piece.axis_filters[i];
        filtered.push_back(band_filter(fs[i], [&bump](double x) { return bump(x); }));
    }
    std::vector<cplx> prod(grid.M);
    for (std::size_t j = 0; j < grid.M; ++j) {
        cplx v = filtered[0][j];
        for (int i = 1; i < n - 1; ++i) v *= filtered[i][j];
        prod[j] = v;
    }
    GridFunction p(grid, std::move(prod));
    const AxisBump& out_bump = piece.axis_filters[n - 1];
    GridFunction shaped = band_filter(p, [&out_bump](double x) { return out_bump(-x); });
    std::vector<cplx> scaled(grid.M);
    for (std::size_t j = 0; j < grid.M; ++j) scaled[j] = shaped[j] * piece.coeff;
    return GridFunction(grid, std::move(scaled));
}

GridFunction apply_piece_fast(const SymbolPiece& piece, const FormInstance& form,
                              std::span<const GridFunction> fs) {
    auto tensor = piece.tensor();
    if (!tensor) {
        // Fall back to the slow path on the piece's own symbol.
        FormInstance pf(piece.partition().piece_symbol(piece.index()), form.grid, form.band);
        return apply_operator(pf, fs);
    }
    return apply_piece_fast(*tensor, form.grid, fs);
}

GridFunction bht_pv_quadrature(const GridFunction& f1, const GridFunction& f2, double t_max,
                               int substeps) {
    if (f1.spec() != f2.spec()) throw GridMismatch();
    const GridSpec& g = f1.spec();
    if (!(t_max > 0.0) || t_max > g.L / 2.0 + 1e-12)
        throw std::invalid_argument("forms: need 0 < t_max <= L/2");
    if (substeps < 1) throw std::invalid_argument("forms: substeps must be >= 1");
    const std::int64_t b_lim = static_cast<std::int64_t>(g.M / 8);
    if (f1.band_limit() > b_lim || f2.band_limit() > b_lim)
        throw BandLimitViolated("pv quadrature needs band limit <= M/8");

    const std::size_t mf = g.M * static_cast<std::size_t>(substeps);
    // Upsample by zero-padding the spectrum (spectral interpolation).
    auto upsample = [&](const GridFunction& f) {
        if (substeps == 1) return f.samples();
        std::vector<cplx> sp(mf, cplx{0.0, 0.0});
        const std::int64_t half = static_cast<std::int64_t>(g.M / 2);
        for (std::int64_t k = -half; k < half; ++k) {
            std::size_t src = static_cast<std::size_t>(((k % static_cast<std::int64_t>(g.M)) + g.M) % g.M);
            std::size_t dst = static_cast<std::size_t>(((k % static_cast<std::int64_t>(mf)) + mf) % mf);
            sp[dst] = f.spectrum()[src];
        }
        return GridFunction::from_spectrum(GridSpec(g.L, mf), sp).samples();
    };
    std::vector<cplx> u1 = upsample(f1);
    std::vector<cplx> u2 = upsample(f2);

    const double step = g.h() / static_cast<double>(substeps);
    const std::int64_t r_max = static_cast<std::int64_t>(std::floor(t_max / step + 1e-9));

    std::vector<cplx> out(g.M, cplx{0.0, 0.0});
    for (std::int64_t r = 1; r <= r_max; ++r) {
        const double w = 1.0 / static_cast<double>(r);  // step / t_r
        for (std::size_t j = 0; j < g.M; ++j) {
            std::int64_t base = static_cast<std::int64_t>(j) * substeps;
            std::size_t jm = static_cast<std::size_t>(((base - r) % static_cast<std::int64_t>(mf) + mf) % mf);
            std::size_t jp = static_cast<std::size_t>((base + r) % static_cast<std::int64_t>(mf));
            // +t and -t paired first: the bracket cancels exactly for
            // symmetric inputs.
            cplx bracket = u1[jm] * u2[jp] - u1[jp] * u2[jm];
            out[j] += bracket * w;
        }
    }
    return GridFunction(g, std::move(out));
}

namespace {

// Cumulative Gauss-Legendre (10-point) table for Si over panels of
// width 1/2, grown on demand.
constexpr double kGlNodes[5] = {0.1488743389816312, 0.4333953941292472, 0.6794095682990244,
                                0.8650633666889845, 0.9739065285171717};
constexpr double kGlWeights[5] = {0.2955242247147529, 0.2692667193099963, 0.2190863625159820,
                                  0.1494513491505806, 0.0666713443086881};

double sinc_val(double u) { return u == 0.0 ? 1.0 : std::sin(u) / u; }

double gl_panel(double a, double b) {
    double c = 0.5 * (a + b), h = 0.5 * (b - a);
    double s = 0.0;
    for (int i = 0; i < 5; ++i)
        s += kGlWeights[i] * (sinc_val(c + h * kGlNodes[i]) + sinc_val(c - h * kGlNodes[i]));
    return s * h;
}

std::vector<double>& si_table() {
    static std::vector<double> table{0.0};  // cumulative integral at 0.5*k
    return table;
}
std::mutex g_si_mutex;

}  // namespace

double sine_integral(double x) {
    if (x < 0.0) return -sine_integral(-x);
    const double panel = 0.5;
    std::size_t need = static_cast<std::size_t>(x / panel) + 1;
    {
        std::lock_guard<std::mutex> lock(g_si_mutex);
        auto& t = si_table();
        while (t.size() < need + 1) {
            double a = panel * static_cast<double>(t.size() - 1);
            t.push_back(t.back() + gl_panel(a, a + panel));
        }
    }
    std::size_t idx = static_cast<std::size_t>(x / panel);
    double base;
    {
        std::lock_guard<std::mutex> lock(g_si_mutex);
        base = si_table()[idx];
    }
    return base + gl_panel(panel * static_cast<double>(idx), x);
}

Symbol bht_truncated_symbol(double t_max) {
    Vec v(3);
    v << 1.0, 1.0, -2.0;
    SingularSubspace line(3, {v});
    return Symbol(
        "bht_trunc", 3,
        [t_max](const Vec& xi) {
            return cplx{0.0, 2.0 * sine_integral(2.0 * kPi * (xi(1) - xi(0)) * t_max)};
        },
        std::move(line), 2.0 * 1.8519370, 4, false, std::nullopt);
}

}  // namespace tfa
