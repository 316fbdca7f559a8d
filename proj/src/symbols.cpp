#include "tfa/symbols.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

namespace tfa {

namespace {

double sgn(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

SingularSubspace bht_line() {
    Vec v(3);
    v << 1.0, 1.0, -2.0;
    return SingularSubspace(3, {v});
}

SingularSubspace tht_plane() {
    // sgn(-xi1 + xi2 + 2 xi3) on Gamma in R^4; zero set is spanned by
    // (1,1,0,-2) and (0,-2,1,1).
    Vec a(4), b(4);
    a << 1.0, 1.0, 0.0, -2.0;
    b << 0.0, -2.0, 1.0, 1.0;
    return SingularSubspace(4, {a, b});
}

SingularSubspace origin_k0(int n) { return SingularSubspace(n, {}); }

}  // namespace

Symbol builtin(const std::string& name, int n) {
    if (name == "one") {
        return Symbol("one", n, [](const Vec&) { return cplx{1.0, 0.0}; }, std::nullopt, 1.0, 8,
                      true, 0.0);
    }
    if (name == "bht") {
        if (n != 3) throw std::invalid_argument("symbols: bht requires n = 3");
        return Symbol(
            "bht", 3,
            [](const Vec& xi) { return cplx{0.0, kPi * sgn(xi(1) - xi(0))}; },
            bht_line(), kPi, 8, true, 0.0);
    }
    if (name == "tht") {
        if (n != 4) throw std::invalid_argument("symbols: tht requires n = 4");
        return Symbol(
            "tht", 4,
            [](const Vec& xi) {
                return cplx{0.0, kPi * sgn(-xi(0) + xi(1) + 2.0 * xi(2))};
            },
            tht_plane(), kPi, 8, true, 0.0);
    }
    if (name == "smooth0") {
        if (n != 3) throw std::invalid_argument("symbols: smooth0 requires n = 3");
        return Symbol(
            "smooth0", 3,
            [](const Vec& xi) {
                double r2 = xi.squaredNorm();
                if (r2 == 0.0) return cplx{0.0, 0.0};
                return cplx{xi(0) * xi(1) / r2, 0.0};
            },
            origin_k0(3), 1.0, 4, false, 0.0);
    }
    throw UnknownSymbol(name);
}

std::vector<std::string> builtin_names() { return {"one", "bht", "tht", "smooth0"}; }

Symbol load_symbol_csv(const std::string& path, int n) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("symbols: cannot open " + path);
    const int d = n - 1;
    std::vector<std::vector<double>> coords(d);
    std::vector<std::pair<std::vector<double>, cplx>> rows;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty() || !(std::isdigit(line[0]) || line[0] == '-' || line[0] == '+' || line[0] == '.'))
            continue;  // header or blank
        std::stringstream ss(line);
        std::vector<double> vals;
        std::string tok;
        while (std::getline(ss, tok, ',')) vals.push_back(std::stod(tok));
        if (static_cast<int>(vals.size()) != d + 2)
            throw std::runtime_error("symbols: CSV row needs n-1 coordinates plus re,im");
        std::vector<double> p(vals.begin(), vals.begin() + d);
        rows.emplace_back(std::move(p), cplx{vals[d], vals[d + 1]});
    }
    // Infer the lattice: sorted unique values per axis.
    for (auto& [p, v] : rows)
        for (int i = 0; i < d; ++i) coords[i].push_back(p[i]);
    std::vector<std::vector<double>> axes(d);
    for (int i = 0; i < d; ++i) {
        auto c = coords[i];
        std::sort(c.begin(), c.end());
        for (double x : c)
            if (axes[i].empty() || x > axes[i].back() + 1e-12) axes[i].push_back(x);
    }
    std::size_t total = 1;
    for (int i = 0; i < d; ++i) total *= axes[i].size();
    if (total != rows.size())
        throw std::runtime_error("symbols: CSV does not form a full regular lattice");
    std::vector<cplx> table(total);
    auto axis_index = [&](int i, double x) {
        auto it = std::lower_bound(axes[i].begin(), axes[i].end(), x - 1e-12);
        return static_cast<std::size_t>(it - axes[i].begin());
    };
    for (const auto& [p, v] : rows) {
        std::size_t idx = 0;
        for (int i = 0; i < d; ++i) idx = idx * axes[i].size() + axis_index(i, p[i]);
        table[idx] = v;
    }
    auto shared_axes = std::make_shared<std::vector<std::vector<double>>>(std::move(axes));
    auto shared_table = std::make_shared<std::vector<cplx>>(std::move(table));
    auto eval = [shared_axes, shared_table, d](const Vec& xi) -> cplx {
        const auto& ax = *shared_axes;
        // Locate the cell and interpolate multilinearly.
        std::vector<std::size_t> cell(d);
        std::vector<double> frac(d);
        for (int i = 0; i < d; ++i) {
            const auto& a = ax[i];
            double x = xi(i);
            if (x < a.front() || x > a.back()) return cplx{0.0, 0.0};
            auto it = std::upper_bound(a.begin(), a.end(), x);
            std::size_t hi = std::min<std::size_t>(a.size() - 1, static_cast<std::size_t>(it - a.begin()));
            std::size_t lo = hi == 0 ? 0 : hi - 1;
            cell[i] = lo;
            frac[i] = a[hi] > a[lo] ? (x - a[lo]) / (a[hi] - a[lo]) : 0.0;
        }
        cplx acc{0.0, 0.0};
        for (int corner = 0; corner < (1 << d); ++corner) {
            double w = 1.0;
            std::size_t idx = 0;
            for (int i = 0; i < d; ++i) {
                bool up = corner & (1 << i);
                w *= up ? frac[i] : 1.0 - frac[i];
                std::size_t ci = cell[i] + (up ? 1 : 0);
                if (ci >= ax[i].size()) ci = ax[i].size() - 1;
                idx = idx * ax[i].size() + ci;
            }
            acc += w * (*shared_table)[idx];
        }
        return acc;
    };
    return Symbol("csv:" + path, n, std::move(eval), std::nullopt, 0.0, 0, false, std::nullopt);
}

double smoothstep4(double u) {
    if (u <= 0.0) return 0.0;
    if (u >= 1.0) return 1.0;
    // 126 u^5 - 420 u^6 + 540 u^7 - 315 u^8 + 70 u^9
    double u5 = u * u * u * u * u;
    return u5 * (126.0 + u * (-420.0 + u * (540.0 + u * (-315.0 + u * 70.0))));
}

AxisBump::AxisBump(double lo, double hi, double plateau) : lo_(lo), hi_(hi) {
    double c = 0.5 * (lo + hi);
    double half = 0.5 * (hi - lo) * plateau;
    plo_ = c - half;
    phi_ = c + half;
}

double AxisBump::operator()(double x) const {
    if (x <= lo_ || x >= hi_) return 0.0;
    if (x >= plo_ && x <= phi_) return 1.0;
    if (x < plo_) return smoothstep4((x - lo_) / (plo_ - lo_));
    return 1.0 - smoothstep4((x - phi_) / (hi_ - phi_));
}

CubeBump::CubeBump(const ShiftedCube& q, double plateau) : cube_(q) {
    axes_.reserve(q.dim());
    for (int i = 0; i < q.dim(); ++i) axes_.emplace_back(q.axis(i).interval(), plateau);
}

double CubeBump::operator()(const Vec& xi) const {
    double v = 1.0;
    for (int i = 0; i < static_cast<int>(axes_.size()); ++i) {
        v *= axes_[i](xi(i));
        if (v == 0.0) return 0.0;
    }
    return v;
}

namespace {

// Multi-index central differences along an orthonormal tangent frame.
cplx central_diff(const Symbol& m, const Mat& frame, const Vec& xi, std::vector<int>& alpha,
                  double step) {
    int dir = -1;
    for (std::size_t i = 0; i < alpha.size(); ++i)
        if (alpha[i] > 0) {
            dir = static_cast<int>(i);
            break;
        }
    if (dir < 0) return m(xi);
    --alpha[dir];
    Vec d = frame.col(dir) * step;
    cplx hi = central_diff(m, frame, xi + d, alpha, step);
    cplx lo = central_diff(m, frame, xi - d, alpha, step);
    ++alpha[dir];
    return (hi - lo) / (2.0 * step);
}

void enumerate_multi_indices(int dims, int order, std::vector<std::vector<int>>& out) {
    std::vector<int> cur(dims, 0);
    std::function<void(int, int)> rec = [&](int pos, int left) {
        if (pos == dims) {
            out.push_back(cur);
            return;
        }
        for (int v = 0; v <= left; ++v) {
            cur[pos] = v;
            rec(pos + 1, left - v);
        }
        cur[pos] = 0;
    };
    rec(0, order);
}

}  // namespace

SymbolEstimateReport check_symbol_estimates(const Symbol& m, int order, int samples_per_octave,
                                            std::uint64_t seed, double base_distance, int octaves) {
    if (order > 4) throw std::invalid_argument("symbols: derivative order capped at 4");
    SingularSubspace gp = m.singular() ? *m.singular() : SingularSubspace(m.n(), {});
    const int n = m.n();
    const Mat frame = gp.gamma_basis();  // n x (n-1) tangent directions of Gamma
    const Mat trans = gp.transversal_basis();
    const Mat gq = gp.orthonormal_basis();

    SymbolEstimateReport rep;
    rep.order = order;
    rep.octaves = octaves;
    rep.constants.assign(order + 1, std::vector<double>(octaves, 0.0));

    std::vector<std::vector<int>> idx;
    enumerate_multi_indices(n - 1, order, idx);

    std::mt19937_64 rng(seed);
    for (int oct = 0; oct < octaves; ++oct) {
        double dist = base_distance * std::pow(2.0, oct);
        for (int s = 0; s < samples_per_octave; ++s) {
            // Random base point on Gamma' plus a random transversal unit.
            Vec xi = Vec::Zero(n);
            for (int c = 0; c < gp.k(); ++c) xi += gq.col(c) * uniform(rng, -2.0, 2.0);
            Vec t = Vec::Zero(n);
            for (int c = 0; c < trans.cols(); ++c) t += trans.col(c) * (u01(rng) - 0.5);
            if (t.norm() < 1e-12) t = trans.col(0);
            t.normalize();
            xi += dist * t;
            double step = dist / 16.0;
            for (auto& a : idx) {
                int total = 0;
                for (int v : a) total += v;
                cplx d = central_diff(m, frame, xi, a, step);
                double c = std::abs(d) * std::pow(dist, total);
                if (c > rep.constants[total][oct]) rep.constants[total][oct] = c;
            }
        }
    }
    rep.sup_per_order.assign(order + 1, 0.0);
    rep.growth_flag.assign(order + 1, false);
    for (int o = 0; o <= order; ++o) {
        for (double c : rep.constants[o]) rep.sup_per_order[o] = std::max(rep.sup_per_order[o], c);
        double first = rep.constants[o].front(), last = rep.constants[o].back();
        rep.growth_flag[o] = first > 0.0 ? (last > 4.0 * first) : (last > 1e-9);
    }
    return rep;
}

const ShiftedCube& SymbolPiece::cube() const { return parent_->cubes()[idx_]; }

cplx SymbolPiece::operator()(const Vec& xi) const {
    double b = parent_->bump(idx_, xi);
    if (b == 0.0) return cplx{0.0, 0.0};
    double den = parent_->denominator(xi);
    return parent_->symbol()(xi) * (b / den);
}

std::optional<SymbolPiece::Tensor> SymbolPiece::tensor() const {
    const Symbol& m = parent_->symbol();
    if (!m.locally_constant_off_singular()) return std::nullopt;
    const ShiftedCube& q = cube();
    // A representative point of Q cap Gamma by alternating projections.
    Vec x = q.center();
    Vec lo = q.corner_low();
    double side = q.side().to_double();
    for (int it = 0; it < 32; ++it) {
        double s = x.sum() / static_cast<double>(q.dim());
        x -= Vec::Constant(q.dim(), s);
        for (int i = 0; i < q.dim(); ++i)
            x(i) = std::clamp(x(i), lo(i) + 1e-9 * side, lo(i) + side * (1.0 - 1e-9));
    }
    Tensor t;
    t.coeff = m(x);
    for (int i = 0; i < q.dim(); ++i) t.axis_filters.emplace_back(q.axis(i).interval(), 0.9);
    return t;
}

std::shared_ptr<Partition> Partition::make(Symbol m, std::vector<ShiftedCube> cubes, double plateau) {
    return std::shared_ptr<Partition>(new Partition(std::move(m), std::move(cubes), plateau));
}

Partition::Partition(Symbol m, std::vector<ShiftedCube> cubes, double plateau)
    : symbol_(std::move(m)), cubes_(std::move(cubes)) {
    bumps_.reserve(cubes_.size());
    for (const auto& q : cubes_) bumps_.emplace_back(q, plateau);
}

std::vector<SymbolPiece> Partition::pieces() const {
    std::vector<SymbolPiece> out;
    out.reserve(cubes_.size());
    for (std::size_t i = 0; i < cubes_.size(); ++i) out.push_back(piece(i));
    return out;
}

SymbolPiece Partition::piece(std::size_t idx) const {
    return SymbolPiece(shared_from_this(), idx);
}

double Partition::denominator(const Vec& xi) const {
    double s = 0.0;
    for (const auto& b : bumps_) s += b(xi);
    return s;
}

cplx Partition::reconstruct(const Vec& xi) const {
    double den = denominator(xi);
    if (den == 0.0) return cplx{0.0, 0.0};
    // Sum the pieces one by one, the way a consumer of the list would.
    cplx acc{0.0, 0.0};
    for (const auto& b : bumps_) {
        double v = b(xi);
        if (v > 0.0) acc += symbol_(xi) * (v / den);
    }
    return acc;
}

Symbol Partition::piece_symbol(std::size_t idx) const {
    auto self = shared_from_this();
    auto eval = [self, idx](const Vec& xi) -> cplx {
        double b = self->bump(idx, xi);
        if (b == 0.0) return cplx{0.0, 0.0};
        return self->symbol_(xi) * (b / self->denominator(xi));
    };
    return Symbol(symbol_.name() + "_Q" + std::to_string(idx), symbol_.n(), std::move(eval),
                  symbol_.singular(), symbol_.sup_bound(), symbol_.claimed_order(), false,
                  std::nullopt);
}

WhitneyPartition::WhitneyPartition(Symbol m, const WhitneyCollection& coll, double plateau)
    : symbol_(std::move(m)), coll_(&coll), plateau_(plateau) {}

bool WhitneyPartition::covered(const std::vector<Rational>& x) const {
    int active = 0;
    reconstruct(x, &active);
    return active > 0;
}

cplx WhitneyPartition::reconstruct(const std::vector<Rational>& x, int* active_cubes) const {
    Vec xi(coll_->subspace().n());
    for (int i = 0; i < xi.size(); ++i) xi(i) = x[i].to_double();
    auto cubes = coll_->cubes_at_point(x);
    std::vector<double> vals;
    double den = 0.0;
    for (const auto& q : cubes) {
        double b = CubeBump(q, plateau_)(xi);
        if (b > 0.0) vals.push_back(b);
        den += b;
    }
    if (active_cubes) *active_cubes = static_cast<int>(vals.size());
    if (den == 0.0) return cplx{0.0, 0.0};
    cplx acc{0.0, 0.0};
    for (double b : vals) acc += symbol_(xi) * (b / den);
    return acc;
}

}  // namespace tfa
