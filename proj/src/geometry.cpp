#include "tfa/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace tfa {

namespace {

std::vector<std::vector<int>> k_subsets(int n, int k) {
    std::vector<std::vector<int>> out;
    std::vector<int> cur;
    std::function<void(int)> rec = [&](int start) {
        if (static_cast<int>(cur.size()) == k) {
            out.push_back(cur);
            return;
        }
        for (int i = start; i < n; ++i) {
            cur.push_back(i);
            rec(i + 1);
            cur.pop_back();
        }
    };
    rec(0);
    return out;
}

}  // namespace

SingularSubspace::SingularSubspace(int n, std::vector<Vec> basis) : n_(n), k_(static_cast<int>(basis.size())) {
    if (n < 2) throw std::invalid_argument("geometry: n must be >= 2");
    basis_.resize(n_, k_);
    for (int c = 0; c < k_; ++c) {
        if (basis[c].size() != n_) throw std::invalid_argument("geometry: basis vector has wrong dimension");
        double sum = basis[c].sum();
        if (std::abs(sum) > 1e-12 * (1.0 + basis[c].norm()))
            throw std::invalid_argument("geometry: basis vector does not lie in Gamma");
        basis_.col(c) = basis[c];
    }
    if (k_ > 0) {
        Eigen::HouseholderQR<Mat> qr(basis_);
        q_ = Mat(qr.householderQ()) .leftCols(k_);
        // Reject a rank-deficient basis outright.
        Mat r = qr.matrixQR().topRows(k_).triangularView<Eigen::Upper>();
        for (int i = 0; i < k_; ++i)
            if (std::abs(r(i, i)) < 1e-12) throw std::invalid_argument("geometry: basis is rank deficient");
    } else {
        q_.resize(n_, 0);
    }

    // Orthonormal basis of Gamma itself.
    Mat g(n_, n_ - 1);
    for (int c = 0; c < n_ - 1; ++c) {
        Vec v = Vec::Zero(n_);
        v(c) = 1.0;
        v(c + 1) = -1.0;
        g.col(c) = v;
    }
    Eigen::HouseholderQR<Mat> gqr(g);
    gamma_q_ = Mat(gqr.householderQ()).leftCols(n_ - 1);

    // Transversal directions: Gamma intersect (Gamma')^perp.
    Mat proj = gamma_q_ - q_ * (q_.transpose() * gamma_q_);
    Eigen::ColPivHouseholderQR<Mat> tqr(proj);
    int tdim = n_ - 1 - k_;
    trans_q_ = Mat(tqr.householderQ()).leftCols(tdim);

    for (const auto& subset : k_subsets(n_, k_)) {
        GraphMap gm;
        gm.subset = subset;
        if (k_ == 0) {
            gm.map.resize(n_, 0);
            gm.condition = 1.0;
            graph_maps_.push_back(std::move(gm));
            continue;
        }
        Mat bs(k_, k_);
        for (int r2 = 0; r2 < k_; ++r2) bs.row(r2) = basis_.row(subset[r2]);
        Eigen::JacobiSVD<Mat> svd(bs, Eigen::ComputeFullU | Eigen::ComputeFullV);
        double smin = svd.singularValues()(k_ - 1);
        double smax = svd.singularValues()(0);
        if (smin < 1e-12 * std::max(1.0, smax)) {
            nondegenerate_ = false;
            gm.condition = std::numeric_limits<double>::infinity();
            gm.map = Mat::Zero(n_, k_);
        } else {
            gm.condition = smax / smin;
            gm.map = basis_ * bs.inverse();
        }
        graph_maps_.push_back(std::move(gm));
    }
}

double SingularSubspace::distance_unchecked(const Vec& xi) const {
    if (k_ == 0) return xi.norm();
    Vec r = xi - q_ * (q_.transpose() * xi);
    return r.norm();
}

double SingularSubspace::distance(const Vec& xi) const {
    double s = xi.sum();
    if (std::abs(s) > 1e-9 * std::max(1e-300, xi.norm())) throw NotOnGamma();
    return distance_unchecked(xi);
}

Vec SingularSubspace::project(const Vec& xi) const {
    if (k_ == 0) return Vec::Zero(n_);
    return q_ * (q_.transpose() * xi);
}

Rational Box::max_side() const {
    Rational m = axes.empty() ? Rational(0) : axes[0].length();
    for (const auto& a : axes)
        if (a.length() > m) m = a.length();
    return m;
}

bool Box::subset_of(const Box& o) const {
    for (std::size_t i = 0; i < axes.size(); ++i)
        if (!axes[i].subset_of(o.axes[i])) return false;
    return true;
}

Box ShiftedCube::box() const {
    Box b;
    b.axes.reserve(offsets.size());
    for (int i = 0; i < dim(); ++i) b.axes.push_back(axis(i).interval());
    return b;
}

Box ShiftedCube::dilated(const Rational& factor) const {
    Box b = box();
    for (auto& a : b.axes) a = a.dilate(factor);
    return b;
}

Vec ShiftedCube::center() const {
    Vec c(dim());
    for (int i = 0; i < dim(); ++i) c(i) = axis(i).center().to_double();
    return c;
}

Vec ShiftedCube::corner_low() const {
    Vec c(dim());
    for (int i = 0; i < dim(); ++i) c(i) = axis(i).left().to_double();
    return c;
}

bool ShiftedCube::intersects_gamma() const {
    Rational lo(0), hi(0);
    for (int i = 0; i < dim(); ++i) {
        lo += axis(i).left();
        hi += axis(i).right();
    }
    return lo < Rational(0) && Rational(0) < hi;
}

bool ShiftedCube::contains(const std::vector<Rational>& x) const {
    for (int i = 0; i < dim(); ++i)
        if (!axis(i).contains(x[i])) return false;
    return true;
}

bool operator<(const ShiftedCube& a, const ShiftedCube& b) {
    if (a.j != b.j) return a.j < b.j;
    if (a.shifts != b.shifts) return a.shifts < b.shifts;
    return a.offsets < b.offsets;
}

std::string ShiftedCube::str() const {
    std::string s = "Q(j=" + std::to_string(j);
    for (int i = 0; i < dim(); ++i)
        s += " " + axis(i).str();
    return s + ")";
}

ShiftedCube cube_containing(const std::vector<Rational>& x, int j, const std::vector<Shift>& shifts) {
    ShiftedCube q;
    q.j = j;
    q.shifts = shifts;
    q.offsets.resize(x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
        q.offsets[i] = dyadic_containing(x[i], j, shifts[i]).k;
    return q;
}

std::vector<std::vector<Shift>> all_shift_tuples(int n) {
    std::vector<std::vector<Shift>> out;
    std::vector<Shift> cur(n, Shift::none);
    std::function<void(int)> rec = [&](int i) {
        if (i == n) {
            out.push_back(cur);
            return;
        }
        for (int s = 0; s < 3; ++s) {
            cur[i] = static_cast<Shift>(s);
            rec(i + 1);
        }
    };
    rec(0);
    return out;
}

namespace {

Rational rat_ceil(const Rational& x) {
    return -((-x).floor_int());
}

/// Smallest offset k with [lo,hi] inside the central 9/10 of the mesh
/// interval at scale j, or nullopt.
std::optional<std::int64_t> axis_cover_offset(const RatInterval& target, int j, Shift s) {
    Rational side = Rational::pow2(j);
    Rational a = shift_value(s);
    if (j % 2 != 0) a = -a;
    // Need A + side/20 <= lo and hi <= A + 19*side/20, A = side*(k + a).
    Rational amax = target.lo - side / Rational(20);
    Rational amin = target.hi - side * Rational(19, 20);
    Rational kmin = amin / side - a;
    Rational kmax = amax / side - a;
    Rational k = rat_ceil(kmin);
    if (k > kmax) return std::nullopt;
    return k.num();
}

}  // namespace

CoveringResult covering_cube(const Box& q) {
    const int n = q.dim();
    if (n == 0) throw std::invalid_argument("geometry: empty box");
    Rational side = q.max_side();
    if (!(Rational(0) < side)) throw std::invalid_argument("geometry: degenerate box");

    // ceil(log2 side)
    int j0 = 0;
    while (Rational::pow2(j0) < side) ++j0;
    while (j0 > -60 && side <= Rational::pow2(j0 - 1)) --j0;

    for (int j = j0; j <= j0 + 6; ++j) {
        ShiftedCube out;
        out.j = j;
        out.offsets.resize(n);
        out.shifts.resize(n);
        bool ok = true;
        for (int i = 0; i < n && ok; ++i) {
            bool found = false;
            for (int s = 0; s < 3 && !found; ++s) {
                auto k = axis_cover_offset(q.axes[i], j, static_cast<Shift>(s));
                if (k) {
                    out.offsets[i] = *k;
                    out.shifts[i] = static_cast<Shift>(s);
                    found = true;
                }
            }
            ok = found;
        }
        if (ok) {
            double ratio = (Rational::pow2(j) / side).to_double();
            return CoveringResult{std::move(out), ratio};
        }
    }
    throw SearchExhausted();
}

double box_subspace_distance(const Box& box, const SingularSubspace& gp) {
    const int n = box.dim();
    Vec lo(n), hi(n);
    for (int i = 0; i < n; ++i) {
        lo(i) = box.axes[i].lo.to_double();
        hi(i) = box.axes[i].hi.to_double();
    }
    const Mat& q = gp.orthonormal_basis();
    // A = I - QQ^T; dist(x)^2 = x^T A x.
    Mat a = Mat::Identity(n, n) - q * q.transpose();

    auto value = [&](const Vec& x) { return std::sqrt(std::max(0.0, x.dot(a * x))); };

    double best = std::numeric_limits<double>::infinity();
    // Face enumeration: each coordinate low/high/free.
    std::vector<int> state(n, 0);
    for (;;) {
        std::vector<int> free_idx, fix_idx;
        for (int i = 0; i < n; ++i)
            (state[i] == 2 ? free_idx : fix_idx).push_back(i);
        Vec x(n);
        for (int i : fix_idx) x(i) = state[i] == 0 ? lo(i) : hi(i);
        if (free_idx.empty()) {
            best = std::min(best, value(x));
        } else {
            const int f = static_cast<int>(free_idx.size());
            Mat aff(f, f);
            Vec rhs = Vec::Zero(f);
            for (int r = 0; r < f; ++r) {
                for (int c = 0; c < f; ++c) aff(r, c) = a(free_idx[r], free_idx[c]);
                double acc = 0.0;
                for (int i : fix_idx) acc += a(free_idx[r], i) * x(i);
                rhs(r) = -acc;
            }
            Vec sol = aff.completeOrthogonalDecomposition().solve(rhs);
            bool feasible = true;
            for (int r = 0; r < f; ++r) {
                double v = sol(r);
                int i = free_idx[r];
                if (v < lo(i) - 1e-12 || v > hi(i) + 1e-12) {
                    feasible = false;
                    break;
                }
                x(i) = std::clamp(v, lo(i), hi(i));
            }
            if (feasible) best = std::min(best, value(x));
        }
        int pos = 0;
        while (pos < n && ++state[pos] == 3) state[pos++] = 0;
        if (pos == n) break;
    }

    // Coordinate-descent polish from the box center guards the rare case
    // where a singular face system hides the interior minimizer.
    Vec x = 0.5 * (lo + hi);
    for (int sweep = 0; sweep < 40; ++sweep) {
        for (int i = 0; i < n; ++i) {
            double aii = a(i, i);
            if (aii < 1e-15) continue;
            double g = a.row(i).dot(x) - aii * x(i);
            x(i) = std::clamp(-g / aii, lo(i), hi(i));
        }
    }
    best = std::min(best, value(x));
    return best;
}

WhitneyCollection::WhitneyCollection(const SingularSubspace& gp, WhitneyParams params)
    : gp_(&gp), params_(std::move(params)) {
    if (params_.window.dim() != gp.n()) throw std::invalid_argument("geometry: window dimension mismatch");
    for (const auto& a : params_.window.axes)
        if (!(a.lo < a.hi)) throw EmptyWindow();
    if (params_.j_min > params_.j_max) throw std::invalid_argument("geometry: empty scale range");
}

bool WhitneyCollection::in_band(const ShiftedCube& q) const {
    double d = box_subspace_distance(q.box(), *gp_);
    double diam = q.diam();
    return params_.c0 * diam <= d && d <= params_.band_factor * params_.c0 * diam;
}

bool WhitneyCollection::contains(const ShiftedCube& q) const {
    if (q.j < params_.j_min || q.j > params_.j_max) return false;
    if (!q.box().subset_of(params_.window)) return false;
    return in_band(q);
}

std::vector<ShiftedCube> WhitneyCollection::cubes_at_point(const std::vector<Rational>& x) const {
    std::vector<ShiftedCube> out;
    for (const auto& shifts : all_shift_tuples(gp_->n())) {
        for (int j = params_.j_min; j <= params_.j_max; ++j) {
            ShiftedCube q = cube_containing(x, j, shifts);
            if (contains(q)) out.push_back(std::move(q));
        }
    }
    return out;
}

std::vector<ShiftedCube> WhitneyCollection::covering_cubes_at_point(const std::vector<Rational>& x) const {
    std::vector<ShiftedCube> out;
    for (auto& q : cubes_at_point(x)) {
        Box inner = q.dilated(Rational(9, 10));
        bool inside = true;
        for (int i = 0; i < q.dim(); ++i)
            if (!(inner.axes[i].lo < x[i] && x[i] < inner.axes[i].hi)) {
                inside = false;
                break;
            }
        if (inside) out.push_back(std::move(q));
    }
    return out;
}

namespace {

struct TubeWalk {
    const SingularSubspace* gp;
    const WhitneyParams* params;
    const std::vector<Shift>* shifts;
    int j;
    double band_lo, band_hi;
    const std::function<void(const ShiftedCube&)>* fn;

    // Cheap distance bounds for the axis-aligned offset box [ka, kb].
    void bounds(const std::vector<std::int64_t>& ka, const std::vector<std::int64_t>& kb,
                double& dmin, double& dmax) const {
        const int n = gp->n();
        Vec c(n), rad(n);
        for (int i = 0; i < n; ++i) {
            DyadicInterval la{j, ka[i], (*shifts)[i]};
            DyadicInterval lb{j, kb[i], (*shifts)[i]};
            double left = la.left().to_double();
            double right = lb.right().to_double();
            c(i) = 0.5 * (left + right);
            rad(i) = 0.5 * (right - left);
        }
        double dc = gp->distance_unchecked(c);
        double r = rad.norm();
        dmin = std::max(0.0, dc - r);
        dmax = dc + r;
    }

    void recurse(std::vector<std::int64_t>& ka, std::vector<std::int64_t>& kb) {
        double dmin, dmax;
        bounds(ka, kb, dmin, dmax);
        if (dmin > band_hi || dmax < band_lo) return;
        int split = -1;
        std::int64_t len = 0;
        for (int i = 0; i < gp->n(); ++i) {
            std::int64_t l = kb[i] - ka[i];
            if (l > len) {
                len = l;
                split = i;
            }
        }
        if (split < 0) {
            ShiftedCube q;
            q.j = j;
            q.offsets = ka;
            q.shifts = *shifts;
            // Exact band test only near the cheap-bound margin.
            if (dmin >= band_lo && dmax <= band_hi) {
                (*fn)(q);
                return;
            }
            double d = box_subspace_distance(q.box(), *gp);
            if (band_lo <= d && d <= band_hi) (*fn)(q);
            return;
        }
        std::int64_t mid = ka[split] + (kb[split] - ka[split]) / 2;
        std::int64_t save_b = kb[split], save_a = ka[split];
        kb[split] = mid;
        recurse(ka, kb);
        kb[split] = save_b;
        ka[split] = mid + 1;
        recurse(ka, kb);
        ka[split] = save_a;
    }
};

}  // namespace

void WhitneyCollection::for_each_in_mesh(const std::vector<Shift>& shifts,
                                         const std::function<void(const ShiftedCube&)>& fn) const {
    const int n = gp_->n();
    for (int j = params_.j_min; j <= params_.j_max; ++j) {
        // Offset range of cubes fully inside the window:
        // left >= win.lo and right <= win.hi per axis.
        std::vector<std::int64_t> ka(n), kb(n);
        bool empty = false;
        Rational side = Rational::pow2(j);
        for (int i = 0; i < n; ++i) {
            Rational a = shift_value(shifts[i]);
            if (j % 2 != 0) a = -a;
            Rational kmin = params_.window.axes[i].lo / side - a;
            Rational kmax = params_.window.axes[i].hi / side - a - Rational(1);
            ka[i] = rat_ceil(kmin).num();
            kb[i] = kmax.floor_int().num();
            if (ka[i] > kb[i]) empty = true;
        }
        if (empty) continue;
        double diam = side.to_double() * std::sqrt(static_cast<double>(n));
        TubeWalk walk{gp_, &params_, &shifts, j,
                      params_.c0 * diam, params_.band_factor * params_.c0 * diam, &fn};
        walk.recurse(ka, kb);
    }
}

void WhitneyCollection::for_each(const std::function<void(const ShiftedCube&)>& fn) const {
    for (const auto& shifts : all_shift_tuples(gp_->n())) for_each_in_mesh(shifts, fn);
}

std::vector<ShiftedCube> WhitneyCollection::materialize(std::size_t limit) const {
    std::vector<ShiftedCube> out;
    for_each([&](const ShiftedCube& q) {
        if (out.size() >= limit) throw std::runtime_error("geometry: whitney materialize limit exceeded");
        out.push_back(q);
    });
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace tfa
