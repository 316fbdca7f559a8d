#include "tfa/tilekit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

namespace tfa {

namespace {

void require_same_axis(const Tile& a, const Tile& b) {
    if (a.axis != b.axis) throw IndexMismatch();
}

}  // namespace

bool TileOrder::lt(const Tile& p1, const Tile& p) const {
    require_same_axis(p1, p);
    const RatInterval i1 = p1.time.interval(), i = p.time.interval();
    if (!(i1.subset_of(i) && !(i1 == i))) return false;
    return p.freq.interval().subset_of(p1.freq.interval().dilate(Rational(3)));
}

bool TileOrder::le(const Tile& p1, const Tile& p) const {
    require_same_axis(p1, p);
    return p1 == p || lt(p1, p);
}

bool TileOrder::lesssim(const Tile& p1, const Tile& p) const {
    require_same_axis(p1, p);
    if (!p1.time.interval().subset_of(p.time.interval())) return false;
    return p.freq.interval().subset_of(p1.freq.interval().dilate(cc0));
}

bool TileOrder::lesssim_prime(const Tile& p1, const Tile& p) const {
    return lesssim(p1, p) && !le(p1, p);
}

bool TileOrder::lesssim_plus(const Tile& p1, const Tile& p) const {
    return lesssim_prime(p1, p) && p1.xi_center() > p.xi_center();
}

bool TileOrder::lesssim_minus(const Tile& p1, const Tile& p) const {
    return lesssim_prime(p1, p) && p1.xi_center() < p.xi_center();
}

ShiftedCube MultiTile::cube() const {
    ShiftedCube q;
    q.j = freqs[0].j;
    q.offsets.reserve(freqs.size());
    q.shifts.reserve(freqs.size());
    for (const auto& w : freqs) {
        q.offsets.push_back(w.k);
        q.shifts.push_back(w.shift);
    }
    return q;
}

bool operator<(const MultiTile& a, const MultiTile& b) {
    if (a.time != b.time) return a.time < b.time;
    return a.freqs < b.freqs;
}

std::vector<MultiTile> enumerate_multitiles(const SingularSubspace& gp, const MultiTileParams& params) {
    WhitneyCollection coll(gp, params.whitney);
    std::vector<MultiTile> out;
    coll.for_each_in_mesh(params.mesh, [&](const ShiftedCube& q) {
        if (!q.intersects_gamma()) return;
        // Spatial slots: I in D^1_0 of length 2^{-j} inside the window.
        const int js = -q.j;
        Rational len = Rational::pow2(js);
        Rational kmin_r = params.spatial_window.lo / len;
        Rational kmax_r = params.spatial_window.hi / len - Rational(1);
        std::int64_t kmin = (-((-kmin_r).floor_int())).num();
        std::int64_t kmax = kmax_r.floor_int().num();
        for (std::int64_t k = kmin; k <= kmax; ++k) {
            MultiTile mt;
            mt.time = DyadicInterval{js, k, Shift::none};
            mt.freqs.reserve(q.dim());
            for (int i = 0; i < q.dim(); ++i) mt.freqs.push_back(q.axis(i));
            out.push_back(std::move(mt));
        }
    });
    std::sort(out.begin(), out.end());
    return out;
}

RankReport rank_check(const std::vector<MultiTile>& collection, const SingularSubspace& gp,
                      double /*c0*/, const TileOrder& order) {
    RankReport rep;
    if (gp.k() == 0) return rep;  // vacuous: no frequency parameters
    const int n = gp.n();
    std::vector<std::vector<int>> subsets;
    for (const auto& gm : gp.graph_maps()) subsets.push_back(gm.subset);

    for (std::size_t a = 0; a < collection.size(); ++a) {
        for (std::size_t b = 0; b < collection.size(); ++b) {
            if (a == b) continue;
            const MultiTile& pp = collection[a];  // P'
            const MultiTile& p = collection[b];   // P
            ++rep.pairs_checked;
            for (const auto& s : subsets) {
                bool premise = true;
                for (int idx : s)
                    if (!order.le(pp.tile(idx), p.tile(idx))) {
                        premise = false;
                        break;
                    }
                if (!premise) continue;
                ++rep.premise_hits_first;
                bool all = true;
                int strict = 0;
                for (int i = 0; i < n; ++i) {
                    if (!order.lesssim(pp.tile(i), p.tile(i))) all = false;
                    if (order.lesssim_prime(pp.tile(i), p.tile(i))) ++strict;
                }
                if (!all) ++rep.violations_first;
                // "Much smaller" read as a gap of at least two octaves.
                if (pp.time.length() * Rational(4) <= p.time.length()) {
                    ++rep.premise_hits_second;
                    if (strict < 2) ++rep.violations_second;
                }
            }
        }
    }
    return rep;
}

namespace {

void check_tile_band(const Tile& p, const GridSpec& g) {
    Rational lrat = Rational::from_double(g.L, 24);
    Rational nyq = Rational(static_cast<std::int64_t>(g.M / 2)) / lrat;
    if (p.freq.right() > nyq || p.freq.left() < -nyq)
        throw BandLimitViolated("tile frequency interval exceeds the grid band");
}

GridFunction filter_by_interval(const GridFunction& f, const DyadicInterval& w) {
    AxisBump bump(w.interval(), 0.9);
    return band_filter(f, [&bump](double x) { return bump(x); });
}

double norm_from_filtered(const GridFunction& filtered, const Tile& p, int big_n) {
    CutoffWeight w(p.time.interval(), 2 * big_n, filtered.spec().L);
    return weighted_l1(filtered, w) / p.time.length().to_double();
}

}  // namespace

double tile_norm(const GridFunction& f, const Tile& p, int big_n) {
    check_tile_band(p, f.spec());
    GridFunction filtered = filter_by_interval(f, p.freq);
    return norm_from_filtered(filtered, p, big_n);
}

double TileNormCache::operator()(const Tile& p) const {
    auto key = std::make_pair(p.time, p.freq);
    auto it = norms_.find(key);
    if (it != norms_.end()) return it->second;
    auto fit = filtered_.find(p.freq);
    if (fit == filtered_.end()) {
        check_tile_band(p, f_->spec());
        fit = filtered_.emplace(p.freq, filter_by_interval(*f_, p.freq)).first;
    }
    double v = norm_from_filtered(fit->second, p, big_n_);
    norms_.emplace(key, v);
    return v;
}

double tree_size(const std::vector<MultiTile>& collection, const Tree& t, int i,
                 const TileNormCache& norms, const TileOrder& order) {
    const Tile top = t.top.tile(i);
    double l2 = 0.0;
    double sup = 0.0;
    for (std::size_t id : t.members) {
        const Tile p = collection[id].tile(i);
        double np = norms(p);
        sup = std::max(sup, np);
        if (order.lesssim_prime(p, top))
            l2 += collection[id].time.length().to_double() * np * np;
    }
    double it_len = t.top.time.length().to_double();
    return std::sqrt(l2 / it_len) + sup;
}

double tree_sup_norm(const std::vector<MultiTile>& collection, const Tree& t, int i,
                     const TileNormCache& norms) {
    double sup = 0.0;
    for (std::size_t id : t.members) sup = std::max(sup, norms(collection[id].tile(i)));
    return sup;
}

bool strongly_disjoint(const std::vector<MultiTile>& collection, const Tree& a, const Tree& b,
                       int i) {
    const RatInterval ia = a.top.time.interval();
    const RatInterval ib = b.top.time.interval();
    for (std::size_t pa : a.members) {
        const Tile ta = collection[pa].tile(i);
        for (std::size_t pb : b.members) {
            const Tile tb = collection[pb].tile(i);
            if (ta == tb) return false;
            const RatInterval wa = ta.freq.interval(), wb = tb.freq.interval();
            if (wa.subset_of(wb) && !(wa == wb)) {
                if (collection[pb].time.interval().intersects_open(ia)) return false;
            }
            if (wb.subset_of(wa) && !(wb == wa)) {
                if (collection[pa].time.interval().intersects_open(ib)) return false;
            }
        }
    }
    return true;
}

std::vector<MultiTile> refine_collection(std::vector<MultiTile> collection, int i, int c1) {
    if (c1 < 1) throw std::invalid_argument("tilekit: c1 must be >= 1");
    std::sort(collection.begin(), collection.end());
    // (1) one multi-tile per spatial interval: smallest frequency cube.
    std::vector<MultiTile> uniq;
    for (auto& mt : collection) {
        if (!uniq.empty() && uniq.back().time == mt.time) {
            if (mt.cube() < uniq.back().cube()) uniq.back() = mt;
        } else {
            uniq.push_back(mt);
        }
    }
    // (2) keep the most populated residue class of time scales mod c1.
    std::map<int, std::size_t> residue_count;
    for (const auto& mt : uniq) {
        int r = ((mt.time.j % c1) + c1) % c1;
        ++residue_count[r];
    }
    int best_r = 0;
    std::size_t best_c = 0;
    for (auto [r, c] : residue_count)
        if (c > best_c) {
            best_c = c;
            best_r = r;
        }
    std::vector<MultiTile> lattice;
    for (auto& mt : uniq)
        if (((mt.time.j % c1) + c1) % c1 == best_r) lattice.push_back(std::move(mt));
    // (3) one frequency tuple per w_{P_i} value.
    std::map<DyadicInterval, std::vector<DyadicInterval>> tuple_of;
    for (const auto& mt : lattice) {
        auto it = tuple_of.find(mt.freqs[i]);
        if (it == tuple_of.end() || mt.freqs < it->second) tuple_of[mt.freqs[i]] = mt.freqs;
    }
    std::vector<MultiTile> out;
    for (auto& mt : lattice)
        if (mt.freqs == tuple_of[mt.freqs[i]]) out.push_back(std::move(mt));
    return out;
}

void check_refined(const std::vector<MultiTile>& collection, int i, int c1) {
    std::set<std::pair<int, std::int64_t>> times;
    std::map<DyadicInterval, std::vector<DyadicInterval>> tuple_of;
    int residue = -1;
    for (const auto& mt : collection) {
        if (!times.insert({mt.time.j, mt.time.k}).second)
            throw RefinementViolated("duplicate spatial interval");
        int r = ((mt.time.j % c1) + c1) % c1;
        if (residue < 0) residue = r;
        if (r != residue) throw RefinementViolated("spatial scales off the 2^C1 lattice");
        auto it = tuple_of.find(mt.freqs[i]);
        if (it == tuple_of.end())
            tuple_of[mt.freqs[i]] = mt.freqs;
        else if (it->second != mt.freqs)
            throw RefinementViolated("w_{P_i} does not determine the frequency tuple");
    }
}

namespace {

// Tie-break for top choices: leftmost I_T, then smallest |I_T|, then
// lexicographic frequency offsets.
bool det_top_less(const MultiTile& a, const MultiTile& b) {
    Rational la = a.time.left(), lb = b.time.left();
    if (la != lb) return la < lb;
    if (a.time.j != b.time.j) return a.time.j < b.time.j;
    return a.freqs < b.freqs;
}

}  // namespace

SelectionOutcome select_trees(const std::vector<MultiTile>& collection, const GridFunction& f,
                              const SelectionParams& params) {
    check_refined(collection, params.i, params.c1);
    const int i = params.i;
    const std::size_t count = collection.size();
    TileNormCache norm_cache(f, params.big_n);
    const TileOrder& order = params.order;

    // Precompute per-index relations and norms once; the greedy loops
    // then run on flat arrays.
    std::vector<double> norm(count), len(count);
    for (std::size_t id = 0; id < count; ++id) {
        norm[id] = norm_cache(collection[id].tile(i));
        len[id] = collection[id].time.length().to_double();
    }
    std::vector<std::uint8_t> le_m(count * count), lt_m(count * count), plus_m(count * count),
        minus_m(count * count);
    for (std::size_t a = 0; a < count; ++a) {
        const Tile pa = collection[a].tile(i);
        for (std::size_t b = 0; b < count; ++b) {
            const Tile pb = collection[b].tile(i);
            lt_m[a * count + b] = order.lt(pa, pb);
            le_m[a * count + b] = order.le(pa, pb);
            plus_m[a * count + b] = order.lesssim_plus(pa, pb);
            minus_m[a * count + b] = order.lesssim_minus(pa, pb);
        }
    }

    std::vector<bool> alive(count, true);
    SelectionOutcome out;

    const double heavy = std::pow(2.0, -params.m - 2);
    const double mass_factor = std::pow(2.0, -2 * params.m - 5);

    auto add_tree = [&](std::size_t top, std::vector<std::size_t> members, TreeOrigin origin) {
        Tree t;
        t.top = collection[top];
        t.tree_axis = i;
        t.members = std::move(members);
        out.sum_tree_lengths += len[top];
        out.trees.push_back(SelectedTree{std::move(t), origin});
    };

    // Pre-pass: heavy tiles, maximal under <, each claims everything
    // below it.
    {
        std::vector<std::size_t> strong;
        for (std::size_t id = 0; id < count; ++id)
            if (norm[id] >= heavy) strong.push_back(id);
        std::vector<std::size_t> tops;
        for (std::size_t a : strong) {
            bool maximal = true;
            for (std::size_t b : strong)
                if (a != b && lt_m[a * count + b]) {
                    maximal = false;
                    break;
                }
            if (maximal) tops.push_back(a);
        }
        std::sort(tops.begin(), tops.end(),
                  [&](std::size_t a, std::size_t b) { return det_top_less(collection[a], collection[b]); });
        for (std::size_t top : tops) {
            std::vector<std::size_t> members;
            for (std::size_t id : strong)
                if (alive[id] && le_m[id * count + top]) members.push_back(id);
            if (members.empty()) continue;
            for (std::size_t id : members) alive[id] = false;
            add_tree(top, std::move(members), TreeOrigin::prepass);
        }
    }

    // The two greedy passes differ only in the relation and the xi
    // extremum.
    auto run_pass = [&](bool plus) {
        const std::vector<std::uint8_t>& rel = plus ? plus_m : minus_m;
        for (;;) {
            std::ptrdiff_t best = -1;
            for (std::size_t top = 0; top < count; ++top) {
                if (!alive[top]) continue;
                double mass = 0.0;
                bool any = false;
                for (std::size_t id = 0; id < count; ++id) {
                    if (!alive[id] || !rel[id * count + top]) continue;
                    any = true;
                    mass += len[id] * norm[id] * norm[id];
                }
                if (!any || mass < mass_factor * len[top]) continue;
                if (best < 0) {
                    best = static_cast<std::ptrdiff_t>(top);
                    continue;
                }
                Rational xi_t = collection[top].freqs[i].center();
                Rational xi_b = collection[static_cast<std::size_t>(best)].freqs[i].center();
                bool better;
                if (xi_t != xi_b)
                    better = plus ? (xi_t > xi_b) : (xi_t < xi_b);
                else
                    better = det_top_less(collection[top], collection[static_cast<std::size_t>(best)]);
                if (better) best = static_cast<std::ptrdiff_t>(top);
            }
            if (best < 0) break;
            const std::size_t top = static_cast<std::size_t>(best);
            std::vector<std::size_t> members, companion;
            for (std::size_t id = 0; id < count; ++id) {
                if (!alive[id]) continue;
                if (rel[id * count + top]) members.push_back(id);
                if (le_m[id * count + top]) companion.push_back(id);
            }
            for (std::size_t id : members) alive[id] = false;
            for (std::size_t id : companion) alive[id] = false;
            add_tree(top, std::move(members), plus ? TreeOrigin::plus : TreeOrigin::minus);
            add_tree(top, std::move(companion), TreeOrigin::companion);
        }
    };
    run_pass(true);
    run_pass(false);

    for (std::size_t id = 0; id < count; ++id)
        if (alive[id]) out.residual.push_back(id);

    // Counting comparator: 2^{2m} || f chi~_{I0}^{N/2} ||_2^2 on the hull.
    if (!collection.empty()) {
        Rational lo = collection.front().time.left(), hi = collection.front().time.right();
        for (const auto& mt : collection) {
            Rational l = mt.time.left(), r = mt.time.right();
            if (l < lo) lo = l;
            if (hi < r) hi = r;
        }
        CutoffWeight w(RatInterval{lo, hi}, params.big_n / 2, f.spec().L);
        double l2 = weighted_l2(f, w);
        out.counting_rhs_l2 = std::pow(2.0, 2 * params.m) * l2 * l2;
        out.counting_constant = out.counting_rhs_l2 > 0.0 ? out.sum_tree_lengths / out.counting_rhs_l2 : 0.0;
    }
    return out;
}

double max_tree_size(const std::vector<MultiTile>& collection, const std::vector<std::size_t>& subset,
                     int i, const TileNormCache& norms, const TileOrder& order) {
    if (subset.empty()) return 0.0;
    const int n = collection[subset.front()].n();
    double worst = 0.0;
    for (std::size_t top : subset) {
        for (int axis = 0; axis < n; ++axis) {
            Tree t;
            t.top = collection[top];
            t.tree_axis = axis;
            for (std::size_t id : subset)
                if (order.le(collection[id].tile(axis), collection[top].tile(axis)))
                    t.members.push_back(id);
            worst = std::max(worst, tree_size(collection, t, i, norms, order));
        }
    }
    return worst;
}

double model_sum(const std::vector<MultiTile>& collection,
                 const std::vector<const TileNormCache*>& norms) {
    double total = 0.0;
    for (const auto& mt : collection) {
        double prod = 1.0;
        for (int i = 0; i < mt.n(); ++i) prod *= (*norms[static_cast<std::size_t>(i)])(mt.tile(i));
        total += mt.time.length().to_double() * prod;
    }
    return total;
}

SpatialDominationReport spatial_domination(const std::vector<MultiTile>& collection,
                                           const std::shared_ptr<Partition>& partition,
                                           const FormInstance& base,
                                           std::span<const GridFunction> fs,
                                           const std::vector<const TileNormCache*>& norms) {
    SpatialDominationReport rep;
    for (std::size_t qi = 0; qi < partition->size(); ++qi) {
        const ShiftedCube& q = partition->cubes()[qi];
        SpatialDominationRow row;
        row.cube = q;
        for (const auto& mt : collection) {
            if (!(mt.cube() == q)) continue;
            double prod = 1.0;
            for (int i = 0; i < mt.n(); ++i) prod *= (*norms[static_cast<std::size_t>(i)])(mt.tile(i));
            row.tile_sum += mt.time.length().to_double() * prod;
        }
        FormInstance piece_form(partition->piece_symbol(qi), base.grid, base.band);
        row.lambda_abs = std::abs(eval_form(piece_form, fs));
        if (row.tile_sum > 0.0)
            row.ratio = row.lambda_abs / row.tile_sum;
        else
            row.ratio = row.lambda_abs > 1e-14 ? std::numeric_limits<double>::infinity() : 0.0;
        rep.max_ratio = std::max(rep.max_ratio, row.ratio);
        rep.rows.push_back(std::move(row));
    }
    return rep;
}

std::pair<GridFunction, WeakL1Report> tree_square_function(const std::vector<MultiTile>& collection,
                                                           const Tree& t, int i,
                                                           const GridFunction& f, int big_n,
                                                           const TileOrder& order) {
    const GridSpec& g = f.spec();
    TileNormCache norms(f, big_n);
    const Tile top = t.top.tile(i);
    std::vector<double> s2(g.M, 0.0);
    Rational lrat = Rational::from_double(g.L, 24);
    for (std::size_t id : t.members) {
        const Tile p = collection[id].tile(i);
        if (!order.lesssim_prime(p, top)) continue;
        double np = norms(p);
        if (np == 0.0) continue;
        const DyadicInterval& iv = collection[id].time;
        for (std::size_t j = 0; j < g.M; ++j) {
            Rational x = lrat * Rational(static_cast<std::int64_t>(j)) / Rational(static_cast<std::int64_t>(g.M));
            if (iv.contains(x)) s2[j] += np * np;
        }
    }
    std::vector<cplx> vals(g.M);
    std::vector<double> nz;
    for (std::size_t j = 0; j < g.M; ++j) {
        double v = std::sqrt(s2[j]);
        vals[j] = v;
        if (v > 0.0) nz.push_back(v);
    }
    GridFunction s(g, std::move(vals));

    WeakL1Report rep;
    CutoffWeight w(t.top.time.interval(), big_n, g.L);
    rep.rhs = weighted_l1(f, w);
    if (!nz.empty()) {
        std::sort(nz.begin(), nz.end());
        double med = nz[nz.size() / 2];
        for (int e = -6; e <= 6; ++e) {
            double lam = med * std::pow(2.0, e);
            std::size_t count = 0;
            for (std::size_t j = 0; j < g.M; ++j)
                if (std::abs(s[j]) > lam) ++count;
            rep.weak_norm = std::max(rep.weak_norm, lam * static_cast<double>(count) * g.h());
        }
    }
    rep.ratio = rep.rhs > 0.0 ? rep.weak_norm / rep.rhs : (rep.weak_norm > 0.0 ? INFINITY : 0.0);
    return {std::move(s), rep};
}

TreeCsReport tree_cauchy_schwarz_check(const std::vector<MultiTile>& collection, const Tree& t,
                                       const std::vector<const TileNormCache*>& norms,
                                       const TileOrder& order) {
    TreeCsReport rep;
    if (t.members.empty()) return rep;
    const int n = collection[t.members.front()].n();
    for (std::size_t id : t.members) {
        double prod = 1.0;
        for (int i = 0; i < n; ++i) prod *= (*norms[static_cast<std::size_t>(i)])(collection[id].tile(i));
        rep.lhs += collection[id].time.length().to_double() * prod;
    }
    std::vector<double> sizes(n), sups(n);
    for (int i = 0; i < n; ++i) {
        sizes[i] = tree_size(collection, t, i, *norms[static_cast<std::size_t>(i)], order);
        sups[i] = tree_sup_norm(collection, t, i, *norms[static_cast<std::size_t>(i)]);
    }
    double best = 0.0;
    for (int i1 = 0; i1 < n; ++i1)
        for (int i2 = i1 + 1; i2 < n; ++i2) {
            double v = sizes[i1] * sizes[i2];
            for (int i = 0; i < n; ++i)
                if (i != i1 && i != i2) v *= sups[i];
            best = std::max(best, v);
        }
    rep.rhs = t.top.time.length().to_double() * best;
    rep.ratio = rep.rhs > 0.0 ? rep.lhs / rep.rhs : (rep.lhs > 0.0 ? INFINITY : 0.0);
    return rep;
}

std::string multitiles_to_json(const std::vector<MultiTile>& collection) {
    std::ostringstream os;
    os << "[";
    for (std::size_t t = 0; t < collection.size(); ++t) {
        const auto& mt = collection[t];
        if (t) os << ",";
        os << "{\"time\":{\"j\":" << mt.time.j << ",\"k\":" << mt.time.k << "},\"freqs\":[";
        for (int i = 0; i < mt.n(); ++i) {
            if (i) os << ",";
            os << "{\"j\":" << mt.freqs[i].j << ",\"k\":" << mt.freqs[i].k
               << ",\"shift\":" << static_cast<int>(mt.freqs[i].shift) << "}";
        }
        os << "]}";
    }
    os << "]";
    return os.str();
}

std::string cubes_to_csv(const std::vector<ShiftedCube>& cubes) {
    std::ostringstream os;
    os << "j,shifts,offsets\n";
    for (const auto& q : cubes) {
        os << q.j << ",";
        for (int i = 0; i < q.dim(); ++i) os << static_cast<int>(q.shifts[i]);
        os << ",";
        for (int i = 0; i < q.dim(); ++i) {
            if (i) os << ";";
            os << q.offsets[i];
        }
        os << "\n";
    }
    return os.str();
}

std::string cubes_to_json(const std::vector<ShiftedCube>& cubes) {
    std::ostringstream os;
    os << "[";
    for (std::size_t t = 0; t < cubes.size(); ++t) {
        const auto& q = cubes[t];
        if (t) os << ",";
        os << "{\"j\":" << q.j << ",\"shifts\":[";
        for (int i = 0; i < q.dim(); ++i) {
            if (i) os << ",";
            os << static_cast<int>(q.shifts[i]);
        }
        os << "],\"offsets\":[";
        for (int i = 0; i < q.dim(); ++i) {
            if (i) os << ",";
            os << q.offsets[i];
        }
        os << "]}";
    }
    os << "]";
    return os.str();
}

}  // namespace tfa
