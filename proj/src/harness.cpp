#include "tfa/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <sstream>

namespace tfa {

using nlohmann::json;

Rational parse_rational(const std::string& s) {
    auto slash = s.find('/');
    if (slash != std::string::npos) {
        return Rational(std::stoll(s.substr(0, slash)), std::stoll(s.substr(slash + 1)));
    }
    if (s.find('.') != std::string::npos) return Rational::from_double(std::stod(s), 24);
    return Rational(std::stoll(s));
}

Rational ExponentTuple::sum() const {
    Rational s(0);
    for (const auto& a : alpha) s += a;
    return s;
}

TupleClassification tuple_classify(const ExponentTuple& a) {
    int negatives = 0;
    int bad = -1;
    for (int i = 0; i < a.n(); ++i) {
        if (!(a.alpha[i] < Rational(1))) return {TupleClass::inadmissible, -1};
        if (a.alpha[i] < Rational(0)) {
            ++negatives;
            bad = i;
        }
    }
    if (a.sum() != Rational(1)) return {TupleClass::inadmissible, -1};
    if (negatives > 1) return {TupleClass::inadmissible, -1};
    return negatives == 1 ? TupleClassification{TupleClass::bad, bad}
                          : TupleClassification{TupleClass::good, -1};
}

bool region_q_member(const ExponentTuple& a, int k) {
    const int n = a.n();
    std::vector<Rational> sorted = a.alpha;
    std::sort(sorted.begin(), sorted.end(), [](const Rational& x, const Rational& y) { return y < x; });
    Rational prefix(0);
    for (int r = 1; r <= n; ++r) {
        prefix += sorted[r - 1];
        if (!(prefix < Rational(n - 2 * k + r, 2))) return false;
    }
    return true;
}

bool region_q_member_bruteforce(const ExponentTuple& a, int k) {
    const int n = a.n();
    for (unsigned mask = 1; mask < (1u << n); ++mask) {
        Rational s(0);
        int r = 0;
        for (int i = 0; i < n; ++i)
            if (mask & (1u << i)) {
                s += a.alpha[i];
                ++r;
            }
        if (!(s < Rational(n - 2 * k + r, 2))) return false;
    }
    return true;
}

bool hull_member(const std::vector<Rational>& x, const std::vector<Rational>& a) {
    if (x.size() != a.size()) return false;
    std::vector<Rational> xs = x, as = a;
    auto desc = [](const Rational& p, const Rational& q) { return q < p; };
    std::sort(xs.begin(), xs.end(), desc);
    std::sort(as.begin(), as.end(), desc);
    Rational px(0), pa(0);
    for (std::size_t r = 0; r + 1 < xs.size(); ++r) {
        px += xs[r];
        pa += as[r];
        if (pa < px) return false;
    }
    px += xs.back();
    pa += as.back();
    return px == pa;
}

GridSet GridSet::from_intervals(const GridSpec& spec,
                                const std::vector<std::pair<double, double>>& intervals) {
    GridSet s{spec, std::vector<std::uint8_t>(spec.M, 0)};
    const double h = spec.h();
    for (auto [a, b] : intervals) {
        if (!(b > a)) continue;
        // Sample x_j belongs iff a <= x_j < b (half-open, exact at cell
        // resolution).
        auto lo = static_cast<std::int64_t>(std::ceil(a / h - 1e-9));
        auto hi = static_cast<std::int64_t>(std::ceil(b / h - 1e-9));
        for (std::int64_t j = lo; j < hi; ++j) {
            std::int64_t w = ((j % static_cast<std::int64_t>(spec.M)) + spec.M) % spec.M;
            s.mask[static_cast<std::size_t>(w)] = 1;
        }
    }
    return s;
}

std::size_t GridSet::count() const {
    std::size_t c = 0;
    for (auto v : mask) c += v;
    return c;
}

GridFunction GridSet::indicator() const {
    std::vector<cplx> vals(spec.M);
    for (std::size_t j = 0; j < spec.M; ++j) vals[j] = mask[j] ? 1.0 : 0.0;
    return GridFunction(spec, std::move(vals));
}

GridSet GridSet::translated(std::int64_t cells) const {
    GridSet out{spec, std::vector<std::uint8_t>(spec.M, 0)};
    for (std::size_t j = 0; j < spec.M; ++j) {
        std::size_t dst = static_cast<std::size_t>(
            ((static_cast<std::int64_t>(j) + cells) % static_cast<std::int64_t>(spec.M) + spec.M) % spec.M);
        out.mask[dst] = mask[j];
    }
    return out;
}

ExceptionalSetResult build_exceptional_set(const std::vector<GridSet>& sets) {
    if (sets.empty()) throw std::invalid_argument("harness: no sets");
    const GridSet& en = sets.back();
    if (en.empty()) throw EmptySet();
    const std::size_t m = en.spec.M;

    std::vector<std::vector<double>> maximal;
    std::vector<double> measures;
    maximal.reserve(sets.size());
    for (const auto& e : sets) {
        GridFunction mf = hl_maximal(e.indicator());
        std::vector<double> vals(m);
        for (std::size_t j = 0; j < m; ++j) vals[j] = mf[j].real();
        maximal.push_back(std::move(vals));
        measures.push_back(e.measure());
    }

    for (int exp2 = 1; exp2 <= 10; ++exp2) {
        double c = std::pow(2.0, exp2);
        GridSet major{en.spec, std::vector<std::uint8_t>(m, 0)};
        std::size_t kept = 0;
        for (std::size_t j = 0; j < m; ++j) {
            if (!en.mask[j]) continue;
            bool ok = true;
            for (std::size_t i = 0; i < sets.size(); ++i)
                if (maximal[i][j] >= c * measures[i]) {
                    ok = false;
                    break;
                }
            if (ok) {
                major.mask[j] = 1;
                ++kept;
            }
        }
        if (2 * kept >= en.count()) {
            ExceptionalSetResult out;
            out.major_subset = std::move(major);
            out.c_used = c;
            out.removed_measure = (static_cast<double>(en.count() - kept)) * en.spec.h();
            return out;
        }
    }
    throw NoMajorizingC();
}

double lambda_avg(const RatInterval& interval, const GridSet& set, int big_n) {
    if (set.empty()) throw EmptySet();
    const GridSpec& g = set.spec;
    CutoffWeight w(interval, big_n, g.L);
    double acc = 0.0;
    for (std::size_t j = 0; j < g.M; ++j)
        if (set.mask[j]) acc += w(g.x(j));
    acc *= g.h();
    return acc / (interval.length().to_double() * set.measure());
}

DecayCheckReport decay_check(const std::vector<GridSet>& major_subsets, int big_n) {
    DecayCheckReport rep;
    const GridSpec& g = major_subsets.front().spec;
    const Rational lrat = Rational::from_double(g.L, 24);
    const int n = static_cast<int>(major_subsets.size());
    // All dyadic intervals of the torus tree down to single cells.
    for (std::size_t len = g.M; len >= 1; len /= 2) {
        for (std::size_t start = 0; start < g.M; start += len) {
            RatInterval iv{lrat * Rational(static_cast<std::int64_t>(start)) / Rational(static_cast<std::int64_t>(g.M)),
                           lrat * Rational(static_cast<std::int64_t>(start + len)) / Rational(static_cast<std::int64_t>(g.M))};
            double sum_small = 0.0;
            for (int i = 0; i + 1 < n; ++i) sum_small += lambda_avg(iv, major_subsets[i], big_n);
            double ln = lambda_avg(iv, major_subsets[n - 1], big_n);
            double c = ln * std::pow(1.0 + sum_small, big_n - 1);
            rep.max_constant = std::max(rep.max_constant, c);
            ++rep.intervals_checked;
        }
    }
    return rep;
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
    ExperimentConfig c;
    if (j.contains("symbol")) c.symbol = j["symbol"].get<std::string>();
    if (j.contains("n")) c.n = j["n"].get<int>();
    if (j.contains("k")) c.k = j["k"].get<int>();
    if (j.contains("L")) c.L = j["L"].get<double>();
    if (j.contains("M")) c.M = j["M"].get<std::size_t>();
    if (j.contains("alpha"))
        for (const auto& a : j["alpha"]) c.alpha.alpha.push_back(parse_rational(a.get<std::string>()));
    if (j.contains("sets"))
        for (const auto& set : j["sets"]) {
            std::vector<std::pair<double, double>> ivs;
            for (const auto& iv : set) ivs.emplace_back(iv[0].get<double>(), iv[1].get<double>());
            c.sets.push_back(std::move(ivs));
        }
    if (j.contains("N")) c.big_n = j["N"].get<int>();
    if (j.contains("C0")) c.c0 = j["C0"].get<double>();
    if (j.contains("C1")) c.c1 = j["C1"].get<int>();
    if (j.contains("trials")) c.trials = j["trials"].get<int>();
    if (j.contains("octaves")) c.octaves = j["octaves"].get<int>();
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("sweep")) c.sweep = j["sweep"].get<std::string>();
    if (j.contains("force")) c.force = j["force"].get<bool>();
    if (j.contains("theta")) for (const auto& t : j["theta"]) c.theta.push_back(t.get<double>());
    if (j.contains("freq_window")) c.freq_window = j["freq_window"].get<double>();
    if (j.contains("j_min")) c.j_min = j["j_min"].get<int>();
    if (j.contains("j_max")) c.j_max = j["j_max"].get<int>();
    return c;
}

json ExperimentConfig::to_json() const {
    json j;
    j["symbol"] = symbol;
    j["n"] = n;
    j["k"] = k;
    j["L"] = L;
    j["M"] = M;
    json al = json::array();
    for (const auto& a : alpha.alpha) al.push_back(a.str());
    j["alpha"] = al;
    json ss = json::array();
    for (const auto& set : sets) {
        json ivs = json::array();
        for (auto [a, b] : set) ivs.push_back(json::array({a, b}));
        ss.push_back(ivs);
    }
    j["sets"] = ss;
    j["N"] = big_n;
    j["C0"] = c0;
    j["C1"] = c1;
    j["trials"] = trials;
    j["octaves"] = octaves;
    j["seed"] = seed;
    j["sweep"] = sweep;
    j["force"] = force;
    j["freq_window"] = freq_window;
    j["j_min"] = j_min;
    j["j_max"] = j_max;
    return j;
}

json ExperimentReport::to_json() const {
    json j;
    j["name"] = name;
    j["seed"] = seed;
    j["pass"] = pass;
    j["runtime_ms"] = runtime_ms;
    j["details"] = details;
    return j;
}

std::vector<double> derive_theta(const ExponentTuple& alpha, int k) {
    const int n = alpha.n();
    std::vector<double> theta(n);
    double acc = 0.0;
    for (int i = 0; i + 1 < n; ++i) {
        theta[i] = 2.0 * alpha.alpha[i].to_double() - 1.0;
        acc += theta[i];
    }
    theta[n - 1] = static_cast<double>(n - 2 * k) - acc;
    return theta;
}

namespace {

struct NormalizedInstance {
    std::vector<GridSet> original;   // E_i
    std::vector<GridSet> major;      // E'_i (major subset at the bad index)
    std::vector<GridFunction> f;     // normalized, band-limited inputs
    double c_used = 0.0;
    std::int64_t band = 0;
};

GridFunction bandlimit_to(const GridFunction& f, std::int64_t band) {
    const std::size_t m = f.spec().M;
    std::vector<cplx> sp(m, cplx{0.0, 0.0});
    for (std::int64_t k = -band; k <= band; ++k) {
        std::size_t idx = static_cast<std::size_t>(((k % static_cast<std::int64_t>(m)) + m) % m);
        sp[idx] = f.spectrum()[idx];
    }
    return GridFunction::from_spectrum(f.spec(), sp);
}

/// Phases assigned by rank inside the set, so translated instances draw
/// identical values at translated positions.
GridFunction random_unimodular_on(const GridSet& set, std::mt19937_64& rng) {
    std::vector<cplx> vals(set.spec.M, cplx{0.0, 0.0});
    for (std::size_t j = 0; j < set.spec.M; ++j)
        if (set.mask[j]) vals[j] = unit_phase(rng);
    return GridFunction(set.spec, std::move(vals));
}

NormalizedInstance normalize_instance(const ExperimentConfig& cfg,
                                      const std::vector<GridSet>& sets, int bad_index,
                                      std::mt19937_64& rng) {
    NormalizedInstance inst;
    inst.original = sets;
    inst.major = sets;
    if (bad_index >= 0) {
        // The spec's construction removes the exceptional set from the
        // bad-index set only; reorder so it sits last for the search.
        std::vector<GridSet> ordered;
        for (std::size_t i = 0; i < sets.size(); ++i)
            if (static_cast<int>(i) != bad_index) ordered.push_back(sets[i]);
        ordered.push_back(sets[static_cast<std::size_t>(bad_index)]);
        auto exc = build_exceptional_set(ordered);
        inst.major[static_cast<std::size_t>(bad_index)] = exc.major_subset;
        inst.c_used = exc.c_used;
    }
    inst.band = static_cast<std::int64_t>(cfg.M / (2 * static_cast<std::size_t>(cfg.n))) - 1;
    for (int i = 0; i < cfg.n; ++i) {
        const GridSet& e = inst.major[static_cast<std::size_t>(i)];
        if (e.empty()) throw EmptySet();
        GridFunction raw = random_unimodular_on(e, rng);
        double scale = 1.0 / std::sqrt(e.measure());
        std::vector<cplx> vals(raw.samples());
        for (auto& v : vals) v *= scale;
        inst.f.push_back(bandlimit_to(GridFunction(e.spec, std::move(vals)), inst.band));
    }
    return inst;
}

std::vector<std::vector<std::pair<double, double>>> sweep_sets(const ExperimentConfig& cfg, int octave) {
    auto out = cfg.sets;
    const double factor = std::pow(2.0, octave);
    if (cfg.sweep == "degenerate") {
        // Shrink every set except the last; the last set stays fixed.
        for (std::size_t i = 0; i + 1 < out.size(); ++i)
            for (auto& [a, b] : out[i]) b = a + (b - a) / factor;
    } else {
        for (auto& set : out)
            for (auto& [a, b] : set) {
                a *= factor;
                b *= factor;
            }
    }
    return out;
}

}  // namespace

ExperimentReport rwt_experiment(const ExperimentConfig& cfg) {
    auto t0 = std::chrono::steady_clock::now();
    ExperimentReport rep;
    rep.name = "rwt_experiment";
    rep.seed = cfg.seed;

    auto cls = tuple_classify(cfg.alpha);
    bool in_region = cls.cls != TupleClass::inadmissible && region_q_member(cfg.alpha, cfg.k);
    rep.details["alpha_class"] =
        cls.cls == TupleClass::good ? "good" : (cls.cls == TupleClass::bad ? "bad" : "inadmissible");
    rep.details["in_region_q"] = in_region;
    if (!in_region && !cfg.force) {
        rep.details["rejected"] = true;
        rep.pass = false;
        rep.runtime_ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        return rep;
    }

    const GridSpec grid(cfg.L, cfg.M);
    Symbol sym = builtin(cfg.symbol, cfg.n);
    const int bad_index = cls.cls == TupleClass::bad ? cls.bad_index : -1;

    std::vector<double> octave_ratios;
    json octave_rows = json::array();
    std::ostringstream csv;
    csv << "scale_octave,ratio,bucket\n";
    for (int oct = 0; oct < cfg.octaves; ++oct) {
        auto intervals = sweep_sets(cfg, oct);
        std::vector<GridSet> sets;
        for (const auto& ivs : intervals) sets.push_back(GridSet::from_intervals(grid, ivs));
        double alpha_product = 1.0;
        for (int i = 0; i < cfg.n; ++i)
            alpha_product *= std::pow(sets[static_cast<std::size_t>(i)].measure(),
                                      cfg.alpha.alpha[static_cast<std::size_t>(i)].to_double());
        double max_ratio = 0.0;
        double c_used = 0.0;
        for (int trial = 0; trial < cfg.trials; ++trial) {
            std::mt19937_64 rng(cfg.seed + 1000003ULL * static_cast<std::uint64_t>(oct) +
                                static_cast<std::uint64_t>(trial));
            NormalizedInstance inst = normalize_instance(cfg, sets, bad_index, rng);
            c_used = inst.c_used;
            FormInstance form(sym, grid, inst.band);
            cplx lam = cfg.n == 3 ? eval_form_fast3(form, inst.f) : eval_form(form, inst.f);
            // |Lambda(F_1,...,F_n)| with the paper normalization restored:
            // f_i = F_i / |E'_i|^{1/2}.
            double denorm = 1.0;
            for (int i = 0; i < cfg.n; ++i)
                denorm *= std::sqrt(inst.major[static_cast<std::size_t>(i)].measure());
            double ratio = std::abs(lam) * denorm / alpha_product;
            max_ratio = std::max(max_ratio, ratio);
        }
        octave_ratios.push_back(max_ratio);
        octave_rows.push_back({{"octave", oct}, {"max_ratio", max_ratio}, {"C_used", c_used}});
        csv << oct << "," << max_ratio << ",0\n";
    }
    double trend = octave_ratios.front() > 0.0 ? octave_ratios.back() / octave_ratios.front() : 0.0;
    rep.details["octaves"] = octave_rows;
    rep.details["trend_last_over_first"] = trend;
    rep.details["max_ratio"] = *std::max_element(octave_ratios.begin(), octave_ratios.end());
    rep.pass = in_region ? trend <= 2.0 && trend >= 0.0 : false;
    rep.plot_csv = csv.str();
    rep.runtime_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return rep;
}

ExperimentReport discretized_pipeline(const ExperimentConfig& cfg) {
    auto t0 = std::chrono::steady_clock::now();
    ExperimentReport rep;
    rep.name = "discretized_pipeline";
    rep.seed = cfg.seed;
    if (cfg.k != 0 && cfg.k != 1) rep.details["warning"] = "k outside {0,1}: outside acceptance scope";

    const GridSpec grid(cfg.L, cfg.M);
    Symbol sym = builtin(cfg.symbol, cfg.n);
    if (!sym.singular() && cfg.k != 0)
        throw std::invalid_argument("harness: symbol has no singular set but k > 0");
    SingularSubspace gp = sym.singular() ? *sym.singular() : SingularSubspace(cfg.n, {});

    auto cls = tuple_classify(cfg.alpha);
    const int bad_index = cls.cls == TupleClass::bad ? cls.bad_index : -1;
    std::vector<GridSet> sets;
    for (const auto& ivs : cfg.sets) sets.push_back(GridSet::from_intervals(grid, ivs));
    std::mt19937_64 rng(cfg.seed);
    NormalizedInstance inst = normalize_instance(cfg, sets, bad_index, rng);

    // Multi-tiles on the instance windows.
    MultiTileParams params;
    params.whitney.c0 = cfg.c0;
    params.whitney.j_min = cfg.j_min;
    params.whitney.j_max = cfg.j_max;
    Rational w = Rational::from_double(cfg.freq_window, 24);
    params.whitney.window.axes.assign(static_cast<std::size_t>(cfg.n), RatInterval{-w, w});
    params.mesh.assign(static_cast<std::size_t>(cfg.n), Shift::none);
    params.spatial_window = RatInterval{Rational(0), Rational::from_double(cfg.L, 24)};
    std::vector<MultiTile> tiles = enumerate_multitiles(gp, params);
    rep.details["multi_tiles"] = tiles.size();

    std::vector<double> a(static_cast<std::size_t>(cfg.n));
    for (int i = 0; i < cfg.n; ++i)
        a[static_cast<std::size_t>(i)] = std::sqrt(inst.original[static_cast<std::size_t>(i)].measure());
    std::vector<double> theta = cfg.theta;
    if (theta.empty()) theta = derive_theta(cfg.alpha, cfg.k);
    bool theta_ok = true;
    double theta_sum = 0.0;
    for (double t : theta) {
        theta_sum += t;
        if (!(t > 0.0 && t < 1.0)) theta_ok = false;
    }
    rep.details["theta"] = theta;
    rep.details["theta_in_range"] = theta_ok;

    std::vector<TileNormCache> caches;
    caches.reserve(static_cast<std::size_t>(cfg.n));
    for (int i = 0; i < cfg.n; ++i)
        caches.emplace_back(inst.f[static_cast<std::size_t>(i)], cfg.big_n);
    std::vector<const TileNormCache*> cache_ptrs;
    for (auto& c : caches) cache_ptrs.push_back(&c);

    // A = sup_i sup_P ||f_i||_{P_i}.
    double big_a = 0.0;
    for (const auto& mt : tiles)
        for (int i = 0; i < cfg.n; ++i) big_a = std::max(big_a, (*cache_ptrs[static_cast<std::size_t>(i)])(mt.tile(i)));
    rep.details["A"] = big_a;

    // Bucket multi-tiles by the dyadic exponents of lambda_i(I_P).
    std::map<std::vector<int>, std::vector<std::size_t>> buckets;
    std::map<DyadicInterval, std::vector<double>> lambda_cache;
    for (std::size_t id = 0; id < tiles.size(); ++id) {
        auto it = lambda_cache.find(tiles[id].time);
        if (it == lambda_cache.end()) {
            std::vector<double> lam(static_cast<std::size_t>(cfg.n));
            for (int i = 0; i < cfg.n; ++i)
                lam[static_cast<std::size_t>(i)] =
                    lambda_avg(tiles[id].time.interval(), inst.major[static_cast<std::size_t>(i)], cfg.big_n);
            it = lambda_cache.emplace(tiles[id].time, std::move(lam)).first;
        }
        std::vector<int> key(static_cast<std::size_t>(cfg.n));
        for (int i = 0; i < cfg.n; ++i) {
            double lam = std::max(it->second[static_cast<std::size_t>(i)], 1e-30);
            key[static_cast<std::size_t>(i)] = std::clamp(static_cast<int>(std::floor(std::log2(lam))), -99, 99);
        }
        buckets[key].push_back(id);
    }

    const double i0_len = cfg.L;  // tiles live inside the fundamental domain
    double max_bucket_ratio = 0.0;
    double total_model_sum = 0.0;
    json bucket_rows = json::array();
    std::ostringstream csv;
    csv << "scale_octave,ratio,bucket\n";
    int bucket_id = 0;
    for (const auto& [key, ids] : buckets) {
        std::vector<MultiTile> sub;
        for (std::size_t id : ids) sub.push_back(tiles[id]);
        double ms = model_sum(sub, cache_ptrs);
        total_model_sum += ms;
        double rhs = std::pow(std::max(big_a, 1e-300), static_cast<double>(cfg.n - 2 * cfg.k) - theta_sum) *
                     std::min(1.0, i0_len);
        for (int i = 0; i < cfg.n; ++i) {
            double lam = std::pow(2.0, key[static_cast<std::size_t>(i)]);
            rhs *= std::pow(lam * a[static_cast<std::size_t>(i)], theta[static_cast<std::size_t>(i)]) * (1.0 + lam);
        }
        double ratio = rhs > 0.0 ? ms / rhs : 0.0;
        max_bucket_ratio = std::max(max_bucket_ratio, ratio);
        bucket_rows.push_back({{"bucket", key}, {"tiles", ids.size()}, {"model_sum", ms}, {"rhs", rhs}, {"ratio", ratio}});
        csv << 0 << "," << ratio << "," << bucket_id++ << "\n";
    }
    double a_theta = 1.0;
    for (int i = 0; i < cfg.n; ++i)
        a_theta *= std::pow(a[static_cast<std::size_t>(i)], theta[static_cast<std::size_t>(i)]);
    rep.details["buckets"] = bucket_rows;
    rep.details["max_bucket_ratio"] = max_bucket_ratio;
    rep.details["total_model_sum"] = total_model_sum;
    rep.details["a_theta_product"] = a_theta;
    rep.details["total_over_a_theta"] = a_theta > 0.0 ? total_model_sum / a_theta : 0.0;
    rep.pass = std::isfinite(max_bucket_ratio);
    rep.plot_csv = csv.str();
    rep.runtime_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return rep;
}

}  // namespace tfa
