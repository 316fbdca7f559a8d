// tilescope: CLI for the time-frequency experiments.
//
// Subcommands: bht-check, whitney-check, tree-demo, rwt-sweep, pipeline,
// region. Each accepts --config <json> plus overrides, writes a JSON
// report to stdout or --out, optional plot CSV, and exits 0 iff every
// pass flag is true. TILESCOPE_THREADS caps parallelism.
#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <fstream>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

#include "tfa/forms.hpp"
#include "tfa/geometry.hpp"
#include "tfa/grid.hpp"
#include "tfa/harness.hpp"
#include "tfa/symbols.hpp"
#include "tfa/tilekit.hpp"

using nlohmann::json;
using namespace tfa;

namespace {

json load_config(const std::string& path) {
    if (path.empty()) return json::object();
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open config " + path);
    json j;
    is >> j;
    return j;
}

void emit(const json& report, const std::string& out_path, const std::string& csv,
          const std::string& csv_path) {
    if (out_path.empty()) {
        std::cout << report.dump(2) << std::endl;
    } else {
        std::ofstream os(out_path);
        os << report.dump(2) << std::endl;
    }
    if (!csv_path.empty()) {
        std::ofstream os(csv_path);
        os << csv;
    }
}

GridFunction random_bandlimited(const GridSpec& g, std::int64_t band, std::mt19937_64& rng) {
    std::vector<cplx> sp(g.M, cplx{0.0, 0.0});
    for (std::int64_t k = -band; k <= band; ++k) {
        std::size_t idx = static_cast<std::size_t>(((k % static_cast<std::int64_t>(g.M)) + g.M) % g.M);
        sp[idx] = unit_phase(rng) * (0.5 + u01(rng));
    }
    return GridFunction::from_spectrum(g, sp);
}

int run_bht_check(std::size_t m_samples, std::int64_t band, int trials, std::uint64_t seed,
                  const std::string& out, const std::string& csv_path) {
    auto t0 = std::chrono::steady_clock::now();
    GridSpec g(1.0, m_samples);
    if (band <= 0) band = static_cast<std::int64_t>(m_samples / 8);
    const double t_max = g.L / 2.0;
    FormInstance ideal(builtin("bht", 3), g, static_cast<std::int64_t>(m_samples / 2 / 3) - 1);
    FormInstance trunc(bht_truncated_symbol(t_max), g, ideal.band);

    std::mt19937_64 rng(seed);
    double max_vs_trunc = 0.0, max_vs_ideal = 0.0, max_duality = 0.0;
    std::ostringstream csv;
    csv << "scale_octave,ratio,bucket\n";
    for (int t = 0; t < trials; ++t) {
        GridFunction f1 = random_bandlimited(g, band, rng);
        GridFunction f2 = random_bandlimited(g, band, rng);
        std::vector<GridFunction> fs{f1, f2};
        GridFunction quad = bht_pv_quadrature(f1, f2, t_max);
        GridFunction spec_trunc = apply_operator(trunc, fs);
        GridFunction spec_ideal = apply_operator(ideal, fs);
        double num_t = 0.0, num_i = 0.0, den_t = 0.0, den_i = 0.0;
        for (std::size_t j = 0; j < g.M; ++j) {
            num_t += std::norm(quad[j] - spec_trunc[j]);
            den_t += std::norm(spec_trunc[j]);
            num_i += std::norm(quad[j] - spec_ideal[j]);
            den_i += std::norm(spec_ideal[j]);
        }
        max_vs_trunc = std::max(max_vs_trunc, std::sqrt(num_t / den_t));
        max_vs_ideal = std::max(max_vs_ideal, std::sqrt(num_i / den_i));
        // Duality on the ideal instance.
        GridFunction f3 = random_bandlimited(g, band, rng);
        std::vector<GridFunction> f123{f1, f2, f3};
        cplx lam = eval_form(ideal, f123);
        cplx dual{0.0, 0.0};
        for (std::size_t j = 0; j < g.M; ++j) dual += spec_ideal[j] * f3[j];
        dual *= g.h();
        max_duality = std::max(max_duality, std::abs(lam - dual) / std::max(1e-300, std::abs(lam)));
        csv << t << "," << std::sqrt(num_t / den_t) << ",0\n";
    }
    double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    json rep;
    rep["name"] = "bht-check";
    rep["M"] = m_samples;
    rep["B"] = band;
    rep["trials"] = trials;
    rep["seed"] = seed;
    rep["max_rel_err_spectral_vs_pv"] = max_vs_trunc;
    rep["max_rel_err_vs_ideal_sgn"] = max_vs_ideal;
    rep["duality_err"] = max_duality;
    rep["runtime_ms"] = ms;
    bool pass = max_vs_trunc <= 1e-2 && max_duality <= 1e-10;
    rep["pass"] = pass;
    emit(rep, out, csv.str(), csv_path);
    return pass ? 0 : 1;
}

int run_whitney_check(int n, double c0, int cubes, std::uint64_t seed, const std::string& out,
                      const std::string& csv_path) {
    auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(seed);
    // Covering sweep on random rational cubes.
    double max_ratio = 0.0;
    int covered = 0;
    for (int t = 0; t < cubes; ++t) {
        Box q;
        double side = std::pow(2.0, uniform(rng, -4.0, 4.0));
        for (int i = 0; i < n; ++i) {
            Rational lo = Rational::from_double(uniform(rng, -8.0, 8.0), 20);
            Rational s = Rational::from_double(side, 20);
            q.axes.push_back({lo, lo + s});
        }
        auto res = covering_cube(q);
        bool ok = q.subset_of(res.cube.dilated(Rational(9, 10)));
        if (ok) ++covered;
        max_ratio = std::max(max_ratio, res.side_ratio);
    }
    // Whitney band + partition reconstruction on the BHT line.
    Symbol sym = builtin("bht", 3);
    SingularSubspace gp = *sym.singular();
    WhitneyParams wp;
    wp.c0 = c0;
    wp.j_min = -5;
    wp.j_max = 0;
    Rational w4 = Rational(4);
    wp.window.axes.assign(3, RatInterval{-w4, w4});
    WhitneyCollection coll(gp, wp);
    std::size_t emitted = 0, band_ok = 0;
    coll.for_each([&](const ShiftedCube& q) {
        ++emitted;
        if (coll.in_band(q)) ++band_ok;
    });
    WhitneyPartition part(sym, coll);
    int tested = 0, exact = 0, max_overlap = 0;
    double worst_resid = 0.0;
    const Mat trans = gp.transversal_basis();
    const Mat gq = gp.orthonormal_basis();
    while (tested < 1000) {
        double d = std::pow(2.0, uniform(rng, -3.0, 0.0));
        Vec xi = gq.col(0) * uniform(rng, -1.0, 1.0) + trans.col(0) * d * (u01(rng) < 0.5 ? 1.0 : -1.0);
        std::vector<Rational> x(3);
        for (int i = 0; i < 3; ++i) x[i] = Rational::from_double(xi(i), 24);
        int active = 0;
        cplx rec = part.reconstruct(x, &active);
        if (active == 0) continue;
        ++tested;
        max_overlap = std::max(max_overlap, active);
        Vec xd(3);
        for (int i = 0; i < 3; ++i) xd(i) = x[i].to_double();
        worst_resid = std::max(worst_resid, std::abs(rec - sym(xd)));
        if (std::abs(rec - sym(xd)) <= 1e-8) ++exact;
    }
    double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    json rep;
    rep["name"] = "whitney-check";
    rep["covering_cubes_tried"] = cubes;
    rep["covering_success"] = covered;
    rep["max_side_ratio"] = max_ratio;
    rep["whitney_cubes_emitted"] = emitted;
    rep["whitney_band_ok"] = band_ok;
    rep["partition_points"] = tested;
    rep["partition_exact"] = exact;
    rep["partition_worst_residual"] = worst_resid;
    rep["max_overlap"] = max_overlap;
    rep["runtime_ms"] = ms;
    bool pass = covered == cubes && band_ok == emitted && exact == tested;
    rep["pass"] = pass;
    emit(rep, out, "", csv_path);
    return pass ? 0 : 1;
}

// A reproducible synthetic instance for tree selection demos and sweeps.
std::vector<MultiTile> demo_collection(std::mt19937_64& rng, int count, int c1) {
    std::vector<MultiTile> out;
    std::set<std::pair<int, std::int64_t>> seen;
    for (int t = 0; t < count * 3 && static_cast<int>(out.size()) < count; ++t) {
        int js = c1 * static_cast<int>(rng() % 3);  // spatial scales 0, c1, 2c1
        std::int64_t slots = std::int64_t(64) >> js;
        if (slots < 1) slots = 1;
        std::int64_t k = static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(slots));
        if (!seen.insert({js, k}).second) continue;
        MultiTile mt;
        mt.time = DyadicInterval{js, k, Shift::none};
        std::int64_t base = static_cast<std::int64_t>(rng() % 9) - 4;
        mt.freqs = {DyadicInterval{-js, base, Shift::none}, DyadicInterval{-js, base + 1, Shift::none},
                    DyadicInterval{-js, -2 * base - 1, Shift::none}};
        out.push_back(std::move(mt));
    }
    std::sort(out.begin(), out.end());
    return out;
}

int run_tree_demo(int m_level, std::uint64_t seed, const std::string& out, const std::string& csv_path) {
    auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(seed);
    GridSpec g(64.0, 4096);
    std::vector<MultiTile> coll = demo_collection(rng, 60, 4);
    coll = refine_collection(std::move(coll), 0, 4);
    GridFunction f = random_bandlimited(g, 24, rng);

    SelectionParams params;
    params.i = 0;
    params.m = m_level;
    params.c1 = 4;
    TileNormCache norms(f, params.big_n);
    TileOrder order;
    // Normalize so the all-tree size sits just below 2^{-m}.
    std::vector<std::size_t> all(coll.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    double s = max_tree_size(coll, all, 0, norms, order);
    double target = std::pow(2.0, -m_level) * 0.9;
    std::vector<cplx> vals(f.samples());
    for (auto& v : vals) v *= target / s;
    GridFunction fs(g, std::move(vals));

    SelectionOutcome outcome = select_trees(coll, fs, params);
    TileNormCache norms2(fs, params.big_n);
    double resid = max_tree_size(coll, outcome.residual, 0, norms2, order);

    json rep;
    rep["name"] = "tree-demo";
    rep["m"] = m_level;
    rep["seed"] = seed;
    rep["tiles"] = coll.size();
    json trees = json::array();
    std::ostringstream csv;
    csv << "scale_octave,ratio,bucket\n";
    int idx = 0;
    for (const auto& st : outcome.trees) {
        const char* origin = st.origin == TreeOrigin::prepass ? "prepass"
                             : st.origin == TreeOrigin::plus  ? "plus"
                             : st.origin == TreeOrigin::minus ? "minus"
                                                              : "companion";
        trees.push_back({{"origin", origin},
                         {"members", st.tree.members.size()},
                         {"I_T", st.tree.top.time.str()}});
        csv << 0 << "," << st.tree.top.time.length().to_double() << "," << idx++ << "\n";
    }
    rep["trees"] = trees;
    rep["residual_tiles"] = outcome.residual.size();
    rep["sum_tree_lengths"] = outcome.sum_tree_lengths;
    rep["counting_rhs_l2"] = outcome.counting_rhs_l2;
    rep["residual_max_size"] = resid;
    rep["residual_bound"] = std::pow(2.0, -m_level - 1);
    bool pass = resid <= std::pow(2.0, -m_level - 1) + 1e-12;
    rep["pass"] = pass;
    rep["runtime_ms"] =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    emit(rep, out, csv.str(), csv_path);
    return pass ? 0 : 1;
}

ExperimentConfig config_from_cli(const json& base, const std::string& symbol, int octaves, int trials,
                                 std::uint64_t seed, bool force, const std::string& sweep) {
    ExperimentConfig cfg = ExperimentConfig::from_json(base);
    if (!symbol.empty()) cfg.symbol = symbol;
    if (octaves > 0) cfg.octaves = octaves;
    if (trials > 0) cfg.trials = trials;
    if (seed) cfg.seed = seed;
    if (force) cfg.force = true;
    if (!sweep.empty()) cfg.sweep = sweep;
    if (cfg.alpha.alpha.empty())
        cfg.alpha.alpha = {Rational(1, 2), Rational(1, 2), Rational(0)};
    if (cfg.sets.empty())
        cfg.sets = {{{0.0, 0.25}}, {{0.375, 0.625}}, {{0.0, 1.0}}};
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"tilescope: time-frequency tile experiments"};
    app.require_subcommand(1);

    std::string config_path, out_path, csv_path;
    app.add_option("--config", config_path, "JSON config file");
    app.add_option("--out", out_path, "write the JSON report here instead of stdout");
    app.add_option("--csv", csv_path, "write plot data (scale_octave,ratio,bucket) here");

    auto* bht = app.add_subcommand("bht-check", "PV quadrature vs spectral BHT");
    std::size_t m_samples = 4096;
    std::int64_t band = 0;
    int trials = 20;
    std::uint64_t seed = 12345;
    bht->add_option("--M", m_samples);
    bht->add_option("--B", band);
    bht->add_option("--trials", trials);
    bht->add_option("--seed", seed);

    auto* whitney = app.add_subcommand("whitney-check", "covering + Whitney band + partition");
    int n_dim = 3, n_cubes = 10000;
    double c0 = 8.0;
    whitney->add_option("--n", n_dim);
    whitney->add_option("--C0", c0);
    whitney->add_option("--cubes", n_cubes);
    whitney->add_option("--seed", seed);

    auto* tree = app.add_subcommand("tree-demo", "greedy tree selection trace");
    int m_level = 4;
    tree->add_option("--m", m_level);
    tree->add_option("--seed", seed);

    auto* rwt = app.add_subcommand("rwt-sweep", "restricted weak-type scale sweep");
    std::string symbol, sweep, alpha_csv;
    int octaves = 0, rwt_trials = 0;
    bool force = false;
    rwt->add_option("--symbol", symbol);
    rwt->add_option("--alpha", alpha_csv, "comma-separated rationals, e.g. 1/2,1/2,0");
    rwt->add_option("--octaves", octaves);
    rwt->add_option("--trials", rwt_trials);
    rwt->add_option("--seed", seed);
    rwt->add_option("--sweep", sweep, "dilate | degenerate");
    rwt->add_flag("--force", force, "run even when the tuple is outside region Q");

    auto* pipe = app.add_subcommand("pipeline", "discretized model-sum pipeline");
    pipe->add_option("--symbol", symbol);
    pipe->add_option("--seed", seed);

    auto* region = app.add_subcommand("region", "exact exponent-region arithmetic");
    std::string region_alpha;
    int region_k = 1;
    region->add_option("--alpha", region_alpha)->required();
    region->add_option("--k", region_k);

    CLI11_PARSE(app, argc, argv);

    try {
        if (bht->parsed()) return run_bht_check(m_samples, band, trials, seed, out_path, csv_path);
        if (whitney->parsed()) return run_whitney_check(n_dim, c0, n_cubes, seed, out_path, csv_path);
        if (tree->parsed()) return run_tree_demo(m_level, seed, out_path, csv_path);
        if (rwt->parsed() || pipe->parsed()) {
            json base = load_config(config_path);
            ExperimentConfig cfg = config_from_cli(base, symbol, octaves, rwt_trials, seed, force, sweep);
            if (!alpha_csv.empty()) {
                cfg.alpha.alpha.clear();
                std::stringstream ss(alpha_csv);
                std::string tok;
                while (std::getline(ss, tok, ',')) cfg.alpha.alpha.push_back(parse_rational(tok));
            }
            ExperimentReport rep = rwt->parsed() ? rwt_experiment(cfg) : discretized_pipeline(cfg);
            json j = rep.to_json();
            j["config"] = cfg.to_json();
            emit(j, out_path, rep.plot_csv, csv_path);
            return rep.pass ? 0 : 1;
        }
        if (region->parsed()) {
            ExponentTuple tuple;
            std::stringstream ss(region_alpha);
            std::string tok;
            while (std::getline(ss, tok, ',')) tuple.alpha.push_back(parse_rational(tok));
            auto cls = tuple_classify(tuple);
            bool fast = cls.cls != TupleClass::inadmissible && region_q_member(tuple, region_k);
            bool brute = cls.cls != TupleClass::inadmissible && region_q_member_bruteforce(tuple, region_k);
            json rep;
            rep["name"] = "region";
            rep["class"] = cls.cls == TupleClass::good  ? "good"
                           : cls.cls == TupleClass::bad ? "bad"
                                                        : "inadmissible";
            if (cls.cls == TupleClass::bad) rep["bad_index"] = cls.bad_index + 1;
            rep["k"] = region_k;
            rep["in_region_q"] = fast;
            rep["fast_equals_bruteforce"] = fast == brute;
            rep["pass"] = fast == brute;
            emit(rep, out_path, "", csv_path);
            return fast == brute ? 0 : 1;
        }
    } catch (const std::exception& e) {
        std::cerr << "tilescope: " << e.what() << std::endl;
        return 2;
    }
    return 2;
}
