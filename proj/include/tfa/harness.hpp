// Exponent-region arithmetic, exceptional sets and lambda-averages,
// restricted weak-type experiments, the discretized model-sum pipeline,
// and JSON reporting.
#pragma once

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tfa/forms.hpp"
#include "tfa/grid.hpp"
#include "tfa/rational.hpp"
#include "tfa/tilekit.hpp"

namespace tfa {

struct EmptySet : std::invalid_argument {
    EmptySet() : std::invalid_argument("harness: set has measure zero") {}
};
struct NoMajorizingC : std::runtime_error {
    NoMajorizingC() : std::runtime_error("harness: no C <= 2^10 yields a major subset") {}
};

/// Parse "3", "-1/2", "0.75" style exponents exactly.
Rational parse_rational(const std::string& s);

struct ExponentTuple {
    std::vector<Rational> alpha;

    int n() const { return static_cast<int>(alpha.size()); }
    Rational sum() const;
};

enum class TupleClass { good, bad, inadmissible };

struct TupleClassification {
    TupleClass cls;
    int bad_index = -1;  // 0-based, set when cls == bad
};

/// Admissible: every alpha_i < 1, sum = 1, at most one negative entry.
TupleClassification tuple_classify(const ExponentTuple& a);

/// Membership in the region Q: sorted-descending prefix sums obey
/// sum < (n - 2k + r)/2 for every r. Exact rational arithmetic.
bool region_q_member(const ExponentTuple& a, int k);

/// Oracle: all 2^n - 1 nonempty subset sums. Must agree with the fast path.
bool region_q_member_bruteforce(const ExponentTuple& a, int k);

/// Permutahedron membership: x in conv(permutations of a) iff the sums
/// match and every r largest entries of x are dominated by those of a.
bool hull_member(const std::vector<Rational>& x, const std::vector<Rational>& a);

/// A measurable set on the grid: union of sample cells.
struct GridSet {
    GridSpec spec;
    std::vector<std::uint8_t> mask;

    static GridSet from_intervals(const GridSpec& spec,
                                  const std::vector<std::pair<double, double>>& intervals);

    std::size_t count() const;
    double measure() const { return static_cast<double>(count()) * spec.h(); }
    GridFunction indicator() const;
    GridSet translated(std::int64_t cells) const;
    bool empty() const { return count() == 0; }
};

struct ExceptionalSetResult {
    GridSet major_subset;   // E'_n
    double c_used = 0.0;
    double removed_measure = 0.0;
};

/// E'_n = {x in E_n : M chi_{E_i}(x) < C |E_i| for all i}, with the
/// smallest C in {2, 4, ..., 2^10} making E'_n a major subset of E_n.
ExceptionalSetResult build_exceptional_set(const std::vector<GridSet>& sets);

/// lambda_i(I) = (1/(|I| |E'|)) * h * sum_{x in E'} chi~_I^N(x).
double lambda_avg(const RatInterval& interval, const GridSet& set, int big_n);

struct DecayCheckReport {
    double max_constant = 0.0;  // sup over I of lambda_n (1 + sum_{i<n} lambda_i)^{N-1}
    std::size_t intervals_checked = 0;
};

/// Sweeps every dyadic interval of the torus tree.
DecayCheckReport decay_check(const std::vector<GridSet>& major_subsets, int big_n);

struct ExperimentConfig {
    std::string symbol = "bht";
    int n = 3;
    int k = 1;
    double L = 32.0;
    std::size_t M = 4096;
    ExponentTuple alpha;
    std::vector<std::vector<std::pair<double, double>>> sets;  // per index i
    int big_n = 10;
    double c0 = 8.0;
    int c1 = 4;
    int trials = 20;
    int octaves = 5;
    std::uint64_t seed = 12345;
    std::string sweep = "dilate";  // or "degenerate"
    bool force = false;            // run despite a region_q rejection
    std::vector<double> theta;     // empty: derived from alpha
    // Pipeline instance geometry.
    double freq_window = 4.0;
    int j_min = -3;
    int j_max = 0;

    static ExperimentConfig from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

struct ExperimentReport {
    std::string name;
    std::uint64_t seed = 0;
    bool pass = false;
    double runtime_ms = 0.0;
    nlohmann::json details;
    std::string plot_csv;  // columns: scale_octave,ratio,bucket

    nlohmann::json to_json() const;
};

/// Restricted weak-type experiment: random unimodular draws on the major
/// subsets, |Lambda| / |E|^alpha across a scale sweep. Pass = flat trend
/// (last/first <= 2) for in-region tuples.
ExperimentReport rwt_experiment(const ExperimentConfig& config);

/// The discretized pipeline: enumerate multi-tiles, bucket by dyadic
/// lambda_i(I_P), compare the model sum per bucket with the theorem's
/// right-hand side, and the total against prod a_i^theta_i.
ExperimentReport discretized_pipeline(const ExperimentConfig& config);

/// theta_i = 2 alpha_i - 1 for i < n, theta_n chosen so the sum is n-2k.
std::vector<double> derive_theta(const ExponentTuple& alpha, int k);

}  // namespace tfa
