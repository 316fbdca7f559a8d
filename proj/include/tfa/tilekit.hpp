// Tiles, multi-tiles, orderings, tile semi-norms, trees, sizes, strong
// disjointness, the greedy tree-selection algorithm, model sums, and the
// counting / square-function checks.
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "tfa/forms.hpp"
#include "tfa/geometry.hpp"
#include "tfa/grid.hpp"
#include "tfa/symbols.hpp"

namespace tfa {

struct IndexMismatch : std::invalid_argument {
    IndexMismatch() : std::invalid_argument("tilekit: tiles have different coordinate index") {}
};
struct RefinementViolated : std::invalid_argument {
    explicit RefinementViolated(const std::string& what)
        : std::invalid_argument("tilekit: refinement precondition violated: " + what) {}
};

/// An i-tile: rectangle I_P x w_P of area exactly 1, I_P in the plain
/// dyadic mesh, w_P in the mesh shifted by alpha_i.
struct Tile {
    int axis = 0;           // 0-based coordinate index i
    DyadicInterval time;    // I_P, shift none
    DyadicInterval freq;    // w_P

    Rational xi_center() const { return freq.center(); }

    bool area_is_one() const { return time.length() * freq.length() == Rational(1); }

    friend bool operator==(const Tile& a, const Tile& b) {
        return a.axis == b.axis && a.time == b.time && a.freq == b.freq;
    }
    friend bool operator!=(const Tile& a, const Tile& b) { return !(a == b); }
};

/// Order predicates on same-index tiles. The dilation constant C*C0 of
/// the weak order is explicit (default 4*C0 with C0 = 8).
struct TileOrder {
    Rational cc0 = Rational(32);

    // P' < P: I_{P'} strictly inside I_P and w_P inside 3 w_{P'}.
    bool lt(const Tile& p1, const Tile& p) const;
    bool le(const Tile& p1, const Tile& p) const;       // < or =
    bool lesssim(const Tile& p1, const Tile& p) const;  // I' in I, w_P in CC0 w_{P'}
    bool lesssim_prime(const Tile& p1, const Tile& p) const;
    bool lesssim_plus(const Tile& p1, const Tile& p) const;   // lesssim' and xi_{P'} > xi_P
    bool lesssim_minus(const Tile& p1, const Tile& p) const;  // lesssim' and xi_{P'} < xi_P
};

/// n tiles sharing the spatial interval; the frequency cube is a member
/// of the Whitney collection intersecting Gamma when built by the
/// enumerator.
struct MultiTile {
    DyadicInterval time;                 // I_P (shift none)
    std::vector<DyadicInterval> freqs;   // w_{P_i}, common scale -time.j

    int n() const { return static_cast<int>(freqs.size()); }
    Tile tile(int i) const { return Tile{i, time, freqs[i]}; }
    ShiftedCube cube() const;

    friend bool operator==(const MultiTile& a, const MultiTile& b) {
        return a.time == b.time && a.freqs == b.freqs;
    }
    /// Deterministic order: spatial interval, then frequency offsets.
    friend bool operator<(const MultiTile& a, const MultiTile& b);
};

struct MultiTileParams {
    WhitneyParams whitney;          // frequency window, scales, C0, band
    std::vector<Shift> mesh;        // alpha_i for the frequency mesh
    RatInterval spatial_window;     // spatial slots I in D^1_0 inside this
};

/// All multi-tiles whose frequency cube lies in the Whitney collection
/// restricted to `mesh` and intersects Gamma, with every spatial slot of
/// the matching dyadic length inside the window.
std::vector<MultiTile> enumerate_multitiles(const SingularSubspace& gp, const MultiTileParams& params);

struct RankReport {
    std::size_t pairs_checked = 0;
    std::size_t premise_hits_first = 0;
    std::size_t premise_hits_second = 0;
    std::size_t violations_first = 0;   // P'_i <~ P_i fails for some i
    std::size_t violations_second = 0;  // fewer than two strict indices
    bool pass() const { return violations_first == 0 && violations_second == 0; }
};

/// Empirical check of the rank lemma over all ordered pairs and all
/// k-subsets. The second implication's "much smaller" premise is read as
/// |I_{P'}| <= |I_P| / 4.
RankReport rank_check(const std::vector<MultiTile>& collection, const SingularSubspace& gp,
                      double c0, const TileOrder& order);

/// ||f||_P = (1/|I_P|) || (Delta_{w_P} f) chi~_{I_P}^{2N} ||_1 with the
/// smoothstep bump filter (plateau (9/10) w_P, support w_P).
double tile_norm(const GridFunction& f, const Tile& p, int big_n);

/// Tile norms with the band filter cached per frequency interval.
class TileNormCache {
public:
    TileNormCache(const GridFunction& f, int big_n) : f_(&f), big_n_(big_n) {}
    double operator()(const Tile& p) const;

private:
    const GridFunction* f_;
    int big_n_;
    mutable std::map<DyadicInterval, GridFunction> filtered_;
    mutable std::map<std::pair<DyadicInterval, DyadicInterval>, double> norms_;
};

/// A j-tree: members dominated by the top in coordinate `tree_axis`.
/// Members are indices into the owning collection; the top need not be a
/// member.
struct Tree {
    MultiTile top;
    int tree_axis = 0;
    std::vector<std::size_t> members;

    RatInterval spatial() const { return top.time.interval(); }
    double len() const { return top.time.length().to_double(); }
};

/// size_i(T): l2 aggregate over members with P_i lesssim' P_{T,i} plus
/// the sup of member tile norms.
double tree_size(const std::vector<MultiTile>& collection, const Tree& t, int i,
                 const TileNormCache& norms, const TileOrder& order);

/// sup_{members} ||f_i||_{P_i}.
double tree_sup_norm(const std::vector<MultiTile>& collection, const Tree& t, int i,
                     const TileNormCache& norms);

/// Strong i-disjointness of two trees (exact predicate).
bool strongly_disjoint(const std::vector<MultiTile>& collection, const Tree& a, const Tree& b,
                       int i);

/// Deterministic refinement for the selection preconditions:
///  - one multi-tile per spatial interval (lexicographically smallest
///    frequency cube wins),
///  - spatial scales on the lattice j == j_ref (mod c1), keeping the
///    most populated residue class (smallest residue on ties),
///  - w_{P_i} determines the whole frequency tuple (smallest tuple wins).
std::vector<MultiTile> refine_collection(std::vector<MultiTile> collection, int i, int c1);

/// Throws RefinementViolated if the three properties above fail.
void check_refined(const std::vector<MultiTile>& collection, int i, int c1);

enum class TreeOrigin { prepass, plus, minus, companion };

struct SelectedTree {
    Tree tree;
    TreeOrigin origin;
};

struct SelectionOutcome {
    std::vector<SelectedTree> trees;
    std::vector<std::size_t> residual;       // indices into the input collection
    double sum_tree_lengths = 0.0;           // sum |I_T| over all selected trees
    double counting_rhs_l2 = 0.0;            // 2^{2m} ||f chi~_{I0}^{N/2}||_2^2
    double counting_constant = 0.0;          // sum / rhs (0 when rhs = 0)
};

struct SelectionParams {
    int i = 0;          // tile coordinate under selection
    int m = 2;          // size level: all-tree size <= 2^{-m} assumed
    int c1 = 4;         // scale-lattice constant
    int big_n = 10;     // cutoff exponent parameter N
    TileOrder order;
};

/// The two-pass greedy selection: a pre-pass on heavy tiles, then the
/// lesssim_plus pass choosing xi-maximal tops, then the mirrored
/// lesssim_minus pass. Ties break by leftmost I_T, then smallest |I_T|,
/// then lexicographic frequency offsets.
SelectionOutcome select_trees(const std::vector<MultiTile>& collection, const GridFunction& f,
                              const SelectionParams& params);

/// Largest size_i over every tree formable from `subset` (every member
/// as candidate top, every coordinate as tree axis, members by <=).
double max_tree_size(const std::vector<MultiTile>& collection, const std::vector<std::size_t>& subset,
                     int i, const TileNormCache& norms, const TileOrder& order);

/// The model sum  sum_P |I_P| prod_i ||f_i||_{P_i}.
double model_sum(const std::vector<MultiTile>& collection,
                 const std::vector<const TileNormCache*>& norms);

struct SpatialDominationRow {
    ShiftedCube cube;
    double tile_sum = 0.0;    // sum over multi-tiles with this cube
    double lambda_abs = 0.0;  // |Lambda_{m_Q}|
    double ratio = 0.0;       // lambda_abs / tile_sum
};

struct SpatialDominationReport {
    std::vector<SpatialDominationRow> rows;
    double max_ratio = 0.0;
};

/// Per-cube comparison of |Lambda_{m_Q}| against the model sum restricted
/// to that cube (the measured constant of the spatial lemma).
SpatialDominationReport spatial_domination(const std::vector<MultiTile>& collection,
                                           const std::shared_ptr<Partition>& partition,
                                           const FormInstance& base,
                                           std::span<const GridFunction> fs,
                                           const std::vector<const TileNormCache*>& norms);

struct WeakL1Report {
    double weak_norm = 0.0;  // sup over the lambda grid of lambda |{S > lambda}|
    double rhs = 0.0;        // ||f chi~_{I_T}^N||_1
    double ratio = 0.0;
};

/// S_T f = (sum ||f||_{P_i}^2 chi_{I_P})^{1/2} and its weak-L1 norm
/// estimated on a dyadic lambda grid spanning 12 octaves around the
/// median of the nonzero values.
std::pair<GridFunction, WeakL1Report> tree_square_function(const std::vector<MultiTile>& collection,
                                                           const Tree& t, int i,
                                                           const GridFunction& f, int big_n,
                                                           const TileOrder& order);

struct TreeCsReport {
    double lhs = 0.0;
    double rhs = 0.0;
    double ratio = 0.0;
};

/// Both sides of the tree Cauchy-Schwarz bound; ratio = lhs/rhs.
TreeCsReport tree_cauchy_schwarz_check(const std::vector<MultiTile>& collection, const Tree& t,
                                       const std::vector<const TileNormCache*>& norms,
                                       const TileOrder& order);

// JSON / CSV serialization (exact rationals as [num, den] pairs).
std::string multitiles_to_json(const std::vector<MultiTile>& collection);
std::string cubes_to_csv(const std::vector<ShiftedCube>& cubes);
std::string cubes_to_json(const std::vector<ShiftedCube>& cubes);

}  // namespace tfa
