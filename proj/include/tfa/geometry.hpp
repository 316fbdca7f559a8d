// The hyperplane Gamma = {sum xi_i = 0}, singular subspaces Gamma' with
// graph maps, shifted n-dyadic meshes, the 9/10 covering construction,
// and Whitney cube collections with distance comparable to diameter.
#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tfa/dyadic.hpp"
#include "tfa/rational.hpp"

namespace tfa {

struct NotOnGamma : std::invalid_argument {
    NotOnGamma() : std::invalid_argument("geometry: point is not on Gamma (sum xi_i != 0)") {}
};
struct SearchExhausted : std::runtime_error {
    SearchExhausted() : std::runtime_error("geometry: covering search exhausted (bug)") {}
};
struct EmptyWindow : std::invalid_argument {
    EmptyWindow() : std::invalid_argument("geometry: empty window") {}
};

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// The pair (Gamma, Gamma'): a k-dimensional subspace of the hyperplane
/// Gamma in R^n, given by a basis, with per-k-subset graph maps and
/// their condition numbers.
class SingularSubspace {
public:
    /// basis: k vectors in R^n, each summing to zero. k = 0 gives the
    /// origin (the classical Marcinkiewicz situation).
    SingularSubspace(int n, std::vector<Vec> basis);

    int n() const { return n_; }
    int k() const { return k_; }
    bool k_constraint_ok() const { return 2 * k_ < n_; }  // 0 <= k < n/2

    const Mat& basis() const { return basis_; }          // n x k
    const Mat& orthonormal_basis() const { return q_; }  // n x k

    /// Euclidean distance from a point of Gamma to Gamma'.
    /// Throws NotOnGamma when |sum xi| > 1e-9 * |xi|.
    double distance(const Vec& xi) const;

    /// Distance with no Gamma membership check (internal geometry).
    double distance_unchecked(const Vec& xi) const;

    Vec project(const Vec& xi) const;  // orthogonal projection onto Gamma'

    /// Graph map for a k-subset S (sorted coordinate indices): the linear
    /// map y -> point of Gamma' whose S-coordinates are y.
    struct GraphMap {
        std::vector<int> subset;
        Mat map;              // n x k
        double condition;     // condition number of the S-restriction
    };
    const std::vector<GraphMap>& graph_maps() const { return graph_maps_; }
    bool nondegenerate() const { return nondegenerate_; }

    /// Orthonormal basis of Gamma (n-1 tangent directions).
    const Mat& gamma_basis() const { return gamma_q_; }

    /// Orthonormal basis of the orthogonal complement of Gamma' inside
    /// Gamma (the transversal directions).
    const Mat& transversal_basis() const { return trans_q_; }

private:
    int n_;
    int k_;
    Mat basis_;
    Mat q_;
    Mat gamma_q_;
    Mat trans_q_;
    std::vector<GraphMap> graph_maps_;
    bool nondegenerate_ = true;
};

/// Axis-aligned box with exact rational bounds.
struct Box {
    std::vector<RatInterval> axes;

    int dim() const { return static_cast<int>(axes.size()); }
    Rational side(int i) const { return axes[i].length(); }
    Rational max_side() const;
    bool subset_of(const Box& o) const;
};

/// A cube of a shifted n-dyadic mesh: common scale j, per-axis shift and
/// offset. Axis i is the dyadic interval 2^j (k_i + (0,1) + (-1)^j a_i).
struct ShiftedCube {
    int j = 0;
    std::vector<std::int64_t> offsets;
    std::vector<Shift> shifts;

    int dim() const { return static_cast<int>(offsets.size()); }
    DyadicInterval axis(int i) const { return DyadicInterval{j, offsets[i], shifts[i]}; }
    Rational side() const { return Rational::pow2(j); }
    double diam() const { return side().to_double() * std::sqrt(static_cast<double>(dim())); }

    Box box() const;
    Box dilated(const Rational& factor) const;  // same center, scaled sides

    Vec center() const;
    Vec corner_low() const;

    /// Exact: does the open cube meet Gamma = {sum xi = 0}?
    bool intersects_gamma() const;

    bool contains(const std::vector<Rational>& x) const;  // half-open per axis

    friend bool operator==(const ShiftedCube& a, const ShiftedCube& b) {
        return a.j == b.j && a.offsets == b.offsets && a.shifts == b.shifts;
    }
    /// Deterministic order: (j, shifts, offsets).
    friend bool operator<(const ShiftedCube& a, const ShiftedCube& b);

    std::string str() const;
};

/// The cube of mesh (shifts, scale j) containing point x (half-open).
ShiftedCube cube_containing(const std::vector<Rational>& x, int j, const std::vector<Shift>& shifts);

/// Enumerate all 3^n shift tuples in lexicographic order.
std::vector<std::vector<Shift>> all_shift_tuples(int n);

struct CoveringResult {
    ShiftedCube cube;
    double side_ratio;  // side(Q') / max side(Q)
};

/// Finds a shifted dyadic cube Q' with Q inside (9/10)Q' (exact rational
/// containment) and side(Q') within a few octaves of side(Q). Searches
/// scales from ceil(log2 side(Q)) upward; the 1-D argument guarantees a
/// hit within 4 octaves.
CoveringResult covering_cube(const Box& q);

/// Exact distance (in doubles) from an axis-aligned box to the subspace,
/// by minimizing |x - proj(x)| over the box via face enumeration.
double box_subspace_distance(const Box& box, const SingularSubspace& gp);

struct WhitneyParams {
    double c0 = 8.0;          // lower band constant
    double band_factor = 2.0; // upper band = band_factor * c0
    int j_min = -4;
    int j_max = 0;
    Box window;               // cubes must lie inside this box
};

/// The collection of shifted dyadic cubes Q (over all 3^n meshes) inside
/// the window with C0*diam(Q) <= dist(Q, Gamma') <= 2*C0*diam(Q).
/// Supports predicate queries and streaming enumeration; materializing
/// the whole collection is only sensible for small windows.
class WhitneyCollection {
public:
    WhitneyCollection(const SingularSubspace& gp, WhitneyParams params);

    const WhitneyParams& params() const { return params_; }
    const SingularSubspace& subspace() const { return *gp_; }

    /// Band + window membership for an arbitrary shifted cube.
    bool contains(const ShiftedCube& q) const;
    bool in_band(const ShiftedCube& q) const;  // distance band only

    /// All member cubes whose closed cube contains x (at most one per
    /// mesh and scale).
    std::vector<ShiftedCube> cubes_at_point(const std::vector<Rational>& x) const;

    /// Member cubes whose (9/10)-dilate contains x.
    std::vector<ShiftedCube> covering_cubes_at_point(const std::vector<Rational>& x) const;

    /// Streams every member cube, walking a tube around Gamma' instead of
    /// the full window lattice. Deterministic order: mesh, then scale,
    /// then anchor/offset order.
    void for_each(const std::function<void(const ShiftedCube&)>& fn) const;

    /// Restriction to one mesh (fixed per-axis shift tuple).
    void for_each_in_mesh(const std::vector<Shift>& shifts,
                          const std::function<void(const ShiftedCube&)>& fn) const;

    /// Materialize (sorted). Throws if more than `limit` cubes appear.
    std::vector<ShiftedCube> materialize(std::size_t limit = 2'000'000) const;

private:
    const SingularSubspace* gp_;
    WhitneyParams params_;
};

}  // namespace tfa
