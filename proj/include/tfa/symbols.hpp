// Multiplier symbols on Gamma: built-in instances, finite-difference
// verification of the symbol estimates, smoothstep bumps, and the
// Whitney partition of unity m = sum_Q m_Q.
#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tfa/common.hpp"
#include "tfa/geometry.hpp"

namespace tfa {

struct UnknownSymbol : std::invalid_argument {
    explicit UnknownSymbol(const std::string& name)
        : std::invalid_argument("symbols: unknown symbol '" + name + "'") {}
};

/// A multiplier on Gamma. Evaluation projects the argument onto Gamma
/// first, so the symbol is only ever read on the hyperplane.
class Symbol {
public:
    Symbol() = default;
    Symbol(std::string name, int n, std::function<cplx(const Vec&)> eval_on_gamma,
           std::optional<SingularSubspace> singular, double sup_bound, int claimed_order,
           bool locally_constant_off_singular, std::optional<double> homogeneity_degree)
        : name_(std::move(name)),
          n_(n),
          eval_(std::move(eval_on_gamma)),
          singular_(std::move(singular)),
          sup_bound_(sup_bound),
          claimed_order_(claimed_order),
          locally_constant_(locally_constant_off_singular),
          homogeneity_(homogeneity_degree) {}

    const std::string& name() const { return name_; }
    int n() const { return n_; }
    double sup_bound() const { return sup_bound_; }
    int claimed_order() const { return claimed_order_; }
    bool locally_constant_off_singular() const { return locally_constant_; }
    std::optional<double> homogeneity_degree() const { return homogeneity_; }
    const std::optional<SingularSubspace>& singular() const { return singular_; }

    cplx operator()(const Vec& xi) const {
        double s = xi.sum() / static_cast<double>(n_);
        if (s == 0.0) return eval_(xi);
        return eval_(xi - Vec::Constant(n_, s));
    }

private:
    std::string name_;
    int n_ = 0;
    std::function<cplx(const Vec&)> eval_;
    std::optional<SingularSubspace> singular_;
    double sup_bound_ = 0.0;
    int claimed_order_ = 0;
    bool locally_constant_ = false;
    std::optional<double> homogeneity_;
};

/// Registry: "one" (any n), "bht" (n=3), "tht" (n=4), "smooth0" (n=3).
Symbol builtin(const std::string& name, int n);
std::vector<std::string> builtin_names();

/// Sampled user symbol: CSV rows xi_1,...,xi_{n-1},re,im on a full
/// regular lattice; evaluation is multilinear interpolation in the
/// first n-1 coordinates (xi_n is implied by Gamma), zero outside.
Symbol load_symbol_csv(const std::string& path, int n);

// Polynomial smoothstep of order 4 (C^4 at both ends): 0 at u<=0, 1 at u>=1.
double smoothstep4(double u);

/// One axis of a bump: 1 on the central `plateau` fraction of [lo, hi],
/// smoothstep transition, exactly 0 outside [lo, hi].
class AxisBump {
public:
    AxisBump(double lo, double hi, double plateau = 0.9);
    AxisBump(const RatInterval& iv, double plateau = 0.9)
        : AxisBump(iv.lo.to_double(), iv.hi.to_double(), plateau) {}

    double operator()(double x) const;

    double lo() const { return lo_; }
    double hi() const { return hi_; }

private:
    double lo_, hi_, plo_, phi_;
};

/// Tensor-product bump on a shifted cube: 1 on (9/10)Q, 0 off Q.
class CubeBump {
public:
    explicit CubeBump(const ShiftedCube& q, double plateau = 0.9);
    double operator()(const Vec& xi) const;
    const ShiftedCube& cube() const { return cube_; }

private:
    ShiftedCube cube_;
    std::vector<AxisBump> axes_;
};

/// Per-order constants sup |D^a m(xi)| * dist(xi, Gamma')^|a| measured
/// across octaves of dist(xi, Gamma').
struct SymbolEstimateReport {
    int order = 0;
    int octaves = 0;
    // constants[o][oct]: sup over samples in that distance octave.
    std::vector<std::vector<double>> constants;
    std::vector<double> sup_per_order;
    std::vector<bool> growth_flag;  // last octave > 4x first octave
};

/// Central finite differences along Gamma-tangent directions, with step
/// dist(xi, Gamma')/16, sampled over 8 octaves of distance.
SymbolEstimateReport check_symbol_estimates(const Symbol& m, int order, int samples_per_octave,
                                            std::uint64_t seed = 1, double base_distance = 1.0 / 64.0,
                                            int octaves = 8);

class Partition;

/// One piece m_Q = m * phi_Q of a partition; zero off its cube.
class SymbolPiece {
public:
    const ShiftedCube& cube() const;
    cplx operator()(const Vec& xi) const;

    /// The piece without the partition normalization: m(center) * b_Q.
    /// Available when the parent symbol is locally constant off its
    /// singular set; the tensor structure enables the fast apply path.
    struct Tensor {
        std::vector<AxisBump> axis_filters;
        cplx coeff;
    };
    std::optional<Tensor> tensor() const;

    const Partition& partition() const { return *parent_; }
    std::size_t index() const { return idx_; }

private:
    friend class Partition;
    SymbolPiece(std::shared_ptr<const Partition> parent, std::size_t idx)
        : parent_(std::move(parent)), idx_(idx) {}
    std::shared_ptr<const Partition> parent_;
    std::size_t idx_;
};

/// Normalized partition of unity over a cube list:
/// phi_Q = b_Q / sum_{Q'} b_{Q'}; sum_Q m_Q = m wherever some b_Q > 0.
class Partition : public std::enable_shared_from_this<Partition> {
public:
    static std::shared_ptr<Partition> make(Symbol m, std::vector<ShiftedCube> cubes,
                                           double plateau = 0.9);

    const Symbol& symbol() const { return symbol_; }
    const std::vector<ShiftedCube>& cubes() const { return cubes_; }
    std::size_t size() const { return cubes_.size(); }

    std::vector<SymbolPiece> pieces() const;
    SymbolPiece piece(std::size_t idx) const;

    double bump(std::size_t idx, const Vec& xi) const { return bumps_[idx](xi); }
    double denominator(const Vec& xi) const;
    bool covered(const Vec& xi) const { return denominator(xi) > 0.0; }

    /// sum_Q m_Q(xi); equals m(xi) exactly at covered points.
    cplx reconstruct(const Vec& xi) const;

    /// m_Q as a standalone Symbol (for forming Lambda_{m_Q}).
    Symbol piece_symbol(std::size_t idx) const;

private:
    Partition(Symbol m, std::vector<ShiftedCube> cubes, double plateau);
    Symbol symbol_;
    std::vector<ShiftedCube> cubes_;
    std::vector<CubeBump> bumps_;
};

/// Partition of unity over a whole WhitneyCollection, evaluated through
/// point queries instead of a materialized cube list. Suitable for
/// windows where the collection has millions of members.
class WhitneyPartition {
public:
    WhitneyPartition(Symbol m, const WhitneyCollection& coll, double plateau = 0.9);

    bool covered(const std::vector<Rational>& x) const;
    /// sum over member cubes containing x of m * phi_Q; equals m(x) at
    /// covered points. Also reports how many cubes were active.
    cplx reconstruct(const std::vector<Rational>& x, int* active_cubes = nullptr) const;

    const WhitneyCollection& collection() const { return *coll_; }

private:
    Symbol symbol_;
    const WhitneyCollection* coll_;
    double plateau_;
};

}  // namespace tfa
