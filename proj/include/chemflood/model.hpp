#pragma once

#include <Eigen/Dense>
#include <array>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "chemflood/flux.hpp"
#include "chemflood/polynomial.hpp"

namespace chemflood {

/// Thrown when a model file is malformed or violates a validation clause.
/// The message always names the violated clause.
class ModelError : public std::runtime_error {
public:
    explicit ModelError(const std::string& what) : std::runtime_error(what) {}
};

/// Thrown when a numerical routine cannot produce a trustworthy result
/// (failed convergence, loss of rank, state outside its validity region).
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

/// Phase-density closures of one conserved species: density of the species in
/// the aqueous phase, in the oleic phase, and adsorbed on the rock, each a
/// polynomial in the chemical variables.
struct Species {
    Polynomial rho_w, rho_o, rho_r;
};

/// Rectangular state-space box the model is calibrated for.
struct Domain {
    double s_lo = 0.0, s_hi = 1.0;
    std::vector<std::array<double, 2>> y;  ///< per chemical variable [lo, hi]
};

/// Full state (s, y_1..y_{n-1}, u): water saturation, chemical composition,
/// total Darcy velocity.
struct State {
    double s = 0.0;
    std::vector<double> y;
    double u = 1.0;

    int dim() const { return static_cast<int>(y.size()) + 2; }
    Eigen::VectorXd to_vector() const;
    static State from_vector(const Eigen::VectorXd& v);
};

/// Conservation-law model: n+1 species balances
///
///   d/dt G_i(s, y)  +  d/dx [ u Fhat_i(s, y) ]  =  0,
///   G_i    = phi rho_wi s + phi rho_oi (1 - s) + (1 - phi) rho_ri,
///   Fhat_i = rho_wi f + rho_oi (1 - f),
///
/// in the unknowns (s, y_1..y_{n-1}, u).  The velocity u enters the flux
/// linearly and has no time derivative, which gives the quasilinear pencil
/// A - lambda B a structurally singular accumulation matrix (last column of
/// B is zero).
class Model {
public:
    std::string name;
    int n = 0;  ///< number of equations is n+1; chemical variables n-1
    double phi = 0.0;
    std::vector<Species> species;  ///< size n+1
    Domain domain;

    const FractionalFlow& flux() const { return *flux_; }

    int ny() const { return n - 1; }
    int neq() const { return n + 1; }

    /// Parse a model description from a JSON file.  Throws ModelError.
    static Model load(const std::string& path);

    /// Parse from an in-memory JSON string (used by tests).  Throws ModelError.
    static Model parse(const std::string& json_text, const std::string& origin = "<string>");

    /// Re-run all validation clauses; throws ModelError naming the clause.
    void validate() const;

    /// Shorthand: fractional-flow evaluation at a state.
    FluxEval flux_eval(const State& U) const { return flux_->eval(U.s, U.y); }

    /// Accumulation vector G(U) (does not involve u).
    Eigen::VectorXd accumulation(const State& U) const;

    /// Flux vector u * Fhat(U).
    Eigen::VectorXd flux_vector(const State& U) const;

    /// Fhat(U) alone.
    Eigen::VectorXd fhat(const State& U) const;

    /// Jacobian B = dG/dU (last column identically zero).
    Eigen::MatrixXd accumulation_jacobian(const State& U) const;

    /// Jacobian A = d(u Fhat)/dU.
    Eigen::MatrixXd flux_jacobian(const State& U) const;

    /// True if every species' rock-adsorbed density is constant.
    bool constant_rock_density() const;

    /// Midpoint of the calibrated domain box (u = 1).
    State domain_center() const;

    /// True when (s, y) lies inside the calibrated box (u ignored).
    bool in_domain(const State& U, double margin = 0.0) const;

    void set_flux(FractionalFlow fl);

private:
    std::shared_ptr<const FractionalFlow> flux_;
};

}  // namespace chemflood
