#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace chemflood {

/// One monomial term: coefficient times a product of integer powers of the
/// chemical variables.
struct PolyTerm {
    double coef = 0.0;
    std::vector<int> powers;  ///< exponent per chemical variable
};

/// Sparse multivariate polynomial in the chemical variables y_1..y_m.
///
/// Used for the phase-density closures (water, oleic, and rock-adsorbed
/// densities of each conserved species) and optionally for viscosities.
/// Evaluation provides values plus first and second partial derivatives,
/// which is all the wave analysis needs.
class Polynomial {
public:
    Polynomial() = default;
    explicit Polynomial(int nvars) : nvars_(nvars) {}

    /// Number of chemical variables the polynomial is defined over.
    int nvars() const { return nvars_; }

    /// Append one term; the exponent vector must have nvars entries, all >= 0.
    void add_term(double coef, std::vector<int> powers);

    /// True when the polynomial has no terms (identically zero).
    bool is_zero() const { return terms_.empty(); }

    /// True when no term depends on any variable.
    bool is_constant() const;

    const std::vector<PolyTerm>& terms() const { return terms_; }

    /// Value at y (y.size() == nvars).
    double value(const std::vector<double>& y) const;

    /// First partial derivative with respect to y_k.
    double deriv(const std::vector<double>& y, int k) const;

    /// Second partial derivative with respect to y_k and y_l.
    double deriv2(const std::vector<double>& y, int k, int l) const;

private:
    int nvars_ = 0;
    std::vector<PolyTerm> terms_;
};

}  // namespace chemflood
