#include "chemflood/polynomial.hpp"

#include <cmath>

namespace chemflood {

namespace {

double ipow(double x, int p) {
    double r = 1.0;
    for (int i = 0; i < p; ++i) r *= x;
    return r;
}

}  // namespace

void Polynomial::add_term(double coef, std::vector<int> powers) {
    if (static_cast<int>(powers.size()) != nvars_)
        throw std::invalid_argument("polynomial term has " + std::to_string(powers.size()) +
                                    " exponents, expected " + std::to_string(nvars_));
    for (int p : powers)
        if (p < 0) throw std::invalid_argument("polynomial exponents must be non-negative");
    terms_.push_back(PolyTerm{coef, std::move(powers)});
}

bool Polynomial::is_constant() const {
    for (const auto& t : terms_)
        for (int p : t.powers)
            if (p != 0) return false;
    return true;
}

double Polynomial::value(const std::vector<double>& y) const {
    double acc = 0.0;
    for (const auto& t : terms_) {
        double m = t.coef;
        for (int k = 0; k < nvars_; ++k) m *= ipow(y[k], t.powers[k]);
        acc += m;
    }
    return acc;
}

double Polynomial::deriv(const std::vector<double>& y, int k) const {
    double acc = 0.0;
    for (const auto& t : terms_) {
        int pk = t.powers[k];
        if (pk == 0) continue;
        double m = t.coef * pk * ipow(y[k], pk - 1);
        for (int j = 0; j < nvars_; ++j)
            if (j != k) m *= ipow(y[j], t.powers[j]);
        acc += m;
    }
    return acc;
}

double Polynomial::deriv2(const std::vector<double>& y, int k, int l) const {
    double acc = 0.0;
    for (const auto& t : terms_) {
        if (k == l) {
            int pk = t.powers[k];
            if (pk < 2) continue;
            double m = t.coef * pk * (pk - 1) * ipow(y[k], pk - 2);
            for (int j = 0; j < nvars_; ++j)
                if (j != k) m *= ipow(y[j], t.powers[j]);
            acc += m;
        } else {
            int pk = t.powers[k], pl = t.powers[l];
            if (pk == 0 || pl == 0) continue;
            double m = t.coef * pk * pl * ipow(y[k], pk - 1) * ipow(y[l], pl - 1);
            for (int j = 0; j < nvars_; ++j)
                if (j != k && j != l) m *= ipow(y[j], t.powers[j]);
            acc += m;
        }
    }
    return acc;
}

}  // namespace chemflood
