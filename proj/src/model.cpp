#include "chemflood/model.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace chemflood {

using nlohmann::json;

Eigen::VectorXd State::to_vector() const {
    Eigen::VectorXd v(dim());
    v(0) = s;
    for (size_t k = 0; k < y.size(); ++k) v(1 + k) = y[k];
    v(dim() - 1) = u;
    return v;
}

State State::from_vector(const Eigen::VectorXd& v) {
    State st;
    st.s = v(0);
    st.y.assign(v.size() - 2, 0.0);
    for (int k = 0; k < v.size() - 2; ++k) st.y[k] = v(1 + k);
    st.u = v(v.size() - 1);
    return st;
}

void Model::set_flux(FractionalFlow fl) {
    flux_ = std::make_shared<const FractionalFlow>(std::move(fl));
}

namespace {

Polynomial poly_from_json(const json& j, int nvars, const std::string& where) {
    Polynomial p(nvars);
    if (j.is_number()) {
        double c = j.get<double>();
        if (c != 0.0) p.add_term(c, std::vector<int>(nvars, 0));
        return p;
    }
    if (!j.is_array())
        throw ModelError("model schema: " + where + " must be a number or a term list");
    for (const auto& t : j) {
        if (!t.is_object() || !t.contains("c") || !t.contains("p"))
            throw ModelError("model schema: terms in " + where + " need fields c and p");
        double c = t.at("c").get<double>();
        std::vector<int> powers = t.at("p").get<std::vector<int>>();
        if (static_cast<int>(powers.size()) != nvars)
            throw ModelError("model schema: exponent vector length in " + where + " must be " +
                             std::to_string(nvars));
        p.add_term(c, std::move(powers));
    }
    return p;
}

}  // namespace

Model Model::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ModelError("model file not readable: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path);
}

Model Model::parse(const std::string& text, const std::string& origin) {
    json j;
    try {
        j = json::parse(text);
    } catch (const std::exception& e) {
        throw ModelError("model file is not valid JSON (" + origin + "): " + e.what());
    }

    Model m;
    try {
        m.name = j.value("name", std::string("unnamed"));
        m.n = j.at("n").get<int>();
        if (m.n < 2) throw ModelError("model structure: n must be at least 2");
        const int ny = m.n - 1;

        m.phi = j.at("phi").get<double>();
        double s_wc = j.at("s_wc").get<double>();
        double pore_index = j.at("pore_index").get<double>();
        Polynomial mu_w = poly_from_json(j.at("mu_w"), ny, "mu_w");
        Polynomial mu_o = poly_from_json(j.at("mu_o"), ny, "mu_o");
        m.set_flux(FractionalFlow(s_wc, pore_index, std::move(mu_w), std::move(mu_o)));

        const auto& dj = j.at("domain");
        auto srange = dj.at("s").get<std::vector<double>>();
        if (srange.size() != 2) throw ModelError("model domain: s range needs two numbers");
        m.domain.s_lo = srange[0];
        m.domain.s_hi = srange[1];
        for (const auto& yr : dj.at("y")) {
            auto r = yr.get<std::vector<double>>();
            if (r.size() != 2) throw ModelError("model domain: each y range needs two numbers");
            m.domain.y.push_back({r[0], r[1]});
        }

        for (const auto& sp : j.at("species")) {
            Species s;
            s.rho_w = poly_from_json(sp.value("rho_w", json::array()), ny, "rho_w");
            s.rho_o = poly_from_json(sp.value("rho_o", json::array()), ny, "rho_o");
            s.rho_r = poly_from_json(sp.value("rho_r", json::array()), ny, "rho_r");
            m.species.push_back(std::move(s));
        }
    } catch (const ModelError&) {
        throw;
    } catch (const std::exception& e) {
        throw ModelError("model schema: missing or mistyped field (" + origin + "): " + e.what());
    }

    m.validate();
    return m;
}

void Model::validate() const {
    const int ny_ = ny();

    // --- structure ---------------------------------------------------------
    if (static_cast<int>(species.size()) != neq())
        throw ModelError("model structure: species count must equal n+1 (" +
                         std::to_string(neq()) + "), got " + std::to_string(species.size()));
    if (static_cast<int>(domain.y.size()) != ny_)
        throw ModelError("model structure: domain must give one y range per chemical variable");

    // --- parameter positivity ----------------------------------------------
    if (!(phi > 0.0 && phi < 1.0))
        throw ModelError("parameter positivity: porosity phi must lie in (0,1)");
    if (!(flux_->pore_index() > 0.0))
        throw ModelError("parameter positivity: pore_index must be positive");
    if (!(flux_->s_wc() >= 0.0 && flux_->s_wc() < 1.0))
        throw ModelError("parameter positivity: s_wc must lie in [0,1)");

    // --- domain box ---------------------------------------------------------
    if (!(domain.s_lo < domain.s_hi) || domain.s_lo < 0.0 || domain.s_hi > 1.0)
        throw ModelError("model domain: s range must be increasing inside [0,1]");
    if (domain.s_lo <= flux_->s_wc())
        throw ModelError("model domain: s range must sit above the connate saturation s_wc");
    for (const auto& r : domain.y)
        if (!(r[0] < r[1]))
            throw ModelError("model domain: each y range must be increasing");

    // Viscosity positivity over the y box (grid scan incl. corners).
    {
        const int g = 9;
        std::vector<double> yv(ny_, 0.0);
        std::vector<int> idx(ny_, 0);
        bool done = false;
        while (!done) {
            for (int k = 0; k < ny_; ++k) {
                double t = (ny_ == 0) ? 0.0 : static_cast<double>(idx[k]) / (g - 1);
                yv[k] = domain.y[k][0] + t * (domain.y[k][1] - domain.y[k][0]);
            }
            if (!(flux_->mu_w().value(yv) > 0.0) || !(flux_->mu_o().value(yv) > 0.0))
                throw ModelError("parameter positivity: a phase viscosity is not positive "
                                 "somewhere in the domain box");
            done = true;
            for (int k = 0; k < ny_; ++k) {
                if (++idx[k] < g) { done = false; break; }
                idx[k] = 0;
            }
        }
    }

    // --- flux shape ---------------------------------------------------------
    // The wave construction needs an S-shaped fractional flow at every
    // composition: strictly increasing in s, exactly one inflection point,
    // and the characteristic speed crossing u/phi (f_s = 1 in reduced units)
    // exactly twice.  Scan the domain-center composition and the y-box
    // corners.
    {
        std::vector<std::vector<double>> probes;
        std::vector<double> c(ny_);
        for (int k = 0; k < ny_; ++k) c[k] = 0.5 * (domain.y[k][0] + domain.y[k][1]);
        probes.push_back(c);
        for (int mask = 0; mask < (1 << ny_); ++mask) {
            std::vector<double> v(ny_);
            for (int k = 0; k < ny_; ++k) v[k] = domain.y[k][(mask >> k) & 1];
            probes.push_back(v);
        }
        const int N = 1025;
        const double lo = flux_->s_wc(), hi = 1.0;
        for (const auto& yv : probes) {
            int inflections = 0, unit_crossings = 0;
            double prev_fss = 0.0, prev_fs1 = 0.0;
            bool have_prev = false;
            for (int i = 1; i < N; ++i) {
                double s = lo + (hi - lo) * static_cast<double>(i) / N;
                FluxEval fe = flux_->eval(s, yv);
                if (!(fe.f_s > 0.0))
                    throw ModelError("flux shape: fractional flow is not strictly increasing "
                                     "in s over the scan grid");
                if (have_prev) {
                    if (prev_fss > 0.0 && fe.f_ss < 0.0) ++inflections;
                    if (prev_fss < 0.0 && fe.f_ss > 0.0) ++inflections;
                    double g1 = fe.f_s - 1.0;
                    if ((prev_fs1 > 0.0 && g1 < 0.0) || (prev_fs1 < 0.0 && g1 > 0.0))
                        ++unit_crossings;
                }
                prev_fss = fe.f_ss;
                prev_fs1 = fe.f_s - 1.0;
                have_prev = true;
            }
            if (inflections != 1)
                throw ModelError("flux shape: fractional flow must have exactly one "
                                 "inflection in s (found " + std::to_string(inflections) + ")");
            if (unit_crossings != 2)
                throw ModelError("flux shape: f_s = 1 must have exactly two crossings "
                                 "(found " + std::to_string(unit_crossings) + ")");
        }
    }
}

Eigen::VectorXd Model::accumulation(const State& U) const {
    Eigen::VectorXd g(neq());
    for (int i = 0; i < neq(); ++i) {
        const Species& sp = species[i];
        g(i) = phi * sp.rho_w.value(U.y) * U.s + phi * sp.rho_o.value(U.y) * (1.0 - U.s) +
               (1.0 - phi) * sp.rho_r.value(U.y);
    }
    return g;
}

Eigen::VectorXd Model::fhat(const State& U) const {
    const double f = flux_->eval(U.s, U.y).f;
    Eigen::VectorXd F(neq());
    for (int i = 0; i < neq(); ++i)
        F(i) = species[i].rho_w.value(U.y) * f + species[i].rho_o.value(U.y) * (1.0 - f);
    return F;
}

Eigen::VectorXd Model::flux_vector(const State& U) const { return U.u * fhat(U); }

Eigen::MatrixXd Model::accumulation_jacobian(const State& U) const {
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(neq(), neq());
    for (int i = 0; i < neq(); ++i) {
        const Species& sp = species[i];
        B(i, 0) = phi * (sp.rho_w.value(U.y) - sp.rho_o.value(U.y));
        for (int k = 0; k < ny(); ++k) {
            B(i, 1 + k) = phi * (sp.rho_w.deriv(U.y, k) * U.s +
                                 sp.rho_o.deriv(U.y, k) * (1.0 - U.s)) +
                          (1.0 - phi) * sp.rho_r.deriv(U.y, k);
        }
        // last column zero: u does not enter the accumulation.
    }
    return B;
}

Eigen::MatrixXd Model::flux_jacobian(const State& U) const {
    FluxEval fe = flux_->eval(U.s, U.y);
    Eigen::MatrixXd A(neq(), neq());
    for (int i = 0; i < neq(); ++i) {
        const Species& sp = species[i];
        const double rw = sp.rho_w.value(U.y), ro = sp.rho_o.value(U.y);
        A(i, 0) = U.u * (rw - ro) * fe.f_s;
        for (int k = 0; k < ny(); ++k) {
            A(i, 1 + k) = U.u * (sp.rho_w.deriv(U.y, k) * fe.f +
                                 sp.rho_o.deriv(U.y, k) * (1.0 - fe.f) +
                                 (rw - ro) * fe.f_y[k]);
        }
        A(i, neq() - 1) = rw * fe.f + ro * (1.0 - fe.f);
    }
    return A;
}

bool Model::constant_rock_density() const {
    for (const auto& sp : species)
        if (!sp.rho_r.is_constant()) return false;
    return true;
}

State Model::domain_center() const {
    State st;
    st.s = 0.5 * (domain.s_lo + domain.s_hi);
    for (const auto& r : domain.y) st.y.push_back(0.5 * (r[0] + r[1]));
    st.u = 1.0;
    return st;
}

bool Model::in_domain(const State& U, double margin) const {
    if (U.s < domain.s_lo - margin || U.s > domain.s_hi + margin) return false;
    for (size_t k = 0; k < U.y.size(); ++k)
        if (U.y[k] < domain.y[k][0] - margin || U.y[k] > domain.y[k][1] + margin) return false;
    return true;
}

}  // namespace chemflood
