#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "asiplab/common.hpp"

namespace asiplab {

enum class RegClass { Holder, BV, MonCombo };

// One Mon_p building block: monotone on [lo,hi], null elsewhere.
struct MonPiece {
    double coeff;
    std::function<double(double)> f;
    double lo;
    double hi;
};

struct Observable {
    std::string name;
    std::function<double(double)> eval;
    RegClass reg = RegClass::BV;

    // Regularity data; which fields are meaningful depends on `reg`.
    double alpha = 0.0;         // Holder exponent
    double holder_const = 0.0;  // Holder constant
    double variation = 0.0;     // BV bound
    double p = 0.0;             // Mon_p exponent, in (2,4]
    double moment_bound = 0.0;  // M with nu(|f|^p) <= M^p
    std::vector<MonPiece> pieces;

    bool bounded = true;
    double sup_abs = 0.0;               // valid when bounded
    std::vector<double> breakpoints;    // discontinuities / kinks, for quadrature

    double operator()(double x) const { return eval(x); }
};

inline Observable observable_catalog(const std::string& id,
                                     const std::map<std::string, double>& params = {}) {
    auto get = [&](const std::string& key, double dflt) {
        auto it = params.find(key);
        return it == params.end() ? dflt : it->second;
    };
    Observable o;
    o.name = id;
    if (id == "identity_centered") {
        o.eval = [](double x) { return x; };
        o.reg = RegClass::BV;
        o.variation = 1.0;
        o.sup_abs = 1.0;
        return o;
    }
    if (id == "holder") {
        const double alpha = get("alpha", 0.5);
        if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("holder: alpha must lie in (0,1]");
        o.eval = [alpha](double x) { return std::pow(std::fabs(x - 0.5), alpha); };
        o.reg = RegClass::Holder;
        o.alpha = alpha;
        o.holder_const = 1.0;
        o.sup_abs = std::pow(0.5, alpha);
        o.breakpoints = {0.5};
        return o;
    }
    if (id == "indicator_halfline") {
        const double t = get("t", 0.5);
        if (!(t > 0.0 && t < 1.0)) throw ConfigError("indicator_halfline: t must lie in (0,1)");
        const double p = get("p", 4.0);
        o.eval = [t](double x) { return x <= t ? 1.0 : 0.0; };
        o.reg = RegClass::MonCombo;
        o.p = p;
        o.moment_bound = std::pow(t, 1.0 / p);  // Lebesgue moment; exact for t under nu = Leb
        o.pieces = {{1.0, o.eval, 0.0, t}};
        o.sup_abs = 1.0;
        o.breakpoints = {t};
        return o;
    }
    if (id == "power_singularity") {
        const double a = get("a", 0.3);
        if (!(a > 0.0)) throw ConfigError("power_singularity: a must be positive");
        if (a >= 0.5) throw ConfigError("power_singularity: a >= 1/2 is not square-integrable");
        const double p = get("p", std::min(4.0, 0.95 / a));
        if (!(p > 2.0 && p <= 4.0)) throw ConfigError("power_singularity: p must lie in (2,4]");
        if (a * p >= 1.0) throw ConfigError("power_singularity: need p < 1/a for a finite p-th moment");
        o.eval = [a](double x) { return x > 0.0 ? std::pow(x, -a) : 0.0; };
        o.reg = RegClass::MonCombo;
        o.p = p;
        o.moment_bound = std::pow(1.0 / (1.0 - a * p), 1.0 / p);  // Lebesgue closed form
        o.pieces = {{1.0, o.eval, 0.0, 1.0}};
        o.bounded = false;
        return o;
    }
    if (id == "bv_example") {
        o.eval = [](double x) { return std::min(x, 1.0 - x); };
        o.reg = RegClass::BV;
        o.variation = 1.0;
        o.sup_abs = 0.5;
        o.breakpoints = {0.5};
        return o;
    }
    throw ConfigError("unknown observable id: " + id);
}

inline std::vector<std::string> observable_catalog_ids() {
    return {"identity_centered", "holder", "indicator_halfline", "power_singularity", "bv_example"};
}

}  // namespace asiplab
