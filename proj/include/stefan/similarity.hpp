#pragma once

#include <cmath>
#include <numbers>

#include "stefan/error.hpp"
#include "stefan/material.hpp"

namespace stefan {

/**
 * Root of lambda e^{lambda^2} erf(lambda) = St/sqrt(pi) by bisection.
 * St = Cp (T_b - Tm)/dH is the Stefan number.
 */
inline double solve_similarity_lambda(double stefan_number, double tol = 1e-12) {
    if (!(stefan_number > 0.0)) throw ParameterError("Stefan number must be > 0");
    const double target = stefan_number / std::sqrt(std::numbers::pi);
    auto f = [&](double x) { return x * std::exp(x * x) * std::erf(x) - target; };
    double lo = 0.0, hi = 1.0;
    while (f(hi) < 0.0) hi *= 2.0;
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        (f(mid) < 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

/**
 * Classical one-phase melting solution with the boundary held at T_b:
 *   s(t) = 2 lambda sqrt(alpha t),
 *   T(x,t) - Tm = (T_b - Tm) (1 - erf(x / (2 sqrt(alpha t))) / erf(lambda)).
 * The matching boundary flux is q(t) = k (T_b - Tm) / (erf(lambda) sqrt(pi alpha t)).
 */
class NeumannSolution {
public:
    NeumannSolution(const MaterialParams& p, double superheat) : params_(p), superheat_(superheat) {
        if (!(superheat > 0.0)) throw ParameterError("superheat T_b - Tm must be > 0");
        lambda_ = solve_similarity_lambda(p.heat_capacity() * superheat / p.latent_heat());
    }

    double lambda() const { return lambda_; }
    double interface(double t) const { return 2.0 * lambda_ * std::sqrt(params_.alpha() * t); }
    double velocity(double t) const { return lambda_ * std::sqrt(params_.alpha() / t); }
    double offset(double x, double t) const {
        return superheat_ * (1.0 - std::erf(x / (2.0 * std::sqrt(params_.alpha() * t))) / std::erf(lambda_));
    }
    double boundary_flux(double t) const {
        return params_.conductivity() * superheat_ /
               (std::erf(lambda_) * std::sqrt(std::numbers::pi * params_.alpha() * t));
    }
    /// Time at which the interface reaches s.
    double time_at(double s) const {
        const double r = s / (2.0 * lambda_);
        return r * r / params_.alpha();
    }

private:
    MaterialParams params_;
    double superheat_{};
    double lambda_{};
};

}  // namespace stefan
