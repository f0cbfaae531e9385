#pragma once

#include <cmath>
#include <string>

#include "stefan/error.hpp"

namespace stefan {

namespace detail {
inline void require_positive(double value, const char* name) {
    if (!(value > 0.0) || !std::isfinite(value)) {
        throw ParameterError(std::string(name) + " must be strictly positive and finite, got " +
                             to_text(value));
    }
}
}  // namespace detail

/// Thermal diffusivity k/(rho*Cp) [m^2/s].
inline double derive_diffusivity(double conductivity, double density, double heat_capacity) {
    detail::require_positive(conductivity, "conductivity");
    detail::require_positive(density, "density");
    detail::require_positive(heat_capacity, "heat_capacity");
    return conductivity / (density * heat_capacity);
}

/// Interface coefficient k/(rho*dH) [m^2/(s K)].
inline double derive_beta(double conductivity, double density, double latent_heat) {
    detail::require_positive(conductivity, "conductivity");
    detail::require_positive(density, "density");
    detail::require_positive(latent_heat, "latent_heat");
    return conductivity / (density * latent_heat);
}

/**
 * Physical constants of one phase, SI units throughout.
 *
 * Construct through make(); the derived diffusivity and beta are computed
 * once and the value is immutable afterwards.
 */
class MaterialParams {
public:
    static MaterialParams make(double density, double heat_capacity, double conductivity,
                               double latent_heat, double melting_temp) {
        if (!std::isfinite(melting_temp)) {
            throw ParameterError("melting_temp must be finite");
        }
        MaterialParams p;
        p.density_ = density;
        p.heat_capacity_ = heat_capacity;
        p.conductivity_ = conductivity;
        p.latent_heat_ = latent_heat;
        p.melting_temp_ = melting_temp;
        p.alpha_ = derive_diffusivity(conductivity, density, heat_capacity);
        p.beta_ = derive_beta(conductivity, density, latent_heat);
        return p;
    }

    double density() const { return density_; }              ///< kg/m^3
    double heat_capacity() const { return heat_capacity_; }  ///< J/(kg K)
    double conductivity() const { return conductivity_; }    ///< W/(m K)
    double latent_heat() const { return latent_heat_; }      ///< J/kg
    double melting_temp() const { return melting_temp_; }    ///< degC
    double alpha() const { return alpha_; }                  ///< m^2/s
    double beta() const { return beta_; }                    ///< m^2/(s K)

    /// Volumetric latent heat rho*dH [J/m^3].
    double volumetric_latent_heat() const { return density_ * latent_heat_; }

private:
    MaterialParams() = default;

    double density_{};
    double heat_capacity_{};
    double conductivity_{};
    double latent_heat_{};
    double melting_temp_{};
    double alpha_{};
    double beta_{};
};

/// Liquid paraffin at the per-gram values converted to SI.
inline MaterialParams paraffin_liquid() {
    return MaterialParams::make(790.0, 2.38e3, 0.220, 210.0e3, 37.0);
}

/// Solid paraffin placeholder (not measured data; used for two-phase demos only).
inline MaterialParams paraffin_solid_placeholder() {
    return MaterialParams::make(818.0, 2.90e3, 0.240, 210.0e3, 37.0);
}

}  // namespace stefan
