//! Physical constants used across the crate (CODATA 2018 values).
//!
//! All unit conversions are funneled through this table so that every module
//! agrees on the same numbers.

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT_M_PER_S: f64 = 2.99792458e8;

/// Atomic mass unit, kg.
pub const AMU_KG: f64 = 1.66053907e-27;

/// Ångström, m.
pub const ANGSTROM_M: f64 = 1e-10;

/// Reduced Planck constant, J·s.
pub const HBAR_J_S: f64 = 1.054571817e-34;

/// Reduced Planck constant, eV·s.
pub const HBAR_EV_S: f64 = 6.582119569e-16;

/// Elementary charge, C.
pub const ELEMENTARY_CHARGE_C: f64 = 1.602176634e-19;

/// Boltzmann constant, eV/K.
pub const BOLTZMANN_EV_PER_K: f64 = 8.617333262e-5;

/// Energy of one wavenumber quantum, eV per cm⁻¹.
pub const CM1_TO_EV: f64 = 1.239841984e-4;

/// Converts a wavenumber (cm⁻¹) to an angular frequency (rad/s).
pub fn wavenumber_to_angular_frequency(cm1: f64) -> f64 {
    2.0 * std::f64::consts::PI * SPEED_OF_LIGHT_M_PER_S * 100.0 * cm1
}

/// Converts a mass-weighted displacement in amu^{1/2}·Å to kg^{1/2}·m.
pub fn mass_weighted_displacement_to_si(d: f64) -> f64 {
    d * AMU_KG.sqrt() * ANGSTROM_M
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wavenumber_conversion_matches_hand_value() {
        // 1000 cm⁻¹ -> 2π·c·100·1000 rad/s
        let w = wavenumber_to_angular_frequency(1000.0);
        assert!((w - 1.883651567308853e14).abs() / w < 1e-12);
    }

    #[test]
    fn ev_and_joule_hbar_consistent() {
        let ratio = HBAR_J_S / HBAR_EV_S;
        assert!((ratio - ELEMENTARY_CHARGE_C).abs() / ELEMENTARY_CHARGE_C < 1e-9);
    }
}
