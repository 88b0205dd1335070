use crate::error::{Error, Result};

/// Cross-state uncertainty statistics of the detector atoms. Only the
/// quadrature oracle's S/U comparisons read these.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtomCrossStats {
    pub dx2_theta: f64,
    pub dx2_phi_theta: f64,
    pub dp2_phi: f64,
    pub dp2_theta: f64,
    pub dp2_phi_theta: f64,
    pub de2_theta: f64,
    pub de2_phi_theta: f64,
}

/// Scalar inputs of the action functional, in natural units (ħ = c = 1).
///
/// Variances follow the doubled pair-integral convention, so a
/// minimal-uncertainty atom has `dx2_phi * dp2_phi == 0.25`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FunctionalParams {
    /// Weight ε of the uncertainty term in `A1 + ε A2`.
    pub epsilon: f64,
    pub electron_mass: f64,
    /// Ground-state position variance of an atom, δx²_φ.
    pub dx2_phi: f64,
    /// Ground-state energy variance of an atom, δE²_φ.
    pub de2_phi: f64,
    /// Excitation energy E₁ − E₀.
    pub energy_gap: f64,
    /// Transverse momentum variance of the electron after it reaches the
    /// screen, δp²_ξ.
    pub dp2_xi: f64,
    pub cross: AtomCrossStats,
    /// Constant added to every a⁽¹⁾ coefficient to stand in for the
    /// neglected order-one terms.
    pub order_one_floor: f64,
}

impl FunctionalParams {
    /// Defaults for everything except ε. Cross statistics take the φ values,
    /// except δE²_φθ = (E₁ − E₀)².
    pub fn with_epsilon(epsilon: f64) -> Self {
        let dx2_phi = 0.5;
        let de2_phi = 0.5;
        let energy_gap = 1.0;
        FunctionalParams {
            epsilon,
            electron_mass: 1.0,
            dx2_phi,
            de2_phi,
            energy_gap,
            dp2_xi: 1.0,
            cross: AtomCrossStats::minimal_uncertainty(dx2_phi, de2_phi, energy_gap),
            order_one_floor: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let named = [
            ("epsilon", self.epsilon),
            ("electron_mass", self.electron_mass),
            ("dx2_phi", self.dx2_phi),
            ("de2_phi", self.de2_phi),
            ("energy_gap", self.energy_gap),
            ("dp2_xi", self.dp2_xi),
            ("dx2_theta", self.cross.dx2_theta),
            ("dx2_phi_theta", self.cross.dx2_phi_theta),
            ("dp2_phi", self.cross.dp2_phi),
            ("dp2_theta", self.cross.dp2_theta),
            ("dp2_phi_theta", self.cross.dp2_phi_theta),
            ("de2_theta", self.cross.de2_theta),
            ("de2_phi_theta", self.cross.de2_phi_theta),
        ];
        for (name, value) in named {
            if !(value.is_finite() && value >= 0.0) {
                return Err(Error::InvalidParams(format!(
                    "{name} must be finite and nonnegative, got {value}"
                )));
            }
        }
        if !self.order_one_floor.is_finite() {
            return Err(Error::InvalidParams("order_one_floor must be finite".into()));
        }
        Ok(())
    }

    /// `3 + 4 δx²_φ δE²_φ`, the per-particle zero-point factor of a⁽¹⁾.
    pub fn zero_point_factor(&self) -> f64 {
        3.0 + 4.0 * self.dx2_phi * self.de2_phi
    }
}

impl Default for FunctionalParams {
    fn default() -> Self {
        Self::with_epsilon(1.0)
    }
}

impl AtomCrossStats {
    /// φ values everywhere, with δp²_φ at the uncertainty minimum
    /// `1 / (4 δx²_φ)` and δE²_φθ = (E₁ − E₀)².
    pub fn minimal_uncertainty(dx2_phi: f64, de2_phi: f64, energy_gap: f64) -> Self {
        let dp2_phi = if dx2_phi > 0.0 { 0.25 / dx2_phi } else { 0.0 };
        AtomCrossStats {
            dx2_theta: dx2_phi,
            dx2_phi_theta: dx2_phi,
            dp2_phi,
            dp2_theta: dp2_phi,
            dp2_phi_theta: dp2_phi,
            de2_theta: de2_phi,
            de2_phi_theta: energy_gap * energy_gap,
        }
    }
}
