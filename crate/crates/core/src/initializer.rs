//! Boundary coefficients at `t_i`: the far-field two-slit pattern sampled
//! at each detector mode, and the random phases laid on top of it.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DetectorKind, DetectorModel};
use crate::rng::{stream_rng, STREAM_PHASES};

/// Wavelength and aperture of the electron source.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlitSpec {
    pub wavelength: f64,
    pub slit_separation: f64,
    pub slit_width: f64,
    pub screen_distance: f64,
}

impl SlitSpec {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("wavelength", self.wavelength),
            ("slit_separation", self.slit_separation),
            ("screen_distance", self.screen_distance),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidGeometry(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.slit_width.is_finite() && self.slit_width >= 0.0 && self.slit_width < self.slit_separation) {
            return Err(Error::InvalidGeometry(format!(
                "slit width {} must lie in [0, {})",
                self.slit_width, self.slit_separation
            )));
        }
        Ok(())
    }

    /// Far-field amplitude `cos(π d y / λX) · sinc(π a y / λX)` at
    /// transverse screen coordinate `y`.
    pub fn far_field(&self, y: f64) -> f64 {
        let scale = PI * y / (self.wavelength * self.screen_distance);
        (scale * self.slit_separation).cos() * sinc(scale * self.slit_width)
    }

    /// Transverse wavenumber `π d / λX` of each of the two plane waves
    /// that interfere on the screen.
    pub fn fringe_wavenumber(&self) -> f64 {
        PI * self.slit_separation / (self.wavelength * self.screen_distance)
    }
}

/// `sin x / x`, equal to 1 at the origin.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// How initial phases are shared between modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseStrategy {
    /// One independent uniform phase per mode.
    #[default]
    Independent,
    /// A single uniform phase shared by all modes.
    Global,
}

fn normalize(raw: Vec<f64>) -> Result<Vec<Complex64>> {
    let norm = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
    // The far-field profile is bounded by 1, so anything this small is a
    // rounding residue of an exact null.
    if !(norm > 1e-12 && norm.is_finite()) {
        return Err(Error::Degenerate("every mode amplitude vanishes".into()));
    }
    Ok(raw.into_iter().map(|x| Complex64::new(x.abs() / norm, 0.0)).collect())
}

/// Real, normalized amplitudes `|ψ(y_n)|` at the x² coordinate of each
/// position-type mode (after the switch, for delayed-choice detectors).
pub fn two_slit_amplitudes(slits: &SlitSpec, detector: &DetectorModel) -> Result<Vec<Complex64>> {
    slits.validate()?;
    if detector.post().kind() == DetectorKind::Wavelength {
        return Err(Error::InvalidDetector(
            "wavelength detectors take their amplitudes from mode_amplitudes_wavelength".into(),
        ));
    }
    normalize(detector.mode_labels().iter().map(|b| slits.far_field(b[1])).collect())
}

/// Number of midpoint samples in the screen Fourier integral.
const FOURIER_SAMPLES: usize = 8192;

/// Fourier components `|∫ ψ(y) e^{-iκy} dy|` of the screen field over the
/// window `[-W/2, W/2]`, where `W = 2π / Δκ` is fixed by the spacing of the
/// detector's wavenumbers.
pub fn mode_amplitudes_wavelength(slits: &SlitSpec, detector: &DetectorModel) -> Result<Vec<Complex64>> {
    slits.validate()?;
    let kappas = detector
        .post()
        .wavenumbers()
        .ok_or_else(|| Error::InvalidDetector("detector has no wavenumber modes".into()))?;
    let window = fourier_window(kappas)?;
    let dy = window / FOURIER_SAMPLES as f64;
    let field: Vec<(f64, f64)> = (0..FOURIER_SAMPLES)
        .map(|s| {
            let y = -0.5 * window + (s as f64 + 0.5) * dy;
            (y, slits.far_field(y))
        })
        .collect();
    let raw = kappas
        .iter()
        .map(|&k| {
            let sum: Complex64 = field.iter().map(|&(y, psi)| Complex64::from_polar(psi, -k * y)).sum();
            (sum * dy).norm()
        })
        .collect();
    normalize(raw)
}

fn fourier_window(kappas: &[f64]) -> Result<f64> {
    let mut sorted = kappas.to_vec();
    sorted.sort_by(f64::total_cmp);
    let spacing = sorted
        .windows(2)
        .map(|p| p[1] - p[0])
        .filter(|d| *d > 0.0)
        .fold(f64::INFINITY, f64::min);
    if !spacing.is_finite() {
        return Err(Error::InvalidDetector("wavenumbers must be distinct".into()));
    }
    Ok(TAU / spacing)
}

/// Multiply each amplitude by an independent uniform phase.
pub fn sample_phases(amplitudes: &[Complex64], seed: u64) -> Vec<Complex64> {
    sample_phases_with(amplitudes, seed, PhaseStrategy::Independent)
}

pub fn sample_phases_with(amplitudes: &[Complex64], seed: u64, strategy: PhaseStrategy) -> Vec<Complex64> {
    let mut rng = stream_rng(seed, STREAM_PHASES);
    let global = match strategy {
        PhaseStrategy::Global => Some(rng.gen::<f64>() * TAU),
        PhaseStrategy::Independent => None,
    };
    amplitudes
        .iter()
        .map(|c| {
            let phi = global.unwrap_or_else(|| rng.gen::<f64>() * TAU);
            c * Complex64::from_polar(1.0, phi)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Epochs, ExperimentGeometry};

    fn slits(a: f64) -> SlitSpec {
        SlitSpec {
            wavelength: 0.1,
            slit_separation: 1.0,
            slit_width: a,
            screen_distance: 100.0,
        }
    }

    fn detector(count: usize, half: f64) -> DetectorModel {
        let epochs = Epochs::new(0.0, 1.0, 2.0, 4.0).unwrap();
        let g = ExperimentGeometry::uniform_screen(count, -half, half, 100.0, 1.0, 0.2, epochs).unwrap();
        DetectorModel::position(&g)
    }

    #[test]
    fn centre_is_brightest_and_first_null_vanishes() {
        let s = slits(0.0);
        assert_eq!(s.far_field(0.0), 1.0);
        let null = s.wavelength * s.screen_distance / (2.0 * s.slit_separation);
        assert!(s.far_field(null).abs() < 1e-12);
    }

    #[test]
    fn amplitudes_are_normalized_and_even() {
        let c = two_slit_amplitudes(&slits(0.2), &detector(64, 12.0)).unwrap();
        let norm: f64 = c.iter().map(|z| z.norm_sqr()).sum();
        assert!((norm - 1.0).abs() < 1e-12);
        for n in 0..32 {
            assert!((c[n].re - c[63 - n].re).abs() < 1e-14);
            assert_eq!(c[n].im, 0.0);
        }
    }

    #[test]
    fn all_nulls_are_degenerate() {
        // Atoms sitting exactly on the first nulls of both sides.
        let epochs = Epochs::new(0.0, 1.0, 2.0, 4.0).unwrap();
        let g = ExperimentGeometry::uniform_screen(2, -5.0, 5.0, 100.0, 1.0, 0.0, epochs).unwrap();
        let err = two_slit_amplitudes(&slits(0.0), &DetectorModel::position(&g)).unwrap_err();
        assert!(matches!(err, Error::Degenerate(_)));
    }

    #[test]
    fn phases_keep_moduli_and_repeat_per_seed() {
        let c = two_slit_amplitudes(&slits(0.2), &detector(16, 4.0)).unwrap();
        let a = sample_phases(&c, 7);
        assert_eq!(a, sample_phases(&c, 7));
        assert_ne!(a, sample_phases(&c, 8));
        for (x, y) in c.iter().zip(&a) {
            assert!((x.norm() - y.norm()).abs() < 1e-15);
        }
    }

    #[test]
    fn global_strategy_shares_one_phase() {
        let c = two_slit_amplitudes(&slits(0.2), &detector(8, 4.0)).unwrap();
        let a = sample_phases_with(&c, 3, PhaseStrategy::Global);
        let phase = (a[0] / c[0]).arg();
        for (x, y) in c.iter().zip(&a) {
            if x.norm() > 1e-12 {
                assert!(((y / x).arg() - phase).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn wavelength_rejected_by_position_initializer() {
        let det = DetectorModel::wavelength(DetectorModel::screen_wavenumbers(8, 4.0), 0.25).unwrap();
        assert!(two_slit_amplitudes(&slits(0.0), &det).is_err());
        assert!(mode_amplitudes_wavelength(&slits(0.0), &detector(8, 4.0)).is_err());
    }
}
