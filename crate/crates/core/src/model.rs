//! Chain parameters, Kac-normalized power-law couplings and their momentum
//! transform.
//!
//! Couplings decay as `J_r = r^{-alpha} / K(alpha)` for `r = 1..=Z`, with the
//! Kac factor `K(alpha) = sum_r r^{-alpha}` so that the couplings always sum
//! to one. All sums run in ascending `r` through a compensated accumulator.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{ordered_sum, CompensatedSum};

/// Whether the anisotropy enters as `i*gamma` (non-Hermitian iXY chain) or
/// as a real `gamma` (Hermitian XY benchmark).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AnisotropyMode {
    NonHermitian,
    Hermitian,
}

/// Which momentum sectors are retained.
///
/// `Full` keeps `p = 1..=N/2`, which is what the dense oracle reproduces.
/// `PaperReduced` drops the last sector (`p = 1..N/2-1`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeRange {
    Full,
    PaperReduced,
}

/// Parameter being estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ThetaKind {
    /// Transverse field `h`.
    #[serde(alias = "h")]
    Field,
    /// Anisotropy strength `gamma`.
    #[serde(alias = "gamma")]
    Anisotropy,
}

impl ThetaKind {
    pub fn name(self) -> &'static str {
        match self {
            ThetaKind::Field => "h",
            ThetaKind::Anisotropy => "gamma",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Number of sites; even and at least 4.
    pub n: usize,
    /// Coordination number, `1 <= z <= n/2`.
    pub z: usize,
    pub alpha: f64,
    pub gamma: f64,
    pub h: f64,
    pub anisotropy: AnisotropyMode,
    pub mode_range: ModeRange,
}

impl ModelParams {
    /// Non-Hermitian chain with the full mode range.
    pub fn new(n: usize, z: usize, alpha: f64, gamma: f64, h: f64) -> Result<Self> {
        let p = Self {
            n,
            z,
            alpha,
            gamma,
            h,
            anisotropy: AnisotropyMode::NonHermitian,
            mode_range: ModeRange::Full,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 4 || !self.n.is_multiple_of(2) {
            return Err(Error::domain(format!("N must be even and >= 4, got {}", self.n)));
        }
        if self.z < 1 || self.z > self.n / 2 {
            return Err(Error::domain(format!(
                "Z must satisfy 1 <= Z <= N/2 = {}, got {}",
                self.n / 2,
                self.z
            )));
        }
        if !(self.alpha >= 0.0) || !self.alpha.is_finite() {
            return Err(Error::domain(format!(
                "alpha must be finite and >= 0, got {}",
                self.alpha
            )));
        }
        if !self.gamma.is_finite() || !self.h.is_finite() {
            return Err(Error::domain("gamma and h must be finite"));
        }
        Ok(())
    }

    pub fn with_h(mut self, h: f64) -> Self {
        self.h = h;
        self
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn with_n(mut self, n: usize) -> Self {
        self.n = n;
        self
    }

    pub fn with_anisotropy(mut self, mode: AnisotropyMode) -> Self {
        self.anisotropy = mode;
        self
    }

    pub fn with_mode_range(mut self, range: ModeRange) -> Self {
        self.mode_range = range;
        self
    }

    /// Value of the estimated parameter.
    pub fn theta(&self, kind: ThetaKind) -> f64 {
        match kind {
            ThetaKind::Field => self.h,
            ThetaKind::Anisotropy => self.gamma,
        }
    }

    /// Copy with the estimated parameter shifted by `delta`.
    pub fn shifted(&self, kind: ThetaKind, delta: f64) -> Self {
        match kind {
            ThetaKind::Field => self.with_h(self.h + delta),
            ThetaKind::Anisotropy => self.with_gamma(self.gamma + delta),
        }
    }

    pub fn coupling_profile(&self) -> CouplingProfile {
        // z >= 1 is guaranteed by validate().
        coupling_profile(self.alpha, self.z).expect("validated coordination number")
    }
}

/// Kac-normalized coupling weights `J_1..J_Z`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingProfile {
    pub kac: f64,
    pub weights: Vec<f64>,
}

impl CouplingProfile {
    pub fn z(&self) -> usize {
        self.weights.len()
    }
}

fn check_z(z: usize) -> Result<()> {
    if z < 1 {
        return Err(Error::domain("coordination number Z must be >= 1"));
    }
    Ok(())
}

/// Generalized harmonic number `H_n^(alpha) = sum_{r=1}^{n} r^{-alpha}`; zero for `n = 0`.
pub fn harmonic(n: usize, alpha: f64) -> f64 {
    ordered_sum((1..=n).map(|r| (r as f64).powf(-alpha)))
}

/// Kac normalizer `K(alpha) = sum_{r=1}^{Z} r^{-alpha}`.
pub fn kac_factor(alpha: f64, z: usize) -> Result<f64> {
    check_z(z)?;
    Ok(harmonic(z, alpha))
}

pub fn coupling_profile(alpha: f64, z: usize) -> Result<CouplingProfile> {
    let kac = kac_factor(alpha, z)?;
    let weights = (1..=z).map(|r| (r as f64).powf(-alpha) / kac).collect();
    Ok(CouplingProfile { kac, weights })
}

/// `J(phi) = sum_r J_r e^{i r phi}`; real part `J^(R)`, imaginary part `J^(I)`.
pub fn momentum_coupling(profile: &CouplingProfile, phi: f64) -> Complex64 {
    let mut re = CompensatedSum::new();
    let mut im = CompensatedSum::new();
    for (i, w) in profile.weights.iter().enumerate() {
        let (s, c) = ((i + 1) as f64 * phi).sin_cos();
        re.add(w * c);
        im.add(w * s);
    }
    Complex64::new(re.value(), im.value())
}

/// Antiperiodic quasi-momenta `phi_p = (2p - 1) pi / N`.
pub fn mode_angles(params: &ModelParams) -> Vec<f64> {
    let last = match params.mode_range {
        ModeRange::Full => params.n / 2,
        ModeRange::PaperReduced => params.n / 2 - 1,
    };
    let n = params.n as f64;
    (1..=last).map(|p| (2 * p - 1) as f64 * PI / n).collect()
}

/// Gap-closing field at `phi -> 0`; Kac normalization pins it to `-1`.
pub fn critical_field_zero() -> f64 {
    -1.0
}

/// Gap-closing field at `phi -> pi`:
/// `1 - 2^{1-alpha} H_{floor(Z/2)} / H_Z`.
pub fn critical_field_pi(alpha: f64, z: usize) -> Result<f64> {
    check_z(z)?;
    Ok(1.0 - 2f64.powf(1.0 - alpha) * harmonic(z / 2, alpha) / harmonic(z, alpha))
}

/// The same field from the alternating-sum form `-sum (-1)^r r^{-alpha} / sum r^{-alpha}`.
pub fn critical_field_pi_alternating(alpha: f64, z: usize) -> Result<f64> {
    check_z(z)?;
    let alt = ordered_sum((1..=z).map(|r| {
        let t = (r as f64).powf(-alpha);
        if r % 2 == 0 {
            t
        } else {
            -t
        }
    }));
    Ok(-alt / harmonic(z, alpha))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn kac_factor_examples() {
        assert_eq!(kac_factor(1.5, 1).unwrap(), 1.0);
        assert_eq!(kac_factor(0.0, 5).unwrap(), 5.0);
        assert_abs_diff_eq!(kac_factor(1.0, 4).unwrap(), 25.0 / 12.0, epsilon = 1e-15);
        assert!(matches!(kac_factor(1.0, 0), Err(Error::Domain(_))));
    }

    #[test]
    fn coupling_profile_examples() {
        assert_eq!(coupling_profile(3.7, 1).unwrap().weights, vec![1.0]);
        assert_eq!(coupling_profile(0.0, 4).unwrap().weights, vec![0.25; 4]);
        let w = coupling_profile(1.0, 2).unwrap().weights;
        assert_abs_diff_eq!(w[0], 2.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(w[1], 1.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn weights_positive_and_nonincreasing() {
        for &alpha in &[0.0, 0.5, 1.5, 5.0] {
            let w = coupling_profile(alpha, 64).unwrap().weights;
            assert!(w.iter().all(|&x| x > 0.0));
            assert!(w.windows(2).all(|p| p[1] <= p[0]));
        }
    }

    #[test]
    fn momentum_coupling_examples() {
        let nn = coupling_profile(2.0, 1).unwrap();
        let phi = 0.37;
        let j = momentum_coupling(&nn, phi);
        assert_abs_diff_eq!(j.re, phi.cos(), epsilon = 1e-15);
        assert_abs_diff_eq!(j.im, phi.sin(), epsilon = 1e-15);
        assert_eq!(momentum_coupling(&nn, 0.0), Complex64::new(1.0, 0.0));

        let two = coupling_profile(1.0, 2).unwrap();
        let j = momentum_coupling(&two, PI / 2.0);
        assert_abs_diff_eq!(j.re, -1.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(j.im, 2.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn mode_angle_examples() {
        let p = ModelParams::new(4, 1, 1.0, 0.3, -0.7).unwrap();
        let a = mode_angles(&p);
        assert_eq!(a.len(), 2);
        assert_abs_diff_eq!(a[0], PI / 4.0, epsilon = 1e-15);
        assert_abs_diff_eq!(a[1], 3.0 * PI / 4.0, epsilon = 1e-15);

        let p = ModelParams::new(8, 1, 1.0, 0.3, -0.7)
            .unwrap()
            .with_mode_range(ModeRange::PaperReduced);
        let a = mode_angles(&p);
        assert_eq!(a.len(), 3);
        assert_abs_diff_eq!(a[2], 5.0 * PI / 8.0, epsilon = 1e-15);

        let p = ModelParams::new(1024, 4, 1.0, 0.3, -0.7).unwrap();
        let a = mode_angles(&p);
        assert_eq!(a.len(), 512);
        assert_abs_diff_eq!(a[511], 1023.0 * PI / 1024.0, epsilon = 1e-15);
        assert!(a.windows(2).all(|w| w[1] > w[0]));
        assert!(a.iter().all(|&x| x > 0.0 && x < PI));
    }

    #[test]
    fn critical_fields() {
        assert_eq!(critical_field_zero(), -1.0);
        for &(alpha, z) in &[(0.5, 3), (2.0, 7), (1.0, 1)] {
            let j0 = momentum_coupling(&coupling_profile(alpha, z).unwrap(), 0.0);
            assert_abs_diff_eq!(-j0.re, critical_field_zero(), epsilon = 1e-12);
        }
        assert_eq!(critical_field_pi(0.3, 1).unwrap(), 1.0);
        assert_abs_diff_eq!(critical_field_pi(0.0, 2).unwrap(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(critical_field_pi(1.0, 4).unwrap(), 0.28, epsilon = 1e-15);
        assert_abs_diff_eq!(critical_field_pi_alternating(1.0, 4).unwrap(), 0.28, epsilon = 1e-15);
        assert!(critical_field_pi(1.0, 0).is_err());
    }

    #[test]
    fn params_validation() {
        assert!(ModelParams::new(5, 1, 1.0, 0.3, 0.0).is_err());
        assert!(ModelParams::new(2, 1, 1.0, 0.3, 0.0).is_err());
        assert!(ModelParams::new(8, 5, 1.0, 0.3, 0.0).is_err());
        assert!(ModelParams::new(8, 0, 1.0, 0.3, 0.0).is_err());
        assert!(ModelParams::new(8, 4, -0.1, 0.3, 0.0).is_err());
        assert!(ModelParams::new(8, 4, 0.0, 0.3, 0.0).is_ok());
    }
}
