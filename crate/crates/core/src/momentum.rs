//! Per-momentum 2x2 blocks in the reduced Nambu basis
//! `{|0>_p, c_p^dag c_{-p}^dag |0>_p}`.
//!
//! Non-Hermitian block: `M = [[-a, -b], [b, a]]` with `a = h + J^(R)`,
//! `b = gamma J^(I)`, so `M^2 = (a^2 - b^2) I`. The Hermitian benchmark uses
//! `M_H = [[-a, -b], [-b, a]]` with `M_H^2 = (a^2 + b^2) I`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::ModeState;
use crate::error::{Error, Result};
use crate::mat2::{norm_sqr, Mat2, Vec2, ONE, ZERO};
use crate::model::{mode_angles, momentum_coupling, AnisotropyMode, ModelParams, ThetaKind};

/// Threshold on `eps^2` separating broken modes from unbroken ones, and the
/// window in which a block is treated as exceptional (defective).
pub const TOL_PHASE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeBlock {
    /// 1-based mode index.
    pub p: usize,
    pub phi: f64,
    /// `J(phi)`.
    pub coupling: Complex64,
    pub a: f64,
    pub b: f64,
    pub eps_sq: f64,
    pub mode: AnisotropyMode,
}

impl ModeBlock {
    pub fn new(p: usize, phi: f64, coupling: Complex64, gamma: f64, h: f64, mode: AnisotropyMode) -> Self {
        let a = h + coupling.re;
        let b = gamma * coupling.im;
        Self::from_entries(p, phi, coupling, a, b, mode)
    }

    /// Block with explicit entries; `coupling` only matters for `gamma` derivatives.
    pub fn from_entries(p: usize, phi: f64, coupling: Complex64, a: f64, b: f64, mode: AnisotropyMode) -> Self {
        let eps_sq = match mode {
            AnisotropyMode::NonHermitian => a * a - b * b,
            AnisotropyMode::Hermitian => a * a + b * b,
        };
        Self {
            p,
            phi,
            coupling,
            a,
            b,
            eps_sq,
            mode,
        }
    }

    /// Bare block built from `(a, b)` alone.
    pub fn bare(a: f64, b: f64, mode: AnisotropyMode) -> Self {
        Self::from_entries(0, 0.0, Complex64::new(0.0, 1.0), a, b, mode)
    }

    pub fn matrix(&self) -> Mat2 {
        let (a, b) = (self.a, self.b);
        match self.mode {
            AnisotropyMode::NonHermitian => Mat2::real(-a, -b, b, a),
            AnisotropyMode::Hermitian => Mat2::real(-a, -b, -b, a),
        }
    }

    /// `d M / d theta`.
    pub fn d_matrix(&self, theta: ThetaKind) -> Mat2 {
        match theta {
            ThetaKind::Field => Mat2::real(-1.0, 0.0, 0.0, 1.0),
            ThetaKind::Anisotropy => {
                let ji = self.coupling.im;
                match self.mode {
                    AnisotropyMode::NonHermitian => Mat2::real(0.0, -ji, ji, 0.0),
                    AnisotropyMode::Hermitian => Mat2::real(0.0, -ji, -ji, 0.0),
                }
            }
        }
    }

    /// `d eps^2 / d theta`.
    pub fn d_eps_sq(&self, theta: ThetaKind) -> f64 {
        match (theta, self.mode) {
            (ThetaKind::Field, _) => 2.0 * self.a,
            (ThetaKind::Anisotropy, AnisotropyMode::NonHermitian) => -2.0 * self.b * self.coupling.im,
            (ThetaKind::Anisotropy, AnisotropyMode::Hermitian) => 2.0 * self.b * self.coupling.im,
        }
    }
}

/// One block per retained quasi-momentum, in ascending mode order.
pub fn build_blocks(params: &ModelParams) -> Vec<ModeBlock> {
    let profile = params.coupling_profile();
    let angles = mode_angles(params);
    let body = |(i, &phi): (usize, &f64)| {
        ModeBlock::new(
            i + 1,
            phi,
            momentum_coupling(&profile, phi),
            params.gamma,
            params.h,
            params.anisotropy,
        )
    };
    if angles.len() * profile.z() < 1 << 14 {
        angles.iter().enumerate().map(body).collect()
    } else {
        angles.par_iter().enumerate().map(body).collect()
    }
}

/// Principal square root of `eps^2`; purely imaginary with positive
/// imaginary part when `eps^2 < 0`.
pub fn dispersion(block: &ModeBlock) -> Complex64 {
    if block.eps_sq >= 0.0 {
        Complex64::new(block.eps_sq.sqrt(), 0.0)
    } else {
        Complex64::new(0.0, (-block.eps_sq).sqrt())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Phase {
    Unbroken,
    Broken,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumClassification {
    pub label: Phase,
    pub min_eps_sq: f64,
    /// Mode index `p` of the minimizing block.
    pub argmin_mode: usize,
}

pub fn classify_phase(blocks: &[ModeBlock]) -> Result<SpectrumClassification> {
    let first = blocks
        .first()
        .ok_or_else(|| Error::domain("classify_phase needs at least one block"))?;
    let (min_eps_sq, argmin_mode) = blocks.iter().fold((first.eps_sq, first.p), |(m, p), blk| {
        if blk.eps_sq < m {
            (blk.eps_sq, blk.p)
        } else {
            (m, p)
        }
    });
    let label = if min_eps_sq < -TOL_PHASE {
        Phase::Broken
    } else {
        Phase::Unbroken
    };
    Ok(SpectrumClassification {
        label,
        min_eps_sq,
        argmin_mode,
    })
}

/// How the stationary eigenvector was selected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProbeKind {
    /// Eigenvalue `-eps` (real spectrum).
    LowestReal,
    /// Eigenvalue `+i|eps|` (broken mode).
    LargestImaginary,
    /// `|eps^2| <= TOL_PHASE`: the coalesced eigenvector of a defective block.
    Exceptional,
    /// `a = b = 0`: every vector is an eigenvector; `(1, 0)` returned.
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationaryProbe {
    pub state: ModeState,
    pub eigenvalue: Complex64,
    pub kind: ProbeKind,
}

/// Dominant eigenvector of one block, normalized and gauge-fixed so that the
/// larger-magnitude component is real and positive.
pub fn stationary_probe(block: &ModeBlock) -> StationaryProbe {
    let m = block.matrix();
    if block.a == 0.0 && block.b == 0.0 {
        return StationaryProbe {
            state: ModeState::normalized(ONE, ZERO),
            eigenvalue: ZERO,
            kind: ProbeKind::Degenerate,
        };
    }
    let (lambda, kind) = if block.eps_sq > TOL_PHASE {
        (Complex64::new(-block.eps_sq.sqrt(), 0.0), ProbeKind::LowestReal)
    } else if block.eps_sq < -TOL_PHASE {
        (Complex64::new(0.0, (-block.eps_sq).sqrt()), ProbeKind::LargestImaginary)
    } else {
        (ZERO, ProbeKind::Exceptional)
    };
    // Two null-vector candidates of (M - lambda); at least one is nonzero
    // unless M = lambda I, which only happens for the zero block.
    let m = m.0;
    let v1: Vec2 = [m[0][1], lambda - m[0][0]];
    let v2: Vec2 = [lambda - m[1][1], m[1][0]];
    let v = if norm_sqr(&v1) >= norm_sqr(&v2) { v1 } else { v2 };
    StationaryProbe {
        state: gauge_fix(v),
        eigenvalue: lambda,
        kind,
    }
}

/// Normalize and rotate so the larger-magnitude component is real positive.
pub(crate) fn gauge_fix(v: Vec2) -> ModeState {
    let n = norm_sqr(&v).sqrt();
    let pivot = if v[0].norm() >= v[1].norm() { v[0] } else { v[1] };
    let phase = pivot.conj() / pivot.norm();
    ModeState::normalized(v[0] * phase / n, v[1] * phase / n)
}
