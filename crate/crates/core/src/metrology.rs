//! Pure-state quantum Fisher information, mode by mode.
//!
//! The state is a product over momentum sectors, so the QFI is the sum of
//! per-mode contributions. Each contribution is evaluated from the
//! *unnormalized* amplitudes `phi` and their derivative `dphi`:
//!
//! `F = 4 [ <dphi|dphi>/n - |<phi|dphi>|^2/n^2 ]`,  `n = <phi|phi>`,
//!
//! which equals the usual pure-state expression applied to `phi/sqrt(n)`
//! and is invariant under `phi -> c phi`, `dphi -> c dphi + c' phi`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::block_trajectory;
use crate::error::{Error, Result};
use crate::mat2::{inner, norm_sqr, Vec2};
use crate::model::{mode_angles, momentum_coupling, AnisotropyMode, ModelParams, ThetaKind};
use crate::momentum::{build_blocks, stationary_probe, ModeBlock, ProbeKind};
use crate::numeric::{linspace, CompensatedSum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Protocol {
    Dynamical,
    Stationary,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QfiSample {
    /// Time, system size or field offset, depending on the sweep.
    pub x: f64,
    pub value: f64,
    pub protocol: Protocol,
    pub theta_kind: ThetaKind,
    pub params: ModelParams,
}

/// QFI contribution of one (possibly unnormalized) two-component state,
/// `4 (<dphi|dphi>/n - |<phi|dphi>|^2/n^2)` with `n = <phi|phi>`.
///
/// For two components the bracket equals `|phi_0 dphi_1 - phi_1 dphi_0|^2 / n^2`,
/// which is evaluated instead so the result is nonnegative without cancellation.
pub fn mode_qfi(phi: &Vec2, dphi: &Vec2) -> Result<f64> {
    let n = norm_sqr(phi);
    if !(n >= 1e-300) {
        return Err(Error::domain(format!("state norm {n:e} too small for QFI")));
    }
    let cross = phi[0] * dphi[1] - phi[1] * dphi[0];
    let f = 4.0 * (cross / n).norm_sqr();
    if f.is_finite() {
        Ok(f)
    } else {
        Err(Error::Numerical(format!("non-finite mode QFI for norm {n:e}")))
    }
}

/// Dynamical QFI of the polarized initial state evolved for time `t`.
pub fn dynamical_qfi(params: &ModelParams, t: f64, theta: ThetaKind) -> Result<QfiSample> {
    DynamicalSensor::new(params)?.sample(t, theta)
}

/// Blocks of one chain cached for repeated time evaluations.
#[derive(Debug, Clone)]
pub struct DynamicalSensor {
    params: ModelParams,
    blocks: Vec<ModeBlock>,
}

impl DynamicalSensor {
    pub fn new(params: &ModelParams) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            params: *params,
            blocks: build_blocks(params),
        })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn blocks(&self) -> &[ModeBlock] {
        &self.blocks
    }

    /// Per-mode QFI contributions in ascending mode order.
    pub fn mode_qfis(&self, t: f64, theta: ThetaKind) -> Result<Vec<f64>> {
        self.blocks
            .iter()
            .map(|blk| {
                let tr = block_trajectory(blk, t, theta)?;
                mode_qfi(&tr.state.vector(), &tr.dstate)
            })
            .collect()
    }

    pub fn qfi(&self, t: f64, theta: ThetaKind) -> Result<f64> {
        let mut acc = CompensatedSum::new();
        for blk in &self.blocks {
            let tr = block_trajectory(blk, t, theta)?;
            acc.add(mode_qfi(&tr.state.vector(), &tr.dstate)?);
        }
        Ok(acc.value())
    }

    pub fn sample(&self, t: f64, theta: ThetaKind) -> Result<QfiSample> {
        Ok(QfiSample {
            x: t,
            value: self.qfi(t, theta)?,
            protocol: Protocol::Dynamical,
            theta_kind: theta,
            params: self.params,
        })
    }

    /// QFI on a time grid; grid points are evaluated in parallel, output
    /// order follows the grid.
    pub fn curve(&self, times: &[f64], theta: ThetaKind) -> Result<Vec<QfiSample>> {
        times.par_iter().map(|&t| self.sample(t, theta)).collect()
    }
}

/// Stationary-probe QFI with metadata on the finite-difference stencil.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationaryQfi {
    pub sample: QfiSample,
    /// Requested step.
    pub fd_step: f64,
    /// Smallest step actually used by any mode.
    pub min_step: f64,
    /// Modes whose step was shortened to stay clear of their exceptional point.
    pub shortened_modes: usize,
    /// Modes whose stencil still crosses an exceptional point (selection rule
    /// changes between `theta - step` and `theta + step`).
    pub straddled_modes: usize,
    /// Modes sitting on an exceptional point at `theta` itself.
    pub exceptional_modes: usize,
}

impl StationaryQfi {
    pub fn straddles(&self) -> bool {
        self.straddled_modes > 0 || self.exceptional_modes > 0
    }
}

/// Default stationary finite-difference step `1e-6 max(1, |theta|)`.
pub fn default_stationary_step(theta: f64) -> f64 {
    1e-6 * theta.abs().max(1.0)
}

/// Fraction of a mode's distance to its exceptional point used as the
/// largest admissible local step.
pub const STEP_FRACTION: f64 = 1e-2;

fn align(reference: &Vec2, v: Vec2) -> Vec2 {
    // Rotate v so that <reference|v> is real and positive.
    let ov = inner(reference, &v);
    if ov.norm() == 0.0 {
        return v;
    }
    let phase = ov.conj() / ov.norm();
    [v[0] * phase, v[1] * phase]
}

struct ModeStencil {
    qfi: f64,
    step: f64,
    shortened: bool,
    straddled: bool,
    exceptional: bool,
}

/// QFI of the product of per-mode dominant eigenvectors, differentiated by
/// a central difference with one Richardson refinement.
///
/// Each mode uses `min(fd_step, STEP_FRACTION |eps^2| / |d eps^2 / d theta|)`,
/// so the stencil neither crosses nor approaches that mode's exceptional point.
pub fn stationary_qfi(params: &ModelParams, theta: ThetaKind, fd_step: f64) -> Result<StationaryQfi> {
    params.validate()?;
    if !(fd_step > 0.0) {
        return Err(Error::domain(format!("fd_step must be > 0, got {fd_step}")));
    }
    let profile = params.coupling_profile();
    let angles = mode_angles(params);
    let couplings: Vec<Complex64> = angles.iter().map(|&phi| momentum_coupling(&profile, phi)).collect();

    let block_at = |i: usize, delta: f64| {
        let shifted = params.shifted(theta, delta);
        ModeBlock::new(
            i + 1,
            angles[i],
            couplings[i],
            shifted.gamma,
            shifted.h,
            params.anisotropy,
        )
    };

    let per_mode: Vec<ModeStencil> = (0..angles.len())
        .into_par_iter()
        .map(|i| {
            let block = block_at(i, 0.0);
            let base = stationary_probe(&block);
            let slope = block.d_eps_sq(theta).abs();
            let distance = if slope > 0.0 {
                block.eps_sq.abs() / slope
            } else {
                f64::INFINITY
            };
            let exceptional = base.kind == ProbeKind::Exceptional;
            // On the exceptional point itself the QFI is singular; the mode is
            // differenced with the requested step and flagged.
            let step = if exceptional {
                fd_step
            } else {
                fd_step.min(STEP_FRACTION * distance)
            };
            let v0 = base.state.vector();
            let stencil = [step, -step, step / 2.0, -step / 2.0].map(|d| stationary_probe(&block_at(i, d)));
            let straddled = stencil.iter().any(|p| p.kind != base.kind);
            let v: Vec<Vec2> = stencil.iter().map(|p| align(&v0, p.state.vector())).collect();
            let diff = |a: &Vec2, b: &Vec2, h: f64| [(a[0] - b[0]) / (2.0 * h), (a[1] - b[1]) / (2.0 * h)];
            let coarse = diff(&v[0], &v[1], step);
            let fine = diff(&v[2], &v[3], step / 2.0);
            let d = [(4.0 * fine[0] - coarse[0]) / 3.0, (4.0 * fine[1] - coarse[1]) / 3.0];
            Ok(ModeStencil {
                qfi: mode_qfi(&v0, &d)?,
                step,
                shortened: step < fd_step,
                straddled,
                exceptional,
            })
        })
        .collect::<Result<_>>()?;

    let mut acc = CompensatedSum::new();
    let mut out = StationaryQfi {
        sample: QfiSample {
            x: params.theta(theta),
            value: 0.0,
            protocol: Protocol::Stationary,
            theta_kind: theta,
            params: *params,
        },
        fd_step,
        min_step: fd_step,
        shortened_modes: 0,
        straddled_modes: 0,
        exceptional_modes: 0,
    };
    for m in &per_mode {
        acc.add(m.qfi);
        out.min_step = out.min_step.min(m.step);
        out.shortened_modes += m.shortened as usize;
        out.straddled_modes += m.straddled as usize;
        out.exceptional_modes += m.exceptional as usize;
    }
    out.sample.value = acc.value();
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioPoint {
    pub t: f64,
    pub qfi_nh: f64,
    pub qfi_h: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioResult {
    pub mean_ratio: f64,
    pub t0: f64,
    pub t1: f64,
    /// Grid points used in the average.
    pub n_samples: usize,
    /// Grid points dropped because the Hermitian QFI vanished.
    pub dropped: usize,
    pub per_sample: Vec<RatioPoint>,
}

/// Hermitian QFI below which a ratio point is dropped.
pub const RATIO_FLOOR: f64 = 1e-30;

/// Time average of `F_nH(t) / F_H(t)` over `[t0, t1]` by the trapezoid rule
/// on a uniform grid, divided by the length of the averaging window.
pub fn qfi_ratio_time_avg(
    params: &ModelParams,
    theta: ThetaKind,
    t0: f64,
    t1: f64,
    n_grid: usize,
) -> Result<RatioResult> {
    if !(t0 > 0.0 && t1 > t0) {
        return Err(Error::domain(format!("need 0 < t0 < t1, got [{t0}, {t1}]")));
    }
    if n_grid < 2 {
        return Err(Error::domain("ratio grid needs at least 2 points"));
    }
    let nh = DynamicalSensor::new(&params.with_anisotropy(AnisotropyMode::NonHermitian))?;
    let herm = DynamicalSensor::new(&params.with_anisotropy(AnisotropyMode::Hermitian))?;
    let grid = linspace(t0, t1, n_grid);
    let points: Vec<(f64, f64, f64)> = grid
        .par_iter()
        .map(|&t| Ok((t, nh.qfi(t, theta)?, herm.qfi(t, theta)?)))
        .collect::<Result<_>>()?;

    let kept: Vec<RatioPoint> = points
        .iter()
        .filter(|&&(_, _, fh)| fh >= RATIO_FLOOR)
        .map(|&(t, fnh, fh)| RatioPoint {
            t,
            qfi_nh: fnh,
            qfi_h: fh,
            ratio: fnh / fh,
        })
        .collect();
    let dropped = points.len() - kept.len();
    if kept.len() < 2 {
        return Err(Error::Numerical(format!(
            "only {} of {} ratio points have a nonvanishing Hermitian QFI",
            kept.len(),
            points.len()
        )));
    }
    let mut acc = CompensatedSum::new();
    for w in kept.windows(2) {
        acc.add(0.5 * (w[0].ratio + w[1].ratio) * (w[1].t - w[0].t));
    }
    let span = kept[kept.len() - 1].t - kept[0].t;
    Ok(RatioResult {
        mean_ratio: acc.value() / span,
        t0,
        t1,
        n_samples: kept.len(),
        dropped,
        per_sample: kept,
    })
}
