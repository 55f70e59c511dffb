//! Non-unitary evolution of the polarized initial state, one mode at a time.
//!
//! Since `M^2 = eps^2 I`, the propagator is
//! `exp(-i M t) = C(eps^2, t) I - i S(eps^2, t) M` with
//! `C(x, t) = cos(sqrt(x) t)` and `S(x, t) = sin(sqrt(x) t) / sqrt(x)`.
//! Both are entire, real-valued functions of `x = eps^2`; for `x < 0` they
//! turn into `cosh` and `sinh`, and near `x = 0` they are evaluated from
//! their Taylor series, so exceptional blocks need no special handling.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::mat2::{norm_sqr, Mat2, Vec2, I, ONE, ZERO};
use crate::model::{mode_angles, momentum_coupling, ModelParams, ThetaKind};
use crate::momentum::ModeBlock;

/// `|x| t^2` below which `C` and `S` use their Taylor series.
pub const SERIES_THRESHOLD: f64 = 1e-8;
/// `|x| t^2` below which `dS/dx` uses its Taylor series; the closed form
/// `(t C - S) / (2x)` cancels catastrophically well above `SERIES_THRESHOLD`.
const DS_SERIES_THRESHOLD: f64 = 1e-2;
/// Growth exponent `|Im eps| t` above which amplitudes are rescaled by
/// `exp(-|Im eps| t)`.
pub const RESCALE_EXPONENT: f64 = 700.0;

/// Amplitudes on `|0>_p` and on the paired state `c_p^dag c_{-p}^dag |0>_p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeState {
    pub amp0: Complex64,
    pub amp2: Complex64,
    pub normalized: bool,
}

impl ModeState {
    pub fn new(amp0: Complex64, amp2: Complex64) -> Self {
        Self {
            amp0,
            amp2,
            normalized: false,
        }
    }

    pub(crate) fn normalized(amp0: Complex64, amp2: Complex64) -> Self {
        Self {
            amp0,
            amp2,
            normalized: true,
        }
    }

    pub fn vector(&self) -> Vec2 {
        [self.amp0, self.amp2]
    }

    pub fn norm_sqr(&self) -> f64 {
        norm_sqr(&self.vector())
    }

    pub fn populations(&self) -> (f64, f64) {
        let n = self.norm_sqr();
        (self.amp0.norm_sqr() / n, self.amp2.norm_sqr() / n)
    }
}

/// Unnormalized evolved amplitudes together with their `theta`-derivative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeTrajectory {
    pub state: ModeState,
    pub dstate: Vec2,
    pub theta_kind: ThetaKind,
    /// Exponent `k` of the common factor `exp(-k)` removed from both
    /// `state` and `dstate` (zero unless the mode grows past the overflow guard).
    pub rescale: f64,
}

/// `C`, `S` and their `x`-derivatives at fixed `t`, all multiplied by `exp(-rescale)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kernels {
    pub c: f64,
    pub s: f64,
    pub dc_dx: f64,
    pub ds_dx: f64,
    pub rescale: f64,
}

fn ds_dx_series(x: f64, t: f64) -> f64 {
    // dS/dx = t^3 sum_{k>=1} (-1)^k k y^{k-1} / (2k+1)!,  y = x t^2
    let y = x * t * t;
    let mut base = 1.0 / 6.0;
    let mut acc = -base;
    for k in 2..=8 {
        let kf = k as f64;
        base *= y / ((2.0 * kf) * (2.0 * kf + 1.0));
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        acc += sign * kf * base;
    }
    acc * t * t * t
}

pub fn kernels(x: f64, t: f64) -> Kernels {
    let xt2 = x * t * t;
    let (c, s, rescale) = if xt2.abs() < SERIES_THRESHOLD {
        let c = 1.0 - xt2 / 2.0 + xt2 * xt2 / 24.0 - xt2 * xt2 * xt2 / 720.0;
        let s = t * (1.0 - xt2 / 6.0 + xt2 * xt2 / 120.0 - xt2 * xt2 * xt2 / 5040.0);
        (c, s, 0.0)
    } else if x > 0.0 {
        let w = x.sqrt();
        let (sn, cs) = (w * t).sin_cos();
        (cs, sn / w, 0.0)
    } else {
        let kappa = (-x).sqrt();
        let kt = kappa * t;
        if kt > RESCALE_EXPONENT {
            let e = (-2.0 * kt).exp();
            ((1.0 + e) / 2.0, (1.0 - e) / (2.0 * kappa), kt)
        } else {
            (kt.cosh(), kt.sinh() / kappa, 0.0)
        }
    };
    let dc_dx = -t * s / 2.0;
    let ds_dx = if xt2.abs() < DS_SERIES_THRESHOLD {
        ds_dx_series(x, t) * (-rescale).exp()
    } else {
        (t * c - s) / (2.0 * x)
    };
    Kernels {
        c,
        s,
        dc_dx,
        ds_dx,
        rescale,
    }
}

fn check_time(t: f64) -> Result<()> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::domain(format!("time must be finite and >= 0, got {t}")));
    }
    Ok(())
}

fn assemble(block: &ModeBlock, k: &Kernels) -> Mat2 {
    Mat2::identity().scale(k.c.into()) - block.matrix().scale(I * k.s)
}

/// `exp(-i M t)` for `t >= 0`. Overflows to infinity for broken modes with
/// `|Im eps| t` beyond a few hundred; evolution routines rescale instead.
pub fn propagator(block: &ModeBlock, t: f64) -> Result<Mat2> {
    check_time(t)?;
    let k = kernels(block.eps_sq, t);
    let u = assemble(block, &k);
    Ok(if k.rescale > 0.0 {
        u.scale(k.rescale.exp().into())
    } else {
        u
    })
}

/// Propagator with the overflow guard's factor `exp(-rescale)` removed.
pub fn scaled_propagator(block: &ModeBlock, t: f64) -> Result<(Mat2, f64)> {
    check_time(t)?;
    let k = kernels(block.eps_sq, t);
    Ok((assemble(block, &k), k.rescale))
}

/// Normalized state and `ln` of the pre-normalization norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evolved {
    pub state: ModeState,
    pub ln_norm: f64,
}

/// Normalized `U(t) (1, 0)`.
pub fn evolve_mode(block: &ModeBlock, t: f64) -> Result<ModeState> {
    evolve_mode_with_norm(block, t).map(|e| e.state)
}

pub fn evolve_mode_with_norm(block: &ModeBlock, t: f64) -> Result<Evolved> {
    let (u, rescale) = scaled_propagator(block, t)?;
    let phi = u.col0();
    let n2 = norm_sqr(&phi);
    if !(n2 >= 1e-300) {
        return Err(Error::Underflow(n2));
    }
    let n = n2.sqrt();
    Ok(Evolved {
        state: ModeState::normalized(phi[0] / n, phi[1] / n),
        ln_norm: n.ln() + rescale,
    })
}

/// Unnormalized `phi = U (1,0)` and `d phi / d theta` for one block.
pub fn block_trajectory(block: &ModeBlock, t: f64, theta: ThetaKind) -> Result<ModeTrajectory> {
    check_time(t)?;
    let k = kernels(block.eps_sq, t);
    let m = block.matrix();
    let u = assemble(block, &k);
    let dx = block.d_eps_sq(theta);
    let du = (Mat2::identity().scale(k.dc_dx.into()) - m.scale(I * k.ds_dx)).scale(dx.into())
        - block.d_matrix(theta).scale(I * k.s);
    let phi = u.col0();
    Ok(ModeTrajectory {
        state: ModeState::new(phi[0], phi[1]),
        dstate: du.col0(),
        theta_kind: theta,
        rescale: k.rescale,
    })
}

/// Trajectory of mode `p` (1-based) of the chain described by `params`.
pub fn evolve_mode_derivative(params: &ModelParams, p: usize, t: f64, theta: ThetaKind) -> Result<ModeTrajectory> {
    params.validate()?;
    let angles = mode_angles(params);
    let phi = *angles
        .get(p.wrapping_sub(1))
        .ok_or_else(|| Error::domain(format!("mode index {p} outside 1..={}", angles.len())))?;
    let coupling = momentum_coupling(&params.coupling_profile(), phi);
    let block = ModeBlock::new(p, phi, coupling, params.gamma, params.h, params.anisotropy);
    block_trajectory(&block, t, theta)
}

/// The mode vacuum `(1, 0)`.
pub fn initial_state() -> ModeState {
    ModeState::normalized(ONE, ZERO)
}
