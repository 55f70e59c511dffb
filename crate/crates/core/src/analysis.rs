//! Exceptional-point search, power-law fits and the parameter sweeps built
//! on top of them.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrology::{default_stationary_step, stationary_qfi, DynamicalSensor, QfiSample};
use crate::model::{critical_field_zero, momentum_coupling, AnisotropyMode, CouplingProfile, ModelParams, ThetaKind};
use crate::momentum::{build_blocks, classify_phase, Phase, TOL_PHASE};
use crate::numeric::logspace;

/// Default bisection width for the exceptional field.
pub const EP_TOLERANCE: f64 = 1e-9;
/// Default search bracket for the exceptional field.
pub const EP_BRACKET: (f64, f64) = (-1.2, -0.7);

/// Momentum resolution used when deciding broken vs unbroken.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhaseGrid {
    /// Minimum of `eps^2(phi)` over the whole band `phi in [0, pi]`.
    Continuum,
    /// Minimum over the chain's discrete quasi-momenta.
    Modes,
}

/// `eps^2(phi)` minimized over `[0, pi]` for a fixed coupling profile.
///
/// `J(phi)` is sampled once on a uniform grid dense enough to resolve its
/// oscillations (`>= 32 Z` points); each field then costs one pass over the
/// samples plus golden-section refinement around the lowest local minima.
#[derive(Debug, Clone)]
pub struct BandMinimizer {
    profile: CouplingProfile,
    gamma: f64,
    phis: Vec<f64>,
    j_re: Vec<f64>,
    j_im: Vec<f64>,
}

impl BandMinimizer {
    pub fn new(profile: CouplingProfile, gamma: f64) -> Self {
        let m = (32 * profile.z()).max(2048);
        let phis: Vec<f64> = (0..=m).map(|k| PI * k as f64 / m as f64).collect();
        let (j_re, j_im) = phis
            .par_iter()
            .map(|&phi| {
                let j = momentum_coupling(&profile, phi);
                (j.re, j.im)
            })
            .unzip();
        Self {
            profile,
            gamma,
            phis,
            j_re,
            j_im,
        }
    }

    fn eps_sq_at(&self, h: f64, phi: f64) -> f64 {
        let j = momentum_coupling(&self.profile, phi);
        let a = h + j.re;
        let b = self.gamma * j.im;
        a * a - b * b
    }

    /// Returns `(min eps^2, argmin phi)`.
    pub fn min_eps_sq(&self, h: f64) -> (f64, f64) {
        let g2 = self.gamma * self.gamma;
        let vals: Vec<f64> = self
            .j_re
            .iter()
            .zip(&self.j_im)
            .map(|(&re, &im)| {
                let a = h + re;
                a * a - g2 * im * im
            })
            .collect();
        let last = vals.len() - 1;
        let mut minima: Vec<usize> = (0..=last)
            .filter(|&k| (k == 0 || vals[k] <= vals[k - 1]) && (k == last || vals[k] <= vals[k + 1]))
            .collect();
        minima.sort_by(|&x, &y| vals[x].total_cmp(&vals[y]));
        minima.truncate(4);
        let mut best = (vals[minima[0]], self.phis[minima[0]]);
        for &k in &minima {
            let lo = self.phis[k.saturating_sub(1)];
            let hi = self.phis[(k + 1).min(last)];
            let (phi, val) = golden_section(|phi| self.eps_sq_at(h, phi), lo, hi, 1e-13);
            if val < best.0 {
                best = (val, phi);
            }
        }
        best
    }
}

fn golden_section<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    let (fa, fb) = (f(a), f(b));
    [(c, fc), (d, fd), (a, fa), (b, fb)]
        .into_iter()
        .min_by(|x, y| x.1.total_cmp(&y.1))
        .expect("nonempty")
}

/// Phase predicate for exceptional-point searches over `h` at fixed
/// `(N, Z, alpha, gamma)`.
pub struct PhaseProbe {
    base: ModelParams,
    grid: PhaseGrid,
    band: Option<BandMinimizer>,
}

impl PhaseProbe {
    pub fn new(base: &ModelParams, grid: PhaseGrid) -> Result<Self> {
        base.validate()?;
        let band = match grid {
            PhaseGrid::Continuum => Some(BandMinimizer::new(base.coupling_profile(), base.gamma)),
            PhaseGrid::Modes => None,
        };
        Ok(Self {
            base: *base,
            grid,
            band,
        })
    }

    pub fn min_eps_sq(&self, h: f64) -> f64 {
        match &self.band {
            Some(band) => band.min_eps_sq(h).0,
            None => {
                classify_phase(&build_blocks(&self.base.with_h(h)))
                    .expect("at least one mode")
                    .min_eps_sq
            }
        }
    }

    pub fn phase(&self, h: f64) -> Phase {
        if self.min_eps_sq(h) < -TOL_PHASE {
            Phase::Broken
        } else {
            Phase::Unbroken
        }
    }

    pub fn grid(&self) -> PhaseGrid {
        self.grid
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpResult {
    pub h_e: f64,
    pub bracket: (f64, f64),
    pub tolerance: f64,
    pub iterations: usize,
    pub gamma: f64,
    pub alpha: f64,
    pub z: usize,
    pub n: usize,
    pub grid: PhaseGrid,
}

/// Bisects the broken/unbroken boundary in `h` (the `h` of `base` is ignored).
pub fn find_exceptional_point(base: &ModelParams, bracket: (f64, f64), tol: f64, grid: PhaseGrid) -> Result<EpResult> {
    if !(tol > 0.0) {
        return Err(Error::domain(format!("tolerance must be > 0, got {tol}")));
    }
    let (mut lo, mut hi) = if bracket.0 <= bracket.1 {
        bracket
    } else {
        (bracket.1, bracket.0)
    };
    let probe = PhaseProbe::new(base, grid)?;
    let lo_phase = probe.phase(lo);
    let hi_phase = probe.phase(hi);
    if lo_phase == hi_phase {
        return Err(Error::Bracket {
            lo,
            hi,
            lo_phase,
            hi_phase,
        });
    }
    let mut iterations = 0;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if probe.phase(mid) == lo_phase {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    Ok(EpResult {
        h_e: 0.5 * (lo + hi),
        bracket: (lo, hi),
        tolerance: tol,
        iterations,
        gamma: base.gamma,
        alpha: base.alpha,
        z: base.z,
        n: base.n,
        grid,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub slope_stderr: f64,
    pub window: (f64, f64),
    pub n_points: usize,
    /// Points inside the window dropped for a non-positive value.
    pub dropped: usize,
}

/// Least squares on `(log10 x, log10 y)` for points with `x` inside `window`.
pub fn fit_power_law_xy(points: &[(f64, f64)], window: (f64, f64)) -> Result<PowerFit> {
    let inside: Vec<(f64, f64)> = points
        .iter()
        .copied()
        .filter(|&(x, _)| x >= window.0 && x <= window.1 && x > 0.0)
        .collect();
    let usable: Vec<(f64, f64)> = inside
        .iter()
        .filter(|&&(_, y)| y > 0.0 && y.is_finite())
        .map(|&(x, y)| (x.log10(), y.log10()))
        .collect();
    let dropped = inside.len() - usable.len();
    let n = usable.len();
    if n < 3 {
        return Err(Error::Fit { usable: n, dropped });
    }
    let nf = n as f64;
    let mx = usable.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = usable.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = usable.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = usable.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = usable.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Fit { usable: n, dropped });
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = usable.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        (1.0 - sse / syy).clamp(0.0, 1.0)
    };
    let slope_stderr = (sse / (nf - 2.0) / sxx).sqrt();
    Ok(PowerFit {
        slope,
        intercept,
        r_squared,
        slope_stderr,
        window,
        n_points: n,
        dropped,
    })
}

pub fn fit_power_law(samples: &[QfiSample], window: (f64, f64)) -> Result<PowerFit> {
    let pts: Vec<(f64, f64)> = samples.iter().map(|s| (s.x, s.value)).collect();
    fit_power_law_xy(&pts, window)
}

/// A sampled QFI curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QfiSeries {
    /// Name of the abscissa: `t`, `N` or `dh`.
    pub x_name: String,
    pub theta_kind: ThetaKind,
    pub samples: Vec<QfiSample>,
}

impl QfiSeries {
    pub fn points(&self) -> Vec<(f64, f64)> {
        self.samples.iter().map(|s| (s.x, s.value)).collect()
    }
}

/// Coordination number that may track the system size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Coordination {
    Fixed(usize),
    HalfChain,
}

impl Coordination {
    pub fn resolve(self, n: usize) -> usize {
        match self {
            Coordination::Fixed(z) => z,
            Coordination::HalfChain => n / 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeGrids {
    pub transient: Vec<f64>,
    pub long_time: Vec<f64>,
}

impl Default for TimeGrids {
    /// 60 log-spaced points in `[0.1, 0.5]` and in `[200, 1000]`.
    fn default() -> Self {
        Self {
            transient: logspace(0.1, 0.5, 60),
            long_time: logspace(200.0, 1000.0, 60),
        }
    }
}

fn window_of(grid: &[f64]) -> Result<(f64, f64)> {
    let lo = grid.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = grid.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if grid.is_empty() || !(lo > 0.0) {
        return Err(Error::domain("time grids must be nonempty and positive"));
    }
    Ok((lo, hi))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeScaling {
    pub series: QfiSeries,
    pub transient: PowerFit,
    pub long_time: PowerFit,
}

/// QFI against time on both grids, with a power-law fit over each.
pub fn sweep_time_scaling(params: &ModelParams, theta: ThetaKind, grids: &TimeGrids) -> Result<TimeScaling> {
    let tw = window_of(&grids.transient)?;
    let lw = window_of(&grids.long_time)?;
    let sensor = DynamicalSensor::new(params)?;
    let mut times: Vec<f64> = grids.transient.iter().chain(&grids.long_time).copied().collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    let samples = sensor.curve(&times, theta)?;
    let transient = fit_power_law(&samples, tw)?;
    let long_time = fit_power_law(&samples, lw)?;
    Ok(TimeScaling {
        series: QfiSeries {
            x_name: "t".into(),
            theta_kind: theta,
            samples,
        },
        transient,
        long_time,
    })
}

pub const DEFAULT_SIZE_LIST: [usize; 6] = [128, 256, 512, 1024, 2048, 4096];
pub const DEFAULT_STATIONARY_SIZE_LIST: [usize; 4] = [1024, 2048, 4096, 8192];
pub const DEFAULT_SIZE_TIME: f64 = 200.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeScaling {
    pub series: QfiSeries,
    pub fit: PowerFit,
    pub t_eval: f64,
}

fn check_sizes(n_list: &[usize]) -> Result<()> {
    if n_list.is_empty() {
        return Err(Error::domain("size list is empty"));
    }
    if let Some(n) = n_list.iter().find(|&&n| n % 2 != 0 || n < 4) {
        return Err(Error::domain(format!("system sizes must be even and >= 4, got {n}")));
    }
    Ok(())
}

/// Dynamical QFI at fixed `t_eval` against `N`; `params.n` and `params.z` are overridden.
pub fn sweep_size_scaling(
    params: &ModelParams,
    coordination: Coordination,
    theta: ThetaKind,
    t_eval: f64,
    n_list: &[usize],
) -> Result<SizeScaling> {
    check_sizes(n_list)?;
    if !(t_eval > 0.0) {
        return Err(Error::domain(format!("t_eval must be > 0, got {t_eval}")));
    }
    let samples: Vec<QfiSample> = n_list
        .par_iter()
        .map(|&n| {
            let mut p = params.with_n(n);
            p.z = coordination.resolve(n);
            let s = DynamicalSensor::new(&p)?.sample(t_eval, theta)?;
            Ok(QfiSample { x: n as f64, ..s })
        })
        .collect::<Result<_>>()?;
    let lo = *n_list.iter().min().expect("nonempty") as f64;
    let hi = *n_list.iter().max().expect("nonempty") as f64;
    let fit = fit_power_law(&samples, (lo, hi))?;
    Ok(SizeScaling {
        series: QfiSeries {
            x_name: "N".into(),
            theta_kind: theta,
            samples,
        },
        fit,
        t_eval,
    })
}

/// Field about which stationary offsets `dh` are taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Anchor {
    ExceptionalPoint,
    CriticalPoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationaryCell {
    pub dh: f64,
    pub anchor: Anchor,
    /// Anchor field used at each `N` (same order as the samples).
    pub anchor_fields: Vec<f64>,
    pub samples: Vec<QfiSample>,
    pub fit: Option<PowerFit>,
    /// Sizes whose finite-difference stencil touched an exceptional point.
    pub straddled_sizes: Vec<usize>,
    pub fd_steps: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationaryOptions {
    /// Grid used to locate the exceptional anchor.
    pub ep_grid: PhaseGrid,
    pub ep_bracket: (f64, f64),
    pub ep_tolerance: f64,
    /// Finite-difference step; `None` uses `1e-6 max(1, |theta|)`.
    pub fd_step: Option<f64>,
}

impl Default for StationaryOptions {
    fn default() -> Self {
        Self {
            ep_grid: PhaseGrid::Continuum,
            ep_bracket: EP_BRACKET,
            ep_tolerance: 1e-12,
            fd_step: None,
        }
    }
}

/// Anchor field for one chain.
pub fn anchor_field(params: &ModelParams, anchor: Anchor, opts: &StationaryOptions) -> Result<f64> {
    match anchor {
        Anchor::CriticalPoint => Ok(critical_field_zero()),
        Anchor::ExceptionalPoint => {
            let p = params.with_anisotropy(AnisotropyMode::NonHermitian);
            Ok(find_exceptional_point(&p, opts.ep_bracket, opts.ep_tolerance, opts.ep_grid)?.h_e)
        }
    }
}

/// For each offset `dh`, the stationary QFI at `h = anchor + dh` across
/// `n_list` and the fitted exponent of `F ~ N^mu`.
pub fn sweep_stationary_scaling(
    params: &ModelParams,
    coordination: Coordination,
    theta: ThetaKind,
    dh_list: &[f64],
    n_list: &[usize],
    anchor: Anchor,
    opts: &StationaryOptions,
) -> Result<Vec<StationaryCell>> {
    check_sizes(n_list)?;
    if dh_list.is_empty() {
        return Err(Error::domain("dh list is empty"));
    }
    let configure = |n: usize| {
        let mut p = params.with_n(n);
        p.z = coordination.resolve(n);
        p
    };
    // Anchors depend on N only through Z(N) (and on the grid for PhaseGrid::Modes).
    let anchors: Vec<f64> = n_list
        .par_iter()
        .map(|&n| anchor_field(&configure(n), anchor, opts))
        .collect::<Result<_>>()?;
    let lo = *n_list.iter().min().expect("nonempty") as f64;
    let hi = *n_list.iter().max().expect("nonempty") as f64;

    dh_list
        .par_iter()
        .map(|&dh| {
            let mut samples = Vec::with_capacity(n_list.len());
            let mut straddled = Vec::new();
            let mut steps = Vec::with_capacity(n_list.len());
            for (&n, &h0) in n_list.iter().zip(&anchors) {
                let p = configure(n).with_h(h0 + dh);
                let step = opts.fd_step.unwrap_or_else(|| default_stationary_step(p.theta(theta)));
                let s = stationary_qfi(&p, theta, step)?;
                if s.straddles() {
                    straddled.push(n);
                }
                steps.push(step);
                samples.push(QfiSample {
                    x: n as f64,
                    ..s.sample
                });
            }
            let fit = fit_power_law(&samples, (lo, hi)).ok();
            Ok(StationaryCell {
                dh,
                anchor,
                anchor_fields: anchors.clone(),
                samples,
                fit,
                straddled_sizes: straddled,
                fd_steps: steps,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrology::Protocol;
    use approx::assert_abs_diff_eq;

    #[test]
    fn exact_power_law_is_recovered() {
        let pts: Vec<(f64, f64)> = (1..=20).map(|i| (i as f64, 7.0 * (i as f64).powf(2.5))).collect();
        let fit = fit_power_law_xy(&pts, (1.0, 20.0)).unwrap();
        assert_abs_diff_eq!(fit.slope, 2.5, epsilon = 1e-12);
        assert_abs_diff_eq!(fit.intercept, 7f64.log10(), epsilon = 1e-12);
        assert_abs_diff_eq!(fit.r_squared, 1.0, epsilon = 1e-12);
        assert_eq!(fit.n_points, 20);
    }

    #[test]
    fn fit_window_and_nonpositive_values() {
        let mut pts: Vec<(f64, f64)> = (1..=10).map(|i| (i as f64, (i as f64).powi(2))).collect();
        pts[3].1 = 0.0;
        pts[4].1 = -1.0;
        let fit = fit_power_law_xy(&pts, (2.0, 8.0)).unwrap();
        assert_eq!(fit.n_points, 5);
        assert_eq!(fit.dropped, 2);
        assert_abs_diff_eq!(fit.slope, 2.0, epsilon = 1e-12);
        assert!(matches!(
            fit_power_law_xy(&pts, (4.0, 6.0)),
            Err(Error::Fit { usable: 1, dropped: 2 })
        ));
    }

    #[test]
    fn fit_accepts_samples() {
        let params = ModelParams::new(8, 1, 1.0, 0.3, -0.7).unwrap();
        let samples: Vec<QfiSample> = [1.0, 2.0, 4.0]
            .iter()
            .map(|&x| QfiSample {
                x,
                value: x * x * x,
                protocol: Protocol::Dynamical,
                theta_kind: ThetaKind::Field,
                params,
            })
            .collect();
        assert_abs_diff_eq!(fit_power_law(&samples, (0.5, 5.0)).unwrap().slope, 3.0, epsilon = 1e-12);
    }

    #[test]
    fn nearest_neighbour_exceptional_point() {
        let base = ModelParams::new(1024, 1, 1.0, 0.5, 0.0).unwrap();
        let ep = find_exceptional_point(&base, (-1.2, -0.9), EP_TOLERANCE, PhaseGrid::Continuum).unwrap();
        assert!((ep.h_e + 1.118033989).abs() <= 1e-8, "{}", ep.h_e);
        assert!(ep.bracket.1 - ep.bracket.0 <= EP_TOLERANCE);
        assert!(ep.iterations > 0);
    }

    #[test]
    fn bracket_without_boundary_is_rejected() {
        let base = ModelParams::new(64, 2, 1.0, 0.5, 0.0).unwrap();
        let err = find_exceptional_point(&base, (-3.0, -2.0), 1e-9, PhaseGrid::Modes).unwrap_err();
        assert!(matches!(
            err,
            Error::Bracket {
                lo_phase: Phase::Unbroken,
                hi_phase: Phase::Unbroken,
                ..
            }
        ));
        assert!(find_exceptional_point(&base, (-1.2, -0.7), 0.0, PhaseGrid::Modes).is_err());
    }

    #[test]
    fn modes_grid_bisection_brackets_a_phase_change() {
        let base = ModelParams::new(256, 3, 1.2, 0.5, 0.0).unwrap();
        let ep = find_exceptional_point(&base, EP_BRACKET, 1e-10, PhaseGrid::Modes).unwrap();
        let lo = classify_phase(&build_blocks(&base.with_h(ep.bracket.0))).unwrap().label;
        let hi = classify_phase(&build_blocks(&base.with_h(ep.bracket.1))).unwrap().label;
        assert_ne!(lo, hi);
    }

    #[test]
    fn coordination_resolution() {
        assert_eq!(Coordination::Fixed(4).resolve(1024), 4);
        assert_eq!(Coordination::HalfChain.resolve(1024), 512);
    }

    #[test]
    fn default_grids() {
        let g = TimeGrids::default();
        assert_eq!(g.transient.len(), 60);
        assert_eq!(window_of(&g.transient).unwrap(), (0.1, 0.5));
        assert_eq!(window_of(&g.long_time).unwrap(), (200.0, 1000.0));
    }
}
