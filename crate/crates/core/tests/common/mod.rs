#![allow(dead_code)]

use std::f64::consts::PI;

use ixy_core::dynamics::{block_trajectory, evolve_mode_derivative, propagator};
use ixy_core::mat2::{inner, norm_sqr, Mat2, Vec2, C64, ONE, ZERO};
use ixy_core::metrology::DynamicalSensor;
use ixy_core::model::{critical_field_pi, critical_field_pi_alternating, mode_angles};
use ixy_core::*;

pub type Check = std::result::Result<(), String>;

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

fn vec_dist(u: &Vec2, v: &Vec2) -> f64 {
    ((u[0] - v[0]).norm_sqr() + (u[1] - v[1]).norm_sqr()).sqrt()
}

/// Analytic `d phi / d theta` against a central difference of the
/// unnormalized amplitudes with step `1e-6`.
pub fn analytic_matches_fd(params: &ModelParams, p: usize, t: f64, theta: ThetaKind) -> Check {
    let step = 1e-6;
    let an = evolve_mode_derivative(params, p, t, theta).map_err(|e| e.to_string())?;
    let at = |d: f64| {
        evolve_mode_derivative(&params.shifted(theta, d), p, t, theta)
            .map(|tr| tr.state.vector())
            .map_err(|e| e.to_string())
    };
    let plus = at(step)?;
    let minus = at(-step)?;
    let fd = [(plus[0] - minus[0]) / (2.0 * step), (plus[1] - minus[1]) / (2.0 * step)];
    let scale = norm_sqr(&an.dstate).sqrt().max(norm_sqr(&an.state.vector()).sqrt());
    let err = vec_dist(&fd, &an.dstate) / scale;
    if err < 1e-6 {
        Ok(())
    } else {
        Err(format!(
            "derivative mismatch {err:e} for {params:?} p={p} t={t} {theta:?}"
        ))
    }
}

fn mat_dist(a: &Mat2, b: &Mat2) -> f64 {
    (*a - *b).max_abs()
}

pub fn semigroup(block: &ModeBlock, t1: f64, t2: f64) -> Check {
    let u1 = propagator(block, t1).map_err(|e| e.to_string())?;
    let u2 = propagator(block, t2).map_err(|e| e.to_string())?;
    let u12 = propagator(block, t1 + t2).map_err(|e| e.to_string())?;
    let err = mat_dist(&(u1 * u2), &u12) / u12.max_abs().max(1.0);
    if err < 1e-10 {
        Ok(())
    } else {
        Err(format!(
            "semigroup error {err:e} for a={} b={} t1={t1} t2={t2}",
            block.a, block.b
        ))
    }
}

/// `det U = 1`, measured relative to the size of the entries being cancelled.
pub fn unit_determinant(block: &ModeBlock, t: f64) -> Check {
    let u = propagator(block, t).map_err(|e| e.to_string())?;
    let scale = u.max_abs().powi(2).max(1.0);
    let err = (u.det() - ONE).norm() / scale;
    if err < 1e-10 {
        Ok(())
    } else {
        Err(format!("det error {err:e} for a={} b={} t={t}", block.a, block.b))
    }
}

pub fn norm_preserved(block: &ModeBlock, t: f64) -> Check {
    let u = propagator(block, t).map_err(|e| e.to_string())?;
    let err = (norm_sqr(&u.col0()) - 1.0).abs();
    if err < 1e-10 {
        Ok(())
    } else {
        Err(format!("norm drift {err:e} for a={} b={} t={t}", block.a, block.b))
    }
}

pub fn gauge_invariant(phi: Vec2, dphi: Vec2, c: C64, c2: C64) -> Check {
    let f0 = mode_qfi(&phi, &dphi).map_err(|e| e.to_string())?;
    let f1 = mode_qfi(
        &[phi[0] * c, phi[1] * c],
        &[dphi[0] * c + phi[0] * c2, dphi[1] * c + phi[1] * c2],
    )
    .map_err(|e| e.to_string())?;
    let err = (f0 - f1).abs() / f0.abs().max(1e-300);
    if err < 1e-10 || (f0 - f1).abs() < 1e-13 {
        Ok(())
    } else {
        Err(format!("gauge dependence {err:e}: {f0} vs {f1}"))
    }
}

/// QFI of the explicit tensor product of all mode states against the sum
/// of per-mode contributions.
pub fn additive(params: &ModelParams, t: f64, theta: ThetaKind) -> Check {
    let angles = mode_angles(params);
    let mut psi = vec![ONE];
    let mut dpsi = vec![ZERO];
    for p in 1..=angles.len() {
        let tr = evolve_mode_derivative(params, p, t, theta).map_err(|e| e.to_string())?;
        let (v, dv) = (tr.state.vector(), tr.dstate);
        let mut next = Vec::with_capacity(psi.len() * 2);
        let mut dnext = Vec::with_capacity(psi.len() * 2);
        for (a, da) in psi.iter().zip(&dpsi) {
            for k in 0..2 {
                next.push(a * v[k]);
                dnext.push(da * v[k] + a * dv[k]);
            }
        }
        psi = next;
        dpsi = dnext;
    }
    let n: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
    let ov: C64 = psi.iter().zip(&dpsi).map(|(a, b)| a.conj() * b).sum();
    let c = ov / n;
    let perp: f64 = psi.iter().zip(&dpsi).map(|(a, b)| (b - a * c).norm_sqr()).sum();
    let direct = 4.0 * perp / n;
    let summed = DynamicalSensor::new(params)
        .and_then(|s| s.qfi(t, theta))
        .map_err(|e| e.to_string())?;
    let err = rel_err(direct, summed);
    if err < 1e-10 || (direct - summed).abs() < 1e-12 {
        Ok(())
    } else {
        Err(format!("additivity error {err:e}: {direct} vs {summed}"))
    }
}

pub fn kac_and_critical_fields(alpha: f64, z: usize) -> Check {
    let profile = coupling_profile(alpha, z).map_err(|e| e.to_string())?;
    let total: f64 = profile.weights.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(format!("Kac weights sum to {total}"));
    }
    let j0 = momentum_coupling(&profile, 0.0);
    if (-j0.re - critical_field_zero()).abs() > 1e-12 || j0.im.abs() > 1e-12 {
        return Err(format!("J(0) = {j0}"));
    }
    let hpi = critical_field_pi(alpha, z).map_err(|e| e.to_string())?;
    let alt = critical_field_pi_alternating(alpha, z).map_err(|e| e.to_string())?;
    let jpi = momentum_coupling(&profile, PI);
    if (hpi - alt).abs() > 1e-12 || (hpi + jpi.re).abs() > 1e-12 {
        return Err(format!(
            "h_c(pi): closed {hpi}, alternating {alt}, -J^R(pi) {}",
            -jpi.re
        ));
    }
    Ok(())
}

/// Lowest field of the broken region, `min_phi [-J^R(phi) - gamma |J^I(phi)|]`,
/// from a uniform scan followed by ternary refinement of each local minimum.
pub fn ep_oracle(alpha: f64, z: usize, gamma: f64) -> f64 {
    let profile = coupling_profile(alpha, z).unwrap();
    let g = |phi: f64| {
        let j = momentum_coupling(&profile, phi);
        -j.re - gamma * j.im.abs()
    };
    let m = 200_000.max(64 * z);
    let xs: Vec<f64> = (0..=m).map(|k| PI * k as f64 / m as f64).collect();
    let ys: Vec<f64> = xs.iter().map(|&x| g(x)).collect();
    let mut best = f64::INFINITY;
    for k in 0..=m {
        let left = if k == 0 { f64::INFINITY } else { ys[k - 1] };
        let right = if k == m { f64::INFINITY } else { ys[k + 1] };
        if ys[k] <= left && ys[k] <= right {
            let (mut lo, mut hi) = (xs[k.saturating_sub(1)], xs[(k + 1).min(m)]);
            for _ in 0..200 {
                let a = lo + (hi - lo) / 3.0;
                let b = hi - (hi - lo) / 3.0;
                if g(a) < g(b) {
                    hi = b;
                } else {
                    lo = a;
                }
            }
            best = best.min(g(0.5 * (lo + hi))).min(ys[k]);
        }
    }
    best
}

/// Hermitian-block QFI from the generator `G = int_0^t U(s)^dag dM U(s) ds`,
/// `F = 4 Var_{(1,0)}(G)`, integrated with composite Simpson.
pub fn generator_qfi(block: &ModeBlock, t: f64, theta: ThetaKind, intervals: usize) -> f64 {
    let dm = block.d_matrix(theta);
    let adjoint = |m: &Mat2| {
        let a = &m.0;
        Mat2([[a[0][0].conj(), a[1][0].conj()], [a[0][1].conj(), a[1][1].conj()]])
    };
    let integrand = |s: f64| {
        let u = propagator(block, s).unwrap();
        adjoint(&u) * dm * u
    };
    let n = intervals + intervals % 2;
    let h = t / n as f64;
    let mut g = integrand(0.0) + integrand(t);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        g = g + integrand(k as f64 * h).scale(w.into());
    }
    let g = g.scale((h / 3.0).into());
    let e0: Vec2 = [ONE, ZERO];
    let ge = g.apply(&e0);
    let mean = inner(&e0, &ge);
    let second = norm_sqr(&ge);
    4.0 * (second - mean.norm_sqr())
}

/// Per-mode dynamical QFI with the analytic derivative.
pub fn block_qfi(block: &ModeBlock, t: f64, theta: ThetaKind) -> f64 {
    let tr = block_trajectory(block, t, theta).unwrap();
    mode_qfi(&tr.state.vector(), &tr.dstate).unwrap()
}
