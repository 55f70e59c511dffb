//! Dense reference implementation on the full `2^N` spin Hilbert space.
//!
//! Basis convention: site 0 is the most significant bit of the basis index and
//! a zero bit is spin up (`sigma^z = +1`), so index 0 is the all-up state.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mat2::C64;
use crate::model::{AnisotropyMode, ModelParams, ThetaKind};
use crate::momentum::{build_blocks, classify_phase};

/// Largest chain the dense oracle accepts.
pub const MAX_DENSE_SITES: usize = 12;

/// Sign of the hopping/pairing part relative to the field term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExchangeSign {
    /// Exchange terms negated; the Jordan-Wigner image is the momentum block
    /// with diagonal `h + J^R` for every coordination number.
    #[default]
    Negated,
    /// Exchange terms with a plus sign; maps to diagonal `h - J^R`, which
    /// coincides with the momentum block only for nearest neighbours.
    Literal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseOperator {
    pub n: usize,
    pub entries: DMatrix<C64>,
}

impl DenseOperator {
    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    /// `prod_j sigma^z_j` as a diagonal of +-1.
    pub fn parity_diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(parity_of).collect()
    }
}

fn parity_of(s: usize) -> f64 {
    if s.count_ones().is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

fn check_size(n: usize) -> Result<()> {
    if n > MAX_DENSE_SITES {
        return Err(Error::SizeGuard {
            n,
            max: MAX_DENSE_SITES,
        });
    }
    Ok(())
}

/// Periodic chain of Pauli strings
/// `J_r [c_x X_j Z..Z X_{j+r} + c_y Y_j Z..Z Y_{j+r}] + (h/2) Z_j`
/// with `c_x, c_y = (1 +- i gamma)/4`, or `(1 +- gamma)/4` in the Hermitian mode.
pub fn build_spin_hamiltonian(params: &ModelParams, sign: ExchangeSign) -> Result<DenseOperator> {
    params.validate()?;
    let n = params.n;
    check_size(n)?;
    let dim = 1usize << n;
    let bit = |site: usize| 1usize << (n - 1 - site);
    let (cx, cy) = match params.anisotropy {
        AnisotropyMode::NonHermitian => (
            C64::new(0.25, 0.25 * params.gamma),
            C64::new(0.25, -0.25 * params.gamma),
        ),
        AnisotropyMode::Hermitian => (
            C64::new(0.25 * (1.0 + params.gamma), 0.0),
            C64::new(0.25 * (1.0 - params.gamma), 0.0),
        ),
    };
    let sign = match sign {
        ExchangeSign::Negated => -1.0,
        ExchangeSign::Literal => 1.0,
    };
    // Y_j Y_e picks up i*i = -1 on equal spins and i*(-i) = 1 on opposite ones.
    let aligned = cx - cy;
    let opposite = cx + cy;
    let weights = params.coupling_profile().weights;

    let mut h = DMatrix::<C64>::zeros(dim, dim);
    for s in 0..dim {
        let field: f64 = (0..n).map(|j| if s & bit(j) == 0 { 1.0 } else { -1.0 }).sum();
        h[(s, s)] += C64::from(0.5 * params.h * field);
        for j in 0..n {
            for (ri, &w) in weights.iter().enumerate() {
                let r = ri + 1;
                let e = (j + r) % n;
                let string_mask = (j + 1..j + r).fold(0, |m, k| m | bit(k % n));
                let string = if (s & string_mask).count_ones() % 2 == 0 {
                    1.0
                } else {
                    -1.0
                };
                let same = ((s & bit(j)) == 0) == ((s & bit(e)) == 0);
                let amp = if same { aligned } else { opposite };
                let target = s ^ bit(j) ^ bit(e);
                h[(target, s)] += amp * (sign * w * string);
            }
        }
    }
    Ok(DenseOperator { n, entries: h })
}

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371920351148152;

fn one_norm(a: &DMatrix<C64>) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Matrix exponential by degree-13 Pade approximation with scaling and squaring.
pub fn expm(a: &DMatrix<C64>) -> Result<DMatrix<C64>> {
    let dim = a.nrows();
    let norm = one_norm(a);
    if !norm.is_finite() {
        return Err(Error::Numerical("non-finite matrix in expm".into()));
    }
    let squarings = if norm > THETA13 {
        (norm / THETA13).log2().ceil() as i32
    } else {
        0
    };
    let a = a * C64::from(0.5f64.powi(squarings));
    let b = |k: usize| C64::from(PADE13[k]);
    let id = DMatrix::<C64>::identity(dim, dim);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let u_inner = &a6 * (&a6 * b(13) + &a4 * b(11) + &a2 * b(9)) + &a6 * b(7) + &a4 * b(5) + &a2 * b(3) + &id * b(1);
    let u = &a * u_inner;
    let v = &a6 * (&a6 * b(12) + &a4 * b(10) + &a2 * b(8)) + &a6 * b(6) + &a4 * b(4) + &a2 * b(2) + &id * b(0);
    let mut x = (&v - &u)
        .lu()
        .solve(&(&v + &u))
        .ok_or_else(|| Error::Numerical("singular Pade denominator".into()))?;
    for _ in 0..squarings {
        x = &x * &x;
    }
    Ok(x)
}

/// Matrix exponential through a complex Schur decomposition and the
/// eigenvectors of the triangular factor. Fails when the eigenvector basis is
/// numerically singular.
pub fn expm_eigen(a: &DMatrix<C64>) -> Result<DMatrix<C64>> {
    let dim = a.nrows();
    let (q, t) = a.clone().schur().unpack();
    let scale = one_norm(&t).max(f64::MIN_POSITIVE);
    let small = scale * f64::EPSILON;
    let mut x = DMatrix::<C64>::zeros(dim, dim);
    for k in 0..dim {
        x[(k, k)] = C64::from(1.0);
        for i in (0..k).rev() {
            let mut acc = C64::from(0.0);
            for j in i + 1..=k {
                acc += t[(i, j)] * x[(j, k)];
            }
            let mut pivot = t[(i, i)] - t[(k, k)];
            if pivot.norm() < small {
                pivot = C64::from(small);
            }
            x[(i, k)] = -acc / pivot;
        }
        let norm = x.column(k).norm();
        x.column_mut(k).unscale_mut(norm);
    }
    let vecs = &q * &x;
    let mut scaled = vecs.clone();
    for k in 0..dim {
        let e = t[(k, k)].exp();
        for i in 0..dim {
            scaled[(i, k)] *= e;
        }
    }
    let vt = vecs.transpose();
    let lu = vt.lu();
    if !lu.is_invertible() {
        return Err(Error::Numerical("defective eigenbasis".into()));
    }
    // exp(A) = V D V^{-1}  <=>  exp(A)^T = V^{-T} (V D)^T.
    let out_t = lu
        .solve(&scaled.transpose())
        .ok_or_else(|| Error::Numerical("defective eigenbasis".into()))?;
    let out = out_t.transpose();
    if out.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Numerical("ill-conditioned eigenbasis".into()));
    }
    Ok(out)
}

/// `exp(-i H t)|up...up>` normalized, together with its unnormalized norm.
pub fn dense_evolve(h: &DenseOperator, t: f64) -> Result<(Vec<C64>, f64)> {
    if !(t >= 0.0) {
        return Err(Error::domain(format!("time must be >= 0, got {t}")));
    }
    let u = expm(&(&h.entries * C64::new(0.0, -t)))?;
    let col: Vec<C64> = u.column(0).iter().copied().collect();
    let norm = col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::Underflow(norm));
    }
    Ok((col.into_iter().map(|z| z / norm).collect(), norm))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DenseQfi {
    pub value: f64,
    pub fd_step: f64,
    /// The stencil crossed a broken/unbroken boundary.
    pub straddles: bool,
}

pub fn default_dense_step(theta: f64) -> f64 {
    1e-5 * theta.abs().max(1.0)
}

/// QFI of the dense evolved state by central differences in `theta`
/// (steps `s` and `s/2`, one Richardson refinement). The global phase of every
/// stencil state is fixed by making the base state's largest amplitude real.
pub fn dense_evolve_qfi(
    params: &ModelParams,
    t: f64,
    theta: ThetaKind,
    fd_step: f64,
    sign: ExchangeSign,
) -> Result<DenseQfi> {
    if !(fd_step > 0.0) {
        return Err(Error::domain(format!("fd_step must be > 0, got {fd_step}")));
    }
    let state = |delta: f64| -> Result<Vec<C64>> {
        let h = build_spin_hamiltonian(&params.shifted(theta, delta), sign)?;
        Ok(dense_evolve(&h, t)?.0)
    };
    let base = state(0.0)?;
    let pin = base
        .iter()
        .enumerate()
        .max_by(|x, y| x.1.norm().total_cmp(&y.1.norm()))
        .map(|(k, _)| k)
        .expect("nonempty state");
    let fixed = |v: Vec<C64>| -> Vec<C64> {
        let ph = v[pin].norm() / v[pin];
        v.into_iter().map(|z| z * ph).collect()
    };
    let base = fixed(base);
    let diff = |s: f64| -> Result<Vec<C64>> {
        let plus = fixed(state(s)?);
        let minus = fixed(state(-s)?);
        Ok(plus.iter().zip(&minus).map(|(p, m)| (p - m) / (2.0 * s)).collect())
    };
    let coarse = diff(fd_step)?;
    let fine = diff(0.5 * fd_step)?;
    let d: Vec<C64> = fine.iter().zip(&coarse).map(|(f, c)| (4.0 * f - c) / 3.0).collect();
    let dd: f64 = d.iter().map(|z| z.norm_sqr()).sum();
    let overlap: C64 = base.iter().zip(&d).map(|(p, q)| p.conj() * q).sum();
    let value = (4.0 * (dd - overlap.norm_sqr())).max(0.0);

    let phase_at = |delta: f64| classify_phase(&build_blocks(&params.shifted(theta, delta))).map(|c| c.label);
    let straddles = phase_at(-fd_step)? != phase_at(fd_step)?;
    Ok(DenseQfi {
        value,
        fd_step,
        straddles,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelParams;

    fn params(n: usize, z: usize, gamma: f64, h: f64) -> ModelParams {
        ModelParams::new(n, z, 1.5, gamma, h).unwrap()
    }

    #[test]
    fn all_up_diagonal_element() {
        let h = build_spin_hamiltonian(&params(4, 1, 0.3, -0.7), ExchangeSign::Negated).unwrap();
        assert!((h.entries[(0, 0)] - C64::from(2.0 * -0.7)).norm() < 1e-14);
    }

    #[test]
    fn hermitian_when_gamma_vanishes() {
        for sign in [ExchangeSign::Negated, ExchangeSign::Literal] {
            let h = build_spin_hamiltonian(&params(6, 2, 0.0, -0.7), sign).unwrap();
            assert!((&h.entries - h.entries.adjoint()).camax() < 1e-14);
            let herm = build_spin_hamiltonian(
                &params(6, 3, 0.4, -0.7).with_anisotropy(AnisotropyMode::Hermitian),
                sign,
            )
            .unwrap();
            assert!((&herm.entries - herm.entries.adjoint()).camax() < 1e-14);
        }
    }

    #[test]
    fn commutes_with_parity() {
        let h = build_spin_hamiltonian(&params(6, 3, 0.3, -0.7), ExchangeSign::Negated).unwrap();
        let p = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            h.dim(),
            h.parity_diagonal().into_iter().map(C64::from),
        ));
        let comm = &h.entries * &p - &p * &h.entries;
        assert!(comm.camax() < 1e-12);
    }

    #[test]
    fn size_guard() {
        let p = ModelParams::new(14, 1, 1.0, 0.3, -0.7).unwrap();
        assert!(matches!(
            build_spin_hamiltonian(&p, ExchangeSign::Negated),
            Err(Error::SizeGuard { n: 14, max: 12 })
        ));
    }

    #[test]
    fn expm_of_diagonal_and_nilpotent() {
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            C64::new(1.0, 0.5),
            C64::new(-20.0, 0.0),
        ]));
        let e = expm(&d).unwrap();
        assert!((e[(0, 0)] - C64::new(1.0, 0.5).exp()).norm() < 1e-13);
        assert!((e[(1, 1)] - (-20f64).exp()).norm() < 1e-20);
        let mut n = DMatrix::<C64>::zeros(2, 2);
        n[(0, 1)] = C64::from(3.0);
        let e = expm(&n).unwrap();
        assert!((e[(0, 1)] - C64::from(3.0)).norm() < 1e-14);
        assert!((e[(0, 0)] - C64::from(1.0)).norm() < 1e-14);
    }

    #[test]
    fn pade_and_eigen_exponentials_agree() {
        let h = build_spin_hamiltonian(&params(6, 2, 0.3, -0.7), ExchangeSign::Negated).unwrap();
        let a = &h.entries * C64::new(0.0, -1.3);
        let p = expm(&a).unwrap();
        let e = expm_eigen(&a).unwrap();
        assert!((&p - &e).camax() / p.camax() < 1e-9);
    }

    #[test]
    fn zero_time_qfi_vanishes() {
        let q = dense_evolve_qfi(
            &params(4, 1, 0.3, -0.7),
            0.0,
            ThetaKind::Field,
            1e-5,
            ExchangeSign::Negated,
        )
        .unwrap();
        assert!(q.value.abs() < 1e-12);
    }

    #[test]
    fn evolution_keeps_even_parity() {
        let h = build_spin_hamiltonian(&params(6, 2, 0.3, -0.7), ExchangeSign::Negated).unwrap();
        for t in [0.5, 1.0, 2.0] {
            let (psi, _) = dense_evolve(&h, t).unwrap();
            let odd: f64 = psi
                .iter()
                .enumerate()
                .filter(|(s, _)| parity_of(*s) < 0.0)
                .map(|(_, z)| z.norm())
                .fold(0.0, f64::max);
            assert!(odd < 1e-12);
        }
    }

    #[test]
    fn hermitian_evolution_preserves_norm() {
        let p = params(6, 2, 0.3, -0.7).with_anisotropy(AnisotropyMode::Hermitian);
        let h = build_spin_hamiltonian(&p, ExchangeSign::Negated).unwrap();
        let (_, norm) = dense_evolve(&h, 2.0).unwrap();
        assert!((norm - 1.0).abs() < 1e-10);
    }
}
