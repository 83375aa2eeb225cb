//! Holomorphic parts of bidifferentials built from theta functions.
//!
//! A bidifferential with biresidue 1 is written `Omega + sum_ij C_ij
//! omega_i (x) omega_j`, where `Omega` is the canonical bidifferential of the
//! marking. `Omega` is carried symbolically here; only the symmetric matrix
//! `C` is computed.
//!
//! For `g >= 2` the formulas below only need `tau`, so they are evaluated for
//! any point of the Siegel space. They describe a curve's bidifferentials only
//! when `tau` is the period matrix of that curve.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::siegel::{Characteristic, Parity, PeriodMatrix};
use crate::sot::{sot_jet0, SecondOrderIndex, SotJet0};
use crate::theta::{
    c_zeta, check_len, s_zeta_jet, theta_char_jet, theta_jet, theta_jet_planned, Precision,
};

/// Coefficients of the pullback of a section `f` of the level-two bundle:
/// `f(0) Omega + 1/2 sum_ij f_ij(0) omega_i (x) omega_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct PullbackCoefficients {
    pub omega_coeff: Complex64,
    pub holo_matrix: DMatrix<Complex64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CorrectionKind {
    Sigma,
    Eta,
    Difference,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrectionMatrix {
    pub entries: DMatrix<Complex64>,
    pub kind: CorrectionKind,
}

impl CorrectionMatrix {
    pub fn max_norm(&self) -> f64 {
        self.entries.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// A section of the level-two bundle.
#[derive(Debug, Clone, PartialEq)]
pub enum Section {
    /// Coefficients over the `theta_u` basis, in [`SecondOrderIndex::all`] order.
    Basis(Vec<Complex64>),
    /// `s_w(z) = theta(z - w) theta(z + w)`.
    Point(Vec<Complex64>),
}

/// `f(0)` and `f_ij(0)` for `f = s_w`:
/// `f(0) = theta(w)^2`, `f_ij(0) = 2 theta(w) theta_ij(w) - 2 theta_i(w) theta_j(w)`.
pub fn s_w_jet0(
    w: &[Complex64],
    tau: &PeriodMatrix,
    prec: &Precision,
) -> Result<(Complex64, DMatrix<Complex64>)> {
    let jet = theta_jet(w, tau, prec)?;
    let g = tau.g();
    let t = jet.value;
    let fij = DMatrix::from_fn(g, g, |i, j| {
        2.0 * t * jet.hessian[(i, j)] - 2.0 * jet.gradient[i] * jet.gradient[j]
    });
    Ok((t * t, fij))
}

/// `theta_u` data at the origin for every `u`, in lexicographic order.
pub fn sot_jets0(tau: &PeriodMatrix, prec: &Precision) -> Result<Vec<SotJet0>> {
    SecondOrderIndex::all(tau.g())
        .par_iter()
        .map(|u| sot_jet0(u, tau, prec))
        .collect::<Vec<_>>()
        .into_iter()
        .collect()
}

pub fn pullback_coefficients(
    f: &Section,
    tau: &PeriodMatrix,
    prec: &Precision,
) -> Result<PullbackCoefficients> {
    let g = tau.g();
    match f {
        Section::Point(w) => {
            check_len(tau, w.len())?;
            let (f0, fij) = s_w_jet0(w, tau, prec)?;
            Ok(PullbackCoefficients { omega_coeff: f0, holo_matrix: fij * Complex64::new(0.5, 0.0) })
        }
        Section::Basis(coeffs) => {
            if coeffs.len() != 1 << g {
                return Err(Error::DimensionMismatch { expected: 1 << g, found: coeffs.len() });
            }
            let jets = sot_jets0(tau, prec)?;
            Ok(pullback_from_jets(coeffs, &jets))
        }
    }
}

fn pullback_from_jets(coeffs: &[Complex64], jets: &[SotJet0]) -> PullbackCoefficients {
    let g = jets[0].hessian0.nrows();
    let mut f0 = Complex64::new(0.0, 0.0);
    let mut hess = DMatrix::zeros(g, g);
    for (c, j) in coeffs.iter().zip(jets) {
        f0 += c * j.value0;
        hess += &j.hessian0 * *c;
    }
    PullbackCoefficients { omega_coeff: f0, holo_matrix: hess * Complex64::new(0.5, 0.0) }
}

/// Coefficients of `omega_zeta = sum_i d theta[zeta] / dz_i (0) omega_i`.
///
/// Requires `zeta = tau a + b` to lie on the theta divisor numerically:
/// `|theta(zeta)| < 1e-6` relative to the series envelope at `zeta`.
pub fn omega_zeta_coeffs(
    c: &Characteristic,
    tau: &PeriodMatrix,
    prec: &Precision,
) -> Result<DVector<Complex64>> {
    check_len(tau, c.g())?;
    let zeta: Vec<Complex64> = c.point(tau).iter().cloned().collect();
    let (at_zeta, plan) = theta_jet_planned(&zeta, tau, prec)?;
    let residual = at_zeta.value.norm() / plan.envelope();
    if residual >= 1e-6 {
        return Err(Error::NotOnThetaDivisor { residual });
    }
    let zero = vec![Complex64::new(0.0, 0.0); tau.g()];
    Ok(theta_char_jet(c, &zero, tau, prec)?.gradient)
}

/// Holomorphic part of the theta-function bidifferential:
/// `S_ij = sum_u conj(theta_u(0)) d^2 theta_u / dz_i dz_j (0) / (2 sum_u |theta_u(0)|^2)`.
pub fn sigma_correction(tau: &PeriodMatrix, prec: &Precision) -> Result<CorrectionMatrix> {
    let jets = sot_jets0(tau, prec)?;
    let g = tau.g();
    let w: f64 = jets.iter().map(|j| j.value0.norm_sqr()).sum();
    if !(w >= 1e-300) {
        return Err(Error::DenominatorUnderflow { value: w });
    }
    let mut acc = DMatrix::zeros(g, g);
    for j in &jets {
        acc += &j.hessian0 * j.value0.conj();
    }
    let mut entries = acc / Complex64::new(2.0 * w, 0.0);
    symmetrize(&mut entries);
    Ok(CorrectionMatrix { entries, kind: CorrectionKind::Sigma })
}

/// Holomorphic part of the Hodge-theoretic bidifferential: `-pi (Im tau)^{-1}`.
pub fn eta_correction(tau: &PeriodMatrix) -> CorrectionMatrix {
    let inv = tau.im_inverse().matrix();
    CorrectionMatrix {
        entries: inv.map(|x| Complex64::new(-PI * x, 0.0)),
        kind: CorrectionKind::Eta,
    }
}

pub fn difference_correction(tau: &PeriodMatrix, prec: &Precision) -> Result<CorrectionMatrix> {
    let s = sigma_correction(tau, prec)?;
    let e = eta_correction(tau);
    Ok(CorrectionMatrix { entries: s.entries - e.entries, kind: CorrectionKind::Difference })
}

/// Max-norm of `sigma - eta`; zero exactly on the coincidence locus.
pub fn coincidence_residual(tau: &PeriodMatrix, prec: &Precision) -> Result<f64> {
    Ok(difference_correction(tau, prec)?.max_norm())
}

fn symmetrize(m: &mut DMatrix<Complex64>) {
    let g = m.nrows();
    for i in 0..g {
        for j in (i + 1)..g {
            let avg = (m[(i, j)] + m[(j, i)]) * 0.5;
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
}

/// Rows `u`: `(theta_u(0), {d^2 theta_u / dz_i dz_j (0)}_{i <= j})`.
pub fn v00_matrix(tau: &PeriodMatrix, prec: &Precision) -> Result<DMatrix<Complex64>> {
    let jets = sot_jets0(tau, prec)?;
    Ok(v00_matrix_from_jets(&jets))
}

fn v00_matrix_from_jets(jets: &[SotJet0]) -> DMatrix<Complex64> {
    let g = jets[0].hessian0.nrows();
    let cols = 1 + g * (g + 1) / 2;
    DMatrix::from_fn(jets.len(), cols, |r, c| {
        if c == 0 {
            return jets[r].value0;
        }
        let mut k = 1;
        for i in 0..g {
            for j in i..g {
                if k == c {
                    return jets[r].hessian0[(i, j)];
                }
                k += 1;
            }
        }
        unreachable!()
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct V00Report {
    pub dimension: usize,
    pub rank: usize,
    pub singular_values: Vec<f64>,
    /// Coefficient vectors over the `theta_u` basis spanning the kernel.
    #[serde(skip)]
    pub kernel: Vec<DVector<Complex64>>,
}

/// Kernel of `f -> (f(0), Hess f(0))` on the `theta_u` basis.
///
/// Rank counts singular values above `rank_tol` times the largest. Period
/// matrices close to the boundary of the Siegel space can show spurious rank
/// drops; these are reported as computed.
pub fn v00_kernel(tau: &PeriodMatrix, prec: &Precision, rank_tol: f64) -> Result<V00Report> {
    let m = v00_matrix(tau, prec)?;
    let n = m.nrows();
    // Kernel of M^T, taken from the SVD of M^T padded with zero rows to n x n.
    // 1 + g(g+1)/2 <= 2^g for every g >= 1.
    let mut padded = DMatrix::zeros(n, n);
    padded.rows_mut(0, m.ncols()).copy_from(&m.transpose());
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let largest = svd.singular_values[order[0]];
    let rank = order
        .iter()
        .filter(|&&k| svd.singular_values[k] > rank_tol * largest)
        .count();
    let singular_values: Vec<f64> = order
        .iter()
        .take(m.ncols())
        .map(|&k| svd.singular_values[k])
        .collect();
    let kernel = order[rank..]
        .iter()
        .map(|&k| DVector::from_fn(n, |i, _| v_t[(k, i)].conj()))
        .collect();
    Ok(V00Report { dimension: n - rank, rank, singular_values, kernel })
}

pub fn v00_kernel_dimension(tau: &PeriodMatrix, prec: &Precision, rank_tol: f64) -> Result<usize> {
    Ok(v00_kernel(tau, prec, rank_tol)?.dimension)
}

/// Relative error of `2 theta[zeta]_i(0) theta[zeta]_j(0) = c(zeta) (s_zeta)_ij(0)`.
pub fn gunning_residual(c: &Characteristic, tau: &PeriodMatrix, prec: &Precision) -> Result<f64> {
    check_len(tau, c.g())?;
    let g = tau.g();
    let zero = vec![Complex64::new(0.0, 0.0); g];
    let grad = theta_char_jet(c, &zero, tau, prec)?.gradient;
    let s = s_zeta_jet(c, &zero, tau, prec)?;
    let cz = c_zeta(c, tau)?;
    let mut err: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for i in 0..g {
        for j in 0..g {
            let lhs = 2.0 * grad[i] * grad[j];
            let rhs = cz * s.hessian[(i, j)];
            err = err.max((lhs - rhs).norm());
            scale = scale.max(lhs.norm()).max(rhs.norm());
        }
    }
    Ok(if scale > 0.0 { err / scale } else { err })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GunningRow {
    pub characteristic: Characteristic,
    pub parity: Parity,
    pub residual: f64,
}

/// Gunning residuals for every odd half-integer characteristic.
pub fn gunning_table(tau: &PeriodMatrix, prec: &Precision) -> Result<Vec<GunningRow>> {
    Characteristic::odd_half_integer(tau.g())
        .into_iter()
        .map(|c| {
            let residual = gunning_residual(&c, tau, prec)?;
            Ok(GunningRow { characteristic: c, parity: Parity::Odd, residual })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn tau2() -> PeriodMatrix {
        PeriodMatrix::new(DMatrix::from_row_slice(
            2,
            2,
            &[c(0.12, 1.1), c(-0.2, 0.3), c(-0.2, 0.3), c(0.35, 0.9)],
        ))
        .unwrap()
    }

    #[test]
    fn eta_examples() {
        let e = eta_correction(&PeriodMatrix::genus_one(c(0.0, 1.0)).unwrap());
        assert!((e.entries[(0, 0)] - c(-PI, 0.0)).norm() < 1e-15);
        let e2 = eta_correction(&PeriodMatrix::genus_one(c(0.77, 1.0)).unwrap());
        assert_eq!(e.entries, e2.entries);
        let d = PeriodMatrix::new(DMatrix::from_diagonal(&DVector::from_vec(vec![c(0.0, 1.0), c(0.0, 2.0)]))).unwrap();
        let e = eta_correction(&d);
        assert!((e.entries[(0, 0)] + PI).norm() < 1e-15);
        assert!((e.entries[(1, 1)] + PI / 2.0).norm() < 1e-15);
        assert_eq!(e.entries[(0, 1)], c(0.0, 0.0));
    }

    #[test]
    fn eta_negative_definite() {
        let e = eta_correction(&tau2());
        let re = e.entries.map(|x| x.re);
        assert!(re.symmetric_eigen().eigenvalues.iter().all(|&l| l < 0.0));
        assert!(e.entries.iter().all(|x| x.im == 0.0));
    }

    #[test]
    fn sigma_special_values() {
        let p = Precision::default();
        let s = sigma_correction(&PeriodMatrix::genus_one(c(0.0, 1.0)).unwrap(), &p).unwrap();
        assert!((s.entries[(0, 0)] + PI).norm() < 1e-8);
        let rho = c(0.5, 3f64.sqrt() / 2.0);
        let s = sigma_correction(&PeriodMatrix::genus_one(rho).unwrap(), &p).unwrap();
        assert!((s.entries[(0, 0)] + PI / rho.im).norm() < 1e-8);
    }

    #[test]
    fn residual_examples() {
        let p = Precision::default();
        let r = |t: Complex64| coincidence_residual(&PeriodMatrix::genus_one(t).unwrap(), &p).unwrap();
        assert!(r(c(0.0, 1.0)) < 1e-8);
        assert!(r(c(0.5, 3f64.sqrt() / 2.0)) < 1e-8);
        assert!(r(c(0.3, 1.1)) > 1e-3);
    }

    #[test]
    fn s_w_jet0_examples() {
        let p = Precision::default();
        let tau = tau2();
        let odd = Characteristic::half_integer(&[1, 1], &[1, 0]).unwrap();
        let zeta: Vec<Complex64> = odd.point(&tau).iter().cloned().collect();
        let (f0, _) = s_w_jet0(&zeta, &tau, &p).unwrap();
        assert!(f0.norm() < 1e-20);

        let zero = [c(0.0, 0.0); 2];
        let (f0, fij) = s_w_jet0(&zero, &tau, &p).unwrap();
        let th = theta_jet(&zero, &tau, &p).unwrap();
        assert!((f0 - th.value * th.value).norm() < 1e-14);
        for i in 0..2 {
            for j in 0..2 {
                assert!((fij[(i, j)] - 2.0 * th.value * th.hessian[(i, j)]).norm() < 1e-10);
            }
        }

        // second code path: Leibniz product of two theta jets at z = 0
        let w = [c(0.13, 0.05), c(-0.21, 0.11)];
        let (f0, fij) = s_w_jet0(&w, &tau, &p).unwrap();
        let s = crate::theta::s_point_jet(&w, &zero, &tau, &p).unwrap();
        assert!((f0 - s.value).norm() < 1e-11 * f0.norm());
        let scale = fij.iter().map(|x| x.norm()).fold(0.0, f64::max);
        assert!((fij - s.hessian).iter().all(|x| x.norm() < 1e-11 * scale));
    }

    #[test]
    fn pullback_of_odd_s_zeta() {
        let p = Precision::default();
        let tau = tau2();
        for ch in Characteristic::odd_half_integer(2) {
            let zeta: Vec<Complex64> = ch.point(&tau).iter().cloned().collect();
            let pb = pullback_coefficients(&Section::Point(zeta), &tau, &p).unwrap();
            let om = omega_zeta_coeffs(&ch, &tau, &p).unwrap();
            assert!(om.iter().any(|x| x.norm() > 1e-3));
            let cz = c_zeta(&ch, &tau).unwrap();
            let scale = pb.holo_matrix.iter().map(|x| x.norm()).fold(0.0, f64::max);
            assert!(pb.omega_coeff.norm() < 1e-12 * scale.max(1.0));
            for i in 0..2 {
                for j in 0..2 {
                    let expect = om[i] * om[j] / cz;
                    assert!((pb.holo_matrix[(i, j)] - expect).norm() < 1e-9 * scale);
                }
            }
        }
    }

    #[test]
    fn point_section_matches_basis_expansion() {
        // s_w(z) = sum_u theta_u(z) theta_u(w)
        let p = Precision::default();
        let tau = tau2();
        let w = vec![c(0.3, -0.1), c(0.05, 0.2)];
        let coeffs: Vec<Complex64> = SecondOrderIndex::all(2)
            .iter()
            .map(|u| crate::sot::sot_value(u, &w, &tau, &p).unwrap())
            .collect();
        let a = pullback_coefficients(&Section::Point(w), &tau, &p).unwrap();
        let b = pullback_coefficients(&Section::Basis(coeffs), &tau, &p).unwrap();
        assert!((a.omega_coeff - b.omega_coeff).norm() < 1e-11 * a.omega_coeff.norm());
        let scale = a.holo_matrix.iter().map(|x| x.norm()).fold(0.0, f64::max);
        assert!((a.holo_matrix - b.holo_matrix).iter().all(|x| x.norm() < 1e-10 * scale));
    }

    #[test]
    fn not_on_theta_divisor() {
        let p = Precision::default();
        let tau = PeriodMatrix::genus_one(c(0.0, 1.0)).unwrap();
        let ch = Characteristic::real(vec![0.0], vec![0.1]).unwrap();
        assert_eq!(omega_zeta_coeffs(&ch, &tau, &p).unwrap_err().name(), "NotOnThetaDivisor");
    }

    #[test]
    fn v00_dimensions() {
        let p = Precision::default();
        assert_eq!(v00_kernel_dimension(&PeriodMatrix::genus_one(c(0.0, 1.0)).unwrap(), &p, 1e-8).unwrap(), 0);
        assert_eq!(v00_kernel_dimension(&tau2(), &p, 1e-8).unwrap(), 0);
    }

    #[test]
    fn v00_kernel_is_pullback_kernel() {
        let p = Precision::default();
        let tau = PeriodMatrix::new(DMatrix::from_row_slice(
            3,
            3,
            &[
                c(0.1, 1.2), c(0.2, 0.3), c(-0.1, 0.1),
                c(0.2, 0.3), c(0.0, 1.0), c(0.05, -0.2),
                c(-0.1, 0.1), c(0.05, -0.2), c(0.3, 1.1),
            ],
        ))
        .unwrap();
        let rep = v00_kernel(&tau, &p, 1e-8).unwrap();
        assert_eq!(rep.dimension, 1);
        assert_eq!(rep.kernel.len(), 1);
        let k: Vec<Complex64> = rep.kernel[0].iter().cloned().collect();
        let pb = pullback_coefficients(&Section::Basis(k), &tau, &p).unwrap();
        assert!(pb.omega_coeff.norm() < 1e-9);
        assert!(pb.holo_matrix.iter().all(|x| x.norm() < 1e-8));
    }

    #[test]
    fn pullback_is_linear() {
        let p = Precision::default();
        let tau = tau2();
        let f: Vec<Complex64> = vec![c(1.0, 0.2), c(-0.3, 0.5), c(0.7, 0.0), c(0.1, -0.4)];
        let h: Vec<Complex64> = vec![c(0.0, 1.0), c(0.4, 0.4), c(-1.2, 0.3), c(0.9, 0.1)];
        let (alpha, beta) = (c(0.3, -1.1), c(2.0, 0.5));
        let mix: Vec<Complex64> = f.iter().zip(&h).map(|(a, b)| alpha * a + beta * b).collect();
        let pf = pullback_coefficients(&Section::Basis(f), &tau, &p).unwrap();
        let ph = pullback_coefficients(&Section::Basis(h), &tau, &p).unwrap();
        let pm = pullback_coefficients(&Section::Basis(mix), &tau, &p).unwrap();
        assert!((pm.omega_coeff - alpha * pf.omega_coeff - beta * ph.omega_coeff).norm() < 1e-12);
        let d = pm.holo_matrix - pf.holo_matrix * alpha - ph.holo_matrix * beta;
        assert!(d.iter().all(|x| x.norm() < 1e-10));
    }
}
