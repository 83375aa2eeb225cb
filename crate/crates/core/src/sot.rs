//! Second-order theta functions
//! `theta_u(z) = sum_xi exp(2 pi i (xi+u)^T tau (xi+u) + 4 pi i (xi+u)^T z)`
//! for `u` in `{0, 1/2}^g`.
//!
//! These are evaluated as first-order series with characteristic `(u, 0)` at
//! the doubled arguments `(2z, 2 tau)`, so truncation uses the quadratic form
//! `2 Im tau`.
//!
//! `tau`-derivatives use the upper-triangle parametrization of a symmetric
//! `tau`: moving `tau_ij` (`i < j`) moves `tau_ji` with it, which gives the
//! per-term factor `2 pi i (2 - delta_ij) v_i v_j`. With that convention the
//! heat identity reads
//! `d^2 theta_u / dz_i dz_j = 8 pi i / (2 - delta_ij) * d theta_u / d tau_ij`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::siegel::PeriodMatrix;
use crate::theta::{check_len, lattice_jet, plan_for, Precision, ThetaJet};

/// A representative `u` of `(2^{-1} Z / Z)^g`, stored as the bits of `2u`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SecondOrderIndex(Vec<u8>);

impl SecondOrderIndex {
    /// `bits[i]` is `2 u_i`, each 0 or 1.
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if bits.is_empty() || bits.iter().any(|&b| b > 1) {
            return Err(Error::InvalidInput("second-order index entries must be 0 or 1/2".into()));
        }
        Ok(SecondOrderIndex(bits))
    }

    /// The `2^g` indices in lexicographic order.
    pub fn all(g: usize) -> Vec<Self> {
        (0..(1usize << g))
            .map(|mask| SecondOrderIndex((0..g).map(|k| ((mask >> (g - 1 - k)) & 1) as u8).collect()))
            .collect()
    }

    pub fn g(&self) -> usize {
        self.0.len()
    }

    pub fn bits(&self) -> &[u8] {
        &self.0
    }

    pub fn as_vec(&self) -> Vec<f64> {
        self.0.iter().map(|&b| 0.5 * b as f64).collect()
    }
}

impl std::fmt::Display for SecondOrderIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<&str> = self.0.iter().map(|&b| if b == 0 { "0" } else { "1/2" }).collect();
        f.write_str(&parts.join(","))
    }
}

/// Data of `theta_u` at `z = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct SotJet0 {
    pub value0: Complex64,
    pub hessian0: DMatrix<Complex64>,
    pub tau_deriv: DMatrix<Complex64>,
}

fn doubled(tau: &PeriodMatrix) -> Result<PeriodMatrix> {
    tau.scaled(2.0)
}

pub fn sot_value(
    u: &SecondOrderIndex,
    z: &[Complex64],
    tau: &PeriodMatrix,
    prec: &Precision,
) -> Result<Complex64> {
    check_len(tau, z.len())?;
    check_len(tau, u.g())?;
    let tau2 = doubled(tau)?;
    let z2: Vec<Complex64> = z.iter().map(|c| c * 2.0).collect();
    let shift = u.as_vec();
    let plan = plan_for(&tau2, &shift, &z2, prec.eps_value, 0, prec.lattice_cap)?;
    Ok(lattice_jet(&tau2, &shift, &z2, &plan, 0, false).jet.value)
}

/// Value, gradient and Hessian of `theta_u` at `z`.
pub fn sot_jet(
    u: &SecondOrderIndex,
    z: &[Complex64],
    tau: &PeriodMatrix,
    prec: &Precision,
) -> Result<ThetaJet> {
    check_len(tau, z.len())?;
    check_len(tau, u.g())?;
    let tau2 = doubled(tau)?;
    let z2: Vec<Complex64> = z.iter().map(|c| c * 2.0).collect();
    let shift = u.as_vec();
    let p0 = plan_for(&tau2, &shift, &z2, prec.eps_value, 0, prec.lattice_cap)?;
    let p2 = plan_for(&tau2, &shift, &z2, prec.eps_jet / 4.0, 2, prec.lattice_cap)?;
    let plan = if p0.radius > p2.radius { p0 } else { p2 };
    let mut jet = lattice_jet(&tau2, &shift, &z2, &plan, 2, false).jet;
    jet.gradient *= Complex64::new(2.0, 0.0);
    jet.hessian *= Complex64::new(4.0, 0.0);
    Ok(jet)
}

/// `theta_u(0)`, its `z`-Hessian and its `tau`-derivative at the origin,
/// each accumulated termwise from one lattice pass.
pub fn sot_jet0(u: &SecondOrderIndex, tau: &PeriodMatrix, prec: &Precision) -> Result<SotJet0> {
    check_len(tau, u.g())?;
    let g = tau.g();
    let tau2 = doubled(tau)?;
    let z0 = vec![Complex64::new(0.0, 0.0); g];
    let shift = u.as_vec();
    let p0 = plan_for(&tau2, &shift, &z0, prec.eps_value, 0, prec.lattice_cap)?;
    let p2 = plan_for(&tau2, &shift, &z0, prec.eps_jet / 4.0, 2, prec.lattice_cap)?;
    let plan = if p0.radius > p2.radius { p0 } else { p2 };
    let raw = lattice_jet(&tau2, &shift, &z0, &plan, 2, true);
    Ok(SotJet0 {
        value0: raw.jet.value,
        hessian0: raw.jet.hessian * Complex64::new(4.0, 0.0),
        // d/d tau = 2 d/d(2 tau)
        tau_deriv: raw.tau_deriv * Complex64::new(2.0, 0.0),
    })
}

/// `|theta_u(z)|^2 exp(-4 pi (Im z)^T (Im tau)^{-1} (Im z))`, invariant under
/// lattice translations of `z`.
pub fn weighted_modulus(
    u: &SecondOrderIndex,
    z: &[Complex64],
    tau: &PeriodMatrix,
    prec: &Precision,
) -> Result<f64> {
    let v = sot_value(u, z, tau, prec)?;
    let y: Vec<f64> = z.iter().map(|c| c.im).collect();
    Ok(v.norm_sqr() * (-4.0 * PI * tau.im_inverse().quad(&y)).exp())
}

fn require_genus_one(tau: &PeriodMatrix) -> Result<()> {
    if tau.g() != 1 {
        return Err(Error::NotSupported(format!(
            "inner products need quadrature over the torus; only g = 1 is supported (got g = {})",
            tau.g()
        )));
    }
    Ok(())
}

/// Gram matrix of `theta_0, theta_{1/2}` at genus one under the weight
/// `exp(-4 pi (Im z)^2 / Im tau)`, by the `n x n` periodic trapezoid rule over
/// the parallelogram `{s + t tau : s, t in [0, 1)}`.
pub fn gram_matrix_g1(tau: &PeriodMatrix, n: usize, prec: &Precision) -> Result<DMatrix<Complex64>> {
    require_genus_one(tau)?;
    if n == 0 {
        return Err(Error::InvalidInput("quadrature order must be positive".into()));
    }
    let t = tau.at(0, 0);
    let idx = SecondOrderIndex::all(1);
    let rows: Vec<Result<[Complex64; 4]>> = (0..n)
        .into_par_iter()
        .map(|j| {
            let mut acc = [Complex64::new(0.0, 0.0); 4];
            for i in 0..n {
                let z = Complex64::new(i as f64 / n as f64, 0.0) + t * (j as f64 / n as f64);
                let w = (-4.0 * PI * z.im * z.im / t.im).exp();
                let a = sot_value(&idx[0], &[z], tau, prec)?;
                let b = sot_value(&idx[1], &[z], tau, prec)?;
                acc[0] += a * a.conj() * w;
                acc[1] += a * b.conj() * w;
                acc[2] += b * a.conj() * w;
                acc[3] += b * b.conj() * w;
            }
            Ok(acc)
        })
        .collect();
    let mut total = [Complex64::new(0.0, 0.0); 4];
    for row in rows {
        let row = row?;
        for k in 0..4 {
            total[k] += row[k];
        }
    }
    let area = t.im / (n * n) as f64;
    Ok(DMatrix::from_fn(2, 2, |r, c| total[2 * r + c] * area))
}

/// `<theta_u, theta_v>` at genus one; see [`gram_matrix_g1`].
pub fn inner_product_g1(
    u: &SecondOrderIndex,
    v: &SecondOrderIndex,
    tau: &PeriodMatrix,
    n: usize,
    prec: &Precision,
) -> Result<Complex64> {
    require_genus_one(tau)?;
    check_len(tau, u.g())?;
    check_len(tau, v.g())?;
    let gram = gram_matrix_g1(tau, n, prec)?;
    Ok(gram[(u.bits()[0] as usize, v.bits()[0] as usize)])
}
