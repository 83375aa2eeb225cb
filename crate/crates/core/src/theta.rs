//! Multidimensional theta series with characteristics and their `z`-jets.
//!
//! Every sum runs over the integer points of a ball around the lattice point
//! closest to the Gaussian peak of the summand. The radius comes from a
//! [`TruncationPlan`] whose bound is an upper estimate of the discarded tail,
//! measured relative to the peak envelope `exp(pi y^T (Im tau)^{-1} y)` with
//! `y = Im z`. For `z` real the envelope is 1 and the bound is absolute.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::siegel::{Characteristic, PeriodMatrix};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Truncation tolerances shared by all series evaluations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Precision {
    /// Tail tolerance for function values.
    pub eps_value: f64,
    /// Tail tolerance for gradients, Hessians and `tau`-derivatives.
    pub eps_jet: f64,
    /// Largest admissible truncation radius.
    pub lattice_cap: usize,
}

impl Default for Precision {
    fn default() -> Self {
        Precision { eps_value: 1e-13, eps_jet: 1e-11, lattice_cap: 200 }
    }
}

/// Value, gradient and Hessian in `z` of a theta-type function.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaJet {
    pub value: Complex64,
    pub gradient: DVector<Complex64>,
    pub hessian: DMatrix<Complex64>,
}

impl ThetaJet {
    fn zero(g: usize) -> Self {
        ThetaJet {
            value: Complex64::new(0.0, 0.0),
            gradient: DVector::zeros(g),
            hessian: DMatrix::zeros(g, g),
        }
    }

    pub fn g(&self) -> usize {
        self.gradient.len()
    }
}

/// Lattice ball used to truncate a theta series.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncationPlan {
    /// Integer point nearest the Gaussian peak of the summand.
    pub center: Vec<i64>,
    /// Euclidean radius of the summed ball around `center`.
    pub radius: f64,
    /// Upper estimate of the discarded tail, relative to the envelope.
    pub bound: f64,
    /// `pi y^T (Im tau)^{-1} y`; the envelope is `exp(log_envelope)`.
    pub log_envelope: f64,
}

impl TruncationPlan {
    pub fn envelope(&self) -> f64 {
        self.log_envelope.exp()
    }
}

fn unit_ball_volume(g: usize) -> f64 {
    // pi^{g/2} / Gamma(g/2 + 1), by the two-step recurrence.
    let mut v = [1.0, 2.0];
    let mut out = if g == 0 { 1.0 } else { 2.0 };
    for k in 2..=g {
        out = v[0] * 2.0 * PI / k as f64;
        v = [v[1], out];
    }
    out
}

/// Estimate of `sum_{|n| > r} exp(-pi lambda |n + delta|^2) (2 pi |v|)^order`
/// over integer `n`, with `|delta| <= sqrt(g)/2` and `|v| <= |n| + sqrt(g)/2 + offset`.
/// Shells `k < |n| <= k + 1` are counted by the ball volume bound.
fn tail_bound(g: usize, lambda: f64, r: usize, order: usize, offset: f64) -> f64 {
    let h = (g as f64).sqrt() / 2.0;
    let vol = unit_ball_volume(g);
    let mut total = 0.0;
    let mut k = r;
    loop {
        let kf = k as f64;
        let gap = (kf - h).max(0.0);
        let count = vol * (kf + 1.0 + h).powi(g as i32);
        let poly = (2.0 * PI * (kf + 1.0 + h + offset)).powi(order as i32);
        let term = count * poly * (-PI * lambda * gap * gap).exp();
        total += term;
        let decreasing = PI * lambda * gap > (g + order) as f64;
        if (decreasing && term <= total * 1e-18) || term == 0.0 && decreasing || k > r + 100_000 {
            break;
        }
        k += 1;
    }
    total
}

/// Plan for `sum_m exp(pi i <m + a, tau (m + a) + 2 z>)` and its derivatives
/// up to `order`.
pub(crate) fn plan_for(
    tau: &PeriodMatrix,
    shift: &[f64],
    z: &[Complex64],
    eps: f64,
    order: usize,
    cap: usize,
) -> Result<TruncationPlan> {
    if !(eps > 0.0) {
        return Err(Error::InvalidInput("epsilon must be positive".into()));
    }
    if z.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
        return Err(Error::InvalidInput("non-finite argument".into()));
    }
    let g = tau.g();
    let y: Vec<f64> = z.iter().map(|c| c.im).collect();
    let peak: Vec<f64> = tau.im_inverse().apply(&y).iter().map(|p| -p).collect();
    let log_envelope = PI * tau.im_inverse().quad(&y);
    let center: Vec<i64> = peak.iter().zip(shift).map(|(p, a)| (p - a).round() as i64).collect();
    let offset = peak.iter().map(|p| p * p).sum::<f64>().sqrt();
    let lambda = tau.min_im_eigenvalue();
    let start = ((g as f64).sqrt() / 2.0).ceil() as usize;
    for r in start.max(1)..=cap {
        let bound = tail_bound(g, lambda, r, order, offset);
        if bound < eps {
            return Ok(TruncationPlan { center, radius: r as f64, bound, log_envelope });
        }
    }
    Err(Error::EpsilonTooSmall { radius: cap as f64 + 1.0, cap })
}

/// Truncation plan for the plain theta series at `z`.
pub fn truncation_radius(
    tau: &PeriodMatrix,
    z: &[Complex64],
    eps: f64,
    order: usize,
    cap: usize,
) -> Result<TruncationPlan> {
    if order > 2 {
        return Err(Error::InvalidInput("jet order must be 0, 1 or 2".into()));
    }
    check_len(tau, z.len())?;
    plan_for(tau, &vec![0.0; tau.g()], z, eps, order, cap)
}

pub(crate) fn check_len(tau: &PeriodMatrix, len: usize) -> Result<()> {
    if len != tau.g() {
        return Err(Error::DimensionMismatch { expected: tau.g(), found: len });
    }
    Ok(())
}

/// Raw sums of a theta series: value, `z`-gradient, `z`-Hessian and the
/// derivative with respect to the upper-triangle entries `tau_ij`, `i <= j`
/// (factor `pi i (2 - delta_ij) v_i v_j` per term).
pub(crate) struct LatticeJet {
    pub jet: ThetaJet,
    pub tau_deriv: DMatrix<Complex64>,
}

pub(crate) fn lattice_jet(
    tau: &PeriodMatrix,
    shift: &[f64],
    z: &[Complex64],
    plan: &TruncationPlan,
    order: usize,
    with_tau: bool,
) -> LatticeJet {
    let g = tau.g();
    let r = plan.radius.floor() as i64;
    let r2 = plan.radius * plan.radius;
    let tre: Vec<f64> = tau.re().iter().cloned().collect();
    let tim: Vec<f64> = tau.im().iter().cloned().collect();

    let mut value = Complex64::new(0.0, 0.0);
    let mut grad = vec![Complex64::new(0.0, 0.0); g];
    let mut hess = vec![Complex64::new(0.0, 0.0); g * g];
    let mut tder = vec![Complex64::new(0.0, 0.0); g * g];

    let mut n = vec![-r; g];
    let mut v = vec![0.0; g];
    loop {
        let norm2: f64 = n.iter().map(|&k| (k * k) as f64).sum();
        if norm2 <= r2 {
            for i in 0..g {
                v[i] = (n[i] + plan.center[i]) as f64 + shift[i];
            }
            // exponent pi i (v^T tau v + 2 v^T z), accumulated as one complex number
            let mut q_re = 0.0;
            let mut q_im = 0.0;
            for i in 0..g {
                for j in 0..g {
                    // nalgebra storage is column-major
                    let k = j * g + i;
                    q_re += v[i] * tre[k] * v[j];
                    q_im += v[i] * tim[k] * v[j];
                }
            }
            let mut w = Complex64::new(q_re, q_im);
            for i in 0..g {
                w += 2.0 * v[i] * z[i];
            }
            let term = (I * PI * w).exp();
            value += term;
            if order >= 1 {
                for i in 0..g {
                    grad[i] += term * (2.0 * PI * v[i]) * I;
                }
            }
            if order >= 2 {
                for i in 0..g {
                    for j in i..g {
                        hess[i * g + j] += term * (-4.0 * PI * PI * v[i] * v[j]);
                    }
                }
            }
            if with_tau {
                for i in 0..g {
                    for j in i..g {
                        let mult = if i == j { 1.0 } else { 2.0 };
                        tder[i * g + j] += term * I * (PI * mult * v[i] * v[j]);
                    }
                }
            }
        }
        // odometer
        let mut k = 0;
        loop {
            if k == g {
                let jet = ThetaJet {
                    value,
                    gradient: DVector::from_vec(grad),
                    hessian: DMatrix::from_fn(g, g, |i, j| {
                        let (a, b) = if i <= j { (i, j) } else { (j, i) };
                        hess[a * g + b]
                    }),
                };
                let tau_deriv = DMatrix::from_fn(g, g, |i, j| {
                    let (a, b) = if i <= j { (i, j) } else { (j, i) };
                    tder[a * g + b]
                });
                return LatticeJet { jet, tau_deriv };
            }
            n[k] += 1;
            if n[k] > r {
                n[k] = -r;
                k += 1;
            } else {
                break;
            }
        }
    }
}

fn jet_plan(
    tau: &PeriodMatrix,
    shift: &[f64],
    z: &[Complex64],
    prec: &Precision,
) -> Result<TruncationPlan> {
    let p0 = plan_for(tau, shift, z, prec.eps_value, 0, prec.lattice_cap)?;
    let p2 = plan_for(tau, shift, z, prec.eps_jet, 2, prec.lattice_cap)?;
    Ok(if p0.radius > p2.radius { p0 } else { p2 })
}

/// `theta(z; tau)` to within `eps_value` (relative to the envelope).
pub fn theta_value(z: &[Complex64], tau: &PeriodMatrix, prec: &Precision) -> Result<Complex64> {
    check_len(tau, z.len())?;
    let zero = vec![0.0; tau.g()];
    let plan = plan_for(tau, &zero, z, prec.eps_value, 0, prec.lattice_cap)?;
    Ok(lattice_jet(tau, &zero, z, &plan, 0, false).jet.value)
}

/// Value, gradient and Hessian of `theta(z; tau)` from one lattice pass.
pub fn theta_jet(z: &[Complex64], tau: &PeriodMatrix, prec: &Precision) -> Result<ThetaJet> {
    theta_jet_planned(z, tau, prec).map(|(jet, _)| jet)
}

pub fn theta_jet_planned(
    z: &[Complex64],
    tau: &PeriodMatrix,
    prec: &Precision,
) -> Result<(ThetaJet, TruncationPlan)> {
    check_len(tau, z.len())?;
    let zero = vec![0.0; tau.g()];
    let plan = jet_plan(tau, &zero, z, prec)?;
    let jet = lattice_jet(tau, &zero, z, &plan, 2, false).jet;
    Ok((jet, plan))
}

fn shifted_argument(c: &Characteristic, z: &[Complex64]) -> Vec<Complex64> {
    z.iter().zip(c.b()).map(|(zi, bi)| zi + bi).collect()
}

/// `theta[zeta](z) = sum_m exp(pi i <m + a, tau (m + a) + 2 (z + b)>)`.
pub fn theta_char_value(
    c: &Characteristic,
    z: &[Complex64],
    tau: &PeriodMatrix,
    prec: &Precision,
) -> Result<Complex64> {
    theta_char_value_planned(c, z, tau, prec).map(|(v, _)| v)
}

pub fn theta_char_value_planned(
    c: &Characteristic,
    z: &[Complex64],
    tau: &PeriodMatrix,
    prec: &Precision,
) -> Result<(Complex64, TruncationPlan)> {
    check_len(tau, z.len())?;
    check_len(tau, c.g())?;
    let zb = shifted_argument(c, z);
    let plan = plan_for(tau, c.a(), &zb, prec.eps_value, 0, prec.lattice_cap)?;
    let value = lattice_jet(tau, c.a(), &zb, &plan, 0, false).jet.value;
    Ok((value, plan))
}

pub fn theta_char_jet(
    c: &Characteristic,
    z: &[Complex64],
    tau: &PeriodMatrix,
    prec: &Precision,
) -> Result<ThetaJet> {
    theta_char_jet_planned(c, z, tau, prec).map(|(jet, _)| jet)
}

pub fn theta_char_jet_planned(
    c: &Characteristic,
    z: &[Complex64],
    tau: &PeriodMatrix,
    prec: &Precision,
) -> Result<(ThetaJet, TruncationPlan)> {
    check_len(tau, z.len())?;
    check_len(tau, c.g())?;
    let zb = shifted_argument(c, z);
    let plan = jet_plan(tau, c.a(), &zb, prec)?;
    let jet = lattice_jet(tau, c.a(), &zb, &plan, 2, false).jet;
    Ok((jet, plan))
}

/// Jet of `s_w(z) = theta(z - w) theta(z + w)` by the Leibniz rule.
pub fn s_point_jet(
    w: &[Complex64],
    z: &[Complex64],
    tau: &PeriodMatrix,
    prec: &Precision,
) -> Result<ThetaJet> {
    check_len(tau, w.len())?;
    check_len(tau, z.len())?;
    let minus: Vec<Complex64> = z.iter().zip(w).map(|(a, b)| a - b).collect();
    let plus: Vec<Complex64> = z.iter().zip(w).map(|(a, b)| a + b).collect();
    let p = theta_jet(&minus, tau, prec)?;
    let q = theta_jet(&plus, tau, prec)?;
    Ok(product_jet(&p, &q))
}

/// Leibniz rule for the product of two jets at the same point.
pub fn product_jet(p: &ThetaJet, q: &ThetaJet) -> ThetaJet {
    let g = p.g();
    let mut out = ThetaJet::zero(g);
    out.value = p.value * q.value;
    out.gradient = &p.gradient * q.value + &q.gradient * p.value;
    out.hessian = DMatrix::from_fn(g, g, |i, j| {
        p.hessian[(i, j)] * q.value
            + p.gradient[i] * q.gradient[j]
            + p.gradient[j] * q.gradient[i]
            + p.value * q.hessian[(i, j)]
    });
    out
}

/// `s_zeta(z) = theta(z - zeta) theta(z + zeta)` with `zeta = tau a + b`.
pub fn s_zeta_jet(
    c: &Characteristic,
    z: &[Complex64],
    tau: &PeriodMatrix,
    prec: &Precision,
) -> Result<ThetaJet> {
    check_len(tau, c.g())?;
    let zeta: Vec<Complex64> = c.point(tau).iter().cloned().collect();
    s_point_jet(&zeta, z, tau, prec)
}

/// `c(zeta) = -exp(2 pi i <a, tau a + 2 b>)`.
pub fn c_zeta(c: &Characteristic, tau: &PeriodMatrix) -> Result<Complex64> {
    check_len(tau, c.g())?;
    let ta = tau.mul_real(c.a());
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..c.g() {
        acc += c.a()[i] * (ta[i] + 2.0 * c.b()[i]);
    }
    Ok(-(2.0 * PI * I * acc).exp())
}

/// `exp(2 pi i <a, tau a>)`, defined for odd characteristics, where it agrees
/// with [`c_zeta`].
pub fn c_odd(c: &Characteristic, tau: &PeriodMatrix) -> Result<Complex64> {
    check_len(tau, c.g())?;
    if !c.is_odd() {
        return Err(Error::NotOdd);
    }
    let ta = tau.mul_real(c.a());
    let acc: Complex64 = (0..c.g()).map(|i| ta[i] * c.a()[i]).sum();
    Ok((2.0 * PI * I * acc).exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn tau_i() -> PeriodMatrix {
        PeriodMatrix::genus_one(c(0.0, 1.0)).unwrap()
    }

    #[test]
    fn ball_volumes() {
        assert!((unit_ball_volume(1) - 2.0).abs() < 1e-15);
        assert!((unit_ball_volume(2) - PI).abs() < 1e-15);
        assert!((unit_ball_volume(3) - 4.0 * PI / 3.0).abs() < 1e-14);
    }

    #[test]
    fn radius_for_tau_i() {
        let plan = truncation_radius(&tau_i(), &[c(0.0, 0.0)], 1e-15, 0, 200).unwrap();
        assert!(plan.radius <= 8.0);
        assert!(plan.bound < 1e-15);
        assert_eq!(plan.center, vec![0]);
        // the actual discarded tail is below the bound
        let r = plan.radius as i64;
        let tail: f64 = (r + 1..60).map(|m| 2.0 * (-PI * (m * m) as f64).exp()).sum();
        assert!(tail <= plan.bound);
    }

    #[test]
    fn radius_shift_invariant() {
        let tau = PeriodMatrix::genus_one(c(0.2, 0.9)).unwrap();
        let z0 = c(0.13, 0.21);
        let p0 = truncation_radius(&tau, &[z0], 1e-13, 2, 200).unwrap();
        let p1 = truncation_radius(&tau, &[z0 + 3.0 + tau.at(0, 0) * 2.0], 1e-13, 2, 200).unwrap();
        assert_eq!(p0.radius, p1.radius);
        assert_eq!(p1.center[0], p0.center[0] - 2);
    }

    #[test]
    fn cap_rule() {
        let tau = PeriodMatrix::genus_one(c(0.0, 1e-4)).unwrap();
        let err = truncation_radius(&tau, &[c(0.0, 0.0)], 1e-15, 0, 200).unwrap_err();
        assert_eq!(err.name(), "EpsilonTooSmall");
        assert!(truncation_radius(&tau_i(), &[c(0.0, 0.0)], -1.0, 0, 200).is_err());
    }

    #[test]
    fn theta_at_i() {
        // independent direct sum and the closed form pi^{1/4} / Gamma(3/4)
        let direct: f64 = (-10i64..=10).map(|m| (-PI * (m * m) as f64).exp()).sum();
        let closed = PI.powf(0.25) / 1.225_416_702_465_177_6;
        assert!((direct - closed).abs() < 1e-14);
        let v = theta_value(&[c(0.0, 0.0)], &tau_i(), &Precision::default()).unwrap();
        assert!((v.re - 1.08643481121331).abs() < 1e-13);
        assert!((v - direct).norm() < 1e-14);
    }

    #[test]
    fn gradient_vanishes_at_origin() {
        let m = DMatrix::from_row_slice(2, 2, &[c(0.1, 1.2), c(0.3, 0.2), c(0.3, 0.2), c(-0.2, 0.8)]);
        let tau = PeriodMatrix::new(m).unwrap();
        let jet = theta_jet(&[c(0.0, 0.0); 2], &tau, &Precision::default()).unwrap();
        assert!(jet.gradient.iter().all(|x| x.norm() < 1e-12));
        assert_eq!(jet.hessian[(0, 1)], jet.hessian[(1, 0)]);
    }

    #[test]
    fn odd_characteristic_at_origin() {
        let tau = tau_i();
        let ch = Characteristic::half_integer(&[1], &[1]).unwrap();
        let jet = theta_char_jet(&ch, &[c(0.0, 0.0)], &tau, &Precision::default()).unwrap();
        assert!(jet.value.norm() < 1e-12);
        // oracle: sum 2 pi i v exp(pi i (v^2 i + v)), v = m + 1/2
        let oracle: Complex64 = (-12i64..=12)
            .map(|m| {
                let v = m as f64 + 0.5;
                c(0.0, 2.0 * PI * v) * (I * PI * (c(0.0, v * v) + v)).exp()
            })
            .sum();
        assert!(oracle.norm() > 0.1);
        assert!((jet.gradient[0] - oracle).norm() < 1e-12 * oracle.norm());
    }

    #[test]
    fn zero_characteristic_matches_plain_theta() {
        let tau = PeriodMatrix::genus_one(c(0.3, 1.1)).unwrap();
        let z = [c(0.17, -0.23)];
        let a = theta_char_jet(&Characteristic::zero(1), &z, &tau, &Precision::default()).unwrap();
        let b = theta_jet(&z, &tau, &Precision::default()).unwrap();
        assert!((a.value - b.value).norm() < 1e-15);
    }

    #[test]
    fn c_constants() {
        let tau = tau_i();
        let ch = Characteristic::half_integer(&[1], &[1]).unwrap();
        let cz = c_zeta(&ch, &tau).unwrap();
        assert!((cz - c((-PI / 2.0).exp(), 0.0)).norm() < 1e-15);
        assert!((c_odd(&ch, &tau).unwrap() - cz).norm() < 1e-13 * cz.norm());
        let z = Characteristic::half_integer(&[0], &[1]).unwrap();
        assert!((c_zeta(&z, &tau).unwrap() + 1.0).norm() < 1e-15);
        assert_eq!(c_odd(&z, &tau).unwrap_err(), Error::NotOdd);
    }

    #[test]
    fn s_zero_is_theta_squared() {
        let tau = PeriodMatrix::genus_one(c(-0.2, 0.8)).unwrap();
        let z = [c(0.31, 0.12)];
        let s = s_zeta_jet(&Characteristic::zero(1), &z, &tau, &Precision::default()).unwrap();
        let t = theta_value(&z, &tau, &Precision::default()).unwrap();
        assert!((s.value - t * t).norm() < 1e-13 * s.value.norm());
    }
}
