//! Genus-one checks of the trisecant identity and of the canonical
//! bidifferential built from an odd theta function.
//!
//! With the flat coordinate on `C / (Z + tau Z)` the Abel difference is plain
//! subtraction, and all points live on the universal cover.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::siegel::{Characteristic, PeriodMatrix};
use crate::theta::{s_point_jet, theta_char_jet, theta_char_value, theta_value, Precision};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Points and parameters of one trisecant evaluation.
#[derive(Debug, Clone)]
pub struct TrisecantConfig {
    pub tau: PeriodMatrix,
    pub w: Complex64,
    pub z1: Complex64,
    pub z2: Complex64,
    pub a1: Complex64,
    pub a2: Complex64,
    pub zeta: Characteristic,
}

impl TrisecantConfig {
    /// Uses the odd characteristic `a = b = 1/2`.
    pub fn new(
        tau: PeriodMatrix,
        w: Complex64,
        z: (Complex64, Complex64),
        a: (Complex64, Complex64),
    ) -> Result<Self> {
        Self::with_characteristic(tau, w, z, a, odd_g1())
    }

    pub fn with_characteristic(
        tau: PeriodMatrix,
        w: Complex64,
        z: (Complex64, Complex64),
        a: (Complex64, Complex64),
        zeta: Characteristic,
    ) -> Result<Self> {
        require_g1(&tau)?;
        if zeta.g() != 1 {
            return Err(Error::DimensionMismatch { expected: 1, found: zeta.g() });
        }
        if !zeta.is_odd() {
            return Err(Error::NotOdd);
        }
        Ok(TrisecantConfig { tau, w, z1: z.0, z2: z.1, a1: a.0, a2: a.1, zeta })
    }
}

fn odd_g1() -> Characteristic {
    Characteristic::half_integer(&[1], &[1]).expect("valid characteristic")
}

fn require_g1(tau: &PeriodMatrix) -> Result<()> {
    if tau.g() != 1 {
        return Err(Error::NotSupported(format!(
            "genus {} needs a curve model; only genus 1 is available",
            tau.g()
        )));
    }
    Ok(())
}

/// Abel difference in the flat coordinate: `x - y`.
pub fn abel_difference_g1(x: Complex64, y: Complex64) -> Complex64 {
    x - y
}

/// The two sides `(A, B)` of the trisecant identity.
pub fn trisecant_sides(cfg: &TrisecantConfig, prec: &Precision) -> Result<(Complex64, Complex64)> {
    let tau = &cfg.tau;
    let th = |z: Complex64| theta_value(&[z], tau, prec);
    let odd = |z: Complex64| theta_char_value(&cfg.zeta, &[z], tau, prec);
    let d = abel_difference_g1;
    let (w, z1, z2, a1, a2) = (cfg.w, cfg.z1, cfg.z2, cfg.a1, cfg.a2);

    let alpha_z = th(w + d(z1, z2))?;
    let alpha_a21 = th(w + d(a2, a1))?;
    let alpha_z1a1 = th(w + d(z1, a1))?;
    let alpha_a2z2 = th(w + d(a2, z2))?;
    let beta_z1a1 = odd(d(z1, a1))?;
    let beta_z2a2 = odd(d(z2, a2))?;
    let beta_z1a2 = odd(d(z1, a2))?;
    let beta_z2a1 = odd(d(z2, a1))?;
    let beta_z = odd(d(z1, z2))?;
    let beta_a = odd(d(a1, a2))?;
    let gamma = th(w + d(z1, z2) - d(a1, a2))?;
    let theta_w = th(w)?;

    let a_side = alpha_z * alpha_a21 * beta_z1a1 * beta_z2a2;
    let b_side = theta_w * gamma * beta_z1a2 * beta_z2a1 + alpha_z1a1 * alpha_a2z2 * beta_z * beta_a;
    Ok((a_side, b_side))
}

/// `|A - B| / (|A| + |B| + 1)`.
pub fn trisecant_residual(cfg: &TrisecantConfig, prec: &Precision) -> Result<f64> {
    let (a, b) = trisecant_sides(cfg, prec)?;
    Ok((a - b).norm() / (a.norm() + b.norm() + 1.0))
}

/// Distance from `u` to the lattice `Z + tau Z` (genus one).
pub fn lattice_distance(u: Complex64, tau: Complex64) -> f64 {
    let n0 = (u.im / tau.im).round();
    let mut best = f64::INFINITY;
    for dn in [-1.0, 0.0, 1.0] {
        let n = n0 + dn;
        let r = u - tau * n;
        let m = r.re.round();
        for dm in [-1.0, 0.0, 1.0] {
            best = best.min((r - (m + dm)).norm());
        }
    }
    best
}

/// Scalar coefficient of the canonical bidifferential,
/// `-(log theta[zeta])''(z1 - z2)`, from the exact jet of `theta[zeta]`.
pub fn omega_g1(z1: Complex64, z2: Complex64, tau: &PeriodMatrix, prec: &Precision) -> Result<Complex64> {
    omega_g1_with(&odd_g1(), z1, z2, tau, prec)
}

pub fn omega_g1_with(
    zeta: &Characteristic,
    z1: Complex64,
    z2: Complex64,
    tau: &PeriodMatrix,
    prec: &Precision,
) -> Result<Complex64> {
    require_g1(tau)?;
    if !zeta.is_odd() {
        return Err(Error::NotOdd);
    }
    let u = abel_difference_g1(z1, z2);
    if lattice_distance(u, tau.at(0, 0)) <= 1e-6 {
        return Err(Error::OnDiagonal);
    }
    let j = theta_char_jet(zeta, &[u], tau, prec)?;
    let (f, f1, f2) = (j.value, j.gradient[0], j.hessian[(0, 0)]);
    Ok(-(f2 * f - f1 * f1) / (f * f))
}

/// `(log theta[zeta])'(u)`, an antiderivative of `Omega(p, .)` in the second
/// variable up to sign.
fn log_derivative(zeta: &Characteristic, u: Complex64, tau: &PeriodMatrix, prec: &Precision) -> Result<Complex64> {
    let j = theta_char_jet(zeta, &[u], tau, prec)?;
    Ok(j.gradient[0] / j.value)
}

/// Richardson extrapolation of `h^2 Omega(z + h, z)` from `h = 1e-2, 1e-3`.
pub fn biresidue_g1(z: Complex64, tau: &PeriodMatrix, prec: &Precision) -> Result<Complex64> {
    let f = |h: f64| -> Result<Complex64> { Ok(omega_g1(z + h, z, tau, prec)? * (h * h)) };
    let coarse = f(1e-2)?;
    let fine = f(1e-3)?;
    Ok((fine * 100.0 - coarse) / 99.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PeriodReport {
    pub base: [f64; 2],
    pub a_period: [f64; 2],
    pub b_period: [f64; 2],
    /// Same periods from differences of `(log theta[zeta])'`.
    pub a_shortcut: [f64; 2],
    pub b_shortcut: [f64; 2],
}

fn pair(c: Complex64) -> [f64; 2] {
    [c.re, c.im]
}

/// Smallest distance from the segment `[start, start + dir]` to `p + Z + tau Z`.
fn segment_clearance(p: Complex64, start: Complex64, dir: Complex64, tau: Complex64) -> f64 {
    let samples = 2048;
    (0..=samples)
        .map(|k| lattice_distance(start + dir * (k as f64 / samples as f64) - p, tau))
        .fold(f64::INFINITY, f64::min)
}

/// Integrates `Omega(p, q)` over `q` along `[t, t + 1]` and `[t, t + tau]`.
///
/// `base` defaults to the point of the torus opposite `p`. If a path comes
/// within `1e-3` of a pole it is moved once by `(1 + tau) / 2`.
pub fn period_check(
    tau: &PeriodMatrix,
    p: Complex64,
    base: Option<Complex64>,
    n_quad: usize,
    prec: &Precision,
) -> Result<PeriodReport> {
    require_g1(tau)?;
    if n_quad < 2 {
        return Err(Error::InvalidInput("need at least 2 quadrature nodes".into()));
    }
    let t_mod = tau.at(0, 0);
    let half = (t_mod + 1.0) * 0.5;
    let first = base.unwrap_or(p - half);
    let clear = |t: Complex64| {
        segment_clearance(p, t, Complex64::new(1.0, 0.0), t_mod) > 1e-3
            && segment_clearance(p, t, t_mod, t_mod) > 1e-3
    };
    let t = if clear(first) {
        first
    } else if clear(first + half) {
        first + half
    } else {
        return Err(Error::PoleOnPath);
    };

    let zeta = odd_g1();
    // Omega(p, .) is periodic along both cycles, so the trapezoid rule
    // converges geometrically.
    let integrate = |dir: Complex64| -> Result<Complex64> {
        let mut acc = Complex64::new(0.0, 0.0);
        for k in 0..n_quad {
            let q = t + dir * (k as f64 / n_quad as f64);
            acc += omega_g1_with(&zeta, p, q, tau, prec)?;
        }
        Ok(acc * dir / n_quad as f64)
    };
    let a_period = integrate(Complex64::new(1.0, 0.0))?;
    let b_period = integrate(t_mod)?;

    let l0 = log_derivative(&zeta, p - t, tau, prec)?;
    let la = log_derivative(&zeta, p - t - 1.0, tau, prec)?;
    let lb = log_derivative(&zeta, p - t - t_mod, tau, prec)?;
    Ok(PeriodReport {
        base: pair(t),
        a_period: pair(a_period),
        b_period: pair(b_period),
        a_shortcut: pair(la - l0),
        b_shortcut: pair(lb - l0),
    })
}

/// Expected b-period of the normalized bidifferential, `2 pi i`.
pub fn expected_b_period() -> Complex64 {
    2.0 * PI * I
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MixedPartialReport {
    /// Relative error of the finite-difference `A_12` against its closed form.
    pub res_a: f64,
    /// Relative error of the finite-difference `B_12` against its closed form.
    pub res_b: f64,
    /// `|A_12 - B_12|` relative, both by finite differences.
    pub res_ab: f64,
}

/// Mixed second derivatives in `(z1, z2)` of both trisecant sides at
/// `(z1, z2) = (a1, a2)`, by central differences with step `h`, compared with
/// `s_w(a1 - a2) theta[zeta]'(0)^2` and
/// `theta[zeta](a1 - a2)^2 (s_w(0) Omega(a1, a2) + s_w''(0) / 2)`.
pub fn a12_b12_check(
    w: Complex64,
    a1: Complex64,
    a2: Complex64,
    tau: &PeriodMatrix,
    prec: &Precision,
    h: f64,
) -> Result<MixedPartialReport> {
    require_g1(tau)?;
    if !(h > 0.0) {
        return Err(Error::InvalidInput("step must be positive".into()));
    }
    let u = abel_difference_g1(a1, a2);
    if lattice_distance(u, tau.at(0, 0)) <= 1e-6 {
        return Err(Error::OnDiagonal);
    }
    let sides = |z1: Complex64, z2: Complex64| {
        let cfg = TrisecantConfig::new(tau.clone(), w, (z1, z2), (a1, a2))?;
        trisecant_sides(&cfg, prec)
    };
    let pp = sides(a1 + h, a2 + h)?;
    let pm = sides(a1 + h, a2 - h)?;
    let mp = sides(a1 - h, a2 + h)?;
    let mm = sides(a1 - h, a2 - h)?;
    let scale = 4.0 * h * h;
    let fd_a = (pp.0 - pm.0 - mp.0 + mm.0) / scale;
    let fd_b = (pp.1 - pm.1 - mp.1 + mm.1) / scale;

    let zeta = odd_g1();
    let odd0 = theta_char_jet(&zeta, &[Complex64::new(0.0, 0.0)], tau, prec)?;
    let odd_u = theta_char_value(&zeta, &[u], tau, prec)?;
    let s_u = s_point_jet(&[w], &[u], tau, prec)?;
    let s_0 = s_point_jet(&[w], &[Complex64::new(0.0, 0.0)], tau, prec)?;
    let omega = omega_g1(a1, a2, tau, prec)?;

    let closed_a = s_u.value * odd0.gradient[0] * odd0.gradient[0];
    let closed_b = odd_u * odd_u * (s_0.value * omega + s_0.hessian[(0, 0)] * 0.5);
    let rel = |x: Complex64, y: Complex64| (x - y).norm() / y.norm().max(f64::MIN_POSITIVE);
    Ok(MixedPartialReport {
        res_a: rel(fd_a, closed_a),
        res_b: rel(fd_b, closed_b),
        res_ab: rel(fd_a, fd_b),
    })
}

/// Relative residual of the genus-one scalar pullback identity
/// `s_w(x - y) theta[zeta]'(0)^2 = theta[zeta](x - y)^2 (s_w(0) Omega(x, y) + s_w''(0) / 2)`.
pub fn pullback_identity_residual(
    w: Complex64,
    x: Complex64,
    y: Complex64,
    tau: &PeriodMatrix,
    prec: &Precision,
) -> Result<f64> {
    require_g1(tau)?;
    let zeta = odd_g1();
    let u = abel_difference_g1(x, y);
    let zero = Complex64::new(0.0, 0.0);
    let odd0 = theta_char_jet(&zeta, &[zero], tau, prec)?;
    let odd_u = theta_char_value(&zeta, &[u], tau, prec)?;
    let s_u = s_point_jet(&[w], &[u], tau, prec)?;
    let s_0 = s_point_jet(&[w], &[zero], tau, prec)?;
    let omega = omega_g1(x, y, tau, prec)?;
    let lhs = s_u.value * odd0.gradient[0] * odd0.gradient[0];
    let rhs = odd_u * odd_u * (s_0.value * omega + s_0.hessian[(0, 0)] * 0.5);
    Ok((lhs - rhs).norm() / (lhs.norm() + rhs.norm()).max(f64::MIN_POSITIVE))
}
