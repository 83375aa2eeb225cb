//! Genus-one coincidence locus of the two correction matrices.
//!
//! With `tau = x + i y`, the lattice sum
//! `w(x, y) = sum_{(m,n) in Z^2} exp(2 pi i x m n - pi y (m^2 + n^2))`
//! equals `|theta_0(0)|^2 + |theta_{1/2}(0)|^2`, and the two corrections agree
//! exactly where `w_x = 0` and `2 y w_y + w = 0`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};

/// `w` and its partial derivatives up to order two at `(x, y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WJet {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub w_x: f64,
    pub w_y: f64,
    pub w_xx: f64,
    pub w_yy: f64,
    pub w_xy: f64,
}

/// One point of a scan, with the residuals `r1 = w_x`, `r2 = 2 y w_y + w`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocusSample {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub w_x: f64,
    pub w_y: f64,
    pub r1: f64,
    pub r2: f64,
    /// `sqrt(r1^2 + r2^2) / w`; NaN when the sample failed.
    pub res: f64,
    /// Error name of a failed sample.
    pub err: Option<String>,
}

impl LocusSample {
    fn from_jet(j: &WJet) -> Self {
        let r1 = j.w_x;
        let r2 = 2.0 * j.y * j.w_y + j.w;
        LocusSample {
            x: j.x,
            y: j.y,
            w: j.w,
            w_x: j.w_x,
            w_y: j.w_y,
            r1,
            r2,
            res: r1.hypot(r2) / j.w,
            err: None,
        }
    }

    fn failed(x: f64, y: f64, e: &Error) -> Self {
        LocusSample {
            x,
            y,
            w: f64::NAN,
            w_x: f64::NAN,
            w_y: f64::NAN,
            r1: f64::NAN,
            r2: f64::NAN,
            res: f64::NAN,
            err: Some(e.name().to_string()),
        }
    }
}

/// Default largest lattice half-width for `w`.
pub const DEFAULT_W_CAP: usize = 200;

/// Smallest `M` such that the terms with `max(|m|, |n|) > M`, weighted by the
/// largest second-order derivative factor `(1 + pi (m^2 + n^2))^2`, sum to
/// less than `eps` (times `w >= 1`).
pub fn w_truncation(y: f64, eps: f64, cap: usize) -> Result<usize> {
    if !(y > 0.0) || !y.is_finite() {
        return Err(Error::InvalidInput("y must be positive".into()));
    }
    if !(eps > 0.0) {
        return Err(Error::InvalidInput("epsilon must be positive".into()));
    }
    let weight = |m: f64, n: f64| {
        let s = m * m + n * n;
        (1.0 + PI * s).powi(2) * (-PI * y * s).exp()
    };
    // 1-D sums sum_n e^{-pi y n^2} (1 + pi n^2)^k are bounded by this factor.
    let line: f64 = {
        let mut acc = 0.0;
        let mut n = 0.0f64;
        loop {
            let t = (1.0 + PI * n * n).powi(2) * (-PI * y * n * n).exp();
            acc += if n == 0.0 { t } else { 2.0 * t };
            if n > 1.0 && PI * y * n * n > 8.0 && t < acc * 1e-18 {
                break;
            }
            n += 1.0;
        }
        acc
    };
    for m_cut in 1..=cap {
        // 4 sum_{m > M} sum_n, using (1 + pi(m^2+n^2))^2 <= (1 + pi m^2)^2 (1 + pi n^2)^2
        let mut tail = 0.0;
        let mut m = m_cut as f64 + 1.0;
        loop {
            let t = weight(m, 0.0) * line;
            tail += 4.0 * t;
            if PI * y * m * m > 8.0 && t < tail * 1e-18 || t == 0.0 {
                break;
            }
            m += 1.0;
        }
        if tail < eps {
            return Ok(m_cut);
        }
    }
    Err(Error::EpsilonTooSmall { radius: cap as f64 + 1.0, cap })
}

/// Partial derivatives of `w` from a single pass over `|m|, |n| <= lattice_m`.
pub fn w_jet_with_bound(x: f64, y: f64, lattice_m: usize) -> Result<WJet> {
    if !(y > 0.0) || !x.is_finite() || !y.is_finite() {
        return Err(Error::InvalidInput("need finite x and y > 0".into()));
    }
    let m_max = lattice_m as i64;
    let mut acc = [Complex64::new(0.0, 0.0); 6];
    let mut abs = [0.0f64; 6];
    for m in -m_max..=m_max {
        for n in -m_max..=m_max {
            let mn = (m * n) as f64;
            let s = (m * m + n * n) as f64;
            let term = Complex64::new(-PI * y * s, 2.0 * PI * x * mn).exp();
            let dx = Complex64::new(0.0, 2.0 * PI * mn);
            let dy = Complex64::new(-PI * s, 0.0);
            let factors = [Complex64::new(1.0, 0.0), dx, dy, dx * dx, dy * dy, dx * dy];
            for k in 0..6 {
                let t = term * factors[k];
                acc[k] += t;
                abs[k] += t.norm();
            }
        }
    }
    for k in 0..6 {
        if acc[k].im.abs() > 1e-12 * abs[k].max(acc[0].re) {
            return Err(Error::InvalidInput(format!(
                "lattice sum is not real: imaginary residue {:e}",
                acc[k].im
            )));
        }
    }
    Ok(WJet {
        x,
        y,
        w: acc[0].re,
        w_x: acc[1].re,
        w_y: acc[2].re,
        w_xx: acc[3].re,
        w_yy: acc[4].re,
        w_xy: acc[5].re,
    })
}

pub fn w_jet(x: f64, y: f64, eps: f64) -> Result<WJet> {
    let m = w_truncation(y, eps, DEFAULT_W_CAP)?;
    w_jet_with_bound(x, y, m)
}

pub fn residuals(x: f64, y: f64, eps: f64) -> Result<LocusSample> {
    Ok(LocusSample::from_jet(&w_jet(x, y, eps)?))
}

/// `4 i y w_tau + w` with `w_tau = (w_x - i w_y) / 2`; its real part is `r2`
/// and its imaginary part is `2 y r1`.
pub fn holomorphic_residual(x: f64, y: f64, eps: f64) -> Result<Complex64> {
    let j = w_jet(x, y, eps)?;
    Ok(holomorphic_from_jet(&j))
}

fn holomorphic_from_jet(j: &WJet) -> Complex64 {
    let w_tau = Complex64::new(j.w_x, -j.w_y) * 0.5;
    Complex64::new(0.0, 4.0 * j.y) * w_tau + j.w
}

/// Genus-one `sigma` correction through the heat equation: `4 pi i w_tau / w`.
pub fn sigma_heat_g1(x: f64, y: f64, eps: f64) -> Result<Complex64> {
    let j = w_jet(x, y, eps)?;
    let w_tau = Complex64::new(j.w_x, -j.w_y) * 0.5;
    Ok(Complex64::new(0.0, 4.0 * PI) * w_tau / j.w)
}

/// Rectangular window of the upper half-plane sampled on an `nx x ny` grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanGrid {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub nx: usize,
    pub ny: usize,
}

impl ScanGrid {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64, nx: usize, ny: usize) -> Result<Self> {
        let finite = [x_min, x_max, y_min, y_max].iter().all(|v| v.is_finite());
        if !finite || !(x_min <= x_max) || !(0.0 < y_min && y_min < y_max) {
            return Err(Error::InvalidInput(
                "window needs finite x_min <= x_max and 0 < y_min < y_max".into(),
            ));
        }
        if nx < 2 || ny < 2 {
            return Err(Error::InvalidInput("grid needs nx, ny >= 2".into()));
        }
        if nx.saturating_mul(ny) > 100_000_000 {
            return Err(Error::InvalidInput("grid has more than 1e8 samples".into()));
        }
        Ok(ScanGrid { x_min, x_max, y_min, y_max, nx, ny })
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + (self.x_max - self.x_min) * i as f64 / (self.nx - 1) as f64
    }

    pub fn y(&self, j: usize) -> f64 {
        self.y_min + (self.y_max - self.y_min) * j as f64 / (self.ny - 1) as f64
    }

    /// One lattice bound for the whole window, chosen at `y_min`.
    pub fn lattice_bound(&self, eps: f64) -> Result<usize> {
        w_truncation(self.y_min, eps, DEFAULT_W_CAP)
    }
}

/// Samples of grid rows `rows` (row `j` is `y = y(j)`), row-major.
pub fn scan_rows(grid: &ScanGrid, rows: std::ops::Range<usize>, lattice_m: usize) -> Vec<LocusSample> {
    let per_row: Vec<Vec<LocusSample>> = rows
        .into_par_iter()
        .map(|j| {
            let y = grid.y(j);
            (0..grid.nx)
                .map(|i| {
                    let x = grid.x(i);
                    match w_jet_with_bound(x, y, lattice_m) {
                        Ok(jet) => LocusSample::from_jet(&jet),
                        Err(e) => LocusSample::failed(x, y, &e),
                    }
                })
                .collect()
        })
        .collect();
    per_row.into_iter().flatten().collect()
}

pub fn scan(grid: &ScanGrid, eps: f64) -> Result<Vec<LocusSample>> {
    let m = grid.lattice_bound(eps)?;
    Ok(scan_rows(grid, 0..grid.ny, m))
}

/// A refined locus point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Refined {
    pub sample: LocusSample,
    pub iters: usize,
}

pub const REFINE_TOL: f64 = 1e-10;

/// Damped Newton iteration on `(r1, r2) = 0` with `res` as merit function.
///
/// `damping` is the initial step fraction in `(0, 1]`; each step is halved
/// until `res` decreases (and `y` stays positive).
pub fn refine(x0: f64, y0: f64, eps: f64, max_iter: usize, damping: f64) -> Result<Refined> {
    if !(y0 > 0.0) || !x0.is_finite() || !y0.is_finite() {
        return Err(Error::InvalidInput("seed needs finite x and y > 0".into()));
    }
    if !(damping > 0.0 && damping <= 1.0) {
        return Err(Error::InvalidInput("damping must be in (0, 1]".into()));
    }
    let (mut x, mut y) = (x0, y0);
    let mut jet = w_jet(x, y, eps)?;
    let mut sample = LocusSample::from_jet(&jet);
    for iter in 0..max_iter {
        if sample.res < REFINE_TOL {
            return Ok(Refined { sample, iters: iter });
        }
        let j = jacobian(&jet);
        let condition = condition_2x2(&j);
        if !(condition <= 1e12) {
            return Err(Error::SingularJacobian { condition });
        }
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        let dx = -(j[1][1] * sample.r1 - j[0][1] * sample.r2) / det;
        let dy = -(-j[1][0] * sample.r1 + j[0][0] * sample.r2) / det;

        let mut step = damping;
        let mut accepted = None;
        for _ in 0..40 {
            let (nx, ny) = (x + step * dx, y + step * dy);
            if ny > 0.0 {
                let nj = w_jet(nx, ny, eps)?;
                let ns = LocusSample::from_jet(&nj);
                if ns.res < sample.res {
                    accepted = Some((nx, ny, nj, ns));
                    break;
                }
            }
            step *= 0.5;
        }
        match accepted {
            Some((nx, ny, nj, ns)) => {
                x = nx;
                y = ny;
                jet = nj;
                sample = ns;
            }
            None => {
                return Err(Error::NoConvergence { x, y, res: sample.res, iters: iter + 1 });
            }
        }
    }
    if sample.res < REFINE_TOL {
        return Ok(Refined { sample, iters: max_iter });
    }
    Err(Error::NoConvergence { x, y, res: sample.res, iters: max_iter })
}

/// Jacobian of `(w_x, 2 y w_y + w)` in `(x, y)`.
fn jacobian(j: &WJet) -> [[f64; 2]; 2] {
    [
        [j.w_xx, j.w_xy],
        [2.0 * j.y * j.w_xy + j.w_x, 3.0 * j.w_y + 2.0 * j.y * j.w_yy],
    ]
}

fn condition_2x2(m: &[[f64; 2]; 2]) -> f64 {
    let (a, b, c, d) = (m[0][0], m[0][1], m[1][0], m[1][1]);
    let fro2 = a * a + b * b + c * c + d * d;
    let det = (a * d - b * c).abs();
    if det == 0.0 {
        return f64::INFINITY;
    }
    // singular values s1 >= s2 satisfy s1^2 + s2^2 = fro2, s1 s2 = det
    let disc = (fro2 * fro2 - 4.0 * det * det).max(0.0).sqrt();
    let s1 = ((fro2 + disc) / 2.0).sqrt();
    s1 * s1 / det
}

/// Merges refined roots closer than `radius`, keeping the first of each cluster.
pub fn merge_roots(roots: &[Refined], radius: f64) -> Vec<Refined> {
    let mut out: Vec<Refined> = Vec::new();
    for r in roots {
        let dup = out.iter().any(|o| {
            (o.sample.x - r.sample.x).hypot(o.sample.y - r.sample.y) < radius
        });
        if !dup {
            out.push(r.clone());
        }
    }
    out
}
