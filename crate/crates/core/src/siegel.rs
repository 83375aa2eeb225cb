//! Period matrices, characteristics and the conventions shared by every
//! other module.
//!
//! Holomorphic differentials are never represented as functions: the
//! normalized basis `omega_1, ..., omega_g` (unit a-periods) is referred to by
//! index only, and a [`PeriodMatrix`] carries their b-periods. Bidifferential
//! coefficients elsewhere in the crate are matrices over the pairs
//! `(omega_i, omega_j)`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const ASYMMETRY_TOL: f64 = 1e-12;

/// `(Im tau)^{-1}`, real symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct ImInverse(DMatrix<f64>);

impl ImInverse {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    /// Quadratic form `v^T (Im tau)^{-1} v`.
    pub fn quad(&self, v: &[f64]) -> f64 {
        let g = v.len();
        let mut acc = 0.0;
        for i in 0..g {
            for j in 0..g {
                acc += v[i] * self.0[(i, j)] * v[j];
            }
        }
        acc
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let g = v.len();
        (0..g)
            .map(|i| (0..g).map(|j| self.0[(i, j)] * v[j]).sum())
            .collect()
    }
}

/// A point of the Siegel upper half-space: symmetric, with positive definite
/// imaginary part.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodMatrix {
    entries: DMatrix<Complex64>,
    re: DMatrix<f64>,
    im: DMatrix<f64>,
    im_inv: ImInverse,
    lambda_min: f64,
}

/// Validates and symmetrizes a square complex matrix.
pub fn validate_period_matrix(entries: &DMatrix<Complex64>) -> Result<PeriodMatrix> {
    let (rows, cols) = entries.shape();
    if rows != cols || rows == 0 {
        return Err(Error::NotSquare { rows, cols });
    }
    if entries.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
        return Err(Error::InvalidInput("non-finite period matrix entry".into()));
    }
    let g = rows;
    let scale = entries.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let mut asym: f64 = 0.0;
    for i in 0..g {
        for j in (i + 1)..g {
            asym = asym.max((entries[(i, j)] - entries[(j, i)]).norm());
        }
    }
    let rel = if scale > 0.0 { asym / scale } else { 0.0 };
    if rel >= ASYMMETRY_TOL {
        return Err(Error::NotSymmetric { asymmetry: rel });
    }

    let mut sym = entries.clone();
    for i in 0..g {
        for j in (i + 1)..g {
            let avg = (entries[(i, j)] + entries[(j, i)]) * 0.5;
            sym[(i, j)] = avg;
            sym[(j, i)] = avg;
        }
    }
    let re = sym.map(|c| c.re);
    let im = sym.map(|c| c.im);

    let eig = im.clone().symmetric_eigen();
    let lambda_min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    let chol = match im.clone().cholesky() {
        Some(c) if lambda_min > 0.0 => c,
        _ => return Err(Error::NotPositiveDefinite { min_eigenvalue: lambda_min }),
    };
    let mut inv = chol.inverse();
    for i in 0..g {
        for j in (i + 1)..g {
            let avg = 0.5 * (inv[(i, j)] + inv[(j, i)]);
            inv[(i, j)] = avg;
            inv[(j, i)] = avg;
        }
    }

    Ok(PeriodMatrix {
        entries: sym,
        re,
        im,
        im_inv: ImInverse(inv),
        lambda_min,
    })
}

#[derive(Debug, Serialize, Deserialize)]
struct TauFile {
    g: usize,
    re: Vec<Vec<f64>>,
    im: Vec<Vec<f64>>,
}

impl PeriodMatrix {
    pub fn new(entries: DMatrix<Complex64>) -> Result<Self> {
        validate_period_matrix(&entries)
    }

    /// Genus-one period matrix `[[tau]]`.
    pub fn genus_one(tau: Complex64) -> Result<Self> {
        validate_period_matrix(&DMatrix::from_element(1, 1, tau))
    }

    pub fn from_parts(re: &DMatrix<f64>, im: &DMatrix<f64>) -> Result<Self> {
        if re.shape() != im.shape() {
            return Err(Error::DimensionMismatch {
                expected: re.nrows() * re.ncols(),
                found: im.nrows() * im.ncols(),
            });
        }
        let entries = DMatrix::from_fn(re.nrows(), re.ncols(), |i, j| {
            Complex64::new(re[(i, j)], im[(i, j)])
        });
        validate_period_matrix(&entries)
    }

    /// Parses `{"g": n, "re": [[...]], "im": [[...]]}`.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: TauFile =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let g = file.g;
        if g == 0 {
            return Err(Error::InvalidInput("g must be positive".into()));
        }
        for rows in [&file.re, &file.im] {
            if rows.len() != g {
                return Err(Error::DimensionMismatch { expected: g, found: rows.len() });
            }
            if let Some(bad) = rows.iter().find(|r| r.len() != g) {
                return Err(Error::DimensionMismatch { expected: g, found: bad.len() });
            }
        }
        let re = DMatrix::from_fn(g, g, |i, j| file.re[i][j]);
        let im = DMatrix::from_fn(g, g, |i, j| file.im[i][j]);
        Self::from_parts(&re, &im)
    }

    pub fn to_json(&self) -> String {
        let g = self.g();
        let file = TauFile {
            g,
            re: (0..g).map(|i| (0..g).map(|j| self.re[(i, j)]).collect()).collect(),
            im: (0..g).map(|i| (0..g).map(|j| self.im[(i, j)]).collect()).collect(),
        };
        serde_json::to_string(&file).expect("tau serializes")
    }

    pub fn g(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn at(&self, i: usize, j: usize) -> Complex64 {
        self.entries[(i, j)]
    }

    pub fn re(&self) -> &DMatrix<f64> {
        &self.re
    }

    pub fn im(&self) -> &DMatrix<f64> {
        &self.im
    }

    pub fn im_inverse(&self) -> &ImInverse {
        &self.im_inv
    }

    /// Smallest eigenvalue of `Im tau`.
    pub fn min_im_eigenvalue(&self) -> f64 {
        self.lambda_min
    }

    /// `k * tau` for `k > 0`.
    pub fn scaled(&self, k: f64) -> Result<Self> {
        if !(k > 0.0) {
            return Err(Error::InvalidInput("scale factor must be positive".into()));
        }
        validate_period_matrix(&self.entries.map(|c| c * k))
    }

    /// `tau * v` for a real vector `v`.
    pub fn mul_real(&self, v: &[f64]) -> DVector<Complex64> {
        let g = self.g();
        DVector::from_fn(g, |i, _| (0..g).map(|j| self.entries[(i, j)] * v[j]).sum())
    }
}

/// Parity of a half-integer characteristic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
}

impl std::fmt::Display for Parity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Parity::Even => f.write_str("even"),
            Parity::Odd => f.write_str("odd"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct ExactParts {
    a_num: Vec<i64>,
    a_den: i64,
    b_num: Vec<i64>,
    b_den: i64,
}

/// A real pair `(a, b)` standing for the point `zeta = tau a + b`.
///
/// The half-integer flag and the parity are only ever derived from the exact
/// rational constructor; a characteristic built from floats has neither.
#[derive(Debug, Clone, PartialEq)]
pub struct Characteristic {
    a: Vec<f64>,
    b: Vec<f64>,
    exact: Option<ExactParts>,
    half_integer: bool,
    parity: Option<Parity>,
}

impl Characteristic {
    pub fn real(a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        if a.len() != b.len() {
            return Err(Error::DimensionMismatch { expected: a.len(), found: b.len() });
        }
        if a.iter().chain(&b).any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("non-finite characteristic entry".into()));
        }
        Ok(Characteristic { a, b, exact: None, half_integer: false, parity: None })
    }

    /// `a = a_num / a_den`, `b = b_num / b_den` componentwise.
    pub fn rational(a_num: &[i64], a_den: i64, b_num: &[i64], b_den: i64) -> Result<Self> {
        if a_num.len() != b_num.len() {
            return Err(Error::DimensionMismatch { expected: a_num.len(), found: b_num.len() });
        }
        if a_num.is_empty() {
            return Err(Error::InvalidInput("characteristic must have g >= 1".into()));
        }
        let (a_num, a_den) = normalize_sign(a_num, a_den)?;
        let (b_num, b_den) = normalize_sign(b_num, b_den)?;

        let twice_integral = |nums: &[i64], den: i64| {
            nums.iter().all(|&n| (2 * n as i128) % den as i128 == 0)
        };
        let half_integer = twice_integral(&a_num, a_den) && twice_integral(&b_num, b_den);

        let parity = if half_integer {
            // 4<a,b> = 4 sum(a_num b_num) / (a_den b_den), an integer here.
            let mut num: i128 = 0;
            for (x, y) in a_num.iter().zip(&b_num) {
                let term = (*x as i128)
                    .checked_mul(*y as i128)
                    .and_then(|t| t.checked_mul(4))
                    .ok_or_else(|| Error::InvalidInput("characteristic overflow".into()))?;
                num = num
                    .checked_add(term)
                    .ok_or_else(|| Error::InvalidInput("characteristic overflow".into()))?;
            }
            let den = a_den as i128 * b_den as i128;
            let q = num / den;
            Some(if q.rem_euclid(2) == 1 { Parity::Odd } else { Parity::Even })
        } else {
            None
        };

        let a = a_num.iter().map(|&n| n as f64 / a_den as f64).collect();
        let b = b_num.iter().map(|&n| n as f64 / b_den as f64).collect();
        Ok(Characteristic {
            a,
            b,
            exact: Some(ExactParts { a_num, a_den, b_num, b_den }),
            half_integer,
            parity,
        })
    }

    /// Half-integer characteristic from the integer vectors `2a`, `2b`.
    pub fn half_integer(two_a: &[i64], two_b: &[i64]) -> Result<Self> {
        Self::rational(two_a, 2, two_b, 2)
    }

    pub fn zero(g: usize) -> Self {
        Self::rational(&vec![0; g], 1, &vec![0; g], 1).expect("zero characteristic")
    }

    /// All `4^g` characteristics with entries in `{0, 1/2}`, ordered by the
    /// binary digits of `(2a, 2b)` read left to right.
    pub fn all_half_integer(g: usize) -> Vec<Self> {
        let n = 2 * g;
        (0..(1usize << n))
            .map(|mask| {
                let bits: Vec<i64> = (0..n).map(|k| ((mask >> (n - 1 - k)) & 1) as i64).collect();
                Self::half_integer(&bits[..g], &bits[g..]).expect("valid half-integer")
            })
            .collect()
    }

    pub fn odd_half_integer(g: usize) -> Vec<Self> {
        Self::all_half_integer(g)
            .into_iter()
            .filter(|c| c.parity == Some(Parity::Odd))
            .collect()
    }

    /// Parses `{"a_num": [...], "a_den": d, "b_num": [...], "b_den": d}`.
    pub fn from_json(text: &str) -> Result<Self> {
        let parts: ExactParts =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        Self::rational(&parts.a_num, parts.a_den, &parts.b_num, parts.b_den)
    }

    pub fn to_json(&self) -> Option<String> {
        self.exact.as_ref().map(|p| serde_json::to_string(p).expect("serializes"))
    }

    pub fn g(&self) -> usize {
        self.a.len()
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn is_half_integer(&self) -> bool {
        self.half_integer
    }

    pub fn parity(&self) -> Option<Parity> {
        self.parity
    }

    pub fn is_odd(&self) -> bool {
        self.parity == Some(Parity::Odd)
    }

    /// `zeta = tau a + b`.
    pub fn point(&self, tau: &PeriodMatrix) -> DVector<Complex64> {
        let ta = tau.mul_real(&self.a);
        DVector::from_fn(self.g(), |i, _| ta[i] + self.b[i])
    }

    /// Shifts `a` by an integer vector; the function `theta[zeta]` changes
    /// only by reindexing the series.
    pub fn shift_a(&self, shift: &[i64]) -> Result<Self> {
        match &self.exact {
            Some(p) => {
                let a_num: Vec<i64> = p
                    .a_num
                    .iter()
                    .zip(shift)
                    .map(|(n, s)| n + s * p.a_den)
                    .collect();
                Self::rational(&a_num, p.a_den, &p.b_num, p.b_den)
            }
            None => Self::real(
                self.a.iter().zip(shift).map(|(a, s)| a + *s as f64).collect(),
                self.b.clone(),
            ),
        }
    }
}

fn normalize_sign(nums: &[i64], den: i64) -> Result<(Vec<i64>, i64)> {
    if den == 0 {
        return Err(Error::InvalidInput("zero denominator".into()));
    }
    let bound = 1i64 << 40;
    if den.abs() > bound || nums.iter().any(|n| n.abs() > bound) {
        return Err(Error::InvalidInput("characteristic entries exceed 2^40".into()));
    }
    if den < 0 {
        Ok((nums.iter().map(|n| -n).collect(), -den))
    } else {
        Ok((nums.to_vec(), den))
    }
}

/// Decomposes `zeta = tau a + b` with `a, b` real.
pub fn characteristic_from_point(zeta: &[Complex64], tau: &PeriodMatrix) -> Result<Characteristic> {
    let g = tau.g();
    if zeta.len() != g {
        return Err(Error::DimensionMismatch { expected: g, found: zeta.len() });
    }
    let im_zeta: Vec<f64> = zeta.iter().map(|c| c.im).collect();
    let a = tau.im_inverse().apply(&im_zeta);
    let b = (0..g)
        .map(|i| zeta[i].re - (0..g).map(|j| tau.re()[(i, j)] * a[j]).sum::<f64>())
        .collect();
    Characteristic::real(a, b)
}

pub fn parity(c: &Characteristic) -> Result<Parity> {
    c.parity().ok_or(Error::NotHalfInteger)
}
