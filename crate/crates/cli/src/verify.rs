//! The `verify` umbrella: every identity the library can check at desk scale,
//! run from one seed and reported as a flat list of named checks.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;
use theta_bidiff::bidiff::{
    coincidence_residual, gunning_residual, pullback_coefficients, sigma_correction, v00_kernel_dimension,
    Section,
};
use theta_bidiff::fay::{
    a12_b12_check, biresidue_g1, expected_b_period, omega_g1, period_check, pullback_identity_residual,
    trisecant_residual, TrisecantConfig,
};
use theta_bidiff::locus::{refine, residuals, scan, sigma_heat_g1, w_jet, ScanGrid};
use theta_bidiff::sot::{gram_matrix_g1, sot_jet0, sot_value, SecondOrderIndex};
use theta_bidiff::theta::theta_value;
use theta_bidiff::{Characteristic, PeriodMatrix, Precision, Result};

use crate::config::RunConfig;
use crate::sampling::{named_rng, random_point, random_tau, random_tau_g1};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// `measured < tolerance`
    Below,
    /// `measured > tolerance`
    Above,
    /// `measured >= tolerance`
    AtLeast,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    /// The identity or claim being checked.
    pub claim: String,
    pub measured: Option<f64>,
    pub relation: Relation,
    pub tolerance: f64,
    pub passed: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub eps_value: f64,
    pub eps_jet: f64,
    pub lattice_cap: usize,
    pub threads: usize,
    pub passed: usize,
    pub failed: usize,
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.failed == 0
    }

    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!(
            "# seed={}\n# eps_value={:?}\n# eps_jet={:?}\n# lattice_cap={}\n# threads={}\n",
            self.seed, self.eps_value, self.eps_jet, self.lattice_cap, self.threads
        );
        out.push_str("name,passed,measured,relation,tolerance,error,claim\n");
        for c in &self.checks {
            let measured = c.measured.map(|m| format!("{m:?}")).unwrap_or_default();
            let relation = match c.relation {
                Relation::Below => "below",
                Relation::Above => "above",
                Relation::AtLeast => "at_least",
            };
            out.push_str(&format!(
                "{},{},{},{},{:?},{},\"{}\"\n",
                c.name,
                c.passed,
                measured,
                relation,
                c.tolerance,
                c.error.as_deref().unwrap_or(""),
                c.claim.replace('"', "\"\"")
            ));
        }
        out
    }
}

struct Runner {
    checks: Vec<CheckResult>,
}

impl Runner {
    fn run(&mut self, name: &str, claim: &str, relation: Relation, tolerance: f64, f: impl FnOnce() -> Result<f64>) {
        let (measured, error) = match f() {
            Ok(v) => (Some(v), None),
            Err(e) => (None, Some(e.name().to_string())),
        };
        let passed = match measured {
            Some(m) => match relation {
                Relation::Below => m < tolerance,
                Relation::Above => m > tolerance,
                Relation::AtLeast => m >= tolerance,
            },
            None => false,
        };
        // serde_json cannot encode non-finite numbers
        let measured = measured.filter(|m| m.is_finite());
        self.checks.push(CheckResult {
            name: name.to_string(),
            claim: claim.to_string(),
            measured,
            relation,
            tolerance,
            passed,
            error,
        });
    }
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn g1(t: Complex64) -> Result<PeriodMatrix> {
    PeriodMatrix::genus_one(t)
}

fn rho() -> Complex64 {
    c(0.5, 3f64.sqrt() / 2.0)
}

/// Direct sum of `-(2 pi m n)^2 exp(-pi (m^2 + n^2))` over `|m|, |n| <= 8`.
fn wxx_at_i_direct() -> f64 {
    let mut acc = 0.0;
    for m in -8i32..=8 {
        for n in -8i32..=8 {
            let mn = (m * n) as f64;
            acc -= (2.0 * PI * mn).powi(2) * (-PI * (m * m + n * n) as f64).exp();
        }
    }
    acc
}

const WINDOW_X: (f64, f64) = (-0.5, 0.5);
const WINDOW_Y: (f64, f64) = (0.6, 2.0);

/// Runs every check. Individual failures become report entries.
pub fn verify_all(cfg: &RunConfig) -> VerifyReport {
    let p = cfg.precision();
    let seed = cfg.seed;
    let eps_w = cfg.eps_value;
    let mut r = Runner { checks: Vec::new() };

    // coincidence locus
    r.run(
        "coincidence.special_points",
        "sigma equals eta at tau = i and tau = exp(i pi / 3)",
        Relation::Below,
        1e-8,
        || Ok(coincidence_residual(&g1(c(0.0, 1.0))?, &p)?.max(coincidence_residual(&g1(rho())?, &p)?)),
    );
    r.run(
        "locus.special_points",
        "w_x = 0 and 2 y w_y + w = 0 at (0, 1) and (1/2, sqrt(3)/2)",
        Relation::Below,
        1e-9,
        || Ok(residuals(0.0, 1.0, eps_w)?.res.max(residuals(0.5, rho().im, eps_w)?.res)),
    );
    r.run(
        "coincidence.generic_point",
        "sigma differs from eta at tau = 0.3 + 1.1 i",
        Relation::Above,
        1e-3,
        || coincidence_residual(&g1(c(0.3, 1.1))?, &p),
    );
    r.run(
        "coincidence.random_window",
        "residual above 1e-3 at random tau in [-0.5, 0.5] x [0.6, 2.0] (count of 100)",
        Relation::AtLeast,
        95.0,
        || {
            let mut rng = named_rng(seed, "coincidence.random_window");
            let mut count = 0;
            for _ in 0..100 {
                let t = random_tau_g1(&mut rng, WINDOW_X, WINDOW_Y);
                if coincidence_residual(&g1(t)?, &p)? > 1e-3 {
                    count += 1;
                }
            }
            Ok(count as f64)
        },
    );
    r.run("locus.wx_on_axis", "w_x(0, 1) = 0", Relation::Below, 1e-12, || Ok(w_jet(0.0, 1.0, eps_w)?.w_x.abs()));
    r.run("locus.wxx_negative", "w_xx(0, 1) < -0.1", Relation::Below, -0.1, || Ok(w_jet(0.0, 1.0, eps_w)?.w_xx));
    r.run(
        "locus.wxx_direct_sum",
        "w_xx(0, 1) agrees with the direct sum over |m|, |n| <= 8",
        Relation::Below,
        1e-12,
        || {
            let direct = wxx_at_i_direct();
            Ok((w_jet(0.0, 1.0, eps_w)?.w_xx - direct).abs() / direct.abs())
        },
    );
    r.run(
        "locus.refine_i",
        "Newton from (0.05, 0.95) lands on (0, 1)",
        Relation::Below,
        1e-8,
        || {
            let s = refine(0.05, 0.95, eps_w, 50, 1.0)?.sample;
            Ok(s.x.abs().max((s.y - 1.0).abs()))
        },
    );
    r.run(
        "locus.refine_rho",
        "Newton from (0.45, 0.9) lands on (1/2, sqrt(3)/2)",
        Relation::Below,
        1e-8,
        || {
            let s = refine(0.45, 0.9, eps_w, 50, 1.0)?.sample;
            Ok((s.x - 0.5).abs().max((s.y - rho().im).abs()))
        },
    );
    // The corners (+-1/2, 1/2) of this window are modular images of i and
    // vanish as well, so the minimum is shared up to rounding.
    let scan_window = || -> Result<Vec<theta_bidiff::locus::LocusSample>> {
        scan(&ScanGrid::new(-0.5, 0.5, 0.5, 1.5, 101, 101)?, eps_w)
    };
    r.run(
        "locus.scan_minimum",
        "on [-0.5, 0.5] x [0.5, 1.5] (101 x 101) the grid point (0, 1) attains the minimum of res up to rounding",
        Relation::Below,
        1e-14,
        || {
            let samples = scan_window()?;
            let least = samples.iter().map(|s| s.res).filter(|r| r.is_finite()).fold(f64::INFINITY, f64::min);
            let at_i = samples[50 * 101 + 50].res;
            Ok(at_i - least)
        },
    );
    r.run(
        "locus.scan_rounding_level_points",
        "grid points with res < 1e-12 other than (0, 1) and (+-1/2, 1/2)",
        Relation::Below,
        0.5,
        || {
            let samples = scan_window()?;
            let known = |x: f64, y: f64| (x == 0.0 && y == 1.0) || (x.abs() == 0.5 && y == 0.5);
            Ok(samples.iter().filter(|s| s.res < 1e-12 && !known(s.x, s.y)).count() as f64)
        },
    );
    r.run(
        "locus.scan_symmetry",
        "res(x, y) = res(-x, y) on a symmetric window",
        Relation::Below,
        1e-12,
        || {
            let grid = ScanGrid::new(-0.4, 0.4, 0.7, 1.3, 9, 7)?;
            let s = scan(&grid, eps_w)?;
            let mut worst: f64 = 0.0;
            for j in 0..grid.ny {
                for i in 0..grid.nx {
                    let a = &s[j * grid.nx + i];
                    let b = &s[j * grid.nx + grid.nx - 1 - i];
                    worst = worst.max((a.res - b.res).abs());
                }
            }
            Ok(worst)
        },
    );
    r.run(
        "locus.isolation_at_i",
        "smallest res on circles of radius 0.02, 0.05, 0.1 around (0, 1); no other root nearby",
        Relation::Above,
        1e-6,
        || {
            let mut least = f64::INFINITY;
            for radius in [0.02, 0.05, 0.1] {
                for k in 0..64 {
                    let a = 2.0 * PI * k as f64 / 64.0;
                    least = least.min(residuals(radius * a.cos(), 1.0 + radius * a.sin(), eps_w)?.res);
                }
            }
            Ok(least)
        },
    );

    // kernel of the evaluation map on second-order thetas
    for (g, expected) in [(1usize, 0usize), (2, 0), (3, 1)] {
        r.run(
            &format!("v00.dimension_g{g}"),
            &format!("kernel dimension is {expected} at 5 random tau (mismatches counted)"),
            Relation::Below,
            0.5,
            || {
                let mut rng = named_rng(seed, &format!("v00.g{g}"));
                let mut bad = 0;
                for _ in 0..5 {
                    if v00_kernel_dimension(&random_tau(&mut rng, g), &p, 1e-8)? != expected {
                        bad += 1;
                    }
                }
                Ok(bad as f64)
            },
        );
    }

    // trisecant identity and the canonical bidifferential
    r.run(
        "fay.trisecant",
        "A = B for 100 random configurations at each of tau = i, 0.3 + 1.1 i, exp(i pi / 3)",
        Relation::Below,
        1e-9,
        || {
            let mut rng = named_rng(seed, "fay.trisecant");
            let mut worst: f64 = 0.0;
            for t in [c(0.0, 1.0), c(0.3, 1.1), rho()] {
                let tau = g1(t)?;
                for _ in 0..100 {
                    let cfg = TrisecantConfig::new(
                        tau.clone(),
                        random_point(&mut rng),
                        (random_point(&mut rng), random_point(&mut rng)),
                        (random_point(&mut rng), random_point(&mut rng)),
                    )?;
                    worst = worst.max(trisecant_residual(&cfg, &p)?);
                }
            }
            Ok(worst)
        },
    );
    r.run(
        "fay.trisecant_w_zero",
        "A = B with w = 0 at 20 random configurations",
        Relation::Below,
        1e-9,
        || {
            let mut rng = named_rng(seed, "fay.trisecant_w_zero");
            let tau = g1(c(0.3, 1.1))?;
            let mut worst: f64 = 0.0;
            for _ in 0..20 {
                let cfg = TrisecantConfig::new(
                    tau.clone(),
                    c(0.0, 0.0),
                    (random_point(&mut rng), random_point(&mut rng)),
                    (random_point(&mut rng), random_point(&mut rng)),
                )?;
                worst = worst.max(trisecant_residual(&cfg, &p)?);
            }
            Ok(worst)
        },
    );
    r.run(
        "fay.mixed_partials",
        "finite-difference A_12 and B_12 match their closed forms and each other",
        Relation::Below,
        1e-5,
        || {
            let mut rng = named_rng(seed, "fay.mixed_partials");
            let tau = g1(c(0.0, 1.0))?;
            let mut worst: f64 = 0.0;
            for _ in 0..5 {
                let w = c(rng.random_range(-0.5..0.5), rng.random_range(-0.3..0.3));
                let a1 = c(rng.random_range(0.1..0.5), rng.random_range(-0.3..0.3));
                let a2 = c(rng.random_range(-0.5..-0.1), rng.random_range(-0.3..0.3));
                let m = a12_b12_check(w, a1, a2, &tau, &p, 1e-4)?;
                worst = worst.max(m.res_a).max(m.res_b).max(m.res_ab);
            }
            Ok(worst)
        },
    );
    let p_pt = c(0.21, 0.37);
    r.run("omega.a_period", "a-period of Omega(p, .) vanishes at tau = i", Relation::Below, 1e-7, || {
        let rep = period_check(&g1(c(0.0, 1.0))?, p_pt, None, 128, &p)?;
        Ok(c(rep.a_period[0], rep.a_period[1]).norm())
    });
    r.run("omega.b_period", "b-period of Omega(p, .) equals 2 pi i at tau = i", Relation::Below, 1e-6, || {
        let rep = period_check(&g1(c(0.0, 1.0))?, p_pt, None, 128, &p)?;
        Ok((c(rep.b_period[0], rep.b_period[1]) - expected_b_period()).norm())
    });
    r.run(
        "omega.period_shortcut",
        "quadrature periods agree with differences of the log-derivative",
        Relation::Below,
        1e-9,
        || {
            let rep = period_check(&g1(c(0.0, 1.0))?, p_pt, None, 128, &p)?;
            let da = c(rep.a_period[0] - rep.a_shortcut[0], rep.a_period[1] - rep.a_shortcut[1]).norm();
            let db = c(rep.b_period[0] - rep.b_shortcut[0], rep.b_period[1] - rep.b_shortcut[1]).norm();
            Ok(da.max(db))
        },
    );
    r.run(
        "omega.biresidue",
        "extrapolated (z1 - z2)^2 Omega(z1, z2) tends to 1 on the diagonal",
        Relation::Below,
        1e-4,
        || Ok((biresidue_g1(c(0.2, 0.3), &g1(c(0.1, 1.2))?, &p)? - 1.0).norm()),
    );
    r.run("omega.symmetry", "Omega(z1, z2) = Omega(z2, z1)", Relation::Below, 1e-12, || {
        let tau = g1(c(0.1, 1.2))?;
        let (z1, z2) = (c(0.3, 0.1), c(-0.2, 0.25));
        let a = omega_g1(z1, z2, &tau, &p)?;
        Ok((a - omega_g1(z2, z1, &tau, &p)?).norm() / a.norm())
    });
    r.run(
        "pullback.scalar_identity_g1",
        "s_w(x - y) theta[zeta]'(0)^2 = theta[zeta](x - y)^2 (s_w(0) Omega + s_w''(0) / 2) at 20 pairs",
        Relation::Below,
        1e-9,
        || {
            let mut rng = named_rng(seed, "pullback.scalar_identity_g1");
            let tau = g1(c(0.3, 1.1))?;
            let mut worst: f64 = 0.0;
            for _ in 0..20 {
                let (w, x, y) = (random_point(&mut rng), random_point(&mut rng), random_point(&mut rng));
                worst = worst.max(pullback_identity_residual(w, x, y, &tau, &p)?);
            }
            Ok(worst)
        },
    );
    r.run(
        "pullback.point_vs_basis",
        "pullback coefficients of s_w agree with those of its expansion in second-order thetas (g = 2)",
        Relation::Below,
        1e-10,
        || {
            let mut rng = named_rng(seed, "pullback.point_vs_basis");
            let tau = random_tau(&mut rng, 2);
            let w = vec![c(0.1, 0.05), c(-0.2, 0.1)];
            let coeffs: Vec<Complex64> = SecondOrderIndex::all(2)
                .iter()
                .map(|u| sot_value(u, &w, &tau, &p))
                .collect::<Result<_>>()?;
            let a = pullback_coefficients(&Section::Point(w), &tau, &p)?;
            let b = pullback_coefficients(&Section::Basis(coeffs), &tau, &p)?;
            let scale = a.omega_coeff.norm() + a.holo_matrix.iter().map(|v| v.norm()).fold(0.0, f64::max);
            let d = (a.omega_coeff - b.omega_coeff)
                .norm()
                .max((&a.holo_matrix - &b.holo_matrix).iter().map(|v| v.norm()).fold(0.0, f64::max));
            Ok(d / scale)
        },
    );

    // Gunning identity and heat equation
    r.run(
        "gunning.odd_characteristics",
        "2 theta[zeta]_i theta[zeta]_j = c(zeta) (s_zeta)_ij at the origin, odd zeta, g = 1, 2",
        Relation::Below,
        1e-9,
        || {
            let mut rng = named_rng(seed, "gunning");
            let mut worst: f64 = 0.0;
            for g in 1..=2 {
                for _ in 0..5 {
                    let tau = random_tau(&mut rng, g);
                    for ch in Characteristic::odd_half_integer(g) {
                        worst = worst.max(gunning_residual(&ch, &tau, &p)?);
                    }
                }
            }
            Ok(worst)
        },
    );
    r.run(
        "heat.termwise",
        "Hess theta_u(0) = 8 pi i / (2 - delta) d theta_u / d tau, g = 1, 2, 3",
        Relation::Below,
        1e-12,
        || {
            let mut rng = named_rng(seed, "heat.termwise");
            let mut worst: f64 = 0.0;
            for g in 1..=3 {
                let tau = random_tau(&mut rng, g);
                for u in SecondOrderIndex::all(g) {
                    let j = sot_jet0(&u, &tau, &p)?;
                    let scale = j.hessian0.iter().map(|v| v.norm()).fold(0.0, f64::max);
                    for a in 0..g {
                        for b in 0..g {
                            let factor = if a == b { 1.0 } else { 2.0 };
                            let heat = c(0.0, 8.0 * PI / factor) * j.tau_deriv[(a, b)];
                            worst = worst.max((heat - j.hessian0[(a, b)]).norm() / scale);
                        }
                    }
                }
            }
            Ok(worst)
        },
    );
    r.run(
        "heat.tau_differences",
        "d theta_u(0) / d tau_ij agrees with central differences in tau, g = 1, 2, 3",
        Relation::Below,
        1e-6,
        || heat_fd(seed, &p),
    );
    r.run(
        "gram.orthogonality",
        "largest off-diagonal / diagonal ratio of the genus-one Gram matrix (10 tau, N = 128)",
        Relation::Below,
        1e-7,
        || {
            let mut rng = named_rng(seed, "gram");
            let mut worst: f64 = 0.0;
            for _ in 0..10 {
                let m = gram_matrix_g1(&random_tau(&mut rng, 1), 128, &p)?;
                worst = worst.max(m[(0, 1)].norm() / m[(0, 0)].norm()).max(m[(1, 0)].norm() / m[(1, 1)].norm());
            }
            Ok(worst)
        },
    );
    r.run(
        "gram.equal_norms",
        "diagonal entries of the genus-one Gram matrix agree (10 tau, N = 128)",
        Relation::Below,
        1e-7,
        || {
            let mut rng = named_rng(seed, "gram");
            let mut worst: f64 = 0.0;
            for _ in 0..10 {
                let m = gram_matrix_g1(&random_tau(&mut rng, 1), 128, &p)?;
                worst = worst.max((m[(1, 1)] / m[(0, 0)] - 1.0).norm());
            }
            Ok(worst)
        },
    );

    // cross-module consistency on a 21 x 21 grid
    r.run(
        "oracle.w_routes",
        "lattice sum w equals |theta_0(0)|^2 + |theta_{1/2}(0)|^2 on a 21 x 21 grid",
        Relation::Below,
        1e-11,
        || {
            let origin = [c(0.0, 0.0)];
            let mut worst: f64 = 0.0;
            for (x, y) in grid21() {
                let tau = g1(c(x, y))?;
                let mut via = 0.0;
                for u in SecondOrderIndex::all(1) {
                    via += sot_value(&u, &origin, &tau, &p)?.norm_sqr();
                }
                let direct = w_jet(x, y, eps_w)?.w;
                worst = worst.max((direct - via).abs() / direct);
            }
            Ok(worst)
        },
    );
    r.run(
        "oracle.sigma_routes",
        "sigma from second-order thetas equals 4 pi i w_tau / w on a 21 x 21 grid",
        Relation::Below,
        1e-9,
        || {
            let mut worst: f64 = 0.0;
            for (x, y) in grid21() {
                let s = sigma_correction(&g1(c(x, y))?, &p)?.entries[(0, 0)];
                worst = worst.max((s - sigma_heat_g1(x, y, eps_w)?).norm());
            }
            Ok(worst)
        },
    );
    r.run(
        "theta.quasi_periodicity",
        "theta(z + n + tau m) = exp(-pi i m tau m - 2 pi i m z) theta(z), 20 random cases, g = 2",
        Relation::Below,
        1e-11,
        || {
            let mut rng = named_rng(seed, "theta.quasi_periodicity");
            let mut worst: f64 = 0.0;
            for _ in 0..20 {
                let tau = random_tau(&mut rng, 2);
                let z = vec![random_point(&mut rng) * 0.5, random_point(&mut rng) * 0.5];
                let n: Vec<f64> = (0..2).map(|_| rng.random_range(-2i32..=2) as f64).collect();
                let m: Vec<f64> = (0..2).map(|_| rng.random_range(-1i32..=1) as f64).collect();
                let tm = tau.mul_real(&m);
                let shifted: Vec<Complex64> = (0..2).map(|i| z[i] + n[i] + tm[i]).collect();
                let mtm: Complex64 = (0..2).map(|i| tm[i] * m[i]).sum();
                let mz: Complex64 = (0..2).map(|i| z[i] * m[i]).sum();
                let factor = (c(0.0, -PI) * (mtm + mz * 2.0)).exp();
                let lhs = theta_value(&shifted, &tau, &p)?;
                let rhs = factor * theta_value(&z, &tau, &p)?;
                let y: Vec<f64> = shifted.iter().map(|v| v.im).collect();
                let env = (PI * tau.im_inverse().quad(&y)).exp();
                worst = worst.max((lhs - rhs).norm() / env);
            }
            Ok(worst)
        },
    );

    let failed = r.checks.iter().filter(|c| !c.passed).count();
    VerifyReport {
        seed,
        eps_value: cfg.eps_value,
        eps_jet: cfg.eps_jet,
        lattice_cap: cfg.lattice_cap,
        threads: cfg.threads,
        passed: r.checks.len() - failed,
        failed,
        checks: r.checks,
    }
}

fn grid21() -> impl Iterator<Item = (f64, f64)> {
    (0..21).flat_map(|i| {
        (0..21).map(move |j| (WINDOW_X.0 + i as f64 / 20.0, WINDOW_Y.0 + (WINDOW_Y.1 - WINDOW_Y.0) * j as f64 / 20.0))
    })
}

fn heat_fd(seed: u64, p: &Precision) -> Result<f64> {
    let mut rng = named_rng(seed, "heat.tau_differences");
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for g in 1..=3 {
        let tau = random_tau(&mut rng, g);
        let origin = vec![c(0.0, 0.0); g];
        for u in SecondOrderIndex::all(g) {
            let j = sot_jet0(&u, &tau, p)?;
            for a in 0..g {
                for b in a..g {
                    let mut bump = nalgebra::DMatrix::zeros(g, g);
                    bump[(a, b)] = c(h, 0.0);
                    bump[(b, a)] = c(h, 0.0);
                    let plus = PeriodMatrix::new(tau.entries() + &bump)?;
                    let minus = PeriodMatrix::new(tau.entries() - &bump)?;
                    let fd = (sot_value(&u, &origin, &plus, p)? - sot_value(&u, &origin, &minus, p)?) / (2.0 * h);
                    worst = worst.max((fd - j.tau_deriv[(a, b)]).norm() / (1.0 + fd.norm()));
                }
            }
        }
    }
    Ok(worst)
}
