//! Acceptance gate: twelve criteria at their fixed tolerances, one line each.

use std::f64::consts::PI;
use std::process::Command;

use num_complex::Complex64;
use rand::Rng;
use theta_bidiff::bidiff::{coincidence_residual, gunning_residual, sigma_correction, v00_kernel_dimension};
use theta_bidiff::fay::{
    a12_b12_check, biresidue_g1, expected_b_period, period_check, pullback_identity_residual,
    trisecant_residual, TrisecantConfig,
};
use theta_bidiff::locus::{residuals, sigma_heat_g1, w_jet};
use theta_bidiff::sot::{gram_matrix_g1, sot_jet0, sot_value, SecondOrderIndex};
use theta_bidiff::{Characteristic, PeriodMatrix, Precision};
use theta_bidiff_cli::sampling::{named_rng, random_point, random_tau, random_tau_g1};

const SEED: u64 = 20_240_601;
const EPS_W: f64 = 1e-13;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn g1(t: Complex64) -> PeriodMatrix {
    PeriodMatrix::genus_one(t).unwrap()
}

fn rho() -> Complex64 {
    c(0.5, 3f64.sqrt() / 2.0)
}

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn special_points() -> Outcome {
    let p = Precision::default();
    let a = coincidence_residual(&g1(c(0.0, 1.0)), &p).unwrap();
    let b = coincidence_residual(&g1(rho()), &p).unwrap();
    let la = residuals(0.0, 1.0, EPS_W).unwrap().res;
    let lb = residuals(0.5, rho().im, EPS_W).unwrap().res;
    outcome(
        a < 1e-8 && b < 1e-8 && la < 1e-9 && lb < 1e-9,
        format!("matrix residuals {a:.2e}, {b:.2e} (< 1e-8); locus residuals {la:.2e}, {lb:.2e} (< 1e-9)"),
    )
}

fn generic_noncoincidence() -> Outcome {
    let p = Precision::default();
    let single = coincidence_residual(&g1(c(0.3, 1.1)), &p).unwrap();
    let mut rng = named_rng(SEED, "acceptance.window");
    let mut above = 0;
    for _ in 0..100 {
        let t = random_tau_g1(&mut rng, (-0.5, 0.5), (0.6, 2.0));
        if coincidence_residual(&g1(t), &p).unwrap() > 1e-3 {
            above += 1;
        }
    }
    outcome(
        single > 1e-3 && above >= 95,
        format!("residual at 0.3+1.1i = {single:.3e} (> 1e-3); {above}/100 random tau above 1e-3 (>= 95)"),
    )
}

fn sign_check() -> Outcome {
    let j = w_jet(0.0, 1.0, EPS_W).unwrap();
    let mut direct = 0.0;
    for m in -8i32..=8 {
        for n in -8i32..=8 {
            direct -= (2.0 * PI * (m * n) as f64).powi(2) * (-PI * (m * m + n * n) as f64).exp();
        }
    }
    let agree = (j.w_xx - direct).abs() < 1e-12 * direct.abs();
    outcome(
        j.w_x.abs() < 1e-12 && j.w_xx < 0.0 && j.w_xx.abs() > 0.1 && agree,
        format!("w_x(0,1) = {:.1e}; w_xx(0,1) = {:.12} (direct sum {:.12})", j.w_x, j.w_xx, direct),
    )
}

fn v00_dimensions() -> Outcome {
    let p = Precision::default();
    let mut dims = Vec::new();
    let mut ok = true;
    for (g, expected) in [(1, 0), (2, 0), (3, 1)] {
        let mut rng = named_rng(SEED, &format!("acceptance.v00.g{g}"));
        let found: Vec<usize> =
            (0..5).map(|_| v00_kernel_dimension(&random_tau(&mut rng, g), &p, 1e-8).unwrap()).collect();
        ok &= found.iter().all(|&d| d == expected);
        dims.push(format!("g={g}: {found:?}"));
    }
    outcome(ok, dims.join("; "))
}

fn trisecant() -> Outcome {
    let p = Precision::default();
    let mut rng = named_rng(SEED, "acceptance.trisecant");
    let mut worst: f64 = 0.0;
    for t in [c(0.0, 1.0), c(0.3, 1.1), rho()] {
        let tau = g1(t);
        for _ in 0..100 {
            let cfg = TrisecantConfig::new(
                tau.clone(),
                random_point(&mut rng),
                (random_point(&mut rng), random_point(&mut rng)),
                (random_point(&mut rng), random_point(&mut rng)),
            )
            .unwrap();
            worst = worst.max(trisecant_residual(&cfg, &p).unwrap());
        }
    }
    let m = a12_b12_check(c(0.13, 0.21), c(0.31, -0.12), c(-0.27, 0.18), &g1(c(0.0, 1.0)), &p, 1e-4).unwrap();
    outcome(
        worst < 1e-9 && m.res_ab < 1e-5,
        format!("max trisecant residual {worst:.2e} (< 1e-9); |A12 - B12| relative {:.2e} (< 1e-5)", m.res_ab),
    )
}

fn gunning() -> Outcome {
    let p = Precision::default();
    let mut rng = named_rng(SEED, "acceptance.gunning");
    let mut worst: f64 = 0.0;
    for g in 1..=2 {
        for _ in 0..5 {
            let tau = random_tau(&mut rng, g);
            for ch in Characteristic::odd_half_integer(g) {
                worst = worst.max(gunning_residual(&ch, &tau, &p).unwrap());
            }
        }
    }
    outcome(worst < 1e-9, format!("max relative error {worst:.2e} (< 1e-9)"))
}

fn heat_equation() -> Outcome {
    let p = Precision::default();
    let mut rng = named_rng(SEED, "acceptance.heat");
    let (mut termwise, mut fd_err): (f64, f64) = (0.0, 0.0);
    let h = 1e-5;
    for g in 1..=3 {
        let tau = random_tau(&mut rng, g);
        let origin = vec![c(0.0, 0.0); g];
        for u in SecondOrderIndex::all(g) {
            let j = sot_jet0(&u, &tau, &p).unwrap();
            let scale = j.hessian0.iter().map(|v| v.norm()).fold(0.0, f64::max);
            for a in 0..g {
                for b in 0..g {
                    let factor = if a == b { 1.0 } else { 2.0 };
                    let heat = c(0.0, 8.0 * PI / factor) * j.tau_deriv[(a, b)];
                    termwise = termwise.max((heat - j.hessian0[(a, b)]).norm() / scale);
                    if b < a {
                        continue;
                    }
                    let mut bump = nalgebra::DMatrix::zeros(g, g);
                    bump[(a, b)] = c(h, 0.0);
                    bump[(b, a)] = c(h, 0.0);
                    let plus = PeriodMatrix::new(tau.entries() + &bump).unwrap();
                    let minus = PeriodMatrix::new(tau.entries() - &bump).unwrap();
                    let fd = (sot_value(&u, &origin, &plus, &p).unwrap() - sot_value(&u, &origin, &minus, &p).unwrap())
                        / (2.0 * h);
                    fd_err = fd_err.max((fd - j.tau_deriv[(a, b)]).norm() / (1.0 + fd.norm()));
                }
            }
        }
    }
    outcome(
        termwise < 1e-12 && fd_err < 1e-6,
        format!("termwise {termwise:.2e} (< 1e-12); tau differences {fd_err:.2e} (< 1e-6); g = 1, 2, 3"),
    )
}

fn gram() -> Outcome {
    let p = Precision::default();
    let mut rng = named_rng(SEED, "acceptance.gram");
    let (mut off, mut diag): (f64, f64) = (0.0, 0.0);
    for _ in 0..10 {
        let m = gram_matrix_g1(&random_tau(&mut rng, 1), 128, &p).unwrap();
        off = off.max(m[(0, 1)].norm() / m[(0, 0)].norm()).max(m[(1, 0)].norm() / m[(1, 1)].norm());
        diag = diag.max((m[(1, 1)] / m[(0, 0)] - 1.0).norm());
    }
    outcome(
        off < 1e-7 && diag < 1e-7,
        format!("off/diag {off:.2e} (< 1e-7); |diag ratio - 1| {diag:.2e} (< 1e-7); 10 tau, N = 128"),
    )
}

fn canonical_bidifferential() -> Outcome {
    let p = Precision::default();
    let rep = period_check(&g1(c(0.0, 1.0)), c(0.21, 0.37), None, 128, &p).unwrap();
    let a = c(rep.a_period[0], rep.a_period[1]).norm();
    let b = (c(rep.b_period[0], rep.b_period[1]) - expected_b_period()).norm();
    let res = (biresidue_g1(c(0.2, 0.3), &g1(c(0.1, 1.2)), &p).unwrap() - 1.0).norm();
    outcome(
        a < 1e-7 && b < 1e-6 && res < 1e-4,
        format!("a-period {a:.2e} (< 1e-7); |b-period - 2 pi i| {b:.2e} (< 1e-6); |biresidue - 1| {res:.2e} (< 1e-4)"),
    )
}

fn pullback_identity() -> Outcome {
    let p = Precision::default();
    let mut rng = named_rng(SEED, "acceptance.pullback");
    let tau = g1(c(0.3, 1.1));
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let (w, x, y) = (random_point(&mut rng), random_point(&mut rng), random_point(&mut rng));
        worst = worst.max(pullback_identity_residual(w, x, y, &tau, &p).unwrap());
    }
    outcome(worst < 1e-9, format!("max relative residual {worst:.2e} over 20 pairs (< 1e-9)"))
}

fn oracle_consistency() -> Outcome {
    let p = Precision::default();
    let origin = [c(0.0, 0.0)];
    let (mut w_err, mut s_err): (f64, f64) = (0.0, 0.0);
    for i in 0..21 {
        for j in 0..21 {
            let (x, y) = (-0.5 + i as f64 / 20.0, 0.6 + 1.4 * j as f64 / 20.0);
            let tau = g1(c(x, y));
            let via: f64 = SecondOrderIndex::all(1)
                .iter()
                .map(|u| sot_value(u, &origin, &tau, &p).unwrap().norm_sqr())
                .sum();
            let direct = w_jet(x, y, EPS_W).unwrap().w;
            w_err = w_err.max((direct - via).abs() / direct);
            let s = sigma_correction(&tau, &p).unwrap().entries[(0, 0)];
            s_err = s_err.max((s - sigma_heat_g1(x, y, EPS_W).unwrap()).norm());
        }
    }
    outcome(
        w_err < 1e-11 && s_err < 1e-9,
        format!("w routes {w_err:.2e} (< 1e-11); sigma routes {s_err:.2e} (< 1e-9); 21 x 21 grid"),
    )
}

fn determinism() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_theta-bidiff");
    let run = || Command::new(bin).arg("verify").env_remove("THETA_BIDIFF_THREADS").output().unwrap();
    let (a, b) = (run(), run());
    let same = a.stdout == b.stdout && !a.stdout.is_empty();
    outcome(
        same && a.status.success() && b.status.success(),
        format!(
            "two verify runs: {} bytes each, identical = {same}, exit {:?}/{:?}",
            a.stdout.len(),
            a.status.code(),
            b.status.code()
        ),
    )
}

#[test]
fn acceptance_criteria() {
    let criteria: [Criterion; 12] = [
        ("coincidence at the special points", special_points),
        ("non-coincidence at generic tau", generic_noncoincidence),
        ("sign of w_xx at tau = i", sign_check),
        ("kernel dimensions 0, 0, 1", v00_dimensions),
        ("trisecant identity", trisecant),
        ("Gunning identity", gunning),
        ("heat equation", heat_equation),
        ("second-order basis orthogonality", gram),
        ("canonical bidifferential periods and biresidue", canonical_bidifferential),
        ("end-to-end pullback identity", pullback_identity),
        ("oracle consistency", oracle_consistency),
        ("determinism of verify", determinism),
    ];
    let mut failed = Vec::new();
    for (k, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        println!("criterion {:>2} {} {name}: {}", k + 1, if o.passed { "PASS" } else { "FAIL" }, o.detail);
        if !o.passed {
            failed.push(k + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}

#[test]
fn mixed_partials_at_random_points() {
    let p = Precision::default();
    let mut rng = named_rng(SEED, "acceptance.mixed");
    for _ in 0..3 {
        let w = c(rng.random_range(-0.5..0.5), rng.random_range(-0.3..0.3));
        let a1 = c(rng.random_range(0.1..0.5), rng.random_range(-0.3..0.3));
        let a2 = c(rng.random_range(-0.5..-0.1), rng.random_range(-0.3..0.3));
        let m = a12_b12_check(w, a1, a2, &g1(c(0.0, 1.0)), &p, 1e-4).unwrap();
        assert!(m.res_a < 1e-5 && m.res_b < 1e-5, "{m:?}");
    }
}
