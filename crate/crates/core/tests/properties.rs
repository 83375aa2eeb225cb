use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use theta_bidiff::siegel::characteristic_from_point;
use theta_bidiff::sot::{sot_jet0, sot_value, SecondOrderIndex};
use theta_bidiff::theta::{
    s_point_jet, theta_char_value, theta_jet, theta_value,
};
use theta_bidiff::{Characteristic, Parity, PeriodMatrix, Precision};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Symmetric real part in [-0.5, 0.5], imaginary part `L L^T + 0.6 I`.
fn tau_strategy(g: usize) -> impl Strategy<Value = PeriodMatrix> {
    let n = g * g;
    (
        proptest::collection::vec(-0.5f64..0.5, n),
        proptest::collection::vec(-0.4f64..0.4, n),
    )
        .prop_map(move |(re, low)| {
            let x = DMatrix::from_fn(g, g, |i, j| re[i.min(j) * g + i.max(j)]);
            let l = DMatrix::from_fn(g, g, |i, j| if j <= i { low[i * g + j] } else { 0.0 });
            let y = &l * l.transpose() + DMatrix::identity(g, g) * 0.6;
            PeriodMatrix::from_parts(&x, &y).unwrap()
        })
}

fn z_strategy(g: usize) -> impl Strategy<Value = Vec<Complex64>> {
    proptest::collection::vec((-0.6f64..0.6, -0.4f64..0.4), g)
        .prop_map(|v| v.into_iter().map(|(a, b)| c(a, b)).collect())
}

fn tau_and_z() -> impl Strategy<Value = (PeriodMatrix, Vec<Complex64>)> {
    (1usize..=3).prop_flat_map(|g| (tau_strategy(g), z_strategy(g)))
}

fn envelope(tau: &PeriodMatrix, z: &[Complex64]) -> f64 {
    let y: Vec<f64> = z.iter().map(|v| v.im).collect();
    (std::f64::consts::PI * tau.im_inverse().quad(&y)).exp()
}

fn neg(z: &[Complex64]) -> Vec<Complex64> {
    z.iter().map(|v| -v).collect()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn theta_is_even((tau, z) in tau_and_z()) {
        let p = Precision::default();
        let a = theta_value(&z, &tau, &p).unwrap();
        let b = theta_value(&neg(&z), &tau, &p).unwrap();
        prop_assert!((a - b).norm() < 1e-12 * envelope(&tau, &z));
    }

    #[test]
    fn quasi_periodicity(
        (tau, z) in tau_and_z(),
        shifts in proptest::collection::vec((-1i64..=1, -1i64..=1), 3),
    ) {
        let p = Precision::default();
        let g = tau.g();
        let (ints, qs): (Vec<i64>, Vec<i64>) = shifts[..g].iter().cloned().unzip();
        let qf: Vec<f64> = qs.iter().map(|&q| q as f64).collect();
        let tq = tau.mul_real(&qf);
        let shifted: Vec<Complex64> =
            (0..g).map(|i| z[i] + ints[i] as f64 + tq[i]).collect();
        let qtq: Complex64 = (0..g).map(|i| tq[i] * qf[i]).sum();
        let qz: Complex64 = (0..g).map(|i| z[i] * qf[i]).sum();
        let factor = (Complex64::new(0.0, -std::f64::consts::PI) * (qtq + qz * 2.0)).exp();
        let lhs = theta_value(&shifted, &tau, &p).unwrap();
        let rhs = factor * theta_value(&z, &tau, &p).unwrap();
        prop_assert!((lhs - rhs).norm() < 1e-11 * envelope(&tau, &shifted));
    }

    #[test]
    fn half_integer_parity((tau, z) in tau_and_z(), pick in 0usize..64) {
        let p = Precision::default();
        let all = Characteristic::all_half_integer(tau.g());
        let ch = &all[pick % all.len()];
        let a = theta_char_value(ch, &z, &tau, &p).unwrap();
        let b = theta_char_value(ch, &neg(&z), &tau, &p).unwrap();
        let sign = if ch.parity() == Some(Parity::Odd) { -1.0 } else { 1.0 };
        let scale = envelope(&tau, &ch.point(&tau).iter().zip(&z).map(|(u, v)| u + v).collect::<Vec<_>>());
        prop_assert!((a - b * sign).norm() < 1e-11 * scale.max(1.0));
    }

    #[test]
    fn jet_matches_finite_differences((tau, z) in tau_and_z()) {
        let p = Precision::default();
        let g = tau.g();
        let jet = theta_jet(&z, &tau, &p).unwrap();
        let h = 1e-4;
        let env = envelope(&tau, &z);
        for i in 0..g {
            let mut zp = z.clone();
            let mut zm = z.clone();
            zp[i] += h;
            zm[i] -= h;
            let tp = theta_jet(&zp, &tau, &p).unwrap();
            let tm = theta_jet(&zm, &tau, &p).unwrap();
            let fd_grad = (tp.value - tm.value) / (2.0 * h);
            prop_assert!((fd_grad - jet.gradient[i]).norm() < 1e-6 * env);
            for j in 0..g {
                let fd_hess = (tp.gradient[j] - tm.gradient[j]) / (2.0 * h);
                prop_assert!((fd_hess - jet.hessian[(i, j)]).norm() < 1e-5 * env);
            }
        }
    }

    #[test]
    fn squared_section_expansion((tau, z) in tau_and_z(), w in z_strategy(3)) {
        let p = Precision::default();
        let g = tau.g();
        let w = &w[..g];
        let s = s_point_jet(w, &z, &tau, &p).unwrap().value;
        let mut sum = Complex64::new(0.0, 0.0);
        for u in SecondOrderIndex::all(g) {
            sum += sot_value(&u, &z, &tau, &p).unwrap() * sot_value(&u, w, &tau, &p).unwrap();
        }
        let scale = envelope(&tau, &z) * envelope(&tau, w);
        prop_assert!((s - sum).norm() < 1e-11 * scale);
    }

    #[test]
    fn section_reflection((tau, z) in tau_and_z(), w in z_strategy(3)) {
        let p = Precision::default();
        let w = &w[..tau.g()];
        let a = s_point_jet(w, &z, &tau, &p).unwrap().value;
        let b = s_point_jet(w, &neg(&z), &tau, &p).unwrap().value;
        let c = s_point_jet(&neg(w), &z, &tau, &p).unwrap().value;
        let scale = envelope(&tau, &z) * envelope(&tau, w);
        prop_assert!((a - b).norm() < 1e-12 * scale);
        prop_assert!((a - c).norm() < 1e-12 * scale);
    }

    #[test]
    fn characteristic_round_trip(tau in (1usize..=3).prop_flat_map(tau_strategy), pick in 0usize..64) {
        let all = Characteristic::all_half_integer(tau.g());
        let ch = &all[pick % all.len()];
        let zeta: Vec<Complex64> = ch.point(&tau).iter().cloned().collect();
        let back = characteristic_from_point(&zeta, &tau).unwrap();
        for i in 0..tau.g() {
            prop_assert!((back.a()[i] - ch.a()[i]).abs() < 1e-12);
            prop_assert!((back.b()[i] - ch.b()[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn integer_shift_of_characteristic((tau, z) in tau_and_z(), pick in 0usize..64) {
        let p = Precision::default();
        let g = tau.g();
        let all = Characteristic::all_half_integer(g);
        let ch = &all[pick % all.len()];
        let shifted = ch.shift_a(&vec![1; g]).unwrap();
        let a = theta_char_value(ch, &z, &tau, &p).unwrap();
        let b = theta_char_value(&shifted, &z, &tau, &p).unwrap();
        prop_assert!((a - b).norm() < 1e-12 * envelope(&tau, &z).max(1.0) * 10.0);
    }

    #[test]
    fn heat_equation_by_tau_differences(tau in tau_strategy(2), bits in proptest::collection::vec(0u8..=1, 2)) {
        let p = Precision::default();
        let u = SecondOrderIndex::new(bits).unwrap();
        let jet = sot_jet0(&u, &tau, &p).unwrap();
        let h = 1e-5;
        let origin = vec![Complex64::new(0.0, 0.0); 2];
        for i in 0..2 {
            for j in i..2 {
                // moving the symmetric coordinate tau_ij moves both entries
                let mut bump = DMatrix::zeros(2, 2);
                bump[(i, j)] = Complex64::new(h, 0.0);
                bump[(j, i)] = Complex64::new(h, 0.0);
                let plus = PeriodMatrix::new(tau.entries() + &bump).unwrap();
                let minus = PeriodMatrix::new(tau.entries() - &bump).unwrap();
                let fd = (sot_value(&u, &origin, &plus, &p).unwrap()
                    - sot_value(&u, &origin, &minus, &p).unwrap()) / (2.0 * h);
                prop_assert!((fd - jet.tau_deriv[(i, j)]).norm() < 1e-6 * (1.0 + fd.norm()));
                let factor = if i == j { 1.0 } else { 2.0 };
                let heat = Complex64::new(0.0, 8.0 * std::f64::consts::PI / factor) * jet.tau_deriv[(i, j)];
                prop_assert!((heat - jet.hessian0[(i, j)]).norm() < 1e-12 * (1.0 + heat.norm()) * 100.0);
            }
        }
    }
}
