//! Seeded generators for randomized test points.
//!
//! Each consumer draws from its own ChaCha stream, selected by a name, so adding
//! a check never shifts the points another check sees.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use theta_bidiff::PeriodMatrix;

/// Generator for the stream `name` under `seed`.
pub fn named_rng(seed: u64, name: &str) -> ChaCha8Rng {
    // FNV-1a picks the stream id
    let stream = name
        .bytes()
        .fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Period matrix with real part uniform in `[-1/2, 1/2]` and imaginary part
/// `L L^T + 0.6 I`, `L` lower triangular with entries in `[-0.4, 0.4]`.
pub fn random_tau(rng: &mut ChaCha8Rng, g: usize) -> PeriodMatrix {
    let mut x = DMatrix::zeros(g, g);
    let mut l = DMatrix::zeros(g, g);
    for i in 0..g {
        for j in 0..=i {
            let v = rng.random_range(-0.5..0.5);
            x[(i, j)] = v;
            x[(j, i)] = v;
            l[(i, j)] = rng.random_range(-0.4..0.4);
        }
    }
    let y = &l * l.transpose() + DMatrix::identity(g, g) * 0.6;
    PeriodMatrix::from_parts(&x, &y).expect("positive definite by construction")
}

/// Genus-one `tau` uniform in the window `[x0, x1] x [y0, y1]`.
pub fn random_tau_g1(rng: &mut ChaCha8Rng, x: (f64, f64), y: (f64, f64)) -> Complex64 {
    Complex64::new(rng.random_range(x.0..x.1), rng.random_range(y.0..y.1))
}

/// Point with real part in `[-1, 1]` and imaginary part in `[-0.8, 0.8]`.
pub fn random_point(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-0.8..0.8))
}
