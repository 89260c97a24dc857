#![allow(dead_code)]

use std::f64::consts::PI;

use distmin_core::{Curve, Mode, Reparametrization};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn circle(n: usize, r: f64) -> Curve {
    Curve::regular_polygon(n, r, [0.0, 0.0]).unwrap()
}

/// Positive weights summing to `total`, drawn from one of three families:
/// uniform, log-normal-ish, and a smooth random Fourier profile.
pub fn random_increments(rng: &mut ChaCha8Rng, m: usize, total: f64) -> Vec<f64> {
    let raw: Vec<f64> = match rng.random_range(0..3) {
        0 => (0..m).map(|_| rng.random_range(0.25..1.75)).collect(),
        1 => {
            let sigma = rng.random_range(0.1..1.0);
            (0..m).map(|_| (sigma * rng.random_range(-1.0..1.0f64)).exp()).collect()
        }
        _ => {
            let modes: Vec<(f64, f64)> = (1..=4)
                .map(|j| (rng.random_range(-0.2..0.2) / j as f64, rng.random_range(0.0..2.0 * PI)))
                .collect();
            (0..m)
                .map(|k| {
                    let s = (k as f64 + 0.5) / m as f64;
                    1.0 + modes
                        .iter()
                        .enumerate()
                        .map(|(j, (a, ph))| a * (2.0 * PI * (j + 1) as f64 * s + ph).sin())
                        .sum::<f64>()
                })
                .collect()
        }
    };
    let sum: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x * total / sum).collect()
}

pub fn random_monotone(rng: &mut ChaCha8Rng, l_m: f64, l_n: f64, mode: Mode, m: usize) -> Reparametrization {
    let d = random_increments(rng, m, l_n);
    Reparametrization::from_increments(l_m, l_n, mode, &d).unwrap()
}

pub fn random_mode(rng: &mut ChaCha8Rng) -> Mode {
    if rng.random_bool(0.5) {
        Mode::Preserve
    } else {
        Mode::Reverse
    }
}

pub fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// `u(t) = t + 0.1 sin(2πt)` on `[0, 1]`.
pub fn smooth_test_map(m: usize) -> Reparametrization {
    Reparametrization::from_fn(1.0, 1.0, Mode::Preserve, m, |t| t + 0.1 * (2.0 * PI * t).sin()).unwrap()
}
