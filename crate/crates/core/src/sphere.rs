//! Direction grids on the unit sphere S^{d-1}.

use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::gamma::gamma;

use crate::linalg::scale;

/// Surface area of S^{d-1}.
pub fn sphere_area(dim: usize) -> f64 {
    let h = dim as f64 / 2.0;
    2.0 * std::f64::consts::PI.powf(h) / gamma(h)
}

/// `n` equally spaced directions on the circle, starting at angle 0.
pub fn circle_directions(n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|k| {
            let t = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
            vec![t.cos(), t.sin()]
        })
        .collect()
}

/// Fibonacci (golden spiral) points on S^2.
pub fn fibonacci_sphere(n: usize) -> Vec<Vec<f64>> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|k| {
            let z = 1.0 - (2.0 * k as f64 + 1.0) / n as f64;
            let r = (1.0 - z * z).max(0.0).sqrt();
            let phi = golden * k as f64;
            vec![r * phi.cos(), r * phi.sin(), z]
        })
        .collect()
}

const PRIMES: [u64; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

/// Radical inverse of `k` in base `b`.
pub fn radical_inverse(mut k: u64, b: u64) -> f64 {
    let inv = 1.0 / b as f64;
    let mut f = inv;
    let mut r = 0.0;
    while k > 0 {
        r += f * (k % b) as f64;
        k /= b;
        f *= inv;
    }
    r
}

/// Point `k` of the `dim`-dimensional Halton sequence, shifted modulo 1.
pub fn halton_point(k: u64, dim: usize, shift: &[f64]) -> Vec<f64> {
    (0..dim)
        .map(|j| {
            let v = radical_inverse(k + 1, PRIMES[j]) + shift.get(j).copied().unwrap_or(0.0);
            v - v.floor()
        })
        .collect()
}

/// Maps a point of the unit cube to the sphere through Gaussian coordinates.
pub fn cube_to_sphere(p: &[f64]) -> Vec<f64> {
    let normal = Normal::standard();
    let g: Vec<f64> = p
        .iter()
        .map(|&x| normal.inverse_cdf(x.clamp(1e-15, 1.0 - 1e-15)))
        .collect();
    let n = crate::linalg::norm(&g);
    scale(&g, 1.0 / n)
}

/// Quasi-Monte Carlo directions on S^{dim-1} from a shifted Halton sequence.
pub fn qmc_sphere(n: usize, dim: usize, shift: &[f64]) -> Vec<Vec<f64>> {
    assert!(dim <= PRIMES.len(), "QMC directions support dim <= 16");
    (0..n as u64)
        .map(|k| cube_to_sphere(&halton_point(k, dim, shift)))
        .collect()
}

/// The default quasi-uniform grid: uniform angles (d=2), Fibonacci (d=3),
/// Halton (d ≥ 4).
pub fn direction_grid(dim: usize, n: usize) -> Vec<Vec<f64>> {
    match dim {
        2 => circle_directions(n),
        3 => fibonacci_sphere(n),
        _ => qmc_sphere(n, dim, &[]),
    }
}
