use std::f64::consts::PI;

use num_complex::Complex64;

use crate::graph_core::OnePointGraph;
use crate::{Error, Result};

const MAX_TORUS_SIDE: usize = 1024;
const MAX_TORUS_POINTS: usize = 1 << 20;

/// Outcome of applying `Delta_j` and `D_j^s` to a sampled plane wave on a periodic torus.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct MultiplierCheck {
    pub torus_side: usize,
    pub laplacian_applied: Complex64,
    pub laplacian_predicted: Complex64,
    pub diff_applied: Complex64,
    pub diff_predicted: Complex64,
    /// Largest `|applied(n) - predicted * wave(n)|` over the torus, both operators.
    pub max_error: f64,
}

/// Applies `Delta_j` and `D_j^s` to `n -> exp(-2 pi i <h B n, xi>)` on the smallest torus
/// `(Z/N)^d` on which the wave is periodic. With this orientation the eigenvalues are
/// `-4 sin^2(pi h <e_j, xi>)` and `-2i sin(2 pi h <e_j, xi>)`.
pub fn multiplier_check(graph: &OnePointGraph, h: f64, j: usize, xi: &[f64]) -> Result<MultiplierCheck> {
    let d = graph.dim();
    if xi.len() != d {
        return Err(Error::input(format!("frequency has length {}, expected {d}", xi.len())));
    }
    if j >= graph.k() {
        return Err(Error::input(format!("generator index {} out of range", j + 1)));
    }
    let b = graph.basis().matrix();
    // Phase per unit lattice step: h B^T xi.
    let phase: Vec<f64> = (0..d).map(|i| h * (0..d).map(|r| b[(r, i)] * xi[r]).sum::<f64>()).collect();
    let side = (1..=MAX_TORUS_SIDE)
        .find(|&n| {
            phase
                .iter()
                .all(|&p| ((n as f64) * p - ((n as f64) * p).round()).abs() <= 1e-9 * (n as f64 * p).abs().max(1.0))
        })
        .ok_or_else(|| Error::input("frequency is not commensurate with any torus of side at most 1024"))?;
    let total = side.checked_pow(d as u32).filter(|&t| t <= MAX_TORUS_POINTS).ok_or_else(|| {
        Error::input(format!("torus of side {side} in dimension {d} exceeds the sampling budget"))
    })?;
    let wave = |n: &[i64]| {
        let t: f64 = n.iter().zip(&phase).map(|(&a, &p)| a as f64 * p).sum();
        Complex64::from_polar(1.0, -2.0 * PI * t)
    };
    let samples: Vec<Complex64> = (0..total).map(|lin| wave(&unflatten(lin, side, d))).collect();
    let c = &graph.generator_coords()[j];
    let shift = |lin: usize, sign: i64| {
        let n = unflatten(lin, side, d);
        let m: Vec<i64> = n.iter().zip(c).map(|(a, b)| (a + sign * b).rem_euclid(side as i64)).collect();
        flatten(&m, side)
    };
    let ej_xi: f64 = graph.generator(j).iter().zip(xi).map(|(a, b)| a * b).sum();
    let lap_pred = Complex64::new(-4.0 * (PI * h * ej_xi).sin().powi(2), 0.0);
    let diff_pred = Complex64::new(0.0, -2.0 * (2.0 * PI * h * ej_xi).sin());
    let mut max_error = 0.0f64;
    let mut lap0 = Complex64::new(0.0, 0.0);
    let mut diff0 = Complex64::new(0.0, 0.0);
    for lin in 0..total {
        let f = samples[lin];
        let fp = samples[shift(lin, 1)];
        let fm = samples[shift(lin, -1)];
        let lap = fp + fm - 2.0 * f;
        let diff = fp - fm;
        max_error = max_error.max((lap - lap_pred * f).norm()).max((diff - diff_pred * f).norm());
        if lin == 0 {
            lap0 = lap;
            diff0 = diff;
        }
    }
    Ok(MultiplierCheck {
        torus_side: side,
        laplacian_applied: lap0,
        laplacian_predicted: lap_pred,
        diff_applied: diff0,
        diff_predicted: diff_pred,
        max_error,
    })
}

fn unflatten(mut lin: usize, side: usize, d: usize) -> Vec<i64> {
    let mut n = vec![0i64; d];
    for i in (0..d).rev() {
        n[i] = (lin % side) as i64;
        lin /= side;
    }
    n
}

fn flatten(n: &[i64], side: usize) -> usize {
    n.iter().fold(0usize, |acc, &x| acc * side + x as usize)
}

/// Discrete Fourier transform on `(Z/N)^d`, last index fastest:
/// `F(k) = sum_n f(n) exp(-2 pi i <n, k> / N)`.
pub fn torus_dft(values: &[f64], side: usize, d: usize) -> Result<Vec<Complex64>> {
    if side == 0 || side.checked_pow(d as u32) != Some(values.len()) {
        return Err(Error::input("torus data length does not match side^d"));
    }
    let mut data: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let twiddle: Vec<Complex64> = (0..side)
        .map(|m| Complex64::from_polar(1.0, -2.0 * PI * m as f64 / side as f64))
        .collect();
    let mut line = vec![Complex64::new(0.0, 0.0); side];
    for axis in 0..d {
        let stride = side.pow((d - 1 - axis) as u32);
        for base in 0..values.len() {
            if !(base / stride).is_multiple_of(side) {
                continue;
            }
            for (k, out) in line.iter_mut().enumerate() {
                *out = (0..side).map(|n| data[base + n * stride] * twiddle[(n * k) % side]).sum();
            }
            for (k, &v) in line.iter().enumerate() {
                data[base + k * stride] = v;
            }
        }
    }
    Ok(data)
}

/// Returns `(||f||^2, mean_k |F(k)|^2)` for a function on the torus.
pub fn parseval_check(values: &[f64], side: usize, d: usize) -> Result<(f64, f64)> {
    let f = torus_dft(values, side, d)?;
    let lhs = values.iter().map(|v| v * v).sum();
    let rhs = f.iter().map(|z| z.norm_sqr()).sum::<f64>() / values.len() as f64;
    Ok((lhs, rhs))
}
