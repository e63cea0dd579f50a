#![allow(dead_code)]

use unitroot::numla::{fro, Mat};
use unitroot::simkit::{generate_smith_model, SmithSpec};
use unitroot::MatrixPolynomial;

pub const SEEDS: u64 = 25;

pub struct GridModel {
    pub spec: SmithSpec,
    pub poly: MatrixPolynomial,
    pub known_m: usize,
}

/// Degree vectors for dimension `n` and top order `d`: a single unit-root
/// slot, a staircase, and a doubled top slot.
pub fn degree_vectors(n: usize, d: usize) -> Vec<Vec<usize>> {
    let single: Vec<usize> = (0..n).map(|i| if i == 0 { d } else { 0 }).collect();
    let stair: Vec<usize> = (0..n).map(|i| d.saturating_sub(i)).collect();
    let double: Vec<usize> = (0..n).map(|i| if i < 2 { d } else { 0 }).collect();
    let mut out = vec![single];
    for v in [stair, double] {
        if !out.contains(&v) {
            out.push(v);
        }
    }
    out
}

pub fn grid_with(orders: &[usize], seeds: u64) -> Vec<GridModel> {
    let mut out = Vec::new();
    for n in 2..=5 {
        for &d in orders {
            for (k, degrees) in degree_vectors(n, d).into_iter().enumerate() {
                for s in 0..seeds {
                    let seed = s + 100 * (k as u64 + 10 * (d as u64 + 10 * n as u64));
                    let spec = SmithSpec::new(degrees.clone(), seed);
                    let (poly, known_m) = generate_smith_model(&spec).expect("valid spec");
                    out.push(GridModel {
                        spec,
                        poly,
                        known_m,
                    });
                }
            }
        }
    }
    out
}

pub fn grid() -> Vec<GridModel> {
    grid_with(&[1, 2, 3, 4], SEEDS)
}

/// `max_j |a_j - b_j| / max_j |b_j|` over two coefficient lists.
pub fn rel_diff(a: &[Mat], b: &[Mat]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let scale = b.iter().map(fro).fold(0.0, f64::max);
    let diff = a
        .iter()
        .zip(b)
        .map(|(x, y)| fro(&(x - y)))
        .fold(0.0, f64::max);
    if diff == 0.0 {
        0.0
    } else {
        diff / scale
    }
}
