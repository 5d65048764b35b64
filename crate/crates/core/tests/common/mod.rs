#![allow(dead_code)]

use pasa::linalg::CsrMatrix;
use pasa::model::Polyhedron;
use pasa_oracles::DensePolyhedron;
use rand::Rng;

pub fn to_dense(p: &Polyhedron) -> DensePolyhedron {
    DensePolyhedron {
        a: p.a().to_dense(),
        bl: p.bl().to_vec(),
        bu: p.bu().to_vec(),
        lo: p.lo().to_vec(),
        hi: p.hi().to_vec(),
    }
}

/// A nonempty polyhedron built around a random interior point, with a mix
/// of one-sided, two-sided, equality and absent bounds.
pub fn random_polyhedron<R: Rng>(rng: &mut R, n: usize, m: usize) -> (Polyhedron, Vec<f64>) {
    let center: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut dense = vec![vec![0.0; n]; m];
    for row in dense.iter_mut() {
        for v in row.iter_mut() {
            if rng.gen_bool(0.7) {
                *v = rng.gen_range(-2.0..2.0);
            }
        }
        if row.iter().all(|v| *v == 0.0) {
            row[rng.gen_range(0..n)] = 1.0;
        }
    }
    let a = CsrMatrix::from_dense(&dense, n);
    let ac = a.mul_vec(&center);
    let mut bl = vec![f64::NEG_INFINITY; m];
    let mut bu = vec![f64::INFINITY; m];
    for i in 0..m {
        match rng.gen_range(0..4) {
            0 => bl[i] = ac[i] - rng.gen_range(0.0..1.0),
            1 => bu[i] = ac[i] + rng.gen_range(0.0..1.0),
            2 => {
                bl[i] = ac[i] - rng.gen_range(0.0..1.0);
                bu[i] = ac[i] + rng.gen_range(0.0..1.0);
            }
            _ => {
                bl[i] = ac[i];
                bu[i] = ac[i];
            }
        }
    }
    let mut lo = vec![f64::NEG_INFINITY; n];
    let mut hi = vec![f64::INFINITY; n];
    for j in 0..n {
        if rng.gen_bool(0.6) {
            lo[j] = center[j] - rng.gen_range(0.0..1.5);
        }
        if rng.gen_bool(0.6) {
            hi[j] = center[j] + rng.gen_range(0.0..1.5);
        }
    }
    (Polyhedron::new(a, bl, bu, lo, hi).unwrap(), center)
}

/// `BBᵀ + shift·I` with `B` uniform in `[−1, 1]`.
pub fn random_spd<R: Rng>(rng: &mut R, n: usize, shift: f64) -> Vec<Vec<f64>> {
    let b: Vec<Vec<f64>> = (0..n).map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| (0..n).map(|k| b[i][k] * b[j][k]).sum::<f64>() + if i == j { shift } else { 0.0 })
                .collect()
        })
        .collect()
}

pub fn dense_to_csr(h: &[Vec<f64>]) -> CsrMatrix {
    CsrMatrix::from_dense(h, h.len())
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}
