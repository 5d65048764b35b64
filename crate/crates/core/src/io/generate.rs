//! Seeded random problem generation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::problem::{ObjectiveSpec, ProblemFile, Triplets};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeneratedKind {
    /// Strictly convex quadratic.
    Qp,
    Lp,
}

/// A random problem whose feasible set contains a known interior point and
/// is bounded by a box of half-width 2 around it. Rows are a mix of
/// one-sided, two-sided and equality constraints.
pub fn generate(kind: GeneratedKind, n: usize, m: usize, seed: u64) -> ProblemFile {
    assert!(n > 0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let center: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut a = Triplets::default();
    let mut bl = Vec::with_capacity(m);
    let mut bu = Vec::with_capacity(m);
    for i in 0..m {
        let mut ac = 0.0;
        for (j, cj) in center.iter().enumerate() {
            if rng.gen_bool(0.7) || j == i % n {
                let v: f64 = rng.gen_range(-2.0..2.0);
                if v != 0.0 {
                    a.row.push(i);
                    a.col.push(j);
                    a.val.push(v);
                    ac += v * cj;
                }
            }
        }
        let (l, u) = match rng.gen_range(0..4) {
            0 => (Some(ac - rng.gen_range(0.0..1.0)), None),
            1 => (None, Some(ac + rng.gen_range(0.0..1.0))),
            2 => (Some(ac - rng.gen_range(0.0..1.0)), Some(ac + rng.gen_range(0.0..1.0))),
            _ => (Some(ac), Some(ac)),
        };
        bl.push(l);
        bu.push(u);
    }
    let lo = center.iter().map(|c| Some(c - 2.0)).collect();
    let hi = center.iter().map(|c| Some(c + 2.0)).collect();
    let c: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
    let objective = match kind {
        GeneratedKind::Lp => ObjectiveSpec::Linear { c, constant: 0.0 },
        GeneratedKind::Qp => {
            // BBᵀ + 0.1·I
            let b: Vec<Vec<f64>> = (0..n).map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
            let mut h = Triplets::default();
            for i in 0..n {
                for j in 0..n {
                    let v = (0..n).map(|k| b[i][k] * b[j][k]).sum::<f64>() + if i == j { 0.1 } else { 0.0 };
                    h.row.push(i);
                    h.col.push(j);
                    h.val.push(v);
                }
            }
            ObjectiveSpec::Quadratic { h, c: Some(c), constant: 0.0 }
        }
    };
    let x0 = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
    let name = match kind {
        GeneratedKind::Qp => format!("random_qp_{n}_{m}_{seed}"),
        GeneratedKind::Lp => format!("random_lp_{n}_{m}_{seed}"),
    };
    ProblemFile {
        name: Some(name),
        n,
        m,
        a: (m > 0).then_some(a),
        bl: (m > 0).then_some(bl),
        bu: (m > 0).then_some(bu),
        lo: Some(lo),
        hi: Some(hi),
        x0: Some(x0),
        objective,
    }
}
