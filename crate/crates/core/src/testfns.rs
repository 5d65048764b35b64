//! Built-in nonlinear test functions (Moré–Garbow–Hillstrom and friends).

use crate::objective::Objective;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestFunctionKind {
    Rosenbrock,
    Beale,
    Wood,
    PowellSingular,
    HelicalValley,
    FreudensteinRoth,
    DixonPrice,
    Raydan1,
    Trigonometric,
    WhiteHolst,
    Zakharov,
    Quartic,
}

impl TestFunctionKind {
    pub const ALL: [TestFunctionKind; 12] = [
        TestFunctionKind::Rosenbrock,
        TestFunctionKind::Beale,
        TestFunctionKind::Wood,
        TestFunctionKind::PowellSingular,
        TestFunctionKind::HelicalValley,
        TestFunctionKind::FreudensteinRoth,
        TestFunctionKind::DixonPrice,
        TestFunctionKind::Raydan1,
        TestFunctionKind::Trigonometric,
        TestFunctionKind::WhiteHolst,
        TestFunctionKind::Zakharov,
        TestFunctionKind::Quartic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TestFunctionKind::Rosenbrock => "rosenbrock",
            TestFunctionKind::Beale => "beale",
            TestFunctionKind::Wood => "wood",
            TestFunctionKind::PowellSingular => "powell_singular",
            TestFunctionKind::HelicalValley => "helical_valley",
            TestFunctionKind::FreudensteinRoth => "freudenstein_roth",
            TestFunctionKind::DixonPrice => "dixon_price",
            TestFunctionKind::Raydan1 => "raydan1",
            TestFunctionKind::Trigonometric => "trigonometric",
            TestFunctionKind::WhiteHolst => "white_holst",
            TestFunctionKind::Zakharov => "zakharov",
            TestFunctionKind::Quartic => "quartic",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }

    /// Whether the function accepts dimension `n`.
    pub fn supports(self, n: usize) -> bool {
        match self {
            TestFunctionKind::Beale | TestFunctionKind::FreudensteinRoth => n == 2,
            TestFunctionKind::HelicalValley => n == 3,
            TestFunctionKind::Wood => n == 4,
            TestFunctionKind::PowellSingular => n > 0 && n % 4 == 0,
            TestFunctionKind::Rosenbrock | TestFunctionKind::WhiteHolst => n > 0 && n % 2 == 0,
            _ => n > 0,
        }
    }

    pub fn default_dim(self) -> usize {
        match self {
            TestFunctionKind::Beale | TestFunctionKind::FreudensteinRoth | TestFunctionKind::Rosenbrock => 2,
            TestFunctionKind::HelicalValley => 3,
            TestFunctionKind::Wood | TestFunctionKind::PowellSingular => 4,
            _ => 10,
        }
    }
}

/// A named test function at a fixed dimension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestFunction {
    kind: TestFunctionKind,
    n: usize,
}

impl TestFunction {
    pub fn new(kind: TestFunctionKind, n: usize) -> Option<Self> {
        kind.supports(n).then_some(Self { kind, n })
    }

    pub fn by_name(name: &str, n: usize) -> Option<Self> {
        Self::new(TestFunctionKind::from_name(name)?, n)
    }

    pub fn kind(&self) -> TestFunctionKind {
        self.kind
    }

    /// Customary starting point.
    pub fn start(&self) -> Vec<f64> {
        let n = self.n;
        match self.kind {
            TestFunctionKind::Rosenbrock | TestFunctionKind::WhiteHolst => {
                (0..n).map(|i| if i % 2 == 0 { -1.2 } else { 1.0 }).collect()
            }
            TestFunctionKind::Beale => vec![1.0, 1.0],
            TestFunctionKind::Wood => vec![-3.0, -1.0, -3.0, -1.0],
            TestFunctionKind::PowellSingular => (0..n).map(|i| [3.0, -1.0, 0.0, 1.0][i % 4]).collect(),
            TestFunctionKind::HelicalValley => vec![-1.0, 0.0, 0.0],
            TestFunctionKind::FreudensteinRoth => vec![0.5, -2.0],
            TestFunctionKind::DixonPrice | TestFunctionKind::Raydan1 => vec![1.0; n],
            TestFunctionKind::Trigonometric => vec![1.0 / n as f64; n],
            TestFunctionKind::Zakharov => vec![0.5; n],
            TestFunctionKind::Quartic => vec![1.0; n],
        }
    }

    fn eval(&self, x: &[f64], g: Option<&mut [f64]>) -> f64 {
        let n = self.n;
        let mut scratch;
        let g: &mut [f64] = match g {
            Some(g) => {
                g.iter_mut().for_each(|v| *v = 0.0);
                g
            }
            None => {
                scratch = vec![0.0; n];
                &mut scratch
            }
        };
        match self.kind {
            TestFunctionKind::Rosenbrock | TestFunctionKind::WhiteHolst => {
                let cubic = self.kind == TestFunctionKind::WhiteHolst;
                let mut f = 0.0;
                for i in (0..n).step_by(2) {
                    let (a, b) = (x[i], x[i + 1]);
                    let (p, dp) = if cubic { (a * a * a, 3.0 * a * a) } else { (a * a, 2.0 * a) };
                    let t = b - p;
                    let u = 1.0 - a;
                    f += 100.0 * t * t + u * u;
                    g[i] += -200.0 * t * dp - 2.0 * u;
                    g[i + 1] += 200.0 * t;
                }
                f
            }
            TestFunctionKind::Beale => {
                let (a, b) = (x[0], x[1]);
                let c = [1.5, 2.25, 2.625];
                let mut f = 0.0;
                for (k, ck) in c.iter().enumerate() {
                    let p = (k + 1) as i32;
                    let r = ck - a * (1.0 - b.powi(p));
                    f += r * r;
                    g[0] += 2.0 * r * -(1.0 - b.powi(p));
                    g[1] += 2.0 * r * a * p as f64 * b.powi(p - 1);
                }
                f
            }
            TestFunctionKind::Wood => {
                let (a, b, c, d) = (x[0], x[1], x[2], x[3]);
                let f = 100.0 * (b - a * a).powi(2)
                    + (1.0 - a).powi(2)
                    + 90.0 * (d - c * c).powi(2)
                    + (1.0 - c).powi(2)
                    + 10.0 * (b + d - 2.0).powi(2)
                    + 0.1 * (b - d).powi(2);
                g[0] = -400.0 * a * (b - a * a) - 2.0 * (1.0 - a);
                g[1] = 200.0 * (b - a * a) + 20.0 * (b + d - 2.0) + 0.2 * (b - d);
                g[2] = -360.0 * c * (d - c * c) - 2.0 * (1.0 - c);
                g[3] = 180.0 * (d - c * c) + 20.0 * (b + d - 2.0) - 0.2 * (b - d);
                f
            }
            TestFunctionKind::PowellSingular => {
                let mut f = 0.0;
                for i in (0..n).step_by(4) {
                    let (a, b, c, d) = (x[i], x[i + 1], x[i + 2], x[i + 3]);
                    let r1 = a + 10.0 * b;
                    let r2 = c - d;
                    let r3 = b - 2.0 * c;
                    let r4 = a - d;
                    f += r1 * r1 + 5.0 * r2 * r2 + r3.powi(4) + 10.0 * r4.powi(4);
                    g[i] += 2.0 * r1 + 40.0 * r4.powi(3);
                    g[i + 1] += 20.0 * r1 + 4.0 * r3.powi(3);
                    g[i + 2] += 10.0 * r2 - 8.0 * r3.powi(3);
                    g[i + 3] += -10.0 * r2 - 40.0 * r4.powi(3);
                }
                f
            }
            TestFunctionKind::HelicalValley => {
                let (a, b, c) = (x[0], x[1], x[2]);
                let two_pi = 2.0 * std::f64::consts::PI;
                let theta = b.atan2(a) / two_pi;
                let r = (a * a + b * b).sqrt();
                let f1 = 10.0 * (c - 10.0 * theta);
                let f2 = 10.0 * (r - 1.0);
                let f = f1 * f1 + f2 * f2 + c * c;
                let rr = (a * a + b * b).max(f64::MIN_POSITIVE);
                let dtheta_da = -b / (two_pi * rr);
                let dtheta_db = a / (two_pi * rr);
                let rs = r.max(f64::MIN_POSITIVE);
                g[0] = 2.0 * f1 * (-100.0 * dtheta_da) + 2.0 * f2 * 10.0 * a / rs;
                g[1] = 2.0 * f1 * (-100.0 * dtheta_db) + 2.0 * f2 * 10.0 * b / rs;
                g[2] = 2.0 * f1 * 10.0 + 2.0 * c;
                f
            }
            TestFunctionKind::FreudensteinRoth => {
                let (a, b) = (x[0], x[1]);
                let r1 = -13.0 + a + ((5.0 - b) * b - 2.0) * b;
                let r2 = -29.0 + a + ((b + 1.0) * b - 14.0) * b;
                let dr1 = 10.0 * b - 3.0 * b * b - 2.0;
                let dr2 = 3.0 * b * b + 2.0 * b - 14.0;
                g[0] = 2.0 * r1 + 2.0 * r2;
                g[1] = 2.0 * r1 * dr1 + 2.0 * r2 * dr2;
                r1 * r1 + r2 * r2
            }
            TestFunctionKind::DixonPrice => {
                let r0 = x[0] - 1.0;
                let mut f = r0 * r0;
                g[0] = 2.0 * r0;
                for i in 1..n {
                    let w = (i + 1) as f64;
                    let t = 2.0 * x[i] * x[i] - x[i - 1];
                    f += w * t * t;
                    g[i] += 2.0 * w * t * 4.0 * x[i];
                    g[i - 1] -= 2.0 * w * t;
                }
                f
            }
            TestFunctionKind::Raydan1 => {
                let mut f = 0.0;
                for i in 0..n {
                    let w = (i + 1) as f64 / 10.0;
                    let e = x[i].exp();
                    f += w * (e - x[i]);
                    g[i] = w * (e - 1.0);
                }
                f
            }
            TestFunctionKind::Trigonometric => {
                let nf = n as f64;
                let sum_cos: f64 = x.iter().map(|v| v.cos()).sum();
                let r: Vec<f64> = (0..n)
                    .map(|i| nf - sum_cos + (i + 1) as f64 * (1.0 - x[i].cos()) - x[i].sin())
                    .collect();
                let sum_r: f64 = r.iter().sum();
                for j in 0..n {
                    // ∂r_i/∂x_j = sin x_j for i ≠ j, plus the diagonal terms.
                    let diag = (j + 1) as f64 * x[j].sin() - x[j].cos();
                    g[j] = 2.0 * (sum_r * x[j].sin() + r[j] * diag);
                }
                r.iter().map(|v| v * v).sum()
            }
            TestFunctionKind::Zakharov => {
                let s2: f64 = x.iter().map(|v| v * v).sum();
                let s: f64 = x.iter().enumerate().map(|(i, v)| 0.5 * (i + 1) as f64 * v).sum();
                for i in 0..n {
                    let w = 0.5 * (i + 1) as f64;
                    g[i] = 2.0 * x[i] + 2.0 * s * w + 4.0 * s.powi(3) * w;
                }
                s2 + s * s + s.powi(4)
            }
            TestFunctionKind::Quartic => {
                let mut f = 0.0;
                for i in 0..n {
                    let w = (i + 1) as f64;
                    let t = x[i] - 0.5;
                    f += w * t.powi(4) + 0.5 * t * t;
                    g[i] = 4.0 * w * t.powi(3) + t;
                }
                f
            }
        }
    }
}

impl Objective for TestFunction {
    fn dim(&self) -> usize {
        self.n
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.eval(x, None)
    }

    fn value_grad(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        self.eval(x, Some(grad))
    }
}
