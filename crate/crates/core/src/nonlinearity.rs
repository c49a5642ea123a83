//! Scalar nonlinearities `μ(x, t)` of the quasi-linear operator
//! `⟨Aw, v⟩ = ∫ μ(x, |∇w|²) ∇w·∇v`.

use std::fmt::Debug;

use crate::mesh::Point;

/// Bounds `γ₁ ≤ μ ≤ γ₂` and `γ̃₁ ≤ μ + 2t ∂_t μ ≤ γ̃₂` for all `x` and `t ≥ 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MonotonicityBounds {
    pub gamma1: f64,
    pub gamma2: f64,
    pub gamma1_tilde: f64,
    pub gamma2_tilde: f64,
}

pub trait Nonlinearity: Debug + Send + Sync {
    fn name(&self) -> &str;

    fn mu(&self, x: Point, t: f64) -> f64;

    fn dmu_dt(&self, x: Point, t: f64) -> f64;

    /// `∫₀ᵗ μ(x, ζ) dζ`; the default integrates numerically.
    fn primitive(&self, x: Point, t: f64) -> f64 {
        adaptive_gauss(&|z| self.mu(x, z), 0.0, t, 1e-12)
    }

    fn bounds(&self) -> MonotonicityBounds;

    /// Whether `μ` varies with `x`. When false, all element integrals of `μ` are exact.
    fn depends_on_x(&self) -> bool {
        false
    }

    /// `∇_x μ(x, t)`
    fn grad_x(&self, _x: Point, _t: f64) -> Point {
        [0.0, 0.0]
    }

    /// Lipschitz constants `(L_μ, L̃_μ)` of `μ` and `t ∂_t μ` in `x`.
    fn x_lipschitz(&self) -> Option<(f64, f64)> {
        None
    }
}

/// `μ(t) = 2 + 1/√(1+t)`: strong monotonicity 2, Lipschitz constant 3.
#[derive(Clone, Copy, Debug, Default)]
pub struct KnownSolutionMu;

impl Nonlinearity for KnownSolutionMu {
    fn name(&self) -> &str {
        "known-solution"
    }

    fn mu(&self, _x: Point, t: f64) -> f64 {
        debug_assert!(t >= 0.0);
        2.0 + 1.0 / (1.0 + t).sqrt()
    }

    fn dmu_dt(&self, _x: Point, t: f64) -> f64 {
        -0.5 * (1.0 + t).powf(-1.5)
    }

    fn primitive(&self, _x: Point, t: f64) -> f64 {
        2.0 * t + 2.0 * ((1.0 + t).sqrt() - 1.0)
    }

    fn bounds(&self) -> MonotonicityBounds {
        // μ + 2tμ' = 2 + (1+t)^{-3/2} ∈ (2, 3]
        MonotonicityBounds { gamma1: 2.0, gamma2: 3.0, gamma1_tilde: 2.0, gamma2_tilde: 3.0 }
    }

    fn x_lipschitz(&self) -> Option<(f64, f64)> {
        Some((0.0, 0.0))
    }
}

/// `μ(t) = 1 + arctan t`: strong monotonicity 1, Lipschitz constant `1 + √3/2 + π/3`.
#[derive(Clone, Copy, Debug, Default)]
pub struct ArctanMu;

impl Nonlinearity for ArctanMu {
    fn name(&self) -> &str {
        "arctan"
    }

    fn mu(&self, _x: Point, t: f64) -> f64 {
        debug_assert!(t >= 0.0);
        1.0 + t.atan()
    }

    fn dmu_dt(&self, _x: Point, t: f64) -> f64 {
        1.0 / (1.0 + t * t)
    }

    fn primitive(&self, _x: Point, t: f64) -> f64 {
        t + t * t.atan() - 0.5 * t.mul_add(t, 1.0).ln()
    }

    fn bounds(&self) -> MonotonicityBounds {
        // μ + 2tμ' = 1 + arctan t + 2t/(1+t²), maximal at t = √3
        MonotonicityBounds {
            gamma1: 1.0,
            gamma2: 1.0 + std::f64::consts::FRAC_PI_2,
            gamma1_tilde: 1.0,
            gamma2_tilde: 1.0 + 3f64.sqrt() / 2.0 + std::f64::consts::PI / 3.0,
        }
    }

    fn x_lipschitz(&self) -> Option<(f64, f64)> {
        Some((0.0, 0.0))
    }
}

/// `μ ≡ c`: the operator is `c` times the Laplacian.
#[derive(Clone, Copy, Debug)]
pub struct ConstantMu(pub f64);

impl Nonlinearity for ConstantMu {
    fn name(&self) -> &str {
        "constant"
    }

    fn mu(&self, _x: Point, _t: f64) -> f64 {
        self.0
    }

    fn dmu_dt(&self, _x: Point, _t: f64) -> f64 {
        0.0
    }

    fn primitive(&self, _x: Point, t: f64) -> f64 {
        self.0 * t
    }

    fn bounds(&self) -> MonotonicityBounds {
        MonotonicityBounds { gamma1: self.0, gamma2: self.0, gamma1_tilde: self.0, gamma2_tilde: self.0 }
    }
}

/// Built-in nonlinearity by its CLI name.
pub fn builtin(name: &str) -> Option<Box<dyn Nonlinearity>> {
    match name {
        "known-solution" => Some(Box::new(KnownSolutionMu)),
        "arctan" => Some(Box::new(ArctanMu)),
        _ => None,
    }
}

fn gauss5(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    const X: [f64; 5] = [
        0.0,
        0.538_469_310_105_683_1,
        -0.538_469_310_105_683_1,
        0.906_179_845_938_664,
        -0.906_179_845_938_664,
    ];
    const W: [f64; 5] = [
        0.568_888_888_888_888_9,
        0.478_628_670_499_366_47,
        0.478_628_670_499_366_47,
        0.236_926_885_056_189_08,
        0.236_926_885_056_189_08,
    ];
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    X.iter().zip(W).map(|(x, w)| w * f(c + h * x)).sum::<f64>() * h
}

/// Adaptive 5-point Gauss-Legendre quadrature with interval bisection.
pub fn adaptive_gauss(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let left = gauss5(f, a, m);
        let right = gauss5(f, m, b);
        let sum = left + right;
        if depth == 0 || (sum - whole).abs() <= tol * sum.abs().max(1.0) {
            sum
        } else {
            rec(f, a, m, left, 0.5 * tol, depth - 1) + rec(f, m, b, right, 0.5 * tol, depth - 1)
        }
    }
    if a == b {
        return 0.0;
    }
    rec(f, a, b, gauss5(f, a, b), tol, 40)
}
