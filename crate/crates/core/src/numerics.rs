//! Quadrature and fixed-point machinery behind the analytical model.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Default number of Gauss–Chebyshev nodes.
pub const DEFAULT_ORDER: usize = 100;
/// Default relative tolerance of the semi-infinite integrals.
pub const DEFAULT_REL_TOL: f64 = 1e-6;

/// Chebyshev nodes x_k = cos((2k−1)π/2K) mapped onto [0, R] (`nodes_a`)
/// and [0, 2R] (`nodes_b`), with Fejér's first-rule weights on [−1, 1].
///
/// The weights make the rule exact for polynomials of degree K−1. The
/// shortcut weights (π/K)·√(1−x_k²) on the same nodes amount to a midpoint
/// rule for a function with a kink at both ends and converge only as K⁻².
#[derive(Debug, Clone, PartialEq)]
pub struct ChebyshevGrid {
    pub order: usize,
    pub radius_m: f64,
    pub nodes_x: Vec<f64>,
    pub weights: Vec<f64>,
    pub nodes_a: Vec<f64>,
    pub nodes_b: Vec<f64>,
}

fn fejer_weight(theta: f64, order: usize) -> f64 {
    let tail: f64 = (1..=order / 2)
        .map(|j| {
            let j = j as f64;
            (2.0 * j * theta).cos() / (4.0 * j * j - 1.0)
        })
        .sum();
    2.0 / order as f64 * (1.0 - 2.0 * tail)
}

pub fn chebyshev_grid(order: usize, radius_m: f64) -> Result<ChebyshevGrid> {
    if order == 0 {
        return Err(Error::Domain("Chebyshev order must be at least 1".into()));
    }
    if !(radius_m > 0.0) {
        return Err(Error::Domain(format!(
            "radius must be positive, got {radius_m}"
        )));
    }
    let k = order as f64;
    let thetas: Vec<f64> = (1..=order)
        .map(|i| (2 * i - 1) as f64 * PI / (2.0 * k))
        .collect();
    let nodes_x: Vec<f64> = thetas.iter().map(|t| t.cos()).collect();
    let weights = thetas.iter().map(|&t| fejer_weight(t, order)).collect();
    let nodes_a = nodes_x
        .iter()
        .map(|x| 0.5 * radius_m * x + 0.5 * radius_m)
        .collect();
    let nodes_b = nodes_x.iter().map(|x| radius_m * x + radius_m).collect();
    Ok(ChebyshevGrid {
        order,
        radius_m,
        nodes_x,
        weights,
        nodes_a,
        nodes_b,
    })
}

impl ChebyshevGrid {
    /// Estimates ∫₀^R g(r)·(2r/R²) dr, the average of `g` over a uniform
    /// point of the cell disk.
    pub fn disk_average<F: Fn(f64) -> f64>(&self, g: F) -> f64 {
        let sum: f64 = self
            .weights
            .iter()
            .zip(&self.nodes_a)
            .map(|(w, a)| w * a * g(*a))
            .sum();
        sum / self.radius_m
    }

    /// Estimates ∫₀^{2R} h(r) dr.
    pub fn integrate_diameter<F: Fn(f64) -> f64>(&self, h: F) -> f64 {
        let sum: f64 = self
            .weights
            .iter()
            .zip(&self.nodes_b)
            .map(|(w, b)| w * h(*b))
            .sum();
        self.radius_m * sum
    }
}

// 15-point Kronrod extension of the 7-point Gauss rule on [-1, 1].
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

const MAX_INTERVALS: usize = 4000;

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Segment {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (j, (&x, &w)) in XGK[..7].iter().zip(&WGK[..7]).enumerate() {
        let dx = half * x;
        let pair = f(center - dx) + f(center + dx);
        kron += w * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    Segment {
        a,
        b,
        value: kron * half,
        error: ((kron - gauss) * half).abs(),
    }
}

/// Globally adaptive Gauss–Kronrod (7/15) integration on a finite interval.
///
/// Stops when the summed error bound drops below `rel_tol·|I|`.
pub fn integrate_adaptive<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> Result<f64> {
    if !(rel_tol > 0.0) {
        return Err(Error::Domain(format!(
            "tolerance must be positive, got {rel_tol}"
        )));
    }
    if a == b {
        return Ok(0.0);
    }
    let mut heap = BinaryHeap::new();
    let first = kronrod(&f, a, b);
    let (mut total, mut error) = (first.value, first.error);
    heap.push(first);
    while error > rel_tol * total.abs() && error > f64::MIN_POSITIVE {
        if !total.is_finite() || heap.len() >= MAX_INTERVALS {
            return Err(Error::Quadrature {
                estimate: total,
                error,
            });
        }
        let worst = heap.pop().expect("heap never empty");
        let mid = 0.5 * (worst.a + worst.b);
        let left = kronrod(&f, worst.a, mid);
        let right = kronrod(&f, mid, worst.b);
        total += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        // re-sum to stop cancellation drift in the running totals
        if heap.len() % 64 == 0 {
            total = heap.iter().map(|s| s.value).sum();
            error = heap.iter().map(|s| s.error).sum();
        }
    }
    Ok(heap.iter().map(|s| s.value).sum())
}

/// ∫₀^∞ f(x) dx through the map x = (u/(1−u))³.
///
/// The cubic map keeps algebraic tails f ~ x^(−p) with p ≥ 4/3 free of an
/// endpoint singularity at u = 1; with the plain u/(1−u) map a v^(−3/2)
/// tail leaves mass in the last ulp below 1 that double precision cannot
/// resolve.
pub fn integrate_semi_infinite<F: Fn(f64) -> f64>(f: F, rel_tol: f64) -> Result<f64> {
    integrate_from(f, 0.0, rel_tol)
}

/// ∫_start^∞ f(x) dx, same map shifted to `start`.
pub fn integrate_from<F: Fn(f64) -> f64>(f: F, start: f64, rel_tol: f64) -> Result<f64> {
    let mapped = |u: f64| {
        let w = 1.0 - u;
        let t = u / w;
        let v = f(start + t * t * t);
        if v == 0.0 {
            0.0
        } else {
            // dx/du = 3t²/(1−u)²
            v * 3.0 * t * t / (w * w)
        }
    };
    integrate_adaptive(mapped, 0.0, 1.0, rel_tol)
}

/// Result of [`solve_fixed_point`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPoint {
    pub value: f64,
    pub residual: f64,
    pub iterations: usize,
}

const DAMPING: f64 = 0.5;
const START: f64 = 0.5;

/// Solves x = g(x) for a nondecreasing self-map of [0, 1].
///
/// Damped iteration x ← (1−ω)x + ω·g(x) from x₀ = 0.5; if half the budget
/// passes without reaching `tol`, bisection on g(x) − x takes over.
pub fn solve_fixed_point<G: Fn(f64) -> f64>(g: G, tol: f64, max_iter: usize) -> Result<FixedPoint> {
    if !(tol > 0.0) || max_iter == 0 {
        return Err(Error::Domain(
            "fixed point needs tol > 0 and max_iter > 0".into(),
        ));
    }
    let mut x = START;
    let damped_budget = max_iter.div_ceil(2);
    for it in 0..damped_budget {
        let gx = g(x);
        let residual = (x - gx).abs();
        if residual <= tol {
            return Ok(FixedPoint {
                value: x,
                residual,
                iterations: it,
            });
        }
        x = ((1.0 - DAMPING) * x + DAMPING * gx).clamp(0.0, 1.0);
    }

    // g(lo) − lo ≥ 0 ≥ g(hi) − hi holds throughout.
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut best = (x, (x - g(x)).abs());
    for it in damped_budget..max_iter {
        let mid = 0.5 * (lo + hi);
        let h = g(mid) - mid;
        if h.abs() < best.1 {
            best = (mid, h.abs());
        }
        if h.abs() <= tol {
            return Ok(FixedPoint {
                value: mid,
                residual: h.abs(),
                iterations: it + 1,
            });
        }
        if h > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::Convergence {
        estimate: best.0,
        residual: best.1,
        iterations: max_iter,
    })
}
