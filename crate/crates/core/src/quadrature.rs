//! Composite Gauss–Legendre quadrature with breakpoint splitting.
//!
//! Integrands in this crate are piecewise smooth with kinks at known
//! locations (the kernel diagonal `s = t`, the nonlocal point `η`, measure
//! atoms, grid nodes). Splitting panels at those points restores the
//! spectral accuracy of the Gauss rule; an adaptive bisection on each
//! segment picks up any kinks that were not declared.

use std::sync::Arc;

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Builds an `n`-point rule by Newton iteration on `P_n`.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Chebyshev-like initial guess for the i-th largest root.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Applies the rule on `[a, b]`.
    pub fn panel<F: Fn(f64) -> f64 + ?Sized>(&self, f: &F, a: f64, b: f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(mid + half * x))
            .sum::<f64>()
            * half
    }

    /// Nodes and weights mapped to `[a, b]`, appended to `out`.
    pub fn push_mapped(&self, a: f64, b: f64, out: &mut Vec<(f64, f64)>) {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            out.push((mid + half * x, w * half));
        }
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let d = if n == 0 {
        0.0
    } else {
        n as f64 * (x * p1 - p0) / (x * x - 1.0)
    };
    (p, d)
}

/// Composite quadrature settings shared by every integral in a problem.
#[derive(Debug, Clone)]
pub struct Quadrature {
    rule: Arc<GaussLegendre>,
    /// Absolute tolerance per unit length for the adaptive refinement.
    pub tol: f64,
    pub max_depth: u32,
    /// Debug override: ignore breakpoints and adaptivity, use this many
    /// uniform panels.
    pub fixed_panels: Option<usize>,
}

impl Default for Quadrature {
    fn default() -> Self {
        Self::new(16, 1e-13)
    }
}

impl Quadrature {
    pub fn new(points_per_panel: usize, tol: f64) -> Self {
        Self {
            rule: Arc::new(GaussLegendre::new(points_per_panel)),
            tol,
            max_depth: 40,
            fixed_panels: None,
        }
    }

    /// A deliberately coarse rule: `panels` uniform panels, no splitting.
    pub fn crippled(panels: usize) -> Self {
        Self {
            fixed_panels: Some(panels.max(1)),
            ..Self::default()
        }
    }

    pub fn rule(&self) -> &GaussLegendre {
        &self.rule
    }

    /// Integrates `f` over `[a, b]`, splitting at every breakpoint strictly
    /// inside the interval.
    ///
    /// Kinks of `f` must be listed in `breaks`: a kink close to a panel end
    /// can look smooth to the bisection error estimate at every depth.
    pub fn integrate<F: Fn(f64) -> f64 + ?Sized>(
        &self,
        f: &F,
        a: f64,
        b: f64,
        breaks: &[f64],
    ) -> f64 {
        if b <= a {
            return 0.0;
        }
        if let Some(n) = self.fixed_panels {
            let h = (b - a) / n as f64;
            return (0..n)
                .map(|i| self.rule.panel(f, a + i as f64 * h, a + (i + 1) as f64 * h))
                .sum();
        }
        let segments = split_points(a, b, breaks);
        let total = b - a;
        segments
            .windows(2)
            .map(|w| {
                let (lo, hi) = (w[0], w[1]);
                let whole = self.rule.panel(f, lo, hi);
                self.adapt(f, lo, hi, whole, self.tol * (hi - lo) / total, 0)
            })
            .sum()
    }

    fn adapt<F: Fn(f64) -> f64 + ?Sized>(
        &self,
        f: &F,
        lo: f64,
        hi: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let mid = 0.5 * (lo + hi);
        let left = self.rule.panel(f, lo, mid);
        let right = self.rule.panel(f, mid, hi);
        let refined = left + right;
        let err = (refined - whole).abs();
        if err <= tol.max(4.0 * f64::EPSILON * refined.abs()) || depth >= self.max_depth {
            return refined;
        }
        self.adapt(f, lo, mid, left, 0.5 * tol, depth + 1)
            + self.adapt(f, mid, hi, right, 0.5 * tol, depth + 1)
    }

    /// Fixed (non-adaptive) nodes and weights on `[a, b]`, one Gauss panel
    /// per segment between consecutive breakpoints.
    pub fn fixed_nodes(&self, a: f64, b: f64, breaks: &[f64]) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        if b <= a {
            return out;
        }
        if let Some(n) = self.fixed_panels {
            let h = (b - a) / n as f64;
            for i in 0..n {
                self.rule
                    .push_mapped(a + i as f64 * h, a + (i + 1) as f64 * h, &mut out);
            }
            return out;
        }
        for w in split_points(a, b, breaks).windows(2) {
            self.rule.push_mapped(w[0], w[1], &mut out);
        }
        out
    }
}

/// Sorted, deduplicated `[a, breaks ∩ (a, b), b]`.
pub fn split_points(a: f64, b: f64, breaks: &[f64]) -> Vec<f64> {
    let span = b - a;
    let mut pts = Vec::with_capacity(breaks.len() + 2);
    pts.push(a);
    pts.extend(breaks.iter().copied().filter(|&x| x > a && x < b));
    pts.push(b);
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|x, y| (*x - *y).abs() <= 1e-14 * span.max(1.0));
    if pts.len() < 2 || *pts.last().unwrap() != b {
        // dedup may have merged b into its predecessor
        if let Some(last) = pts.last_mut() {
            *last = b;
        }
    }
    pts
}

/// Golden-section search for the maximum of `f` on `[lo, hi]`.
pub fn golden_max<F: Fn(f64) -> f64>(f: &F, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let inv_phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    let mut iters = 0;
    while hi - lo > tol && iters < 200 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        }
        iters += 1;
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Dense-grid scan followed by golden-section refinement around the best
/// sample. Returns `(argmax, max)`. The endpoints are always candidates.
pub fn grid_golden_max<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64, n: usize, tol: f64) -> (f64, f64) {
    let n = n.max(2);
    let h = (hi - lo) / (n - 1) as f64;
    let mut best = (lo, f(lo));
    let mut best_i = 0;
    for i in 1..n {
        let t = if i == n - 1 { hi } else { lo + i as f64 * h };
        let v = f(t);
        if v > best.1 {
            best = (t, v);
            best_i = i;
        }
    }
    let a = lo + best_i.saturating_sub(1) as f64 * h;
    let b = (lo + (best_i + 1) as f64 * h).min(hi);
    let refined = golden_max(f, a, b, tol);
    if refined.1 > best.1 {
        refined
    } else {
        best
    }
}
