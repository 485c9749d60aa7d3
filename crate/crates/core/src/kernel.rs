//! Green's kernels, the perturbation direction `γ`, the envelope `Φ` and the
//! cone constants for the built-in boundary value problem families.
//!
//! * Thermostat: `-u'' = y`, `u(0) = 0`, `βu'(1) + u(η) = α[u]`.
//! * Dirichlet-nonlocal: `-u'' = y`, `u(0) = 0`, `u(1) = α[u]`.
//! * Custom: user-supplied `k`, `γ`, `Φ`, `c₁`, `c₂`, validated numerically.
//!
//! All kernels are extended by zero for `t < 0`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{grid_golden_max, Quadrature};

pub type Fn1 = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type Fn2 = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Tolerance for the sampled kernel inequalities.
pub const BOUND_TOL: f64 = 1e-12;

/// Heaviside step with `H(0) = 1`.
#[inline]
pub fn heaviside(tau: f64) -> f64 {
    if tau >= 0.0 {
        1.0
    } else {
        0.0
    }
}

/// Which cone the problem lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Solutions positive on `[a, b]`, allowed to change sign elsewhere.
    SignChanging,
    /// Solutions non-negative on `[-r, 1]`.
    NonNegative,
}

/// User-supplied kernel data. Nothing here is derived; everything is
/// checked by [`validate_bounds`] and the hypothesis validator.
#[derive(Clone)]
pub struct CustomKernel {
    pub k: Fn2,
    pub gamma: Fn1,
    pub phi: Fn1,
    /// `c₁(a, b)`.
    pub c1: Fn2,
    /// `c₂(a, b)`.
    pub c2: Fn2,
    /// Known kinks of `k(t, ·)` besides `s = t`.
    pub s_breaks: Vec<f64>,
}

impl fmt::Debug for CustomKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomKernel")
            .field("s_breaks", &self.s_breaks)
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone)]
pub enum KernelVariant {
    Thermostat { beta: f64, eta: f64 },
    DirichletNonlocal,
    Custom(CustomKernel),
}

#[derive(Debug, Clone)]
pub struct KernelFamily {
    pub variant: KernelVariant,
    pub mode: Mode,
}

/// The envelope `Φ` with `|k(t, s)| ≤ Φ(s)`.
#[derive(Clone)]
pub enum PhiBound {
    /// `Φ(s) = slope · s`.
    Linear { slope: f64 },
    /// `βs/(β+η)` for `s ≥ η`, `s(1 - s/(β+η))` for `s < η`.
    ThermostatPositive { beta: f64, eta: f64 },
    /// `Φ(s) = s(1 - s)`.
    Parabola,
    Custom(Fn1),
}

impl fmt::Debug for PhiBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Linear { slope } => write!(f, "Linear({slope})"),
            Self::ThermostatPositive { beta, eta } => write!(f, "ThermostatPositive({beta}, {eta})"),
            Self::Parabola => write!(f, "Parabola"),
            Self::Custom(_) => write!(f, "Custom"),
        }
    }
}

impl PhiBound {
    pub fn eval(&self, s: f64) -> f64 {
        match self {
            Self::Linear { slope } => slope * s,
            Self::ThermostatPositive { beta, eta } => {
                let sum = beta + eta;
                if s >= *eta {
                    beta / sum * s
                } else {
                    s * (1.0 - s / sum)
                }
            }
            Self::Parabola => s * (1.0 - s),
            Self::Custom(f) => f(s),
        }
    }

    pub(crate) fn breaks(&self) -> Vec<f64> {
        match self {
            Self::ThermostatPositive { eta, .. } => vec![*eta],
            _ => Vec::new(),
        }
    }
}

/// Interval, cone constants and envelope for one choice of `[a, b]`.
#[derive(Debug, Clone, Serialize)]
pub struct ConeData {
    pub a: f64,
    pub b: f64,
    pub c1: f64,
    pub c2: f64,
    pub c: f64,
    #[serde(skip)]
    pub phi: PhiBound,
}

impl ConeData {
    /// Builds cone data from explicit constants (for custom kernels and
    /// tests); checks `0 < a < b ≤ 1` and `c₁, c₂ ∈ (0, 1]`.
    pub fn new(a: f64, b: f64, c1: f64, c2: f64, phi: PhiBound) -> Result<Self> {
        check_interval_basic(a, b)?;
        for c in [c1, c2] {
            if !(c > 0.0 && c <= 1.0) {
                return Err(Error::CInvalid(c));
            }
        }
        Ok(Self {
            a,
            b,
            c1,
            c2,
            c: c1.min(c2),
            phi,
        })
    }
}

fn check_interval_basic(a: f64, b: f64) -> Result<()> {
    if !(a > 0.0) {
        return Err(Error::IntervalInvalid {
            constraint: format!("a > 0 (a = {a})"),
        });
    }
    if !(a < b) {
        return Err(Error::IntervalInvalid {
            constraint: format!("a < b (a = {a}, b = {b})"),
        });
    }
    if !(b <= 1.0) {
        return Err(Error::IntervalInvalid {
            constraint: format!("b <= 1 (b = {b})"),
        });
    }
    Ok(())
}

impl KernelFamily {
    pub fn thermostat(beta: f64, eta: f64, mode: Mode) -> Result<Self> {
        let fam = Self {
            variant: KernelVariant::Thermostat { beta, eta },
            mode,
        };
        fam.validate()?;
        Ok(fam)
    }

    pub fn dirichlet(mode: Mode) -> Self {
        Self {
            variant: KernelVariant::DirichletNonlocal,
            mode,
        }
    }

    pub fn custom(kernel: CustomKernel, mode: Mode) -> Self {
        Self {
            variant: KernelVariant::Custom(kernel),
            mode,
        }
    }

    /// Parameter ranges and mode compatibility.
    pub fn validate(&self) -> Result<()> {
        if let KernelVariant::Thermostat { beta, eta } = self.variant {
            if !(beta > 0.0 && beta.is_finite()) {
                return Err(Error::InvalidInput(format!("thermostat needs beta > 0, got {beta}")));
            }
            if !(eta > 0.0 && eta < 1.0) {
                return Err(Error::InvalidInput(format!("thermostat needs eta in (0, 1), got {eta}")));
            }
            if self.mode == Mode::NonNegative && beta + eta < 1.0 {
                return Err(Error::ModeUnsupported(format!(
                    "non-negative thermostat needs beta + eta >= 1, got {}",
                    beta + eta
                )));
            }
        }
        Ok(())
    }

    pub fn name(&self) -> &'static str {
        match self.variant {
            KernelVariant::Thermostat { .. } => "thermostat",
            KernelVariant::DirichletNonlocal => "dirichlet",
            KernelVariant::Custom(_) => "custom",
        }
    }

    pub fn eval_k(&self, t: f64, s: f64) -> f64 {
        if t < 0.0 {
            return 0.0;
        }
        match &self.variant {
            KernelVariant::Thermostat { beta, eta } => {
                let sum = beta + eta;
                beta * t / sum + t / sum * (eta - s) * heaviside(eta - s) - (t - s) * heaviside(t - s)
            }
            KernelVariant::DirichletNonlocal => t * (1.0 - s) - (t - s) * heaviside(t - s),
            KernelVariant::Custom(c) => (c.k)(t, s),
        }
    }

    pub fn eval_gamma(&self, t: f64) -> f64 {
        if t < 0.0 {
            return 0.0;
        }
        match &self.variant {
            KernelVariant::Thermostat { beta, eta } => t / (beta + eta),
            KernelVariant::DirichletNonlocal => t,
            KernelVariant::Custom(c) => (c.gamma)(t),
        }
    }

    /// `‖γ‖_[0,1]`.
    pub fn gamma_norm(&self) -> f64 {
        match &self.variant {
            KernelVariant::Thermostat { beta, eta } => 1.0 / (beta + eta),
            KernelVariant::DirichletNonlocal => 1.0,
            KernelVariant::Custom(_) => {
                grid_golden_max(&|t| self.eval_gamma(t).abs(), 0.0, 1.0, 4097, 1e-12).1
            }
        }
    }

    /// Kinks of `k(t, ·)` for fixed `t`.
    pub fn s_breaks(&self, t: f64) -> Vec<f64> {
        let mut b = vec![t];
        match &self.variant {
            KernelVariant::Thermostat { eta, .. } => b.push(*eta),
            KernelVariant::DirichletNonlocal => {}
            KernelVariant::Custom(c) => b.extend_from_slice(&c.s_breaks),
        }
        b
    }

    /// Kinks of `k(·, s)` independent of `s` (the diagonal is added by the
    /// caller).
    pub fn t_breaks(&self) -> Vec<f64> {
        match &self.variant {
            KernelVariant::Custom(c) => c.s_breaks.clone(),
            _ => vec![0.0],
        }
    }

    /// The envelope `Φ` for this family and mode.
    pub fn phi_bound(&self) -> Result<PhiBound> {
        self.validate()?;
        Ok(match (&self.variant, self.mode) {
            (KernelVariant::Thermostat { beta, eta }, Mode::SignChanging) => {
                let sum = beta + eta;
                if sum >= 0.5 {
                    PhiBound::Linear { slope: 1.0 }
                } else {
                    PhiBound::Linear {
                        slope: (1.0 - sum) / sum,
                    }
                }
            }
            (KernelVariant::Thermostat { beta, eta }, Mode::NonNegative) => PhiBound::ThermostatPositive {
                beta: *beta,
                eta: *eta,
            },
            (KernelVariant::DirichletNonlocal, _) => PhiBound::Parabola,
            (KernelVariant::Custom(c), _) => PhiBound::Custom(c.phi.clone()),
        })
    }

    /// `c₁`, `c₂ = a` and `c = min(c₁, c₂)` for the interval `[a, b]`.
    pub fn cone_constants(&self, a: f64, b: f64) -> Result<ConeData> {
        let phi = self.phi_bound()?;
        check_interval_basic(a, b)?;
        let (c1, c2) = match (&self.variant, self.mode) {
            (KernelVariant::Thermostat { beta, eta }, Mode::SignChanging) => {
                let sum = beta + eta;
                if !(b < sum) {
                    return Err(Error::IntervalInvalid {
                        constraint: format!("b < beta + eta (b = {b}, beta + eta = {sum})"),
                    });
                }
                let denom = if sum >= 0.5 { sum } else { 1.0 - sum };
                ((a * beta / denom).min((sum - b) / denom), a)
            }
            (KernelVariant::Thermostat { beta, eta }, Mode::NonNegative) => {
                if !(b < 1.0) {
                    return Err(Error::IntervalInvalid {
                        constraint: format!("b < 1 (b = {b})"),
                    });
                }
                (a.min(1.0 - b / (beta + eta)), a)
            }
            (KernelVariant::DirichletNonlocal, _) => {
                if !(b < 1.0) {
                    return Err(Error::IntervalInvalid {
                        constraint: format!("b < 1 (b = {b})"),
                    });
                }
                (a.min(1.0 - b), a)
            }
            (KernelVariant::Custom(c), _) => ((c.c1)(a, b), (c.c2)(a, b)),
        };
        ConeData::new(a, b, c1, c2, phi)
    }
}

/// Worst margins of the sampled kernel inequalities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundsReport {
    /// `min (Φ(s) - |k(t,s)|)` over `[0,1]²`.
    pub upper_margin: f64,
    pub upper_at: (f64, f64),
    /// `min (k(t,s) - c₁Φ(s))` over `[a,b] × [0,1]`.
    pub lower_margin: f64,
    pub lower_at: (f64, f64),
    /// `min k(t,s)` over `[0,1]²`; must be non-negative in non-negative mode.
    pub min_kernel: f64,
    /// `min Φ(s)` over `[0,1]`.
    pub min_phi: f64,
    pub pass: bool,
}

/// Samples `|k| ≤ Φ` on `[0,1]²` and `k ≥ c₁Φ` on `[a,b] × [0,1]` with
/// `grid` points per axis.
pub fn validate_bounds(fam: &KernelFamily, cone: &ConeData, grid: usize) -> BoundsReport {
    let n = grid.max(2);
    let axis = |lo: f64, hi: f64| -> Vec<f64> {
        (0..n)
            .map(|i| if i == n - 1 { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 })
            .collect()
    };
    let unit = axis(0.0, 1.0);
    let strip = axis(cone.a, cone.b);
    let phi: Vec<f64> = unit.iter().map(|&s| cone.phi.eval(s)).collect();

    let mut upper = (f64::INFINITY, (0.0, 0.0));
    let mut min_kernel = f64::INFINITY;
    for &t in &unit {
        for (&s, &p) in unit.iter().zip(&phi) {
            let k = fam.eval_k(t, s);
            let m = p - k.abs();
            if m < upper.0 {
                upper = (m, (t, s));
            }
            min_kernel = min_kernel.min(k);
        }
    }
    let mut lower = (f64::INFINITY, (0.0, 0.0));
    for &t in &strip {
        for (&s, &p) in unit.iter().zip(&phi) {
            let m = fam.eval_k(t, s) - cone.c1 * p;
            if m < lower.0 {
                lower = (m, (t, s));
            }
        }
    }
    let min_phi = phi.iter().copied().fold(f64::INFINITY, f64::min);
    let nonneg_ok = fam.mode == Mode::SignChanging || min_kernel >= -BOUND_TOL;
    BoundsReport {
        upper_margin: upper.0,
        upper_at: upper.1,
        lower_margin: lower.0,
        lower_at: lower.1,
        min_kernel,
        min_phi,
        pass: upper.0 >= -BOUND_TOL && lower.0 >= -BOUND_TOL && min_phi >= -BOUND_TOL && nonneg_ok,
    }
}

/// How well `u = ∫ k(·,s) y(s) ds` solves `-u'' = y` with the homogeneous
/// boundary conditions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GreensReport {
    /// `max |-(D²u)(tᵢ) - y(tᵢ)|` over interior nodes, central differences.
    pub interior_residual: f64,
    /// Nodes whose stencil `[tᵢ₋₁, tᵢ₊₁]` contains a kink of `y`. There the
    /// central difference is off by `h |Δy'| / 6` whatever the kernel, so
    /// they are left out of `interior_residual`.
    pub skipped_nodes: usize,
    /// Named boundary-condition residuals.
    pub bc_residuals: Vec<(String, f64)>,
}

impl GreensReport {
    pub fn max_bc_residual(&self) -> f64 {
        self.bc_residuals.iter().fold(0.0, |m, (_, v)| m.max(v.abs()))
    }
}

/// Checks that the kernel inverts the differential operator for the load
/// `y` (with known kinks `y_breaks`) on a uniform grid of `grid` points.
pub fn greens_residual<Y: Fn(f64) -> f64 + ?Sized>(
    fam: &KernelFamily,
    y: &Y,
    y_breaks: &[f64],
    grid: usize,
    quad: &Quadrature,
) -> GreensReport {
    let n = grid.max(3);
    let h = 1.0 / (n - 1) as f64;
    let u = |t: f64| {
        let mut breaks = fam.s_breaks(t);
        breaks.extend_from_slice(y_breaks);
        quad.integrate(&|s| fam.eval_k(t, s) * y(s), 0.0, 1.0, &breaks)
    };
    let nodes: Vec<f64> = (0..n).map(|i| if i == n - 1 { 1.0 } else { i as f64 * h }).collect();
    let values: Vec<f64> = nodes.iter().map(|&t| u(t)).collect();
    let straddles = |i: usize| y_breaks.iter().any(|&b| b > nodes[i - 1] && b < nodes[i + 1]);
    let skipped_nodes = (1..n - 1).filter(|&i| straddles(i)).count();
    let interior_residual = (1..n - 1)
        .filter(|&i| !straddles(i))
        .map(|i| {
            let d2 = (values[i - 1] - 2.0 * values[i] + values[i + 1]) / (h * h);
            (-d2 - y(nodes[i])).abs()
        })
        .fold(0.0, f64::max);

    let mut bc_residuals = vec![("u(0)".to_string(), values[0])];
    match &fam.variant {
        KernelVariant::Thermostat { beta, eta } => {
            // fifth-order one-sided difference for u'(1)
            let du1 = (25.0 * u(1.0) - 48.0 * u(1.0 - h) + 36.0 * u(1.0 - 2.0 * h)
                - 16.0 * u(1.0 - 3.0 * h)
                + 3.0 * u(1.0 - 4.0 * h))
                / (12.0 * h);
            bc_residuals.push(("beta*u'(1)+u(eta)".to_string(), beta * du1 + u(*eta)));
        }
        KernelVariant::DirichletNonlocal => {
            bc_residuals.push(("u(1)".to_string(), values[n - 1]));
        }
        KernelVariant::Custom(_) => {}
    }
    GreensReport {
        interior_residual,
        skipped_nodes,
        bc_residuals,
    }
}

/// `sup_t ∫₀¹ |k(t,s)| ds`, scanned on `t_grid` points and refined.
pub fn sup_abs_kernel_integral(fam: &KernelFamily, quad: &Quadrature, t_grid: usize) -> (f64, f64) {
    let f = |t: f64| quad.integrate(&|s| fam.eval_k(t, s).abs(), 0.0, 1.0, &fam.s_breaks(t));
    grid_golden_max(&f, 0.0, 1.0, t_grid, 1e-12)
}

/// Term-wise majorant `sup_t ∫ (|βt/(β+η)| + |t(η-s)⁺/(β+η)| + |(t-s)⁺|) ds`
/// of the thermostat kernel. It bounds `sup_t ∫|k|` from above and is what a
/// triangle-inequality estimate of `1/m` produces.
pub fn thermostat_termwise_majorant(beta: f64, eta: f64, quad: &Quadrature, t_grid: usize) -> (f64, f64) {
    let sum = beta + eta;
    let f = |t: f64| {
        quad.integrate(
            &|s| {
                (beta * t / sum).abs()
                    + (t / sum * (eta - s) * heaviside(eta - s)).abs()
                    + ((t - s) * heaviside(t - s)).abs()
            },
            0.0,
            1.0,
            &[t, eta],
        )
    };
    grid_golden_max(&f, 0.0, 1.0, t_grid, 1e-12)
}
