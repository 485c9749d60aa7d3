//! The nonlinearity `F(t, φ)` and its growth numbers.
//!
//! `F` is either a delay form `F(t, φ) = f(t, φ(0), φ(-r))`, whose sup/inf
//! numbers are estimated on a grid, or an envelope form where the user
//! supplies certified growth numbers as a table.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type DelayFn = Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>;
pub type SegmentFn = Arc<dyn Fn(f64, &HistorySegment<'_>) -> f64 + Send + Sync>;

/// The history segment `u_t(θ) = u(t + θ)`, `θ ∈ [-r, 0]`.
#[derive(Clone, Copy)]
pub struct HistorySegment<'a> {
    t: f64,
    r: f64,
    u: &'a (dyn Fn(f64) -> f64 + 'a),
}

impl<'a> HistorySegment<'a> {
    pub fn new(t: f64, r: f64, u: &'a (dyn Fn(f64) -> f64 + 'a)) -> Self {
        Self { t, r, u }
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    /// `u(t + θ)`; `θ` is clamped to `[-r, 0]`.
    pub fn at(&self, theta: f64) -> f64 {
        (self.u)(self.t + theta.clamp(-self.r, 0.0))
    }
}

impl fmt::Debug for HistorySegment<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HistorySegment")
            .field("t", &self.t)
            .field("r", &self.r)
            .finish_non_exhaustive()
    }
}

/// Tabulated growth numbers: rows `(ρ, F^(ρ), F_(ρ))`, linear in `ln ρ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeTable {
    rows: Vec<(f64, f64, f64)>,
}

impl EnvelopeTable {
    pub fn new(mut rows: Vec<(f64, f64, f64)>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidInput("envelope table is empty".into()));
        }
        rows.sort_by(|x, y| x.0.total_cmp(&y.0));
        if rows.iter().any(|r| !(r.0 > 0.0) || !r.1.is_finite() || !r.2.is_finite()) {
            return Err(Error::InvalidInput("envelope rows need rho > 0 and finite values".into()));
        }
        if rows.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::InvalidInput("envelope rho values must be distinct".into()));
        }
        Ok(Self { rows })
    }

    pub fn rows(&self) -> &[(f64, f64, f64)] {
        &self.rows
    }

    fn interpolate(&self, rho: f64, pick: impl Fn(&(f64, f64, f64)) -> f64) -> Result<f64> {
        let rows = &self.rows;
        let (lo, hi) = (rows[0].0, rows[rows.len() - 1].0);
        if !(rho >= lo && rho <= hi) {
            return Err(Error::EnvelopeOutOfRange(rho));
        }
        if rows.len() == 1 {
            return Ok(pick(&rows[0]));
        }
        let i = rows.partition_point(|r| r.0 <= rho).clamp(1, rows.len() - 1) - 1;
        let (x0, x1) = (rows[i].0.ln(), rows[i + 1].0.ln());
        let w = (rho.ln() - x0) / (x1 - x0);
        Ok(pick(&rows[i]) * (1.0 - w) + pick(&rows[i + 1]) * w)
    }

    pub fn sup(&self, rho: f64) -> Result<f64> {
        self.interpolate(rho, |r| r.1)
    }

    pub fn inf(&self, rho: f64) -> Result<f64> {
        self.interpolate(rho, |r| r.2)
    }
}

#[derive(Clone)]
pub enum Nonlinearity {
    /// `F(t, φ) = f(t, φ(0), φ(-r))`.
    Delay { f: DelayFn, r: f64 },
    /// User-certified growth numbers plus an optional pointwise evaluator.
    Envelope {
        table: EnvelopeTable,
        evaluator: Option<SegmentFn>,
        r: f64,
    },
}

impl fmt::Debug for Nonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Delay { r, .. } => write!(f, "Delay {{ r: {r} }}"),
            Self::Envelope { table, evaluator, r } => f
                .debug_struct("Envelope")
                .field("table", table)
                .field("evaluator", &evaluator.is_some())
                .field("r", r)
                .finish(),
        }
    }
}

impl Nonlinearity {
    pub fn delay<Fun>(f: Fun, r: f64) -> Result<Self>
    where
        Fun: Fn(f64, f64, f64) -> f64 + Send + Sync + 'static,
    {
        check_delay(r)?;
        Ok(Self::Delay { f: Arc::new(f), r })
    }

    pub fn envelope(table: EnvelopeTable, evaluator: Option<SegmentFn>, r: f64) -> Result<Self> {
        check_delay(r)?;
        Ok(Self::Envelope { table, evaluator, r })
    }

    /// The zero nonlinearity.
    pub fn zero(r: f64) -> Result<Self> {
        Self::delay(|_, _, _| 0.0, r)
    }

    pub fn r(&self) -> f64 {
        match self {
            Self::Delay { r, .. } | Self::Envelope { r, .. } => *r,
        }
    }

    /// Whether the sup/inf numbers come from a grid scan.
    pub fn is_grid_estimated(&self) -> bool {
        matches!(self, Self::Delay { .. })
    }

    /// `F(t, u_t)`. Negative values violate the range contract and are
    /// reported as errors.
    pub fn evaluate(&self, t: f64, seg: &HistorySegment<'_>) -> Result<f64> {
        let value = match self {
            Self::Delay { f, r } => f(t, seg.at(0.0), seg.at(-r)),
            Self::Envelope { evaluator, .. } => match evaluator {
                Some(e) => e(t, seg),
                None => return Err(Error::MissingEvaluator),
            },
        };
        if value < 0.0 || value.is_nan() {
            return Err(Error::NegativeValue { t, value });
        }
        Ok(value)
    }
}

fn check_delay(r: f64) -> Result<()> {
    if r > 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("delay r must be positive, got {r}")))
    }
}

/// Grid settings for the delay-form scans.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthOptions {
    pub t_grid: usize,
    pub uv_grid: usize,
    /// Rescan the neighbourhood of the extremum at 4× resolution.
    pub refine: bool,
    /// Multiplies sup numbers; values ≥ 1 guard against grid underestimation.
    pub sup_safety: f64,
    /// Multiplies inf numbers; values ≤ 1 guard against overestimation.
    pub inf_safety: f64,
}

impl Default for GrowthOptions {
    fn default() -> Self {
        Self {
            t_grid: 65,
            uv_grid: 65,
            refine: true,
            sup_safety: 1.0,
            inf_safety: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GrowthNumber {
    pub value: f64,
    /// `true` for grid scans, which are estimates rather than bounds.
    pub grid_estimated: bool,
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let n = n.max(2);
    (0..n)
        .map(|i| if i == n - 1 { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 })
        .collect()
}

/// Scans `sign · f` over a box and returns the best value, refining once
/// around the best grid point.
fn box_extremum(
    f: &dyn Fn(f64, f64, f64) -> f64,
    boxes: [(f64, f64); 3],
    grids: [usize; 3],
    refine: bool,
    maximize: bool,
) -> f64 {
    let better = |a: f64, b: f64| if maximize { a > b } else { a < b };
    let axes: Vec<Vec<f64>> = boxes
        .iter()
        .zip(grids)
        .map(|(&(lo, hi), n)| if hi > lo { linspace(lo, hi, n) } else { vec![lo] })
        .collect();
    let mut best = if maximize { f64::NEG_INFINITY } else { f64::INFINITY };
    let mut arg = [0usize; 3];
    for (i, &t) in axes[0].iter().enumerate() {
        for (j, &u) in axes[1].iter().enumerate() {
            for (k, &v) in axes[2].iter().enumerate() {
                let val = f(t, u, v);
                if better(val, best) {
                    best = val;
                    arg = [i, j, k];
                }
            }
        }
    }
    if !refine {
        return best;
    }
    let local: Vec<Vec<f64>> = (0..3)
        .map(|d| {
            let ax = &axes[d];
            if ax.len() == 1 {
                return ax.clone();
            }
            let lo = ax[arg[d].saturating_sub(1)];
            let hi = ax[(arg[d] + 1).min(ax.len() - 1)];
            let cells = (arg[d] + 1).min(ax.len() - 1) - arg[d].saturating_sub(1);
            linspace(lo, hi, 4 * cells + 1)
        })
        .collect();
    for &t in &local[0] {
        for &u in &local[1] {
            for &v in &local[2] {
                let val = f(t, u, v);
                if better(val, best) {
                    best = val;
                }
            }
        }
    }
    best
}

/// `F^(lower,ρ)`: the sup of `F(t,φ)/ρ` over `t ∈ [0,1]` and histories with
/// values in `[lower, ρ]`. `lower = -ρ` gives `F^(-ρ,ρ)`, `lower = 0` the
/// non-negative variant.
pub fn sup_number(f: &Nonlinearity, rho: f64, lower: f64, opts: &GrowthOptions) -> Result<GrowthNumber> {
    if !(rho > 0.0) {
        return Err(Error::RhoNonpositive(rho));
    }
    match f {
        Nonlinearity::Delay { f, .. } => {
            let scan = |t: f64, u: f64, v: f64| f(t, u, v) / rho;
            let best = box_extremum(
                &scan,
                [(0.0, 1.0), (lower, rho), (lower, rho)],
                [opts.t_grid, opts.uv_grid, opts.uv_grid],
                opts.refine,
                true,
            );
            Ok(GrowthNumber {
                value: best * opts.sup_safety,
                grid_estimated: true,
            })
        }
        Nonlinearity::Envelope { table, .. } => Ok(GrowthNumber {
            value: table.sup(rho)?,
            grid_estimated: false,
        }),
    }
}

/// `F_(ρ,ρ/c)`: the inf of `F(t,φ)/ρ` over `t ∈ [a,b]` and histories with
/// values in `[ρ, ρ/c]`. The non-negative variant is the same number.
pub fn inf_number(
    f: &Nonlinearity,
    rho: f64,
    c: f64,
    a: f64,
    b: f64,
    opts: &GrowthOptions,
) -> Result<GrowthNumber> {
    if !(rho > 0.0) {
        return Err(Error::RhoNonpositive(rho));
    }
    if !(c > 0.0 && c <= 1.0) {
        return Err(Error::CInvalid(c));
    }
    match f {
        Nonlinearity::Delay { f, .. } => {
            let scan = |t: f64, u: f64, v: f64| f(t, u, v) / rho;
            let best = box_extremum(
                &scan,
                [(a, b), (rho, rho / c), (rho, rho / c)],
                [opts.t_grid, opts.uv_grid, opts.uv_grid],
                opts.refine,
                false,
            );
            Ok(GrowthNumber {
                value: best * opts.inf_safety,
                grid_estimated: true,
            })
        }
        Nonlinearity::Envelope { table, .. } => Ok(GrowthNumber {
            value: table.inf(rho)?,
            grid_estimated: false,
        }),
    }
}

/// Change of the sup number when the grid is doubled; a convergence
/// monitor for the delay form (zero for tables).
pub fn sup_grid_drift(f: &Nonlinearity, rho: f64, lower: f64, opts: &GrowthOptions) -> Result<f64> {
    let coarse = sup_number(f, rho, lower, opts)?.value;
    let fine_opts = GrowthOptions {
        t_grid: 2 * opts.t_grid - 1,
        uv_grid: 2 * opts.uv_grid - 1,
        ..*opts
    };
    let fine = sup_number(f, rho, lower, &fine_opts)?.value;
    Ok((fine - coarse).abs())
}
