//! The Stieltjes boundary functional `α[u] = ∫ u dA` and its companions.
//!
//! A signed measure is a finite set of atoms plus a piecewise-linear density
//! on `[0, 1]`. That covers multi-point conditions `Σ αⱼ u(ηⱼ)` and weighted
//! integral conditions `∫ φ(s) u(s) ds` while keeping the total variation
//! exactly computable.

mod grid;
mod pwl;

pub use grid::{Grid, GridFunction};
pub use pwl::PiecewiseLinear;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{golden_max, Quadrature};

/// Signed measure on `[0, 1]`: atoms plus a piecewise-linear density that
/// vanishes outside its breakpoint range.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SignedMeasure {
    atoms: Vec<(f64, f64)>,
    density: Option<PiecewiseLinear>,
}

impl SignedMeasure {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn new(atoms: Vec<(f64, f64)>, density: Option<PiecewiseLinear>) -> Result<Self> {
        for &(loc, w) in &atoms {
            if !(0.0..=1.0).contains(&loc) || !w.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "atom ({loc}, {w}) must sit in [0, 1] with finite weight"
                )));
            }
        }
        let density = match density {
            Some(d) => {
                let (lo, hi) = d.domain();
                if lo < 0.0 || hi > 1.0 {
                    return Err(Error::InvalidInput(format!(
                        "density breakpoints [{lo}, {hi}] leave [0, 1]"
                    )));
                }
                Some(d.with_zero_outside())
            }
            None => None,
        };
        Ok(Self { atoms, density })
    }

    pub fn atoms(atoms: Vec<(f64, f64)>) -> Result<Self> {
        Self::new(atoms, None)
    }

    pub fn density(density: PiecewiseLinear) -> Result<Self> {
        Self::new(Vec::new(), Some(density))
    }

    pub fn atom_list(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn density_part(&self) -> Option<&PiecewiseLinear> {
        self.density.as_ref()
    }

    pub fn is_zero(&self) -> bool {
        self.atoms.iter().all(|a| a.1 == 0.0)
            && self
                .density
                .as_ref()
                .is_none_or(|d| d.values().iter().all(|v| *v == 0.0))
    }

    /// Atom locations and density breakpoints: the kinks `α` introduces.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut b: Vec<f64> = self.atoms.iter().map(|a| a.0).collect();
        if let Some(d) = &self.density {
            b.extend_from_slice(d.breakpoints());
        }
        b
    }

    /// `Var(A) = Σ|wⱼ| + ∫|φ|`.
    pub fn total_variation(&self) -> f64 {
        let atoms: f64 = self.atoms.iter().map(|a| a.1.abs()).sum();
        atoms + self.density.as_ref().map_or(0.0, |d| d.integral_abs())
    }

    /// `α[u] = Σ wⱼ u(ηⱼ) + ∫ φ u`. `u_breaks` lists kinks of `u` so the
    /// density part can be split there.
    pub fn apply<F: Fn(f64) -> f64 + ?Sized>(&self, u: &F, quad: &Quadrature, u_breaks: &[f64]) -> f64 {
        let atoms: f64 = self.atoms.iter().map(|&(loc, w)| w * u(loc)).sum();
        let density = match &self.density {
            Some(d) => {
                let (lo, hi) = d.domain();
                let mut breaks = d.breakpoints().to_vec();
                breaks.extend_from_slice(u_breaks);
                quad.integrate(&|s| d.eval(s) * u(s), lo, hi, &breaks)
            }
            None => 0.0,
        };
        atoms + density
    }

    /// `α[u]` for a grid function, splitting the density part at grid nodes.
    pub fn apply_grid(&self, u: &GridFunction, quad: &Quadrature) -> f64 {
        self.apply(&|s| u.eval(s), quad, u.nodes())
    }

    /// `𝒦_A(s) = ∫ k(t, s) dA(t)`, evaluated pointwise.
    ///
    /// The density part is split at `t = s` and at `t_breaks` (the kernel's
    /// other kinks in `t`).
    pub fn kernel_moment<'a, K>(
        &'a self,
        k: &'a K,
        t_breaks: &'a [f64],
        quad: &'a Quadrature,
    ) -> impl Fn(f64) -> f64 + 'a
    where
        K: Fn(f64, f64) -> f64 + ?Sized,
    {
        move |s| {
            let atoms: f64 = self.atoms.iter().map(|&(loc, w)| w * k(loc, s)).sum();
            let density = match &self.density {
                Some(d) => {
                    let (lo, hi) = d.domain();
                    let mut breaks = d.breakpoints().to_vec();
                    breaks.extend_from_slice(t_breaks);
                    breaks.push(s);
                    quad.integrate(&|t| d.eval(t) * k(t, s), lo, hi, &breaks)
                }
                None => 0.0,
            };
            atoms + density
        }
    }
}

/// Outcome of a sampled non-negativity scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PositivityReport {
    pub holds: bool,
    /// Minimizing grid sample.
    pub worst_s: f64,
    pub worst_value: f64,
    /// Golden-section refinement of the minimum around `worst_s`.
    pub refined_s: f64,
    pub refined_value: f64,
    /// First sign change from non-negative to negative, located by bisection.
    pub first_crossing: Option<f64>,
}

pub const POSITIVITY_TOL: f64 = 1e-12;
pub const DEFAULT_POSITIVITY_SAMPLES: usize = 4097;

/// Checks `f(s) ≥ -1e-12` on a uniform grid of `samples` points in `[0, 1]`.
///
/// Violations on sets smaller than the grid spacing can go unnoticed.
pub fn check_positivity<F: Fn(f64) -> f64 + ?Sized>(f: &F, samples: usize) -> PositivityReport {
    let n = samples.max(2);
    let h = 1.0 / (n - 1) as f64;
    let grid: Vec<f64> = (0..n).map(|i| if i == n - 1 { 1.0 } else { i as f64 * h }).collect();
    let vals: Vec<f64> = grid.iter().map(|&s| f(s)).collect();
    let (wi, wv) = vals
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |(bi, bv), (i, &v)| if v < bv { (i, v) } else { (bi, bv) });
    let lo = grid[wi.saturating_sub(1)];
    let hi = grid[(wi + 1).min(n - 1)];
    let (rs, rv_neg) = golden_max(&|s| -f(s), lo, hi, 1e-12);
    let (refined_s, refined_value) = if -rv_neg < wv { (rs, -rv_neg) } else { (grid[wi], wv) };

    let first_crossing = vals.windows(2).position(|w| w[0] >= 0.0 && w[1] < 0.0).map(|i| {
        let (mut a, mut b) = (grid[i], grid[i + 1]);
        for _ in 0..60 {
            let m = 0.5 * (a + b);
            if f(m) >= 0.0 {
                a = m;
            } else {
                b = m;
            }
        }
        0.5 * (a + b)
    });

    PositivityReport {
        holds: wv >= -POSITIVITY_TOL,
        worst_s: grid[wi],
        worst_value: wv,
        refined_s,
        refined_value,
        first_crossing,
    }
}
