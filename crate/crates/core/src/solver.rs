//! Discretization and solution of `u = 𝓕u` on `[-r, 1]`.
//!
//! `u` is represented by its values on a [`Grid`] and linear interpolation.
//! The `s`-integral uses one Gauss panel between consecutive breakpoints,
//! where the breakpoints are the grid nodes, the nodes shifted by `r` (kinks
//! of the delayed argument), the kernel kinks, the kinks of `g` and the
//! support points of `α`. Nodes with `t ≤ 0` carry `ψ` and are not unknowns.

use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use crate::certify::{Certificate, ProblemInstance};
use crate::envelope::HistorySegment;
use crate::error::{Error, Result};
use crate::kernel::Mode;
use crate::measure::{Grid, GridFunction};
use crate::quadrature::Quadrature;

/// Gauss points per panel of the operator quadrature.
pub const DEFAULT_PANEL_POINTS: usize = 4;
/// Largest kernel matrix (entries) kept in memory; beyond it rows are
/// recomputed on every application.
const MATRIX_LIMIT: usize = 12_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Picard,
    Newton,
    PicardThenNewton,
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialGuess {
    /// `ψ` extended by zero.
    Trivial,
    /// `ψ + level · e/‖e‖` with `e = ∫k g + γ κ/(1-α[γ])`, an element of the
    /// cone.
    ConeSeed(f64),
    Custom(GridFunction),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Nodes on `[-r, 1]`.
    pub grid: usize,
    /// Picard relaxation `ω ∈ (0, 1]`.
    pub omega: f64,
    pub max_iter: usize,
    /// Target for the sup-norm residual `‖u - 𝓕u‖`.
    pub tol: f64,
    pub strategy: Strategy,
    pub initial: InitialGuess,
    pub panel_points: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            grid: 1025,
            omega: 1.0,
            max_iter: 100,
            tol: 1e-10,
            strategy: Strategy::PicardThenNewton,
            initial: InitialGuess::Trivial,
            panel_points: DEFAULT_PANEL_POINTS,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grid < 33 {
            return Err(Error::InvalidInput(format!("solver grid needs at least 33 nodes, got {}", self.grid)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidInput(format!("tolerance must be positive, got {}", self.tol)));
        }
        if !(self.omega > 0.0 && self.omega <= 1.0) {
            return Err(Error::InvalidInput(format!("relaxation must lie in (0, 1], got {}", self.omega)));
        }
        if self.panel_points == 0 {
            return Err(Error::InvalidInput("panel_points must be positive".into()));
        }
        Ok(())
    }
}

/// The operator `𝓕` frozen on one grid.
pub struct Discretization<'p> {
    p: &'p ProblemInstance,
    grid: Arc<Grid>,
    first: usize,
    psi: Vec<f64>,
    gamma: Vec<f64>,
    s: Vec<f64>,
    /// Gauss weight times `g(s)`.
    w: Vec<f64>,
    matrix: Option<Vec<f64>>,
    alpha_gamma: f64,
    moment: OnceLock<Vec<f64>>,
}

impl<'p> Discretization<'p> {
    pub fn new(p: &'p ProblemInstance, grid: Arc<Grid>, panel_points: usize) -> Result<Self> {
        if (grid.r() - p.r()).abs() > 1e-12 {
            return Err(Error::InvalidInput(format!(
                "grid starts at -{} but the delay is {}",
                grid.r(),
                p.r()
            )));
        }
        let r = p.r();
        let nodes = grid.nodes();
        let first = grid.zero_index() + 1;
        let mut breaks: Vec<f64> = nodes.iter().filter(|t| **t > 0.0).copied().collect();
        breaks.extend(nodes.iter().map(|t| t + r).filter(|t| *t > 0.0 && *t < 1.0));
        breaks.extend(p.moment_breaks());
        let rule = Quadrature::new(panel_points.max(1), 1e-13);
        let (s, w): (Vec<f64>, Vec<f64>) = rule
            .fixed_nodes(0.0, 1.0, &breaks)
            .into_iter()
            .map(|(s, w)| (s, w * p.g().eval(s)))
            .unzip();
        let psi = nodes.iter().map(|&t| p.psi_ext(t)).collect();
        let gamma = nodes.iter().map(|&t| p.kernel().eval_gamma(t)).collect();
        let rows = nodes.len() - first;
        let matrix = (rows * s.len() <= MATRIX_LIMIT).then(|| {
            let mut m = Vec::with_capacity(rows * s.len());
            for &t in &nodes[first..] {
                m.extend(s.iter().zip(&w).map(|(&sq, &wq)| p.kernel().eval_k(t, sq) * wq));
            }
            m
        });
        Ok(Self {
            p,
            grid,
            first,
            psi,
            gamma,
            s,
            w,
            matrix,
            alpha_gamma: p.alpha_gamma(),
            moment: OnceLock::new(),
        })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn problem(&self) -> &ProblemInstance {
        self.p
    }

    /// Number of quadrature nodes in `s`.
    pub fn quadrature_len(&self) -> usize {
        self.s.len()
    }

    pub fn psi_extension(&self) -> GridFunction {
        GridFunction::new(self.grid.clone(), self.psi.clone()).expect("grid sized")
    }

    fn check(&self, u: &GridFunction) -> Result<()> {
        if !Arc::ptr_eq(u.grid(), &self.grid) && **u.grid() != *self.grid {
            return Err(Error::InvalidInput("function lives on a different grid".into()));
        }
        Ok(())
    }

    /// `F(s_q, u_{s_q})` at every quadrature node.
    fn nonlinear_terms(&self, u: &GridFunction) -> Result<Vec<f64>> {
        let r = self.p.r();
        let eval = |x: f64| u.eval(x);
        let f = self.p.nonlinearity();
        self.s
            .iter()
            .map(|&s| f.evaluate(s, &HistorySegment::new(s, r, &eval)))
            .collect()
    }

    /// `Σ_q k(t, s_q) w_q g(s_q) y_q` for each node `t > 0`.
    fn integrate_rows(&self, y: &[f64]) -> Vec<f64> {
        let nq = self.s.len();
        match &self.matrix {
            Some(m) => m.chunks_exact(nq).map(|row| dot(row, y)).collect(),
            None => self.grid.nodes()[self.first..]
                .iter()
                .map(|&t| {
                    self.s
                        .iter()
                        .zip(&self.w)
                        .zip(y)
                        .map(|((&s, &w), &yq)| self.p.kernel().eval_k(t, s) * w * yq)
                        .sum()
                })
                .collect(),
        }
    }

    fn alpha(&self, u: &GridFunction) -> f64 {
        self.p.alpha().apply_grid(u, self.p.quadrature())
    }

    /// `𝓕u` on the grid.
    pub fn apply(&self, u: &GridFunction) -> Result<GridFunction> {
        self.check(u)?;
        let fq = self.nonlinear_terms(u)?;
        let integral = self.integrate_rows(&fq);
        let a = if self.p.alpha().is_zero() { 0.0 } else { self.alpha(u) };
        let mut out = self.psi.clone();
        for (i, v) in integral.into_iter().enumerate() {
            let j = self.first + i;
            out[j] = self.psi[j] + v + self.gamma[j] * a;
        }
        GridFunction::new(self.grid.clone(), out)
    }

    /// `‖u - 𝓕u‖` over the nodes.
    pub fn residual(&self, u: &GridFunction) -> Result<f64> {
        Ok(u.distance(&self.apply(u)?))
    }

    fn moments(&self) -> &[f64] {
        self.moment.get_or_init(|| {
            if self.p.alpha().is_zero() {
                vec![0.0; self.s.len()]
            } else {
                self.s.iter().map(|&s| self.p.kernel_moment(s)).collect()
            }
        })
    }

    /// `|α[u](1 - α[γ]) - ∫ 𝒦_A g F(·, u_·)|` with the operator's quadrature.
    pub fn alpha_consistency(&self, u: &GridFunction) -> Result<f64> {
        self.check(u)?;
        if self.p.alpha().is_zero() {
            return Ok(0.0);
        }
        let fq = self.nonlinear_terms(u)?;
        let rhs: f64 = self
            .moments()
            .iter()
            .zip(&self.w)
            .zip(&fq)
            .map(|((k, w), f)| k * w * f)
            .sum();
        Ok((self.alpha(u) * (1.0 - self.alpha_gamma) - rhs).abs())
    }

    /// `e = ∫ k g + γ κ/(1-α[γ])` on the grid (zero for `t ≤ 0`).
    pub fn cone_direction(&self) -> Vec<f64> {
        let ones = vec![1.0; self.s.len()];
        let integral = self.integrate_rows(&ones);
        let kappa: f64 = self.moments().iter().zip(&self.w).map(|(k, w)| k * w).sum::<f64>()
            / (1.0 - self.alpha_gamma);
        let mut e = vec![0.0; self.grid.len()];
        for (i, v) in integral.into_iter().enumerate() {
            let j = self.first + i;
            e[j] = v + self.gamma[j] * kappa;
        }
        e
    }

    pub fn initial(&self, guess: &InitialGuess) -> Result<GridFunction> {
        match guess {
            InitialGuess::Trivial => Ok(self.psi_extension()),
            InitialGuess::ConeSeed(level) => {
                let e = self.cone_direction();
                let norm = e.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                if !(norm > 0.0) {
                    return Err(Error::InvalidInput("cone direction vanishes (g = 0?)".into()));
                }
                let vals = self.psi.iter().zip(&e).map(|(p, e)| p + level * e / norm).collect();
                GridFunction::new(self.grid.clone(), vals)
            }
            InitialGuess::Custom(u) => {
                self.check(u)?;
                Ok(u.clone())
            }
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Restarted GMRES for `A x = b` with `x₀ = 0`.
pub fn gmres<A>(mut apply: A, b: &[f64], restart: usize, max_restarts: usize, rtol: f64) -> Result<Vec<f64>>
where
    A: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    let n = b.len();
    let bnorm = norm2(b);
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok(x);
    }
    let target = rtol * bnorm;
    for _ in 0..max_restarts.max(1) {
        let ax = apply(&x)?;
        let r: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let beta = norm2(&r);
        if beta <= target {
            break;
        }
        let m = restart.max(1).min(n);
        let mut v: Vec<Vec<f64>> = vec![r.iter().map(|x| x / beta).collect()];
        let mut h = vec![vec![0.0; m]; m + 1];
        let (mut cs, mut sn) = (vec![0.0; m], vec![0.0; m]);
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut k_used = 0;
        for k in 0..m {
            let mut w = apply(&v[k])?;
            for j in 0..=k {
                h[j][k] = dot(&w, &v[j]);
                for (wi, vi) in w.iter_mut().zip(&v[j]) {
                    *wi -= h[j][k] * vi;
                }
            }
            let wn = norm2(&w);
            h[k + 1][k] = wn;
            for j in 0..k {
                let tmp = cs[j] * h[j][k] + sn[j] * h[j + 1][k];
                h[j + 1][k] = -sn[j] * h[j][k] + cs[j] * h[j + 1][k];
                h[j][k] = tmp;
            }
            let denom = h[k][k].hypot(h[k + 1][k]);
            if denom == 0.0 {
                k_used = k;
                break;
            }
            cs[k] = h[k][k] / denom;
            sn[k] = h[k + 1][k] / denom;
            h[k][k] = denom;
            h[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            k_used = k + 1;
            if g[k + 1].abs() <= target || wn == 0.0 {
                break;
            }
            v.push(w.into_iter().map(|x| x / wn).collect());
        }
        // back substitution on the triangular system
        let mut y = vec![0.0; k_used];
        for i in (0..k_used).rev() {
            let s: f64 = (i + 1..k_used).map(|j| h[i][j] * y[j]).sum();
            y[i] = (g[i] - s) / h[i][i];
        }
        for (j, yj) in y.iter().enumerate() {
            for (xi, vi) in x.iter_mut().zip(&v[j]) {
                *xi += yj * vi;
            }
        }
        if g[k_used].abs() <= target {
            break;
        }
    }
    Ok(x)
}

/// Per-clause margins of cone membership (`≥ -slack` passes).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClauseMargins {
    /// `-max |v|` over nodes in `[-r, 0]`.
    pub zero_history: f64,
    /// `min_[a,b] v - c ‖v‖`.
    pub min_clause: f64,
    /// `α[v]`.
    pub alpha_clause: f64,
    /// `min v` (non-negative mode only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nonnegative: Option<f64>,
}

impl ClauseMargins {
    /// Smallest margin and the clause it belongs to.
    pub fn worst(&self) -> (f64, &'static str) {
        let mut all = vec![
            (self.zero_history, "zero_history"),
            (self.min_clause, "min_clause"),
            (self.alpha_clause, "alpha_clause"),
        ];
        if let Some(n) = self.nonnegative {
            all.push((n, "nonnegative"));
        }
        all.into_iter().fold((f64::INFINITY, ""), |b, x| if x.0 < b.0 { x } else { b })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    InKPsi { slack: f64 },
    InPositiveCone { slack: f64 },
    Outside { violation: f64, clause: String },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConeMembership {
    #[serde(flatten)]
    pub verdict: Verdict,
    pub margins: ClauseMargins,
}

impl ConeMembership {
    pub fn inside(&self) -> bool {
        !matches!(self.verdict, Verdict::Outside { .. })
    }

    pub fn label(&self) -> &'static str {
        match self.verdict {
            Verdict::InKPsi { .. } => "in_k_psi",
            Verdict::InPositiveCone { .. } => "in_positive_cone",
            Verdict::Outside { .. } => "outside",
        }
    }
}

/// `v = u - ψ` against the cone clauses.
pub fn check_cone_membership(p: &ProblemInstance, u: &GridFunction, slack: f64) -> ConeMembership {
    let cone = p.cone();
    let vals: Vec<f64> = u
        .nodes()
        .iter()
        .zip(u.values())
        .map(|(&t, &x)| x - p.psi_ext(t))
        .collect();
    let v = GridFunction::new(u.grid().clone(), vals).expect("same grid");
    let zero_history = -v
        .nodes()
        .iter()
        .zip(v.values())
        .filter(|(t, _)| **t <= 0.0)
        .fold(0.0f64, |m, (_, x)| m.max(x.abs()));
    let min_clause = v.min_on(cone.a, cone.b) - cone.c * v.norm();
    let alpha_clause = p.alpha().apply_grid(&v, p.quadrature());
    let nonnegative = (p.mode() == Mode::NonNegative).then(|| v.values().iter().copied().fold(f64::INFINITY, f64::min));
    let margins = ClauseMargins {
        zero_history,
        min_clause,
        alpha_clause,
        nonnegative,
    };
    let (worst, clause) = margins.worst();
    let verdict = if worst >= -slack {
        match p.mode() {
            Mode::SignChanging => Verdict::InKPsi { slack: worst },
            Mode::NonNegative => Verdict::InPositiveCone { slack: worst },
        }
    } else {
        Verdict::Outside {
            violation: worst,
            clause: clause.to_string(),
        }
    };
    ConeMembership { verdict, margins }
}

/// `(‖ψ‖_[-r,0], ‖v‖_[0,1])` from the node values.
pub fn norm_split(p: &ProblemInstance, u: &GridFunction) -> (f64, f64) {
    let mut hist = 0.0f64;
    let mut body = 0.0f64;
    for (&t, &x) in u.nodes().iter().zip(u.values()) {
        if t <= 0.0 {
            hist = hist.max(x.abs());
        } else {
            body = body.max((x - p.psi_ext(t)).abs());
        }
    }
    (hist, body)
}

/// `𝓕u` on the grid of `u`.
pub fn apply_operator(p: &ProblemInstance, u: &GridFunction) -> Result<GridFunction> {
    Discretization::new(p, u.grid().clone(), DEFAULT_PANEL_POINTS)?.apply(u)
}

/// The α-substitution identity defect at `u`.
pub fn alpha_consistency(p: &ProblemInstance, u: &GridFunction) -> Result<f64> {
    Discretization::new(p, u.grid().clone(), DEFAULT_PANEL_POINTS)?.alpha_consistency(u)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolutionReport {
    #[serde(skip)]
    pub u: GridFunction,
    /// Recomputed from `u`.
    pub residual: f64,
    pub iterations: usize,
    pub cone_membership: ConeMembership,
    /// `(‖ψ‖_[-r,0], ‖v‖_[0,1])`.
    pub norm_split: (f64, f64),
    pub is_trivial: bool,
    pub alpha_consistency: f64,
}

impl SolutionReport {
    pub fn norm(&self) -> f64 {
        self.norm_split.0.max(self.norm_split.1)
    }
}

/// Slack used when classifying computed solutions.
pub const MEMBERSHIP_SLACK: f64 = 1e-9;

struct Iterate {
    u: GridFunction,
    residual: f64,
}

fn picard(d: &Discretization<'_>, u0: GridFunction, cfg: &SolverConfig, budget: usize, early_exit: bool) -> Result<(Iterate, usize)> {
    let mut u = u0;
    let mut best: Option<Iterate> = None;
    let mut stalls = 0;
    let mut prev = f64::INFINITY;
    let mut used = 0;
    for _ in 0..budget {
        let fu = d.apply(&u)?;
        let res = u.distance(&fu);
        if best.as_ref().is_none_or(|b| res < b.residual) {
            best = Some(Iterate { u: u.clone(), residual: res });
        }
        if res < cfg.tol || !res.is_finite() {
            break;
        }
        if early_exit {
            stalls = if res > 0.9 * prev { stalls + 1 } else { 0 };
            if stalls >= 3 || res > 1e3 * best.as_ref().unwrap().residual {
                break;
            }
        }
        prev = res;
        u = u.axpy(cfg.omega, &fu.axpy(-1.0, &u));
        used += 1;
    }
    // the last update may be the converged one
    let res = d.residual(&u)?;
    if best.as_ref().is_none_or(|b| res < b.residual) {
        best = Some(Iterate { u, residual: res });
    }
    Ok((best.unwrap(), used))
}

fn newton(d: &Discretization<'_>, u0: GridFunction, cfg: &SolverConfig, budget: usize) -> Result<(Iterate, usize)> {
    let first = d.first;
    let mut u = u0;
    let mut fu = d.apply(&u)?;
    let mut res = u.distance(&fu);
    let mut used = 0;
    while used < budget && res >= cfg.tol && res.is_finite() {
        used += 1;
        let rhs: Vec<f64> = u.values()[first..]
            .iter()
            .zip(&fu.values()[first..])
            .map(|(x, f)| f - x)
            .collect();
        let unorm = u.norm();
        let jac = |dir: &[f64]| -> Result<Vec<f64>> {
            let dn = dir.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            if dn == 0.0 {
                return Ok(vec![0.0; dir.len()]);
            }
            let eps = f64::EPSILON.sqrt() * (1.0 + unorm) / dn;
            let mut shifted = u.clone();
            for (x, dx) in shifted.values_mut()[first..].iter_mut().zip(dir) {
                *x += eps * dx;
            }
            let fs = d.apply(&shifted)?;
            Ok(dir
                .iter()
                .zip(fs.values()[first..].iter().zip(&fu.values()[first..]))
                .map(|(dx, (a, b))| dx - (a - b) / eps)
                .collect())
        };
        let step = gmres(jac, &rhs, 40, 3, 1e-10)?;
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..12 {
            let mut trial = u.clone();
            for (x, dx) in trial.values_mut()[first..].iter_mut().zip(&step) {
                *x += lambda * dx;
            }
            let ft = d.apply(&trial);
            if let Ok(ft) = ft {
                let r = trial.distance(&ft);
                if r.is_finite() && r < (1.0 - 1e-4 * lambda) * res {
                    u = trial;
                    fu = ft;
                    res = r;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    Ok((Iterate { u, residual: res }, used))
}

/// Solves `u = 𝓕u` from the configured initial guess.
pub fn solve(p: &ProblemInstance, cfg: &SolverConfig) -> Result<SolutionReport> {
    cfg.validate()?;
    let grid = Arc::new(Grid::new(p.r(), cfg.grid)?);
    let d = Discretization::new(p, grid, cfg.panel_points)?;
    solve_on(&d, cfg)
}

/// Like [`solve`], on a prepared discretization.
pub fn solve_on(d: &Discretization<'_>, cfg: &SolverConfig) -> Result<SolutionReport> {
    cfg.validate()?;
    let u0 = d.initial(&cfg.initial)?;
    let (best, iterations) = match cfg.strategy {
        Strategy::Picard => picard(d, u0, cfg, cfg.max_iter, false)?,
        Strategy::Newton => newton(d, u0, cfg, cfg.max_iter)?,
        Strategy::PicardThenNewton => {
            let (it, used) = picard(d, u0, cfg, cfg.max_iter.min(50), true)?;
            if it.residual < cfg.tol {
                (it, used)
            } else {
                let (nt, nused) = newton(d, it.u, cfg, cfg.max_iter.saturating_sub(used))?;
                (nt, used + nused)
            }
        }
    };
    let residual = d.residual(&best.u)?;
    if !(residual < cfg.tol) {
        return Err(Error::NoConvergence {
            residual,
            iterations,
            best: Box::new(best.u),
        });
    }
    report(d, best.u, residual, iterations, cfg.tol)
}

fn report(d: &Discretization<'_>, u: GridFunction, residual: f64, iterations: usize, tol: f64) -> Result<SolutionReport> {
    let p = d.problem();
    let norm_split = norm_split(p, &u);
    Ok(SolutionReport {
        cone_membership: check_cone_membership(p, &u, MEMBERSHIP_SLACK),
        alpha_consistency: d.alpha_consistency(&u)?,
        is_trivial: norm_split.1 < 10.0 * tol,
        norm_split,
        residual,
        iterations,
        u,
    })
}

/// Outcome of one start of a multi-start search.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub start: String,
    pub converged: bool,
    pub residual: f64,
    pub iterations: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub is_trivial: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub in_cone: Option<bool>,
    /// `‖v‖_[0,1]` of the returned (or best) iterate.
    pub norm_v: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MultiStartReport {
    pub runs: Vec<RunSummary>,
    /// Converged nontrivial solutions in the cone, in start order.
    #[serde(skip)]
    pub solutions: Vec<SolutionReport>,
    #[serde(skip)]
    pub trivial: Option<SolutionReport>,
}

impl MultiStartReport {
    /// The nontrivial in-cone solution with the smallest residual.
    pub fn best(&self) -> Option<&SolutionReport> {
        self.solutions
            .iter()
            .min_by(|a, b| a.residual.total_cmp(&b.residual))
    }

    pub fn any_converged(&self) -> bool {
        self.runs.iter().any(|r| r.converged)
    }
}

/// Starting levels for a certificate: every rung and the geometric
/// midpoints of consecutive rungs.
pub fn seed_levels(cert: &Certificate) -> Vec<f64> {
    let rhos: Vec<f64> = cert.ladder.iter().map(|r| r.rho).collect();
    let mut out = Vec::new();
    for (i, &r) in rhos.iter().enumerate() {
        out.push(r);
        if let Some(&next) = rhos.get(i + 1) {
            out.push((r * next).sqrt());
        }
    }
    out
}

/// Runs the trivial start and one cone seed per level.
pub fn multistart(p: &ProblemInstance, cfg: &SolverConfig, levels: &[f64]) -> Result<MultiStartReport> {
    cfg.validate()?;
    let grid = Arc::new(Grid::new(p.r(), cfg.grid)?);
    let d = Discretization::new(p, grid, cfg.panel_points)?;
    let mut starts = vec![("trivial".to_string(), InitialGuess::Trivial)];
    starts.extend(levels.iter().map(|&l| (format!("cone_seed({l})"), InitialGuess::ConeSeed(l))));
    let mut report = MultiStartReport {
        runs: Vec::new(),
        solutions: Vec::new(),
        trivial: None,
    };
    for (name, init) in starts {
        let run_cfg = SolverConfig {
            initial: init,
            ..cfg.clone()
        };
        match solve_on(&d, &run_cfg) {
            Ok(sol) => {
                report.runs.push(RunSummary {
                    start: name,
                    converged: true,
                    residual: sol.residual,
                    iterations: sol.iterations,
                    is_trivial: Some(sol.is_trivial),
                    in_cone: Some(sol.cone_membership.inside()),
                    norm_v: sol.norm_split.1,
                    error: None,
                });
                if sol.is_trivial {
                    if report.trivial.is_none() {
                        report.trivial = Some(sol);
                    }
                } else if sol.cone_membership.inside() {
                    report.solutions.push(sol);
                }
            }
            Err(Error::NoConvergence {
                residual,
                iterations,
                best,
            }) => report.runs.push(RunSummary {
                start: name,
                converged: false,
                residual,
                iterations,
                is_trivial: None,
                in_cone: None,
                norm_v: norm_split(p, &best).1,
                error: None,
            }),
            Err(e) => report.runs.push(RunSummary {
                start: name,
                converged: false,
                residual: f64::NAN,
                iterations: 0,
                is_trivial: None,
                in_cone: None,
                norm_v: f64::NAN,
                error: Some(e.to_string()),
            }),
        }
    }
    Ok(report)
}
