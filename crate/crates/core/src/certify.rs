//! Growth constants `m` and `M(a,b)`, hypothesis validation, index
//! conditions and multiplicity certificates.
//!
//! An index-1 rung at `ρ` holds when `F^(-ρ,ρ) / m < 1` (or `F^(0,ρ)` in
//! non-negative mode); an index-0 rung holds when `F_(ρ,ρ/c) / M(a,b) > 1`.
//! Suitably spaced rungs of alternating kind give one, two or three
//! nontrivial solutions in the affine cone `ψ + K₀`.

use std::fmt;
use std::sync::OnceLock;

use serde::ser::SerializeMap;
use serde::{Deserialize, Serialize, Serializer};

use crate::envelope::{inf_number, sup_number, GrowthOptions, Nonlinearity};
use crate::error::{Error, Result};
use crate::kernel::{validate_bounds, ConeData, KernelFamily, Mode};
use crate::measure::{check_positivity, PiecewiseLinear, SignedMeasure, DEFAULT_POSITIVITY_SAMPLES};
use crate::quadrature::{grid_golden_max, Quadrature};

/// Points of the `t`-scan used for `m` and `M(a,b)`.
pub const T_GRID: usize = 2049;
/// Default golden-section tolerance for the `t`-refinement.
pub const DEFAULT_TOL: f64 = 1e-12;

/// The full datum of the integral equation.
#[derive(Debug)]
pub struct ProblemInstance {
    kernel: KernelFamily,
    cone: ConeData,
    g: PiecewiseLinear,
    alpha: SignedMeasure,
    psi: PiecewiseLinear,
    f: Nonlinearity,
    quad: Quadrature,
    growth: GrowthOptions,
    m_cache: OnceLock<Extremum>,
    big_m_cache: OnceLock<Extremum>,
}

impl Clone for ProblemInstance {
    fn clone(&self) -> Self {
        Self {
            kernel: self.kernel.clone(),
            cone: self.cone.clone(),
            g: self.g.clone(),
            alpha: self.alpha.clone(),
            psi: self.psi.clone(),
            f: self.f.clone(),
            quad: self.quad.clone(),
            growth: self.growth,
            m_cache: OnceLock::new(),
            big_m_cache: OnceLock::new(),
        }
    }
}

impl ProblemInstance {
    /// `g` must cover `[0, 1]` and be non-negative; `psi` must cover
    /// `[-r, 0]` where `r` is the delay of `f`.
    pub fn new(
        kernel: KernelFamily,
        a: f64,
        b: f64,
        g: PiecewiseLinear,
        alpha: SignedMeasure,
        psi: PiecewiseLinear,
        f: Nonlinearity,
    ) -> Result<Self> {
        let cone = kernel.cone_constants(a, b)?;
        let r = f.r();
        let (glo, ghi) = g.domain();
        if glo > 0.0 || ghi < 1.0 {
            return Err(Error::InvalidInput(format!("g must cover [0, 1], got [{glo}, {ghi}]")));
        }
        if g.min_value() < 0.0 {
            return Err(Error::InvalidInput("g must be non-negative".into()));
        }
        let (plo, phi) = psi.domain();
        if plo > -r + 1e-12 || phi < -1e-12 {
            return Err(Error::InvalidInput(format!(
                "psi must cover [-r, 0] = [{}, 0], got [{plo}, {phi}]",
                -r
            )));
        }
        Ok(Self {
            kernel,
            cone,
            g,
            alpha,
            psi,
            f,
            quad: Quadrature::default(),
            growth: GrowthOptions::default(),
            m_cache: OnceLock::new(),
            big_m_cache: OnceLock::new(),
        })
    }

    pub fn with_quadrature(mut self, quad: Quadrature) -> Self {
        self.quad = quad;
        self.m_cache = OnceLock::new();
        self.big_m_cache = OnceLock::new();
        self
    }

    pub fn with_growth_options(mut self, growth: GrowthOptions) -> Self {
        self.growth = growth;
        self
    }

    /// Same problem with a different nonlinearity (same delay).
    pub fn with_nonlinearity(&self, f: Nonlinearity) -> Result<Self> {
        if f.r() != self.r() {
            return Err(Error::InvalidInput("replacement nonlinearity changes the delay".into()));
        }
        let mut p = self.clone();
        p.f = f;
        if let Some(m) = self.m_cache.get() {
            let _ = p.m_cache.set(*m);
        }
        if let Some(m) = self.big_m_cache.get() {
            let _ = p.big_m_cache.set(*m);
        }
        Ok(p)
    }

    pub fn kernel(&self) -> &KernelFamily {
        &self.kernel
    }

    pub fn cone(&self) -> &ConeData {
        &self.cone
    }

    pub fn mode(&self) -> Mode {
        self.kernel.mode
    }

    pub fn g(&self) -> &PiecewiseLinear {
        &self.g
    }

    pub fn alpha(&self) -> &SignedMeasure {
        &self.alpha
    }

    pub fn psi(&self) -> &PiecewiseLinear {
        &self.psi
    }

    pub fn nonlinearity(&self) -> &Nonlinearity {
        &self.f
    }

    pub fn quadrature(&self) -> &Quadrature {
        &self.quad
    }

    pub fn growth_options(&self) -> &GrowthOptions {
        &self.growth
    }

    pub fn r(&self) -> f64 {
        self.f.r()
    }

    /// `ψ` on `[-r, 0]`, extended by zero to `(0, 1]`.
    pub fn psi_ext(&self, t: f64) -> f64 {
        if t <= 0.0 {
            self.psi.eval(t)
        } else {
            0.0
        }
    }

    /// `‖ψ‖_[-r,0]`.
    pub fn psi_norm(&self) -> f64 {
        let r = self.r();
        self.psi
            .breakpoints()
            .iter()
            .zip(self.psi.values())
            .filter(|(t, _)| **t >= -r && **t <= 0.0)
            .fold(self.psi.eval(-r).abs().max(self.psi.eval(0.0).abs()), |m, (_, v)| {
                m.max(v.abs())
            })
    }

    pub fn alpha_gamma(&self) -> f64 {
        self.alpha
            .apply(&|t| self.kernel.eval_gamma(t), &self.quad, &self.kernel.t_breaks())
    }

    /// `𝒦_A(s) = ∫ k(t,s) dA(t)`.
    pub fn kernel_moment(&self, s: f64) -> f64 {
        let k = |t: f64, s: f64| self.kernel.eval_k(t, s);
        let tb = self.kernel.t_breaks();
        let moment = self.alpha.kernel_moment(&k, &tb, &self.quad);
        moment(s)
    }

    /// Kinks of `s ↦ 𝒦_A(s) g(s)` besides the kernel's own.
    pub fn moment_breaks(&self) -> Vec<f64> {
        let mut b = self.g.breakpoints().to_vec();
        b.extend(self.alpha.breakpoints());
        b.extend(self.kernel.s_breaks(0.0));
        b
    }

    /// `∫_lo^hi 𝒦_A(s) g(s) ds`.
    pub fn moment_integral(&self, lo: f64, hi: f64) -> f64 {
        if self.alpha.is_zero() {
            return 0.0;
        }
        let breaks = self.moment_breaks();
        self.quad
            .integrate(&|s| self.kernel_moment(s) * self.g.eval(s), lo, hi, &breaks)
    }

    fn s_breaks_with_g(&self, t: f64) -> Vec<f64> {
        let mut b = self.kernel.s_breaks(t);
        b.extend_from_slice(self.g.breakpoints());
        b
    }

    /// `1/m`, cached at the default tolerance.
    pub fn m(&self) -> Result<Extremum> {
        if let Some(e) = self.m_cache.get() {
            return Ok(*e);
        }
        let e = compute_m(self, DEFAULT_TOL)?;
        Ok(*self.m_cache.get_or_init(|| e))
    }

    /// `1/M(a,b)`, cached at the default tolerance.
    pub fn big_m(&self) -> Result<Extremum> {
        if let Some(e) = self.big_m_cache.get() {
            return Ok(*e);
        }
        let e = compute_big_m(self, DEFAULT_TOL)?;
        Ok(*self.big_m_cache.get_or_init(|| e))
    }
}

/// A sup or inf of a bracket over `t`, stored as the reciprocal of the
/// constant it defines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Extremum {
    /// `1/m` or `1/M(a,b)`.
    pub reciprocal: f64,
    /// Where the extremum is attained.
    pub at_t: f64,
}

impl Extremum {
    /// `m` or `M(a,b)`; `None` when the reciprocal vanishes.
    pub fn value(&self) -> Option<f64> {
        (self.reciprocal > 0.0).then(|| 1.0 / self.reciprocal)
    }

    pub fn is_degenerate(&self) -> bool {
        !(self.reciprocal > 0.0)
    }
}

fn checked_alpha_gamma(p: &ProblemInstance) -> Result<f64> {
    let ag = p.alpha_gamma();
    if !(ag < 1.0) {
        return Err(Error::AlphaGammaInvalid(ag));
    }
    Ok(ag)
}

/// `1/m = sup_t { ∫|k(t,s)| g(s) ds + |γ(t)|/(1-α[γ]) ∫ 𝒦_A g }`.
pub fn compute_m(p: &ProblemInstance, tol: f64) -> Result<Extremum> {
    let ag = checked_alpha_gamma(p)?;
    let kappa = p.moment_integral(0.0, 1.0) / (1.0 - ag);
    let bracket = |t: f64| {
        let k = p.quad.integrate(
            &|s| p.kernel.eval_k(t, s).abs() * p.g.eval(s),
            0.0,
            1.0,
            &p.s_breaks_with_g(t),
        );
        k + p.kernel.eval_gamma(t).abs() * kappa
    };
    let (at_t, reciprocal) = grid_golden_max(&bracket, 0.0, 1.0, T_GRID, tol);
    Ok(Extremum { reciprocal, at_t })
}

/// `1/M(a,b) = inf_{t∈[a,b]} { ∫_{a+r}^b k g + γ(t)/(1-α[γ]) ∫_{a+r}^b 𝒦_A g }`.
pub fn compute_big_m(p: &ProblemInstance, tol: f64) -> Result<Extremum> {
    let (a, b) = (p.cone.a, p.cone.b);
    let r = p.r();
    if !(r < b - a) {
        return Err(Error::DelayTooLarge { r, gap: b - a });
    }
    let ag = checked_alpha_gamma(p)?;
    let lo = a + r;
    let kappa = p.moment_integral(lo, b) / (1.0 - ag);
    let bracket = |t: f64| {
        let k = p
            .quad
            .integrate(&|s| p.kernel.eval_k(t, s) * p.g.eval(s), lo, b, &p.s_breaks_with_g(t));
        k + p.kernel.eval_gamma(t) * kappa
    };
    let (at_t, neg) = grid_golden_max(&|t| -bracket(t), a, b, T_GRID, tol);
    Ok(Extremum {
        reciprocal: -neg,
        at_t,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IndexKind {
    Index1,
    Index0,
}

impl fmt::Display for IndexKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Index1 => "index1",
            Self::Index0 => "index0",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IndexCheck {
    pub holds: bool,
    pub margin: f64,
    /// The growth number that entered the comparison.
    pub growth: f64,
    /// `1/m` or `1/M(a,b)`.
    pub reciprocal: f64,
}

/// `sup·(1/m) < 1`, strictly.
pub fn index1_holds(sup: f64, reciprocal: f64) -> bool {
    sup * reciprocal < 1.0
}

/// `inf·(1/M) > 1`, strictly.
pub fn index0_holds(inf: f64, reciprocal: f64) -> bool {
    inf * reciprocal > 1.0
}

/// Index-1 condition on `K_{ψ,ρ}`; margin `1 - F^(·,ρ)/m`.
pub fn check_index1(p: &ProblemInstance, rho: f64) -> Result<IndexCheck> {
    let psi_norm = p.psi_norm();
    if !(rho > psi_norm) {
        return Err(Error::RhoTooSmall { rho, psi_norm });
    }
    let lower = match p.mode() {
        Mode::SignChanging => -rho,
        Mode::NonNegative => 0.0,
    };
    let sup = sup_number(&p.f, rho, lower, &p.growth)?.value;
    let reciprocal = p.m()?.reciprocal;
    Ok(IndexCheck {
        holds: index1_holds(sup, reciprocal),
        margin: 1.0 - sup * reciprocal,
        growth: sup,
        reciprocal,
    })
}

/// Index-0 condition on `V_{ψ,ρ}`; margin `F_(ρ,ρ/c)/M(a,b) - 1`.
pub fn check_index0(p: &ProblemInstance, rho: f64) -> Result<IndexCheck> {
    let reciprocal = p.big_m()?.reciprocal;
    let cone = &p.cone;
    let inf = inf_number(&p.f, rho, cone.c, cone.a, cone.b, &p.growth)?.value;
    Ok(IndexCheck {
        holds: index0_holds(inf, reciprocal),
        margin: inf * reciprocal - 1.0,
        growth: inf,
        reciprocal,
    })
}

pub fn check_index(p: &ProblemInstance, rho: f64, kind: IndexKind) -> Result<IndexCheck> {
    match kind {
        IndexKind::Index1 => check_index1(p, rho),
        IndexKind::Index0 => check_index0(p, rho),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rung {
    pub rho: f64,
    pub kind: IndexKind,
    pub margin: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Deserialize)]
pub enum Pattern {
    S1,
    S2,
    S3,
    S4,
    S5,
    S6,
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl Pattern {
    pub const ALL: [Pattern; 6] = [Self::S1, Self::S2, Self::S3, Self::S4, Self::S5, Self::S6];

    pub fn solutions(self) -> u8 {
        match self {
            Self::S1 | Self::S2 => 1,
            Self::S3 | Self::S4 => 2,
            Self::S5 | Self::S6 => 3,
        }
    }

    pub fn kinds(self) -> &'static [IndexKind] {
        use IndexKind::{Index0 as I0, Index1 as I1};
        match self {
            Self::S1 => &[I0, I1],
            Self::S2 => &[I1, I0],
            Self::S3 => &[I0, I1, I0],
            Self::S4 => &[I1, I0, I1],
            Self::S5 => &[I0, I1, I0, I1],
            Self::S6 => &[I1, I0, I1, I0],
        }
    }

    /// One of the solutions may share the norm of `ψ` (patterns opening
    /// with an index-0 rung).
    pub fn advisory(self) -> bool {
        matches!(self, Self::S1 | Self::S3 | Self::S5)
    }

    /// The gap constraints on `ρ₁ < … < ρₙ`, checked literally.
    pub fn gaps_hold(self, rho: &[f64], c: f64, psi_norm: f64) -> bool {
        let n = self.kinds().len();
        if rho.len() != n {
            return false;
        }
        match self {
            Self::S1 => psi_norm < rho[1] && rho[0] / c < rho[1],
            Self::S2 => psi_norm < rho[0] && rho[0] < rho[1],
            Self::S3 => psi_norm < rho[1] && rho[0] / c < rho[1] && rho[1] < rho[2],
            Self::S4 => psi_norm < rho[0] && rho[0] < rho[1] && rho[1] / c < rho[2],
            Self::S5 => {
                psi_norm < rho[1] && rho[0] / c < rho[1] && rho[1] < rho[2] && rho[2] / c < rho[3]
            }
            Self::S6 => {
                psi_norm < rho[0] && rho[0] < rho[1] && rho[1] / c < rho[2] && rho[2] < rho[3]
            }
        }
    }

    /// Lower threshold for the rung after one of kind `prev` at `rho`: an
    /// index-0 rung must be followed beyond `ρ/c`, an index-1 rung beyond `ρ`.
    fn next_threshold(prev: IndexKind, rho: f64, c: f64) -> f64 {
        match prev {
            IndexKind::Index0 => rho / c,
            IndexKind::Index1 => rho,
        }
    }
}

impl Serialize for Pattern {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Warn,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisCheck {
    #[serde(skip)]
    pub id: String,
    pub status: Status,
    pub value: Option<f64>,
    pub detail: String,
}

/// Per-hypothesis results, serialized as an ordered map keyed by id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Diagnostics {
    pub checks: Vec<HypothesisCheck>,
}

impl Diagnostics {
    fn push(&mut self, id: &str, status: Status, value: Option<f64>, detail: impl Into<String>) {
        self.checks.push(HypothesisCheck {
            id: id.to_string(),
            status,
            value,
            detail: detail.into(),
        });
    }

    pub fn get(&self, id: &str) -> Option<&HypothesisCheck> {
        self.checks.iter().find(|c| c.id == id)
    }

    pub fn failures(&self) -> impl Iterator<Item = &HypothesisCheck> {
        self.checks.iter().filter(|c| c.status == Status::Fail)
    }

    pub fn warnings(&self) -> impl Iterator<Item = &HypothesisCheck> {
        self.checks.iter().filter(|c| c.status == Status::Warn)
    }

    pub fn all_pass(&self) -> bool {
        self.failures().next().is_none()
    }
}

impl Serialize for Diagnostics {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.checks.len()))?;
        for c in &self.checks {
            map.serialize_entry(&c.id, c)?;
        }
        map.end()
    }
}

fn pass_fail(ok: bool) -> Status {
    if ok {
        Status::Pass
    } else {
        Status::Fail
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    let n = n.max(2);
    (0..n).map(move |i| if i == n - 1 { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 })
}

/// Checks the structural hypotheses numerically. Failures are reported,
/// never raised.
pub fn validate_hypotheses(p: &ProblemInstance) -> Diagnostics {
    let mut d = Diagnostics::default();
    let positive = p.mode() == Mode::NonNegative;
    let prime = |id: &str| if positive { format!("{}'{}", &id[..1], &id[1..]) } else { id.to_string() };
    let r = p.r();
    let (a, b) = (p.cone.a, p.cone.b);

    // history datum
    let psi0 = p.psi.eval(0.0).abs();
    let psi_min = linspace(-r, 0.0, 257)
        .map(|t| p.psi.eval(t))
        .chain(
            p.psi
                .breakpoints()
                .iter()
                .zip(p.psi.values())
                .filter(|(t, _)| **t >= -r && **t <= 0.0)
                .map(|(_, v)| *v),
        )
        .fold(f64::INFINITY, f64::min);
    if positive && psi_min < 0.0 {
        d.push(&prime("C1"), Status::Fail, Some(psi_min), "psi takes negative values on [-r, 0]");
    } else if psi0 > 0.0 {
        d.push(
            &prime("C1"),
            Status::Warn,
            Some(psi0),
            "psi(0) != 0: the zero extension to [0, 1] is discontinuous at t = 0",
        );
    } else {
        d.push(&prime("C1"), Status::Pass, Some(psi0), "|psi(0)|");
    }

    let k_hist = linspace(-r, 0.0, 17)
        .filter(|t| *t < 0.0)
        .flat_map(|t| linspace(0.0, 1.0, 65).map(move |s| (t, s)))
        .fold(0.0f64, |m, (t, s)| m.max(p.kernel.eval_k(t, s).abs()));
    d.push("C2", pass_fail(k_hist == 0.0), Some(k_hist), "max |k(t,s)| for t in [-r, 0)");

    let bounds = validate_bounds(&p.kernel, &p.cone, 257);
    let worst = bounds.upper_margin.min(bounds.lower_margin);
    let detail = if positive {
        format!(
            "margins: Phi - |k| = {:e}, k - c1 Phi = {:e}, min k = {:e}",
            bounds.upper_margin, bounds.lower_margin, bounds.min_kernel
        )
    } else {
        format!(
            "margins: Phi - |k| = {:e}, k - c1 Phi = {:e}",
            bounds.upper_margin, bounds.lower_margin
        )
    };
    d.push(&prime("C3"), pass_fail(bounds.pass), Some(worst), detail);

    let phi = p.cone.phi.clone();
    let mut breaks = p.g.breakpoints().to_vec();
    breaks.extend(phi.breaks());
    let phig = p.quad.integrate(&|s| phi.eval(s) * p.g.eval(s), a, b, &breaks);
    d.push("C4", pass_fail(phig > 0.0), Some(phig), "integral of Phi g over [a, b]");

    let reach = 1.0f64.max(p.psi_norm());
    let (f_min, f_detail) = match &p.f {
        Nonlinearity::Delay { f, .. } => {
            let lo = if positive { 0.0 } else { -reach };
            let mut m = f64::INFINITY;
            for t in linspace(0.0, 1.0, 17) {
                for u in linspace(lo, reach, 17) {
                    for v in linspace(lo, reach, 17) {
                        m = m.min(f(t, u, v));
                    }
                }
            }
            (m, format!("min f on [0,1] x [{lo}, {reach}]^2 (17^3 samples)"))
        }
        Nonlinearity::Envelope { table, .. } => {
            let m = table.rows().iter().fold(f64::INFINITY, |m, r| m.min(r.1).min(r.2));
            (m, "min tabulated growth number".to_string())
        }
    };
    d.push(&prime("C5"), pass_fail(f_min >= 0.0), Some(f_min), f_detail);

    let tv = p.alpha.total_variation();
    let pos = if p.alpha.is_zero() {
        None
    } else {
        Some(check_positivity(&|s| p.kernel_moment(s), DEFAULT_POSITIVITY_SAMPLES))
    };
    match pos {
        None => d.push("C6", Status::Pass, Some(0.0), "alpha = 0"),
        Some(rep) => d.push(
            "C6",
            pass_fail(tv.is_finite() && rep.holds),
            Some(rep.worst_value),
            format!(
                "Var(A) = {tv}; min K_A = {:e} at s = {} (refined {:e} at {})",
                rep.worst_value, rep.worst_s, rep.refined_value, rep.refined_s
            ),
        ),
    }

    let ag = p.alpha_gamma();
    let gnorm = p.kernel.gamma_norm();
    let c2 = p.cone.c2;
    let gamma_hist = linspace(-r, 0.0, 65).fold(0.0f64, |m, t| m.max(p.kernel.eval_gamma(t).abs()));
    let gamma_low = linspace(a, b, 257).fold(f64::INFINITY, |m, t| {
        m.min(p.kernel.eval_gamma(t) - c2 * gnorm)
    });
    let gamma_neg = linspace(0.0, 1.0, 257).fold(0.0f64, |m, t| m.min(p.kernel.eval_gamma(t)));
    let mut problems = Vec::new();
    if gamma_hist != 0.0 {
        problems.push("gamma != 0 on [-r, 0]".to_string());
    }
    if !(gnorm > 0.0) {
        problems.push("gamma vanishes".to_string());
    }
    if !(0.0..1.0).contains(&ag) {
        problems.push(format!("alpha[gamma] = {ag} outside [0, 1)"));
    }
    if gamma_low < -1e-12 {
        problems.push(format!("gamma < c2 |gamma| on [a, b] (margin {gamma_low:e})"));
    }
    if positive && gamma_neg < 0.0 {
        problems.push("gamma negative on [0, 1]".to_string());
    }
    let detail = if problems.is_empty() {
        "alpha[gamma]".to_string()
    } else {
        problems.join("; ")
    };
    d.push(&prime("C7"), pass_fail(problems.is_empty()), Some(ag), detail);

    d.push("C8", pass_fail(r < b - a), Some(b - a - r), "b - a - r");
    d
}

/// One probe of the automatic ladder search.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Probe {
    pub rho: f64,
    pub index1: Option<f64>,
    pub index0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// A validated ladder and the multiplicity it certifies.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certificate {
    pub pattern: Option<Pattern>,
    pub solutions: u8,
    pub ladder: Vec<Rung>,
    pub mode: Mode,
    pub c: f64,
    pub psi_norm: f64,
    pub m: Option<f64>,
    #[serde(rename = "M")]
    pub big_m: Option<f64>,
    pub hypotheses: Diagnostics,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub advisory: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub probes: Vec<Probe>,
}

/// Finds the richest pattern realizable by `rungs` (all assumed to hold).
///
/// Candidates for the first rung are tried in the given order; later rungs
/// are chosen greedily as the smallest admissible `ρ`, which is optimal
/// because every gap constraint is monotone in the previous `ρ`.
fn search(rungs: &[Rung], c: f64, psi_norm: f64) -> Option<(Pattern, Vec<Rung>)> {
    let mut by_ascending: Vec<&Rung> = rungs.iter().collect();
    by_ascending.sort_by(|x, y| x.rho.total_cmp(&y.rho));
    let mut patterns = Pattern::ALL;
    patterns.sort_by_key(|p| (std::cmp::Reverse(p.solutions()), *p));

    for pat in patterns {
        let kinds = pat.kinds();
        let first_psi = kinds.iter().position(|k| *k == IndexKind::Index1).unwrap();
        for first in rungs.iter().filter(|r| r.kind == kinds[0]) {
            if first_psi == 0 && !(first.rho > psi_norm) {
                continue;
            }
            let mut chosen = vec![*first];
            for (i, &kind) in kinds.iter().enumerate().skip(1) {
                let prev = chosen[i - 1];
                let mut lower = Pattern::next_threshold(prev.kind, prev.rho, c);
                if i == first_psi {
                    lower = lower.max(psi_norm);
                }
                match by_ascending.iter().find(|r| r.kind == kind && r.rho > lower) {
                    Some(r) => chosen.push(**r),
                    None => break,
                }
            }
            if chosen.len() == kinds.len() {
                let rhos: Vec<f64> = chosen.iter().map(|r| r.rho).collect();
                if pat.gaps_hold(&rhos, c, psi_norm) {
                    return Some((pat, chosen));
                }
            }
        }
    }
    None
}

fn certificate(p: &ProblemInstance, found: Option<(Pattern, Vec<Rung>)>, probes: Vec<Probe>) -> Certificate {
    let (pattern, ladder) = match found {
        Some((pat, ladder)) => (Some(pat), ladder),
        None => (None, Vec::new()),
    };
    Certificate {
        pattern,
        solutions: pattern.map_or(0, Pattern::solutions),
        ladder,
        mode: p.mode(),
        c: p.cone.c,
        psi_norm: p.psi_norm(),
        m: p.m().ok().and_then(|e| e.value()),
        big_m: p.big_m().ok().and_then(|e| e.value()),
        hypotheses: validate_hypotheses(p),
        advisory: pattern.filter(|p| p.advisory()).map(|_| {
            "one of the certified solutions may have the same norm as psi".to_string()
        }),
        probes,
    }
}

/// Matches a user ladder of already verified rungs against the six patterns
/// and returns the certificate for the richest match.
pub fn match_pattern(p: &ProblemInstance, ladder: &[Rung]) -> Certificate {
    certificate(p, search(ladder, p.cone.c, p.psi_norm()), Vec::new())
}

/// Verifies each `(ρ, kind)` pair and matches the holding rungs.
pub fn certify_ladder(p: &ProblemInstance, ladder: &[(f64, IndexKind)]) -> Certificate {
    let mut rungs = Vec::new();
    let mut probes = Vec::new();
    for &(rho, kind) in ladder {
        let mut probe = Probe {
            rho,
            index1: None,
            index0: None,
            note: None,
        };
        match check_index(p, rho, kind) {
            Ok(chk) => {
                match kind {
                    IndexKind::Index1 => probe.index1 = Some(chk.margin),
                    IndexKind::Index0 => probe.index0 = Some(chk.margin),
                }
                if chk.holds {
                    rungs.push(Rung {
                        rho,
                        kind,
                        margin: chk.margin,
                    });
                }
            }
            Err(e) => probe.note = Some(e.to_string()),
        }
        probes.push(probe);
    }
    certificate(p, search(&rungs, p.cone.c, p.psi_norm()), probes)
}

/// Settings for [`auto_ladder`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderSearch {
    pub rho_max: f64,
    /// Number of log-spaced candidates in `(‖ψ‖, ρ_max]`.
    pub budget: usize,
    /// Preferred first rungs, tried before the log grid.
    pub seeds: Vec<f64>,
}

impl LadderSearch {
    pub fn new(rho_max: f64) -> Self {
        Self {
            rho_max,
            budget: 64,
            seeds: Vec::new(),
        }
    }
}

/// Candidate radii: seeds in `(0, ρ_max]` first, then log-spaced points in
/// `(‖ψ‖, ρ_max]` (from `10⁻⁶ ρ_max` when `ψ = 0`).
pub fn candidates(psi_norm: f64, search: &LadderSearch) -> Vec<f64> {
    let budget = search.budget.max(2);
    let lo = if psi_norm > 0.0 { psi_norm } else { search.rho_max * 1e-6 };
    let mut out: Vec<f64> = search
        .seeds
        .iter()
        .copied()
        .filter(|&s| s > 0.0 && s <= search.rho_max)
        .collect();
    if search.rho_max > lo {
        let ratio = (search.rho_max / lo).ln();
        for i in 1..=budget {
            let rho = if i == budget {
                search.rho_max
            } else {
                lo * (ratio * i as f64 / budget as f64).exp()
            };
            if !out.contains(&rho) {
                out.push(rho);
            }
        }
        if psi_norm == 0.0 && !out.contains(&lo) {
            out.insert(search.seeds.len().min(out.len()), lo);
        }
    }
    out
}

/// Probes both index conditions on the candidate radii and assembles the
/// richest certificate.
pub fn auto_ladder(p: &ProblemInstance, search_opts: &LadderSearch) -> Certificate {
    let psi_norm = p.psi_norm();
    let mut rungs = Vec::new();
    let mut probes = Vec::new();
    for rho in candidates(psi_norm, search_opts) {
        let mut probe = Probe {
            rho,
            index1: None,
            index0: None,
            note: None,
        };
        let mut notes = Vec::new();
        if rho > psi_norm {
            match check_index1(p, rho) {
                Ok(chk) => {
                    probe.index1 = Some(chk.margin);
                    if chk.holds {
                        rungs.push(Rung {
                            rho,
                            kind: IndexKind::Index1,
                            margin: chk.margin,
                        });
                    }
                }
                Err(e) => notes.push(e.to_string()),
            }
        }
        match check_index0(p, rho) {
            Ok(chk) => {
                probe.index0 = Some(chk.margin);
                if chk.holds {
                    rungs.push(Rung {
                        rho,
                        kind: IndexKind::Index0,
                        margin: chk.margin,
                    });
                }
            }
            Err(e) => notes.push(e.to_string()),
        }
        if !notes.is_empty() {
            probe.note = Some(notes.join("; "));
        }
        probes.push(probe);
    }
    certificate(p, search(&rungs, p.cone.c, psi_norm), probes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::Mode;

    fn power(lambda: f64, p: f64, r: f64) -> Nonlinearity {
        Nonlinearity::delay(move |_, u: f64, v: f64| lambda * u.abs().powf(p - 1.0) * v.abs(), r).unwrap()
    }

    fn thermostat_example(lambda: f64, r: f64) -> ProblemInstance {
        ProblemInstance::new(
            KernelFamily::thermostat(0.25, 0.25, Mode::SignChanging).unwrap(),
            0.25,
            7.0 / 16.0,
            PiecewiseLinear::constant(0.0, 1.0, 1.0),
            SignedMeasure::zero(),
            PiecewiseLinear::constant(-r, 0.0, 0.0),
            power(lambda, 2.0, r),
        )
        .unwrap()
    }

    fn dirichlet(f: Nonlinearity, alpha: SignedMeasure) -> ProblemInstance {
        let r = f.r();
        ProblemInstance::new(
            KernelFamily::dirichlet(Mode::NonNegative),
            0.25,
            0.75,
            PiecewiseLinear::constant(0.0, 1.0, 1.0),
            alpha,
            PiecewiseLinear::constant(-r, 0.0, 0.0),
            f,
        )
        .unwrap()
    }

    #[test]
    fn thermostat_example_hypotheses_pass() {
        let d = validate_hypotheses(&thermostat_example(0.5, 0.15));
        assert!(d.all_pass(), "{d:?}");
        assert_eq!(d.warnings().count(), 0);
        let d = validate_hypotheses(&thermostat_example(0.5, 0.2));
        let fails: Vec<_> = d.failures().map(|c| c.id.as_str()).collect();
        assert_eq!(fails, ["C8"]);
    }

    #[test]
    fn alpha_gamma_too_large_is_diagnosed() {
        // Dirichlet gamma(t) = t; an atom of weight 3 at t = 1/2 gives 1.5
        let f = Nonlinearity::zero(0.25).unwrap();
        let p = dirichlet(f, SignedMeasure::atoms(vec![(0.5, 3.0)]).unwrap());
        let c7 = validate_hypotheses(&p).get("C'7").cloned().unwrap();
        assert_eq!(c7.status, Status::Fail);
        assert_eq!(c7.value, Some(1.5));
        assert!(matches!(compute_m(&p, 1e-12), Err(Error::AlphaGammaInvalid(v)) if v == 1.5));
    }

    #[test]
    fn thermostat_example_m_is_the_exact_sup() {
        // closed form of the bracket: 7t/16 - t²/4 on [1/2, 1], max 49/256
        let e = compute_m(&thermostat_example(0.5, 0.15), 1e-12).unwrap();
        assert!((e.reciprocal - 49.0 / 256.0).abs() < 1e-12);
        assert!((e.at_t - 0.875).abs() < 1e-5);
    }

    #[test]
    fn dirichlet_m() {
        let p = dirichlet(Nonlinearity::zero(0.25).unwrap(), SignedMeasure::zero());
        let e = compute_m(&p, 1e-12).unwrap();
        assert!((e.reciprocal - 0.125).abs() < 1e-13);
        assert!((e.value().unwrap() - 8.0).abs() < 1e-11);
    }

    #[test]
    fn zero_g_is_degenerate() {
        let r = 0.25;
        let p = ProblemInstance::new(
            KernelFamily::dirichlet(Mode::NonNegative),
            0.25,
            0.75,
            PiecewiseLinear::constant(0.0, 1.0, 0.0),
            SignedMeasure::zero(),
            PiecewiseLinear::constant(-r, 0.0, 0.0),
            Nonlinearity::zero(r).unwrap(),
        )
        .unwrap();
        let e = compute_m(&p, 1e-12).unwrap();
        assert_eq!(e.reciprocal, 0.0);
        assert!(e.is_degenerate());
        assert_eq!(e.value(), None);
    }

    #[test]
    fn thermostat_example_big_m() {
        // the bracket is ∫_{0.4}^{7/16} k(t,s) ds, smallest at t = a = 1/4
        let e = compute_big_m(&thermostat_example(0.5, 0.15), 1e-12).unwrap();
        assert!((e.reciprocal - 3.0 / 640.0).abs() < 1e-14, "{e:?}");
        assert!((e.at_t - 0.25).abs() < 1e-9);
    }

    #[test]
    fn dirichlet_big_m() {
        let p = dirichlet(Nonlinearity::zero(0.25).unwrap(), SignedMeasure::zero());
        let e = compute_big_m(&p, 1e-12).unwrap();
        // ∫_{1/2}^{3/4} t(1-s) ds at t = 1/4
        assert!((e.reciprocal - 3.0 / 128.0).abs() < 1e-14, "{e:?}");
    }

    #[test]
    fn delay_equal_to_gap_is_rejected() {
        let p = thermostat_example(0.5, 0.1875);
        assert!(matches!(compute_big_m(&p, 1e-12), Err(Error::DelayTooLarge { .. })));
        assert!(matches!(check_index0(&p, 10.0), Err(Error::DelayTooLarge { .. })));
    }

    #[test]
    fn alpha_zero_reduces_to_kernel_integrals() {
        let p = thermostat_example(0.5, 0.15);
        let q = Quadrature::default();
        let fam = p.kernel();
        let direct = |t: f64| q.integrate(&|s| fam.eval_k(t, s).abs(), 0.0, 1.0, &[t, 0.25]);
        let m = compute_m(&p, 1e-12).unwrap();
        assert!((m.reciprocal - direct(m.at_t)).abs() < 1e-14);
    }

    #[test]
    fn index1_examples() {
        let p = thermostat_example(0.5, 0.15);
        let chk = check_index1(&p, 1.0).unwrap();
        assert!(chk.holds);
        assert!((chk.growth - 0.5).abs() < 1e-15);

        let r = 0.15;
        let psi = PiecewiseLinear::new(vec![-r, -0.05, 0.0], vec![0.0, 0.9, 0.0]).unwrap();
        let p = ProblemInstance::new(
            KernelFamily::thermostat(0.25, 0.25, Mode::SignChanging).unwrap(),
            0.25,
            7.0 / 16.0,
            PiecewiseLinear::constant(0.0, 1.0, 1.0),
            SignedMeasure::zero(),
            psi,
            power(0.5, 2.0, r),
        )
        .unwrap();
        assert_eq!(p.psi_norm(), 0.9);
        assert!(matches!(check_index1(&p, 0.5), Err(Error::RhoTooSmall { .. })));
        assert!(matches!(check_index1(&p, 0.9), Err(Error::RhoTooSmall { .. })));
    }

    #[test]
    fn index0_examples() {
        let p = thermostat_example(0.5, 0.15);
        let big_m = p.big_m().unwrap().value().unwrap();
        assert!(check_index0(&p, 1.01 * big_m / 0.5).unwrap().holds);
        assert!(!check_index0(&p, 0.99 * big_m / 0.5).unwrap().holds);
        let at = check_index0(&p, big_m / 0.5).unwrap();
        assert!(at.margin.abs() < 1e-12);
        assert_eq!(at.holds, at.margin > 0.0);
        // strictness of the comparison itself
        assert!(!index0_holds(2.0, 0.5));
        assert!(!index1_holds(2.0, 0.5));

        let z = p.with_nonlinearity(Nonlinearity::zero(0.15).unwrap()).unwrap();
        for rho in [1e-3, 1.0, 1e6] {
            assert!(!check_index0(&z, rho).unwrap().holds);
        }
    }

    fn rung(rho: f64, kind: IndexKind) -> Rung {
        Rung { rho, kind, margin: 0.1 }
    }

    #[test]
    fn pattern_examples() {
        use IndexKind::*;
        let p = thermostat_example(0.5, 0.15);
        let cert = match_pattern(&p, &[rung(1.0, Index1), rung(500.0, Index0)]);
        assert_eq!(cert.pattern, Some(Pattern::S2));
        assert_eq!(cert.solutions, 1);
        assert!(cert.advisory.is_none());

        let cert = match_pattern(&p, &[rung(1.0, Index0), rung(2.0, Index1)]);
        assert_eq!(cert.pattern, None);
        assert_eq!(cert.solutions, 0);

        let cert = match_pattern(&p, &[rung(1.0, Index1), rung(2.0, Index0), rung(17.0, Index1)]);
        assert_eq!(cert.pattern, Some(Pattern::S4));
        assert_eq!(cert.solutions, 2);

        let cert = match_pattern(&p, &[rung(1.0, Index0), rung(9.0, Index1)]);
        assert_eq!(cert.pattern, Some(Pattern::S1));
        assert!(cert.advisory.is_some());
    }

    #[test]
    fn gap_constraints_are_literal() {
        let c = 0.125;
        assert!(Pattern::S4.gaps_hold(&[1.0, 2.0, 16.5], c, 0.5));
        assert!(!Pattern::S4.gaps_hold(&[1.0, 2.0, 16.0], c, 0.5));
        assert!(!Pattern::S2.gaps_hold(&[1.0, 2.0], c, 1.0));
        assert!(Pattern::S6.gaps_hold(&[1.0, 2.0, 17.0, 18.0], c, 0.0));
        assert!(Pattern::S5.gaps_hold(&[1.0, 9.0, 10.0, 81.0], c, 0.0));
        assert!(!Pattern::S5.gaps_hold(&[1.0, 9.0, 10.0, 80.0], c, 0.0));
    }

    #[test]
    fn richest_pattern_wins() {
        use IndexKind::*;
        let p = thermostat_example(0.5, 0.15);
        let ladder = [
            rung(1.0, Index0),
            rung(9.0, Index1),
            rung(10.0, Index0),
            rung(81.0, Index1),
        ];
        let cert = match_pattern(&p, &ladder);
        assert_eq!(cert.pattern, Some(Pattern::S5));
        assert_eq!(cert.solutions, 3);
    }

    #[test]
    fn auto_ladder_finds_s2_for_thermostat_example() {
        let p = thermostat_example(0.5, 0.15);
        let big_m = p.big_m().unwrap().value().unwrap();
        let mut s = LadderSearch::new(10.0 * big_m / 0.5);
        s.seeds = vec![1.0];
        let cert = auto_ladder(&p, &s);
        assert_eq!(cert.pattern, Some(Pattern::S2));
        assert_eq!(cert.ladder[0].rho, 1.0);
        assert!(cert.ladder[1].rho > big_m / 0.5);
        for r in &cert.ladder {
            let chk = check_index(&p, r.rho, r.kind).unwrap();
            assert!(chk.holds);
            assert!((chk.margin - r.margin).abs() <= 1e-12);
        }
    }

    #[test]
    fn auto_ladder_zero_f_is_none() {
        let p = thermostat_example(0.5, 0.15).with_nonlinearity(Nonlinearity::zero(0.15).unwrap()).unwrap();
        let cert = auto_ladder(&p, &LadderSearch::new(1e4));
        assert_eq!(cert.pattern, None);
        assert_eq!(cert.solutions, 0);
        assert!(cert.probes.iter().all(|pr| pr.index0.unwrap() < 0.0));
    }

    #[test]
    fn auto_ladder_below_threshold_is_none() {
        let p = thermostat_example(0.5, 0.15).with_nonlinearity(power(0.5, 3.0, 0.15)).unwrap();
        let big_m = p.big_m().unwrap().value().unwrap();
        // index 0 needs 0.5 ρ² > M
        let threshold = (big_m / 0.5).sqrt();
        let cert = auto_ladder(&p, &LadderSearch::new(0.5 * threshold));
        assert_eq!(cert.pattern, None);
        assert!(cert.probes.iter().all(|pr| pr.index0.unwrap() <= 0.0));
    }

    #[test]
    fn candidates_are_seeded_and_increasing() {
        let mut s = LadderSearch::new(100.0);
        s.seeds = vec![1.0];
        s.budget = 8;
        let c = candidates(0.5, &s);
        assert_eq!(c[0], 1.0);
        assert!(c[1..].windows(2).all(|w| w[1] > w[0]));
        assert_eq!(*c.last().unwrap(), 100.0);
        assert!(c[1..].iter().all(|&r| r > 0.5));
    }

    #[test]
    fn certificate_json_shape() {
        let p = thermostat_example(0.5, 0.15);
        let cert = match_pattern(&p, &[rung(1.0, IndexKind::Index1), rung(500.0, IndexKind::Index0)]);
        let v = serde_json::to_value(&cert).unwrap();
        assert_eq!(v["pattern"], "S2");
        assert_eq!(v["solutions"], 1);
        assert_eq!(v["ladder"][0]["kind"], "index1");
        assert_eq!(v["ladder"][0]["rho"], 1.0);
        assert!(v["M"].is_f64());
        assert_eq!(v["hypotheses"]["C8"]["status"], "pass");
        let none = match_pattern(&p, &[]);
        assert!(serde_json::to_value(&none).unwrap()["pattern"].is_null());
    }
}
