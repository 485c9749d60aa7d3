//! JSON problem configs.

use std::path::Path;
use std::sync::Arc;

use fbvp::certify::{IndexKind, LadderSearch, ProblemInstance};
use fbvp::envelope::{EnvelopeTable, GrowthOptions, HistorySegment, Nonlinearity, SegmentFn};
use fbvp::kernel::{CustomKernel, KernelFamily, Mode};
use fbvp::measure::{PiecewiseLinear, SignedMeasure};
use fbvp::quadrature::Quadrature;
use fbvp::solver::{InitialGuess, SolverConfig, Strategy};
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::expr::Expression;

/// Schema version understood by this build.
pub const SCHEMA_VERSION: u32 = 1;

/// Samples used to turn a `bump` history into a piecewise-linear `ψ`.
pub const BUMP_SAMPLES: usize = 257;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub schema: u32,
    pub kernel: KernelConfig,
    pub interval: [f64; 2],
    #[serde(default = "unit_g")]
    pub g: PwlConfig,
    #[serde(default)]
    pub alpha: AlphaConfig,
    #[serde(default)]
    pub psi: PsiConfig,
    #[serde(rename = "F")]
    pub f: NonlinearityConfig,
    #[serde(default)]
    pub growth: Option<GrowthOptions>,
    #[serde(default)]
    pub certify: CertifyConfig,
    #[serde(default)]
    pub solver: SolverSection,
}

fn unit_g() -> PwlConfig {
    PwlConfig::Constant(1.0)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelConfig {
    Thermostat {
        beta: f64,
        eta: f64,
        #[serde(default = "sign_changing")]
        mode: Mode,
    },
    Dirichlet {
        #[serde(default = "sign_changing")]
        mode: Mode,
    },
    /// Expressions: `k` in `t, s`; `gamma` in `t`; `phi` in `s`; `c1`, `c2`
    /// in `a, b`.
    Custom {
        k: String,
        gamma: String,
        phi: String,
        c1: String,
        c2: String,
        #[serde(default)]
        breaks: Vec<f64>,
        #[serde(default = "sign_changing")]
        mode: Mode,
    },
}

fn sign_changing() -> Mode {
    Mode::SignChanging
}

/// A constant or `{"breakpoints": [...], "values": [...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PwlConfig {
    Constant(f64),
    Table { breakpoints: Vec<f64>, values: Vec<f64> },
}

impl PwlConfig {
    fn build(&self, lo: f64, hi: f64, what: &str) -> Result<PiecewiseLinear, CliError> {
        match self {
            Self::Constant(c) => Ok(PiecewiseLinear::constant(lo, hi, *c)),
            Self::Table { breakpoints, values } => PiecewiseLinear::new(breakpoints.clone(), values.clone())
                .map_err(|e| CliError::Parse(format!("{what}: {e}"))),
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlphaConfig {
    /// `(location, weight)` pairs.
    #[serde(default)]
    pub atoms: Vec<(f64, f64)>,
    #[serde(default)]
    pub density: Option<PwlConfig>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PsiConfig {
    #[default]
    Zero,
    /// `ψ(t) = h sin²(π t / r)` on `[-r, 0]`.
    Bump { h: f64 },
    Samples { t: Vec<f64>, values: Vec<f64> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case", deny_unknown_fields)]
pub enum NonlinearityConfig {
    /// `f(t, u, v)` with `u = φ(0)`, `v = φ(-r)`.
    Delay { expr: String, r: f64 },
    /// Rows `(ρ, sup, inf)`; `expr` is an optional pointwise evaluator in
    /// the delay variables.
    Envelope {
        table: Vec<(f64, f64, f64)>,
        #[serde(default)]
        expr: Option<String>,
        r: f64,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertifyConfig {
    #[serde(default = "default_rho_max")]
    pub rho_max: f64,
    #[serde(default = "default_budget")]
    pub budget: usize,
    #[serde(default)]
    pub seeds: Vec<f64>,
    /// A user ladder of `(ρ, kind)`; replaces the automatic search.
    #[serde(default)]
    pub ladder: Option<Vec<(f64, IndexKind)>>,
}

fn default_rho_max() -> f64 {
    1e3
}

fn default_budget() -> usize {
    64
}

impl Default for CertifyConfig {
    fn default() -> Self {
        Self {
            rho_max: default_rho_max(),
            budget: default_budget(),
            seeds: Vec::new(),
            ladder: None,
        }
    }
}

impl CertifyConfig {
    pub fn search(&self) -> LadderSearch {
        LadderSearch {
            rho_max: self.rho_max,
            budget: self.budget,
            seeds: self.seeds.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialConfig {
    Trivial,
    ConeSeed(f64),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub grid: usize,
    pub omega: f64,
    pub max_iter: usize,
    pub tol: f64,
    pub strategy: Strategy,
    pub initial: InitialConfig,
    pub panel_points: usize,
    /// Extra cone seeds drawn log-uniformly from `(‖ψ‖, ρ_max]` with the
    /// run seed.
    pub random_starts: usize,
}

impl Default for SolverSection {
    fn default() -> Self {
        let d = SolverConfig::default();
        Self {
            grid: d.grid,
            omega: d.omega,
            max_iter: d.max_iter,
            tol: d.tol,
            strategy: d.strategy,
            initial: InitialConfig::Trivial,
            panel_points: d.panel_points,
            random_starts: 0,
        }
    }
}

impl SolverSection {
    pub fn to_config(&self) -> SolverConfig {
        SolverConfig {
            grid: self.grid,
            omega: self.omega,
            max_iter: self.max_iter,
            tol: self.tol,
            strategy: self.strategy,
            initial: match self.initial {
                InitialConfig::Trivial => InitialGuess::Trivial,
                InitialConfig::ConeSeed(l) => InitialGuess::ConeSeed(l),
            },
            panel_points: self.panel_points,
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub grid: Option<usize>,
    pub tol: Option<f64>,
    pub rho_max: Option<f64>,
    pub quadrature_panels: Option<usize>,
}

impl Config {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;
        if cfg.schema != SCHEMA_VERSION {
            return Err(CliError::Parse(format!(
                "unsupported schema {} (expected {SCHEMA_VERSION})",
                cfg.schema
            )));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(g) = o.grid {
            self.solver.grid = g;
        }
        if let Some(t) = o.tol {
            self.solver.tol = t;
        }
        if let Some(r) = o.rho_max {
            self.certify.rho_max = r;
        }
    }

    pub fn mode(&self) -> Mode {
        match &self.kernel {
            KernelConfig::Thermostat { mode, .. }
            | KernelConfig::Dirichlet { mode }
            | KernelConfig::Custom { mode, .. } => *mode,
        }
    }

    pub fn delay(&self) -> f64 {
        match &self.f {
            NonlinearityConfig::Delay { r, .. } | NonlinearityConfig::Envelope { r, .. } => *r,
        }
    }

    pub fn kernel_family(&self) -> Result<KernelFamily, CliError> {
        match &self.kernel {
            KernelConfig::Thermostat { beta, eta, mode } => {
                KernelFamily::thermostat(*beta, *eta, *mode).map_err(|e| hypothesis_error(e, *mode))
            }
            KernelConfig::Dirichlet { mode } => Ok(KernelFamily::dirichlet(*mode)),
            KernelConfig::Custom {
                k,
                gamma,
                phi,
                c1,
                c2,
                breaks,
                mode,
            } => {
                let k = Expression::parse(k, &["t", "s"])?;
                let gamma = Expression::parse(gamma, &["t"])?;
                let phi = Expression::parse(phi, &["s"])?;
                let c1 = Expression::parse(c1, &["a", "b"])?;
                let c2 = Expression::parse(c2, &["a", "b"])?;
                let custom = CustomKernel {
                    k: Arc::new(move |t, s| k.eval(&[t, s])),
                    gamma: Arc::new(move |t| gamma.eval(&[t])),
                    phi: Arc::new(move |s| phi.eval(&[s])),
                    c1: Arc::new(move |a, b| c1.eval(&[a, b])),
                    c2: Arc::new(move |a, b| c2.eval(&[a, b])),
                    s_breaks: breaks.clone(),
                };
                let fam = KernelFamily::custom(custom, *mode);
                fam.validate().map_err(|e| CliError::Parse(e.to_string()))?;
                Ok(fam)
            }
        }
    }

    pub fn nonlinearity(&self) -> Result<Nonlinearity, CliError> {
        let parse = |e| CliError::Parse(format!("F: {e}"));
        match &self.f {
            NonlinearityConfig::Delay { expr, r } => {
                let e = Expression::parse(expr, &["t", "u", "v"])?;
                Nonlinearity::delay(move |t, u, v| e.eval(&[t, u, v]), *r).map_err(parse)
            }
            NonlinearityConfig::Envelope { table, expr, r } => {
                let table = EnvelopeTable::new(table.clone()).map_err(parse)?;
                let evaluator = match expr {
                    Some(src) => {
                        let e = Expression::parse(src, &["t", "u", "v"])?;
                        let r = *r;
                        let f: SegmentFn =
                            Arc::new(move |t, seg: &HistorySegment<'_>| e.eval(&[t, seg.at(0.0), seg.at(-r)]));
                        Some(f)
                    }
                    None => None,
                };
                Nonlinearity::envelope(table, evaluator, *r).map_err(parse)
            }
        }
    }

    pub fn psi(&self) -> Result<PiecewiseLinear, CliError> {
        let r = self.delay();
        match &self.psi {
            PsiConfig::Zero => Ok(PiecewiseLinear::constant(-r, 0.0, 0.0)),
            PsiConfig::Bump { h } => {
                let h = *h;
                Ok(PiecewiseLinear::sample(-r, 0.0, BUMP_SAMPLES, move |t| {
                    h * (std::f64::consts::PI * t / r).sin().powi(2)
                }))
            }
            PsiConfig::Samples { t, values } => {
                PiecewiseLinear::new(t.clone(), values.clone()).map_err(|e| CliError::Parse(format!("psi: {e}")))
            }
        }
    }

    pub fn alpha(&self) -> Result<SignedMeasure, CliError> {
        let density = match &self.alpha.density {
            Some(d) => Some(d.build(0.0, 1.0, "alpha density")?),
            None => None,
        };
        SignedMeasure::new(self.alpha.atoms.clone(), density).map_err(|e| CliError::Parse(format!("alpha: {e}")))
    }

    /// Assembles the problem. Structural violations that prevent
    /// construction are reported as hypothesis failures.
    pub fn problem(&self, o: &Overrides) -> Result<ProblemInstance, CliError> {
        let kernel = self.kernel_family()?;
        let mode = kernel.mode;
        let g = self.g.build(0.0, 1.0, "g")?;
        let [a, b] = self.interval;
        let mut p = ProblemInstance::new(kernel, a, b, g, self.alpha()?, self.psi()?, self.nonlinearity()?)
            .map_err(|e| hypothesis_error(e, mode))?;
        if let Some(n) = o.quadrature_panels {
            p = p.with_quadrature(Quadrature::crippled(n));
        }
        if let Some(g) = self.growth {
            p = p.with_growth_options(g);
        }
        Ok(p)
    }
}

/// Maps construction errors onto the hypothesis they violate.
pub fn hypothesis_error(e: fbvp::Error, mode: Mode) -> CliError {
    let id = |base: &str| match mode {
        Mode::NonNegative if base != "C2" && base != "C4" && base != "C6" && base != "C8" => {
            format!("{}'{}", &base[..1], &base[1..])
        }
        _ => base.to_string(),
    };
    let ids = match &e {
        fbvp::Error::ModeUnsupported(_) | fbvp::Error::IntervalInvalid { .. } | fbvp::Error::CInvalid(_) => {
            vec![id("C3")]
        }
        fbvp::Error::AlphaGammaInvalid(_) => vec![id("C7")],
        fbvp::Error::DelayTooLarge { .. } => vec!["C8".to_string()],
        _ => return CliError::Parse(e.to_string()),
    };
    CliError::Hypotheses {
        ids,
        detail: e.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const THERMOSTAT_EXAMPLE: &str = r#"{
        "schema": 1,
        "kernel": {"variant": "thermostat", "beta": 0.25, "eta": 0.25},
        "interval": [0.25, 0.4375],
        "F": {"form": "delay", "expr": "0.5*abs(u)*abs(v)", "r": 0.15}
    }"#;

    #[test]
    fn defaults_fill_in() {
        let c = Config::from_json(THERMOSTAT_EXAMPLE).unwrap();
        assert_eq!(c.mode(), Mode::SignChanging);
        assert_eq!(c.solver.grid, 1025);
        assert_eq!(c.certify.rho_max, 1e3);
        let p = c.problem(&Overrides::default()).unwrap();
        assert_eq!(p.cone().c1, 0.125);
        assert_eq!(p.psi_norm(), 0.0);
    }

    #[test]
    fn unknown_fields_and_schema_are_rejected() {
        let bad = THERMOSTAT_EXAMPLE.replace("\"schema\": 1", "\"schema\": 2");
        assert!(matches!(Config::from_json(&bad), Err(CliError::Parse(_))));
        let bad = THERMOSTAT_EXAMPLE.replace("\"interval\"", "\"intervall\"");
        assert!(matches!(Config::from_json(&bad), Err(CliError::Parse(_))));
        assert!(matches!(Config::from_json("{"), Err(CliError::Parse(_))));
    }

    #[test]
    fn bump_history_vanishes_at_both_ends() {
        let text = THERMOSTAT_EXAMPLE.replace("\"F\"", "\"psi\": {\"kind\": \"bump\", \"h\": 0.5}, \"F\"");
        let c = Config::from_json(&text).unwrap();
        let psi = c.psi().unwrap();
        assert!(psi.eval(-0.15).abs() < 1e-15);
        assert!(psi.eval(0.0).abs() < 1e-15);
        assert!((psi.eval(-0.075) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn interval_violation_names_the_hypothesis() {
        let text = THERMOSTAT_EXAMPLE.replace("0.4375", "0.6");
        let err = Config::from_json(&text).unwrap().problem(&Overrides::default()).unwrap_err();
        assert!(matches!(err, CliError::Hypotheses { ref ids, .. } if ids == &["C3"]));
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn custom_kernel_matches_dirichlet() {
        let text = r#"{
            "schema": 1,
            "kernel": {"variant": "custom", "k": "t*(1-s) - (t-s)*step(t-s)", "gamma": "t",
                       "phi": "s*(1-s)", "c1": "min(a, 1-b)", "c2": "a"},
            "interval": [0.25, 0.75],
            "F": {"form": "delay", "expr": "1", "r": 0.25}
        }"#;
        let p = Config::from_json(text).unwrap().problem(&Overrides::default()).unwrap();
        let d = KernelFamily::dirichlet(Mode::SignChanging);
        for &(t, s) in &[(0.3, 0.7), (0.7, 0.3), (0.5, 0.5), (1.0, 0.2)] {
            assert!((p.kernel().eval_k(t, s) - d.eval_k(t, s)).abs() < 1e-15);
        }
        assert_eq!(p.cone().c, 0.25);
    }
}
