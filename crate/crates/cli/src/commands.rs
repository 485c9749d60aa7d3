//! The five subcommands. Each returns an [`Outcome`] holding its exit code
//! and report; writing files is left to the caller.

use std::fmt::Write as _;

use fbvp::certify::{
    auto_ladder, certify_ladder, validate_hypotheses, Certificate, Diagnostics, ProblemInstance, T_GRID,
};
use fbvp::kernel::{
    sup_abs_kernel_integral, thermostat_termwise_majorant, validate_bounds, BoundsReport, KernelFamily, Mode,
};
use fbvp::quadrature::Quadrature;
use fbvp::solver::{multistart, seed_levels, InitialGuess, MultiStartReport, SolutionReport};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{Config, Overrides};
use crate::error::CliError;

/// Exit code and report of one command.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub code: i32,
    /// JSON report (text table for `reproduce`).
    pub report: String,
    /// Solution CSV, `solve` only.
    pub csv: Option<String>,
    /// One-line summary for stderr.
    pub message: String,
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("reports serialize");
    s.push('\n');
    s
}

fn failed_ids(d: &Diagnostics) -> Vec<String> {
    d.failures().map(|c| c.id.clone()).collect()
}

fn hypothesis_message(ids: &[String]) -> String {
    format!("hypotheses failed: {}", ids.join(", "))
}

#[derive(Debug, Serialize)]
struct ConstantsReport<'a> {
    kernel: &'static str,
    mode: Mode,
    a: f64,
    b: f64,
    c1: f64,
    c2: f64,
    c: f64,
    /// `(s, Φ(s))` on 9 uniform points.
    phi: Vec<(f64, f64)>,
    m: Option<f64>,
    reciprocal_m: Option<f64>,
    m_at: Option<f64>,
    #[serde(rename = "M")]
    big_m: Option<f64>,
    reciprocal_big_m: Option<f64>,
    big_m_at: Option<f64>,
    alpha_gamma: f64,
    var_a: f64,
    psi_norm: f64,
    hypotheses: &'a Diagnostics,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    errors: Vec<String>,
}

pub fn constants(cfg: &Config, o: &Overrides) -> Result<Outcome, CliError> {
    let p = cfg.problem(o)?;
    let d = validate_hypotheses(&p);
    let cone = p.cone();
    let mut errors = Vec::new();
    let m = p.m().map_err(|e| errors.push(format!("m: {e}"))).ok();
    let big_m = p.big_m().map_err(|e| errors.push(format!("M(a,b): {e}"))).ok();
    let report = ConstantsReport {
        kernel: p.kernel().name(),
        mode: p.mode(),
        a: cone.a,
        b: cone.b,
        c1: cone.c1,
        c2: cone.c2,
        c: cone.c,
        phi: (0..=8).map(|i| i as f64 / 8.0).map(|s| (s, cone.phi.eval(s))).collect(),
        m: m.and_then(|e| e.value()),
        reciprocal_m: m.map(|e| e.reciprocal),
        m_at: m.map(|e| e.at_t),
        big_m: big_m.and_then(|e| e.value()),
        reciprocal_big_m: big_m.map(|e| e.reciprocal),
        big_m_at: big_m.map(|e| e.at_t),
        alpha_gamma: p.alpha_gamma(),
        var_a: p.alpha().total_variation(),
        psi_norm: p.psi_norm(),
        hypotheses: &d,
        errors,
    };
    let ids = failed_ids(&d);
    let (code, message) = if ids.is_empty() {
        (0, format!("c = {}, m = {:?}, M = {:?}", cone.c, report.m, report.big_m))
    } else {
        (3, hypothesis_message(&ids))
    };
    Ok(Outcome {
        code,
        report: to_json(&report),
        csv: None,
        message,
    })
}

fn certificate(p: &ProblemInstance, cfg: &Config) -> Certificate {
    match &cfg.certify.ladder {
        Some(ladder) => certify_ladder(p, ladder),
        None => auto_ladder(p, &cfg.certify.search()),
    }
}

pub fn certify(cfg: &Config, o: &Overrides) -> Result<Outcome, CliError> {
    let p = cfg.problem(o)?;
    let d = validate_hypotheses(&p);
    let ids = failed_ids(&d);
    if !ids.is_empty() {
        return Ok(Outcome {
            code: 3,
            report: to_json(&d),
            csv: None,
            message: hypothesis_message(&ids),
        });
    }
    let cert = certificate(&p, cfg);
    let (code, message) = match cert.pattern {
        Some(pat) => {
            let rhos: Vec<String> = cert.ladder.iter().map(|r| format!("{}", r.rho)).collect();
            (0, format!("{pat} with rho = [{}]", rhos.join(", ")))
        }
        None => (1, "no pattern certified".to_string()),
    };
    Ok(Outcome {
        code,
        report: to_json(&cert),
        csv: None,
        message,
    })
}

#[derive(Debug, Serialize)]
struct ValidateReport<'a> {
    hypotheses: &'a Diagnostics,
    bounds: BoundsReport,
}

pub fn validate(cfg: &Config, o: &Overrides) -> Result<Outcome, CliError> {
    let p = cfg.problem(o)?;
    let d = validate_hypotheses(&p);
    let report = ValidateReport {
        hypotheses: &d,
        bounds: validate_bounds(p.kernel(), p.cone(), 257),
    };
    let ids = failed_ids(&d);
    let (code, message) = if ids.is_empty() {
        let warns: Vec<String> = d.warnings().map(|c| c.id.clone()).collect();
        if warns.is_empty() {
            (0, "all hypotheses hold".to_string())
        } else {
            (0, format!("all hypotheses hold; warnings: {}", warns.join(", ")))
        }
    } else {
        (3, hypothesis_message(&ids))
    };
    Ok(Outcome {
        code,
        report: to_json(&report),
        csv: None,
        message,
    })
}

/// Settings of `solve` that do not live in the config.
#[derive(Debug, Clone, Copy, Default)]
pub struct SolveOptions {
    pub seed: u64,
    /// Solve even when hypotheses fail.
    pub force: bool,
}

#[derive(Debug, Serialize)]
struct Selected<'a> {
    #[serde(flatten)]
    solution: &'a SolutionReport,
    norm: f64,
    min_on_ab: f64,
    /// Consecutive ladder radii enclosing `‖v‖`, if any.
    annulus: Option<(Option<f64>, Option<f64>)>,
}

#[derive(Debug, Serialize)]
struct SolveReport<'a> {
    outcome: &'static str,
    certificate: &'a Certificate,
    levels: &'a [f64],
    multistart: &'a MultiStartReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    selected: Option<Selected<'a>>,
}

fn annulus(cert: &Certificate, norm_v: f64) -> Option<(Option<f64>, Option<f64>)> {
    if cert.ladder.is_empty() {
        return None;
    }
    let below = cert.ladder.iter().map(|r| r.rho).filter(|&r| r < norm_v).fold(None, |m: Option<f64>, r| {
        Some(m.map_or(r, |m| m.max(r)))
    });
    let above = cert.ladder.iter().map(|r| r.rho).filter(|&r| r >= norm_v).fold(None, |m: Option<f64>, r| {
        Some(m.map_or(r, |m| m.min(r)))
    });
    Some((below, above))
}

/// Writes `u` as `t,u` rows after a `#` header line.
pub fn solution_csv(sol: &SolutionReport) -> String {
    let (psi, v) = sol.norm_split;
    let mut out = format!(
        "# residual={:e} verdict={} norm_split=({},{}) iterations={}\n",
        sol.residual,
        sol.cone_membership.label(),
        psi,
        v,
        sol.iterations
    );
    out.push_str("t,u\n");
    for (t, u) in sol.u.nodes().iter().zip(sol.u.values()) {
        let _ = writeln!(out, "{t},{u}");
    }
    out
}

pub fn solve(cfg: &Config, o: &Overrides, opts: SolveOptions) -> Result<Outcome, CliError> {
    let p = cfg.problem(o)?;
    let d = validate_hypotheses(&p);
    let ids = failed_ids(&d);
    if !ids.is_empty() && !opts.force {
        return Ok(Outcome {
            code: 3,
            report: to_json(&d),
            csv: None,
            message: hypothesis_message(&ids),
        });
    }
    let cert = certificate(&p, cfg);
    let solver_cfg = cfg.solver.to_config();
    let mut levels = seed_levels(&cert);
    if let InitialGuess::ConeSeed(l) = solver_cfg.initial {
        levels.insert(0, l);
    }
    if cfg.solver.random_starts > 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        let lo = p.psi_norm().max(cfg.certify.rho_max * 1e-6).ln();
        let hi = cfg.certify.rho_max.ln();
        for _ in 0..cfg.solver.random_starts {
            levels.push(rng.gen_range(lo..=hi).exp());
        }
    }
    let ms = multistart(&p, &solver_cfg, &levels)?;
    let cone = p.cone();
    let (outcome, code, chosen) = if let Some(best) = ms.best() {
        ("nontrivial", 0, Some(best))
    } else if ms.any_converged() {
        ("trivial_only", 1, ms.trivial.as_ref())
    } else {
        ("no_convergence", 4, None)
    };
    let selected = chosen.map(|s| Selected {
        solution: s,
        norm: s.norm(),
        min_on_ab: s.u.min_on(cone.a, cone.b),
        annulus: annulus(&cert, s.norm_split.1),
    });
    let message = match (&selected, code) {
        (Some(s), 0) => format!(
            "nontrivial solution: residual {:e}, |u| = {}, {}",
            s.solution.residual,
            s.norm,
            s.solution.cone_membership.label()
        ),
        (_, 1) => "only the trivial solution was found".to_string(),
        _ => {
            let best = ms.runs.iter().map(|r| r.residual).filter(|r| r.is_finite()).fold(f64::INFINITY, f64::min);
            format!("no start converged (best residual {best:e})")
        }
    };
    let report = SolveReport {
        outcome,
        certificate: &cert,
        levels: &levels,
        multistart: &ms,
        selected,
    };
    Ok(Outcome {
        code,
        report: to_json(&report),
        csv: chosen.map(solution_csv),
        message,
    })
}

/// One row of the reproduction table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub quantity: String,
    pub reference: f64,
    pub computed: f64,
    pub diff: f64,
    pub tol: f64,
    pub pass: bool,
    /// Informational rows do not affect the exit code.
    pub counted: bool,
}

impl Row {
    fn new(quantity: &str, reference: f64, computed: f64, tol: f64, counted: bool) -> Self {
        let diff = (reference - computed).abs();
        Self {
            quantity: quantity.to_string(),
            reference,
            computed,
            diff,
            tol,
            pass: diff < tol || (tol == 0.0 && diff == 0.0),
            counted,
        }
    }
}

/// Published constants of the thermostat and Dirichlet examples against
/// their computed values. `panels` replaces the adaptive quadrature with a
/// fixed coarse rule.
pub fn reproduce_rows(panels: Option<usize>) -> Result<Vec<Row>, CliError> {
    let quad = panels.map_or_else(Quadrature::default, Quadrature::crippled);
    let thermostat = KernelFamily::thermostat(0.25, 0.25, Mode::SignChanging)?;
    let (_, sup) = sup_abs_kernel_integral(&thermostat, &quad, T_GRID);
    let (_, majorant) = thermostat_termwise_majorant(0.25, 0.25, &quad, T_GRID);
    let cone = thermostat.cone_constants(0.25, 7.0 / 16.0)?;
    let dirichlet = KernelFamily::dirichlet(Mode::SignChanging).cone_constants(0.25, 0.75)?;
    let positive = KernelFamily::thermostat(1.0, 0.5, Mode::NonNegative)?.cone_constants(0.5, 0.9)?;
    Ok(vec![
        Row::new("1/m = sup_t int |k(t,s)| ds, thermostat(1/4,1/4)", 17.0 / 16.0, sup, 1e-8, true),
        Row::new("term-wise majorant of int |k|, thermostat(1/4,1/4)", 17.0 / 16.0, majorant, 1e-8, false),
        Row::new("c1, thermostat(1/4,1/4) on [1/4,7/16]", 0.125, cone.c1, 0.0, true),
        Row::new("c2, thermostat(1/4,1/4) on [1/4,7/16]", 0.25, cone.c2, 0.0, true),
        Row::new("c = min(a, 1-b), dirichlet on [1/4,3/4]", 0.25, dirichlet.c, 0.0, true),
        Row::new("c1 = min(a, 1-b/(beta+eta)), thermostat(1,1/2) on [1/2,9/10]", 0.4, positive.c1, 1e-12, true),
    ])
}

pub fn render_rows(rows: &[Row]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:<64} {:>22} {:>22} {:>10} {:>8}  status", "quantity", "reference", "computed", "|diff|", "tol");
    for r in rows {
        let status = match (r.pass, r.counted) {
            (true, true) => "PASS",
            (false, true) => "FAIL",
            (true, false) => "info (match)",
            (false, false) => "info",
        };
        let _ = writeln!(
            out,
            "{:<64} {:>22.17} {:>22.17} {:>10.3e} {:>8.0e}  {status}",
            r.quantity, r.reference, r.computed, r.diff, r.tol
        );
    }
    out
}

pub fn reproduce(o: &Overrides) -> Result<Outcome, CliError> {
    let rows = reproduce_rows(o.quadrature_panels)?;
    let failed: Vec<&str> = rows.iter().filter(|r| r.counted && !r.pass).map(|r| r.quantity.as_str()).collect();
    let (code, message) = if failed.is_empty() {
        (0, "all rows match".to_string())
    } else {
        (1, format!("{} row(s) differ: {}", failed.len(), failed.join("; ")))
    };
    Ok(Outcome {
        code,
        report: render_rows(&rows),
        csv: None,
        message,
    })
}
