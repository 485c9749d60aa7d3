//! Acceptance criteria. Runs without the libtest harness so that every
//! criterion prints exactly one PASS/FAIL line; exits non-zero if any fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;
use std::time::Instant;

use fbvp::certify::{check_index1, ProblemInstance};
use fbvp::envelope::{inf_number, sup_number, GrowthOptions, Nonlinearity};
use fbvp::kernel::{greens_residual, KernelFamily, Mode};
use fbvp::measure::{Grid, GridFunction, PiecewiseLinear, SignedMeasure};
use fbvp::quadrature::Quadrature;
use fbvp::solver::{
    apply_operator, check_cone_membership, multistart, solve, SolutionReport, SolverConfig,
};
use fbvp_cli::commands::{self, reproduce_rows, SolveOptions};
use fbvp_cli::{Config, Overrides};
use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn power(lambda: f64, p: f64, r: f64) -> Nonlinearity {
    Nonlinearity::delay(move |_, u, v| lambda * u.abs().powf(p - 1.0) * v.abs(), r).unwrap()
}

fn thermostat_example_json(lambda: f64, psi: &str) -> String {
    format!(
        r#"{{
            "schema": 1,
            "kernel": {{"variant": "thermostat", "beta": 0.25, "eta": 0.25, "mode": "sign_changing"}},
            "interval": [0.25, 0.4375],
            "psi": {psi},
            "F": {{"form": "delay", "expr": "{lambda} * pow(abs(u), 1) * abs(v)", "r": 0.15}},
            "certify": {{"rho_max": 10000, "budget": 64, "seeds": [1.0]}}
        }}"#
    )
}

fn thermostat_example_problem(lambda: f64, psi: PiecewiseLinear) -> ProblemInstance {
    ProblemInstance::new(
        KernelFamily::thermostat(0.25, 0.25, Mode::SignChanging).unwrap(),
        0.25,
        7.0 / 16.0,
        PiecewiseLinear::constant(0.0, 1.0, 1.0),
        SignedMeasure::zero(),
        psi,
        power(lambda, 2.0, 0.15),
    )
    .unwrap()
}

fn constant_reproduction() -> Check {
    let start = Instant::now();
    let rows = reproduce_rows(None).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed().as_secs_f64();
    let row = &rows[0];
    let detail = format!(
        "sup_t int |k| = {:.15} vs 17/16, |diff| = {:.3e}, {elapsed:.2} s",
        row.computed, row.diff
    );
    ensure(row.diff < 1e-8, detail.clone())?;
    ensure(elapsed < 5.0, format!("{detail}: too slow"))?;
    Ok(detail)
}

fn cone_constants_exact() -> Check {
    let (beta, eta, a, b) = (Ratio::new(1i64, 4), Ratio::new(1, 4), Ratio::new(1, 4), Ratio::new(7, 16));
    let sum = beta + eta;
    let denom = if sum >= Ratio::new(1, 2) { sum } else { Ratio::from_integer(1) - sum };
    let c1 = (a * beta / denom).min((sum - b) / denom);
    let c2 = a;
    ensure(c1 == Ratio::new(1, 8) && c2 == Ratio::new(1, 4), format!("rational oracle gave c1 = {c1}, c2 = {c2}"))?;
    let cone = KernelFamily::thermostat(0.25, 0.25, Mode::SignChanging)
        .unwrap()
        .cone_constants(0.25, 7.0 / 16.0)
        .map_err(|e| e.to_string())?;
    let want = |r: Ratio<i64>| *r.numer() as f64 / *r.denom() as f64;
    ensure(
        cone.c1 == want(c1) && cone.c2 == want(c2),
        format!("library c1 = {}, c2 = {}", cone.c1, cone.c2),
    )?;
    Ok(format!("c1 = {c1}, c2 = {c2} exactly"))
}

fn certificate_reproduction() -> Check {
    let start = Instant::now();
    let big_m_oracle = 640.0 / 3.0;
    let mut parts = Vec::new();
    for lambda in [0.1, 0.5, 0.9] {
        let cfg = Config::from_json(&thermostat_example_json(lambda, r#"{"kind": "bump", "h": 0.5}"#)).map_err(|e| e.to_string())?;
        let out = commands::certify(&cfg, &Overrides::default()).map_err(|e| e.to_string())?;
        let cert: serde_json::Value = serde_json::from_str(&out.report).map_err(|e| e.to_string())?;
        ensure(out.code == 0, format!("lambda = {lambda}: exit {}", out.code))?;
        ensure(cert["pattern"] == "S2", format!("lambda = {lambda}: pattern {}", cert["pattern"]))?;
        let ladder = cert["ladder"].as_array().ok_or("ladder missing")?;
        let rho1 = ladder[0]["rho"].as_f64().unwrap_or(f64::NAN);
        let rho2 = ladder[1]["rho"].as_f64().unwrap_or(f64::NAN);
        let big_m = cert["M"].as_f64().unwrap_or(f64::NAN);
        ensure(rho1 == 1.0, format!("lambda = {lambda}: rho1 = {rho1}"))?;
        ensure(
            rho2 > big_m / lambda && rho2 > big_m_oracle / lambda,
            format!("lambda = {lambda}: rho2 = {rho2} vs M/lambda = {}", big_m / lambda),
        )?;
        ensure((big_m - big_m_oracle).abs() < 1e-9 * big_m_oracle, format!("M = {big_m}, expected 640/3"))?;
        parts.push(format!("lambda={lambda}: S2 [1, {rho2:.1}]"));
    }
    let psi = PiecewiseLinear::sample(-0.15, 0.0, 257, |t| 0.5 * (std::f64::consts::PI * t / 0.15).sin().powi(2));
    let chk = check_index1(&thermostat_example_problem(0.95, psi), 1.0).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed().as_secs_f64();
    parts.push(format!(
        "lambda=0.95: index1 at rho=1 holds={} (sup/m = {:.6})",
        chk.holds,
        chk.growth * chk.reciprocal
    ));
    let detail = format!("{}; {elapsed:.1} s", parts.join("; "));
    ensure(!chk.holds, format!("{detail}: expected the lambda = 0.95 rung to fail"))?;
    ensure(elapsed < 30.0, format!("{detail}: too slow"))?;
    Ok(detail)
}

fn greens_kernels() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(20240501);
    let families = [
        KernelFamily::thermostat(0.25, 0.25, Mode::SignChanging).unwrap(),
        KernelFamily::dirichlet(Mode::SignChanging),
    ];
    let quad = Quadrature::default();
    let knots: Vec<f64> = (0..=8).map(|i| i as f64 / 8.0).collect();
    let (mut worst_in, mut worst_bc) = (0.0f64, 0.0f64);
    for _ in 0..20 {
        let values: Vec<f64> = knots.iter().map(|_| rng.gen_range(-2.0..2.0)).collect();
        let y = PiecewiseLinear::new(knots.clone(), values).unwrap();
        for fam in &families {
            let rep = greens_residual(fam, &|s| y.eval(s), &knots, 1025, &quad);
            worst_in = worst_in.max(rep.interior_residual);
            worst_bc = worst_bc.max(rep.max_bc_residual());
        }
    }
    let detail = format!("max interior residual {worst_in:.3e}, max BC residual {worst_bc:.3e}");
    ensure(worst_in < 1e-3 && worst_bc < 1e-8, detail.clone())?;
    Ok(detail)
}

/// A random element of `ψ + K₀` with `‖v‖ ≤ radius`, by rejection.
fn random_cone_element(p: &ProblemInstance, grid: &Arc<Grid>, radius: f64, rng: &mut ChaCha8Rng) -> GridFunction {
    let cone = p.cone();
    let knots: Vec<f64> = (0..=16).map(|i| i as f64 / 16.0).collect();
    loop {
        let lo = if p.mode() == Mode::NonNegative { 0.0 } else { -1.0 };
        let vals: Vec<f64> = knots
            .iter()
            .map(|&t| {
                if t == 0.0 {
                    0.0
                } else if t >= cone.a - 1.0 / 16.0 && t <= cone.b + 1.0 / 16.0 {
                    rng.gen_range(0.5..1.0)
                } else {
                    rng.gen_range(lo..1.0)
                }
            })
            .collect();
        let shape = PiecewiseLinear::new(knots.clone(), vals).unwrap();
        let scale = radius * rng.gen_range(0.0..1.0);
        let u = GridFunction::from_fn(grid.clone(), |t| if t <= 0.0 { p.psi_ext(t) } else { scale * shape.eval(t) });
        if check_cone_membership(p, &u, 0.0).inside() {
            return u;
        }
    }
}

fn cone_invariance() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let f = |r| power(0.5, 2.0, r);
    let bump = |r: f64, h: f64| PiecewiseLinear::sample(-r, 0.0, 129, move |t| h * (std::f64::consts::PI * t / r).sin().powi(2));
    let instances = vec![
        ("thermostat/sign_changing", thermostat_example_problem(0.5, bump(0.15, 0.3))),
        (
            "thermostat/non_negative",
            ProblemInstance::new(
                KernelFamily::thermostat(1.0, 0.5, Mode::NonNegative).unwrap(),
                0.5,
                0.9,
                PiecewiseLinear::constant(0.0, 1.0, 1.0),
                SignedMeasure::atoms(vec![(0.25, 0.3)]).unwrap(),
                bump(0.15, 0.3),
                f(0.15),
            )
            .unwrap(),
        ),
        (
            "dirichlet/sign_changing",
            ProblemInstance::new(
                KernelFamily::dirichlet(Mode::SignChanging),
                0.25,
                0.75,
                PiecewiseLinear::new(vec![0.0, 0.5, 1.0], vec![1.0, 2.0, 1.0]).unwrap(),
                SignedMeasure::atoms(vec![(0.5, 0.5)]).unwrap(),
                bump(0.25, -0.4),
                f(0.25),
            )
            .unwrap(),
        ),
        (
            "dirichlet/non_negative",
            ProblemInstance::new(
                KernelFamily::dirichlet(Mode::NonNegative),
                0.25,
                0.75,
                PiecewiseLinear::constant(0.0, 1.0, 1.0),
                SignedMeasure::density(PiecewiseLinear::new(vec![0.0, 1.0], vec![0.5, 0.0]).unwrap()).unwrap(),
                PiecewiseLinear::constant(-0.25, 0.0, 0.0),
                f(0.25),
            )
            .unwrap(),
        ),
    ];
    let mut failures = Vec::new();
    let mut worst = f64::INFINITY;
    for (name, p) in &instances {
        let diag = fbvp::certify::validate_hypotheses(p);
        ensure(diag.all_pass(), format!("{name}: hypotheses fail: {:?}", diag.failures().collect::<Vec<_>>()))?;
        // 1024 cells on [0, 1], so a and b are nodes
        let n = 1025 + (1024.0 * p.r()).round() as usize;
        let grid = Arc::new(Grid::new(p.r(), n).unwrap());
        for i in 0..50 {
            let u = random_cone_element(p, &grid, 2.0, &mut rng);
            let fu = apply_operator(p, &u).map_err(|e| e.to_string())?;
            let m = check_cone_membership(p, &fu, 1e-9);
            let (margin, _) = m.margins.worst();
            worst = worst.min(margin);
            if !m.inside() {
                failures.push(format!("{name} #{i}: {:?}", m.verdict));
            }
        }
    }
    let detail = format!("{} instances x 50 samples, worst clause margin {worst:.3e}", instances.len());
    ensure(failures.is_empty(), format!("{detail}; failures: {}", failures.join("; ")))?;
    Ok(detail)
}

fn solver_oracle() -> Check {
    let p = ProblemInstance::new(
        KernelFamily::dirichlet(Mode::SignChanging),
        0.25,
        0.75,
        PiecewiseLinear::constant(0.0, 1.0, 1.0),
        SignedMeasure::zero(),
        PiecewiseLinear::constant(-0.25, 0.0, 0.0),
        Nonlinearity::delay(|_, _, _| 1.0, 0.25).unwrap(),
    )
    .unwrap();
    let rep = solve(&p, &SolverConfig::default()).map_err(|e| e.to_string())?;
    let err = rep
        .u
        .nodes()
        .iter()
        .zip(rep.u.values())
        .map(|(&t, &u)| (u - if t > 0.0 { t * (1.0 - t) / 2.0 } else { 0.0 }).abs())
        .fold(0.0, f64::max);
    let detail = format!("max node error {err:.3e} after {} iteration(s)", rep.iterations);
    ensure(err < 1e-6 && rep.iterations <= 5 && rep.u.grid().len() == 1025, detail.clone())?;
    Ok(detail)
}

fn thermostat_example_solve() -> Check {
    let cfg = Config::from_json(&thermostat_example_json(0.5, r#"{"kind": "zero"}"#)).map_err(|e| e.to_string())?;
    let out = commands::solve(&cfg, &Overrides::default(), SolveOptions::default()).map_err(|e| e.to_string())?;
    let rep: serde_json::Value = serde_json::from_str(&out.report).map_err(|e| e.to_string())?;
    if out.code == 4 {
        return Err(format!("no convergence (best-effort outcome b): {}", out.message));
    }
    let sel = &rep["selected"];
    let residual = sel["residual"].as_f64().unwrap_or(f64::NAN);
    let norm = sel["norm"].as_f64().unwrap_or(f64::NAN);
    let min_ab = sel["min_on_ab"].as_f64().unwrap_or(f64::NAN);
    let verdict = sel["cone_membership"]["verdict"].as_str().unwrap_or("missing").to_string();
    let detail = format!("outcome a: residual {residual:.2e}, |u| = {norm:.6}, min over [a,b] = {min_ab:.4}, {verdict}");
    ensure(
        out.code == 0 && residual < 1e-6 && norm > 1.0 && min_ab > 0.0 && verdict == "in_k_psi",
        detail.clone(),
    )?;
    Ok(detail)
}

fn envelope_numbers() -> Check {
    let opts = GrowthOptions::default();
    let lambda = 0.5;
    let mut worst = 0.0f64;
    for p in [1.0, 2.0, 3.0] {
        let f = power(lambda, p, 0.15);
        for rho in [0.5f64, 1.0, 3.0] {
            let want = lambda * rho.powf(p - 1.0);
            let sup = sup_number(&f, rho, -rho, &opts).map_err(|e| e.to_string())?.value;
            let inf = inf_number(&f, rho, 0.125, 0.25, 7.0 / 16.0, &opts).map_err(|e| e.to_string())?.value;
            worst = worst.max(((sup - want) / want).abs()).max(((inf - want) / want).abs());
        }
    }
    let detail = format!("max relative error {worst:.3e} over 9 cases");
    ensure(worst < 1e-6, detail.clone())?;
    Ok(detail)
}

fn alpha_identity() -> Check {
    let dirichlet = |alpha: SignedMeasure, f: Nonlinearity| {
        ProblemInstance::new(
            KernelFamily::dirichlet(Mode::NonNegative),
            0.25,
            0.75,
            PiecewiseLinear::constant(0.0, 1.0, 1.0),
            alpha,
            PiecewiseLinear::constant(-0.25, 0.0, 0.0),
            f,
        )
        .unwrap()
    };
    let instances = vec![
        dirichlet(
            SignedMeasure::atoms(vec![(0.5, 1.0)]).unwrap(),
            Nonlinearity::delay(|_, _, _| 1.0, 0.25).unwrap(),
        ),
        dirichlet(
            SignedMeasure::new(
                vec![(0.3, 0.4)],
                Some(PiecewiseLinear::new(vec![0.2, 0.9], vec![1.0, 0.2]).unwrap()),
            )
            .unwrap(),
            Nonlinearity::delay(|t, u, v| 1.0 + t + 0.2 * u * u + 0.1 * v.abs(), 0.25).unwrap(),
        ),
        dirichlet(
            SignedMeasure::atoms(vec![(0.25, 0.5), (0.75, 0.5)]).unwrap(),
            power(2.0, 2.0, 0.25),
        ),
    ];
    let mut checked = 0;
    let mut worst = 0.0f64;
    for p in &instances {
        let ms = multistart(p, &SolverConfig::default(), &[0.5, 2.0, 8.0]).map_err(|e| e.to_string())?;
        let sols: Vec<&SolutionReport> = ms.solutions.iter().chain(ms.trivial.as_ref()).collect();
        for s in sols {
            checked += 1;
            worst = worst.max(s.alpha_consistency);
        }
    }
    let detail = format!("{checked} converged solutions, max discrepancy {worst:.3e}");
    ensure(checked > 0 && worst < 1e-7, detail.clone())?;
    Ok(detail)
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("constant reproduction: sup_t int |k| = 17/16", constant_reproduction),
        ("cone constants: c1 = 1/8, c2 = 1/4 as exact rationals", cone_constants_exact),
        ("certificate reproduction: S2 for lambda in {0.1, 0.5, 0.9}, lambda = 0.95 fails", certificate_reproduction),
        ("Green's kernels: random piecewise-linear loads", greens_kernels),
        ("cone invariance: 4 instances x 50 elements", cone_invariance),
        ("solver oracle: F = 1 gives t(1-t)/2", solver_oracle),
        ("desk-scale solve, lambda = 0.5 (best effort)", thermostat_example_solve),
        ("envelope numbers for lambda |u|^(p-1) |v|", envelope_numbers),
        ("fixed-point alpha identity", alpha_identity),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match result {
            Ok(detail) => println!("PASS {} {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {} {name}: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
