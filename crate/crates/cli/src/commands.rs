//! One function per subcommand; each returns artifacts plus a stdout summary.

use std::fmt::Write as _;

use serde::Serialize;

use fluidex::bas::{integrate_bas_trajectory, AdmissibleSample, ClassTag};
use fluidex::exponent::{composite_report, EstimatorConfig};
use fluidex::flow::{catalog, Point, SteadyFlow, Vec3};
use fluidex::oracle::{compare_growth_trend, stable_line_packet, ComparisonSettings};
use fluidex::spectral::fit::SlopeFit;
use fluidex::spectral::lemma::{lemma_scaling, sweep_presets, LemmaKind, SlopeRange, SweepVariable};
use fluidex::spectral::verify_steady_euler;

use crate::config::{Command, Settings};
use crate::output::{gnuplot_grouped, num, Artifact};
use crate::CliError;

pub struct CommandOutput {
    pub artifacts: Vec<Artifact>,
    pub stdout: String,
}

pub fn dispatch(s: &Settings) -> Result<CommandOutput, CliError> {
    match s.command {
        Command::Catalog => run_catalog(),
        Command::Exponents => run_exponents(s),
        Command::Trajectory => run_trajectory(s),
        Command::VerifyLemmas => run_lemmas(s),
        Command::OracleCompare => run_oracle(s),
        Command::VerifyFlow => run_verify_flow(s),
    }
}

fn run_catalog() -> Result<CommandOutput, CliError> {
    let entries = catalog();
    let mut out = String::new();
    writeln!(out, "{:<14} {:>3}  {:<30} {:>4}  formula", "flow", "dim", "supp(w)", "stag").unwrap();
    for e in &entries {
        writeln!(out, "{:<14} {:>3}  {:<30} {:>4}  {}", e.name, e.dim, e.omega_support, e.stagnation_points, e.formula)
            .unwrap();
    }
    Ok(CommandOutput { artifacts: vec![Artifact::json("catalog.json", &entries)?], stdout: out })
}

fn run_exponents(s: &Settings) -> Result<CommandOutput, CliError> {
    let flow = s.build_flow()?;
    let cfg = EstimatorConfig {
        classes: s.class_requests.clone(),
        horizons: s.horizons.clone(),
        n: s.n_samples,
        seed: s.seed,
        step: s.step,
        bound_times: s.bound_times.clone(),
    };
    let report = composite_report(&flow, &cfg)?;
    let mut csv = String::from("class,horizon,theta_log,rate\n");
    let mut out = String::new();
    for c in &report.classes {
        match &c.estimate {
            Some(e) => {
                for ((t, l), r) in e.horizons.iter().zip(&e.theta_log).zip(&e.per_horizon_rates) {
                    writeln!(csv, "{},{},{},{}", c.class, num(*t), num(*l), num(*r)).unwrap();
                }
                writeln!(out, "{:<14} mu_hat = {:.6}", c.class, e.mu_hat).unwrap();
                for w in &e.warnings {
                    writeln!(out, "  warning: {w}").unwrap();
                }
            }
            None => writeln!(out, "{:<14} unavailable: {}", c.class, c.reason.as_deref().unwrap_or("")).unwrap(),
        }
    }
    if let Some(m) = &report.max_relation {
        writeln!(
            out,
            "max relation: mu_full = {:.6}, max over {} = {:.6}, gap = {:.3e} ({})",
            m.mu_full,
            m.covering_classes.join("+"),
            m.mu_class_max,
            m.gap,
            if m.holds { "holds" } else { "VIOLATED" }
        )
        .unwrap();
    }
    let gp = gnuplot_grouped("exponents.csv", "log Theta(t)", 2, 3, "t", "log Theta", false);
    Ok(CommandOutput {
        artifacts: vec![
            Artifact::json("exponents.json", &report)?,
            Artifact::text("exponents.csv", csv),
            Artifact::text("exponents.gp", gp),
        ],
        stdout: out,
    })
}

fn vector_arg(name: &str, v: Option<&Vec<f64>>, default: [f64; 3], dim: usize) -> Result<Vec3, CliError> {
    match v {
        None => Ok(Vec3::new(default[0], default[1], if dim == 3 { default[2] } else { 0.0 })),
        Some(v) if v.len() == dim && v.iter().all(|x| x.is_finite()) => {
            Ok(Vec3::new(v[0], v[1], if dim == 3 { v[2] } else { 0.0 }))
        }
        Some(v) => Err(CliError::validation(format!(
            "{name} must have {dim} finite components for a {dim}D flow, got {}",
            v.len()
        ))),
    }
}

#[derive(Serialize)]
struct TrajectorySummary {
    flow: String,
    x0: Vec<f64>,
    xi0: Vec<f64>,
    b0: Vec<f64>,
    t_final: f64,
    step: f64,
    records: usize,
    final_x: Vec<f64>,
    final_xi: Vec<f64>,
    final_b: Vec<f64>,
    final_log_b: f64,
    max_orthogonality_defect: f64,
}

fn run_trajectory(s: &Settings) -> Result<CommandOutput, CliError> {
    let flow = s.build_flow()?;
    let d = flow.dim();
    let tc = &s.trajectory;
    let x0: Point = vector_arg("trajectory.x0", tc.x0.as_ref(), [0.5, 0.5, 0.5], d)?;
    let xi0 = vector_arg("trajectory.xi0", tc.xi0.as_ref(), [1.0, 0.0, 0.0], d)?;
    let b0 = vector_arg("trajectory.b0", tc.b0.as_ref(), [0.0, 1.0, 0.0], d)?;
    let t_final = tc.t_final.unwrap_or(10.0);
    let sample = AdmissibleSample::new(x0, xi0, b0, ClassTag::Full);
    let states = integrate_bas_trajectory(&flow, &sample, t_final, s.step, tc.every.unwrap_or(100))?;
    let take = |v: &Vec3| v.iter().take(d).copied().collect::<Vec<f64>>();
    let mut csv = String::from("t");
    for p in ["x", "xi", "b"] {
        for j in 1..=d {
            write!(csv, ",{p}{j}").unwrap();
        }
    }
    csv.push_str(",log_b,orthogonality\n");
    let mut max_defect: f64 = 0.0;
    for st in &states {
        let defect = st.c.dot(&st.eta).abs();
        max_defect = max_defect.max(defect);
        write!(csv, "{}", num(st.t)).unwrap();
        for v in [st.x, st.xi(), st.b()] {
            for x in take(&v) {
                write!(csv, ",{}", num(x)).unwrap();
            }
        }
        writeln!(csv, ",{},{}", num(st.beta), num(defect)).unwrap();
    }
    let last = states.last().expect("trajectory has at least one record");
    let summary = TrajectorySummary {
        flow: flow.name().to_string(),
        x0: take(&x0),
        xi0: take(&xi0),
        b0: take(&b0),
        t_final,
        step: s.step,
        records: states.len(),
        final_x: take(&last.x),
        final_xi: take(&last.xi()),
        final_b: take(&last.b()),
        final_log_b: last.beta,
        max_orthogonality_defect: max_defect,
    };
    let gp = format!(
        "set datafile separator ','\nset xlabel 't'\nset ylabel 'log|b|'\n\
         plot 'trajectory.csv' using 1:{} with lines title 'log|b|'\npause mouse close\n",
        3 * d + 2
    );
    let stdout = format!(
        "{}: log|b({t_final})| = {:.9}, max |<c, eta>| = {:.3e}\n",
        flow.name(),
        last.beta,
        max_defect
    );
    Ok(CommandOutput {
        artifacts: vec![
            Artifact::json("trajectory.json", &summary)?,
            Artifact::text("trajectory.csv", csv),
            Artifact::text("trajectory.gp", gp),
        ],
        stdout,
    })
}

#[derive(Serialize)]
struct SweepResult {
    kind: LemmaKind,
    flow: String,
    variable: SweepVariable,
    norm: String,
    points: Vec<(f64, f64)>,
    fit: Option<SlopeFit>,
    expected: SlopeRange,
    within_expected: bool,
}

fn run_lemmas(s: &Settings) -> Result<CommandOutput, CliError> {
    let mut presets = sweep_presets()?;
    if let Some(kinds) = &s.lemmas.kinds {
        presets.retain(|p| kinds.contains(&p.kind));
    }
    if s.flow_explicit {
        presets.retain(|p| p.flow == s.flow);
        if presets.is_empty() {
            return Err(CliError::validation(format!("no lemma sweep is defined on flow '{}'", s.flow)));
        }
    }
    let mut results = Vec::new();
    let mut csv = String::from("sweep,value,norm\n");
    let mut out = String::new();
    for mut p in presets {
        if let Some(n) = s.resolution {
            if matches!(p.kind, LemmaKind::Image2d | LemmaKind::Kernel2d) {
                p.params.resolution = n;
            }
        }
        if let Some(k) = s.lemmas.truncation {
            p.params.truncation = k;
        }
        let flow = SteadyFlow::from_name(p.flow, &Default::default())?;
        let rep = lemma_scaling(p.kind, &flow, &p.params, p.variable, &p.values)?;
        let label = format!("{}-{}", kind_name(p.kind), var_name(p.variable));
        for (x, y) in &rep.points {
            writeln!(csv, "{label},{},{}", num(*x), num(*y)).unwrap();
        }
        let within = rep.fit.is_some_and(|f| p.expected.contains(f.slope));
        let bound = match p.expected.max {
            Some(m) => format!("[{}, {}]", p.expected.min, m),
            None => format!(">= {}", p.expected.min),
        };
        match rep.fit {
            Some(f) => writeln!(
                out,
                "{label:<18} slope {:>7.4}  expected {bound:<12} {}",
                f.slope,
                if within { "ok" } else { "OUTSIDE" }
            ),
            None => writeln!(out, "{label:<18} no fit (fewer than three positive points)"),
        }
        .unwrap();
        results.push(SweepResult {
            kind: p.kind,
            flow: p.flow.to_string(),
            variable: p.variable,
            norm: rep.norm,
            points: rep.points,
            fit: rep.fit,
            expected: p.expected,
            within_expected: within,
        });
    }
    let gp = gnuplot_grouped("lemmas.csv", "lemma residual scaling", 2, 3, "parameter", "norm", true);
    Ok(CommandOutput {
        artifacts: vec![
            Artifact::json("lemmas.json", &results)?,
            Artifact::text("lemmas.csv", csv),
            Artifact::text("lemmas.gp", gp),
        ],
        stdout: out,
    })
}

fn kind_name(k: LemmaKind) -> &'static str {
    match k {
        LemmaKind::Solproj => "solproj",
        LemmaKind::Inimage3d => "inimage3d",
        LemmaKind::Image2d => "image2d",
        LemmaKind::Kernel2d => "kernel2d",
    }
}

fn var_name(v: SweepVariable) -> &'static str {
    match v {
        SweepVariable::Delta => "delta",
        SweepVariable::Zeta => "zeta",
    }
}

fn run_oracle(s: &Settings) -> Result<CommandOutput, CliError> {
    let flow = s.build_flow()?;
    if flow.dim() != 2 {
        return Err(CliError::validation(format!(
            "oracle-compare needs a 2D flow; '{}' is {}D",
            flow.name(),
            flow.dim()
        )));
    }
    let oc = &s.oracle;
    let mut spec = stable_line_packet(1.0 / 16.0);
    spec.x0 = vector_arg("oracle.x0", oc.x0.as_ref(), [spec.x0[0], spec.x0[1], 0.0], 2)?;
    spec.xi0 = vector_arg("oracle.xi0", oc.xi0.as_ref(), [1.0, 0.0, 0.0], 2)?;
    if let Some(z) = oc.zeta {
        spec.zeta = z;
    }
    let deltas = oc.deltas.clone().unwrap_or_else(|| vec![1.0 / 16.0, 1.0 / 64.0]);
    let times = oc.times.clone().unwrap_or_else(|| (0..=6).map(|i| i as f64 * 0.5).collect());
    let settings = ComparisonSettings {
        resolution: s.resolution.unwrap_or(256),
        dt: s.dt,
        step: s.step,
        quadrature_points: oc.quadrature_points.unwrap_or(64),
    };
    let trend = compare_growth_trend(&flow, &spec, &deltas, &times, &settings)?;
    let mut csv = String::from("delta,t,oracle_norm,predicted_norm,relative_gap\n");
    let mut out = String::new();
    for c in &trend.comparisons {
        for r in &c.rows {
            writeln!(
                csv,
                "{},{},{},{},{}",
                num(c.delta),
                num(r.t),
                num(r.oracle_norm),
                num(r.predicted_norm),
                num(r.relative_gap)
            )
            .unwrap();
        }
        writeln!(out, "delta = {:<10} max relative gap = {:.4}", c.delta, c.max_gap).unwrap();
    }
    writeln!(out, "gap shrinks with delta: {}", trend.shrinking).unwrap();
    let gp = gnuplot_grouped("oracle.csv", "relative gap", 2, 5, "t", "relative gap", false);
    Ok(CommandOutput {
        artifacts: vec![
            Artifact::json("oracle.json", &trend)?,
            Artifact::text("oracle.csv", csv),
            Artifact::text("oracle.gp", gp),
        ],
        stdout: out,
    })
}

fn run_verify_flow(s: &Settings) -> Result<CommandOutput, CliError> {
    let flow = s.build_flow()?;
    let n = s.resolution.unwrap_or(if flow.dim() == 3 { 64 } else { 256 });
    let r = verify_steady_euler(&flow, n)?;
    let stdout = format!(
        "{} at N = {n}: max|div u| = {:.3e}, max|P_sol(u.grad u)| = {:.3e}\n",
        flow.name(),
        r.div_residual,
        r.euler_residual
    );
    Ok(CommandOutput { artifacts: vec![Artifact::json("verify_flow.json", &r)?], stdout })
}
