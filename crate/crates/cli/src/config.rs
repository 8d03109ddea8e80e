//! Run configuration: TOML file, flag overrides and validation.

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use fluidex::exponent::ClassRequest;
use fluidex::flow::SteadyFlow;
use fluidex::spectral::lemma::LemmaKind;

use crate::parse::{parse_class_list, parse_flow_spec};
use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Catalog,
    Exponents,
    Trajectory,
    VerifyLemmas,
    OracleCompare,
    VerifyFlow,
}

impl Command {
    pub fn as_str(&self) -> &'static str {
        match self {
            Command::Catalog => "catalog",
            Command::Exponents => "exponents",
            Command::Trajectory => "trajectory",
            Command::VerifyLemmas => "verify-lemmas",
            Command::OracleCompare => "oracle-compare",
            Command::VerifyFlow => "verify-flow",
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectoryConfig {
    pub x0: Option<Vec<f64>>,
    pub xi0: Option<Vec<f64>>,
    pub b0: Option<Vec<f64>>,
    pub t_final: Option<f64>,
    pub every: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LemmasConfig {
    pub kinds: Option<Vec<LemmaKind>>,
    pub truncation: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    pub x0: Option<Vec<f64>>,
    pub xi0: Option<Vec<f64>>,
    pub zeta: Option<f64>,
    pub deltas: Option<Vec<f64>>,
    pub times: Option<Vec<f64>>,
    pub quadrature_points: Option<usize>,
}

/// Contents of a `--config` file. Every key is optional; unknown keys are errors.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Option<Command>,
    pub flow: Option<String>,
    pub flow_params: Option<BTreeMap<String, f64>>,
    pub classes: Option<Vec<String>>,
    pub horizons: Option<Vec<f64>>,
    pub n_samples: Option<usize>,
    pub seed: Option<u64>,
    pub step: Option<f64>,
    pub resolution: Option<usize>,
    pub dt: Option<f64>,
    pub out: Option<PathBuf>,
    pub bound_times: Option<Vec<f64>>,
    pub trajectory: Option<TrajectoryConfig>,
    pub lemmas: Option<LemmasConfig>,
    pub oracle: Option<OracleConfig>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::validation(format!("config: {}", e.message())))
    }

    /// Overlays `flags`; any field set in `flags` wins.
    pub fn merged(self, flags: RunConfig) -> RunConfig {
        fn pick<T>(flag: Option<T>, file: Option<T>) -> Option<T> {
            flag.or(file)
        }
        let flow_params = if flags.flow.is_some() { flags.flow_params } else { pick(flags.flow_params, self.flow_params) };
        RunConfig {
            command: pick(flags.command, self.command),
            flow: pick(flags.flow, self.flow),
            flow_params,
            classes: pick(flags.classes, self.classes),
            horizons: pick(flags.horizons, self.horizons),
            n_samples: pick(flags.n_samples, self.n_samples),
            seed: pick(flags.seed, self.seed),
            step: pick(flags.step, self.step),
            resolution: pick(flags.resolution, self.resolution),
            dt: pick(flags.dt, self.dt),
            out: pick(flags.out, self.out),
            bound_times: pick(flags.bound_times, self.bound_times),
            trajectory: pick(flags.trajectory, self.trajectory),
            lemmas: pick(flags.lemmas, self.lemmas),
            oracle: pick(flags.oracle, self.oracle),
        }
    }
}

pub const DEFAULT_HORIZONS: [f64; 4] = [5.0, 10.0, 20.0, 30.0];
pub const DEFAULT_OUT: &str = "fluidex-out";
pub const MAX_SAMPLES: usize = 1_000_000;
pub const MAX_RESOLUTION: usize = 1024;

/// Validated settings with defaults filled in. Serialized into the manifest.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Settings {
    pub command: Command,
    pub flow: String,
    pub flow_params: BTreeMap<String, f64>,
    pub classes: Vec<String>,
    pub horizons: Vec<f64>,
    pub n_samples: usize,
    pub seed: u64,
    pub step: f64,
    pub resolution: Option<usize>,
    pub dt: f64,
    pub bound_times: Vec<f64>,
    pub trajectory: TrajectoryConfig,
    pub lemmas: LemmasConfig,
    pub oracle: OracleConfig,
    #[serde(skip)]
    pub out: Option<PathBuf>,
    #[serde(skip)]
    pub flow_explicit: bool,
    #[serde(skip)]
    pub class_requests: Vec<ClassRequest>,
}

fn check_positive(name: &str, v: f64, max: f64) -> Result<(), CliError> {
    if v > 0.0 && v <= max && v.is_finite() {
        Ok(())
    } else {
        Err(CliError::validation(format!("{name} must lie in (0, {max}], got {v}")))
    }
}

fn check_increasing(name: &str, v: &[f64], min_len: usize) -> Result<(), CliError> {
    if v.len() < min_len {
        return Err(CliError::validation(format!("{name} needs at least {min_len} values, got {}", v.len())));
    }
    if v.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
        return Err(CliError::validation(format!("{name} must be finite and non-negative")));
    }
    if v.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CliError::validation(format!("{name} must be strictly increasing")));
    }
    Ok(())
}

impl Settings {
    pub fn resolve(cfg: RunConfig) -> Result<Settings, CliError> {
        let command = cfg
            .command
            .ok_or_else(|| CliError::validation("no command given (catalog, exponents, trajectory, verify-lemmas, oracle-compare or verify-flow)"))?;
        let (flow, mut flow_params) = match &cfg.flow {
            Some(spec) => parse_flow_spec(spec).map_err(|e| CliError::validation(format!("flow: {e}")))?,
            None => ("cellular".to_string(), BTreeMap::new()),
        };
        if let Some(extra) = cfg.flow_params {
            for (k, v) in extra {
                flow_params.entry(k).or_insert(v);
            }
        }
        let classes = cfg.classes.unwrap_or_else(|| vec!["full".to_string()]);
        let class_requests =
            parse_class_list(&classes.join(",")).map_err(|e| CliError::validation(format!("classes: {e}")))?;
        let horizons = cfg.horizons.unwrap_or_else(|| DEFAULT_HORIZONS.to_vec());
        check_increasing("horizons", &horizons, 2)?;
        if horizons[0] <= 0.0 {
            return Err(CliError::validation("horizons must be positive"));
        }
        let n_samples = cfg.n_samples.unwrap_or(500);
        if n_samples == 0 || n_samples > MAX_SAMPLES {
            return Err(CliError::validation(format!("n must lie in [1, {MAX_SAMPLES}], got {n_samples}")));
        }
        let step = cfg.step.unwrap_or(fluidex::bas::DEFAULT_STEP);
        check_positive("step", step, 0.1)?;
        if let Some(n) = cfg.resolution {
            if !(8..=MAX_RESOLUTION).contains(&n) || !n.is_power_of_two() {
                return Err(CliError::validation(format!(
                    "resolution must be a power of two in [8, {MAX_RESOLUTION}], got {n}"
                )));
            }
        }
        let dt = cfg.dt.unwrap_or(0.005);
        check_positive("dt", dt, 1.0)?;
        let bound_times = cfg.bound_times.unwrap_or_default();
        if bound_times.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
            return Err(CliError::validation("bound_times must be positive"));
        }
        let trajectory = cfg.trajectory.unwrap_or_default();
        if let Some(t) = trajectory.t_final {
            check_positive("trajectory.t_final", t, 1e4)?;
        }
        let lemmas = cfg.lemmas.unwrap_or_default();
        if let Some(k) = lemmas.truncation {
            if !(1..=48).contains(&k) {
                return Err(CliError::validation(format!("lemmas.truncation must lie in [1, 48], got {k}")));
            }
        }
        let oracle = cfg.oracle.unwrap_or_default();
        if let Some(z) = oracle.zeta {
            check_positive("oracle.zeta", z, 1.0)?;
        }
        if let Some(d) = &oracle.deltas {
            if d.is_empty() || d.iter().any(|v| !(*v > 0.0 && *v <= 1.0)) {
                return Err(CliError::validation("oracle.deltas must be non-empty and lie in (0, 1]"));
            }
        }
        if let Some(t) = &oracle.times {
            check_increasing("oracle.times", t, 1)?;
        }
        if let Some(q) = oracle.quadrature_points {
            if !(4..=1024).contains(&q) {
                return Err(CliError::validation(format!("oracle.quadrature_points must lie in [4, 1024], got {q}")));
            }
        }
        let settings = Settings {
            command,
            flow,
            flow_params,
            classes,
            horizons,
            n_samples,
            seed: cfg.seed.unwrap_or(1),
            step,
            resolution: cfg.resolution,
            dt,
            bound_times,
            trajectory,
            lemmas,
            oracle,
            out: cfg.out,
            flow_explicit: cfg.flow.is_some(),
            class_requests,
        };
        if command != Command::Catalog && command != Command::VerifyLemmas {
            settings.build_flow()?;
        }
        Ok(settings)
    }

    pub fn build_flow(&self) -> Result<SteadyFlow, CliError> {
        SteadyFlow::from_name(&self.flow, &self.flow_params).map_err(CliError::from)
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected() {
        let e = RunConfig::from_toml("command = \"catalog\"\nbogus = 1\n").unwrap_err();
        assert_eq!(e.code, 2);
        assert!(e.message.contains("bogus"));
        let e = RunConfig::from_toml("[oracle]\nzeta = 0.5\nwidth = 2\n").unwrap_err();
        assert!(e.message.contains("width"));
    }

    #[test]
    fn flags_override_file() {
        let file = RunConfig::from_toml(
            "command = \"exponents\"\nflow = \"abc\"\nseed = 4\nn_samples = 10\n[flow_params]\na = 2.0\n",
        )
        .unwrap();
        let flags = RunConfig { seed: Some(9), ..RunConfig::default() };
        let s = Settings::resolve(file.clone().merged(flags)).unwrap();
        assert_eq!((s.seed, s.n_samples, s.flow.as_str()), (9, 10, "abc"));
        assert_eq!(s.flow_params["a"], 2.0);
        let flags = RunConfig { flow: Some("cellular".into()), ..RunConfig::default() };
        let s = Settings::resolve(file.merged(flags)).unwrap();
        assert!(s.flow_params.is_empty());
    }

    #[test]
    fn ranges_are_checked() {
        let base = RunConfig { command: Some(Command::Exponents), ..RunConfig::default() };
        for bad in [
            RunConfig { n_samples: Some(0), ..base.clone() },
            RunConfig { step: Some(-1.0), ..base.clone() },
            RunConfig { resolution: Some(100), ..base.clone() },
            RunConfig { horizons: Some(vec![5.0, 5.0]), ..base.clone() },
            RunConfig { horizons: Some(vec![5.0]), ..base.clone() },
            RunConfig { classes: Some(vec!["nope".into()]), ..base.clone() },
            RunConfig { flow: Some("nope".into()), ..base.clone() },
        ] {
            assert_eq!(Settings::resolve(bad).unwrap_err().code, 2);
        }
        assert!(Settings::resolve(base).is_ok());
    }
}
