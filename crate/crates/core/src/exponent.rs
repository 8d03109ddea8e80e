//! Sampling of admissible initial data and exponent estimation.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::bas::{
    integrate_to_times, jacobian_eigenvectors, orthonormal_complement, AdmissibleSample, BasState,
    ClassTag,
};
use crate::error::{FluidexError, Result};
use crate::flow::{wrap, Field, Point, SteadyFlow, Support, Vec3, DEFAULT_SUPPORT_TOL, TWO_PI};
use crate::spectral::fit::{linear_fit, LinearFit};

/// Offsets along the stable eigen-direction used to seed `f2_aligned`.
pub const STABLE_LINE_OFFSETS: [f64; 4] = [0.05, 0.1, 0.2, 0.4];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SampleSet {
    pub class_tag: ClassTag,
    pub samples: Vec<AdmissibleSample>,
    /// Number drawn from the low-discrepancy sequence (the rest are injected).
    pub sampled: usize,
    pub candidates_tried: usize,
    pub warnings: Vec<String>,
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += (i % base) as f64 * f;
        i /= base;
        f *= inv;
    }
    r
}

const HALTON_BASES: [u64; 3] = [2, 3, 5];

fn candidate_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn halton_point(dim: usize, index: u64, shift: &[f64; 3]) -> Point {
    let mut x = Point::zeros();
    for a in 0..dim {
        let v = radical_inverse(index + 1, HALTON_BASES[a]) + shift[a];
        x[a] = wrap(TWO_PI * (v - v.floor()));
    }
    x
}

fn random_direction(dim: usize, rng: &mut ChaCha8Rng) -> (Vec3, Vec3) {
    if dim == 2 {
        let th: f64 = rng.gen_range(0.0..TWO_PI);
        let xi = Vec3::new(th.cos(), th.sin(), 0.0);
        let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
        return (xi, Vec3::new(-xi[1], xi[0], 0.0) * sign);
    }
    let z: f64 = rng.gen_range(-1.0..1.0);
    let ph: f64 = rng.gen_range(0.0..TWO_PI);
    let r = (1.0 - z * z).sqrt();
    let xi = Vec3::new(r * ph.cos(), r * ph.sin(), z);
    let basis = orthonormal_complement(3, &xi);
    let psi: f64 = rng.gen_range(0.0..TWO_PI);
    (xi, basis[0] * psi.cos() + basis[1] * psi.sin())
}

/// Checks that a class makes sense for the flow.
pub fn check_class(flow: &SteadyFlow, class: ClassTag) -> Result<()> {
    if let Some(d) = class.required_dim() {
        if d != flow.dim() {
            return Err(FluidexError::UnsupportedClass(format!(
                "class {class} needs a {d}D flow; '{}' is {}D",
                flow.name(),
                flow.dim()
            )));
        }
    }
    if class == ClassTag::F3 && flow.declared_support(Field::Omega) == Some(Support::Whole) {
        return Err(FluidexError::UnsupportedClass(format!(
            "supp(omega) is the whole domain for '{}'; f3 is undefined (it requires supp(omega) to be a proper subset)",
            flow.name()
        )));
    }
    Ok(())
}

/// Classes whose admissible sets cover the full set for this flow.
pub fn covering_classes(flow: &SteadyFlow) -> Vec<ClassTag> {
    if flow.dim() == 2 {
        vec![ClassTag::Star2, ClassTag::F2Complement]
    } else if check_class(flow, ClassTag::F3).is_ok() {
        vec![ClassTag::Star3, ClassTag::F3]
    } else {
        vec![ClassTag::Star3]
    }
}

fn unit_grad_omega(flow: &SteadyFlow, x: &Point) -> Result<Option<Vec3>> {
    let g = flow.vorticity_gradient(x)?;
    let n = g.norm();
    Ok(if n > DEFAULT_SUPPORT_TOL { Some(g / n) } else { None })
}

/// Class predicate on a base point.
fn point_admissible(flow: &SteadyFlow, class: ClassTag, x: &Point) -> Result<bool> {
    let tol = DEFAULT_SUPPORT_TOL;
    Ok(match class {
        ClassTag::Full => true,
        ClassTag::Star3 => flow.in_support(x, Field::Omega, tol)?,
        ClassTag::F3 => !flow.in_support(x, Field::Omega, tol)?,
        ClassTag::Star2 => flow.in_support(x, Field::GradOmega, tol)?,
        ClassTag::F2Complement => !flow.in_support(x, Field::GradOmega, tol)?,
        ClassTag::F2Aligned => {
            flow.in_support(x, Field::GradOmega, tol)? && unit_grad_omega(flow, x)?.is_some()
        }
    })
}

fn sample_class(flow: &SteadyFlow, class: ClassTag, n: usize, seed: u64) -> Result<SampleSet> {
    check_class(flow, class)?;
    let dim = flow.dim();
    let mut shift_rng = candidate_rng(seed, u64::MAX);
    let shift = [shift_rng.gen::<f64>(), shift_rng.gen::<f64>(), shift_rng.gen::<f64>()];
    let max_tries = 64 * n + 4096;
    let mut samples = Vec::with_capacity(n + 16);
    let mut tried = 0;
    while samples.len() < n && tried < max_tries {
        let index = tried as u64;
        tried += 1;
        let x = halton_point(dim, index, &shift);
        if !point_admissible(flow, class, &x)? {
            continue;
        }
        let (xi, b) = if class == ClassTag::F2Aligned {
            let xi = unit_grad_omega(flow, &x)?.expect("checked by predicate");
            (xi, Vec3::new(-xi[1], xi[0], 0.0))
        } else {
            random_direction(dim, &mut candidate_rng(seed, index))
        };
        samples.push(AdmissibleSample::new(x, xi, b, class));
    }
    let sampled = samples.len();
    let mut warnings = Vec::new();
    if sampled < n {
        warnings.push(format!(
            "class {class}: only {sampled} of {n} candidates satisfied the class predicate after {tried} draws"
        ));
    }
    for xs in flow.stagnation_points() {
        let pairs = jacobian_eigenvectors(flow, &xs);
        if class == ClassTag::F2Aligned {
            let stable = pairs[0].1;
            for s in STABLE_LINE_OFFSETS {
                for sign in [1.0, -1.0] {
                    let mut x = xs + stable * (sign * s);
                    for a in 0..dim {
                        x[a] = wrap(x[a]);
                    }
                    if point_admissible(flow, class, &x)? {
                        let xi = unit_grad_omega(flow, &x)?.expect("checked by predicate");
                        samples.push(AdmissibleSample::new(x, xi, Vec3::new(-xi[1], xi[0], 0.0), class));
                    }
                }
            }
        } else if point_admissible(flow, class, &xs)? {
            for (i, (_, a)) in pairs.iter().enumerate() {
                for (j, (_, b)) in pairs.iter().enumerate() {
                    if i != j {
                        samples.push(AdmissibleSample::new(xs, *a, *b, class));
                    }
                }
            }
        }
    }
    if samples.is_empty() {
        warnings.push(format!("class {class} has an empty admissible sample set for '{}'", flow.name()));
    }
    for w in &warnings {
        log::warn!("{w}");
    }
    Ok(SampleSet { class_tag: class, samples, sampled, candidates_tried: tried, warnings })
}

/// Deterministic sample of the class's admissible set.
///
/// `full` is the union of the covering class sets, so its supremum is exactly
/// the maximum of theirs.
pub fn sample_admissible(flow: &SteadyFlow, class: ClassTag, n: usize, seed: u64) -> Result<SampleSet> {
    if n == 0 {
        return Err(FluidexError::Config("sample count n must be >= 1".into()));
    }
    if class != ClassTag::Full {
        return sample_class(flow, class, n, seed);
    }
    let mut out = SampleSet {
        class_tag: ClassTag::Full,
        samples: Vec::new(),
        sampled: 0,
        candidates_tried: 0,
        warnings: Vec::new(),
    };
    for c in covering_classes(flow) {
        let s = sample_class(flow, c, n, seed)?;
        out.sampled += s.sampled;
        out.candidates_tried += s.candidates_tried;
        out.samples.extend(s.samples.into_iter().map(|mut a| {
            a.class_tag = ClassTag::Full;
            a
        }));
        out.warnings.extend(s.warnings);
    }
    Ok(out)
}

fn check_horizons(horizons: &[f64]) -> Result<()> {
    if horizons.len() < 2 {
        return Err(FluidexError::Config("at least two horizons are required".into()));
    }
    if !(horizons[0] > 0.0) || horizons.windows(2).any(|w| !(w[1] > w[0])) || horizons.iter().any(|h| !h.is_finite()) {
        return Err(FluidexError::Config(format!(
            "horizons must be positive and strictly increasing, got {horizons:?}"
        )));
    }
    Ok(())
}

/// `beta` of every sample at every horizon (rows follow the sample order).
pub fn sample_betas(
    flow: &SteadyFlow,
    samples: &[AdmissibleSample],
    horizons: &[f64],
    step: f64,
) -> Result<Vec<Vec<f64>>> {
    samples
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            let states = integrate_to_times(flow, BasState::from_sample(s)?, horizons, step)
                .map_err(|e| match e {
                    FluidexError::NumericalBlowup { time, context } => FluidexError::NumericalBlowup {
                        time,
                        context: format!(
                            "{context}; sample #{i} x0={:?} xi0={:?} b0={:?}",
                            s.x0.as_slice(),
                            s.xi0.as_slice(),
                            s.b0.as_slice()
                        ),
                    },
                    other => other,
                })?;
            Ok(states.iter().map(|st| st.beta).collect())
        })
        .collect()
}

fn column_max(rows: &[Vec<f64>], h: usize) -> (f64, usize) {
    let mut best = (f64::NEG_INFINITY, 0);
    for (i, r) in rows.iter().enumerate() {
        if r[h] > best.0 {
            best = (r[h], i);
        }
    }
    best
}

/// `log Θ(t)`: the largest `beta(t)` over the samples.
pub fn theta_sup(flow: &SteadyFlow, t: f64, samples: &[AdmissibleSample], step: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(FluidexError::UnsupportedClass("empty sample set".into()));
    }
    if !(t >= 0.0) {
        return Err(FluidexError::Config(format!("t must be >= 0, got {t}")));
    }
    let rows = sample_betas(flow, samples, &[t], step)?;
    Ok(column_max(&rows, 0).0)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExponentEstimate {
    pub class_tag: String,
    pub mu_hat: f64,
    pub horizons: Vec<f64>,
    pub theta_log: Vec<f64>,
    /// `theta_log[i] / horizons[i]`.
    pub per_horizon_rates: Vec<f64>,
    pub rate_spread: f64,
    /// False when the per-horizon rates are not non-increasing.
    pub rates_monotone_decreasing: bool,
    /// Index of the first horizon in the fit window.
    pub fit_start: usize,
    pub slope_ci: LinearFit,
    pub n_samples: usize,
    pub seed: u64,
    pub step: f64,
    /// Index of the maximizing sample at each horizon (`None` for composites).
    pub argmax: Option<Vec<usize>>,
    pub warnings: Vec<String>,
}

impl ExponentEstimate {
    pub fn from_theta(
        label: &str,
        horizons: &[f64],
        theta_log: Vec<f64>,
        n_samples: usize,
        seed: u64,
        step: f64,
    ) -> Result<Self> {
        check_horizons(horizons)?;
        let len = horizons.len();
        let fit_start = (len / 2).min(len - 2);
        let slope_ci = linear_fit(&horizons[fit_start..], &theta_log[fit_start..])?;
        let rates: Vec<f64> = theta_log.iter().zip(horizons).map(|(l, t)| l / t).collect();
        let lo = rates.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = rates.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mono = rates.windows(2).all(|w| w[1] <= w[0] + 1e-12);
        let mut warnings = Vec::new();
        if !mono {
            warnings.push(format!(
                "{label}: per-horizon rates are not monotone decreasing; horizons may be too short"
            ));
        }
        Ok(ExponentEstimate {
            class_tag: label.to_string(),
            mu_hat: slope_ci.slope,
            horizons: horizons.to_vec(),
            theta_log,
            per_horizon_rates: rates,
            rate_spread: hi - lo,
            rates_monotone_decreasing: mono,
            fit_start,
            slope_ci,
            n_samples,
            seed,
            step,
            argmax: None,
            warnings,
        })
    }
}

fn estimate_from_rows(
    label: &str,
    rows: &[Vec<f64>],
    horizons: &[f64],
    seed: u64,
    step: f64,
) -> Result<ExponentEstimate> {
    let (theta, arg): (Vec<f64>, Vec<usize>) = (0..horizons.len()).map(|h| column_max(rows, h)).unzip();
    let mut est = ExponentEstimate::from_theta(label, horizons, theta, rows.len(), seed, step)?;
    est.argmax = Some(arg);
    Ok(est)
}

pub fn estimate_exponent(
    flow: &SteadyFlow,
    class: ClassTag,
    horizons: &[f64],
    n: usize,
    seed: u64,
    step: f64,
) -> Result<ExponentEstimate> {
    check_horizons(horizons)?;
    let set = sample_admissible(flow, class, n, seed)?;
    if set.samples.is_empty() {
        return Err(FluidexError::UnsupportedClass(format!(
            "class {class} has no admissible samples for flow '{}'",
            flow.name()
        )));
    }
    let rows = sample_betas(flow, &set.samples, horizons, step)?;
    let mut est = estimate_from_rows(class.as_str(), &rows, horizons, seed, step)?;
    est.warnings.splice(0..0, set.warnings);
    Ok(est)
}

/// `exp(μ̂ t)`, a lower bound for the class's essential spectral radius.
pub fn ress_lower_bound(est: &ExponentEstimate, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(FluidexError::Config(format!("bound time must be positive, got {t}")));
    }
    Ok((est.mu_hat * t).exp())
}

/// A class named in a report request; `F2` is the 2D pair of factor classes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ClassRequest {
    Tag(ClassTag),
    F2,
}

impl ClassRequest {
    pub fn label(&self) -> &'static str {
        match self {
            ClassRequest::Tag(t) => t.as_str(),
            ClassRequest::F2 => "f2",
        }
    }
}

impl std::str::FromStr for ClassRequest {
    type Err = FluidexError;
    fn from_str(s: &str) -> Result<Self> {
        if s == "f2" {
            Ok(ClassRequest::F2)
        } else {
            s.parse::<ClassTag>().map(ClassRequest::Tag).map_err(|_| {
                FluidexError::Config(format!(
                    "unknown class '{s}' (expected full, star3, f3, star2, f2, f2_complement or f2_aligned)"
                ))
            })
        }
    }
}

#[derive(Clone, Debug)]
pub struct EstimatorConfig {
    pub classes: Vec<ClassRequest>,
    pub horizons: Vec<f64>,
    pub n: usize,
    pub seed: u64,
    pub step: f64,
    pub bound_times: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Bound {
    pub t: f64,
    pub ress_lower_bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassEntry {
    pub class: String,
    pub available: bool,
    pub reason: Option<String>,
    pub estimate: Option<ExponentEstimate>,
    pub bounds: Vec<Bound>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MaxRelation {
    pub covering_classes: Vec<String>,
    pub mu_full: f64,
    pub mu_class_max: f64,
    pub gap: f64,
    pub tolerance: f64,
    pub holds: bool,
    /// `max_t |log Θ_full − max_class log Θ_class|`.
    pub theta_gap: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FlowDescriptor {
    pub name: String,
    pub dim: usize,
    pub params: BTreeMap<String, f64>,
}

impl FlowDescriptor {
    pub fn of(flow: &SteadyFlow) -> Self {
        FlowDescriptor { name: flow.name().to_string(), dim: flow.dim(), params: flow.params().clone() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassReport {
    pub flow: FlowDescriptor,
    pub horizons: Vec<f64>,
    pub n: usize,
    pub seed: u64,
    pub step: f64,
    pub classes: Vec<ClassEntry>,
    pub max_relation: Option<MaxRelation>,
}

impl ClassReport {
    pub fn estimate(&self, label: &str) -> Option<&ExponentEstimate> {
        self.classes.iter().find(|c| c.class == label).and_then(|c| c.estimate.as_ref())
    }
}

pub const MAX_RELATION_TOLERANCE: f64 = 0.1;

struct ClassRun {
    rows: Vec<Vec<f64>>,
    warnings: Vec<String>,
}

/// Estimates every requested class and checks the max relation.
pub fn composite_report(flow: &SteadyFlow, config: &EstimatorConfig) -> Result<ClassReport> {
    check_horizons(&config.horizons)?;
    if config.n == 0 {
        return Err(FluidexError::Config("sample count n must be >= 1".into()));
    }
    for r in &config.classes {
        match r {
            ClassRequest::Tag(t) => check_class(flow, *t)?,
            ClassRequest::F2 => check_class(flow, ClassTag::F2Aligned)?,
        }
    }
    let covering = covering_classes(flow);
    let mut needed: Vec<ClassTag> = covering.clone();
    for r in &config.classes {
        match r {
            ClassRequest::Tag(ClassTag::Full) => {}
            ClassRequest::Tag(t) => needed.push(*t),
            ClassRequest::F2 => needed.extend([ClassTag::F2Complement, ClassTag::F2Aligned]),
        }
    }
    needed.sort();
    needed.dedup();

    let mut runs: BTreeMap<ClassTag, ClassRun> = BTreeMap::new();
    for c in needed {
        let set = sample_class(flow, c, config.n, config.seed)?;
        let rows = sample_betas(flow, &set.samples, &config.horizons, config.step)?;
        runs.insert(c, ClassRun { rows, warnings: set.warnings });
    }

    let estimate_of = |label: &str, parts: &[ClassTag]| -> Result<Option<ExponentEstimate>> {
        let avail: Vec<&ClassRun> =
            parts.iter().filter_map(|c| runs.get(c)).filter(|r| !r.rows.is_empty()).collect();
        if avail.is_empty() {
            return Ok(None);
        }
        if parts.len() == 1 {
            let mut est = estimate_from_rows(label, &avail[0].rows, &config.horizons, config.seed, config.step)?;
            est.warnings.splice(0..0, avail[0].warnings.clone());
            return Ok(Some(est));
        }
        let theta: Vec<f64> = (0..config.horizons.len())
            .map(|h| avail.iter().map(|r| column_max(&r.rows, h).0).fold(f64::NEG_INFINITY, f64::max))
            .collect();
        let n: usize = avail.iter().map(|r| r.rows.len()).sum();
        Ok(Some(ExponentEstimate::from_theta(label, &config.horizons, theta, n, config.seed, config.step)?))
    };

    let full = estimate_of("full", &covering)?;
    let mut classes = Vec::new();
    for r in &config.classes {
        let est = match r {
            ClassRequest::Tag(ClassTag::Full) => full.clone(),
            ClassRequest::Tag(t) => estimate_of(t.as_str(), &[*t])?,
            ClassRequest::F2 => estimate_of("f2", &[ClassTag::F2Complement, ClassTag::F2Aligned])?,
        };
        let bounds = match &est {
            Some(e) => config
                .bound_times
                .iter()
                .map(|&t| Ok(Bound { t, ress_lower_bound: ress_lower_bound(e, t)? }))
                .collect::<Result<Vec<_>>>()?,
            None => Vec::new(),
        };
        classes.push(ClassEntry {
            class: r.label().to_string(),
            available: est.is_some(),
            reason: if est.is_none() {
                Some(format!("no admissible samples for class {} on '{}'", r.label(), flow.name()))
            } else {
                None
            },
            estimate: est,
            bounds,
        });
    }

    let max_relation = match &full {
        None => None,
        Some(full) => {
            let parts: Vec<ExponentEstimate> = covering
                .iter()
                .filter_map(|c| estimate_of(c.as_str(), &[*c]).transpose())
                .collect::<Result<Vec<_>>>()?;
            let mu_class_max = parts.iter().map(|e| e.mu_hat).fold(f64::NEG_INFINITY, f64::max);
            let theta_gap = (0..config.horizons.len())
                .map(|h| {
                    let m = parts.iter().map(|e| e.theta_log[h]).fold(f64::NEG_INFINITY, f64::max);
                    (full.theta_log[h] - m).abs()
                })
                .fold(0.0, f64::max);
            let gap = (full.mu_hat - mu_class_max).abs();
            Some(MaxRelation {
                covering_classes: parts.iter().map(|e| e.class_tag.clone()).collect(),
                mu_full: full.mu_hat,
                mu_class_max,
                gap,
                tolerance: MAX_RELATION_TOLERANCE,
                holds: gap <= MAX_RELATION_TOLERANCE,
                theta_gap,
            })
        }
    };

    Ok(ClassReport {
        flow: FlowDescriptor::of(flow),
        horizons: config.horizons.clone(),
        n: config.n,
        seed: config.seed,
        step: config.step,
        classes,
        max_relation,
    })
}
