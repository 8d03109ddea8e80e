//! Analytic steady Euler flows on the 2π-periodic torus.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};
use serde::Serialize;

use crate::error::{FluidexError, Result};

pub type Point = Vector3<f64>;
pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

pub const TWO_PI: f64 = 2.0 * PI;
pub const DEFAULT_SUPPORT_TOL: f64 = 1e-10;

/// Reduces an angle to [0, 2π).
pub fn wrap(a: f64) -> f64 {
    let r = a.rem_euclid(TWO_PI);
    if r >= TWO_PI {
        0.0
    } else {
        r
    }
}

/// Minimal-image representative of a displacement, in [−π, π).
pub fn wrap_signed(a: f64) -> f64 {
    wrap(a + PI) - PI
}

/// Support of a field as declared by a catalog entry.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Support {
    Empty,
    Whole,
    /// Closed band `lo ≤ x[axis] ≤ hi` (taken mod 2π).
    Band { axis: usize, lo: f64, hi: f64 },
}

impl Support {
    pub fn contains(&self, x: &Point) -> bool {
        match self {
            Support::Empty => false,
            Support::Whole => true,
            Support::Band { axis, lo, hi } => {
                let width = hi - lo;
                let rel = wrap(x[*axis] - lo);
                rel <= width || rel >= TWO_PI - 1e-14
            }
        }
    }

    pub fn is_proper(&self) -> bool {
        !matches!(self, Support::Whole)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Field {
    Omega,
    GradOmega,
}

#[derive(Clone, Debug, PartialEq)]
enum Kind {
    Constant(Vec3),
    Shear,
    Cellular,
    Abc { a: f64, b: f64, c: f64 },
    BumpShear { amplitude: f64, center: f64, half_width: f64 },
}

/// Vorticity value: scalar in 2D, vector in 3D.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Vorticity {
    Scalar(f64),
    Vector(Vec3),
}

impl Vorticity {
    pub fn norm(&self) -> f64 {
        match self {
            Vorticity::Scalar(s) => s.abs(),
            Vorticity::Vector(v) => v.norm(),
        }
    }

    /// Embeds the value as a 3-vector; a 2D scalar becomes its z-component.
    pub fn as_vector(&self) -> Vec3 {
        match self {
            Vorticity::Scalar(s) => Vec3::new(0.0, 0.0, *s),
            Vorticity::Vector(v) => *v,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SteadyFlow {
    name: String,
    dim: usize,
    kind: Kind,
    planar_lift: bool,
    params: BTreeMap<String, f64>,
    perturbation: Option<Vec3>,
}

fn take_params(
    flow: &str,
    given: &BTreeMap<String, f64>,
    defaults: &[(&str, f64)],
) -> Result<BTreeMap<String, f64>> {
    for key in given.keys() {
        if !defaults.iter().any(|(k, _)| k == key) {
            let allowed: Vec<&str> = defaults.iter().map(|(k, _)| *k).collect();
            return Err(FluidexError::Config(format!(
                "flow '{flow}' has no parameter '{key}' (allowed: {})",
                if allowed.is_empty() { "none".to_string() } else { allowed.join(", ") }
            )));
        }
    }
    let mut out = BTreeMap::new();
    for (k, d) in defaults {
        let v = given.get(*k).copied().unwrap_or(*d);
        if !v.is_finite() {
            return Err(FluidexError::Config(format!("parameter '{k}' of flow '{flow}' is not finite")));
        }
        out.insert((*k).to_string(), v);
    }
    Ok(out)
}

/// Quartic-power bump profile `A (1 − y²)⁴` and its first derivative in x₂.
fn bump_profile(amplitude: f64, center: f64, half_width: f64, x2: f64) -> (f64, f64) {
    let y = wrap_signed(x2 - center) / half_width;
    if y.abs() >= 1.0 {
        return (0.0, 0.0);
    }
    let s = 1.0 - y * y;
    let f = amplitude * s.powi(4);
    let df = amplitude * 4.0 * s.powi(3) * (-2.0 * y) / half_width;
    (f, df)
}

impl SteadyFlow {
    /// Names accepted by [`SteadyFlow::from_name`].
    pub const NAMES: [&'static str; 8] = [
        "constant",
        "shear",
        "cellular",
        "abc",
        "bump_shear",
        "lift_constant",
        "lift_shear",
        "lift_cellular",
    ];

    pub fn from_name(name: &str, params: &BTreeMap<String, f64>) -> Result<Self> {
        if let Some(base) = name.strip_prefix("lift_") {
            if !matches!(base, "constant" | "shear" | "cellular") {
                return Err(FluidexError::Config(format!(
                    "unknown flow '{name}': only 2D flows can be lifted"
                )));
            }
            return Ok(Self::from_name(base, params)?.lift());
        }
        let (dim, kind, params) = match name {
            "constant" => {
                let p = take_params(name, params, &[("c1", 1.0), ("c2", 2.0), ("c3", 0.0)])?;
                let c = Vec3::new(p["c1"], p["c2"], p["c3"]);
                let dim = if p["c3"] == 0.0 && !params.contains_key("c3") { 2 } else { 3 };
                (dim, Kind::Constant(c), p)
            }
            "shear" => (2, Kind::Shear, take_params(name, params, &[])?),
            "cellular" => (2, Kind::Cellular, take_params(name, params, &[])?),
            "abc" => {
                let p = take_params(name, params, &[("a", 1.0), ("b", 1.0), ("c", 1.0)])?;
                (3, Kind::Abc { a: p["a"], b: p["b"], c: p["c"] }, p)
            }
            "bump_shear" => {
                let p = take_params(
                    name,
                    params,
                    &[("amplitude", 1.0), ("center", PI), ("half_width", 1.0)],
                )?;
                if !(p["half_width"] > 0.0 && p["half_width"] < PI) {
                    return Err(FluidexError::Config(
                        "bump_shear half_width must lie in (0, π)".into(),
                    ));
                }
                let kind = Kind::BumpShear {
                    amplitude: p["amplitude"],
                    center: p["center"],
                    half_width: p["half_width"],
                };
                (3, kind, p)
            }
            _ => {
                return Err(FluidexError::Config(format!(
                    "unknown flow '{name}' (known: {})",
                    Self::NAMES.join(", ")
                )))
            }
        };
        Ok(SteadyFlow {
            name: name.to_string(),
            dim,
            kind,
            planar_lift: false,
            params,
            perturbation: None,
        })
    }

    pub fn constant(c: &[f64]) -> Self {
        let mut p = BTreeMap::new();
        for (i, v) in c.iter().enumerate() {
            p.insert(format!("c{}", i + 1), *v);
        }
        let mut f = Self::from_name("constant", &p).expect("constant flow parameters");
        f.dim = c.len();
        f
    }

    pub fn cellular() -> Self {
        Self::from_name("cellular", &BTreeMap::new()).unwrap()
    }

    pub fn shear() -> Self {
        Self::from_name("shear", &BTreeMap::new()).unwrap()
    }

    pub fn abc(a: f64, b: f64, c: f64) -> Self {
        let p = BTreeMap::from([("a".to_string(), a), ("b".to_string(), b), ("c".to_string(), c)]);
        Self::from_name("abc", &p).unwrap()
    }

    pub fn bump_shear(amplitude: f64, center: f64, half_width: f64) -> Result<Self> {
        let p = BTreeMap::from([
            ("amplitude".to_string(), amplitude),
            ("center".to_string(), center),
            ("half_width".to_string(), half_width),
        ]);
        Self::from_name("bump_shear", &p)
    }

    /// Embeds a 2D flow in T³ with zero third velocity component.
    pub fn lift(&self) -> Self {
        let mut out = self.clone();
        if self.dim == 2 {
            out.dim = 3;
            out.planar_lift = true;
            out.name = format!("lift_{}", self.name);
        }
        out
    }

    /// Adds a small non-solenoidal defect `eps·(sin x₁, sin x₂, sin x₃)`.
    /// Only useful for exercising residual checks.
    pub fn with_compressible_defect(&self, eps: f64) -> Self {
        let mut out = self.clone();
        out.perturbation = Some(Vec3::repeat(eps));
        out.name = format!("{}+defect", self.name);
        out
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn params(&self) -> &BTreeMap<String, f64> {
        &self.params
    }

    pub fn is_planar_lift(&self) -> bool {
        self.planar_lift
    }

    /// True when the vorticity is scalar-like (2D or planar lift).
    pub fn is_planar(&self) -> bool {
        self.dim == 2 || self.planar_lift
    }

    fn check(&self, x: &Point) -> Result<()> {
        if x.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(FluidexError::Domain(format!("non-finite point {:?}", x.as_slice())))
        }
    }

    pub fn velocity(&self, x: &Point) -> Vec3 {
        let mut u = match &self.kind {
            Kind::Constant(c) => *c,
            Kind::Shear => Vec3::new(x[1].sin(), 0.0, 0.0),
            Kind::Cellular => {
                let (s1, c1) = x[0].sin_cos();
                let (s2, c2) = x[1].sin_cos();
                Vec3::new(s1 * c2, -c1 * s2, 0.0)
            }
            Kind::Abc { a, b, c } => {
                let (s1, c1) = x[0].sin_cos();
                let (s2, c2) = x[1].sin_cos();
                let (s3, c3) = x[2].sin_cos();
                Vec3::new(a * s3 + c * c2, b * s1 + a * c3, c * s2 + b * c1)
            }
            Kind::BumpShear { amplitude, center, half_width } => {
                Vec3::new(bump_profile(*amplitude, *center, *half_width, x[1]).0, 0.0, 0.0)
            }
        };
        if self.dim == 2 {
            u[2] = 0.0;
        }
        if let Some(eps) = self.perturbation {
            for i in 0..self.dim {
                u[i] += eps[i] * x[i].sin();
            }
        }
        u
    }

    /// Checked velocity evaluation.
    pub fn try_velocity(&self, x: &Point) -> Result<Vec3> {
        self.check(x)?;
        Ok(self.velocity(x))
    }

    /// `J[(i, j)] = ∂u_i/∂x_j`.
    pub fn jacobian(&self, x: &Point) -> Mat3 {
        let mut j = match &self.kind {
            Kind::Constant(_) => Mat3::zeros(),
            Kind::Shear => {
                let mut m = Mat3::zeros();
                m[(0, 1)] = x[1].cos();
                m
            }
            Kind::Cellular => {
                let (s1, c1) = x[0].sin_cos();
                let (s2, c2) = x[1].sin_cos();
                Mat3::new(c1 * c2, -s1 * s2, 0.0, s1 * s2, -c1 * c2, 0.0, 0.0, 0.0, 0.0)
            }
            Kind::Abc { a, b, c } => {
                let (s1, c1) = x[0].sin_cos();
                let (s2, c2) = x[1].sin_cos();
                let (s3, c3) = x[2].sin_cos();
                Mat3::new(
                    0.0,
                    -c * s2,
                    a * c3,
                    b * c1,
                    0.0,
                    -a * s3,
                    -b * s1,
                    c * c2,
                    0.0,
                )
            }
            Kind::BumpShear { amplitude, center, half_width } => {
                let mut m = Mat3::zeros();
                m[(0, 1)] = bump_profile(*amplitude, *center, *half_width, x[1]).1;
                m
            }
        };
        if let Some(eps) = self.perturbation {
            for i in 0..self.dim {
                j[(i, i)] += eps[i] * x[i].cos();
            }
        }
        j
    }

    pub fn try_jacobian(&self, x: &Point) -> Result<Mat3> {
        self.check(x)?;
        Ok(self.jacobian(x))
    }

    /// The n×n block of the Jacobian that is meaningful for this dimension.
    pub fn jacobian_block(&self, x: &Point) -> nalgebra::DMatrix<f64> {
        let j = self.jacobian(x);
        nalgebra::DMatrix::from_fn(self.dim, self.dim, |r, c| j[(r, c)])
    }

    pub fn vorticity(&self, x: &Point) -> Vorticity {
        let j = self.jacobian(x);
        let z = j[(1, 0)] - j[(0, 1)];
        if self.dim == 2 {
            Vorticity::Scalar(z)
        } else {
            Vorticity::Vector(Vec3::new(j[(2, 1)] - j[(1, 2)], j[(0, 2)] - j[(2, 0)], z))
        }
    }

    /// Vorticity as a 3-vector (2D scalar in the z slot).
    pub fn vorticity_vector(&self, x: &Point) -> Vec3 {
        self.vorticity(x).as_vector()
    }

    /// Gradient of the scalar vorticity; available for 2D flows and planar lifts.
    pub fn vorticity_gradient(&self, x: &Point) -> Result<Vec3> {
        if !self.is_planar() {
            return Err(FluidexError::UnsupportedOperation(format!(
                "vorticity_gradient needs a 2D flow or planar lift; '{}' is genuinely 3D",
                self.name
            )));
        }
        self.check(x)?;
        let g = match &self.kind {
            Kind::Constant(_) => Vec3::zeros(),
            Kind::Shear => Vec3::new(0.0, x[1].sin(), 0.0),
            Kind::Cellular => {
                let (s1, c1) = x[0].sin_cos();
                let (s2, c2) = x[1].sin_cos();
                Vec3::new(2.0 * c1 * s2, 2.0 * s1 * c2, 0.0)
            }
            Kind::Abc { .. } | Kind::BumpShear { .. } => unreachable!("3D kinds are never planar"),
        };
        Ok(g)
    }

    /// Declared support of ω or ∇ω; `None` means "use the threshold test".
    pub fn declared_support(&self, which: Field) -> Option<Support> {
        match (&self.kind, which) {
            (Kind::Constant(_), _) => Some(Support::Empty),
            (Kind::Shear | Kind::Cellular | Kind::Abc { .. }, _) => Some(Support::Whole),
            (Kind::BumpShear { center, half_width, .. }, Field::Omega) => Some(Support::Band {
                axis: 1,
                lo: center - half_width,
                hi: center + half_width,
            }),
            (Kind::BumpShear { .. }, Field::GradOmega) => None,
        }
    }

    pub fn in_support(&self, x: &Point, which: Field, tol: f64) -> Result<bool> {
        self.check(x)?;
        let magnitude = match which {
            Field::Omega => self.vorticity(x).norm(),
            Field::GradOmega => self.vorticity_gradient(x)?.norm(),
        };
        if magnitude > tol {
            return Ok(true);
        }
        Ok(self.declared_support(which).map(|s| s.contains(x)).unwrap_or(false))
    }

    /// Hyperbolic stagnation points declared by the catalog entry.
    pub fn stagnation_points(&self) -> Vec<Point> {
        match self.kind {
            Kind::Cellular => vec![
                Point::new(0.0, 0.0, 0.0),
                Point::new(PI, 0.0, 0.0),
                Point::new(0.0, PI, 0.0),
                Point::new(PI, PI, 0.0),
            ],
            _ => Vec::new(),
        }
    }

    /// RK4 flow map `g^t(x0)`; negative `t` runs the reversed field.
    pub fn flow_map(&self, x0: &Point, t: f64, step: f64) -> Result<Point> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(FluidexError::Config(format!("step must be positive, got {step}")));
        }
        self.check(x0)?;
        let mut x = *x0;
        if t != 0.0 {
            let n = ((t.abs() / step) - 1e-9).ceil().max(1.0) as usize;
            let h = t / n as f64;
            for i in 0..n {
                let k1 = self.velocity(&x);
                let k2 = self.velocity(&(x + k1 * (h / 2.0)));
                let k3 = self.velocity(&(x + k2 * (h / 2.0)));
                let k4 = self.velocity(&(x + k3 * h));
                x += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
                if !x.iter().all(|v| v.is_finite()) {
                    return Err(FluidexError::NumericalBlowup {
                        time: (i + 1) as f64 * h,
                        context: format!("flow map from {:?}", x0.as_slice()),
                    });
                }
            }
        }
        for i in 0..self.dim {
            x[i] = wrap(x[i]);
        }
        Ok(x)
    }
}

/// One row of the flow catalog.
#[derive(Clone, Debug, Serialize)]
pub struct CatalogEntry {
    pub name: String,
    pub dim: usize,
    pub formula: &'static str,
    pub params: BTreeMap<String, f64>,
    pub omega_support: String,
    pub stagnation_points: usize,
}

fn describe_support(s: Option<Support>) -> String {
    match s {
        None => "threshold".into(),
        Some(Support::Empty) => "empty".into(),
        Some(Support::Whole) => "whole".into(),
        Some(Support::Band { axis, lo, hi }) => format!("band x{} in [{lo:.6}, {hi:.6}]", axis + 1),
    }
}

pub fn catalog() -> Vec<CatalogEntry> {
    let formulas = [
        "u = c",
        "u = (sin x2, 0)",
        "u = (sin x1 cos x2, -cos x1 sin x2)",
        "u = (a sin x3 + c cos x2, b sin x1 + a cos x3, c sin x2 + b cos x1)",
        "u = (f(x2), 0, 0), f = amplitude (1 - y^2)^4, y = (x2 - center)/half_width",
        "u = (c1, c2, 0)",
        "u = (sin x2, 0, 0)",
        "u = (sin x1 cos x2, -cos x1 sin x2, 0)",
    ];
    SteadyFlow::NAMES
        .iter()
        .zip(formulas)
        .map(|(name, formula)| {
            let f = SteadyFlow::from_name(name, &BTreeMap::new()).expect("catalog defaults");
            CatalogEntry {
                name: name.to_string(),
                dim: f.dim(),
                formula,
                params: f.params().clone(),
                omega_support: describe_support(f.declared_support(Field::Omega)),
                stagnation_points: f.stagnation_points().len(),
            }
        })
        .collect()
}
