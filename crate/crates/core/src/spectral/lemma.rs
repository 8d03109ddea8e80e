//! Residual experiments for the wave-packet lemmas.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::Matrix2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::field::FourierField;
use super::fit::{slope_fit, SlopeFit};
use super::operator::{build_b_matrix, factor_norm, OperatorMatrix, DEFAULT_KERNEL_CUTOFF};
use super::packet::{bump, displacement, make_wavepacket, Envelope, PacketKind, PacketSpec};
use super::project::{apply_b, apply_b_unchecked};
use crate::error::{FluidexError, Result};
use crate::flow::{Point, SteadyFlow, Vec3};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LemmaKind {
    Solproj,
    Inimage3d,
    Image2d,
    Kernel2d,
}

impl std::str::FromStr for LemmaKind {
    type Err = FluidexError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "solproj" => Ok(LemmaKind::Solproj),
            "inimage3d" => Ok(LemmaKind::Inimage3d),
            "image2d" => Ok(LemmaKind::Image2d),
            "kernel2d" => Ok(LemmaKind::Kernel2d),
            _ => Err(FluidexError::Config(format!(
                "unknown lemma '{s}' (expected solproj, inimage3d, image2d or kernel2d)"
            ))),
        }
    }
}

fn orthonormal_complement(xi: &Vec3) -> (Vec3, Vec3) {
    let n = xi.normalize();
    let mut axis = 0;
    for j in 1..3 {
        if n[j].abs() < n[axis].abs() {
            axis = j;
        }
    }
    let e1 = n.cross(&Vec3::ith(axis, 1.0)).normalize();
    let e2 = n.cross(&e1);
    (e1, e2)
}

/// `P_{ξ^⊥} a = a − ξ⟨ξ, a⟩/|ξ|²` applied to a complex vector.
fn project_perp(xi: &[f64; 3], a: &[Complex64; 3]) -> [Complex64; 3] {
    let xx: f64 = xi.iter().map(|v| v * v).sum();
    if xx == 0.0 {
        return *a;
    }
    let dot: Complex64 = (0..3).map(|j| a[j] * xi[j]).sum();
    [a[0] - dot * (xi[0] / xx), a[1] - dot * (xi[1] / xx), a[2] - dot * (xi[2] / xx)]
}

/// `‖P_sol(v e^{ix·ξ₀/δ}) − P_{ξ₀^⊥}(v) e^{ix·ξ₀/δ}‖`, computed mode by mode.
///
/// `ξ₀/δ` must be a lattice vector. No grid is involved, so δ is not
/// limited by the resolution of `v`.
pub fn solproj_residual(v: &FourierField, xi0: &Vec3, delta: f64) -> Result<f64> {
    let d = v.dim();
    if v.ncomp() != d {
        return Err(FluidexError::Config("solproj needs a vector field".into()));
    }
    if !(delta > 0.0) || xi0.norm() == 0.0 {
        return Err(FluidexError::Config("solproj needs delta > 0 and xi0 != 0".into()));
    }
    let mut m = [0i64; 3];
    for j in 0..d {
        let s = xi0[j] / delta;
        if (s - s.round()).abs() > 1e-9 {
            return Err(FluidexError::Config(format!("xi0/delta = {s} is not an integer")));
        }
        m[j] = s.round() as i64;
    }
    let xi = [xi0[0], xi0[1], if d == 3 { xi0[2] } else { 0.0 }];
    let mut sum = 0.0;
    for idx in 0..v.len() {
        let k = v.wavevector(idx);
        let mut a = [Complex64::default(); 3];
        for j in 0..d {
            a[j] = v.component(j)[idx];
        }
        if a.iter().all(|z| *z == Complex64::default()) {
            continue;
        }
        let shifted = [(k[0] + m[0]) as f64, (k[1] + m[1]) as f64, (k[2] + m[2]) as f64];
        let p1 = project_perp(&shifted, &a);
        let p2 = project_perp(&xi, &a);
        sum += (0..3).map(|j| (p1[j] - p2[j]).norm_sqr()).sum::<f64>();
    }
    Ok((sum * (2.0 * PI).powi(d as i32)).sqrt())
}

/// `‖v‖_{H¹}` from coefficients.
pub fn h1_norm(v: &FourierField) -> f64 {
    let mut s = 0.0;
    for idx in 0..v.len() {
        let k = v.wavevector(idx);
        let k2: i64 = k.iter().map(|a| a * a).sum();
        let e: f64 = (0..v.ncomp()).map(|c| v.component(c)[idx].norm_sqr()).sum();
        s += (1.0 + k2 as f64) * e;
    }
    (s * (2.0 * PI).powi(v.dim() as i32)).sqrt()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InImageResult {
    pub q: [f64; 3],
    pub condition_number: f64,
    pub r_zeta: f64,
    /// Spectral remainder; `None` when the carrier does not fit the grid.
    pub r_delta: Option<f64>,
}

/// Solves `P = P_{ξ₀^⊥}(ω(x₀) × Q)` for `Q ⊥ ξ₀`.
pub fn solve_preimage_polarization(omega0: &Vec3, xi0: &Vec3, p: &Vec3) -> Result<(Vec3, f64)> {
    let (e1, e2) = orthonormal_complement(xi0);
    let basis = [e1, e2];
    let t = Matrix2::from_fn(|a, b| basis[a].dot(&omega0.cross(&basis[b])));
    let sv = t.singular_values();
    let cond = if sv.min() == 0.0 { f64::INFINITY } else { sv.max() / sv.min() };
    if !(cond <= 1e8) {
        return Err(FluidexError::Hypothesis(format!(
            "<omega(x0), xi0> is too close to 0: the polarization system has condition number {cond:.3e}"
        )));
    }
    let rhs = nalgebra::Vector2::new(e1.dot(p), e2.dot(p));
    let q = t.lu().solve(&rhs).ok_or_else(|| {
        FluidexError::Hypothesis("polarization system is singular".into())
    })?;
    Ok((e1 * q[0] + e2 * q[1], cond))
}

/// Leading-order remainder of the 3D image construction.
///
/// `r_ζ` is integrated on a tensor midpoint grid of `quad` points per axis over
/// the ζ-ball; it does not depend on δ. `r_δ` is evaluated spectrally at
/// resolution `n` when `|ξ₀|/δ < n/3`.
#[allow(clippy::too_many_arguments)]
pub fn inimage3d_residual(
    flow: &SteadyFlow,
    x0: &Point,
    xi0: &Vec3,
    p: &Vec3,
    zeta: f64,
    delta: f64,
    n: Option<usize>,
    quad: usize,
) -> Result<InImageResult> {
    if flow.dim() != 3 {
        return Err(FluidexError::Config("inimage3d needs a 3D flow".into()));
    }
    if p.dot(xi0).abs() > 1e-12 * p.norm() * xi0.norm() || p.norm() == 0.0 {
        return Err(FluidexError::Config("P must be nonzero and orthogonal to xi0".into()));
    }
    let omega0 = flow.vorticity_vector(x0);
    if omega0.dot(xi0).abs() <= 1e-12 * omega0.norm().max(1.0) * xi0.norm() {
        return Err(FluidexError::Hypothesis("<omega(x0), xi0> = 0".into()));
    }
    let (q, condition_number) = solve_preimage_polarization(&omega0, xi0, p)?;
    let xi_n = xi0.normalize();
    let perp = |a: Vec3| a - xi_n * xi_n.dot(&a);
    let mismatch = |x: &Point| p - perp(flow.vorticity_vector(x).cross(&q));

    let quad = quad.max(4);
    let h = 2.0 / quad as f64;
    let mut sum = 0.0;
    for i in 0..quad {
        for j in 0..quad {
            for k in 0..quad {
                let y = Vec3::new(
                    -1.0 + (i as f64 + 0.5) * h,
                    -1.0 + (j as f64 + 0.5) * h,
                    -1.0 + (k as f64 + 0.5) * h,
                );
                let w = bump(y.norm_squared());
                if w == 0.0 {
                    continue;
                }
                sum += w * w * mismatch(&(x0 + y * zeta)).norm_squared();
            }
        }
    }
    let r_zeta = (sum * h.powi(3) * zeta.powi(3)).sqrt();

    let spec = PacketSpec {
        kind: PacketKind::Psi3d,
        envelope: Envelope::Bump,
        x0: *x0,
        zeta,
        delta,
        xi0: *xi0,
        p: *p,
    };
    let r_delta = match n {
        Some(n) if spec.carrier() < n as f64 / 3.0 => {
            let psi = make_wavepacket(&spec, n)?;
            let carrier = |x: &Point| {
                let hz = spec.envelope_at(x);
                if hz == 0.0 {
                    Complex64::default()
                } else {
                    Complex64::from_polar(hz, spec.phase_at(x))
                }
            };
            let pre = FourierField::from_fn(3, n, 3, |x| {
                let e = carrier(x);
                (0..3).map(|j| e * q[j]).collect()
            })?;
            let bpre = apply_b_unchecked(flow, &pre)?;
            let rz = FourierField::from_fn(3, n, 3, |x| {
                let e = carrier(x);
                let m = mismatch(x);
                (0..3).map(|j| e * m[j]).collect()
            })?;
            Some(psi.sub(&bpre).sub(&rz).norm_l2())
        }
        _ => None,
    };
    Ok(InImageResult { q: [q[0], q[1], q[2]], condition_number, r_zeta, r_delta })
}

/// `‖φ_δ − B(∇^⊥(g₀ e^{ix·ξ₀/δ}))‖` with `g₀ = |ξ₀|² h_ζ / ⟨ξ₀^⊥, ∇ω⟩`.
pub fn image2d_residual(flow: &SteadyFlow, spec: &PacketSpec, n: usize, c0: f64) -> Result<f64> {
    if flow.dim() != 2 || spec.kind != PacketKind::Phi2d {
        return Err(FluidexError::Config("image2d needs a 2D flow and a phi2d packet".into()));
    }
    spec.validate(n)?;
    let xi_perp = Vec3::new(-spec.xi0[1], spec.xi0[0], 0.0);
    let xx = spec.xi0.norm_squared();
    let mut min_den = f64::INFINITY;
    for x in crate::spectral::field::grid_points(2, n) {
        if spec.envelope_at(&x) > 0.0 {
            min_den = min_den.min(xi_perp.dot(&flow.vorticity_gradient(&x)?).abs());
        }
    }
    if !(min_den > c0) {
        return Err(FluidexError::Hypothesis(format!(
            "|<xi0_perp, grad omega>| falls to {min_den:.3e} <= {c0:.3e} on the envelope support"
        )));
    }
    let g = FourierField::from_fn(2, n, 1, |x| {
        let hz = spec.envelope_at(x);
        if hz == 0.0 {
            return vec![Complex64::default()];
        }
        let den = xi_perp.dot(&flow.vorticity_gradient(x).expect("planar flow"));
        vec![Complex64::from_polar(xx * hz / den, spec.phase_at(x))]
    })?;
    let mut v = FourierField::zeros(2, n, 2)?;
    for idx in 0..g.len() {
        let k = g.wavevector(idx);
        let gk = g.component(0)[idx] * Complex64::new(0.0, 1.0);
        v.component_mut(0)[idx] = gk * -(k[1] as f64);
        v.component_mut(1)[idx] = gk * k[0] as f64;
    }
    let bv = apply_b(flow, &v)?;
    let phi = make_wavepacket(spec, n)?;
    Ok(phi.sub(&bv).norm_l2())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Kernel2dResult {
    pub packet_norm: f64,
    pub factor_norm: f64,
    pub discrepancy: f64,
    pub discarded_fraction: f64,
    pub kernel_rank: usize,
    pub basis_len: usize,
}

/// Checks `∇ω(x₀) ≠ 0` and `⟨ξ₀^⊥, ∇ω(x₀)⟩ = 0`.
pub fn check_kernel2d_hypothesis(flow: &SteadyFlow, x0: &Point, xi0: &Vec3) -> Result<()> {
    let g = flow.vorticity_gradient(x0)?;
    if g.norm() <= 1e-12 {
        return Err(FluidexError::Hypothesis("grad omega(x0) = 0".into()));
    }
    let xi_perp = Vec3::new(-xi0[1], xi0[0], 0.0);
    if xi_perp.dot(&g).abs() > 1e-9 * g.norm() * xi0.norm() {
        return Err(FluidexError::Hypothesis(
            "<xi0_perp, grad omega(x0)> != 0 (xi0 must be parallel to grad omega)".into(),
        ));
    }
    Ok(())
}

/// `|‖φ_{ζ,δ}‖_F − ‖φ_{ζ,δ}‖|` with the factor norm taken through `op`.
pub fn kernel2d_discrepancy(
    flow: &SteadyFlow,
    spec: &PacketSpec,
    n: usize,
    op: &OperatorMatrix,
) -> Result<Kernel2dResult> {
    if flow.dim() != 2 || spec.kind != PacketKind::Phi2d {
        return Err(FluidexError::Config("kernel2d needs a 2D flow and a phi2d packet".into()));
    }
    check_kernel2d_hypothesis(flow, &spec.x0, &spec.xi0)?;
    let phi = make_wavepacket(spec, n)?;
    let fnorm = factor_norm(&phi, op)?;
    let packet_norm = phi.norm_l2();
    Ok(Kernel2dResult {
        packet_norm,
        factor_norm: fnorm.value,
        discrepancy: (fnorm.value - packet_norm).abs(),
        discarded_fraction: fnorm.discarded_fraction,
        kernel_rank: op.kernel_rank(),
        basis_len: op.len(),
    })
}

/// Inputs for [`lemma_residual`]. Fields not used by a lemma are ignored.
#[derive(Clone, Debug)]
pub struct LemmaParams {
    pub x0: Point,
    pub xi0: Vec3,
    pub p: Vec3,
    pub zeta: f64,
    pub delta: f64,
    pub resolution: usize,
    pub truncation: usize,
    pub cutoff: f64,
    pub quadrature_points: usize,
    pub c0: f64,
    /// Field `v` for solproj; defaults to the flow velocity.
    pub field: Option<FourierField>,
}

impl Default for LemmaParams {
    fn default() -> Self {
        LemmaParams {
            x0: Point::zeros(),
            xi0: Vec3::new(1.0, 0.0, 0.0),
            p: Vec3::new(0.0, 1.0, 0.0),
            zeta: 0.5,
            delta: 1.0 / 16.0,
            resolution: 128,
            truncation: 16,
            cutoff: DEFAULT_KERNEL_CUTOFF,
            quadrature_points: 40,
            c0: 1e-6,
            field: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LemmaRecord {
    pub kind: LemmaKind,
    pub flow: String,
    pub parameters: BTreeMap<String, f64>,
    pub norms: BTreeMap<String, f64>,
}

pub fn lemma_residual(kind: LemmaKind, flow: &SteadyFlow, params: &LemmaParams) -> Result<LemmaRecord> {
    lemma_residual_with(kind, flow, params, None)
}

fn lemma_residual_with(
    kind: LemmaKind,
    flow: &SteadyFlow,
    params: &LemmaParams,
    op: Option<&OperatorMatrix>,
) -> Result<LemmaRecord> {
    let mut parameters = BTreeMap::new();
    let mut norms = BTreeMap::new();
    parameters.insert("delta".to_string(), params.delta);
    let d = flow.dim();
    for j in 0..d {
        parameters.insert(format!("xi0_{}", j + 1), params.xi0[j]);
    }
    let packet = |k: PacketKind| PacketSpec {
        kind: k,
        envelope: Envelope::Bump,
        x0: params.x0,
        zeta: params.zeta,
        delta: params.delta,
        xi0: params.xi0,
        p: params.p,
    };
    match kind {
        LemmaKind::Solproj => {
            let v = match &params.field {
                Some(v) => v.clone(),
                None => FourierField::from_fn(d, params.resolution, d, |x| {
                    let u = flow.velocity(x);
                    (0..d).map(|j| Complex64::new(u[j], 0.0)).collect()
                })?,
            };
            norms.insert("residual".into(), solproj_residual(&v, &params.xi0, params.delta)?);
            norms.insert("field_h1".into(), h1_norm(&v));
        }
        LemmaKind::Inimage3d => {
            parameters.insert("zeta".into(), params.zeta);
            let r = inimage3d_residual(
                flow,
                &params.x0,
                &params.xi0,
                &params.p,
                params.zeta,
                params.delta,
                Some(params.resolution),
                params.quadrature_points,
            )?;
            norms.insert("r_zeta".into(), r.r_zeta);
            if let Some(rd) = r.r_delta {
                norms.insert("r_delta".into(), rd);
            }
            norms.insert("condition_number".into(), r.condition_number);
        }
        LemmaKind::Image2d => {
            parameters.insert("zeta".into(), params.zeta);
            let r = image2d_residual(flow, &packet(PacketKind::Phi2d), params.resolution, params.c0)?;
            norms.insert("residual".into(), r);
        }
        LemmaKind::Kernel2d => {
            parameters.insert("zeta".into(), params.zeta);
            parameters.insert("truncation".into(), params.truncation as f64);
            let built;
            let op = match op {
                Some(op) => op,
                None => {
                    built = build_b_matrix(flow, params.truncation, params.cutoff)?;
                    &built
                }
            };
            let r = kernel2d_discrepancy(flow, &packet(PacketKind::Phi2d), params.resolution, op)?;
            norms.insert("discrepancy".into(), r.discrepancy);
            norms.insert("factor_norm".into(), r.factor_norm);
            norms.insert("packet_norm".into(), r.packet_norm);
            norms.insert("discarded_fraction".into(), r.discarded_fraction);
        }
    }
    parameters.insert("resolution".into(), params.resolution as f64);
    for j in 0..d {
        parameters.insert(format!("x0_{}", j + 1), params.x0[j]);
    }
    Ok(LemmaRecord { kind, flow: flow.name().to_string(), parameters, norms })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    Delta,
    Zeta,
}

impl std::str::FromStr for SweepVariable {
    type Err = FluidexError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "delta" => Ok(SweepVariable::Delta),
            "zeta" => Ok(SweepVariable::Zeta),
            _ => Err(FluidexError::Config(format!("unknown sweep variable '{s}' (expected delta or zeta)"))),
        }
    }
}

/// Norm whose scaling a lemma predicts.
pub fn scaling_norm(kind: LemmaKind, variable: SweepVariable) -> &'static str {
    match (kind, variable) {
        (LemmaKind::Inimage3d, SweepVariable::Zeta) => "r_zeta",
        (LemmaKind::Inimage3d, SweepVariable::Delta) => "r_delta",
        (LemmaKind::Kernel2d, _) => "discrepancy",
        _ => "residual",
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScalingReport {
    pub kind: LemmaKind,
    pub variable: SweepVariable,
    pub norm: String,
    pub points: Vec<(f64, f64)>,
    /// `None` when fewer than three positive points are available.
    pub fit: Option<SlopeFit>,
    pub records: Vec<LemmaRecord>,
}

/// Evaluates [`lemma_residual`] along `values` of one parameter and fits the
/// log-log slope. The kernel2d operator is built once for the sweep.
pub fn lemma_scaling(
    kind: LemmaKind,
    flow: &SteadyFlow,
    base: &LemmaParams,
    variable: SweepVariable,
    values: &[f64],
) -> Result<ScalingReport> {
    let op = match kind {
        LemmaKind::Kernel2d => Some(build_b_matrix(flow, base.truncation, base.cutoff)?),
        _ => None,
    };
    let norm = scaling_norm(kind, variable);
    let mut records = Vec::with_capacity(values.len());
    let mut points = Vec::with_capacity(values.len());
    for &v in values {
        let mut p = base.clone();
        match variable {
            SweepVariable::Delta => p.delta = v,
            SweepVariable::Zeta => p.zeta = v,
        }
        let rec = lemma_residual_with(kind, flow, &p, op.as_ref())?;
        if let Some(&y) = rec.norms.get(norm) {
            points.push((v, y));
        }
        records.push(rec);
    }
    let fit = slope_fit(&points).ok();
    Ok(ScalingReport { kind, variable, norm: norm.to_string(), points, fit, records })
}

/// Slope bounds a sweep is expected to satisfy.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SlopeRange {
    pub min: f64,
    pub max: Option<f64>,
}

impl SlopeRange {
    pub fn contains(&self, slope: f64) -> bool {
        slope >= self.min && self.max.is_none_or(|m| slope <= m)
    }
}

/// A ready-made scaling experiment.
#[derive(Clone, Debug)]
pub struct SweepPreset {
    pub kind: LemmaKind,
    pub flow: &'static str,
    pub params: LemmaParams,
    pub variable: SweepVariable,
    pub values: Vec<f64>,
    pub expected: SlopeRange,
}

/// The standard sweeps: solproj in δ, inimage3d in ζ, image2d in δ and
/// kernel2d in ζ and in δ separately.
pub fn sweep_presets() -> Result<Vec<SweepPreset>> {
    let field = FourierField::from_fn(2, 16, 2, |x| {
        vec![Complex64::new(x[1].cos(), 0.0), Complex64::new(x[0].cos(), 0.0)]
    })?;
    let kernel = LemmaParams {
        x0: Point::new(PI / 4.0, PI / 2.0, 0.0),
        resolution: 256,
        truncation: 32,
        ..LemmaParams::default()
    };
    Ok(vec![
        SweepPreset {
            kind: LemmaKind::Solproj,
            flow: "cellular",
            params: LemmaParams { field: Some(field), resolution: 16, ..LemmaParams::default() },
            variable: SweepVariable::Delta,
            values: vec![1.0 / 8.0, 1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0, 1.0 / 128.0],
            expected: SlopeRange { min: 0.85, max: Some(1.15) },
        },
        SweepPreset {
            kind: LemmaKind::Inimage3d,
            flow: "abc",
            params: LemmaParams {
                x0: Point::new(0.3, 0.7, 1.1),
                delta: 1.0 / 8.0,
                resolution: 64,
                ..LemmaParams::default()
            },
            variable: SweepVariable::Zeta,
            values: vec![0.05, 0.1, 0.2, 0.4],
            expected: SlopeRange { min: 2.2, max: Some(2.8) },
        },
        SweepPreset {
            kind: LemmaKind::Image2d,
            flow: "cellular",
            params: LemmaParams {
                x0: Point::new(PI / 2.0, 0.0, 0.0),
                zeta: 1.0,
                resolution: 256,
                ..LemmaParams::default()
            },
            variable: SweepVariable::Delta,
            values: vec![1.0 / 4.0, 1.0 / 8.0, 1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0],
            expected: SlopeRange { min: 0.85, max: Some(1.15) },
        },
        SweepPreset {
            kind: LemmaKind::Kernel2d,
            flow: "cellular",
            params: LemmaParams { delta: 1.0 / 16.0, ..kernel.clone() },
            variable: SweepVariable::Zeta,
            values: vec![0.4, 0.5, 0.6, 0.7, 0.8],
            expected: SlopeRange { min: 0.8, max: None },
        },
        SweepPreset {
            kind: LemmaKind::Kernel2d,
            flow: "cellular",
            params: LemmaParams { zeta: 0.4, ..kernel },
            variable: SweepVariable::Delta,
            values: vec![1.0 / 4.0, 1.0 / 6.0, 1.0 / 8.0, 1.0 / 12.0, 1.0 / 16.0],
            expected: SlopeRange { min: 0.8, max: None },
        },
    ])
}

/// Minimal-image distance helper for callers placing packets.
pub fn torus_distance(dim: usize, a: &Point, b: &Point) -> f64 {
    displacement(dim, a, b).norm()
}
