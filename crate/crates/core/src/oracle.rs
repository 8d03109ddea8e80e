//! Pseudospectral linearized Euler in vorticity form, `∂_t q = −u·∇q − w·∇ω`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::bas::{integrate_to_times, BasState};
use crate::error::{FluidexError, Result};
use crate::flow::{Point, SteadyFlow, Vec3};
use crate::spectral::fft::fft_nd;
use crate::spectral::field::{grid_points, FourierField};
use crate::spectral::packet::{bump, make_wavepacket, Envelope, PacketKind, PacketSpec};
use crate::spectral::project::{divergence_ratio, SOLENOIDAL_TOL};

/// Scalar perturbation vorticity plus the (conserved) mean velocity.
#[derive(Clone, Debug, PartialEq)]
pub struct PerturbationState {
    pub q: FourierField,
    pub mean: [Complex64; 2],
    pub t: f64,
}

/// `q̂ = i k₁ ŵ₂ − i k₂ ŵ₁`.
pub fn vorticity_of(w: &FourierField) -> Result<FourierField> {
    if w.dim() != 2 || w.ncomp() != 2 {
        return Err(FluidexError::Config("expected a 2D vector field".into()));
    }
    let mut q = FourierField::zeros(2, w.resolution(), 1)?;
    for idx in 0..w.len() {
        let k = w.wavevector(idx);
        let i = Complex64::new(0.0, 1.0);
        q.component_mut(0)[idx] = i * (k[0] as f64) * w.component(1)[idx] - i * (k[1] as f64) * w.component(0)[idx];
    }
    Ok(q)
}

/// `ŵ = −i k^⊥ q̂ / |k|²` with `k^⊥ = (−k₂, k₁)`, plus the given mean.
pub fn biot_savart(q: &FourierField, mean: [Complex64; 2]) -> Result<FourierField> {
    let mut w = FourierField::zeros(2, q.resolution(), 2)?;
    for idx in 0..q.len() {
        let k = q.wavevector(idx);
        let k2 = (k[0] * k[0] + k[1] * k[1]) as f64;
        if k2 == 0.0 {
            w.component_mut(0)[idx] = mean[0];
            w.component_mut(1)[idx] = mean[1];
            continue;
        }
        let s = Complex64::new(0.0, -1.0) * q.component(0)[idx] / k2;
        w.component_mut(0)[idx] = s * -(k[1] as f64);
        w.component_mut(1)[idx] = s * k[0] as f64;
    }
    Ok(w)
}

impl PerturbationState {
    pub fn velocity(&self) -> Result<FourierField> {
        biot_savart(&self.q, self.mean)
    }

    pub fn norm(&self) -> Result<f64> {
        Ok(self.velocity()?.norm_l2())
    }
}

struct Solver {
    n: usize,
    kx: Vec<f64>,
    ky: Vec<f64>,
    keep: Vec<bool>,
    u: [Vec<f64>; 2],
    grad_omega: [Vec<f64>; 2],
    mean: [Complex64; 2],
}

impl Solver {
    fn new(flow: &SteadyFlow, n: usize, mean: [Complex64; 2]) -> Result<Self> {
        let proto = FourierField::zeros(2, n, 1)?;
        let cut = (n / 3) as i64;
        let (mut kx, mut ky, mut keep) = (Vec::new(), Vec::new(), Vec::new());
        for idx in 0..proto.len() {
            let k = proto.wavevector(idx);
            kx.push(k[0] as f64);
            ky.push(k[1] as f64);
            keep.push(k[0].abs() <= cut && k[1].abs() <= cut && (k[0], k[1]) != (0, 0));
        }
        let pts = grid_points(2, n);
        let mut u = [vec![0.0; pts.len()], vec![0.0; pts.len()]];
        let mut g = [vec![0.0; pts.len()], vec![0.0; pts.len()]];
        for (j, x) in pts.iter().enumerate() {
            let v = flow.velocity(x);
            let d = flow.vorticity_gradient(x)?;
            u[0][j] = v[0];
            u[1][j] = v[1];
            g[0][j] = d[0];
            g[1][j] = d[1];
        }
        Ok(Solver { n, kx, ky, keep, u, grad_omega: g, mean })
    }

    fn rhs(&self, q: &[Complex64]) -> Vec<Complex64> {
        let n = self.n;
        let len = q.len();
        let i = Complex64::new(0.0, 1.0);
        let mut qx = vec![Complex64::default(); len];
        let mut qy = vec![Complex64::default(); len];
        let mut w1 = vec![Complex64::default(); len];
        let mut w2 = vec![Complex64::default(); len];
        for idx in 0..len {
            let (a, b) = (self.kx[idx], self.ky[idx]);
            let k2 = a * a + b * b;
            qx[idx] = i * a * q[idx];
            qy[idx] = i * b * q[idx];
            if k2 > 0.0 {
                let s = -i * q[idx] / k2;
                w1[idx] = s * -b;
                w2[idx] = s * a;
            }
        }
        w1[0] = self.mean[0];
        w2[0] = self.mean[1];
        for buf in [&mut qx, &mut qy, &mut w1, &mut w2] {
            fft_nd(buf, n, 2, true);
        }
        let mut r: Vec<Complex64> = (0..len)
            .map(|j| {
                -(qx[j] * self.u[0][j] + qy[j] * self.u[1][j])
                    - (w1[j] * self.grad_omega[0][j] + w2[j] * self.grad_omega[1][j])
            })
            .collect();
        fft_nd(&mut r, n, 2, false);
        let scale = 1.0 / len as f64;
        for (idx, v) in r.iter_mut().enumerate() {
            *v = if self.keep[idx] { *v * scale } else { Complex64::default() };
        }
        r
    }

    fn rk4(&self, q: &mut [Complex64], h: f64) {
        let add = |a: &[Complex64], k: &[Complex64], f: f64| -> Vec<Complex64> {
            a.iter().zip(k).map(|(x, y)| x + y * f).collect()
        };
        let k1 = self.rhs(q);
        let k2 = self.rhs(&add(q, &k1, h / 2.0));
        let k3 = self.rhs(&add(q, &k2, h / 2.0));
        let k4 = self.rhs(&add(q, &k3, h));
        for j in 0..q.len() {
            q[j] += (k1[j] + k2[j] * 2.0 + k3[j] * 2.0 + k4[j]) * (h / 6.0);
        }
    }
}

/// Advective stability limit `0.5·(2π/N)/max|u|` on the N-grid.
pub fn stability_limit(flow: &SteadyFlow, n: usize) -> f64 {
    let umax = grid_points(2, n).iter().map(|x| flow.velocity(x).norm()).fold(0.0, f64::max);
    if umax == 0.0 {
        f64::INFINITY
    } else {
        0.5 * (2.0 * PI / n as f64) / umax
    }
}

/// Evolves `w0` and records the state at each time in `times`.
pub fn evolve_linearized_series(
    flow: &SteadyFlow,
    w0: &FourierField,
    times: &[f64],
    n: usize,
    dt: f64,
) -> Result<Vec<PerturbationState>> {
    if flow.dim() != 2 {
        return Err(FluidexError::Config(format!(
            "the linearized solver needs a 2D flow; '{}' is {}D",
            flow.name(),
            flow.dim()
        )));
    }
    if w0.dim() != 2 || w0.ncomp() != 2 {
        return Err(FluidexError::Config("initial perturbation must be a 2D vector field".into()));
    }
    let ratio = divergence_ratio(w0);
    if ratio > SOLENOIDAL_TOL {
        return Err(FluidexError::ContractViolation(format!(
            "initial perturbation is not solenoidal (relative divergence {ratio:.3e})"
        )));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(FluidexError::Config(format!("dt must be positive, got {dt}")));
    }
    let limit = stability_limit(flow, n);
    if dt > limit {
        return Err(FluidexError::Config(format!(
            "dt = {dt} exceeds the advective stability limit {limit:.6} for N = {n}"
        )));
    }
    let w0 = if w0.resolution() == n { w0.clone() } else { w0.resample(n)? };
    let mean = [w0.coeff(0, [0, 0, 0]), w0.coeff(1, [0, 0, 0])];
    let solver = Solver::new(flow, n, mean)?;
    let q0 = vorticity_of(&w0)?;
    let mut q = q0.component(0).to_vec();
    let mut t = 0.0;
    let mut out = Vec::with_capacity(times.len());
    for &target in times {
        if !(target >= t) {
            return Err(FluidexError::Config(format!("times must be non-decreasing, got {target} after {t}")));
        }
        let span = target - t;
        if span > 0.0 {
            let steps = ((span / dt) - 1e-9).ceil().max(1.0) as usize;
            let h = span / steps as f64;
            for s in 0..steps {
                solver.rk4(&mut q, h);
                if !q.iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
                    return Err(FluidexError::NumericalBlowup {
                        time: t + (s + 1) as f64 * h,
                        context: "linearized Euler coefficients".into(),
                    });
                }
            }
        }
        t = target;
        let mut qf = FourierField::zeros(2, n, 1)?;
        qf.component_mut(0).copy_from_slice(&q);
        out.push(PerturbationState { q: qf, mean, t });
    }
    Ok(out)
}

pub fn evolve_linearized(
    flow: &SteadyFlow,
    w0: &FourierField,
    t_final: f64,
    n: usize,
    dt: f64,
) -> Result<PerturbationState> {
    Ok(evolve_linearized_series(flow, w0, &[t_final], n, dt)?.remove(0))
}

fn packet_check(spec: &PacketSpec) -> Result<()> {
    if spec.kind != PacketKind::Phi2d {
        return Err(FluidexError::Config("transport predictions use 2D phi packets".into()));
    }
    Ok(())
}

/// Grid synthesis of `h_ζ(g^{−t}x) b(g^{−t}x, ξ₀, ξ₀^⊥; t) e^{i g^{−t}x·ξ₀/δ}`.
pub fn predicted_wavepacket(
    flow: &SteadyFlow,
    spec: &PacketSpec,
    t: f64,
    n: usize,
    step: f64,
) -> Result<FourierField> {
    packet_check(spec)?;
    spec.validate(n)?;
    if !(t >= 0.0) {
        return Err(FluidexError::Config(format!("t must be >= 0, got {t}")));
    }
    let xi = spec.xi0;
    let b0 = Vec3::new(-xi[1], xi[0], 0.0);
    let pts = grid_points(2, n);
    let vals: Vec<[Complex64; 2]> = pts
        .par_iter()
        .map(|x| -> Result<[Complex64; 2]> {
            let y = flow.flow_map(x, -t, step)?;
            let h = spec.envelope_at(&y);
            if h == 0.0 {
                return Ok([Complex64::default(); 2]);
            }
            let s = integrate_to_times(flow, BasState::from_vectors(y, xi, b0)?, &[t], step)?[0];
            let b = s.b();
            let e = Complex64::from_polar(h, spec.phase_at(&y));
            Ok([e * b[0], e * b[1]])
        })
        .collect::<Result<Vec<_>>>()?;
    let grid = vec![vals.iter().map(|v| v[0]).collect(), vals.iter().map(|v| v[1]).collect()];
    FourierField::from_grid(2, n, grid)
}

/// `(∫ h_ζ(y)² |b(y, ξ₀, ξ₀^⊥; t)|² dy)^{1/2}` at each time, by tensor quadrature
/// over the envelope's support; the flow map preserves volume.
pub fn predicted_norms(
    flow: &SteadyFlow,
    spec: &PacketSpec,
    times: &[f64],
    step: f64,
    quad: usize,
) -> Result<Vec<f64>> {
    packet_check(spec)?;
    let xi = spec.xi0;
    let b0 = Vec3::new(-xi[1], xi[0], 0.0);
    let (reach, area) = match spec.envelope {
        Envelope::Bump => (spec.zeta, (2.0 * spec.zeta / quad as f64).powi(2)),
        Envelope::Global => (PI, (2.0 * PI / quad as f64).powi(2)),
    };
    let h = 2.0 * reach / quad as f64;
    let nodes: Vec<Point> = (0..quad * quad)
        .map(|i| {
            let (a, b) = (i / quad, i % quad);
            spec.x0 + Vec3::new(-reach + (a as f64 + 0.5) * h, -reach + (b as f64 + 0.5) * h, 0.0)
        })
        .filter(|y| spec.envelope_at(y) > 0.0)
        .collect();
    let rows: Vec<Vec<f64>> = nodes
        .par_iter()
        .map(|y| -> Result<Vec<f64>> {
            let hy = spec.envelope_at(y);
            let states = integrate_to_times(flow, BasState::from_vectors(*y, xi, b0)?, times, step)?;
            Ok(states.iter().map(|s| hy * hy * (2.0 * s.beta).exp()).collect())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((0..times.len())
        .map(|k| (rows.iter().map(|r| r[k]).sum::<f64>() * area).sqrt())
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GrowthRow {
    pub t: f64,
    pub oracle_norm: f64,
    pub predicted_norm: f64,
    pub relative_gap: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GrowthComparison {
    pub delta: f64,
    pub zeta: f64,
    pub resolution: usize,
    pub dt: f64,
    pub rows: Vec<GrowthRow>,
    pub max_gap: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct ComparisonSettings {
    pub resolution: usize,
    pub dt: f64,
    pub step: f64,
    pub quadrature_points: usize,
}

impl Default for ComparisonSettings {
    fn default() -> Self {
        ComparisonSettings { resolution: 256, dt: 0.005, step: 1e-3, quadrature_points: 64 }
    }
}

/// Packet on the stable line `x₁ = 0` of the cellular flow with `ξ₀ ∥ ∇ω(x₀)`.
///
/// Starting below `x₂ = π/2` keeps the carrier from growing along the line, so
/// `δ = 1/64` stays resolved at `N = 256` up to `t = 3`.
pub fn stable_line_packet(delta: f64) -> PacketSpec {
    PacketSpec {
        kind: PacketKind::Phi2d,
        envelope: Envelope::Bump,
        x0: Point::new(0.0, 1.2, 0.0),
        zeta: 0.8,
        delta,
        xi0: Vec3::new(1.0, 0.0, 0.0),
        p: Vec3::zeros(),
    }
}

/// Oracle norm `‖G(t)φ_{ζ,δ}‖` against the transported-packet prediction.
pub fn compare_growth(
    flow: &SteadyFlow,
    spec: &PacketSpec,
    t_grid: &[f64],
    settings: &ComparisonSettings,
) -> Result<GrowthComparison> {
    packet_check(spec)?;
    let w0 = make_wavepacket(spec, settings.resolution)?;
    let states = evolve_linearized_series(flow, &w0, t_grid, settings.resolution, settings.dt)?;
    let predicted = predicted_norms(flow, spec, t_grid, settings.step, settings.quadrature_points)?;
    let mut rows = Vec::with_capacity(t_grid.len());
    for (s, p) in states.iter().zip(&predicted) {
        let o = s.norm()?;
        rows.push(GrowthRow { t: s.t, oracle_norm: o, predicted_norm: *p, relative_gap: (o - p).abs() / p });
    }
    let max_gap = rows.iter().map(|r| r.relative_gap).fold(0.0, f64::max);
    Ok(GrowthComparison {
        delta: spec.delta,
        zeta: spec.zeta,
        resolution: settings.resolution,
        dt: settings.dt,
        rows,
        max_gap,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GapTrend {
    pub comparisons: Vec<GrowthComparison>,
    /// True when the maximal gap decreases with every decrease of δ.
    pub shrinking: bool,
}

/// Runs [`compare_growth`] for each δ (in the given order).
pub fn compare_growth_trend(
    flow: &SteadyFlow,
    spec: &PacketSpec,
    deltas: &[f64],
    t_grid: &[f64],
    settings: &ComparisonSettings,
) -> Result<GapTrend> {
    let mut comparisons = Vec::new();
    for &d in deltas {
        let mut s = spec.clone();
        s.delta = d;
        comparisons.push(compare_growth(flow, &s, t_grid, settings)?);
    }
    let mut by_delta: Vec<&GrowthComparison> = comparisons.iter().collect();
    by_delta.sort_by(|a, b| b.delta.partial_cmp(&a.delta).unwrap());
    let shrinking = by_delta.windows(2).all(|w| w[1].max_gap < w[0].max_gap);
    Ok(GapTrend { comparisons, shrinking })
}

/// Envelope mass `∫ h_ζ²` on the torus, handy for normalizing predictions.
pub fn envelope_l2_squared(zeta: f64, quad: usize) -> f64 {
    let h = 2.0 / quad as f64;
    let mut s = 0.0;
    for a in 0..quad {
        for b in 0..quad {
            let y = (-1.0 + (a as f64 + 0.5) * h, -1.0 + (b as f64 + 0.5) * h);
            s += bump(y.0 * y.0 + y.1 * y.1).powi(2);
        }
    }
    s * h * h * zeta * zeta
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(v: f64) -> Complex64 {
        Complex64::new(v, 0.0)
    }

    #[test]
    fn biot_savart_inverts_curl() {
        let w = FourierField::from_fn(2, 16, 2, |x| {
            vec![c((2.0 * x[1]).sin() + 0.25), c(x[0].cos() * 3.0 - 0.5)]
        })
        .unwrap();
        let q = vorticity_of(&w).unwrap();
        let back = biot_savart(&q, [c(0.25), c(-0.5)]).unwrap();
        assert!(back.sub(&w).norm_l2() < 1e-12);
        assert!(divergence_ratio(&back) < 1e-14);
    }

    #[test]
    fn constant_flow_translates_modes() {
        let flow = SteadyFlow::constant(&[1.0, 2.0]);
        let n = 16;
        let k = [3i64, -1];
        let w0 = FourierField::from_fn(2, n, 2, |x| {
            let ph = k[0] as f64 * x[0] + k[1] as f64 * x[1];
            let e = Complex64::from_polar(1.0, ph);
            vec![e * (-(k[1] as f64)), e * k[0] as f64]
        })
        .unwrap();
        let t = 0.7;
        let s = evolve_linearized(&flow, &w0, t, n, 0.01).unwrap();
        let q0 = vorticity_of(&w0).unwrap().coeff(0, [3, -1, 0]);
        let q1 = s.q.coeff(0, [3, -1, 0]);
        assert!((q1.norm() - q0.norm()).abs() < 1e-9);
        let expected = q0 * Complex64::from_polar(1.0, -(3.0 * 1.0 - 2.0) * t);
        assert!((q1 - expected).norm() < 1e-9);
    }

    #[test]
    fn stability_bound_enforced() {
        let flow = SteadyFlow::cellular();
        let w0 = FourierField::zeros(2, 32, 2).unwrap();
        assert!(matches!(
            evolve_linearized(&flow, &w0, 1.0, 32, 0.5),
            Err(FluidexError::Config(_))
        ));
    }

    #[test]
    fn envelope_mass_matches_quadrature_limit() {
        let a = envelope_l2_squared(0.5, 64);
        let b = envelope_l2_squared(0.5, 128);
        assert!((a - b).abs() < 1e-8 * b);
    }
}
