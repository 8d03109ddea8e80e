//! Renormalized bicharacteristic amplitude system.
//!
//! With `ξ = e^ρ η` and `b = e^β c` the system reads
//! `ẋ = u`, `η̇ = −Jᵀη + ⟨Jᵀη, η⟩η`, `ρ̇ = −⟨Jᵀη, η⟩`,
//! `ċ = F − ⟨F, c⟩c`, `β̇ = ⟨F, c⟩` with `F = −Jc + 2⟨Jc, η⟩η/|η|²`.
//! The state lives in R¹¹; the substitution is exact off the unit spheres
//! too, so re-unitizing after a step only moves drift into ρ and β.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{FluidexError, Result};
use crate::flow::{wrap, Mat3, Point, SteadyFlow, Vec3};

pub const DEFAULT_STEP: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassTag {
    Full,
    Star3,
    F3,
    Star2,
    F2Complement,
    F2Aligned,
}

impl ClassTag {
    pub const ALL: [ClassTag; 6] = [
        ClassTag::Full,
        ClassTag::Star3,
        ClassTag::F3,
        ClassTag::Star2,
        ClassTag::F2Complement,
        ClassTag::F2Aligned,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ClassTag::Full => "full",
            ClassTag::Star3 => "star3",
            ClassTag::F3 => "f3",
            ClassTag::Star2 => "star2",
            ClassTag::F2Complement => "f2_complement",
            ClassTag::F2Aligned => "f2_aligned",
        }
    }

    /// Spatial dimension the class applies to; `None` for `full`.
    pub fn required_dim(&self) -> Option<usize> {
        match self {
            ClassTag::Full => None,
            ClassTag::Star3 | ClassTag::F3 => Some(3),
            ClassTag::Star2 | ClassTag::F2Complement | ClassTag::F2Aligned => Some(2),
        }
    }
}

impl std::fmt::Display for ClassTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ClassTag {
    type Err = FluidexError;
    fn from_str(s: &str) -> Result<Self> {
        ClassTag::ALL
            .iter()
            .find(|c| c.as_str() == s)
            .copied()
            .ok_or_else(|| FluidexError::Config(format!("unknown class '{s}'")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AdmissibleSample {
    pub x0: Point,
    pub xi0: Vec3,
    pub b0: Vec3,
    pub class_tag: ClassTag,
}

impl AdmissibleSample {
    pub fn new(x0: Point, xi0: Vec3, b0: Vec3, class_tag: ClassTag) -> Self {
        AdmissibleSample { x0, xi0, b0, class_tag }
    }

    /// Unit lengths and orthogonality within `tol`.
    pub fn is_admissible(&self, tol: f64) -> bool {
        (self.xi0.norm() - 1.0).abs() <= tol
            && (self.b0.norm() - 1.0).abs() <= tol
            && self.xi0.dot(&self.b0).abs() <= tol
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BasState {
    pub x: Point,
    pub eta: Vec3,
    pub rho: f64,
    pub c: Vec3,
    pub beta: f64,
    pub t: f64,
}

/// Time derivative of the renormalized variables.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BasDerivative {
    pub x: Vec3,
    pub eta: Vec3,
    pub rho: f64,
    pub c: Vec3,
    pub beta: f64,
}

impl BasState {
    /// State for arbitrary nonzero `ξ` and `b`; magnitudes go into `ρ`, `β`.
    pub fn from_vectors(x: Point, xi: Vec3, b: Vec3) -> Result<Self> {
        let (nx, nb) = (xi.norm(), b.norm());
        if !(nx > 0.0 && nb > 0.0 && nx.is_finite() && nb.is_finite()) {
            return Err(FluidexError::Config("xi and b must be finite and nonzero".into()));
        }
        Ok(BasState { x, eta: xi / nx, rho: nx.ln(), c: b / nb, beta: nb.ln(), t: 0.0 })
    }

    pub fn from_sample(s: &AdmissibleSample) -> Result<Self> {
        Self::from_vectors(s.x0, s.xi0, s.b0)
    }

    pub fn xi(&self) -> Vec3 {
        self.eta * self.rho.exp()
    }

    pub fn b(&self) -> Vec3 {
        self.c * self.beta.exp()
    }

    fn pack(&self) -> [f64; 11] {
        [
            self.x[0], self.x[1], self.x[2], self.eta[0], self.eta[1], self.eta[2], self.rho,
            self.c[0], self.c[1], self.c[2], self.beta,
        ]
    }

    fn unpack(v: &[f64; 11], t: f64) -> Self {
        BasState {
            x: Point::new(v[0], v[1], v[2]),
            eta: Vec3::new(v[3], v[4], v[5]),
            rho: v[6],
            c: Vec3::new(v[7], v[8], v[9]),
            beta: v[10],
            t,
        }
    }

    fn is_finite(&self) -> bool {
        self.pack().iter().all(|v| v.is_finite())
    }

    fn renormalize(&mut self) {
        let ne = self.eta.norm();
        self.eta /= ne;
        self.rho += ne.ln();
        let nc = self.c.norm();
        self.c /= nc;
        self.beta += nc.ln();
    }
}

fn rhs_parts(u: Vec3, j: &Mat3, eta: &Vec3, c: &Vec3) -> BasDerivative {
    let jt_eta = j.transpose() * eta;
    let ee = eta.norm_squared();
    let a = jt_eta.dot(eta) / ee;
    let jc = j * c;
    let f = -jc + eta * (2.0 * jc.dot(eta) / ee);
    let cc = c.norm_squared();
    let fc = f.dot(c) / cc;
    BasDerivative { x: u, eta: -jt_eta + eta * a, rho: -a, c: f - c * fc, beta: fc }
}

pub fn bas_rhs(flow: &SteadyFlow, state: &BasState) -> BasDerivative {
    rhs_parts(flow.velocity(&state.x), &flow.jacobian(&state.x), &state.eta, &state.c)
}

fn rhs_vec(flow: &SteadyFlow, v: &[f64; 11]) -> [f64; 11] {
    let s = BasState::unpack(v, 0.0);
    let d = bas_rhs(flow, &s);
    [
        d.x[0], d.x[1], d.x[2], d.eta[0], d.eta[1], d.eta[2], d.rho, d.c[0], d.c[1], d.c[2], d.beta,
    ]
}

fn rk4_step(flow: &SteadyFlow, s: &BasState, h: f64) -> BasState {
    let y = s.pack();
    let add = |a: &[f64; 11], k: &[f64; 11], f: f64| -> [f64; 11] {
        let mut o = *a;
        for i in 0..11 {
            o[i] += f * k[i];
        }
        o
    };
    let k1 = rhs_vec(flow, &y);
    let k2 = rhs_vec(flow, &add(&y, &k1, h / 2.0));
    let k3 = rhs_vec(flow, &add(&y, &k2, h / 2.0));
    let k4 = rhs_vec(flow, &add(&y, &k3, h));
    let mut o = y;
    for i in 0..11 {
        o[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    let mut out = BasState::unpack(&o, s.t + h);
    for i in 0..3 {
        out.x[i] = wrap(out.x[i]);
    }
    out.renormalize();
    out
}

fn check_step(step: f64) -> Result<()> {
    if step > 0.0 && step.is_finite() {
        Ok(())
    } else {
        Err(FluidexError::Config(format!("step must be positive, got {step}")))
    }
}

/// Integrates from `state` and records the state at every time in `times`.
///
/// Each interval between consecutive record times is split into equal steps
/// no longer than `step`.
pub fn integrate_to_times(
    flow: &SteadyFlow,
    state: BasState,
    times: &[f64],
    step: f64,
) -> Result<Vec<BasState>> {
    check_step(step)?;
    let mut out = Vec::with_capacity(times.len());
    let mut s = state;
    for &target in times {
        if !(target >= s.t) || !target.is_finite() {
            return Err(FluidexError::Config(format!(
                "record times must be finite and non-decreasing from {}, got {target}",
                s.t
            )));
        }
        let span = target - s.t;
        if span > 0.0 {
            let n = ((span / step) - 1e-9).ceil().max(1.0) as usize;
            let h = span / n as f64;
            let t0 = s.t;
            for i in 0..n {
                s = rk4_step(flow, &s, h);
                s.t = t0 + (i + 1) as f64 * h;
                if !s.is_finite() {
                    return Err(FluidexError::NumericalBlowup {
                        time: s.t,
                        context: format!("BAS integration from x0 = {:?}", state.x.as_slice()),
                    });
                }
            }
            s.t = target;
        }
        out.push(s);
    }
    Ok(out)
}

/// Final state at `t_final`.
pub fn integrate_bas(
    flow: &SteadyFlow,
    sample: &AdmissibleSample,
    t_final: f64,
    step: f64,
) -> Result<BasState> {
    if !(t_final >= 0.0) {
        return Err(FluidexError::Config(format!("t_final must be >= 0, got {t_final}")));
    }
    Ok(integrate_to_times(flow, BasState::from_sample(sample)?, &[t_final], step)?[0])
}

/// States at `t = 0, every·step, 2·every·step, …, t_final`.
pub fn integrate_bas_trajectory(
    flow: &SteadyFlow,
    sample: &AdmissibleSample,
    t_final: f64,
    step: f64,
    every: usize,
) -> Result<Vec<BasState>> {
    check_step(step)?;
    if !(t_final >= 0.0) {
        return Err(FluidexError::Config(format!("t_final must be >= 0, got {t_final}")));
    }
    let every = every.max(1);
    let n = ((t_final / step) - 1e-9).ceil().max(0.0) as usize;
    let h = if n == 0 { 0.0 } else { t_final / n as f64 };
    let mut times: Vec<f64> = (0..=n).step_by(every).map(|i| i as f64 * h).collect();
    if *times.last().unwrap() < t_final {
        times.push(t_final);
    }
    integrate_to_times(flow, BasState::from_sample(sample)?, &times, step)
}

/// Orthonormal basis of `ξ^⊥` within the flow's dimension.
pub fn orthonormal_complement(dim: usize, xi: &Vec3) -> Vec<Vec3> {
    let n = xi.normalize();
    if dim == 2 {
        return vec![Vec3::new(-n[1], n[0], 0.0)];
    }
    let mut axis = 0;
    for j in 1..3 {
        if n[j].abs() < n[axis].abs() {
            axis = j;
        }
    }
    let e1 = n.cross(&Vec3::ith(axis, 1.0)).normalize();
    vec![e1, n.cross(&e1)]
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TransportMatrix {
    pub dim: usize,
    pub a0: Mat3,
    pub x0: Point,
    pub xi0: Vec3,
    pub t: f64,
    /// Base point `g^t x0` and direction `ξ(t)/|ξ(t)|` at the end of the interval.
    pub x_t: Point,
    pub eta_t: Vec3,
}

impl TransportMatrix {
    pub fn block(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.dim, self.dim, |r, c| self.a0[(r, c)])
    }

    pub fn apply(&self, b0: &Vec3) -> Vec3 {
        self.a0 * b0
    }
}

/// `A₀(x0, ξ0, t)` assembled column by column from b-solutions.
pub fn transport_matrix(
    flow: &SteadyFlow,
    x0: &Point,
    xi0: &Vec3,
    t: f64,
    step: f64,
) -> Result<TransportMatrix> {
    check_step(step)?;
    if !(t >= 0.0) {
        return Err(FluidexError::Config(format!("t must be >= 0, got {t}")));
    }
    let dim = flow.dim();
    if xi0.norm() == 0.0 {
        return Err(FluidexError::Config("xi0 must be nonzero".into()));
    }
    let basis = orthonormal_complement(dim, xi0);
    let mut a0 = Mat3::zeros();
    let mut end = None;
    for e in &basis {
        let s = integrate_to_times(flow, BasState::from_vectors(*x0, *xi0, *e)?, &[t], step)?[0];
        a0 += s.b() * e.transpose();
        end = Some(s);
    }
    let end = end.expect("nonempty complement");
    Ok(TransportMatrix { dim, a0, x0: *x0, xi0: *xi0, t, x_t: end.x, eta_t: end.eta })
}

/// Eigen-directions of the symmetric Jacobian at `x`, ordered by eigenvalue.
pub fn jacobian_eigenvectors(flow: &SteadyFlow, x: &Point) -> Vec<(f64, Vec3)> {
    let j = flow.jacobian_block(x);
    let sym = (&j + j.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let mut pairs: Vec<(f64, Vec3)> = (0..flow.dim())
        .map(|i| {
            let v = eig.eigenvectors.column(i);
            let mut w = Vec3::zeros();
            for r in 0..flow.dim() {
                w[r] = v[r];
            }
            (eig.eigenvalues[i], w.normalize())
        })
        .collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    pairs
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::Point;

    fn e(i: usize) -> Vec3 {
        Vec3::ith(i, 1.0)
    }

    #[test]
    fn rhs_constant_and_stagnation() {
        let c = SteadyFlow::constant(&[1.0, 2.0]);
        let s = BasState::from_vectors(Point::new(0.3, 0.2, 0.0), e(0), e(1)).unwrap();
        let d = bas_rhs(&c, &s);
        assert_eq!(d.x, Vec3::new(1.0, 2.0, 0.0));
        assert_eq!((d.eta, d.rho, d.c, d.beta), (Vec3::zeros(), 0.0, Vec3::zeros(), 0.0));
        let cell = SteadyFlow::cellular();
        let s = BasState::from_vectors(Point::zeros(), e(0), e(1)).unwrap();
        let d = bas_rhs(&cell, &s);
        assert_eq!((d.rho, d.beta), (-1.0, 1.0));
        assert_eq!((d.eta, d.c, d.x), (Vec3::zeros(), Vec3::zeros(), Vec3::zeros()));
    }

    #[test]
    fn stagnation_growth_is_exact() {
        let s = AdmissibleSample::new(Point::zeros(), e(0), e(1), ClassTag::Star2);
        let end = integrate_bas(&SteadyFlow::cellular(), &s, 10.0, 1e-3).unwrap();
        assert!((end.beta - 10.0).abs() <= 1e-6 * 10.0);
        assert!((end.rho + 10.0).abs() <= 1e-6 * 10.0);
    }

    #[test]
    fn constant_flow_does_not_evolve_amplitude() {
        let s = AdmissibleSample::new(Point::new(1.0, 1.0, 0.0), e(0), e(1), ClassTag::Full);
        let end = integrate_bas(&SteadyFlow::constant(&[1.0, 2.0]), &s, 5.0, 1e-2).unwrap();
        assert_eq!(end.beta, 0.0);
        assert!((end.c - e(1)).norm() < 1e-15);
    }

    #[test]
    fn shear_closed_forms() {
        // ξ0 = e2, b0 = e1: b stays e1.
        let shear = SteadyFlow::shear();
        let s = AdmissibleSample::new(Point::zeros(), e(1), e(0), ClassTag::Star2);
        let end = integrate_bas(&shear, &s, 10.0, 1e-3).unwrap();
        assert!(end.beta.abs() < 1e-12);
        // ξ0 = e1, b0 = e2: ξ = (1, −t), b = (t, 1)/(1 + t²).
        let s = AdmissibleSample::new(Point::zeros(), e(0), e(1), ClassTag::Star2);
        let end = integrate_bas(&shear, &s, 10.0, 1e-3).unwrap();
        let expected = -0.5 * (1.0f64 + 100.0).ln();
        assert!((end.beta - expected).abs() < 1e-5, "{} vs {expected}", end.beta);
        assert!((end.rho - 0.5 * 101f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn transport_matrix_initial_projector() {
        let xi = Vec3::new(0.6, 0.8, 0.0);
        let m = transport_matrix(&SteadyFlow::cellular(), &Point::new(0.1, 0.2, 0.0), &xi, 0.0, 1e-3)
            .unwrap();
        let proj = Mat3::identity() - xi * xi.transpose();
        let mut p2 = proj;
        p2[(2, 2)] = 0.0;
        assert!((m.a0 - p2).norm() < 1e-14);
        let c = transport_matrix(&SteadyFlow::constant(&[1.0, 2.0]), &Point::zeros(), &xi, 3.0, 1e-2)
            .unwrap();
        assert!((c.a0 - p2).norm() < 1e-14);
    }

    #[test]
    fn class_tags_roundtrip() {
        for c in ClassTag::ALL {
            assert_eq!(c.as_str().parse::<ClassTag>().unwrap(), c);
        }
        assert!("f2".parse::<ClassTag>().is_err());
    }

    #[test]
    fn stagnation_eigenvectors() {
        let pairs = jacobian_eigenvectors(&SteadyFlow::cellular(), &Point::zeros());
        assert_eq!(pairs.len(), 2);
        assert!((pairs[0].0 + 1.0).abs() < 1e-15 && (pairs[1].0 - 1.0).abs() < 1e-15);
        assert!((pairs[0].1.dot(&e(1)).abs() - 1.0).abs() < 1e-15);
    }
}
