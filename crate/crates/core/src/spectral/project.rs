use num_complex::Complex64;
use serde::Serialize;

use super::field::FourierField;
use crate::error::{FluidexError, Result};
use crate::flow::SteadyFlow;

/// Per-mode Leray projector `I − kkᵀ/|k|²`; the mean is kept.
pub fn helmholtz_project(v: &FourierField) -> FourierField {
    assert_eq!(v.ncomp(), v.dim(), "helmholtz_project needs a vector field");
    let d = v.dim();
    let mut out = v.clone();
    for idx in 0..v.len() {
        let k = v.wavevector(idx);
        let k2: i64 = k.iter().map(|a| a * a).sum();
        if k2 == 0 {
            continue;
        }
        let mut dot = Complex64::default();
        for j in 0..d {
            dot += v.component(j)[idx] * k[j] as f64;
        }
        for j in 0..d {
            out.component_mut(j)[idx] -= dot * (k[j] as f64 / k2 as f64);
        }
    }
    out
}

/// `‖div v‖ / ‖∇v‖` in coefficient space (0 for a constant field).
pub fn divergence_ratio(v: &FourierField) -> f64 {
    let d = v.dim();
    let (mut num, mut den) = (0.0, 0.0);
    for idx in 0..v.len() {
        let k = v.wavevector(idx);
        let mut dot = Complex64::default();
        for j in 0..d {
            dot += v.component(j)[idx] * k[j] as f64;
            den += (k[j] * k[j]) as f64 * (0..d).map(|c| v.component(c)[idx].norm_sqr()).sum::<f64>();
        }
        num += dot.norm_sqr();
    }
    if den == 0.0 {
        0.0
    } else {
        (num / den).sqrt()
    }
}

pub const SOLENOIDAL_TOL: f64 = 1e-8;

fn require_solenoidal(v: &FourierField) -> Result<()> {
    let r = divergence_ratio(v);
    if r > SOLENOIDAL_TOL {
        return Err(FluidexError::ContractViolation(format!(
            "input field is not solenoidal: relative divergence {r:.3e} exceeds {SOLENOIDAL_TOL:.0e}"
        )));
    }
    Ok(())
}

/// `B v = P_sol(ω × v)` (3D) or `P_sol(ω v^⊥)` (2D), with `v^⊥ = (−v₂, v₁)`.
pub fn apply_b(flow: &SteadyFlow, v: &FourierField) -> Result<FourierField> {
    if v.ncomp() != v.dim() || v.dim() != flow.dim() {
        return Err(FluidexError::Config(format!(
            "field of dim {} with {} components does not match {}D flow '{}'",
            v.dim(),
            v.ncomp(),
            flow.dim(),
            flow.name()
        )));
    }
    require_solenoidal(v)?;
    apply_b_unchecked(flow, v)
}

/// `P_sol(ω × v)` for any vector field `v`, solenoidal or not.
pub fn apply_b_unchecked(flow: &SteadyFlow, v: &FourierField) -> Result<FourierField> {
    let grid = v.to_grid();
    let pts = v.grid_points();
    let d = v.dim();
    let mut prod = vec![vec![Complex64::default(); pts.len()]; d];
    for (j, x) in pts.iter().enumerate() {
        let w = flow.vorticity_vector(x);
        if d == 2 {
            prod[0][j] = -grid[1][j] * w[2];
            prod[1][j] = grid[0][j] * w[2];
        } else {
            let (a, b, c) = (grid[0][j], grid[1][j], grid[2][j]);
            prod[0][j] = b * w[2] - c * w[1];
            prod[1][j] = c * w[0] - a * w[2];
            prod[2][j] = a * w[1] - b * w[0];
        }
    }
    let mut f = FourierField::from_grid(d, v.resolution(), prod)?;
    f.dealias();
    Ok(helmholtz_project(&f))
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct SteadyEulerResidual {
    pub resolution: usize,
    pub div_residual: f64,
    pub euler_residual: f64,
}

/// Spectral max-norms of `div u` and `P_sol(u·∇u)` on an N-grid.
pub fn verify_steady_euler(flow: &SteadyFlow, n: usize) -> Result<SteadyEulerResidual> {
    if n < 32 || !n.is_power_of_two() {
        return Err(FluidexError::Config(format!(
            "grid resolution must be a power of two >= 32, got {n}"
        )));
    }
    let d = flow.dim();
    let u = FourierField::from_fn(d, n, d, |x| {
        let v = flow.velocity(x);
        (0..d).map(|i| Complex64::new(v[i], 0.0)).collect()
    })?;
    let div_residual = u.divergence()?.max_abs_on_grid();
    let ugrid = u.to_grid();
    let mut adv = vec![vec![Complex64::default(); u.len()]; d];
    for i in 0..d {
        let mut comp = FourierField::zeros(d, n, 1)?;
        comp.component_mut(0).copy_from_slice(u.component(i));
        let g = comp.gradient()?.to_grid();
        for (j, a) in adv[i].iter_mut().enumerate() {
            *a = (0..d).map(|m| ugrid[m][j] * g[m][j]).sum();
        }
    }
    let adv = FourierField::from_grid(d, n, adv)?;
    let euler_residual = helmholtz_project(&adv).max_abs_on_grid();
    Ok(SteadyEulerResidual { resolution: n, div_residual, euler_residual })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(v: f64) -> Complex64 {
        Complex64::new(v, 0.0)
    }

    #[test]
    fn projection_examples() {
        let grad = FourierField::from_fn(2, 16, 2, |x| vec![c(x[0].cos()), c(0.0)]).unwrap();
        assert!(helmholtz_project(&grad).norm_l2() < 1e-13);
        let sol = FourierField::from_fn(2, 16, 2, |x| vec![c(0.0), c(x[0].cos())]).unwrap();
        assert!(helmholtz_project(&sol).sub(&sol).norm_l2() < 1e-12);
        let mix = FourierField::from_fn(2, 16, 2, |x| vec![c(x[0].cos()), c(x[0].cos())]).unwrap();
        assert!(helmholtz_project(&mix).sub(&sol).norm_l2() < 1e-12);
    }

    #[test]
    fn steady_euler_residuals() {
        let r = verify_steady_euler(&SteadyFlow::cellular(), 64).unwrap();
        assert!(r.div_residual <= 1e-10 && r.euler_residual <= 1e-10, "{r:?}");
        let r = verify_steady_euler(&SteadyFlow::abc(1.0, 1.0, 1.0), 32).unwrap();
        assert!(r.div_residual <= 1e-10 && r.euler_residual <= 1e-10, "{r:?}");
        let bad = SteadyFlow::cellular().with_compressible_defect(1e-3);
        assert!(verify_steady_euler(&bad, 64).unwrap().div_residual >= 1e-4);
        assert!(verify_steady_euler(&SteadyFlow::cellular(), 48).is_err());
    }

    #[test]
    fn b_rejects_compressible_input() {
        let grad = FourierField::from_fn(2, 16, 2, |x| vec![c(x[0].cos()), c(0.0)]).unwrap();
        assert!(matches!(
            apply_b(&SteadyFlow::cellular(), &grad),
            Err(FluidexError::ContractViolation(_))
        ));
    }

    #[test]
    fn b_vanishes_on_constant_flow() {
        let v = FourierField::from_fn(2, 16, 2, |x| vec![c(0.0), c(x[0].cos())]).unwrap();
        assert_eq!(apply_b(&SteadyFlow::constant(&[1.0, 2.0]), &v).unwrap().norm_l2(), 0.0);
    }
}
