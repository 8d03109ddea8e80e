use std::f64::consts::PI;

use faer::complex_native::c64;
use faer::{Mat, Side};
use num_complex::Complex64;
use serde::Serialize;

use super::field::FourierField;
use crate::error::{FluidexError, Result};
use crate::flow::{SteadyFlow, Vec3};

pub const DEFAULT_KERNEL_CUTOFF: f64 = 1e-8;
pub const TRUNCATION_WARN_FRACTION: f64 = 1e-6;

/// One orthonormal basis field `p e^{ik·x} / (2π)^{d/2}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BasisMode {
    pub k: [i64; 3],
    pub polarization: [f64; 3],
}

/// Galerkin matrix of B on the solenoidal modes with `|k| ≤ K` plus the mean modes.
#[derive(Clone, Debug)]
pub struct OperatorMatrix {
    pub dim: usize,
    pub truncation: usize,
    pub cutoff: f64,
    pub basis: Vec<BasisMode>,
    matrix: Mat<c64>,
    /// Orthonormal columns spanning the numerical kernel.
    kernel: Mat<c64>,
    /// Singular values in decreasing order.
    pub singular_values: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FactorNorm {
    pub value: f64,
    /// Fraction of the input's energy outside the truncated basis.
    pub discarded_fraction: f64,
}

fn to_c(z: Complex64) -> c64 {
    c64::new(z.re, z.im)
}

fn from_c(z: c64) -> Complex64 {
    Complex64::new(z.re, z.im)
}

fn polarizations(dim: usize, k: [i64; 3]) -> Vec<[f64; 3]> {
    let kv = Vec3::new(k[0] as f64, k[1] as f64, k[2] as f64);
    if dim == 2 {
        let n = kv.norm();
        return vec![[-kv[1] / n, kv[0] / n, 0.0]];
    }
    let mut axis = 0;
    for j in 1..3 {
        if kv[j].abs() < kv[axis].abs() {
            axis = j;
        }
    }
    let p1 = kv.cross(&Vec3::ith(axis, 1.0)).normalize();
    let p2 = kv.cross(&p1).normalize();
    vec![[p1[0], p1[1], p1[2]], [p2[0], p2[1], p2[2]]]
}

fn solenoidal_basis(dim: usize, truncation: usize) -> Vec<BasisMode> {
    let mut basis: Vec<BasisMode> = (0..dim)
        .map(|j| {
            let mut p = [0.0; 3];
            p[j] = 1.0;
            BasisMode { k: [0; 3], polarization: p }
        })
        .collect();
    let kk = truncation as i64;
    let k3 = if dim == 3 { kk } else { 0 };
    for a in -kk..=kk {
        for b in -kk..=kk {
            for c in -k3..=k3 {
                let r2 = a * a + b * b + c * c;
                if r2 == 0 || r2 > kk * kk {
                    continue;
                }
                let k = [a, b, c];
                for p in polarizations(dim, k) {
                    basis.push(BasisMode { k, polarization: p });
                }
            }
        }
    }
    basis
}

fn vorticity_coefficients(flow: &SteadyFlow, truncation: usize) -> Result<FourierField> {
    let n = (4 * truncation + 4).next_power_of_two().max(32);
    let d = flow.dim();
    FourierField::from_fn(d, n, 3, |x| {
        let w = flow.vorticity_vector(x);
        vec![Complex64::new(w[0], 0.0), Complex64::new(w[1], 0.0), Complex64::new(w[2], 0.0)]
    })
}

/// Builds the matrix, its singular values and the kernel projector.
pub fn build_b_matrix(flow: &SteadyFlow, truncation: usize, cutoff: f64) -> Result<OperatorMatrix> {
    if truncation == 0 {
        return Err(FluidexError::Config("truncation K must be positive".into()));
    }
    if !(0.0..1.0).contains(&cutoff) {
        return Err(FluidexError::Config(format!("kernel cutoff must lie in [0, 1), got {cutoff}")));
    }
    let dim = flow.dim();
    let basis = solenoidal_basis(dim, truncation);
    let omega = vorticity_coefficients(flow, truncation)?;
    let m = basis.len();
    let omega_hat = |d: [i64; 3]| -> Vec3 {
        let g = |c| omega.coeff(c, d);
        Vec3::new(g(0).re, g(1).re, g(2).re)
    };
    let omega_hat_im = |d: [i64; 3]| -> Vec3 {
        let g = |c| omega.coeff(c, d);
        Vec3::new(g(0).im, g(1).im, g(2).im)
    };
    let matrix = Mat::<c64>::from_fn(m, m, |j, l| {
        let bj = &basis[j];
        let bl = &basis[l];
        let d = [bj.k[0] - bl.k[0], bj.k[1] - bl.k[1], bj.k[2] - bl.k[2]];
        let pj = Vec3::from(bj.polarization);
        let pl = Vec3::from(bl.polarization);
        let re = pj.dot(&omega_hat(d).cross(&pl));
        let im = pj.dot(&omega_hat_im(d).cross(&pl));
        c64::new(re, im)
    });
    let herm = Mat::<c64>::from_fn(m, m, |i, j| {
        let a = from_c(matrix.read(i, j));
        let b = from_c(matrix.read(j, i)).conj();
        to_c(Complex64::new(0.0, 0.5) * (a - b))
    });
    let evd = herm.selfadjoint_eigendecomposition(Side::Lower);
    let s = evd.s().column_vector();
    let mags: Vec<f64> = (0..m).map(|i| s.read(i).re.abs()).collect();
    let smax = mags.iter().cloned().fold(0.0, f64::max);
    let kernel_cols: Vec<usize> =
        (0..m).filter(|&i| smax == 0.0 || mags[i] <= cutoff * smax).collect();
    let u = evd.u();
    let kernel = if smax == 0.0 {
        Mat::<c64>::from_fn(m, m, |i, j| if i == j { c64::new(1.0, 0.0) } else { c64::new(0.0, 0.0) })
    } else {
        Mat::<c64>::from_fn(m, kernel_cols.len(), |i, j| u.read(i, kernel_cols[j]))
    };
    let mut singular_values = mags;
    singular_values.sort_by(|a, b| b.partial_cmp(a).unwrap());
    Ok(OperatorMatrix { dim, truncation, cutoff, basis, matrix, kernel, singular_values })
}

impl OperatorMatrix {
    pub fn len(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        from_c(self.matrix.read(i, j))
    }

    pub fn kernel_rank(&self) -> usize {
        self.kernel.ncols()
    }

    /// `‖M + Mᴴ‖_F`.
    pub fn skew_defect(&self) -> f64 {
        let m = self.len();
        let mut s = 0.0;
        for i in 0..m {
            for j in 0..m {
                s += (self.entry(i, j) + self.entry(j, i).conj()).norm_sqr();
            }
        }
        s.sqrt()
    }

    fn norm_factor(&self) -> f64 {
        (2.0 * PI).powf(self.dim as f64 / 2.0)
    }

    /// Coordinates of `v` in the basis and the energy fraction left outside it.
    pub fn coordinates(&self, v: &FourierField) -> Result<(Vec<Complex64>, f64)> {
        if v.dim() != self.dim || v.ncomp() != self.dim {
            return Err(FluidexError::Config("field does not match the operator's dimension".into()));
        }
        let s = self.norm_factor();
        let c: Vec<Complex64> = self
            .basis
            .iter()
            .map(|b| {
                (0..self.dim)
                    .map(|j| v.coeff(j, b.k) * b.polarization[j])
                    .sum::<Complex64>()
                    * s
            })
            .collect();
        let total = v.norm_l2().powi(2);
        let kept: f64 = c.iter().map(|z| z.norm_sqr()).sum();
        let discarded = if total > 0.0 { ((total - kept) / total).max(0.0) } else { 0.0 };
        Ok((c, discarded))
    }

    /// Synthesizes the field with the given basis coordinates at resolution `n`.
    pub fn field(&self, coords: &[Complex64], n: usize) -> Result<FourierField> {
        if 3 * self.truncation > n {
            return Err(FluidexError::Resolution(format!(
                "truncation {} needs resolution >= {}",
                self.truncation,
                3 * self.truncation
            )));
        }
        let mut f = FourierField::zeros(self.dim, n, self.dim)?;
        let s = 1.0 / self.norm_factor();
        for (b, z) in self.basis.iter().zip(coords) {
            for j in 0..self.dim {
                let cur = f.coeff(j, b.k);
                f.set_coeff(j, b.k, cur + z * b.polarization[j] * s)?;
            }
        }
        Ok(f)
    }

    pub fn apply(&self, coords: &[Complex64]) -> Vec<Complex64> {
        let m = self.len();
        (0..m)
            .map(|i| (0..m).map(|j| self.entry(i, j) * coords[j]).sum())
            .collect()
    }

    /// Orthogonal projection onto the numerical kernel.
    pub fn project_kernel(&self, coords: &[Complex64]) -> Vec<Complex64> {
        let (m, r) = (self.len(), self.kernel_rank());
        let y: Vec<Complex64> = (0..r)
            .map(|j| (0..m).map(|i| from_c(self.kernel.read(i, j)).conj() * coords[i]).sum())
            .collect();
        (0..m)
            .map(|i| (0..r).map(|j| from_c(self.kernel.read(i, j)) * y[j]).sum())
            .collect()
    }

    /// Norm of the kernel component of given coordinates.
    pub fn kernel_component_norm(&self, coords: &[Complex64]) -> f64 {
        let (m, r) = (self.len(), self.kernel_rank());
        (0..r)
            .map(|j| {
                (0..m)
                    .map(|i| from_c(self.kernel.read(i, j)).conj() * coords[i])
                    .sum::<Complex64>()
                    .norm_sqr()
            })
            .sum::<f64>()
            .sqrt()
    }
}

/// `‖P_{Ker B} v‖`, reporting the energy of `v` outside the truncated basis.
pub fn factor_norm(v: &FourierField, op: &OperatorMatrix) -> Result<FactorNorm> {
    let (coords, discarded) = op.coordinates(v)?;
    if discarded > TRUNCATION_WARN_FRACTION {
        log::warn!(
            "factor_norm: {discarded:.3e} of the field's energy lies outside |k| <= {}",
            op.truncation
        );
    }
    Ok(FactorNorm { value: op.kernel_component_norm(&coords), discarded_fraction: discarded })
}
