use std::f64::consts::PI;

use num_complex::Complex64;

use super::fft::{fft_nd, index_of, wavenumber};
use crate::error::{FluidexError, Result};
use crate::flow::Point;

/// Truncated Fourier series `v(x) = Σ_k c_k e^{ik·x}` on the 2π-torus.
///
/// Coefficients are stored per component in FFT order along each axis,
/// row-major with the first coordinate slowest.
#[derive(Clone, Debug, PartialEq)]
pub struct FourierField {
    dim: usize,
    n: usize,
    comps: Vec<Vec<Complex64>>,
}

pub(crate) const MAX_DECODE_POINTS: usize = 1 << 24;

fn check_shape(dim: usize, n: usize, ncomp: usize) -> Result<()> {
    if !(dim == 2 || dim == 3) {
        return Err(FluidexError::Config(format!("field dimension must be 2 or 3, got {dim}")));
    }
    if n < 4 || !n.is_power_of_two() {
        return Err(FluidexError::Config(format!("resolution must be a power of two >= 4, got {n}")));
    }
    if ncomp == 0 || ncomp > 3 {
        return Err(FluidexError::Config(format!("component count must be 1..=3, got {ncomp}")));
    }
    Ok(())
}

impl FourierField {
    pub fn zeros(dim: usize, n: usize, ncomp: usize) -> Result<Self> {
        check_shape(dim, n, ncomp)?;
        let len = n.pow(dim as u32);
        Ok(FourierField { dim, n, comps: vec![vec![Complex64::default(); len]; ncomp] })
    }

    /// Builds a field from grid samples at `x_j = 2πj/N`.
    pub fn from_grid(dim: usize, n: usize, mut grid: Vec<Vec<Complex64>>) -> Result<Self> {
        check_shape(dim, n, grid.len())?;
        let len = n.pow(dim as u32);
        let scale = 1.0 / len as f64;
        for g in grid.iter_mut() {
            if g.len() != len {
                return Err(FluidexError::Config(format!(
                    "grid component has {} samples, expected {len}",
                    g.len()
                )));
            }
            fft_nd(g, n, dim, false);
            for v in g.iter_mut() {
                *v *= scale;
            }
        }
        let mut f = FourierField { dim, n, comps: grid };
        f.zero_nyquist();
        Ok(f)
    }

    /// Samples `f` on the grid and transforms.
    pub fn from_fn<F>(dim: usize, n: usize, ncomp: usize, f: F) -> Result<Self>
    where
        F: Fn(&Point) -> Vec<Complex64> + Sync,
    {
        check_shape(dim, n, ncomp)?;
        let pts = grid_points(dim, n);
        let mut grid = vec![vec![Complex64::default(); pts.len()]; ncomp];
        for (j, x) in pts.iter().enumerate() {
            let v = f(x);
            for c in 0..ncomp {
                grid[c][j] = v[c];
            }
        }
        Self::from_grid(dim, n, grid)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn resolution(&self) -> usize {
        self.n
    }

    pub fn ncomp(&self) -> usize {
        self.comps.len()
    }

    pub fn len(&self) -> usize {
        self.comps[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn component(&self, c: usize) -> &[Complex64] {
        &self.comps[c]
    }

    pub fn component_mut(&mut self, c: usize) -> &mut [Complex64] {
        &mut self.comps[c]
    }

    /// Signed wave vector of flat index `idx` (unused axes are 0).
    pub fn wavevector(&self, idx: usize) -> [i64; 3] {
        let mut k = [0i64; 3];
        let mut rem = idx;
        for axis in (0..self.dim).rev() {
            k[axis] = wavenumber(rem % self.n, self.n);
            rem /= self.n;
        }
        k
    }

    pub fn index_of(&self, k: [i64; 3]) -> Option<usize> {
        let mut idx = 0;
        for &ka in k.iter().take(self.dim) {
            idx = idx * self.n + index_of(ka, self.n)?;
        }
        if k[self.dim..].iter().any(|&v| v != 0) {
            return None;
        }
        Some(idx)
    }

    pub fn coeff(&self, c: usize, k: [i64; 3]) -> Complex64 {
        self.index_of(k).map(|i| self.comps[c][i]).unwrap_or_default()
    }

    pub fn set_coeff(&mut self, c: usize, k: [i64; 3], v: Complex64) -> Result<()> {
        let i = self.index_of(k).ok_or_else(|| {
            FluidexError::Resolution(format!("mode {k:?} does not fit resolution {}", self.n))
        })?;
        self.comps[c][i] = v;
        Ok(())
    }

    fn zero_nyquist(&mut self) {
        let half = (self.n / 2) as i64;
        for idx in 0..self.len() {
            let k = self.wavevector(idx);
            if k.iter().any(|&v| v == -half) {
                for c in self.comps.iter_mut() {
                    c[idx] = Complex64::default();
                }
            }
        }
    }

    /// Grid samples of every component.
    pub fn to_grid(&self) -> Vec<Vec<Complex64>> {
        self.comps
            .iter()
            .map(|c| {
                let mut g = c.clone();
                fft_nd(&mut g, self.n, self.dim, true);
                g
            })
            .collect()
    }

    pub fn grid_points(&self) -> Vec<Point> {
        grid_points(self.dim, self.n)
    }

    fn volume(&self) -> f64 {
        (2.0 * PI).powi(self.dim as i32)
    }

    /// `∫ ⟨v, w̄⟩ dx` over the torus, conjugating `other`.
    pub fn inner(&self, other: &FourierField) -> Complex64 {
        assert!(self.same_shape(other), "inner product of incompatible fields");
        let s: Complex64 = self
            .comps
            .iter()
            .zip(&other.comps)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x * y.conj()).sum::<Complex64>())
            .sum();
        s * self.volume()
    }

    pub fn norm_l2(&self) -> f64 {
        let s: f64 = self.comps.iter().flat_map(|c| c.iter()).map(|v| v.norm_sqr()).sum();
        (s * self.volume()).sqrt()
    }

    /// L² norm computed from grid samples by the rectangle rule.
    pub fn grid_norm_l2(&self) -> f64 {
        let cell = (2.0 * PI / self.n as f64).powi(self.dim as i32);
        let s: f64 = self.to_grid().iter().flat_map(|c| c.iter()).map(|v| v.norm_sqr()).sum();
        (s * cell).sqrt()
    }

    pub fn same_shape(&self, other: &FourierField) -> bool {
        self.dim == other.dim && self.n == other.n && self.ncomp() == other.ncomp()
    }

    pub fn scaled(&self, s: Complex64) -> FourierField {
        let mut out = self.clone();
        out.comps.iter_mut().flat_map(|c| c.iter_mut()).for_each(|v| *v *= s);
        out
    }

    /// `self += a·other`.
    pub fn axpy(&mut self, a: Complex64, other: &FourierField) {
        assert!(self.same_shape(other), "axpy of incompatible fields");
        for (x, y) in self.comps.iter_mut().zip(&other.comps) {
            for (p, q) in x.iter_mut().zip(y) {
                *p += a * q;
            }
        }
    }

    pub fn sub(&self, other: &FourierField) -> FourierField {
        let mut out = self.clone();
        out.axpy(Complex64::new(-1.0, 0.0), other);
        out
    }

    pub fn add(&self, other: &FourierField) -> FourierField {
        let mut out = self.clone();
        out.axpy(Complex64::new(1.0, 0.0), other);
        out
    }

    /// Zeroes modes with some `|k_i| > N/3`.
    pub fn dealias(&mut self) {
        let cut = (self.n / 3) as i64;
        for idx in 0..self.len() {
            let k = self.wavevector(idx);
            if k.iter().any(|v| v.abs() > cut) {
                for c in self.comps.iter_mut() {
                    c[idx] = Complex64::default();
                }
            }
        }
    }

    /// Fraction of L² energy in modes outside the dealiased band.
    pub fn out_of_band_fraction(&self) -> f64 {
        let mut inside = self.clone();
        inside.dealias();
        let total = self.norm_l2().powi(2);
        if total == 0.0 {
            return 0.0;
        }
        (total - inside.norm_l2().powi(2)).max(0.0) / total
    }

    /// Scalar divergence `Σ i k_j v̂_j`; requires `ncomp == dim`.
    pub fn divergence(&self) -> Result<FourierField> {
        if self.ncomp() != self.dim {
            return Err(FluidexError::Config("divergence needs a vector field".into()));
        }
        let mut out = FourierField::zeros(self.dim, self.n, 1)?;
        for idx in 0..self.len() {
            let k = self.wavevector(idx);
            let mut s = Complex64::default();
            for j in 0..self.dim {
                s += Complex64::new(0.0, k[j] as f64) * self.comps[j][idx];
            }
            out.comps[0][idx] = s;
        }
        Ok(out)
    }

    /// Spectral gradient of a scalar field.
    pub fn gradient(&self) -> Result<FourierField> {
        if self.ncomp() != 1 {
            return Err(FluidexError::Config("gradient needs a scalar field".into()));
        }
        let mut out = FourierField::zeros(self.dim, self.n, self.dim)?;
        for idx in 0..self.len() {
            let k = self.wavevector(idx);
            for j in 0..self.dim {
                out.comps[j][idx] = Complex64::new(0.0, k[j] as f64) * self.comps[0][idx];
            }
        }
        Ok(out)
    }

    pub fn max_abs_on_grid(&self) -> f64 {
        self.to_grid().iter().flat_map(|c| c.iter()).map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn max_imag_on_grid(&self) -> f64 {
        self.to_grid().iter().flat_map(|c| c.iter()).map(|v| v.im.abs()).fold(0.0, f64::max)
    }

    /// Copies coefficients into a field of resolution `n`, truncating or zero-padding.
    pub fn resample(&self, n: usize) -> Result<FourierField> {
        let mut out = FourierField::zeros(self.dim, n, self.ncomp())?;
        for idx in 0..self.len() {
            let k = self.wavevector(idx);
            if let Some(j) = out.index_of(k) {
                for c in 0..self.ncomp() {
                    out.comps[c][j] = self.comps[c][idx];
                }
            }
        }
        out.zero_nyquist();
        Ok(out)
    }

    /// Little-endian layout: `u32 dim, u32 N, u32 ncomp`, then for each
    /// component every coefficient in FFT order as `f64 re, f64 im`.
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(12 + 16 * self.ncomp() * self.len());
        out.extend_from_slice(&(self.dim as u32).to_le_bytes());
        out.extend_from_slice(&(self.n as u32).to_le_bytes());
        out.extend_from_slice(&(self.ncomp() as u32).to_le_bytes());
        for c in &self.comps {
            for v in c {
                out.extend_from_slice(&v.re.to_le_bytes());
                out.extend_from_slice(&v.im.to_le_bytes());
            }
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<FourierField> {
        let word = |i: usize| -> Result<usize> {
            let b = bytes
                .get(4 * i..4 * i + 4)
                .ok_or_else(|| FluidexError::Format("truncated header".into()))?;
            Ok(u32::from_le_bytes(b.try_into().unwrap()) as usize)
        };
        let (dim, n, ncomp) = (word(0)?, word(1)?, word(2)?);
        check_shape(dim, n, ncomp).map_err(|e| FluidexError::Format(e.to_string()))?;
        let points = n
            .checked_pow(dim as u32)
            .filter(|&p| p <= MAX_DECODE_POINTS)
            .ok_or_else(|| FluidexError::Format(format!("resolution {n} too large")))?;
        let expected = 12 + 16 * ncomp * points;
        if bytes.len() != expected {
            return Err(FluidexError::Format(format!(
                "expected {expected} bytes for dim={dim} N={n} ncomp={ncomp}, got {}",
                bytes.len()
            )));
        }
        let mut comps = Vec::with_capacity(ncomp);
        let mut pos = 12;
        for _ in 0..ncomp {
            let mut c = Vec::with_capacity(points);
            for _ in 0..points {
                let re = f64::from_le_bytes(bytes[pos..pos + 8].try_into().unwrap());
                let im = f64::from_le_bytes(bytes[pos + 8..pos + 16].try_into().unwrap());
                if !re.is_finite() || !im.is_finite() {
                    return Err(FluidexError::Format(format!("non-finite coefficient at byte {pos}")));
                }
                c.push(Complex64::new(re, im));
                pos += 16;
            }
            comps.push(c);
        }
        Ok(FourierField { dim, n, comps })
    }

    /// CSV of real-space samples: `x1,x2[,x3],re_1,im_1,...`.
    pub fn to_csv(&self) -> String {
        let grid = self.to_grid();
        let pts = self.grid_points();
        let mut s = String::new();
        let axes = ["x1", "x2", "x3"];
        let mut header: Vec<String> = axes[..self.dim].iter().map(|a| a.to_string()).collect();
        for c in 0..self.ncomp() {
            header.push(format!("re_{}", c + 1));
            header.push(format!("im_{}", c + 1));
        }
        s.push_str(&header.join(","));
        s.push('\n');
        for (j, x) in pts.iter().enumerate() {
            let mut row: Vec<String> = (0..self.dim).map(|a| format!("{:.9}", x[a])).collect();
            for g in &grid {
                row.push(format!("{:.12e}", g[j].re));
                row.push(format!("{:.12e}", g[j].im));
            }
            s.push_str(&row.join(","));
            s.push('\n');
        }
        s
    }
}

/// Grid points `2πj/N` in row-major order.
pub fn grid_points(dim: usize, n: usize) -> Vec<Point> {
    let h = 2.0 * PI / n as f64;
    let total = n.pow(dim as u32);
    (0..total)
        .map(|idx| {
            let mut x = Point::zeros();
            let mut rem = idx;
            for axis in (0..dim).rev() {
                x[axis] = (rem % n) as f64 * h;
                rem /= n;
            }
            x
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn single_mode_coefficient() {
        let f = FourierField::from_fn(2, 16, 1, |x| vec![c((3.0 * x[0] - 2.0 * x[1]).cos())]).unwrap();
        assert!((f.coeff(0, [3, -2, 0]) - c(0.5)).norm() < 1e-14);
        assert!((f.coeff(0, [-3, 2, 0]) - c(0.5)).norm() < 1e-14);
        let expected = (0.5 * (2.0 * PI).powi(2)).sqrt();
        assert!((f.norm_l2() - expected).abs() < 1e-12);
    }

    #[test]
    fn parseval_and_reality() {
        let f = FourierField::from_fn(3, 8, 2, |x| {
            vec![c(x[0].sin() * x[2].cos() + 0.3), c((x[1] + 2.0 * x[2]).sin())]
        })
        .unwrap();
        assert!((f.norm_l2() - f.grid_norm_l2()).abs() < 1e-10 * f.norm_l2());
        assert!(f.max_imag_on_grid() < 1e-12);
    }

    #[test]
    fn codec_roundtrip_and_rejects() {
        let f = FourierField::from_fn(2, 8, 2, |x| vec![c(x[0].sin()), c(x[1].cos())]).unwrap();
        let bytes = f.encode();
        assert_eq!(FourierField::decode(&bytes).unwrap(), f);
        assert!(FourierField::decode(&bytes[..bytes.len() - 1]).is_err());
        assert!(FourierField::decode(&[1, 0, 0]).is_err());
        let mut bad = bytes.clone();
        bad[4] = 6;
        assert!(FourierField::decode(&bad).is_err());
    }

    #[test]
    fn resample_preserves_band() {
        let f = FourierField::from_fn(2, 8, 1, |x| vec![c(x[0].sin() + (2.0 * x[1]).cos())]).unwrap();
        let g = f.resample(32).unwrap().resample(8).unwrap();
        assert!(f.sub(&g).norm_l2() < 1e-14);
    }
}
