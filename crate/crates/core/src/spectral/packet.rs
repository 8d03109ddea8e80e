use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::field::FourierField;
use crate::error::{FluidexError, Result};
use crate::flow::{wrap_signed, Point, Vec3};

/// Envelope `h₀`: identically one, or the canonical bump `exp(1 − 1/(1−|y|²))`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Envelope {
    Global,
    Bump,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PacketKind {
    Phi2d,
    Psi3d,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PacketSpec {
    pub kind: PacketKind,
    pub envelope: Envelope,
    pub x0: Point,
    pub zeta: f64,
    pub delta: f64,
    pub xi0: Vec3,
    /// Polarization for `psi3d`; ignored in 2D.
    pub p: Vec3,
}

/// Canonical bump as a function of `|y|²`.
pub fn bump(r2: f64) -> f64 {
    if r2 >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - r2)).exp()
    }
}

/// Gradient of `y ↦ bump(|y|²)`.
pub fn bump_gradient(y: &Vec3) -> Vec3 {
    let r2 = y.norm_squared();
    if r2 >= 1.0 {
        return Vec3::zeros();
    }
    let s = 1.0 - r2;
    y * (-2.0 * bump(r2) / (s * s))
}

/// Minimal-image displacement `x − x0` over the first `dim` axes.
pub fn displacement(dim: usize, x: &Point, x0: &Point) -> Vec3 {
    let mut y = Vec3::zeros();
    for i in 0..dim {
        y[i] = wrap_signed(x[i] - x0[i]);
    }
    y
}

fn is_integer(v: f64) -> bool {
    (v - v.round()).abs() < 1e-9
}

impl PacketSpec {
    pub fn dim(&self) -> usize {
        match self.kind {
            PacketKind::Phi2d => 2,
            PacketKind::Psi3d => 3,
        }
    }

    /// Frequency `|ξ₀|/δ` of the carrier.
    pub fn carrier(&self) -> f64 {
        self.xi0.norm() / self.delta
    }

    /// `h_ζ(x)`.
    pub fn envelope_at(&self, x: &Point) -> f64 {
        match self.envelope {
            Envelope::Global => 1.0,
            Envelope::Bump => {
                bump((displacement(self.dim(), x, &self.x0) / self.zeta).norm_squared())
            }
        }
    }

    /// Carrier phase `x·ξ₀/δ`, measured from the packet centre for bump envelopes.
    pub fn phase_at(&self, x: &Point) -> f64 {
        match self.envelope {
            Envelope::Global => x.dot(&self.xi0) / self.delta,
            Envelope::Bump => {
                (self.x0 + displacement(self.dim(), x, &self.x0)).dot(&self.xi0) / self.delta
            }
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        let d = self.dim();
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(FluidexError::Config(format!("delta must be positive, got {}", self.delta)));
        }
        if !(self.zeta > 0.0 && self.zeta <= 1.0) {
            return Err(FluidexError::Config(format!("zeta must lie in (0, 1], got {}", self.zeta)));
        }
        if self.xi0.norm() == 0.0 || self.xi0.iter().skip(d).any(|&v| v != 0.0) {
            return Err(FluidexError::Config("xi0 must be a nonzero vector of the packet's dimension".into()));
        }
        let integer_xi = self.xi0.iter().take(d).all(|v| is_integer(*v));
        match self.envelope {
            Envelope::Global => {
                if !self.xi0.iter().take(d).all(|v| is_integer(v / self.delta)) {
                    return Err(FluidexError::Config(
                        "a global envelope needs xi0/delta on the integer lattice".into(),
                    ));
                }
            }
            Envelope::Bump => {
                if integer_xi && !is_integer(1.0 / self.delta) {
                    return Err(FluidexError::Config(format!(
                        "1/delta must be an integer for integer xi0, got delta = {}",
                        self.delta
                    )));
                }
            }
        }
        if self.kind == PacketKind::Psi3d {
            let p = self.p.norm();
            if p == 0.0 || self.p.dot(&self.xi0).abs() > 1e-12 * p * self.xi0.norm() {
                return Err(FluidexError::Config("P must be nonzero and orthogonal to xi0".into()));
            }
        }
        if self.carrier() >= n as f64 / 3.0 {
            return Err(FluidexError::Resolution(format!(
                "carrier frequency {:.3} needs N > {:.1}, got N = {n}",
                self.carrier(),
                3.0 * self.carrier()
            )));
        }
        Ok(())
    }

    /// Scalar `g = h_ζ e^{i phase}` on the grid.
    pub fn scalar_field(&self, n: usize) -> Result<FourierField> {
        FourierField::from_fn(self.dim(), n, 1, |x| {
            let h = self.envelope_at(x);
            vec![if h == 0.0 { Complex64::default() } else { Complex64::from_polar(h, self.phase_at(x)) }]
        })
    }

    /// Leading-order term `h_ζ a e^{i phase}` with `a = ξ₀^⊥` (2D) or `P` (3D).
    pub fn leading_term(&self, n: usize) -> Result<FourierField> {
        let a = match self.kind {
            PacketKind::Phi2d => Vec3::new(-self.xi0[1], self.xi0[0], 0.0),
            PacketKind::Psi3d => self.p,
        };
        let d = self.dim();
        FourierField::from_fn(d, n, d, |x| {
            let h = self.envelope_at(x);
            let e = if h == 0.0 { Complex64::default() } else { Complex64::from_polar(h, self.phase_at(x)) };
            (0..d).map(|i| e * a[i]).collect()
        })
    }
}

/// `phi2d = −iδ ∇^⊥(h_ζ e^{ix·ξ₀/δ})` or `psi3d = δ ∇×(i ξ₀×P/|ξ₀|² h_ζ e^{ix·ξ₀/δ})`.
pub fn make_wavepacket(spec: &PacketSpec, n: usize) -> Result<FourierField> {
    spec.validate(n)?;
    let g = spec.scalar_field(n)?;
    let d = spec.dim();
    let mut out = FourierField::zeros(d, n, d)?;
    let delta = spec.delta;
    let axis = spec.xi0.cross(&spec.p) / spec.xi0.norm_squared();
    for idx in 0..g.len() {
        let k = g.wavevector(idx);
        let gk = g.component(0)[idx];
        if d == 2 {
            out.component_mut(0)[idx] = gk * (-(k[1] as f64) * delta);
            out.component_mut(1)[idx] = gk * (k[0] as f64 * delta);
        } else {
            let kv = Vec3::new(k[0] as f64, k[1] as f64, k[2] as f64);
            let c = kv.cross(&axis) * (-delta);
            for j in 0..3 {
                out.component_mut(j)[idx] = gk * c[j];
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn spec2(envelope: Envelope, zeta: f64, delta: f64) -> PacketSpec {
        PacketSpec {
            kind: PacketKind::Phi2d,
            envelope,
            x0: Point::new(PI, PI, 0.0),
            zeta,
            delta,
            xi0: Vec3::new(1.0, 0.0, 0.0),
            p: Vec3::zeros(),
        }
    }

    #[test]
    fn global_phi_is_a_single_mode() {
        let s = spec2(Envelope::Global, 1.0, 0.25);
        let f = make_wavepacket(&s, 32).unwrap();
        let expect = s.leading_term(32).unwrap();
        assert!(f.sub(&expect).norm_l2() < 1e-12);
        assert!((f.coeff(1, [4, 0, 0]).re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn psi_is_solenoidal() {
        let s = PacketSpec {
            kind: PacketKind::Psi3d,
            envelope: Envelope::Bump,
            x0: Point::new(1.0, 2.0, 3.0),
            zeta: 0.9,
            delta: 0.25,
            xi0: Vec3::new(0.0, 0.0, 1.0),
            p: Vec3::new(1.0, 0.0, 0.0),
        };
        let f = make_wavepacket(&s, 32).unwrap();
        assert!(f.divergence().unwrap().max_abs_on_grid() < 1e-10);
    }

    #[test]
    fn resolution_limit() {
        let s = spec2(Envelope::Bump, 0.5, 1.0 / 32.0);
        assert!(matches!(make_wavepacket(&s, 64), Err(FluidexError::Resolution(_))));
        assert!(make_wavepacket(&s, 128).is_ok());
    }

    #[test]
    fn bump_gradient_matches_difference() {
        let y = Vec3::new(0.3, -0.2, 0.1);
        let h = 1e-6;
        for i in 0..3 {
            let e = Vec3::ith(i, h);
            let fd = (bump((y + e).norm_squared()) - bump((y - e).norm_squared())) / (2.0 * h);
            assert!((fd - bump_gradient(&y)[i]).abs() < 1e-8);
        }
    }
}
