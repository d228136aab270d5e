//! Equation models: linear advection, inviscid Burgers, and the Euler
//! equations in one and two dimensions.

use crate::error::{Error, Result};
use crate::real::Real;

pub const DEFAULT_GAMMA: f64 = 1.4;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SourceTerm {
    None,
    /// Adds `(0, 0, rho, rho v)` to the 2D Euler right-hand side.
    RayleighTaylor,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Model {
    Advection,
    Burgers,
    Euler1D { gamma: f64 },
    Euler2D { gamma: f64, source: SourceTerm },
}

impl Model {
    /// Number of conserved variables.
    pub fn nv(&self) -> usize {
        match self {
            Model::Advection | Model::Burgers => 1,
            Model::Euler1D { .. } => 3,
            Model::Euler2D { .. } => 4,
        }
    }

    pub fn dims(&self) -> usize {
        match self {
            Model::Euler2D { .. } => 2,
            _ => 1,
        }
    }

    pub fn is_system(&self) -> bool {
        self.nv() > 1
    }

    pub fn gamma(&self) -> Option<f64> {
        match *self {
            Model::Euler1D { gamma } | Model::Euler2D { gamma, .. } => Some(gamma),
            _ => None,
        }
    }

    pub fn source(&self) -> SourceTerm {
        match *self {
            Model::Euler2D { source, .. } => source,
            _ => SourceTerm::None,
        }
    }

    /// Physical flux in the line direction. For 2D Euler the state must
    /// already be ordered with the normal momentum second.
    #[inline]
    pub fn line_flux<T: Real>(&self, u: &[T], out: &mut [T]) {
        match *self {
            Model::Advection => out[0] = advection_flux(u[0]),
            Model::Burgers => out[0] = burgers_flux(u[0]),
            Model::Euler1D { gamma } => {
                let s = EulerState1D::new(u[0], u[1], u[2]);
                out.copy_from_slice(&euler_flux_1d(&s, T::from_f64(gamma)));
            }
            Model::Euler2D { gamma, .. } => {
                let s = EulerState2D::new(u[0], u[1], u[2], u[3]);
                out.copy_from_slice(&euler_flux_2d_x(&s, T::from_f64(gamma)));
            }
        }
    }

    /// Signed characteristic speed of a scalar model.
    #[inline]
    pub fn scalar_speed<T: Real>(&self, u: T) -> T {
        match self {
            Model::Advection => T::one(),
            Model::Burgers => u,
            _ => panic!("scalar_speed on a system"),
        }
    }
}

#[inline]
pub fn advection_flux<T: Real>(u: T) -> T {
    u
}

#[inline]
pub fn burgers_flux<T: Real>(u: T) -> T {
    T::from_f64(0.5) * u * u
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EulerState1D<T> {
    pub rho: T,
    pub mom: T,
    pub energy: T,
}

impl<T: Real> EulerState1D<T> {
    pub fn new(rho: T, mom: T, energy: T) -> Self {
        EulerState1D { rho, mom, energy }
    }

    pub fn from_primitive(rho: T, u: T, p: T, gamma: T) -> Self {
        let half = T::from_f64(0.5);
        EulerState1D {
            rho,
            mom: rho * u,
            energy: p / (gamma - T::one()) + half * rho * u * u,
        }
    }

    #[inline]
    pub fn velocity(&self) -> T {
        self.mom / self.rho
    }

    #[inline]
    pub fn pressure(&self, gamma: T) -> T {
        (gamma - T::one()) * (self.energy - T::from_f64(0.5) * self.mom * self.mom / self.rho)
    }

    pub fn to_array(&self) -> [T; 3] {
        [self.rho, self.mom, self.energy]
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EulerState2D<T> {
    pub rho: T,
    pub mom_x: T,
    pub mom_y: T,
    pub energy: T,
}

impl<T: Real> EulerState2D<T> {
    pub fn new(rho: T, mom_x: T, mom_y: T, energy: T) -> Self {
        EulerState2D {
            rho,
            mom_x,
            mom_y,
            energy,
        }
    }

    pub fn from_primitive(rho: T, u: T, v: T, p: T, gamma: T) -> Self {
        let half = T::from_f64(0.5);
        EulerState2D {
            rho,
            mom_x: rho * u,
            mom_y: rho * v,
            energy: p / (gamma - T::one()) + half * rho * (u * u + v * v),
        }
    }

    #[inline]
    pub fn pressure(&self, gamma: T) -> T {
        let ke = T::from_f64(0.5) * (self.mom_x * self.mom_x + self.mom_y * self.mom_y) / self.rho;
        (gamma - T::one()) * (self.energy - ke)
    }

    pub fn to_array(&self) -> [T; 4] {
        [self.rho, self.mom_x, self.mom_y, self.energy]
    }
}

#[inline]
pub fn euler_flux_1d<T: Real>(s: &EulerState1D<T>, gamma: T) -> [T; 3] {
    let u = s.mom / s.rho;
    let p = s.pressure(gamma);
    [s.mom, s.mom * u + p, (s.energy + p) * u]
}

#[inline]
pub fn euler_flux_2d_x<T: Real>(s: &EulerState2D<T>, gamma: T) -> [T; 4] {
    let u = s.mom_x / s.rho;
    let p = s.pressure(gamma);
    [s.mom_x, s.mom_x * u + p, s.mom_y * u, (s.energy + p) * u]
}

#[inline]
pub fn euler_flux_2d_y<T: Real>(s: &EulerState2D<T>, gamma: T) -> [T; 4] {
    let v = s.mom_y / s.rho;
    let p = s.pressure(gamma);
    [s.mom_y, s.mom_x * v, s.mom_y * v + p, (s.energy + p) * v]
}

/// Checked variant of [`euler_flux_1d`] that rejects non-physical states.
pub fn euler_flux_1d_checked<T: Real>(s: &EulerState1D<T>, gamma: T) -> Result<[T; 3]> {
    let p = s.pressure(gamma);
    if !(s.rho > T::zero() && p > T::zero()) {
        return Err(Error::NonPhysical {
            location: "flux evaluation".into(),
            rho: s.rho.to_f64(),
            p: p.to_f64(),
        });
    }
    Ok(euler_flux_1d(s, gamma))
}

/// Source increment for one cell (all zeros for [`SourceTerm::None`]).
#[inline]
pub fn apply_source<T: Real>(u: &[T], source: SourceTerm, out: &mut [T]) {
    match source {
        SourceTerm::None => out.iter_mut().for_each(|o| *o = T::zero()),
        SourceTerm::RayleighTaylor => {
            out[0] = T::zero();
            out[1] = T::zero();
            out[2] = u[0];
            out[3] = u[2];
        }
    }
}

/// Sound speed and pressure of a conserved Euler state laid out as
/// `(rho, m_normal, [m_tangential,] E)`.
#[inline]
pub fn sound_speed<T: Real>(u: &[T], gamma: T) -> (T, T) {
    let rho = u[0];
    let e = u[u.len() - 1];
    let mut m2 = T::zero();
    for m in &u[1..u.len() - 1] {
        m2 += *m * *m;
    }
    let p = (gamma - T::one()) * (e - T::from_f64(0.5) * m2 / rho);
    ((gamma * p / rho).sqrt(), p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_fluxes() {
        assert_eq!(advection_flux(3.0), 3.0);
        assert_eq!(burgers_flux(3.0), 4.5);
        assert_eq!(Model::Burgers.scalar_speed(2.0), 2.0);
    }

    #[test]
    fn stationary_gas_flux_is_pressure_only() {
        let s = EulerState1D::from_primitive(1.0, 0.0, 1.0, 1.4);
        assert!((s.energy - 2.5).abs() < 1e-15);
        assert_eq!(euler_flux_1d(&s, 1.4), [0.0, 1.0, 0.0]);
    }

    #[test]
    fn lax_left_state_mass_flux() {
        let s = EulerState1D::from_primitive(0.445, 0.698, 3.528, 1.4);
        assert!((euler_flux_1d(&s, 1.4)[0] - 0.31061).abs() < 1e-12);
    }

    #[test]
    fn mirrored_state_flips_odd_components() {
        let a = EulerState1D::from_primitive(0.7, 0.4, 1.3, 1.4);
        let b = EulerState1D::from_primitive(0.7, -0.4, 1.3, 1.4);
        let (fa, fb) = (euler_flux_1d(&a, 1.4), euler_flux_1d(&b, 1.4));
        assert_eq!(fa[0], -fb[0]);
        assert_eq!(fa[1], fb[1]);
        assert_eq!(fa[2], -fb[2]);
    }

    #[test]
    fn two_d_flux_y_is_permuted_x() {
        let s = EulerState2D::from_primitive(1.2, 0.3, -0.8, 2.0, 1.4);
        let p = EulerState2D::new(s.rho, s.mom_y, s.mom_x, s.energy);
        let (gy, fx) = (euler_flux_2d_y(&s, 1.4), euler_flux_2d_x(&p, 1.4));
        assert_eq!([gy[0], gy[2], gy[1], gy[3]], fx);
    }

    #[test]
    fn non_physical_is_rejected() {
        let s = EulerState1D::new(1.0, 0.0, -1.0);
        assert!(matches!(euler_flux_1d_checked(&s, 1.4), Err(Error::NonPhysical { .. })));
    }

    #[test]
    fn source_examples() {
        let mut out = [1.0; 4];
        apply_source(&[2.0, 0.3, 0.0, 5.0], SourceTerm::None, &mut out);
        assert_eq!(out, [0.0; 4]);
        apply_source(&[2.0, 0.3, 0.0, 5.0], SourceTerm::RayleighTaylor, &mut out);
        assert_eq!(out, [0.0, 0.0, 2.0, 0.0]);
        apply_source(&[1.0, 0.0, -0.025, 5.0], SourceTerm::RayleighTaylor, &mut out);
        assert_eq!(out, [0.0, 0.0, 1.0, -0.025]);
    }

    #[test]
    fn sound_speed_of_unit_gas() {
        let (c, p) = sound_speed(&[1.0, 0.0, 2.5], 1.4);
        assert!((p - 1.0).abs() < 1e-15);
        assert!((c - 1.4f64.sqrt()).abs() < 1e-15);
    }
}
