//! Flux splitting, wave speeds, Roe-averaged eigensystems and the
//! per-interface numerical flux used by the line sweeps.

use crate::error::{Error, Result};
use crate::physics::{sound_speed, Model};
use crate::real::Real;
use crate::reconstruct::Reconstructor;

#[derive(Clone, Debug, PartialEq)]
pub struct SplitFluxPair<T> {
    pub plus: Vec<T>,
    pub minus: Vec<T>,
}

/// Global Lax-Friedrichs splitting `f^(+/-) = (f +/- alpha u) / 2`.
pub fn lax_friedrichs_split<T: Real>(f: &[T], u: &[T], alpha: T) -> Result<SplitFluxPair<T>> {
    if alpha < T::zero() {
        return Err(Error::NegativeSpeed(alpha.to_f64()));
    }
    if f.len() != u.len() {
        return Err(Error::SizeMismatch(format!("{} fluxes vs {} states", f.len(), u.len())));
    }
    let half = T::from_f64(0.5);
    let plus = f.iter().zip(u).map(|(&f, &u)| half * (f + alpha * u)).collect();
    let minus = f.iter().zip(u).map(|(&f, &u)| half * (f - alpha * u)).collect();
    Ok(SplitFluxPair { plus, minus })
}

/// Largest characteristic speed magnitude over a line of states stored with
/// stride `nv` (normal momentum second for 2D Euler).
pub fn wave_speed_bound<T: Real>(model: &Model, line: &[T]) -> Result<T> {
    if line.is_empty() {
        return Err(Error::SizeMismatch("empty line".into()));
    }
    match model.gamma() {
        None => {
            let mut a = T::zero();
            for &u in line {
                a = a.max(model.scalar_speed(u).abs());
            }
            Ok(a)
        }
        Some(gamma) => {
            let gamma = T::from_f64(gamma);
            let nv = model.nv();
            let mut a = T::zero();
            for (i, u) in line.chunks_exact(nv).enumerate() {
                let (c, p) = sound_speed(u, gamma);
                if !(u[0] > T::zero() && p > T::zero()) {
                    return Err(Error::NonPhysical {
                        location: format!("cell {i} of line"),
                        rho: u[0].to_f64(),
                        p: p.to_f64(),
                    });
                }
                a = a.max((u[1] / u[0]).abs() + c);
            }
            Ok(a)
        }
    }
}

/// Roe-averaged primitive quantities. `v` is zero in one dimension.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RoeState<T> {
    pub rho: T,
    pub u: T,
    pub v: T,
    pub h: T,
    pub c: T,
}

/// Roe average of two conserved states laid out `(rho, m_n, [m_t,] E)`.
pub fn roe_average<T: Real>(left: &[T], right: &[T], gamma: T) -> Result<RoeState<T>> {
    let nv = left.len();
    let two_d = nv == 4;
    let prim = |s: &[T]| -> Result<(T, T, T, T)> {
        let (_, p) = sound_speed(s, gamma);
        if !(s[0] > T::zero() && p > T::zero()) {
            return Err(Error::NonPhysical {
                location: "Roe average".into(),
                rho: s[0].to_f64(),
                p: p.to_f64(),
            });
        }
        let v = if two_d { s[2] / s[0] } else { T::zero() };
        Ok((s[0], s[1] / s[0], v, (s[nv - 1] + p) / s[0]))
    };
    let (rl, ul, vl, hl) = prim(left)?;
    let (rr, ur, vr, hr) = prim(right)?;
    let (sl, sr) = (rl.sqrt(), rr.sqrt());
    let inv = T::one() / (sl + sr);
    let u = (sl * ul + sr * ur) * inv;
    let v = (sl * vl + sr * vr) * inv;
    let h = (sl * hl + sr * hr) * inv;
    let c2 = (gamma - T::one()) * (h - T::from_f64(0.5) * (u * u + v * v));
    Ok(RoeState {
        rho: sl * sr,
        u,
        v,
        h,
        c: c2.sqrt(),
    })
}

/// Left and right eigenvectors of the normal flux Jacobian, stored row-major
/// in the leading `nv x nv` block.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CharacteristicFrame<T> {
    pub nv: usize,
    pub left: [[T; 4]; 4],
    pub right: [[T; 4]; 4],
    pub eigenvalues: [T; 4],
}

impl<T: Real> CharacteristicFrame<T> {
    pub fn new(roe: &RoeState<T>, gamma: T, nv: usize) -> Self {
        let z = T::zero();
        let one = T::one();
        let half = T::from_f64(0.5);
        let RoeState { u, v, h, c, .. } = *roe;
        let b1 = (gamma - one) / (c * c);
        let q2 = u * u + v * v;
        let b2 = half * b1 * q2;
        let inv_c = one / c;
        let mut left = [[z; 4]; 4];
        let mut right = [[z; 4]; 4];
        if nv == 3 {
            left[0] = [half * (b2 + u * inv_c), -half * (b1 * u + inv_c), half * b1, z];
            left[1] = [one - b2, b1 * u, -b1, z];
            left[2] = [half * (b2 - u * inv_c), -half * (b1 * u - inv_c), half * b1, z];
            let cols = [[one, u - c, h - u * c], [one, u, half * q2], [one, u + c, h + u * c]];
            for (k, col) in cols.iter().enumerate() {
                for i in 0..3 {
                    right[i][k] = col[i];
                }
            }
            CharacteristicFrame {
                nv,
                left,
                right,
                eigenvalues: [u - c, u, u + c, z],
            }
        } else {
            left[0] = [
                half * (b2 + u * inv_c),
                -half * (b1 * u + inv_c),
                -half * b1 * v,
                half * b1,
            ];
            left[1] = [one - b2, b1 * u, b1 * v, -b1];
            left[2] = [-v, z, one, z];
            left[3] = [
                half * (b2 - u * inv_c),
                -half * (b1 * u - inv_c),
                -half * b1 * v,
                half * b1,
            ];
            let cols = [
                [one, u - c, v, h - u * c],
                [one, u, v, half * q2],
                [z, z, one, v],
                [one, u + c, v, h + u * c],
            ];
            for (k, col) in cols.iter().enumerate() {
                for i in 0..4 {
                    right[i][k] = col[i];
                }
            }
            CharacteristicFrame {
                nv,
                left,
                right,
                eigenvalues: [u - c, u, u, u + c],
            }
        }
    }

    #[inline]
    pub fn to_characteristic(&self, x: &[T], out: &mut [T]) {
        for (i, o) in out.iter_mut().enumerate().take(self.nv) {
            let mut acc = T::zero();
            for j in 0..self.nv {
                acc += self.left[i][j] * x[j];
            }
            *o = acc;
        }
    }

    #[inline]
    pub fn to_conserved(&self, x: &[T], out: &mut [T]) {
        for (i, o) in out.iter_mut().enumerate().take(self.nv) {
            let mut acc = T::zero();
            for j in 0..self.nv {
                acc += self.right[i][j] * x[j];
            }
            *o = acc;
        }
    }
}

/// Reusable buffers for interface reconstructions along one line.
#[derive(Clone, Debug, Default)]
pub struct LineScratch<T> {
    f: Vec<T>,
    plus: Vec<T>,
    minus_rev: Vec<T>,
    wp: Vec<T>,
    wm: Vec<T>,
}

impl<T: Real> LineScratch<T> {
    pub fn new() -> Self {
        LineScratch {
            f: Vec::new(),
            plus: Vec::new(),
            minus_rev: Vec::new(),
            wp: Vec::new(),
            wm: Vec::new(),
        }
    }
}

/// Numerical flux at the interface between cells `r-1` and `r` of a window
/// of `2r` states `u` and physical fluxes `f` (stride `nv`), by projection
/// onto the Roe frame, Lax-Friedrichs splitting with `alpha`, scalar
/// reconstruction of each field and projection back.
#[allow(clippy::too_many_arguments)]
pub fn characteristic_reconstruct<T: Real>(
    u: &[T],
    f: &[T],
    nv: usize,
    alpha: T,
    gamma: T,
    rec: &Reconstructor<T>,
    scratch: &mut LineScratch<T>,
    out: &mut [T],
) -> Result<()> {
    let r = rec.r();
    let len = 2 * r - 1;
    let roe = roe_average(&u[(r - 1) * nv..r * nv], &u[r * nv..(r + 1) * nv], gamma)?;
    let frame = CharacteristicFrame::new(&roe, gamma, nv);
    scratch.wp.resize(nv * len, T::zero());
    scratch.wm.resize(nv * len, T::zero());
    let half = T::from_f64(0.5);
    let (mut w, mut g) = ([T::zero(); 4], [T::zero(); 4]);
    for cell in 0..2 * r {
        frame.to_characteristic(&u[cell * nv..(cell + 1) * nv], &mut w);
        frame.to_characteristic(&f[cell * nv..(cell + 1) * nv], &mut g);
        for q in 0..nv {
            if cell < len {
                scratch.wp[q * len + cell] = half * (g[q] + alpha * w[q]);
            }
            if cell > 0 {
                scratch.wm[q * len + (2 * r - 1 - cell)] = half * (g[q] - alpha * w[q]);
            }
        }
    }
    let mut gh = [T::zero(); 4];
    for (q, v) in gh.iter_mut().enumerate().take(nv) {
        let win = q * len..(q + 1) * len;
        *v = rec.reconstruct(&scratch.wp[win.clone()]) + rec.reconstruct(&scratch.wm[win]);
    }
    frame.to_conserved(&gh, out);
    Ok(())
}

/// All interface fluxes of one line. `u` holds `cells` states (stride `nv`)
/// including `ghost` cells at each end; `out` receives
/// `cells - 2 ghost + 1` fluxes, the first at the left face of the first
/// interior cell.
pub fn line_fluxes<T: Real>(
    model: &Model,
    rec: &Reconstructor<T>,
    u: &[T],
    ghost: usize,
    out: &mut [T],
    s: &mut LineScratch<T>,
) -> Result<()> {
    let nv = model.nv();
    let cells = u.len() / nv;
    let r = rec.r();
    assert!(ghost >= r, "ghost width {ghost} below scheme half width {r}");
    let faces = cells - 2 * ghost + 1;
    debug_assert_eq!(out.len(), faces * nv);
    s.f.resize(u.len(), T::zero());
    for (uc, fc) in u.chunks_exact(nv).zip(s.f.chunks_exact_mut(nv)) {
        model.line_flux(uc, fc);
    }

    if nv == 1 {
        let (mut lo, mut hi) = (model.scalar_speed(u[0]), model.scalar_speed(u[0]));
        for &v in u {
            let a = model.scalar_speed(v);
            lo = lo.min(a);
            hi = hi.max(a);
        }
        if lo >= T::zero() {
            // Every wave moves right: pure upwind reconstruction of f.
            for k in 0..faces {
                let a = ghost - 1 + k;
                out[k] = rec.reconstruct(&s.f[a + 1 - r..a + r]);
            }
            return Ok(());
        }
        s.minus_rev.resize(cells, T::zero());
        if hi <= T::zero() {
            for i in 0..cells {
                s.minus_rev[cells - 1 - i] = s.f[i];
            }
            for k in 0..faces {
                let a = ghost - 1 + k;
                let b = cells - 1 - (a + r);
                out[k] = rec.reconstruct(&s.minus_rev[b..b + 2 * r - 1]);
            }
            return Ok(());
        }
        let alpha = lo.abs().max(hi.abs());
        let half = T::from_f64(0.5);
        s.plus.resize(cells, T::zero());
        for i in 0..cells {
            s.plus[i] = half * (s.f[i] + alpha * u[i]);
            s.minus_rev[cells - 1 - i] = half * (s.f[i] - alpha * u[i]);
        }
        for k in 0..faces {
            let a = ghost - 1 + k;
            let b = cells - 1 - (a + r);
            out[k] = rec.reconstruct(&s.plus[a + 1 - r..a + r])
                + rec.reconstruct(&s.minus_rev[b..b + 2 * r - 1]);
        }
        return Ok(());
    }

    let gamma = T::from_f64(model.gamma().expect("systems are Euler models"));
    let alpha = wave_speed_bound(model, u)?;
    let f = std::mem::take(&mut s.f);
    let result = (|| {
        for k in 0..faces {
            let a = ghost - 1 + k;
            let lo = (a + 1 - r) * nv;
            let hi = (a + 1 + r) * nv;
            characteristic_reconstruct(
                &u[lo..hi],
                &f[lo..hi],
                nv,
                alpha,
                gamma,
                rec,
                s,
                &mut out[k * nv..(k + 1) * nv],
            )?;
        }
        Ok(())
    })();
    s.f = f;
    result
}
