//! Per-interface flux reconstruction: ENO-MR stencil selection and the
//! WENO-AO(5,3) / WENO-AO(9,5,3) comparison schemes.
//!
//! Every kernel takes a window of `2r-1` samples centred on cell `j` and
//! returns the flux at `x_{j+1/2}` built from the `f^+` part. The `f^-`
//! part is obtained by feeding the window reflected about the interface.

use std::fmt;
use std::str::FromStr;

use crate::coeff::{self, candidate_pool, jiang_shu_form, Stencil};
use crate::config::ParseError;
use crate::real::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SchemeKind {
    EnoMr,
    WenoAo53,
    WenoAo953,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WenoParams {
    pub epsilon: f64,
    pub power_p: u32,
    pub gamma_hi: f64,
    pub gamma_lo: f64,
}

impl Default for WenoParams {
    fn default() -> Self {
        WenoParams {
            epsilon: 1e-12,
            power_p: 2,
            gamma_hi: 0.85,
            gamma_lo: 0.85,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReconstructionScheme {
    pub kind: SchemeKind,
    /// Half width: the kernel reads `r-1` cells on each side of `j`.
    pub r: usize,
    /// Ignored by ENO-MR.
    pub weno: WenoParams,
}

impl ReconstructionScheme {
    pub fn eno_mr(r: usize) -> Self {
        assert!(matches!(r, 3 | 5 | 7 | 9), "ENO-MR half width must be 3, 5, 7 or 9");
        ReconstructionScheme {
            kind: SchemeKind::EnoMr,
            r,
            weno: WenoParams::default(),
        }
    }

    pub fn weno_ao53() -> Self {
        ReconstructionScheme {
            kind: SchemeKind::WenoAo53,
            r: 3,
            weno: WenoParams::default(),
        }
    }

    pub fn weno_ao953() -> Self {
        ReconstructionScheme {
            kind: SchemeKind::WenoAo953,
            r: 5,
            weno: WenoParams::default(),
        }
    }

    /// Design order of accuracy.
    pub fn order(&self) -> usize {
        2 * self.r - 1
    }

    pub fn name(&self) -> String {
        match self.kind {
            SchemeKind::EnoMr => format!("eno-mr{}", self.order()),
            SchemeKind::WenoAo53 => "weno-ao53".into(),
            SchemeKind::WenoAo953 => "weno-ao953".into(),
        }
    }

    pub fn all() -> [ReconstructionScheme; 6] {
        [
            Self::eno_mr(3),
            Self::eno_mr(5),
            Self::eno_mr(7),
            Self::eno_mr(9),
            Self::weno_ao53(),
            Self::weno_ao953(),
        ]
    }

    pub fn prepare<T: Real>(&self) -> Reconstructor<T> {
        Reconstructor::new(*self)
    }
}

impl fmt::Display for ReconstructionScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for ReconstructionScheme {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, ParseError> {
        match s.trim().to_ascii_lowercase().as_str() {
            "eno-mr5" => Ok(Self::eno_mr(3)),
            "eno-mr9" => Ok(Self::eno_mr(5)),
            "eno-mr13" => Ok(Self::eno_mr(7)),
            "eno-mr17" => Ok(Self::eno_mr(9)),
            "weno-ao53" => Ok(Self::weno_ao53()),
            "weno-ao953" => Ok(Self::weno_ao953()),
            other => Err(ParseError::new(format!(
                "unknown scheme '{other}' (expected eno-mr5|eno-mr9|eno-mr13|eno-mr17|weno-ao53|weno-ao953)"
            ))),
        }
    }
}

/// Which formula produced an ENO-MR flux.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Choice {
    Stencil(Stencil),
    /// Minmod fallback. `effective` is the stencil the limited slope used:
    /// `S(0,1)` for the right difference, `S(1,0)` for the left one, `S(0,0)`
    /// when the slope is zero.
    Minmod { effective: Stencil },
}

impl Choice {
    /// Cells the reconstruction actually drew on.
    pub fn effective_stencil(&self) -> Stencil {
        match *self {
            Choice::Stencil(s) => s,
            Choice::Minmod { effective } => effective,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SelectionResult<T> {
    pub chosen: Choice,
    pub flux_value: T,
    pub indicators_evaluated: usize,
}

#[inline]
pub fn minmod<T: Real>(a: T, b: T) -> T {
    if a * b <= T::zero() {
        T::zero()
    } else if a.abs() <= b.abs() {
        a
    } else {
        b
    }
}

/// `min(IS_L, IS_R)` over `f_{j-2} ..= f_{j+2}`.
#[inline]
pub fn baseline_indicator<T: Real>(w: &[T]) -> T {
    debug_assert_eq!(w.len(), 5);
    let two = T::from_f64(2.0);
    let is_l = (w[2] - w[1]).abs().max((w[2] - two * w[1] + w[0]).abs());
    let is_r = (w[3] - w[2]).abs().max((w[4] - two * w[3] + w[2]).abs());
    is_l.min(is_r)
}

#[inline]
fn dot<T: Real>(c: &[T], f: &[T]) -> T {
    let mut acc = T::zero();
    for (a, b) in c.iter().zip(f) {
        acc += *a * *b;
    }
    acc
}

/// `|sum b_l f_{j+l}|` over the samples of one stencil.
#[inline]
pub fn stencil_indicator<T: Real>(window: &[T], is_coeffs: &[T]) -> T {
    debug_assert_eq!(window.len(), is_coeffs.len());
    dot(is_coeffs, window).abs()
}

/// Floating point copy of one candidate.
#[derive(Clone, Debug)]
pub struct PreparedStencil<T> {
    pub stencil: Stencil,
    pub flux: Vec<T>,
    pub indicator: Vec<T>,
}

/// Weighted squares `sum w_k (v_k . f)^2` for a Jiang-Shu indicator.
#[derive(Clone, Debug)]
pub struct SmoothnessForm<T> {
    pub stencil: Stencil,
    terms: Vec<(T, Vec<T>)>,
}

impl<T: Real> SmoothnessForm<T> {
    pub fn new(stencil: Stencil) -> Self {
        let terms = jiang_shu_form(stencil)
            .expect("AO stencils are narrow")
            .iter()
            .map(|(w, v)| (T::from_ratio(w), v.iter().map(T::from_ratio).collect()))
            .collect();
        SmoothnessForm { stencil, terms }
    }

    #[inline]
    pub fn eval(&self, f: &[T]) -> T {
        let mut beta = T::zero();
        for (w, v) in &self.terms {
            let s = dot(v, f);
            beta += *w * s * s;
        }
        beta
    }
}

#[derive(Clone, Debug)]
struct AoParts<T> {
    eps: T,
    p: u32,
    gamma_hi: T,
    d_lo: [T; 3],
    lo_flux: [Vec<T>; 3],
    lo_beta: [SmoothnessForm<T>; 3],
    flux5: Vec<T>,
    beta5: SmoothnessForm<T>,
    flux9: Vec<T>,
    beta9: SmoothnessForm<T>,
}

/// A scheme with all coefficients rounded to `T`, ready for repeated use.
#[derive(Clone, Debug)]
pub struct Reconstructor<T> {
    pub scheme: ReconstructionScheme,
    /// Two-sided candidates in walk order.
    candidates: Vec<PreparedStencil<T>>,
    ao: Option<Box<AoParts<T>>>,
}

impl<T: Real> Reconstructor<T> {
    pub fn new(scheme: ReconstructionScheme) -> Self {
        let prep = |s: Stencil| {
            let set = coeff::coefficient_set(s).expect("stencil within width limit");
            PreparedStencil {
                stencil: s,
                flux: set.flux_as(),
                indicator: set.is_as(),
            }
        };
        match scheme.kind {
            SchemeKind::EnoMr => Reconstructor {
                scheme,
                candidates: candidate_pool(scheme.r)
                    .into_iter()
                    .filter(|s| s.is_two_sided())
                    .map(prep)
                    .collect(),
                ao: None,
            },
            SchemeKind::WenoAo53 | SchemeKind::WenoAo953 => {
                let w = scheme.weno;
                let lo = [Stencil::new(2, 0), Stencil::new(1, 1), Stencil::new(0, 2)];
                let lo_flux = lo.map(|s| prep(s).flux);
                let lo_beta = lo.map(SmoothnessForm::new);
                let g_hi = w.gamma_hi;
                let d_side = (1.0 - g_hi) * (1.0 - w.gamma_lo) / 2.0;
                let d_mid = (1.0 - g_hi) * w.gamma_lo;
                let ao = AoParts {
                    eps: T::from_f64(w.epsilon),
                    p: w.power_p,
                    gamma_hi: T::from_f64(g_hi),
                    d_lo: [T::from_f64(d_side), T::from_f64(d_mid), T::from_f64(d_side)],
                    lo_flux,
                    lo_beta,
                    flux5: prep(Stencil::new(2, 2)).flux,
                    beta5: SmoothnessForm::new(Stencil::new(2, 2)),
                    flux9: prep(Stencil::new(4, 4)).flux,
                    beta9: SmoothnessForm::new(Stencil::new(4, 4)),
                };
                Reconstructor {
                    scheme,
                    candidates: Vec::new(),
                    ao: Some(Box::new(ao)),
                }
            }
        }
    }

    pub fn r(&self) -> usize {
        self.scheme.r
    }

    pub fn window_len(&self) -> usize {
        2 * self.scheme.r - 1
    }

    /// Two-sided ENO-MR candidates in the order they are tried.
    pub fn candidates(&self) -> &[PreparedStencil<T>] {
        &self.candidates
    }

    /// Flux at `x_{j+1/2}` from a window `f_{j-r+1} ..= f_{j+r-1}`.
    #[inline]
    pub fn reconstruct(&self, w: &[T]) -> T {
        match &self.ao {
            None => enomr_select(w, self).flux_value,
            Some(ao) => match self.scheme.kind {
                SchemeKind::WenoAo53 => ao53(ao, w),
                _ => ao953(ao, w),
            },
        }
    }
}

/// ENO-MR selection on a window of `2r-1` samples centred on `j`.
pub fn enomr_select<T: Real>(w: &[T], rec: &Reconstructor<T>) -> SelectionResult<T> {
    let c = rec.r() - 1;
    debug_assert_eq!(w.len(), 2 * c + 1);
    let is0 = baseline_indicator(&w[c - 2..c + 3]);
    let mut evaluated = 0;
    // With IS_0 = 0 no indicator can be strictly smaller.
    if is0 > T::zero() {
        for cand in &rec.candidates {
            let lo = c - cand.stencil.m;
            let win = &w[lo..lo + cand.stencil.width()];
            evaluated += 1;
            if stencil_indicator(win, &cand.indicator) < is0 {
                return SelectionResult {
                    chosen: Choice::Stencil(cand.stencil),
                    flux_value: dot(&cand.flux, win),
                    indicators_evaluated: evaluated,
                };
            }
        }
    }
    let (fj, a, b) = (w[c], w[c + 1] - w[c], w[c] - w[c - 1]);
    let slope = minmod(a, b);
    let effective = if slope == T::zero() {
        Stencil::new(0, 0)
    } else if slope == a {
        Stencil::new(0, 1)
    } else {
        Stencil::new(1, 0)
    };
    SelectionResult {
        chosen: Choice::Minmod { effective },
        flux_value: fj + T::from_f64(0.5) * slope,
        indicators_evaluated: evaluated,
    }
}

/// Jiang-Shu indicator of the `k`-th three-point sub-stencil (`k = 0`:
/// `S(2,0)`, `1`: `S(1,1)`, `2`: `S(0,2)`) or, for `width = 5`, of the
/// five-point stencil `S(2,2)`. `window` holds exactly the stencil samples.
pub fn jiang_shu_beta<T: Real>(window: &[T], width: usize, k: usize) -> T {
    let stencil = match (width, k) {
        (3, 0) => Stencil::new(2, 0),
        (3, 1) => Stencil::new(1, 1),
        (3, 2) => Stencil::new(0, 2),
        (5, _) => Stencil::new(2, 2),
        (9, _) => Stencil::new(4, 4),
        _ => panic!("unsupported sub-stencil width {width}, index {k}"),
    };
    SmoothnessForm::<T>::new(stencil).eval(window)
}

/// WENO-AO flux from a `2r-1` window; dispatches on the scheme kind.
pub fn weno_ao_flux<T: Real>(w: &[T], rec: &Reconstructor<T>) -> T {
    assert!(rec.ao.is_some(), "weno_ao_flux needs a WENO-AO scheme");
    rec.reconstruct(w)
}

#[inline]
fn weight<T: Real>(d: T, tau: T, beta: T, eps: T, p: u32) -> T {
    d * (T::one() + (tau / (beta + eps)).powi(p))
}

/// AO(2q-1, 3) combination around centre `c` given the high-order flux
/// value and its indicator, shared by AO(5,3) and AO(9,3).
#[inline]
fn ao_level<T: Real>(ao: &AoParts<T>, w: &[T], c: usize, p_hi: T, beta_hi: T) -> T {
    let mut p_lo = [T::zero(); 3];
    let mut b_lo = [T::zero(); 3];
    for k in 0..3 {
        let win = &w[c + k - 2..c + k + 1];
        p_lo[k] = dot(&ao.lo_flux[k], win);
        b_lo[k] = ao.lo_beta[k].eval(win);
    }
    let three = T::from_f64(3.0);
    let tau = ((beta_hi - b_lo[0]).abs() + (beta_hi - b_lo[1]).abs() + (beta_hi - b_lo[2]).abs()) / three;
    let a_hi = weight(ao.gamma_hi, tau, beta_hi, ao.eps, ao.p);
    let a_lo = [
        weight(ao.d_lo[0], tau, b_lo[0], ao.eps, ao.p),
        weight(ao.d_lo[1], tau, b_lo[1], ao.eps, ao.p),
        weight(ao.d_lo[2], tau, b_lo[2], ao.eps, ao.p),
    ];
    let sum = a_hi + a_lo[0] + a_lo[1] + a_lo[2];
    let w_hi = a_hi / sum;
    let mut corrected = p_hi;
    let mut lower = T::zero();
    for k in 0..3 {
        corrected -= ao.d_lo[k] * p_lo[k];
        lower += (a_lo[k] / sum) * p_lo[k];
    }
    (w_hi / ao.gamma_hi) * corrected + lower
}

fn ao53<T: Real>(ao: &AoParts<T>, w: &[T]) -> T {
    let win5 = &w[0..5];
    ao_level(ao, w, 2, dot(&ao.flux5, win5), ao.beta5.eval(win5))
}

fn ao953<T: Real>(ao: &AoParts<T>, w: &[T]) -> T {
    let c = 4;
    let win5 = &w[c - 2..c + 3];
    let (p5, b5) = (dot(&ao.flux5, win5), ao.beta5.eval(win5));
    let (p9, b9) = (dot(&ao.flux9, w), ao.beta9.eval(w));
    let p93 = ao_level(ao, w, c, p9, b9);
    let p53 = ao_level(ao, w, c, p5, b5);
    let sigma = (b9 - b5).abs();
    let g = ao.gamma_hi;
    let a93 = g * (T::one() + sigma / (b9 + ao.eps));
    let a53 = (T::one() - g) * (T::one() + sigma / (b5 + ao.eps));
    let sum = a93 + a53;
    ((a93 / sum) / g) * (p93 - (T::one() - g) * p53) + (a53 / sum) * p53
}
