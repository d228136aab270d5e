//! Explicit SSP Runge-Kutta integrators: the three-stage SSP-RK3 for
//! nonlinear problems and the linear SSP-RK(m, m-1) family.

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::coeff::Rational;
use crate::error::{Error, Result};
use crate::real::Real;

/// Semi-discrete operator `L`: writes `du/dt` at time `t` into `out`.
pub trait RhsOperator<T> {
    fn eval(&mut self, t: f64, u: &[T], out: &mut [T]) -> Result<()>;
}

impl<T, F> RhsOperator<T> for F
where
    F: FnMut(f64, &[T], &mut [T]) -> Result<()>,
{
    fn eval(&mut self, t: f64, u: &[T], out: &mut [T]) -> Result<()> {
        self(t, u, out)
    }
}

fn check_finite<T: Real>(v: &[T], stage: usize, t: f64) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::StageNaN { stage, t })
    }
}

/// Stage buffers owned by the integrator.
#[derive(Clone, Debug, Default)]
pub struct Workspace<T> {
    k: Vec<T>,
    stage: Vec<T>,
    acc: Vec<T>,
}

impl<T: Real> Workspace<T> {
    pub fn new() -> Self {
        Workspace {
            k: Vec::new(),
            stage: Vec::new(),
            acc: Vec::new(),
        }
    }

    fn fit(&mut self, n: usize) {
        for b in [&mut self.k, &mut self.stage, &mut self.acc] {
            b.clear();
            b.resize(n, T::zero());
        }
    }
}

/// One SSP-RK3 step in place. Stage `s` (1-based) reports its index on
/// a non-finite right-hand side.
pub fn ssp_rk3_step<T: Real, L: RhsOperator<T> + ?Sized>(
    u: &mut [T],
    t: f64,
    dt: T,
    rhs: &mut L,
    ws: &mut Workspace<T>,
) -> Result<()> {
    let n = u.len();
    ws.fit(n);
    let dtf = dt.to_f64();
    // Shu-Osher form rewritten as increments on u^n, which keeps a
    // vanishing operator an exact identity.
    let q14 = T::from_f64(0.25);
    let q23 = T::from_ratio(&ratio(2, 3));

    rhs.eval(t, u, &mut ws.k)?;
    check_finite(&ws.k, 1, t)?;
    for i in 0..n {
        ws.stage[i] = u[i] + dt * ws.k[i];
    }

    rhs.eval(t + dtf, &ws.stage, &mut ws.k)?;
    check_finite(&ws.k, 2, t + dtf)?;
    for i in 0..n {
        ws.stage[i] = u[i] + q14 * (ws.stage[i] + dt * ws.k[i] - u[i]);
    }

    rhs.eval(t + 0.5 * dtf, &ws.stage, &mut ws.k)?;
    check_finite(&ws.k, 3, t + 0.5 * dtf)?;
    for i in 0..n {
        u[i] += q23 * (ws.stage[i] + dt * ws.k[i] - u[i]);
    }
    Ok(())
}

fn ratio(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// Coefficients `alpha_{m,0..m-1}` of the linear SSP-RK(m, m-1) scheme.
#[derive(Clone, Debug, PartialEq)]
pub struct LssprkTableau {
    pub m: usize,
    pub alphas: Vec<Rational>,
}

impl LssprkTableau {
    pub fn alphas_as<T: Real>(&self) -> Vec<T> {
        self.alphas.iter().map(T::from_ratio).collect()
    }

    /// Coefficients of the one-step amplification polynomial in `z = dt*lambda`,
    /// lowest degree first. Its degree is `m`.
    pub fn amplification(&self) -> Vec<Rational> {
        let m = self.m;
        let mut poly = vec![Rational::zero(); m + 1];
        let half = ratio(1, 2);
        // (1 + z/2)^k expanded with binomial coefficients.
        let expand = |k: usize| -> Vec<Rational> {
            let mut c = vec![Rational::zero(); k + 1];
            let mut binom = BigInt::one();
            let mut h = Rational::one();
            for (i, ci) in c.iter_mut().enumerate() {
                *ci = Rational::from_integer(binom.clone()) * &h;
                binom = binom * BigInt::from(k - i) / BigInt::from(i + 1);
                h *= &half;
            }
            c
        };
        for k in 0..m {
            let power = if k == m - 1 { m } else { k };
            for (i, c) in expand(power).into_iter().enumerate() {
                poly[i] += &self.alphas[k] * c;
            }
        }
        poly
    }
}

pub fn lssprk_tableau(m: usize) -> Result<LssprkTableau> {
    if !(2..=18).contains(&m) {
        return Err(Error::StageCount(m));
    }
    let mut alphas = vec![Rational::zero(), Rational::one()];
    for mm in 3..=m {
        let prev = alphas;
        let mut next = vec![Rational::zero(); mm];
        for k in 1..=mm - 2 {
            next[k] = ratio(2, k as i64) * &prev[k - 1];
        }
        next[mm - 1] = ratio(2, mm as i64) * &prev[mm - 2];
        let rest = next[1..].iter().fold(Rational::zero(), |a, b| a + b);
        next[0] = Rational::one() - rest;
        alphas = next;
    }
    Ok(LssprkTableau { m, alphas })
}

/// One linear SSP-RK(m, m-1) step in place: `m-1` half steps, then the
/// weighted combination closed by a final half step.
pub fn lssprk_step<T: Real, L: RhsOperator<T> + ?Sized>(
    u: &mut [T],
    t: f64,
    dt: T,
    rhs: &mut L,
    alphas: &[T],
    ws: &mut Workspace<T>,
) -> Result<()> {
    let m = alphas.len();
    let n = u.len();
    ws.fit(n);
    let half_dt = dt * T::from_f64(0.5);
    let dtf = dt.to_f64();
    // Since the weights sum to one, accumulate alpha_k (u^(k) - u^n) and add
    // u^n at the end; a vanishing operator then leaves u untouched exactly.
    ws.stage.copy_from_slice(u);
    for s in 1..=m {
        let ts = t + 0.5 * dtf * (s - 1) as f64;
        rhs.eval(ts, &ws.stage, &mut ws.k)?;
        check_finite(&ws.k, s, ts)?;
        for i in 0..n {
            ws.stage[i] += half_dt * ws.k[i];
        }
        if s < m - 1 {
            let a = alphas[s];
            if a != T::zero() {
                for i in 0..n {
                    ws.acc[i] += a * (ws.stage[i] - u[i]);
                }
            }
        }
    }
    let a = alphas[m - 1];
    for i in 0..n {
        u[i] += ws.acc[i] + a * (ws.stage[i] - u[i]);
    }
    Ok(())
}
