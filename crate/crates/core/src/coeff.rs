//! Reconstruction coefficients in exact rational arithmetic.
//!
//! For a stencil `S(j-m .. j+n)` the flux at `x_{j+1/2}` is `sum a_l f_{j+l}`
//! where `a_l` comes from the degree `m+n` polynomial whose cell averages
//! match the samples. The smoothness indicator of the same stencil is
//! `|sum b_l f_{j+l}|`, the scaled highest derivative of that polynomial.
//! Both are obtained by solving the cell-average system exactly; floating
//! point working copies are a single rounding of the rationals.

use std::fmt;
use std::io::Write;
use std::sync::OnceLock;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::real::Real;
use crate::reference_tables;

pub type Rational = BigRational;

/// Widest supported stencil.
pub const MAX_WIDTH: usize = 17;

/// Window `{j-m, ..., j+n}` relative to cell `j`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Stencil {
    pub m: usize,
    pub n: usize,
}

impl Stencil {
    pub const fn new(m: usize, n: usize) -> Self {
        Stencil { m, n }
    }

    pub const fn width(self) -> usize {
        self.m + self.n + 1
    }

    pub const fn degree(self) -> usize {
        self.m + self.n
    }

    /// Whether the stencil reaches at least one cell on each side of `j`.
    pub const fn is_two_sided(self) -> bool {
        self.m >= 1 && self.n >= 1
    }

    /// Whether the stencil contains both cells `j+k` and `j+k+1`.
    pub fn straddles(self, k: i64) -> bool {
        -(self.m as i64) <= k && k < self.n as i64
    }

    fn check(self) -> Result<()> {
        if self.width() > MAX_WIDTH {
            return Err(Error::StencilTooWide {
                m: self.m,
                n: self.n,
                width: self.width(),
                max: MAX_WIDTH,
            });
        }
        Ok(())
    }
}

impl fmt::Display for Stencil {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "S[j-{}, j+{}]", self.m, self.n)
    }
}

/// Candidate stencils of the 17-point scheme, highest order first. The
/// selection walks this list in order.
pub const CANDIDATES: [Stencil; 29] = {
    const fn s(m: usize, n: usize) -> Stencil {
        Stencil::new(m, n)
    }
    [
        s(8, 8), s(7, 8), s(8, 7), s(7, 7), s(8, 6), s(6, 7), s(7, 6), s(6, 6), s(7, 5),
        s(5, 6), s(6, 5), s(5, 5), s(6, 4), s(4, 5), s(5, 4), s(4, 4), s(5, 3), s(3, 4),
        s(4, 3), s(3, 3), s(2, 3), s(3, 2), s(2, 2), s(1, 2), s(2, 1), s(1, 1), s(0, 1),
        s(1, 0), s(0, 0),
    ]
};

/// Candidates of the `(2r-1)`-point scheme: the sub-list of [`CANDIDATES`]
/// that fits in `j-(r-1) ..= j+(r-1)`, in the same order.
pub fn candidate_pool(r: usize) -> Vec<Stencil> {
    CANDIDATES
        .iter()
        .copied()
        .filter(|s| s.m < r && s.n < r)
        .collect()
}

fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

fn half_pow(q: usize) -> Rational {
    Rational::new(BigInt::one(), BigInt::from(2).pow(q as u32))
}

/// Cell-average matrix with `h = 1`, `x_j = 0`: row `k` (cell `j-m+k`),
/// column `q` (monomial `x^q`).
fn cell_average_matrix(s: Stencil) -> Vec<Vec<Rational>> {
    let d = s.degree();
    (0..s.width())
        .map(|row| {
            let k = row as i64 - s.m as i64;
            let hi = rat(2 * k + 1, 2);
            let lo = rat(2 * k - 1, 2);
            (0..=d)
                .map(|q| {
                    let e = q as i32 + 1;
                    (pow(&hi, e) - pow(&lo, e)) / rat(e as i64, 1)
                })
                .collect()
        })
        .collect()
}

fn pow(x: &Rational, e: i32) -> Rational {
    let mut acc = Rational::one();
    for _ in 0..e {
        acc *= x;
    }
    acc
}

fn transpose(a: &[Vec<Rational>]) -> Vec<Vec<Rational>> {
    let n = a.len();
    (0..n).map(|i| (0..n).map(|j| a[j][i].clone()).collect()).collect()
}

/// Gauss-Jordan elimination on `[a | rhs]` columns; returns `a^{-1} rhs`.
fn solve(mut a: Vec<Vec<Rational>>, mut rhs: Vec<Vec<Rational>>) -> Vec<Vec<Rational>> {
    let n = a.len();
    for col in 0..n {
        let piv = (col..n)
            .find(|&r| !a[r][col].is_zero())
            .expect("cell-average matrix is nonsingular");
        a.swap(col, piv);
        rhs.swap(col, piv);
        let inv = a[col][col].recip();
        for v in a[col].iter_mut() {
            *v *= &inv;
        }
        for v in rhs[col].iter_mut() {
            *v *= &inv;
        }
        for r in 0..n {
            if r == col || a[r][col].is_zero() {
                continue;
            }
            let f = a[r][col].clone();
            for c in 0..n {
                let t = &a[col][c] * &f;
                a[r][c] -= t;
            }
            for c in 0..rhs[r].len() {
                let t = &rhs[col][c] * &f;
                rhs[r][c] -= t;
            }
        }
    }
    rhs
}

fn column(v: Vec<Rational>) -> Vec<Vec<Rational>> {
    v.into_iter().map(|x| vec![x]).collect()
}

fn flatten(v: Vec<Vec<Rational>>) -> Vec<Rational> {
    v.into_iter().map(|mut r| r.swap_remove(0)).collect()
}

/// Flux coefficients `a_l`, `l = -m ..= n`, for `f^+_{j+1/2}`.
pub fn generate_flux_coeffs(stencil: Stencil) -> Result<Vec<Rational>> {
    stencil.check()?;
    let at = transpose(&cell_average_matrix(stencil));
    let e = (0..=stencil.degree()).map(half_pow).collect();
    Ok(flatten(solve(at, column(e))))
}

/// Smoothness-indicator coefficients `b_l`, `l = -m ..= n`. The one-point
/// stencil yields `[0]`; its indicator is never consulted.
pub fn generate_is_coeffs(stencil: Stencil) -> Result<Vec<Rational>> {
    stencil.check()?;
    let d = stencil.degree();
    if d == 0 {
        return Ok(vec![Rational::zero()]);
    }
    let at = transpose(&cell_average_matrix(stencil));
    let fact: BigInt = (1..=d as u64).map(BigInt::from).product();
    let mut e = vec![Rational::zero(); d + 1];
    e[d] = Rational::from_integer(fact);
    Ok(flatten(solve(at, column(e))))
}

/// Jiang-Shu smoothness indicator of a stencil as a sum of squares,
/// `beta = sum_k w_k (v_k . f)^2`, with `v_k` over the stencil samples.
///
/// The integral `sum_l h^(2l-1) int_{I_j} (P^(l))^2` is expanded exactly
/// into a quadratic form and factored `L D L^T`.
pub fn jiang_shu_form(stencil: Stencil) -> Result<Vec<(Rational, Vec<Rational>)>> {
    stencil.check()?;
    let w = stencil.width();
    let d = stencil.degree();
    // Columns of A^{-1}: monomial coefficients as functionals of the samples.
    let a = cell_average_matrix(stencil);
    let ident = (0..w)
        .map(|i| (0..w).map(|j| if i == j { Rational::one() } else { Rational::zero() }).collect())
        .collect();
    let ainv = solve(a, ident);

    // Gram matrix of the derivatives in the monomial basis.
    let falling = |p: usize, l: usize| -> Rational {
        Rational::from_integer(((p - l + 1)..=p).map(|v| BigInt::from(v as u64)).product())
    };
    let moment = |s: usize| -> Rational {
        if s % 2 == 1 {
            Rational::zero()
        } else {
            half_pow(s) / rat(s as i64 + 1, 1)
        }
    };
    let mut gram = vec![vec![Rational::zero(); d + 1]; d + 1];
    for (p, row) in gram.iter_mut().enumerate() {
        for (q, g) in row.iter_mut().enumerate() {
            for l in 1..=p.min(q) {
                *g += falling(p, l) * falling(q, l) * moment(p + q - 2 * l);
            }
        }
    }
    // Q = Ainv^T G Ainv.
    let mut q = vec![vec![Rational::zero(); w]; w];
    let mut g_ainv = vec![vec![Rational::zero(); w]; d + 1];
    for p in 0..=d {
        for j in 0..w {
            let mut acc = Rational::zero();
            for r in 0..=d {
                if !gram[p][r].is_zero() {
                    acc += &gram[p][r] * &ainv[r][j];
                }
            }
            g_ainv[p][j] = acc;
        }
    }
    for i in 0..w {
        for j in 0..w {
            let mut acc = Rational::zero();
            for p in 0..=d {
                acc += &ainv[p][i] * &g_ainv[p][j];
            }
            q[i][j] = acc;
        }
    }
    Ok(ldl_sum_of_squares(&q))
}

fn ldl_sum_of_squares(q: &[Vec<Rational>]) -> Vec<(Rational, Vec<Rational>)> {
    let n = q.len();
    let mut l = vec![vec![Rational::zero(); n]; n];
    let mut dvals = vec![Rational::zero(); n];
    for k in 0..n {
        let mut dk = q[k][k].clone();
        for j in 0..k {
            dk -= &l[k][j] * &l[k][j] * &dvals[j];
        }
        l[k][k] = Rational::one();
        for i in (k + 1)..n {
            let mut num = q[i][k].clone();
            for j in 0..k {
                num -= &l[i][j] * &l[k][j] * &dvals[j];
            }
            if dk.is_zero() {
                assert!(num.is_zero(), "indicator form is not positive semidefinite");
            } else {
                l[i][k] = num / &dk;
            }
        }
        dvals[k] = dk;
    }
    (0..n)
        .filter(|&k| !dvals[k].is_zero())
        .map(|k| (dvals[k].clone(), (0..n).map(|i| l[i][k].clone()).collect()))
        .collect()
}

/// Exact coefficients of one stencil.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientSet {
    pub stencil: Stencil,
    pub flux_coeffs: Vec<Rational>,
    pub is_coeffs: Vec<Rational>,
}

impl CoefficientSet {
    pub fn generate(stencil: Stencil) -> Result<Self> {
        Ok(CoefficientSet {
            stencil,
            flux_coeffs: generate_flux_coeffs(stencil)?,
            is_coeffs: generate_is_coeffs(stencil)?,
        })
    }

    pub fn flux_as<T: Real>(&self) -> Vec<T> {
        self.flux_coeffs.iter().map(T::from_ratio).collect()
    }

    pub fn is_as<T: Real>(&self) -> Vec<T> {
        self.is_coeffs.iter().map(T::from_ratio).collect()
    }
}

/// Coefficient sets of all [`CANDIDATES`], generated once per process.
pub fn candidate_sets() -> &'static [CoefficientSet] {
    static SETS: OnceLock<Vec<CoefficientSet>> = OnceLock::new();
    SETS.get_or_init(|| {
        CANDIDATES
            .iter()
            .map(|&s| CoefficientSet::generate(s).expect("candidates are within the width limit"))
            .collect()
    })
}

/// Looks up a candidate's coefficients, generating non-candidates on the fly.
pub fn coefficient_set(stencil: Stencil) -> Result<CoefficientSet> {
    match candidate_sets().iter().find(|c| c.stencil == stencil) {
        Some(c) => Ok(c.clone()),
        None => CoefficientSet::generate(stencil),
    }
}

/// Coefficients attached to a stencil anchored at `j + anchor`, all
/// targeting the same interface `x_{j+1/2}`.
#[derive(Clone, Debug, PartialEq)]
pub struct AnchoredCoeffs {
    pub stencil: Stencil,
    pub anchor: i64,
    pub coeffs: Vec<Rational>,
}

/// Reflects a flux formula about `x_{j+1/2}`: the cells `j+anchor-m ..=
/// j+anchor+n` map to `j+1-anchor-n ..= j+1-anchor+m` and the coefficient
/// list reverses. Turns `f^+` formulas into `f^-` formulas and back.
pub fn mirror_coeffs(c: &AnchoredCoeffs) -> AnchoredCoeffs {
    AnchoredCoeffs {
        stencil: Stencil::new(c.stencil.n, c.stencil.m),
        anchor: 1 - c.anchor,
        coeffs: c.coeffs.iter().rev().cloned().collect(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CoeffKind {
    Flux,
    Indicator,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mismatch {
    pub stencil: Stencil,
    pub kind: CoeffKind,
    pub l: i64,
    pub expected: Option<Rational>,
    pub generated: Option<Rational>,
}

impl fmt::Display for Mismatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let show = |r: &Option<Rational>| r.as_ref().map_or("-".to_string(), |v| v.to_string());
        write!(
            f,
            "{} {:?} l={}: expected {}, generated {}",
            self.stencil,
            self.kind,
            self.l,
            show(&self.expected),
            show(&self.generated)
        )
    }
}

#[derive(Clone, Debug, Default)]
pub struct ValidationReport {
    pub stencils_checked: usize,
    pub stencils_matched: usize,
    pub entries_checked: usize,
    pub mismatches: Vec<Mismatch>,
    pub errata: Vec<Erratum>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.mismatches.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{}/{} stencils matched ({} coefficients compared, {} mismatches)",
            self.stencils_matched,
            self.stencils_checked,
            self.entries_checked,
            self.mismatches.len()
        )?;
        for e in &self.errata {
            writeln!(f, "  erratum: {e}")?;
        }
        for m in &self.mismatches {
            writeln!(f, "  mismatch: {m}")?;
        }
        Ok(())
    }
}

/// Printed reference coefficients in an editable form.
#[derive(Clone, Debug)]
pub struct ReferenceTables {
    pub flux: Vec<(Stencil, Vec<Rational>)>,
    /// Empty list for the one-point stencil, which has no printed indicator.
    pub indicator: Vec<(Stencil, Vec<Rational>)>,
    /// Corrections already applied to the lists above.
    pub errata: Vec<Erratum>,
}

impl ReferenceTables {
    pub fn embedded() -> Self {
        let flux = reference_tables::FLUX
            .iter()
            .map(|&(m, n, c)| (Stencil::new(m, n), c.iter().map(|&(a, b)| rat(a, b)).collect()))
            .collect();
        let indicator = reference_tables::INDICATOR
            .iter()
            .map(|&(m, n, c)| (Stencil::new(m, n), c.iter().map(|&a| rat(a, 1)).collect()))
            .collect();
        let mut tables = ReferenceTables {
            flux,
            indicator,
            errata: Vec::new(),
        };
        for &(m, n, l, printed, corrected) in reference_tables::INDICATOR_ERRATA {
            let stencil = Stencil::new(m, n);
            let (_, list) = tables
                .indicator
                .iter_mut()
                .find(|(s, _)| *s == stencil)
                .expect("erratum refers to a tabulated stencil");
            let slot = &mut list[(l + m as i64) as usize];
            assert_eq!(*slot, rat(printed, 1), "erratum does not match the printed entry");
            *slot = rat(corrected, 1);
            tables.errata.push(Erratum {
                stencil,
                kind: CoeffKind::Indicator,
                l,
                printed: rat(printed, 1),
                corrected: rat(corrected, 1),
            });
        }
        tables
    }
}

/// A printed table entry replaced before comparison.
#[derive(Clone, Debug, PartialEq)]
pub struct Erratum {
    pub stencil: Stencil,
    pub kind: CoeffKind,
    pub l: i64,
    pub printed: Rational,
    pub corrected: Rational,
}

impl fmt::Display for Erratum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {:?} l={}: printed {}, corrected to {}",
            self.stencil, self.kind, self.l, self.printed, self.corrected
        )
    }
}

fn compare(
    stencil: Stencil,
    kind: CoeffKind,
    expected: &[Rational],
    generated: &[Rational],
    out: &mut Vec<Mismatch>,
) -> usize {
    let len = expected.len().max(generated.len());
    for i in 0..len {
        let (e, g) = (expected.get(i), generated.get(i));
        if e != g {
            out.push(Mismatch {
                stencil,
                kind,
                l: i as i64 - stencil.m as i64,
                expected: e.cloned(),
                generated: g.cloned(),
            });
        }
    }
    len
}

/// Compares generated coefficients with the given reference tables.
pub fn validate_against(tables: &ReferenceTables) -> Result<ValidationReport> {
    let mut report = ValidationReport {
        errata: tables.errata.clone(),
        ..ValidationReport::default()
    };
    for (stencil, expected) in &tables.flux {
        let before = report.mismatches.len();
        let generated = generate_flux_coeffs(*stencil)?;
        report.entries_checked +=
            compare(*stencil, CoeffKind::Flux, expected, &generated, &mut report.mismatches);
        if let Some((_, exp_is)) = tables.indicator.iter().find(|(s, _)| s == stencil) {
            let generated = if stencil.width() == 1 {
                Vec::new()
            } else {
                generate_is_coeffs(*stencil)?
            };
            report.entries_checked += compare(
                *stencil,
                CoeffKind::Indicator,
                exp_is,
                &generated,
                &mut report.mismatches,
            );
        } else {
            report.mismatches.push(Mismatch {
                stencil: *stencil,
                kind: CoeffKind::Indicator,
                l: 0,
                expected: None,
                generated: None,
            });
        }
        report.stencils_checked += 1;
        if report.mismatches.len() == before {
            report.stencils_matched += 1;
        }
    }
    Ok(report)
}

/// Validates against the embedded reference tables.
pub fn validate_reference_tables() -> Result<ValidationReport> {
    validate_against(&ReferenceTables::embedded())
}

/// Writes every candidate's coefficients as
/// `kind,m,n,l,numerator,denominator` rows.
pub fn write_coeff_csv<W: Write>(mut w: W) -> Result<()> {
    writeln!(w, "kind,m,n,l,numerator,denominator")?;
    for set in candidate_sets() {
        let s = set.stencil;
        for (kind, list) in [("flux", &set.flux_coeffs), ("indicator", &set.is_coeffs)] {
            for (i, c) in list.iter().enumerate() {
                writeln!(
                    w,
                    "{kind},{},{},{},{},{}",
                    s.m,
                    s.n,
                    i as i64 - s.m as i64,
                    c.numer(),
                    c.denom()
                )?;
            }
        }
    }
    Ok(())
}

/// `(-1)^(d-k) C(d, k)`: the d-th forward difference weights.
pub fn binomial_difference(d: usize) -> Vec<Rational> {
    let mut c = BigInt::one();
    let mut out = Vec::with_capacity(d + 1);
    for k in 0..=d {
        let v = if (d - k) % 2 == 0 { c.clone() } else { -c.clone() };
        out.push(Rational::from_integer(v));
        c = c * BigInt::from((d - k) as u64) / BigInt::from((k + 1) as u64);
    }
    out
}

/// Sum of a rational list.
pub fn rational_sum(v: &[Rational]) -> Rational {
    v.iter().fold(Rational::zero(), |a, b| a + b)
}

/// Absolute value of an exact dot product, handy in tests and reports.
pub fn rational_abs_dot(c: &[Rational], f: &[Rational]) -> Rational {
    c.iter().zip(f).fold(Rational::zero(), |a, (x, y)| a + x * y).abs()
}
