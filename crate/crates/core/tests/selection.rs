//! Selection against an independent all-indicators reference, jump
//! exclusion, and scale invariance.

use enomr::coeff::{generate_flux_coeffs, generate_is_coeffs, Stencil};
use enomr::reconstruct::{enomr_select, Choice, ReconstructionScheme, Reconstructor};
use enomr::Real;
use proptest::prelude::*;

const ORDER: [(usize, usize); 29] = [
    (8, 8),
    (7, 8),
    (8, 7),
    (7, 7),
    (8, 6),
    (6, 7),
    (7, 6),
    (6, 6),
    (7, 5),
    (5, 6),
    (6, 5),
    (5, 5),
    (6, 4),
    (4, 5),
    (5, 4),
    (4, 4),
    (5, 3),
    (3, 4),
    (4, 3),
    (3, 3),
    (2, 3),
    (3, 2),
    (2, 2),
    (1, 2),
    (2, 1),
    (1, 1),
    (0, 1),
    (1, 0),
    (0, 0),
];

struct Naive {
    c: usize,
    cands: Vec<(usize, usize, Vec<f64>, Vec<f64>)>,
}

impl Naive {
    fn new(r: usize) -> Self {
        let cands = ORDER
            .iter()
            .filter(|&&(m, n)| m >= 1 && n >= 1 && m < r && n < r)
            .map(|&(m, n)| {
                let s = Stencil::new(m, n);
                let to = |v: Vec<_>| v.iter().map(f64::from_ratio).collect::<Vec<f64>>();
                (m, n, to(generate_flux_coeffs(s).unwrap()), to(generate_is_coeffs(s).unwrap()))
            })
            .collect();
        Naive { c: r - 1, cands }
    }

    /// Evaluates every indicator first, then takes the first candidate
    /// under the baseline, else the minmod fallback.
    fn flux(&self, w: &[f64]) -> (f64, Option<(usize, usize)>) {
        let c = self.c;
        let d1l = (w[c] - w[c - 1]).abs();
        let d2l = (w[c] - 2.0 * w[c - 1] + w[c - 2]).abs();
        let d1r = (w[c + 1] - w[c]).abs();
        let d2r = (w[c + 2] - 2.0 * w[c + 1] + w[c]).abs();
        let is0 = d1l.max(d2l).min(d1r.max(d2r));
        let all: Vec<f64> = self
            .cands
            .iter()
            .map(|(m, _, _, b)| {
                let mut s = 0.0;
                for (k, bk) in b.iter().enumerate() {
                    s += bk * w[c - m + k];
                }
                s.abs()
            })
            .collect();
        for (i, (m, n, a, _)) in self.cands.iter().enumerate() {
            if all[i] < is0 {
                let mut s = 0.0;
                for (k, ak) in a.iter().enumerate() {
                    s += ak * w[c - m + k];
                }
                return (s, Some((*m, *n)));
            }
        }
        let (a, b) = (w[c + 1] - w[c], w[c] - w[c - 1]);
        let slope = if a * b <= 0.0 {
            0.0
        } else if a.abs() <= b.abs() {
            a
        } else {
            b
        };
        (w[c] + 0.5 * slope, None)
    }
}

fn window_strategy(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop_oneof![
        // Arbitrary values.
        prop::collection::vec(-1e3f64..1e3, len),
        // Smooth samples with small spacing.
        (-2.0f64..2.0, 0.1f64..30.0, 0.0f64..6.3, 1e-4f64..0.2).prop_map(move |(a, k, ph, h)| {
            (0..len).map(|i| a * (k * i as f64 * h + ph).sin()).collect()
        }),
        // Smooth plus a jump.
        (0.1f64..10.0, 0.0f64..6.3, 0..len, -5.0f64..5.0).prop_map(move |(k, ph, p, jump)| {
            (0..len)
                .map(|i| (k * i as f64 * 1e-2 + ph).cos() + if i >= p { jump } else { 0.0 })
                .collect()
        }),
        // Low-degree polynomials, which hit the indicator ties.
        (-3i32..3, -3i32..3, -3i32..3).prop_map(move |(a, b, c)| {
            (0..len)
                .map(|i| {
                    let x = i as f64;
                    a as f64 + b as f64 * x + c as f64 * x * x
                })
                .collect()
        }),
    ]
}

fn check_oracle(r: usize, cases: u32) {
    let rec = Reconstructor::<f64>::new(ReconstructionScheme::eno_mr(r));
    let naive = Naive::new(r);
    let mut runner = proptest::test_runner::TestRunner::new(ProptestConfig::with_cases(cases));
    runner
        .run(&window_strategy(2 * r - 1), |w| {
            let got = enomr_select(&w, &rec);
            let (want, stencil) = naive.flux(&w);
            prop_assert_eq!(got.flux_value.to_bits(), want.to_bits(), "window {:?}", w);
            match (got.chosen, stencil) {
                (Choice::Stencil(s), Some((m, n))) => prop_assert_eq!((s.m, s.n), (m, n)),
                (Choice::Minmod { .. }, None) => {}
                (a, b) => prop_assert!(false, "choice {:?} vs {:?}", a, b),
            }
            Ok(())
        })
        .unwrap();
}

#[test]
fn oracle_equivalence_eno_mr5() {
    check_oracle(3, 2000);
}

#[test]
fn oracle_equivalence_eno_mr9() {
    check_oracle(5, 2000);
}

#[test]
fn oracle_equivalence_eno_mr13() {
    check_oracle(7, 2000);
}

#[test]
fn oracle_equivalence_eno_mr17() {
    check_oracle(9, 2000);
}

/// Cells `j - m ..= j + n` contain both sides of a jump placed between
/// window samples `p - 1` and `p`.
fn crosses(c: usize, s: Stencil, p: usize) -> bool {
    let lo = c - s.m;
    let hi = c + s.n;
    lo < p && p <= hi
}

#[test]
fn every_single_jump_position_is_excluded() {
    let h = 1e-3;
    for r in [3usize, 5, 7, 9] {
        let rec = Reconstructor::<f64>::new(ReconstructionScheme::eno_mr(r));
        let len = 2 * r - 1;
        let c = r - 1;
        for p in 1..len {
            for sign in [1.0, -1.0] {
                for phase in [0.0, 0.7, 2.1] {
                    let w: Vec<f64> = (0..len)
                        .map(|i| {
                            let x = i as f64 * h + phase;
                            x.sin() + 0.3 * (3.0 * x).cos() + if i >= p { sign } else { 0.0 }
                        })
                        .collect();
                    let s = enomr_select(&w, &rec).chosen.effective_stencil();
                    assert!(!crosses(c, s, p), "r={r} jump at {p}: chose {s}");
                }
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn random_backgrounds_never_straddle(
        r in prop::sample::select(vec![3usize, 5, 7, 9]),
        a in -1.0f64..1.0,
        k in 0.1f64..20.0,
        ph in 0.0f64..6.3,
        slope in -2.0f64..2.0,
        p_frac in 0.0f64..1.0,
        sign in prop::bool::ANY,
    ) {
        let h = 1e-3;
        let len = 2 * r - 1;
        let p = 1 + ((len - 1) as f64 * p_frac) as usize % (len - 1);
        let jump = if sign { 1.0 } else { -1.0 };
        let w: Vec<f64> = (0..len)
            .map(|i| {
                let x = i as f64 * h;
                a * (k * x + ph).sin() + slope * x + if i >= p { jump } else { 0.0 }
            })
            .collect();
        let rec = Reconstructor::<f64>::new(ReconstructionScheme::eno_mr(r));
        let s = enomr_select(&w, &rec).chosen.effective_stencil();
        prop_assert!(!crosses(r - 1, s, p), "chose {} with jump at {}", s, p);
    }

    #[test]
    fn power_of_two_scaling_is_bitwise(
        r in prop::sample::select(vec![3usize, 5, 7, 9]),
        w in prop::collection::vec(-10.0f64..10.0, 17),
        e in -40i32..40,
    ) {
        let rec = Reconstructor::<f64>::new(ReconstructionScheme::eno_mr(r));
        let w = &w[..2 * r - 1];
        let scale = 2f64.powi(e);
        let scaled: Vec<f64> = w.iter().map(|v| v * scale).collect();
        let a = enomr_select(w, &rec);
        let b = enomr_select(&scaled, &rec);
        prop_assert_eq!(a.chosen, b.chosen);
        prop_assert_eq!((a.flux_value * scale).to_bits(), b.flux_value.to_bits());
    }
}
