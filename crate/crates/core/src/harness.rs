//! Experiment presets, error norms, convergence ladders, shock metrics and
//! timing comparisons.
//!
//! Resolutions are given as inverse spacings `1/h` per axis, so `100` means
//! `h = 1/100` whatever the domain length.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use crate::config::ParseError;
use crate::error::{Error, Result};
use crate::physics::{EulerState1D, EulerState2D, Model, SourceTerm, DEFAULT_GAMMA};
use crate::real::Real;
use crate::reconstruct::{ReconstructionScheme, SchemeKind};
use crate::solver::{
    march, Axis, BoundaryCondition, Boundaries, Grid, Integrator, MarchOptions, RunStats, Solver,
    StateFn, TimeStep,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Precision {
    Double,
    /// Software double-double.
    Extended,
}

impl Precision {
    pub fn name(&self) -> &'static str {
        match self {
            Precision::Double => "double",
            Precision::Extended => "extended",
        }
    }
}

impl fmt::Display for Precision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Precision {
    type Err = ParseError;

    fn from_str(s: &str) -> std::result::Result<Self, ParseError> {
        match s.trim() {
            "double" => Ok(Precision::Double),
            "extended" => Ok(Precision::Extended),
            other => Err(ParseError::new(format!("unknown precision '{other}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Problem {
    /// `lambda sin^alpha(pi x)` advected on `[-1, 1]`.
    AdvectSinAlpha { alpha: u32, lambda: f64 },
    /// Gaussians, square, triangle and ellipse on `[-1, 1]`, scaled by `lambda`.
    AdvectJiangShu { lambda: f64 },
    /// `lambda (1 + 0.5 sin^3(pi x))` on `[0, 2]` before the shock forms.
    BurgersSmooth { lambda: f64 },
    /// Same data run past shock formation to `t = 2 / lambda`.
    BurgersShock { lambda: f64 },
    LaxTube,
    TitarevToro,
    RiemannConfig1,
    RiemannConfig2,
    DoubleMach,
    RayleighTaylor,
}

/// Preset names accepted by [`Problem::from_name`].
pub const PRESET_NAMES: [&str; 10] = [
    "sin-alpha",
    "jiang-shu",
    "burgers-smooth",
    "burgers-shock",
    "lax",
    "titarev-toro",
    "rp1",
    "rp2",
    "dmr",
    "rt",
];

const RT_GAMMA: f64 = 5.0 / 3.0;

impl Problem {
    /// Builds a preset by name; `lambda` and `alpha` apply to the scalar
    /// problems and are ignored elsewhere.
    pub fn from_name(name: &str, lambda: f64, alpha: u32) -> Result<Problem> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::Config(format!("scale factor must be positive, got {lambda}")));
        }
        Ok(match name.trim() {
            "sin-alpha" => {
                if alpha == 0 || alpha > 16 {
                    return Err(Error::Config(format!("exponent alpha = {alpha} outside 1..=16")));
                }
                Problem::AdvectSinAlpha { alpha, lambda }
            }
            "jiang-shu" => Problem::AdvectJiangShu { lambda },
            "burgers-smooth" => Problem::BurgersSmooth { lambda },
            "burgers-shock" => Problem::BurgersShock { lambda },
            "lax" => Problem::LaxTube,
            "titarev-toro" => Problem::TitarevToro,
            "rp1" => Problem::RiemannConfig1,
            "rp2" => Problem::RiemannConfig2,
            "dmr" => Problem::DoubleMach,
            "rt" => Problem::RayleighTaylor,
            other => {
                return Err(Error::Config(format!(
                    "unknown preset '{other}' (expected one of {})",
                    PRESET_NAMES.join(", ")
                )))
            }
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Problem::AdvectSinAlpha { .. } => "sin-alpha",
            Problem::AdvectJiangShu { .. } => "jiang-shu",
            Problem::BurgersSmooth { .. } => "burgers-smooth",
            Problem::BurgersShock { .. } => "burgers-shock",
            Problem::LaxTube => "lax",
            Problem::TitarevToro => "titarev-toro",
            Problem::RiemannConfig1 => "rp1",
            Problem::RiemannConfig2 => "rp2",
            Problem::DoubleMach => "dmr",
            Problem::RayleighTaylor => "rt",
        }
    }

    pub fn lambda(&self) -> f64 {
        match *self {
            Problem::AdvectSinAlpha { lambda, .. }
            | Problem::AdvectJiangShu { lambda }
            | Problem::BurgersSmooth { lambda }
            | Problem::BurgersShock { lambda } => lambda,
            _ => 1.0,
        }
    }

    pub fn model(&self) -> Model {
        match self {
            Problem::AdvectSinAlpha { .. } | Problem::AdvectJiangShu { .. } => Model::Advection,
            Problem::BurgersSmooth { .. } | Problem::BurgersShock { .. } => Model::Burgers,
            Problem::LaxTube | Problem::TitarevToro => Model::Euler1D {
                gamma: DEFAULT_GAMMA,
            },
            Problem::RiemannConfig1 | Problem::RiemannConfig2 | Problem::DoubleMach => {
                Model::Euler2D {
                    gamma: DEFAULT_GAMMA,
                    source: SourceTerm::None,
                }
            }
            Problem::RayleighTaylor => Model::Euler2D {
                gamma: RT_GAMMA,
                source: SourceTerm::RayleighTaylor,
            },
        }
    }

    /// Lower and upper corners of the domain.
    pub fn domain(&self) -> ([f64; 2], [f64; 2]) {
        match self {
            Problem::AdvectSinAlpha { .. } | Problem::AdvectJiangShu { .. } => ([-1.0, 0.0], [1.0, 0.0]),
            Problem::BurgersSmooth { .. } | Problem::BurgersShock { .. } | Problem::LaxTube => {
                ([0.0, 0.0], [2.0, 0.0])
            }
            Problem::TitarevToro => ([-5.0, 0.0], [5.0, 0.0]),
            Problem::RiemannConfig1 | Problem::RiemannConfig2 => ([-1.0, -1.0], [1.0, 1.0]),
            Problem::DoubleMach => ([0.0, 0.0], [4.0, 1.0]),
            Problem::RayleighTaylor => ([0.0, 0.0], [0.25, 1.0]),
        }
    }

    pub fn periodic(&self) -> bool {
        matches!(
            self,
            Problem::AdvectSinAlpha { .. }
                | Problem::AdvectJiangShu { .. }
                | Problem::BurgersSmooth { .. }
                | Problem::BurgersShock { .. }
        )
    }

    /// Inverse spacings used by the published runs.
    pub fn default_resolution(&self) -> [usize; 2] {
        match self {
            Problem::AdvectSinAlpha { .. } => [100, 1],
            Problem::AdvectJiangShu { .. } => [200, 1],
            Problem::BurgersSmooth { .. } | Problem::BurgersShock { .. } => [64, 1],
            Problem::LaxTube => [100, 1],
            Problem::TitarevToro => [150, 1],
            Problem::RiemannConfig1 | Problem::RiemannConfig2 => [400, 400],
            Problem::DoubleMach => [300, 300],
            Problem::RayleighTaylor => [512, 512],
        }
    }

    pub fn default_t_end(&self) -> f64 {
        match *self {
            Problem::AdvectSinAlpha { .. } => 2.0,
            Problem::AdvectJiangShu { .. } => 20.0,
            Problem::BurgersSmooth { lambda } => 0.1 / lambda,
            Problem::BurgersShock { lambda } => 2.0 / lambda,
            Problem::LaxTube => 0.26,
            Problem::TitarevToro => 5.0,
            Problem::RiemannConfig1 | Problem::RiemannConfig2 => 1.0,
            Problem::DoubleMach => 0.2,
            Problem::RayleighTaylor => 1.95,
        }
    }

    pub fn default_step(&self) -> StepRule {
        match self {
            Problem::AdvectSinAlpha { .. } | Problem::AdvectJiangShu { .. } => StepRule::MeshSize,
            Problem::BurgersSmooth { .. } => StepRule::BurgersPower,
            _ => StepRule::Cfl(0.3),
        }
    }

    /// Smooth problems with a closed-form solution at every time.
    pub fn is_smooth(&self) -> bool {
        matches!(self, Problem::AdvectSinAlpha { .. } | Problem::BurgersSmooth { .. })
    }

    pub fn symmetry_plane(&self) -> Option<f64> {
        match self {
            Problem::RayleighTaylor => Some(0.125),
            _ => None,
        }
    }

    /// Open-boundary Riemann problems track the boundary budget so that
    /// conservation can be checked.
    pub fn tracks_budget(&self) -> bool {
        matches!(self, Problem::RiemannConfig1 | Problem::RiemannConfig2)
    }

    pub fn variable_names(&self) -> &'static [&'static str] {
        match self.model().nv() {
            1 => &["u"],
            3 => &["rho", "mom", "energy"],
            _ => &["rho", "mom_x", "mom_y", "energy"],
        }
    }

    pub fn boundaries(&self) -> Boundaries {
        use BoundaryCondition as Bc;
        match self {
            p if p.periodic() => Boundaries::periodic_1d(),
            Problem::DoubleMach => {
                let post = dmr_post_shock();
                let top: StateFn = Arc::new(move |t, x, y| {
                    let xs = 1.0 / 6.0 + (y + 20.0 * t) / 3f64.sqrt();
                    if x < xs {
                        dmr_post_shock()
                    } else {
                        dmr_pre_shock()
                    }
                });
                Boundaries([
                    [Bc::Dirichlet(post), Bc::NonReflective],
                    [
                        Bc::Split {
                            at: 1.0 / 6.0,
                            below: Box::new(Bc::NonReflective),
                            above: Box::new(Bc::Reflective),
                        },
                        Bc::TimeDependent(top),
                    ],
                ])
            }
            Problem::RayleighTaylor => {
                let state = |rho: f64, p: f64| {
                    EulerState2D::from_primitive(rho, 0.0, 0.0, p, RT_GAMMA).to_array().to_vec()
                };
                Boundaries([
                    [Bc::Reflective, Bc::Reflective],
                    [Bc::Dirichlet(state(2.0, 1.0)), Bc::Dirichlet(state(1.0, 2.5))],
                ])
            }
            _ => Boundaries::uniform(Bc::NonReflective),
        }
    }

    /// Conserved initial state at `(x, y)`.
    pub fn initial<T: Real>(&self, x: T, y: T) -> Vec<T> {
        match *self {
            Problem::AdvectSinAlpha { alpha, lambda } => {
                vec![T::from_f64(lambda) * x.sin_pi().powi(alpha)]
            }
            Problem::AdvectJiangShu { lambda } => {
                vec![T::from_f64(lambda) * T::from_f64(jiang_shu_profile(x.to_f64()))]
            }
            Problem::BurgersSmooth { lambda } | Problem::BurgersShock { lambda } => {
                vec![burgers_initial(x, T::from_f64(lambda))]
            }
            _ => self
                .initial_euler(x.to_f64(), y.to_f64())
                .into_iter()
                .map(T::from_f64)
                .collect(),
        }
    }

    fn initial_euler(&self, x: f64, y: f64) -> Vec<f64> {
        let g = self.model().gamma().unwrap_or(DEFAULT_GAMMA);
        let one_d = |rho: f64, u: f64, p: f64| EulerState1D::from_primitive(rho, u, p, g).to_array().to_vec();
        let two_d = |[rho, u, v, p]: [f64; 4]| {
            EulerState2D::from_primitive(rho, u, v, p, g).to_array().to_vec()
        };
        match self {
            Problem::LaxTube => {
                if x < 1.0 {
                    one_d(0.445, 0.698, 3.528)
                } else {
                    one_d(0.5, 0.0, 0.571)
                }
            }
            Problem::TitarevToro => {
                if x < -4.5 {
                    one_d(1.515695, 0.523346, 1.805)
                } else {
                    one_d(1.0 + 0.1 * (20.0 * x).sin_pi(), 0.0, 1.0)
                }
            }
            Problem::RiemannConfig1 => two_d(match (x < 0.0, y < 0.0) {
                (true, true) => [0.138, 1.206, 1.206, 0.029],
                (true, false) => [0.5323, 1.206, 0.0, 0.3],
                (false, false) => [1.5, 0.0, 0.0, 1.5],
                (false, true) => [0.5323, 0.0, 1.206, 0.3],
            }),
            Problem::RiemannConfig2 => two_d(match (x < 0.0, y < 0.0) {
                (true, true) => [1.0, -0.75, 0.5, 1.0],
                (true, false) => [2.0, 0.75, 0.5, 1.0],
                (false, false) => [1.0, 0.75, -0.5, 1.0],
                (false, true) => [3.0, -0.75, -0.5, 1.0],
            }),
            Problem::DoubleMach => {
                if x < 1.0 / 6.0 + y / 3f64.sqrt() {
                    dmr_post_shock()
                } else {
                    dmr_pre_shock()
                }
            }
            Problem::RayleighTaylor => {
                let (rho, p) = if y < 0.5 { (2.0, 2.0 * y + 1.0) } else { (1.0, y + 1.5) };
                let c = (RT_GAMMA * p / rho).sqrt();
                let v = -0.025 * c * (8.0 * x).cos_pi();
                two_d([rho, 0.0, v, p])
            }
            _ => unreachable!("scalar problem"),
        }
    }

    /// Exact solution of the scalar smooth problems at `(x, t)`.
    pub fn exact<T: Real>(&self, x: T, t: T) -> Option<T> {
        match *self {
            // Unit speed on a period-2 domain; the tested end times are
            // whole periods, but translate anyway.
            Problem::AdvectSinAlpha { alpha, lambda } => {
                Some(T::from_f64(lambda) * (x - t).sin_pi().powi(alpha))
            }
            Problem::AdvectJiangShu { lambda } => {
                let xi = (x - t).to_f64();
                let xi = (xi + 1.0).rem_euclid(2.0) - 1.0;
                Some(T::from_f64(lambda) * T::from_f64(jiang_shu_profile(xi)))
            }
            Problem::BurgersSmooth { lambda } => Some(burgers_exact(x, t, T::from_f64(lambda))),
            _ => None,
        }
    }
}

fn dmr_pre_shock() -> Vec<f64> {
    EulerState2D::from_primitive(1.4, 0.0, 0.0, 1.0, DEFAULT_GAMMA).to_array().to_vec()
}

fn dmr_post_shock() -> Vec<f64> {
    let s60 = 3f64.sqrt() / 2.0;
    EulerState2D::from_primitive(8.0, 8.25 * s60, -8.25 * 0.5, 116.5, DEFAULT_GAMMA)
        .to_array()
        .to_vec()
}

/// The composite profile on `[-1, 1]`: a smoothed Gaussian, a square wave,
/// a triangle and a semi-ellipse.
pub fn jiang_shu_profile(x: f64) -> f64 {
    let delta = 0.005;
    let z = -0.7;
    let beta = std::f64::consts::LN_2 / (36.0 * delta * delta);
    let (a, alpha) = (0.5, 10.0);
    let g = |c: f64| (-beta * (x - c) * (x - c)).exp();
    let f = |c: f64| (1.0 - alpha * alpha * (x - c) * (x - c)).max(0.0).sqrt();
    if (-0.8..=-0.6).contains(&x) {
        (g(z - delta) + g(z + delta) + 4.0 * g(z)) / 6.0
    } else if (-0.4..=-0.2).contains(&x) {
        1.0
    } else if (0.0..=0.2).contains(&x) {
        1.0 - (10.0 * (x - 0.1)).abs()
    } else if (0.4..=0.6).contains(&x) {
        (f(a - delta) + f(a + delta) + 4.0 * f(a)) / 6.0
    } else {
        0.0
    }
}

fn burgers_initial<T: Real>(x: T, lambda: T) -> T {
    lambda * (T::one() + T::from_f64(0.5) * x.sin_pi().powi(3))
}

/// Smooth Burgers solution by following the characteristic through `x`,
/// solved with Newton's method in `T`.
pub fn burgers_exact<T: Real>(x: T, t: T, lambda: T) -> T {
    let mut xi = x - t * burgers_initial(x, lambda);
    let tol = T::from_f64(4.0 * T::EPSILON);
    for _ in 0..100 {
        let (s, c) = (xi.sin_pi(), xi.cos_pi());
        let u0 = burgers_initial(xi, lambda);
        let du0 = lambda * T::from_f64(1.5) * T::pi() * s * s * c;
        let g = xi + t * u0 - x;
        let step = g / (T::one() + t * du0);
        xi -= step;
        if step.abs() <= tol * (T::one() + xi.abs()) {
            break;
        }
    }
    burgers_initial(xi, lambda)
}

/// Entropy solution of the Burgers preset at any time, from the Hopf-Lax
/// formula `u = (x - y*) / t` where `y*` minimizes
/// `U0(y) + (x - y)^2 / (2t)` and `U0` is an antiderivative of the data.
/// Valid after shock formation; used as the reference for shock metrics.
pub fn burgers_entropy_solution(x: f64, t: f64, lambda: f64) -> f64 {
    // u_lambda(x, t) = lambda u_1(x, lambda t)
    let tau = lambda * t;
    if tau <= 0.0 {
        return burgers_initial(x, lambda);
    }
    let pi = std::f64::consts::PI;
    let big_u = |y: f64| {
        let c = (y).cos_pi();
        y + 0.5 * (c * c * c / 3.0 - c) / pi
    };
    let obj = |y: f64| big_u(y) + (x - y) * (x - y) / (2.0 * tau);
    // Characteristics travel at most 1.5 tau.
    let reach = 1.5 * tau + 0.1;
    let samples = ((2.0 * reach) * 2000.0).ceil().max(200.0) as usize;
    let step = 2.0 * reach / samples as f64;
    let (mut best, mut best_val) = (x, f64::INFINITY);
    for k in 0..=samples {
        let y = x - reach + k as f64 * step;
        let v = obj(y);
        if v < best_val {
            best = y;
            best_val = v;
        }
    }
    // The minimizer satisfies u0(y) = (x - y) / tau; refine it by Newton
    // steps safeguarded with bisection on the sampled bracket.
    let phi = |y: f64| burgers_initial(y, 1.0) - (x - y) / tau;
    let (mut a, mut b) = (best - step, best + step);
    let mut y = best;
    if phi(a) < 0.0 && phi(b) > 0.0 {
        for _ in 0..100 {
            let (s, c) = (y.sin_pi(), y.cos_pi());
            let f = phi(y);
            if f < 0.0 {
                a = y;
            } else {
                b = y;
            }
            let df = 1.5 * pi * s * s * c + 1.0 / tau;
            let mut next = y - f / df;
            if !(next > a && next < b) {
                next = 0.5 * (a + b);
            }
            if (next - y).abs() <= 1e-16 * (1.0 + y.abs()) {
                y = next;
                break;
            }
            y = next;
        }
    }
    lambda * (x - y) / tau
}

/// How the time step is chosen.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StepRule {
    /// SSP-RK3 with `dt = cfl * h / max speed`.
    Cfl(f64),
    /// Linear SSP-RK(m, m-1) with `m - 1` equal to the scheme order and
    /// `dt = h`.
    MeshSize,
    /// SSP-RK3 with `dt = C h^(order/3) / lambda`, rounded to a whole step
    /// count so runs differing only in `lambda` take identical steps.
    BurgersPower,
    /// SSP-RK3 with a fixed step.
    Fixed(f64),
}

/// Constant in the Burgers step rule for each design order.
fn burgers_step_constant(order: usize) -> f64 {
    match order {
        5 => 1.0,
        9 => 100.0,
        13 => 1e4,
        _ => 1e6,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub problem: Problem,
    pub scheme: ReconstructionScheme,
    /// Inverse spacing per axis (the second entry is ignored in 1D).
    pub resolution: [usize; 2],
    pub t_end: f64,
    pub step: StepRule,
    pub precision: Precision,
    pub max_steps: Option<usize>,
}

impl ExperimentConfig {
    pub fn preset(problem: Problem, scheme: ReconstructionScheme) -> Self {
        ExperimentConfig {
            problem,
            scheme,
            resolution: problem.default_resolution(),
            t_end: problem.default_t_end(),
            step: problem.default_step(),
            precision: Precision::Double,
            max_steps: None,
        }
    }

    pub fn with_resolution(mut self, inv_h: usize) -> Self {
        self.resolution = [inv_h, inv_h];
        self
    }

    pub fn grid(&self) -> Result<Grid> {
        let (lo, hi) = self.problem.domain();
        let dims = self.problem.model().dims();
        let periodic = self.problem.periodic();
        let mut n = [1usize; 2];
        for a in 0..dims {
            let k = self.resolution[a];
            if k == 0 {
                return Err(Error::Config("resolution must be positive".into()));
            }
            let cells = (hi[a] - lo[a]) * k as f64;
            let whole = cells.round();
            if (cells - whole).abs() > 1e-9 * whole.max(1.0) {
                return Err(Error::Config(format!(
                    "h = 1/{k} does not divide the domain length {}",
                    hi[a] - lo[a]
                )));
            }
            n[a] = whole as usize + usize::from(!periodic);
        }
        let ghost = self.scheme.r;
        Ok(if dims == 1 {
            Grid::line(n[0], lo[0], hi[0], periodic, ghost)
        } else {
            Grid::plane(n, lo, hi, ghost)
        })
    }

    /// Time-step rule and integrator for this configuration.
    pub fn time_stepping(&self) -> Result<(TimeStep, Integrator)> {
        let h = 1.0 / self.resolution[0] as f64;
        Ok(match self.step {
            StepRule::Cfl(c) => (TimeStep::Cfl(c), Integrator::SspRk3),
            StepRule::MeshSize => (TimeStep::Fixed(h), Integrator::Lssprk(self.scheme.order() + 1)),
            StepRule::BurgersPower => {
                let lambda = self.problem.lambda();
                let order = self.scheme.order();
                let dt_unit = burgers_step_constant(order) * h.powf(order as f64 / 3.0);
                let steps = (self.t_end * lambda / dt_unit - 1e-9).ceil().max(1.0) as usize;
                (TimeStep::Steps(steps), Integrator::SspRk3)
            }
            StepRule::Fixed(dt) => (TimeStep::Fixed(dt), Integrator::SspRk3),
        })
    }

    /// Short key-value description written into manifests.
    pub fn describe(&self) -> Vec<(String, String)> {
        let mut v = vec![
            ("problem".to_string(), self.problem.name().to_string()),
            ("scheme".to_string(), self.scheme.name()),
            ("precision".to_string(), self.precision.to_string()),
            ("t_end".to_string(), self.t_end.to_string()),
            ("step".to_string(), format!("{:?}", self.step)),
        ];
        match self.problem {
            Problem::AdvectSinAlpha { alpha, lambda } => {
                v.push(("alpha".into(), alpha.to_string()));
                v.push(("lambda".into(), lambda.to_string()));
            }
            Problem::AdvectJiangShu { lambda }
            | Problem::BurgersSmooth { lambda }
            | Problem::BurgersShock { lambda } => v.push(("lambda".into(), lambda.to_string())),
            _ => {}
        }
        let dims = self.problem.model().dims();
        v.push((
            "resolution".into(),
            self.resolution[..dims].iter().map(|k| format!("1/{k}")).collect::<Vec<_>>().join("x"),
        ));
        if let Some(m) = self.max_steps {
            v.push(("max_steps".into(), m.to_string()));
        }
        v
    }
}

/// Result of one run.
#[derive(Clone, Debug)]
pub struct RunOutput<T> {
    pub grid: Grid,
    pub nv: usize,
    /// Field followed by the budget entries when tracked.
    pub state: Vec<T>,
    pub field_len: usize,
    pub stats: RunStats,
    pub seconds: f64,
}

impl<T: Real> RunOutput<T> {
    pub fn field(&self) -> &[T] {
        &self.state[..self.field_len]
    }

    /// `sum(U) + budget` per component: constant in time for a
    /// conservative scheme.
    pub fn conserved_totals(&self) -> Vec<T> {
        let mut tot = vec![T::zero(); self.nv];
        for c in self.field().chunks_exact(self.nv) {
            for (t, v) in tot.iter_mut().zip(c) {
                *t += *v;
            }
        }
        if self.state.len() > self.field_len {
            for (t, b) in tot.iter_mut().zip(&self.state[self.field_len..]) {
                *t += *b;
            }
        }
        tot
    }
}

/// Builds the solver and initial state for a configuration.
pub fn setup<T: Real>(cfg: &ExperimentConfig) -> Result<(Solver<T>, Vec<T>)> {
    let grid = cfg.grid()?;
    let mut solver = Solver::new(grid, cfg.problem.model(), cfg.scheme.prepare::<T>(), cfg.problem.boundaries())?;
    solver.track_budget = cfg.problem.tracks_budget();
    let field = initial_field::<T>(&cfg.problem, &solver.grid);
    let state = solver.state_from_field(field);
    Ok((solver, state))
}

/// Samples the initial condition on the grid nodes, x fastest.
pub fn initial_field<T: Real>(problem: &Problem, grid: &Grid) -> Vec<T> {
    let [nx, ny] = grid.n;
    let mut field = Vec::with_capacity(grid.nodes() * problem.model().nv());
    for j in 0..ny {
        let y = if grid.dims == 2 { grid.coord::<T>(Axis::Y, j as i64) } else { T::zero() };
        for i in 0..nx {
            field.extend(problem.initial(grid.coord::<T>(Axis::X, i as i64), y));
        }
    }
    field
}

/// Runs a configuration to its end time (or step limit).
pub fn run_experiment<T: Real>(cfg: &ExperimentConfig) -> Result<RunOutput<T>> {
    if !(cfg.t_end.is_finite() && cfg.t_end > 0.0) {
        return Err(Error::Config(format!("end time must be positive, got {}", cfg.t_end)));
    }
    let (solver, mut state) = setup::<T>(cfg)?;
    let (step, integrator) = cfg.time_stepping()?;
    let opts = MarchOptions {
        step,
        integrator,
        symmetry_plane: cfg.problem.symmetry_plane(),
        max_steps: cfg.max_steps,
    };
    let start = Instant::now();
    let stats = march(&solver, &mut state, 0.0, cfg.t_end, &opts)?;
    let seconds = start.elapsed().as_secs_f64();
    let field_len = solver.field_len();
    if let Some(k) = state[..field_len].iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            location: format!("field entry {k} after {} steps", stats.steps),
        });
    }
    Ok(RunOutput {
        grid: solver.grid,
        nv: solver.model.nv(),
        state,
        field_len,
        stats,
        seconds,
    })
}

/// Mean and maximum absolute difference.
pub fn error_norms<T: Real>(numeric: &[T], exact: &[T]) -> Result<(T, T)> {
    if numeric.len() != exact.len() {
        return Err(Error::SizeMismatch(format!(
            "numeric field has {} entries, exact has {}",
            numeric.len(),
            exact.len()
        )));
    }
    if numeric.is_empty() {
        return Err(Error::SizeMismatch("empty field".into()));
    }
    let mut l1 = T::zero();
    let mut linf = T::zero();
    for (a, b) in numeric.iter().zip(exact) {
        let d = (*a - *b).abs();
        l1 += d;
        linf = linf.max(d);
    }
    Ok((l1 / T::from_i64(numeric.len() as i64), linf))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceRow {
    pub h: f64,
    /// Inverse spacing `1/h`.
    pub inv_h: usize,
    pub l1: f64,
    pub linf: f64,
    pub order_l1: Option<f64>,
    pub order_linf: Option<f64>,
    /// The error is within a few roundoffs of the solution scale, so no
    /// order is reported against it.
    pub at_precision_floor: bool,
    pub steps: usize,
}

/// Error level below which a row is attributed to roundoff: a few units in
/// the last place of the solution scale, grown like a random walk over the
/// step count.
pub fn precision_floor(epsilon: f64, scale: f64, steps: usize) -> f64 {
    4.0 * epsilon * scale * (steps.max(1) as f64).sqrt()
}

/// Runs a smooth preset on each mesh and reports errors and observed orders.
pub fn run_convergence_ladder<T: Real>(
    cfg: &ExperimentConfig,
    meshes: &[usize],
) -> Result<Vec<ConvergenceRow>> {
    if !cfg.problem.is_smooth() {
        return Err(Error::Config(format!(
            "convergence ladders need a smooth preset, not '{}'",
            cfg.problem.name()
        )));
    }
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(meshes.len());
    for &k in meshes {
        let run_cfg = ExperimentConfig {
            resolution: [k, k],
            ..cfg.clone()
        };
        let out = run_experiment::<T>(&run_cfg)?;
        let t = T::from_f64(out.stats.t_final);
        let exact: Vec<T> = (0..out.grid.n[0])
            .map(|i| {
                cfg.problem
                    .exact(out.grid.coord::<T>(Axis::X, i as i64), t)
                    .expect("smooth preset has an exact solution")
            })
            .collect();
        let (l1, linf) = error_norms(out.field(), &exact)?;
        let scale = exact.iter().fold(T::zero(), |m, v| m.max(v.abs())).to_f64();
        let (l1, linf) = (l1.to_f64(), linf.to_f64());
        let at_floor = l1 < precision_floor(T::EPSILON, scale, out.stats.steps);
        let h = 1.0 / k as f64;
        let (order_l1, order_linf) = match rows.last() {
            Some(prev) if !prev.at_precision_floor && !at_floor => {
                let r = (prev.h / h).ln();
                (Some((prev.l1 / l1).ln() / r), Some((prev.linf / linf).ln() / r))
            }
            _ => (None, None),
        };
        rows.push(ConvergenceRow {
            h,
            inv_h: k,
            l1,
            linf,
            order_l1,
            order_linf,
            at_precision_floor: at_floor,
            steps: out.stats.steps,
        });
    }
    Ok(rows)
}

/// Least-squares slope of `log(L1)` against `log(h)` over rows above the
/// precision floor.
pub fn fitted_order(rows: &[ConvergenceRow]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| !r.at_precision_floor && r.l1 > 0.0)
        .map(|r| (r.h.ln(), r.l1.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    Some(sxy / sxx)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShockMetrics {
    pub total_variation: f64,
    /// Amount by which the field exceeds the reference maximum (zero if not).
    pub overshoot: f64,
    /// Amount by which the field falls below the reference minimum.
    pub undershoot: f64,
}

/// Total variation of `field` and its excursions outside the range of
/// `reference`.
pub fn shock_quality_metrics(field: &[f64], reference: &[f64]) -> ShockMetrics {
    let total_variation = field.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
    let rmax = reference.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let rmin = reference.iter().copied().fold(f64::INFINITY, f64::min);
    let fmax = field.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let fmin = field.iter().copied().fold(f64::INFINITY, f64::min);
    ShockMetrics {
        total_variation,
        overshoot: (fmax - rmax).max(0.0),
        undershoot: (rmin - fmin).max(0.0),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TimingRow {
    pub scheme: String,
    pub steps: usize,
    /// Median over repetitions of the wall-clock time per step.
    pub seconds_per_step: f64,
    /// Relative to WENO-AO(5,3) when it is in the list, else to the first scheme.
    pub normalized: f64,
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Times `steps` steps of the same preset for each scheme, `repetitions`
/// times, and normalizes the median per-step cost.
pub fn timing_comparison(
    schemes: &[ReconstructionScheme],
    base: &ExperimentConfig,
    steps: usize,
    repetitions: usize,
) -> Result<Vec<TimingRow>> {
    if schemes.is_empty() || steps == 0 || repetitions == 0 {
        return Err(Error::Config("timing needs schemes, steps and repetitions".into()));
    }
    let mut rows = Vec::new();
    for scheme in schemes {
        let cfg = ExperimentConfig {
            scheme: *scheme,
            max_steps: Some(steps),
            ..base.clone()
        };
        let mut samples = Vec::with_capacity(repetitions);
        for _ in 0..repetitions {
            let out = match cfg.precision {
                Precision::Double => timed::<f64>(&cfg)?,
                Precision::Extended => timed::<crate::real::DoubleDouble>(&cfg)?,
            };
            samples.push(out);
        }
        rows.push(TimingRow {
            scheme: scheme.name(),
            steps,
            seconds_per_step: median(samples),
            normalized: 0.0,
        });
    }
    let base_cost = schemes
        .iter()
        .position(|s| s.kind == SchemeKind::WenoAo53)
        .map_or(rows[0].seconds_per_step, |i| rows[i].seconds_per_step);
    for r in &mut rows {
        r.normalized = r.seconds_per_step / base_cost;
    }
    Ok(rows)
}

fn timed<T: Real>(cfg: &ExperimentConfig) -> Result<f64> {
    let out = run_experiment::<T>(cfg)?;
    Ok(out.seconds / out.stats.steps.max(1) as f64)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

pub fn write_convergence_csv<W: Write>(mut w: W, rows: &[ConvergenceRow]) -> Result<()> {
    writeln!(w, "h,L1,order_L1,Linf,order_Linf,steps,precision_floor")?;
    for r in rows {
        writeln!(
            w,
            "1/{},{},{},{},{},{},{}",
            r.inv_h,
            r.l1,
            fmt_opt(r.order_l1),
            r.linf,
            fmt_opt(r.order_linf),
            r.steps,
            r.at_precision_floor
        )?;
    }
    Ok(())
}

pub fn write_timing_csv<W: Write>(mut w: W, rows: &[TimingRow]) -> Result<()> {
    writeln!(w, "scheme,steps,seconds_per_step,normalized")?;
    for r in rows {
        writeln!(w, "{},{},{},{}", r.scheme, r.steps, r.seconds_per_step, r.normalized)?;
    }
    Ok(())
}

/// Version string written into manifests: the crate version, plus the
/// commit when the build environment provides one.
pub fn version_string() -> String {
    match option_env!("ENOMR_GIT_REV") {
        Some(rev) => format!("v{}-g{rev}", env!("CARGO_PKG_VERSION")),
        None => format!("v{}", env!("CARGO_PKG_VERSION")),
    }
}

/// Writes `key = value` lines, one per entry, after a version line.
pub fn write_manifest<W: Write>(mut w: W, entries: &[(String, String)]) -> Result<()> {
    writeln!(w, "version = {}", version_string())?;
    for (k, v) in entries {
        writeln!(w, "{k} = {v}")?;
    }
    Ok(())
}
