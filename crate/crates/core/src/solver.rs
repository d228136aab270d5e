//! Structured-grid driver: grids, ghost layers and boundary conditions,
//! the conservative semi-discrete operator, and time marching.
//!
//! Fields are flat vectors of conserved variables, `nv` per node, nodes in
//! row-major order (`x` fastest). Every axis-aligned line is processed
//! independently, so lines are distributed over the rayon pool; each line
//! writes only its own output slice, which keeps results independent of the
//! thread count.

use std::fmt;
use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::flux::{line_fluxes, wave_speed_bound, LineScratch};
use crate::physics::{apply_source, Model, SourceTerm};
use crate::real::Real;
use crate::reconstruct::Reconstructor;
use crate::timeint::{lssprk_step, ssp_rk3_step, Workspace};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

impl Axis {
    fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
        }
    }
}

/// Uniform node grid. A periodic axis with `n` nodes has spacing `L/n` (the
/// right end is the image of the left); otherwise the `n` nodes include both
/// ends and the spacing is `L/(n-1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    pub dims: usize,
    pub n: [usize; 2],
    pub lo: [f64; 2],
    pub hi: [f64; 2],
    pub periodic: [bool; 2],
    pub ghost: usize,
}

impl Grid {
    pub fn line(n: usize, lo: f64, hi: f64, periodic: bool, ghost: usize) -> Self {
        Grid {
            dims: 1,
            n: [n, 1],
            lo: [lo, 0.0],
            hi: [hi, 0.0],
            periodic: [periodic, false],
            ghost,
        }
    }

    pub fn plane(n: [usize; 2], lo: [f64; 2], hi: [f64; 2], ghost: usize) -> Self {
        Grid {
            dims: 2,
            n,
            lo,
            hi,
            periodic: [false, false],
            ghost,
        }
    }

    pub fn nodes(&self) -> usize {
        self.n[0] * self.n[1]
    }

    fn intervals(&self, axis: usize) -> usize {
        if self.periodic[axis] {
            self.n[axis]
        } else {
            self.n[axis] - 1
        }
    }

    /// Spacing along `axis`, computed in `T` so extended precision keeps
    /// full accuracy for spacings like 1/50.
    pub fn spacing<T: Real>(&self, axis: Axis) -> T {
        let a = axis.index();
        (T::from_f64(self.hi[a]) - T::from_f64(self.lo[a])) / T::from_i64(self.intervals(a) as i64)
    }

    pub fn coord<T: Real>(&self, axis: Axis, i: i64) -> T {
        T::from_f64(self.lo[axis.index()]) + T::from_i64(i) * self.spacing::<T>(axis)
    }

    pub fn coord_f64(&self, axis: Axis, i: i64) -> f64 {
        self.coord::<f64>(axis, i)
    }

    fn validate(&self, scheme_r: usize) -> Result<()> {
        if self.ghost < scheme_r {
            return Err(Error::Config(format!(
                "ghost width {} smaller than scheme half width {}",
                self.ghost, scheme_r
            )));
        }
        for a in 0..self.dims {
            if self.n[a] < 2 * self.ghost.max(3) {
                return Err(Error::Config(format!("axis {a} has too few nodes ({})", self.n[a])));
            }
            if !(self.hi[a] > self.lo[a]) {
                return Err(Error::Config(format!("axis {a} has an empty extent")));
            }
        }
        Ok(())
    }
}

/// Conserved state as a function of `(t, x, y)`, natural component order.
pub type StateFn = Arc<dyn Fn(f64, f64, f64) -> Vec<f64> + Send + Sync>;

#[derive(Clone)]
pub enum BoundaryCondition {
    Periodic,
    /// Zeroth-order extrapolation of the nearest boundary node.
    NonReflective,
    /// Mirror about the boundary node with the normal momentum negated.
    Reflective,
    /// Fixed conserved state, natural component order.
    Dirichlet(Vec<f64>),
    /// Conserved state evaluated at each ghost node's `(t, x, y)`.
    TimeDependent(StateFn),
    /// Chooses a condition by the tangential coordinate: `below` where it is
    /// `<= at`, `above` otherwise.
    Split {
        at: f64,
        below: Box<BoundaryCondition>,
        above: Box<BoundaryCondition>,
    },
}

impl fmt::Debug for BoundaryCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundaryCondition::Periodic => f.write_str("Periodic"),
            BoundaryCondition::NonReflective => f.write_str("NonReflective"),
            BoundaryCondition::Reflective => f.write_str("Reflective"),
            BoundaryCondition::Dirichlet(s) => write!(f, "Dirichlet({s:?})"),
            BoundaryCondition::TimeDependent(_) => f.write_str("TimeDependent"),
            BoundaryCondition::Split { at, below, above } => {
                write!(f, "Split({at}, {below:?}, {above:?})")
            }
        }
    }
}

/// Boundary conditions as `[axis][side]`, side 0 at the low end.
#[derive(Clone, Debug)]
pub struct Boundaries(pub [[BoundaryCondition; 2]; 2]);

impl Boundaries {
    pub fn periodic_1d() -> Self {
        use BoundaryCondition::*;
        Boundaries([[Periodic, Periodic], [NonReflective, NonReflective]])
    }

    pub fn uniform(bc: BoundaryCondition) -> Self {
        Boundaries([[bc.clone(), bc.clone()], [bc.clone(), bc]])
    }

    fn validate(&self, grid: &Grid) -> Result<()> {
        for a in 0..grid.dims {
            let p = self.0[a]
                .iter()
                .map(|b| matches!(b, BoundaryCondition::Periodic))
                .collect::<Vec<_>>();
            if p[0] != p[1] {
                return Err(Error::Config(format!("axis {a}: periodic on one side only")));
            }
            if p[0] != grid.periodic[a] {
                return Err(Error::Config(format!(
                    "axis {a}: periodic boundary does not match the grid layout"
                )));
            }
        }
        Ok(())
    }
}

/// Where a line sits, for ghost evaluation.
#[derive(Clone, Copy, Debug)]
pub struct LineContext {
    pub axis: Axis,
    /// Coordinate across the line (y for an x-line), 0 in 1D.
    pub tangential: f64,
    /// Low end coordinate and spacing along the line.
    pub lo: f64,
    pub h: f64,
    pub t: f64,
}

/// Swaps the two momenta so the normal one comes second (identity for
/// `nv < 4`). Its own inverse.
#[inline]
fn permute_into<T: Real>(axis: Axis, src: &[T], dst: &mut [T]) {
    dst.copy_from_slice(src);
    if axis == Axis::Y && src.len() == 4 {
        dst.swap(1, 2);
    }
}

fn natural_state<T: Real>(axis: Axis, s: &[f64], dst: &mut [T]) {
    for (d, v) in dst.iter_mut().zip(s) {
        *d = T::from_f64(*v);
    }
    if axis == Axis::Y && dst.len() == 4 {
        dst.swap(1, 2);
    }
}

/// Fills the `g` ghost nodes at one end of an extended line holding `n`
/// interior nodes (line component order, normal momentum second).
#[allow(clippy::too_many_arguments)]
pub fn fill_line_side<T: Real>(
    ext: &mut [T],
    nv: usize,
    g: usize,
    n: usize,
    high: bool,
    bc: &BoundaryCondition,
    ctx: &LineContext,
) -> Result<()> {
    let ghost_index = |k: usize| if high { g + n - 1 + k } else { g - k };
    match bc {
        BoundaryCondition::Split { at, below, above } => {
            let pick = if ctx.tangential <= *at { below } else { above };
            fill_line_side(ext, nv, g, n, high, pick, ctx)
        }
        BoundaryCondition::Periodic => {
            for k in 1..=g {
                let src = if high { g + k - 1 } else { g + n - k };
                let dst = ghost_index(k);
                ext.copy_within(src * nv..(src + 1) * nv, dst * nv);
            }
            Ok(())
        }
        BoundaryCondition::NonReflective => {
            let src = if high { g + n - 1 } else { g };
            for k in 1..=g {
                let dst = ghost_index(k);
                ext.copy_within(src * nv..(src + 1) * nv, dst * nv);
            }
            Ok(())
        }
        BoundaryCondition::Reflective => {
            if n <= g {
                return Err(Error::Config("reflective boundary needs more nodes than ghosts".into()));
            }
            for k in 1..=g {
                let src = if high { g + n - 1 - k } else { g + k };
                let dst = ghost_index(k);
                ext.copy_within(src * nv..(src + 1) * nv, dst * nv);
                if nv > 1 {
                    ext[dst * nv + 1] = -ext[dst * nv + 1];
                } else {
                    ext[dst] = -ext[dst];
                }
            }
            Ok(())
        }
        BoundaryCondition::Dirichlet(state) => {
            if state.len() != nv {
                return Err(Error::SizeMismatch(format!(
                    "Dirichlet state has {} components, model has {nv}",
                    state.len()
                )));
            }
            for k in 1..=g {
                let dst = ghost_index(k);
                natural_state(ctx.axis, state, &mut ext[dst * nv..(dst + 1) * nv]);
            }
            Ok(())
        }
        BoundaryCondition::TimeDependent(fun) => {
            for k in 1..=g {
                let dst = ghost_index(k);
                let along = ctx.lo + ctx.h * (dst as f64 - g as f64);
                let (x, y) = match ctx.axis {
                    Axis::X => (along, ctx.tangential),
                    Axis::Y => (ctx.tangential, along),
                };
                let state = fun(ctx.t, x, y);
                if state.len() != nv {
                    return Err(Error::SizeMismatch("time-dependent boundary state".into()));
                }
                natural_state(ctx.axis, &state, &mut ext[dst * nv..(dst + 1) * nv]);
            }
            Ok(())
        }
    }
}

/// Returns a 1D field extended by `grid.ghost` nodes on each side.
pub fn fill_ghosts<T: Real>(
    field: &[T],
    nv: usize,
    grid: &Grid,
    bc: &Boundaries,
    t: f64,
) -> Result<Vec<T>> {
    let (g, n) = (grid.ghost, grid.n[0]);
    let mut ext = vec![T::zero(); (n + 2 * g) * nv];
    ext[g * nv..(g + n) * nv].copy_from_slice(field);
    let ctx = LineContext {
        axis: Axis::X,
        tangential: 0.0,
        lo: grid.lo[0],
        h: grid.spacing::<f64>(Axis::X),
        t,
    };
    fill_line_side(&mut ext, nv, g, n, false, &bc.0[0][0], &ctx)?;
    fill_line_side(&mut ext, nv, g, n, true, &bc.0[0][1], &ctx)?;
    Ok(ext)
}

/// Per-line results used for the boundary budget: fluxes through the two
/// end faces of the line.
type EndFluxes<T> = ([T; 4], [T; 4]);

/// The semi-discrete operator for one problem setup.
pub struct Solver<T: Real> {
    pub grid: Grid,
    pub model: Model,
    pub rec: Reconstructor<T>,
    pub bc: Boundaries,
    /// Appends `nv` entries to the state that integrate the net outflow
    /// through the boundaries, so `sum(U) + budget` stays constant.
    pub track_budget: bool,
}

impl<T: Real> Solver<T> {
    pub fn new(grid: Grid, model: Model, rec: Reconstructor<T>, bc: Boundaries) -> Result<Self> {
        grid.validate(rec.r())?;
        bc.validate(&grid)?;
        if grid.dims != model.dims() {
            return Err(Error::Config(format!(
                "{}D model on a {}D grid",
                model.dims(),
                grid.dims
            )));
        }
        Ok(Solver {
            grid,
            model,
            rec,
            bc,
            track_budget: false,
        })
    }

    pub fn nv(&self) -> usize {
        self.model.nv()
    }

    pub fn field_len(&self) -> usize {
        self.grid.nodes() * self.nv()
    }

    pub fn state_len(&self) -> usize {
        self.field_len() + if self.track_budget { self.nv() } else { 0 }
    }

    /// Sweeps one line. `line` holds the interior nodes in line order; the
    /// output receives `-(F_{i+1/2} - F_{i-1/2}) / h` per node.
    fn sweep_line(
        &self,
        ctx: &LineContext,
        ext: &mut Vec<T>,
        faces: &mut Vec<T>,
        scratch: &mut LineScratch<T>,
        h: T,
        out: &mut [T],
    ) -> Result<EndFluxes<T>> {
        let nv = self.nv();
        let g = self.grid.ghost;
        let n = ext.len() / nv - 2 * g;
        let a = ctx.axis.index();
        fill_line_side(ext, nv, g, n, false, &self.bc.0[a][0], ctx)?;
        fill_line_side(ext, nv, g, n, true, &self.bc.0[a][1], ctx)?;
        faces.resize((n + 1) * nv, T::zero());
        line_fluxes(&self.model, &self.rec, ext, g, faces, scratch).map_err(|e| match e {
            Error::NonPhysical { location, rho, p } => Error::NonPhysical {
                location: format!("{location} ({:?}-line at {})", ctx.axis, ctx.tangential),
                rho,
                p,
            },
            other => other,
        })?;
        for i in 0..n {
            for q in 0..nv {
                out[i * nv + q] = -(faces[(i + 1) * nv + q] - faces[i * nv + q]) / h;
            }
        }
        let mut first = [T::zero(); 4];
        let mut last = [T::zero(); 4];
        first[..nv].copy_from_slice(&faces[..nv]);
        last[..nv].copy_from_slice(&faces[n * nv..(n + 1) * nv]);
        Ok((first, last))
    }

    /// `du/dt` for the full state (field plus optional budget entries).
    pub fn rhs(&self, t: f64, u: &[T], out: &mut [T]) -> Result<()> {
        let nv = self.nv();
        let g = self.grid.ghost;
        let [nx, ny] = self.grid.n;
        let field = self.field_len();
        if u.len() != self.state_len() || out.len() != self.state_len() {
            return Err(Error::SizeMismatch(format!(
                "state has {} entries, expected {}",
                u.len(),
                self.state_len()
            )));
        }
        let hx = self.grid.spacing::<T>(Axis::X);
        let x_ctx = |j: usize| LineContext {
            axis: Axis::X,
            tangential: if self.grid.dims == 2 { self.grid.coord_f64(Axis::Y, j as i64) } else { 0.0 },
            lo: self.grid.lo[0],
            h: hx.to_f64(),
            t,
        };

        // x sweeps, one row per task.
        let row_len = nx * nv;
        let x_ends: Vec<EndFluxes<T>> = out[..field]
            .par_chunks_mut(row_len)
            .enumerate()
            .map_init(
                || (Vec::new(), Vec::new(), LineScratch::new()),
                |(ext, faces, scratch), (j, out_row)| {
                    ext.clear();
                    ext.resize((nx + 2 * g) * nv, T::zero());
                    ext[g * nv..(g + nx) * nv].copy_from_slice(&u[j * row_len..(j + 1) * row_len]);
                    self.sweep_line(&x_ctx(j), ext, faces, scratch, hx, out_row)
                },
            )
            .collect::<Result<_>>()?;

        let mut y_ends = Vec::new();
        if self.grid.dims == 2 {
            let hy = self.grid.spacing::<T>(Axis::Y);
            let mut cols = vec![T::zero(); field];
            let col_len = ny * nv;
            y_ends = cols
                .par_chunks_mut(col_len)
                .enumerate()
                .map_init(
                    || (Vec::new(), Vec::new(), LineScratch::new()),
                    |(ext, faces, scratch), (i, out_col)| {
                        ext.clear();
                        ext.resize((ny + 2 * g) * nv, T::zero());
                        for j in 0..ny {
                            let src = (j * nx + i) * nv;
                            let dst = (g + j) * nv;
                            permute_into(Axis::Y, &u[src..src + nv], &mut ext[dst..dst + nv]);
                        }
                        let ctx = LineContext {
                            axis: Axis::Y,
                            tangential: self.grid.coord_f64(Axis::X, i as i64),
                            lo: self.grid.lo[1],
                            h: hy.to_f64(),
                            t,
                        };
                        let mut ends = self.sweep_line(&ctx, ext, faces, scratch, hy, out_col)?;
                        for c in out_col.chunks_exact_mut(nv) {
                            c.swap(1, 2);
                        }
                        ends.0.swap(1, 2);
                        ends.1.swap(1, 2);
                        Ok(ends)
                    },
                )
                .collect::<Result<_>>()?;
            let source = self.model.source();
            out[..field]
                .par_chunks_mut(row_len)
                .enumerate()
                .for_each(|(j, out_row)| {
                    let mut s = [T::zero(); 4];
                    for i in 0..nx {
                        let c = (j * nx + i) * nv;
                        let o = &mut out_row[i * nv..(i + 1) * nv];
                        for q in 0..nv {
                            o[q] += cols[i * col_len + j * nv + q];
                        }
                        if source != SourceTerm::None {
                            apply_source(&u[c..c + nv], source, &mut s[..nv]);
                            for q in 0..nv {
                                o[q] += s[q];
                            }
                        }
                    }
                });
        }

        if self.track_budget {
            let mut b = [T::zero(); 4];
            for (first, last) in &x_ends {
                for q in 0..nv {
                    b[q] += (last[q] - first[q]) / hx;
                }
            }
            if !y_ends.is_empty() {
                let hy = self.grid.spacing::<T>(Axis::Y);
                for (first, last) in &y_ends {
                    for q in 0..nv {
                        b[q] += (last[q] - first[q]) / hy;
                    }
                }
            }
            if self.model.source() != SourceTerm::None {
                let mut s = [T::zero(); 4];
                for c in u[..field].chunks_exact(nv) {
                    apply_source(c, self.model.source(), &mut s[..nv]);
                    for q in 0..nv {
                        b[q] -= s[q];
                    }
                }
            }
            out[field..].copy_from_slice(&b[..nv]);
        }

        if let Some(pos) = out[..field].iter().position(|v| !v.is_finite()) {
            let node = pos / nv;
            let (i, j) = (node % nx, node / nx);
            return Err(Error::NonFinite {
                location: if self.grid.dims == 2 {
                    format!("node ({i}, {j}), x = {}, y = {}, t = {t}", self.grid.coord_f64(Axis::X, i as i64), self.grid.coord_f64(Axis::Y, j as i64))
                } else {
                    format!("node {i}, x = {}, t = {t}", self.grid.coord_f64(Axis::X, i as i64))
                },
            });
        }
        Ok(())
    }

    /// Largest wave speed over the field (both directions in 2D).
    pub fn max_wave_speed(&self, u: &[T]) -> Result<T> {
        let nv = self.nv();
        let field = &u[..self.field_len()];
        let mut a = wave_speed_bound(&self.model, field)?;
        if self.grid.dims == 2 {
            let mut perm = vec![T::zero(); field.len()];
            for (s, d) in field.chunks_exact(nv).zip(perm.chunks_exact_mut(nv)) {
                permute_into(Axis::Y, s, d);
            }
            a = a.max(wave_speed_bound(&self.model, &perm)?);
        }
        Ok(a)
    }

    /// Smallest spacing over the active axes.
    pub fn min_spacing(&self) -> T {
        let hx = self.grid.spacing::<T>(Axis::X);
        if self.grid.dims == 2 {
            hx.min(self.grid.spacing::<T>(Axis::Y))
        } else {
            hx
        }
    }

    /// Packs a field into a state vector (appending a zero budget if tracked).
    pub fn state_from_field(&self, field: Vec<T>) -> Vec<T> {
        let mut s = field;
        if self.track_budget {
            s.extend(std::iter::repeat_n(T::zero(), self.nv()));
        }
        s
    }
}

/// Mirror-averages a 2D field about the vertical line `x = plane`, with the
/// x momentum made antisymmetric.
pub fn enforce_symmetry<T: Real>(field: &mut [T], grid: &Grid, nv: usize, plane: f64) -> Result<()> {
    let h = grid.spacing::<f64>(Axis::X);
    let s = 2.0 * (plane - grid.lo[0]) / h;
    let sum = s.round();
    if (s - sum).abs() > 1e-9 || sum < 0.0 {
        return Err(Error::Config(format!("symmetry plane x = {plane} not on a node or midpoint")));
    }
    let sum = sum as usize;
    let nx = grid.n[0];
    if sum + 1 != nx {
        return Err(Error::Config(format!(
            "grid is not symmetric about x = {plane}"
        )));
    }
    let half = T::from_f64(0.5);
    for row in field.chunks_exact_mut(nx * nv) {
        for i in 0..nx.div_ceil(2) {
            let k = sum - i;
            for q in 0..nv {
                let (a, b) = (row[i * nv + q], row[k * nv + q]);
                if q == 1 && nv > 1 {
                    let m = half * (a - b);
                    row[i * nv + q] = m;
                    row[k * nv + q] = -m;
                } else {
                    let m = half * (a + b);
                    row[i * nv + q] = m;
                    row[k * nv + q] = m;
                }
            }
        }
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TimeStep {
    /// `dt = cfl * h / max wave speed`, recomputed every step.
    Cfl(f64),
    /// Fixed step, shortened uniformly so the end time is hit exactly.
    Fixed(f64),
    /// Exactly this many equal steps across the interval.
    Steps(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Integrator {
    SspRk3,
    /// Linear SSP-RK(m, m-1).
    Lssprk(usize),
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunStats {
    pub steps: usize,
    pub t_final: f64,
    pub last_dt: f64,
}

/// Time-marching options beyond the operator itself.
#[derive(Clone, Debug)]
pub struct MarchOptions {
    pub step: TimeStep,
    pub integrator: Integrator,
    /// Mirror plane for symmetry enforcement after each step.
    pub symmetry_plane: Option<f64>,
    /// Stop after this many steps even if the end time is not reached.
    pub max_steps: Option<usize>,
}

/// Advances `state` from `t0` to `t_end`.
pub fn march<T: Real>(
    solver: &Solver<T>,
    state: &mut [T],
    t0: f64,
    t_end: f64,
    opts: &MarchOptions,
) -> Result<RunStats> {
    let mut ws = Workspace::new();
    let mut op = |t: f64, u: &[T], out: &mut [T]| solver.rhs(t, u, out);
    let alphas: Vec<T> = match opts.integrator {
        Integrator::SspRk3 => Vec::new(),
        Integrator::Lssprk(m) => crate::timeint::lssprk_tableau(m)?.alphas_as(),
    };
    let mut stats = RunStats {
        t_final: t0,
        ..RunStats::default()
    };
    let span = T::from_f64(t_end) - T::from_f64(t0);
    let fixed = match opts.step {
        TimeStep::Fixed(dt) => {
            if !(dt > 0.0) {
                return Err(Error::Config("time step must be positive".into()));
            }
            let steps = ((t_end - t0) / dt - 1e-9).ceil().max(1.0) as usize;
            Some((steps, span / T::from_i64(steps as i64)))
        }
        TimeStep::Steps(steps) => {
            if steps == 0 {
                return Err(Error::Config("step count must be positive".into()));
            }
            Some((steps, span / T::from_i64(steps as i64)))
        }
        TimeStep::Cfl(c) => {
            if !(c > 0.0) {
                return Err(Error::Config("CFL number must be positive".into()));
            }
            None
        }
    };
    let mut t = T::from_f64(t0);
    let end = T::from_f64(t_end);
    loop {
        if let Some(m) = opts.max_steps {
            if stats.steps >= m {
                break;
            }
        }
        let dt = match (fixed, opts.step) {
            (Some((steps, dt)), _) => {
                if stats.steps >= steps {
                    break;
                }
                dt
            }
            (None, TimeStep::Cfl(c)) => {
                if t >= end {
                    break;
                }
                let a = solver.max_wave_speed(state)?;
                let mut dt = if a > T::zero() {
                    T::from_f64(c) * solver.min_spacing() / a
                } else {
                    end - t
                };
                if t + dt >= end {
                    dt = end - t;
                }
                dt
            }
            _ => unreachable!(),
        };
        let tf = t.to_f64();
        match opts.integrator {
            Integrator::SspRk3 => ssp_rk3_step(state, tf, dt, &mut op, &mut ws)?,
            Integrator::Lssprk(_) => lssprk_step(state, tf, dt, &mut op, &alphas, &mut ws)?,
        }
        if let Some(plane) = opts.symmetry_plane {
            let len = solver.field_len();
            enforce_symmetry(&mut state[..len], &solver.grid, solver.nv(), plane)?;
        }
        stats.steps += 1;
        stats.last_dt = dt.to_f64();
        t = match fixed {
            Some((steps, _)) if stats.steps == steps => end,
            Some((_, dt)) => T::from_f64(t0) + dt * T::from_i64(stats.steps as i64),
            None => {
                if t + dt >= end {
                    end
                } else {
                    t + dt
                }
            }
        };
        stats.t_final = t.to_f64();
    }
    Ok(stats)
}

/// Writes a 1D field as `x,<names...>` rows.
pub fn write_csv_1d<T: Real, W: Write>(
    mut w: W,
    grid: &Grid,
    nv: usize,
    field: &[T],
    names: &[&str],
) -> Result<()> {
    writeln!(w, "x,{}", names.join(","))?;
    for (i, c) in field.chunks_exact(nv).enumerate() {
        write!(w, "{}", grid.coord::<T>(Axis::X, i as i64))?;
        for v in c {
            write!(w, ",{v}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

/// Writes a 2D field as `x,y,<names...>` rows, x fastest.
pub fn write_csv_2d<T: Real, W: Write>(
    mut w: W,
    grid: &Grid,
    nv: usize,
    field: &[T],
    names: &[&str],
) -> Result<()> {
    writeln!(w, "x,y,{}", names.join(","))?;
    let nx = grid.n[0];
    for (k, c) in field.chunks_exact(nv).enumerate() {
        let (i, j) = (k % nx, k / nx);
        write!(
            w,
            "{},{}",
            grid.coord::<T>(Axis::X, i as i64),
            grid.coord::<T>(Axis::Y, j as i64)
        )?;
        for v in c {
            write!(w, ",{v}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physics::EulerState2D;
    use crate::reconstruct::ReconstructionScheme;

    fn periodic_advection(n: usize, r: usize) -> Solver<f64> {
        let grid = Grid::line(n, -1.0, 1.0, true, r);
        Solver::new(
            grid,
            Model::Advection,
            ReconstructionScheme::eno_mr(r).prepare(),
            Boundaries::periodic_1d(),
        )
        .unwrap()
    }

    #[test]
    fn periodic_ghosts() {
        let grid = Grid::line(8, 0.0, 1.0, true, 2);
        let f: Vec<f64> = (0..8).map(|i| i as f64).collect();
        let ext = fill_ghosts(&f, 1, &grid, &Boundaries::periodic_1d(), 0.0).unwrap();
        assert_eq!(&ext[..2], &[6.0, 7.0]);
        assert_eq!(&ext[10..], &[0.0, 1.0]);
    }

    #[test]
    fn reflective_ghosts_flip_normal_momentum() {
        let ctx = LineContext { axis: Axis::Y, tangential: 0.5, lo: 0.0, h: 0.1, t: 0.0 };
        let nv = 4;
        let mut ext = vec![0.0; (6 + 4) * nv];
        for i in 0..6 {
            ext[(2 + i) * nv..(3 + i) * nv].copy_from_slice(&[1.0 + i as f64, 0.1, -0.2 * i as f64, 5.0]);
        }
        fill_line_side(&mut ext, nv, 2, 6, false, &BoundaryCondition::Reflective, &ctx).unwrap();
        assert_eq!(&ext[nv..2 * nv], &[2.0, -0.1, -0.2, 5.0]);
        assert_eq!(&ext[..nv], &[3.0, -0.1, -0.4, 5.0]);
    }

    #[test]
    fn dirichlet_state_is_permuted_for_y_lines() {
        let ctx = LineContext { axis: Axis::Y, tangential: 0.0, lo: 0.0, h: 0.1, t: 0.0 };
        let mut ext = vec![0.0; 7 * 4];
        let bc = BoundaryCondition::Dirichlet(vec![1.0, 2.0, 3.0, 4.0]);
        fill_line_side(&mut ext, 4, 2, 3, true, &bc, &ctx).unwrap();
        assert_eq!(&ext[5 * 4..6 * 4], &[1.0, 3.0, 2.0, 4.0]);
    }

    #[test]
    fn constant_field_has_zero_rhs() {
        let s = periodic_advection(40, 5);
        let u = vec![0.7; 40];
        let mut out = vec![1.0; 40];
        s.rhs(0.0, &u, &mut out).unwrap();
        assert!(out.iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn periodic_rhs_telescopes() {
        let s = periodic_advection(64, 3);
        let u: Vec<f64> = (0..64)
            .map(|i| {
                let x = s.grid.coord_f64(Axis::X, i);
                if x.abs() < 0.3 { 1.0 } else { (3.0 * x).sin() }
            })
            .collect();
        let mut out = vec![0.0; 64];
        s.rhs(0.0, &u, &mut out).unwrap();
        let total: f64 = out.iter().sum();
        let scale: f64 = out.iter().map(|v| v.abs()).sum();
        assert!(total.abs() < 1e-13 * scale);
    }

    #[test]
    fn advection_rhs_is_fifth_order() {
        use std::f64::consts::PI;
        let err = |n: usize| {
            let s = periodic_advection(n, 3);
            let x = |i: usize| s.grid.coord_f64(Axis::X, i as i64);
            let u: Vec<f64> = (0..n).map(|i| (PI * x(i)).sin()).collect();
            let mut out = vec![0.0; n];
            s.rhs(0.0, &u, &mut out).unwrap();
            (0..n).map(|i| (out[i] + PI * (PI * x(i)).cos()).abs()).fold(0.0, f64::max)
        };
        let order = (err(100) / err(200)).log2();
        assert!(order > 4.7, "{order}");
    }

    #[test]
    fn symmetry_enforcement() {
        let grid = Grid::plane([5, 2], [0.0, 0.0], [0.25, 1.0], 3);
        let nv = 4;
        let mut f = vec![0.0; 10 * nv];
        for j in 0..2 {
            for i in 0..5 {
                let c = (j * 5 + i) * nv;
                let sym = (i as f64 - 2.0).abs();
                f[c..c + nv].copy_from_slice(&[1.0 + sym, 0.3 * (i as f64 - 2.0), 0.2 * sym, 3.0 + sym]);
            }
        }
        let before = f.clone();
        enforce_symmetry(&mut f, &grid, nv, 0.125).unwrap();
        for (a, b) in f.iter().zip(&before) {
            assert!((a - b).abs() < 1e-15);
        }
        f[0] += 0.5;
        f[4 * nv] -= 0.5;
        enforce_symmetry(&mut f, &grid, nv, 0.125).unwrap();
        assert_eq!(f[0], before[0]);
        assert!(enforce_symmetry(&mut f, &grid, nv, 0.1).is_err());
    }

    #[test]
    fn uniform_2d_flow_is_steady() {
        let gamma = 1.4;
        let grid = Grid::plane([12, 12], [0.0, 0.0], [1.0, 1.0], 3);
        let model = Model::Euler2D { gamma, source: SourceTerm::None };
        let s = Solver::new(
            grid,
            model,
            ReconstructionScheme::eno_mr(3).prepare(),
            Boundaries::uniform(BoundaryCondition::NonReflective),
        )
        .unwrap();
        let st = EulerState2D::from_primitive(1.0, 0.3, -0.2, 1.0, gamma).to_array();
        let u: Vec<f64> = (0..144).flat_map(|_| st).collect();
        let mut out = vec![1.0; u.len()];
        s.rhs(0.0, &u, &mut out).unwrap();
        assert!(out.iter().all(|v| v.abs() < 1e-13));
    }

    #[test]
    fn mismatched_periodic_is_rejected() {
        let grid = Grid::line(20, 0.0, 1.0, true, 3);
        let bc = Boundaries([
            [BoundaryCondition::Periodic, BoundaryCondition::NonReflective],
            [BoundaryCondition::NonReflective, BoundaryCondition::NonReflective],
        ]);
        let r = Solver::new(grid, Model::Advection, ReconstructionScheme::eno_mr(3).prepare::<f64>(), bc);
        assert!(matches!(r, Err(Error::Config(_))));
    }
}
