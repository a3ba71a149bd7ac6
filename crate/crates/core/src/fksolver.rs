//! Finite-difference solvers for the Feynman-Kac boundary value problems:
//! the resolvent `U` with a skew interface, the local-time-killed Green
//! function `G`, and the degenerate `R`/`Q` system behind the transform of
//! integral functionals of local time.
//!
//! Every problem is reduced to `p u'' + q u' − c u = −s` on a union of
//! uniform segments. Segment ends carry junction conditions
//! `α₊ u'(x+) − α₋ u'(x−) − κ u(x) = ρ` written with one-sided second-order
//! stencils, so coefficient breakpoints, derivative jumps and the skew
//! interface all keep the scheme second order. Richardson extrapolation over
//! grids refined twice lifts it to fourth order at the coarse nodes.

use crate::error::{check_positive, Error, Result};
use crate::model::SkewParam;
use crate::quad::GaussLegendre;
use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)] // inherent methods win once std is in the crate graph
use num_traits::Float;

/// A scalar function that is continuous between finitely many breakpoints.
pub struct PiecewiseFunction {
    breakpoints: Vec<f64>,
    eval: Box<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl core::fmt::Debug for PiecewiseFunction {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("PiecewiseFunction")
            .field("breakpoints", &self.breakpoints)
            .finish_non_exhaustive()
    }
}

impl PiecewiseFunction {
    pub fn new(
        mut breakpoints: Vec<f64>,
        eval: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        if breakpoints.iter().any(|b| !b.is_finite()) {
            return Err(Error::InvalidInput("breakpoints must be finite"));
        }
        breakpoints.sort_by(|a, b| a.total_cmp(b));
        breakpoints.dedup();
        Ok(PiecewiseFunction {
            breakpoints,
            eval: Box::new(eval),
        })
    }

    /// A continuous function.
    pub fn smooth(eval: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        PiecewiseFunction {
            breakpoints: Vec::new(),
            eval: Box::new(eval),
        }
    }

    pub fn constant(c: f64) -> Self {
        Self::smooth(move |_| c)
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    /// `height` on `(a, b]`, zero elsewhere.
    pub fn indicator(a: f64, b: f64, height: f64) -> Result<Self> {
        if !(a < b) {
            return Err(Error::InvalidInput("indicator needs a < b"));
        }
        Self::new(
            vec![a, b],
            move |x| if x > a && x <= b { height } else { 0.0 },
        )
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        (self.eval)(x)
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }
}

/// Grid controls shared by all solvers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdOptions {
    /// Minimum number of coarse-grid nodes.
    pub nodes: usize,
    /// Largest coarse-grid spacing.
    pub max_step: f64,
    /// Extrapolate from the grid and its two refinements.
    pub richardson: bool,
}

impl Default for FdOptions {
    fn default() -> Self {
        FdOptions {
            nodes: 2000,
            max_step: 0.005,
            richardson: true,
        }
    }
}

/// Achieved magnitude of one imposed condition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionCheck {
    pub name: &'static str,
    pub at: f64,
    pub achieved: f64,
}

/// Grid solution of a boundary value problem.
#[derive(Debug, Clone, PartialEq)]
pub struct BVPSolution {
    grid: Vec<f64>,
    values: Vec<f64>,
    // index of the first node of every segment, plus the last node
    segments: Vec<usize>,
    /// Largest residual of the discrete equations on the finest grid.
    pub residual_norm: f64,
    /// Size of the last extrapolation correction (zero without Richardson
    /// extrapolation).
    pub error_estimate: f64,
    pub conditions: Vec<ConditionCheck>,
}

impl BVPSolution {
    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.grid[0], self.grid[self.grid.len() - 1])
    }

    /// Cubic Lagrange interpolation inside the segment containing `x`.
    pub fn value_at(&self, x: f64) -> Result<f64> {
        let (lo, hi) = self.domain();
        if !(x >= lo && x <= hi) {
            return Err(Error::ProbeOutsideGrid { y: x });
        }
        let s = match self
            .segments
            .binary_search_by(|&i| self.grid[i].total_cmp(&x))
        {
            Ok(k) => return Ok(self.values[self.segments[k]]),
            Err(k) => k - 1,
        };
        let (first, last) = (self.segments[s], self.segments[s + 1]);
        let h = self.grid[first + 1] - self.grid[first];
        let k = first + ((x - self.grid[first]) / h) as usize;
        let i0 = k.saturating_sub(1).max(first).min(last.saturating_sub(3));
        let pts = (last - first + 1).min(4);
        let mut v = 0.0;
        for a in i0..i0 + pts {
            let mut w = 1.0;
            for b in i0..i0 + pts {
                if a != b {
                    w *= (x - self.grid[b]) / (self.grid[a] - self.grid[b]);
                }
            }
            v += w * self.values[a];
        }
        Ok(v)
    }

    pub fn condition(&self, name: &str) -> Option<&ConditionCheck> {
        self.conditions.iter().find(|c| c.name == name)
    }
}

/// `α₊ u'(x+) − α₋ u'(x−) − κ u(x) = ρ` at an interior segment end.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Junction {
    name: &'static str,
    alpha_plus: f64,
    alpha_minus: f64,
    kappa: f64,
    rho: f64,
}

impl Junction {
    fn smooth() -> Self {
        Junction {
            name: "C1 matching",
            alpha_plus: 1.0,
            alpha_minus: 1.0,
            kappa: 0.0,
            rho: 0.0,
        }
    }
}

/// Condition at an outer end: `a u' + b u = c` or `u = c`.
#[derive(Debug, Clone, Copy, PartialEq)]
enum End {
    Dirichlet(f64),
    Robin { a: f64, b: f64, c: f64 },
}

/// `p u'' + q u' − c u = −s` on `points[0] .. points[last]`.
struct LinearBvp<'a> {
    points: Vec<f64>,
    junctions: Vec<Junction>,
    left: End,
    right: End,
    coef: &'a dyn Fn(f64) -> [f64; 4],
}

struct Discrete {
    grid: Vec<f64>,
    values: Vec<f64>,
    segments: Vec<usize>,
    residual: f64,
}

impl LinearBvp<'_> {
    fn intervals(&self, opts: &FdOptions) -> Vec<usize> {
        let total = self.points[self.points.len() - 1] - self.points[0];
        let target = opts.nodes.max(2) as f64;
        self.points
            .windows(2)
            .map(|w| {
                let len = w[1] - w[0];
                let by_step = (len / opts.max_step).ceil();
                let by_share = (target * len / total).ceil();
                (by_step.max(by_share) as usize).max(4)
            })
            .collect()
    }

    fn solve(&self, opts: &FdOptions) -> Result<BVPSolution> {
        let n = self.intervals(opts);
        let coarse = self.discretize(&n)?;
        if !opts.richardson {
            return Ok(self.finish(coarse, 0.0));
        }
        // interior errors expand in h², the one-sided junction stencils add
        // an h³ term: eliminate both
        let n2: Vec<usize> = n.iter().map(|k| 2 * k).collect();
        let n4: Vec<usize> = n.iter().map(|k| 4 * k).collect();
        let fine = self.discretize(&n2)?;
        let finest = self.discretize(&n4)?;
        let u2 = restrict(&fine.values, &n2, &n);
        let u4 = restrict(&finest.values, &n4, &n);
        let mut out = coarse;
        let mut err = 0.0f64;
        for i in 0..out.values.len() {
            let r1 = (4.0 * u2[i] - out.values[i]) / 3.0;
            let r2 = (4.0 * u4[i] - u2[i]) / 3.0;
            let u = (8.0 * r2 - r1) / 7.0;
            err = err.max((u - r2).abs());
            out.values[i] = u;
        }
        out.residual = finest.residual;
        Ok(self.finish(out, err))
    }

    fn finish(&self, d: Discrete, error_estimate: f64) -> BVPSolution {
        let mut sol = BVPSolution {
            grid: d.grid,
            values: d.values,
            segments: d.segments,
            residual_norm: d.residual,
            error_estimate,
            conditions: Vec::new(),
        };
        for (j, jn) in self.junctions.iter().enumerate() {
            let i = sol.segments[j + 1];
            let (dm, dp) = one_sided(&sol.grid, &sol.values, i);
            let achieved =
                (jn.alpha_plus * dp - jn.alpha_minus * dm - jn.kappa * sol.values[i] - jn.rho)
                    .abs();
            sol.conditions.push(ConditionCheck {
                name: jn.name,
                at: sol.grid[i],
                achieved,
            });
        }
        sol
    }

    fn discretize(&self, n: &[usize]) -> Result<Discrete> {
        let total: usize = n.iter().sum();
        let size = total + 1;
        let mut grid = Vec::with_capacity(size);
        let mut segments = Vec::with_capacity(n.len() + 1);
        let mut spacing = Vec::with_capacity(n.len());
        for (s, &k) in n.iter().enumerate() {
            let (a, b) = (self.points[s], self.points[s + 1]);
            let h = (b - a) / k as f64;
            segments.push(grid.len());
            spacing.push(h);
            for i in 0..k {
                grid.push(if i == 0 { a } else { a + i as f64 * h });
            }
        }
        segments.push(grid.len());
        grid.push(self.points[self.points.len() - 1]);

        let mut lo = vec![0.0; size];
        let mut di = vec![0.0; size];
        let mut up = vec![0.0; size];
        let mut rhs = vec![0.0; size];
        for (s, &k) in n.iter().enumerate() {
            let h = spacing[s];
            let first = segments[s];
            for i in first + 1..first + k {
                let [p, q, c, src] = (self.coef)(grid[i]);
                lo[i] = p / (h * h) - q / (2.0 * h);
                di[i] = -2.0 * p / (h * h) - c;
                up[i] = p / (h * h) + q / (2.0 * h);
                rhs[i] = -src;
            }
        }
        // interior rows stay untouched; keep copies for residuals
        let rows = (lo.clone(), di.clone(), up.clone(), rhs.clone());

        // junction rows, with u_{j±2} eliminated through rows j±1
        for (s, jn) in self.junctions.iter().enumerate() {
            let j = segments[s + 1];
            let (hm, hp) = (spacing[s], spacing[s + 1]);
            let ap = jn.alpha_plus / (2.0 * hp);
            let am = jn.alpha_minus / (2.0 * hm);
            di[j] = -3.0 * ap - 3.0 * am - jn.kappa;
            up[j] = 4.0 * ap;
            lo[j] = 4.0 * am;
            rhs[j] = jn.rho;
            let (cr, cl) = (-ap, -am);
            di[j] -= cr * rows.0[j + 1] / rows.2[j + 1];
            up[j] -= cr * rows.1[j + 1] / rows.2[j + 1];
            rhs[j] -= cr * rows.3[j + 1] / rows.2[j + 1];
            di[j] -= cl * rows.2[j - 1] / rows.0[j - 1];
            lo[j] -= cl * rows.1[j - 1] / rows.0[j - 1];
            rhs[j] -= cl * rows.3[j - 1] / rows.0[j - 1];
        }

        match self.left {
            End::Dirichlet(v) => {
                di[0] = 1.0;
                rhs[0] = v;
            }
            End::Robin { a, b, c } => {
                // a (−3u0 + 4u1 − u2)/(2h) + b u0 = c
                let h = spacing[0];
                let w = a / (2.0 * h);
                di[0] = -3.0 * w + b;
                up[0] = 4.0 * w;
                rhs[0] = c;
                let cr = -w;
                di[0] -= cr * rows.0[1] / rows.2[1];
                up[0] -= cr * rows.1[1] / rows.2[1];
                rhs[0] -= cr * rows.3[1] / rows.2[1];
            }
        }
        let last = size - 1;
        match self.right {
            End::Dirichlet(v) => {
                di[last] = 1.0;
                rhs[last] = v;
            }
            End::Robin { a, b, c } => {
                // a (3uN − 4uN−1 + uN−2)/(2h) + b uN = c
                let h = spacing[spacing.len() - 1];
                let w = a / (2.0 * h);
                di[last] = 3.0 * w + b;
                lo[last] = -4.0 * w;
                rhs[last] = c;
                let cl = w;
                di[last] -= cl * rows.2[last - 1] / rows.0[last - 1];
                lo[last] -= cl * rows.1[last - 1] / rows.0[last - 1];
                rhs[last] -= cl * rows.3[last - 1] / rows.0[last - 1];
            }
        }

        let values = thomas(&lo, &di, &up, &rhs)?;
        let mut residual = 0.0f64;
        for i in 1..last {
            let r = lo[i] * values[i - 1] + di[i] * values[i] + up[i] * values[i + 1] - rhs[i];
            let scale = lo[i].abs() + di[i].abs() + up[i].abs();
            residual = residual.max(r.abs() / scale.max(1.0));
        }
        Ok(Discrete {
            grid,
            values,
            segments,
            residual,
        })
    }
}

/// Values of a refined grid at the nodes of the coarse one.
fn restrict(values: &[f64], fine: &[usize], coarse: &[usize]) -> Vec<f64> {
    let mut out = Vec::with_capacity(coarse.iter().sum::<usize>() + 1);
    let mut start = 0;
    for (&nf, &nc) in fine.iter().zip(coarse) {
        let r = nf / nc;
        out.extend((0..nc).map(|k| values[start + r * k]));
        start += nf;
    }
    out.push(values[values.len() - 1]);
    out
}

/// One-sided fourth-order derivatives `(u'(x−), u'(x+))` at node `i`.
fn one_sided(grid: &[f64], u: &[f64], i: usize) -> (f64, f64) {
    const W: [f64; 5] = [25.0, -48.0, 36.0, -16.0, 3.0];
    let hm = grid[i] - grid[i - 1];
    let hp = grid[i + 1] - grid[i];
    let dm: f64 = (0..5).map(|k| W[k] * u[i - k]).sum::<f64>() / (12.0 * hm);
    let dp: f64 = -(0..5).map(|k| W[k] * u[i + k]).sum::<f64>() / (12.0 * hp);
    (dm, dp)
}

/// Tridiagonal solve by the Thomas algorithm.
fn thomas(lo: &[f64], di: &[f64], up: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = di.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut denom = di[0];
    if denom == 0.0 || !denom.is_finite() {
        return Err(Error::SingularSystem { row: 0 });
    }
    c[0] = up[0] / denom;
    d[0] = rhs[0] / denom;
    for i in 1..n {
        denom = di[i] - lo[i] * c[i - 1];
        if denom == 0.0 || !denom.is_finite() {
            return Err(Error::SingularSystem { row: i });
        }
        c[i] = up[i] / denom;
        d[i] = (rhs[i] - lo[i] * d[i - 1]) / denom;
    }
    let mut x = d;
    for i in (0..n - 1).rev() {
        x[i] -= c[i] * x[i + 1];
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularSystem { row: n - 1 });
    }
    Ok(x)
}

/// A point carrying a derivative jump `u'(x+) − u'(x−) = κ u(x) + ρ`.
#[derive(Debug, Clone, Copy)]
struct Kink {
    at: f64,
    kappa: f64,
    rho: f64,
    name: &'static str,
}

/// Merge breakpoints, kinks and the skew interface at 0 into junctions.
fn x_space_layout(
    p: &SkewParam,
    x_max: f64,
    breakpoints: &[f64],
    kinks: &[Kink],
) -> Result<(Vec<f64>, Vec<Junction>)> {
    let mut pts: Vec<f64> = breakpoints
        .iter()
        .copied()
        .chain(kinks.iter().map(|k| k.at))
        .chain(core::iter::once(0.0))
        .collect();
    if pts.iter().any(|x| x.abs() >= x_max) {
        return Err(Error::InvalidInput(
            "domain truncation must exceed every breakpoint, |z| and |q|",
        ));
    }
    pts.sort_by(|a, b| a.total_cmp(b));
    pts.dedup();
    let junctions = pts
        .iter()
        .map(|&x| {
            let mut j = Junction::smooth();
            let mut kappa = 0.0;
            let mut rho = 0.0;
            for k in kinks.iter().filter(|k| k.at == x) {
                kappa += k.kappa;
                rho += k.rho;
                j.name = k.name;
            }
            if x == 0.0 {
                // β u'(0+) − (1−β) u'(0−) takes half of any jump placed at 0
                j.alpha_plus = p.beta();
                j.alpha_minus = 1.0 - p.beta();
                j.kappa = 0.5 * kappa;
                j.rho = 0.5 * rho;
                j.name = if kinks.iter().any(|k| k.at == 0.0) {
                    "skew interface with jump"
                } else {
                    "skew interface"
                };
            } else {
                j.kappa = kappa;
                j.rho = rho;
            }
            j
        })
        .collect();
    let mut points = Vec::with_capacity(pts.len() + 2);
    points.push(-x_max);
    points.extend(pts);
    points.push(x_max);
    Ok((points, junctions))
}

/// Default truncation: `8/√(2λ)` beyond everything of interest.
pub fn default_truncation(lambda: f64, reach: f64) -> f64 {
    reach + 8.0 / (2.0 * lambda).sqrt()
}

fn truncation(lambda: f64, x_max: Option<f64>, reach: f64) -> Result<f64> {
    match x_max {
        Some(x) => check_positive("x_max", x),
        None => Ok(default_truncation(lambda, reach)),
    }
}

fn reach(breakpoints: &[f64], extra: &[f64]) -> f64 {
    breakpoints
        .iter()
        .chain(extra)
        .fold(0.0f64, |m, x| m.max(x.abs()))
}

fn check_nonnegative(name: &'static str, f: &PiecewiseFunction, lo: f64, hi: f64) -> Result<()> {
    let probes = 257;
    for i in 0..probes {
        let x = lo + (hi - lo) * i as f64 / (probes - 1) as f64;
        let v = f.eval(x);
        if !(v >= 0.0) || !v.is_finite() {
            return Err(Error::InvalidParameter {
                name,
                value: v,
                reason: "must be finite and nonnegative",
            });
        }
    }
    Ok(())
}

/// `U(x) = E_x[Φ(W(τ)) exp(−∫₀^τ g(W))]`: solves `½U'' − (λ+g)U = −λΦ`
/// with `(1−β)U'(0−) = βU'(0+)` on `[−X, X]`. Far ends decay towards the
/// local constant solution `λΦ/(λ+g)` at rate `√(2(λ+g))`.
pub fn solve_resolvent_u(
    p: &SkewParam,
    lambda: f64,
    g: &PiecewiseFunction,
    phi: &PiecewiseFunction,
    x_max: Option<f64>,
    opts: &FdOptions,
) -> Result<BVPSolution> {
    check_positive("lambda", lambda)?;
    let bps: Vec<f64> = g
        .breakpoints()
        .iter()
        .chain(phi.breakpoints())
        .copied()
        .collect();
    let x = truncation(lambda, x_max, reach(&bps, &[]))?;
    check_nonnegative("g", g, -x, x)?;
    let (points, junctions) = x_space_layout(p, x, &bps, &[])?;
    let coef = |y: f64| [0.5, 0.0, lambda + g.eval(y), lambda * phi.eval(y)];
    let far = |y: f64| {
        let k = lambda + g.eval(y);
        ((2.0 * k).sqrt(), lambda * phi.eval(y) / k)
    };
    let (rl, ul) = far(-x);
    let (rr, ur) = far(x);
    LinearBvp {
        points,
        junctions,
        left: End::Robin {
            a: 1.0,
            b: -rl,
            c: -rl * ul,
        },
        right: End::Robin {
            a: 1.0,
            b: rr,
            c: rr * ur,
        },
        coef: &coef,
    }
    .solve(opts)
}

/// Green function killed by `f` and by local time at `q`:
/// `½G'' − (λ+f)G = 0` off `{z, q, 0}`, `G'(z+) − G'(z−) = −2λ`,
/// `G'(q+) − G'(q−) = 2γG(q)` and `(1−β)G'(0−) = βG'(0+)`. Coinciding
/// points combine their conditions; at 0 the skew interface reads
/// `βG'(0+) − (1−β)G'(0−) = γG(0)` for `q = 0` and `−λ` for `z = 0`.
#[allow(clippy::too_many_arguments)]
pub fn solve_g(
    p: &SkewParam,
    lambda: f64,
    f: &PiecewiseFunction,
    gamma: f64,
    q: f64,
    z: f64,
    x_max: Option<f64>,
    opts: &FdOptions,
) -> Result<BVPSolution> {
    check_positive("lambda", lambda)?;
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "gamma",
            value: gamma,
            reason: "must be finite and >= 0",
        });
    }
    if !q.is_finite() || !z.is_finite() {
        return Err(Error::InvalidInput("q and z must be finite"));
    }
    let x = truncation(lambda, x_max, reach(f.breakpoints(), &[q, z]))?;
    check_nonnegative("f", f, -x, x)?;
    let mut kinks = vec![Kink {
        at: z,
        kappa: 0.0,
        rho: -2.0 * lambda,
        name: "source jump at z",
    }];
    if gamma > 0.0 {
        kinks.push(Kink {
            at: q,
            kappa: 2.0 * gamma,
            rho: 0.0,
            name: if q == z {
                "source and killing jump at z = q"
            } else {
                "killing jump at q"
            },
        });
    }
    let (points, junctions) = x_space_layout(p, x, f.breakpoints(), &kinks)?;
    let coef = |y: f64| [0.5, 0.0, lambda + f.eval(y), 0.0];
    let rate = |y: f64| (2.0 * (lambda + f.eval(y))).sqrt();
    LinearBvp {
        points,
        junctions,
        left: End::Robin {
            a: 1.0,
            b: -rate(-x),
            c: 0.0,
        },
        right: End::Robin {
            a: 1.0,
            b: rate(x),
            c: 0.0,
        },
        coef: &coef,
    }
    .solve(opts)
}

/// Truncation used for an unbounded level: `max(20/√(2λ), 50)`.
pub fn infinite_level_truncation(lambda: f64) -> f64 {
    (20.0 / (2.0 * lambda).sqrt()).max(50.0)
}

/// Solves `2vR'' − (λv + f)R = 0`, `R(0) = 1`, and
/// `2vQ'' + 2Q' − (λv + f)Q = −R`, `Q` regular at 0, with `R(h) = Q(h) = 0`.
/// For `h = ∞` both decay conditions become Robin conditions at
/// [`infinite_level_truncation`].
///
/// `v = 0` is a grid node: `R` is pinned there and `Q` satisfies the
/// regularity condition `Q'(0) − f(0)Q(0)/2 = −R(0)/2` that the equation
/// itself imposes at the singular point.
pub fn solve_rq(
    lambda: f64,
    f: &PiecewiseFunction,
    h: f64,
    opts: &FdOptions,
) -> Result<(BVPSolution, BVPSolution)> {
    check_positive("lambda", lambda)?;
    if !(h > 0.0) {
        return Err(Error::InvalidParameter {
            name: "h",
            value: h,
            reason: "level must be > 0 (or infinite)",
        });
    }
    let f0 = f.eval(0.0);
    if f0 != 0.0 {
        return Err(Error::InvalidParameter {
            name: "f(0)",
            value: f0,
            reason: "the functional needs f(0) = 0",
        });
    }
    let top = if h.is_finite() {
        h
    } else {
        infinite_level_truncation(lambda)
    };
    check_nonnegative("f", f, 0.0, top)?;
    let mut points = vec![0.0];
    points.extend(
        f.breakpoints()
            .iter()
            .copied()
            .filter(|&b| b > 0.0 && b < top),
    );
    points.push(top);
    let junctions = vec![Junction::smooth(); points.len() - 2];
    let (r_end, q_end) = if h.is_finite() {
        (End::Dirichlet(0.0), End::Dirichlet(0.0))
    } else {
        let k = ((lambda * top + f.eval(top)) / (2.0 * top)).sqrt();
        let robin = End::Robin {
            a: 1.0,
            b: k,
            c: 0.0,
        };
        (robin, robin)
    };
    let r_coef = |v: f64| [2.0 * v, 0.0, lambda * v + f.eval(v), 0.0];
    let r = LinearBvp {
        points: points.clone(),
        junctions: junctions.clone(),
        left: End::Dirichlet(1.0),
        right: r_end,
        coef: &r_coef,
    }
    .solve(opts)?;
    // the source needs R between coarse nodes on the refined grid
    let r_source = |v: f64| r.value_at(v).unwrap_or(0.0);
    let q_coef = |v: f64| [2.0 * v, 2.0, lambda * v + f.eval(v), r_source(v)];
    let q = LinearBvp {
        points,
        junctions,
        left: End::Robin {
            a: 1.0,
            b: -0.5 * f0,
            c: -0.5,
        },
        right: q_end,
        coef: &q_coef,
    }
    .solve(opts)?;
    Ok((r, q))
}

/// `E₀[exp(−∫ f(ℓ(τ,y)) dy); sup_y ℓ(τ,y) ≤ h]` as
/// `2λ ∫₀^{h/2β*} {β R(2(1−β)v) Q(2βv) + (1−β) R(2βv) Q(2(1−β)v)} dv`,
/// with `R` and `Q` extended by zero beyond `h`.
pub fn functional_transform(
    p: &SkewParam,
    lambda: f64,
    f: &PiecewiseFunction,
    h: f64,
    opts: &FdOptions,
) -> Result<f64> {
    let (r, q) = solve_rq(lambda, f, h, opts)?;
    let (_, top) = r.domain();
    let at = |s: &BVPSolution, v: f64| {
        if v > top {
            0.0
        } else {
            s.value_at(v).unwrap_or(0.0)
        }
    };
    let beta = p.beta();
    let integrand = |v: f64| {
        beta * at(&r, 2.0 * (1.0 - beta) * v) * at(&q, 2.0 * beta * v)
            + (1.0 - beta) * at(&r, 2.0 * beta * v) * at(&q, 2.0 * (1.0 - beta) * v)
    };
    let upper = top / (2.0 * p.beta_star());
    // panels narrow enough to resolve the grid, kinks included
    let step = (top / r.grid().len() as f64).max(1e-4) * 4.0;
    let panels = ((upper / step).ceil() as usize).max(16);
    let rule = GaussLegendre::new(8);
    let w = upper / panels as f64;
    let mut total = 0.0;
    for k in 0..panels {
        let a = k as f64 * w;
        total += rule.apply(integrand, a, a + w);
    }
    let v = 2.0 * lambda * total;
    if !(v > -1e-9 && v < 1.0 + 1e-9) {
        return Err(Error::NonConvergence {
            what: "functional transform outside [0, 1]",
            achieved: v,
            required: 0.0,
        });
    }
    Ok(v.clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_resolvent() {
        let p = SkewParam::new(0.7).unwrap();
        let u = solve_resolvent_u(
            &p,
            0.5,
            &PiecewiseFunction::zero(),
            &PiecewiseFunction::constant(1.0),
            None,
            &FdOptions::default(),
        )
        .unwrap();
        let worst = u
            .values()
            .iter()
            .map(|v| (v - 1.0).abs())
            .fold(0.0, f64::max);
        // round-off of the extrapolated solve on a long truncated grid
        assert!(worst < 1e-9, "{worst:e}");
    }

    #[test]
    fn interpolation_is_exact_for_cubics() {
        let sol = BVPSolution {
            grid: (0..=10).map(|i| i as f64 * 0.1).collect(),
            values: (0..=10).map(|i| (i as f64 * 0.1).powi(3)).collect(),
            segments: vec![0, 5, 10],
            residual_norm: 0.0,
            error_estimate: 0.0,
            conditions: Vec::new(),
        };
        for &x in &[0.0, 0.05, 0.33, 0.5, 0.77, 1.0] {
            assert!((sol.value_at(x).unwrap() - x * x * x).abs() < 1e-14);
        }
        assert!(sol.value_at(1.01).is_err());
    }

    #[test]
    fn f_at_zero_must_vanish() {
        let f = PiecewiseFunction::constant(1.0);
        assert!(solve_rq(1.0, &f, 1.0, &FdOptions::default()).is_err());
    }

    #[test]
    fn negative_killing_is_rejected() {
        let p = SkewParam::new(0.5).unwrap();
        let g = PiecewiseFunction::constant(-1.0);
        let phi = PiecewiseFunction::constant(1.0);
        assert!(solve_resolvent_u(&p, 1.0, &g, &phi, None, &FdOptions::default()).is_err());
    }
}
