//! Monte Carlo and closed-form validation suites.
//!
//! Every suite is a function of an explicit parameter set, so the `validate`
//! subcommand runs them at desk scale and the acceptance tests at full
//! scale with the same code.

use crate::error::{CliError, CliResult};
use crate::mc::{self, Horizon, Runner};
use sbm_core::analytic::{exp_law_at_zero, sup_cdf_fixed_time, sup_tail, SupBeta, SupLawQuery};
use sbm_core::fksolver::{functional_transform, solve_g, solve_rq, FdOptions, PiecewiseFunction};
use sbm_core::rayknight::{compare_columns, RkFamily};
use sbm_core::sim::{Construction, EndpointWindow};
use sbm_core::special::i0;
use sbm_core::stats::{binomial_se, ks_two_sample, Moments};
use sbm_core::SkewParam;
use std::fmt;

/// How an achieved value is judged against its requirement.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bound {
    /// `achieved <= required`
    AtMost,
    /// `achieved >= required`
    AtLeast,
    /// `achieved < required`
    Below,
}

/// One criterion of a suite.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub achieved: f64,
    pub bound: Bound,
    pub required: f64,
}

impl Check {
    pub fn new(name: impl Into<String>, achieved: f64, bound: Bound, required: f64) -> Self {
        Check {
            name: name.into(),
            achieved,
            bound,
            required,
        }
    }

    pub fn pass(&self) -> bool {
        match self.bound {
            Bound::AtMost => self.achieved <= self.required,
            Bound::AtLeast => self.achieved >= self.required,
            Bound::Below => self.achieved < self.required,
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let op = match self.bound {
            Bound::AtMost => "<=",
            Bound::AtLeast => ">=",
            Bound::Below => "<",
        };
        write!(
            f,
            "{} {}: achieved {:.6e}, required {} {:.6e}",
            if self.pass() { "PASS" } else { "FAIL" },
            self.name,
            self.achieved,
            op,
            self.required
        )
    }
}

pub fn all_pass(checks: &[Check]) -> bool {
    checks.iter().all(Check::pass)
}

/// Turns a failed suite into exit code 4.
pub fn require(checks: &[Check]) -> CliResult<()> {
    let failed: Vec<&str> = checks
        .iter()
        .filter(|c| !c.pass())
        .map(|c| c.name.as_str())
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Validation(failed.join(", ")))
    }
}

/// Independent seed for the `tag`-th sample set of a suite.
pub fn sub_seed(seed: u64, tag: u64) -> u64 {
    seed.wrapping_add(tag.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

fn skew(beta: f64) -> CliResult<SkewParam> {
    Ok(SkewParam::new(beta)?)
}

fn mean_se(xs: impl Iterator<Item = f64>) -> (f64, f64) {
    let mut m = Moments::default();
    for x in xs {
        m.push(x);
    }
    (m.mean(), m.std_error())
}

/// Law of `ℓ(τ, 0)`: `P(ℓ > v) = e^{−v√(2λ)}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ZeroLawParams {
    pub beta: f64,
    pub lambda: f64,
    pub dt: f64,
    pub epsilon: f64,
    pub levels: Vec<f64>,
    pub paths: u64,
    pub seed: u64,
    /// Allowed deviation in binomial standard errors.
    pub sigmas: f64,
}

impl ZeroLawParams {
    pub fn full() -> Self {
        ZeroLawParams {
            beta: 0.7,
            lambda: 0.5,
            dt: 1e-5,
            epsilon: 0.005,
            levels: vec![0.5, 1.0, 2.0],
            paths: 100_000,
            seed: 1,
            sigmas: 3.0,
        }
    }
}

pub fn zero_law_checks(run: &Runner, q: &ZeroLawParams) -> CliResult<Vec<Check>> {
    let p = skew(q.beta)?;
    let l0 = mc::local_time_at_zero(run, &p, q.lambda, q.epsilon, q.dt, q.paths, q.seed)?;
    zero_law_from_samples(
        &l0,
        q.lambda,
        &q.levels,
        q.sigmas,
        &format!("beta={}", q.beta),
    )
}

fn zero_law_from_samples(
    l0: &[f64],
    lambda: f64,
    levels: &[f64],
    sigmas: f64,
    tag: &str,
) -> CliResult<Vec<Check>> {
    levels
        .iter()
        .map(|&v| {
            let exact = exp_law_at_zero(lambda, v)?;
            let se = binomial_se(exact, l0.len());
            let dev = (mc::tail_fraction(l0, v) - exact).abs() / se;
            Ok(Check::new(
                format!("P(l(tau,0) > {v}) {tag} lambda={lambda} [s.e.]"),
                dev,
                Bound::AtMost,
                sigmas,
            ))
        })
        .collect()
}

/// Jump of the Lebesgue local time at 0 and continuity of the speed-measure
/// local time.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpParams {
    pub betas: Vec<f64>,
    pub lambda: f64,
    pub dt: f64,
    /// Window half-widths, each half the previous one; the ratio is read at
    /// the first.
    pub eps: Vec<f64>,
    pub paths: u64,
    pub seed: u64,
    pub tol: f64,
    /// Also check the exponential law of `ℓ(τ,0)` at the finest window that
    /// is at least two steps `√dt` wide.
    pub zero_law: bool,
}

impl JumpParams {
    pub fn full() -> Self {
        JumpParams {
            betas: vec![0.5, 0.6, 0.75, 0.9],
            lambda: 2.0,
            dt: 1e-5,
            eps: vec![0.02, 0.01, 0.005],
            paths: 100_000,
            seed: 2,
            tol: 0.02,
            zero_law: false,
        }
    }

    pub fn desk() -> Self {
        JumpParams {
            dt: 2.5e-5,
            paths: 10_000,
            zero_law: true,
            ..Self::full()
        }
    }
}

pub fn jump_checks(run: &Runner, q: &JumpParams) -> CliResult<Vec<Check>> {
    let mut out = Vec::new();
    for &beta in &q.betas {
        let p = skew(beta)?;
        let samples = mc::one_sided_at_zero(run, &p, q.lambda, &q.eps, q.dt, q.paths, q.seed)?;
        let (ratio, _) = mean_se(samples.iter().map(|s| {
            let (r, l) = s[0];
            (r - l) / (r + l)
        }));
        out.push(Check::new(
            format!("jump ratio beta={beta} eps={} |mean - (2beta-1)|", q.eps[0]),
            (ratio - (2.0 * beta - 1.0)).abs(),
            Bound::AtMost,
            q.tol,
        ));
        let gaps: Vec<f64> = (0..q.eps.len())
            .map(|k| {
                mean_se(samples.iter().map(|s| {
                    let (r, l) = s[k];
                    (r / p.two_beta() - l / p.two_one_minus_beta()).abs()
                }))
                .0
            })
            .collect();
        let worst = gaps.windows(2).map(|g| g[1] / g[0]).fold(0.0, f64::max);
        out.push(Check::new(
            format!("speed-normalized gap at 0 beta={beta} shrinks as eps halves (largest ratio)"),
            worst,
            Bound::Below,
            1.0,
        ));
        if q.zero_law {
            let wide = 2.0 * q.dt.sqrt();
            let k = q.eps.iter().rposition(|&e| e >= wide).unwrap_or(0);
            let l0: Vec<f64> = samples.iter().map(|s| 0.5 * (s[k].0 + s[k].1)).collect();
            let tag = format!("beta={beta} eps={}", q.eps[k]);
            out.extend(zero_law_from_samples(
                &l0,
                q.lambda,
                &[0.25, 0.5, 1.0],
                3.0,
                &tag,
            )?);
        }
    }
    Ok(out)
}

/// Two-sample KS tests between the terminal laws of the three constructions.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstructionParams {
    pub betas: Vec<f64>,
    pub t: f64,
    pub dt: f64,
    pub paths: u64,
    pub seed: u64,
    pub level: f64,
}

impl ConstructionParams {
    pub fn full() -> Self {
        ConstructionParams {
            betas: vec![0.5, 0.7],
            t: 1.0,
            dt: 1e-4,
            paths: 100_000,
            seed: 3,
            level: 0.01,
        }
    }

    pub fn desk() -> Self {
        ConstructionParams {
            dt: 1e-3,
            paths: 20_000,
            ..Self::full()
        }
    }
}

pub fn construction_checks(run: &Runner, q: &ConstructionParams) -> CliResult<Vec<Check>> {
    let kinds = [
        Construction::MarkovKernel,
        Construction::TimeChange,
        Construction::SignFlip,
    ];
    let mut out = Vec::new();
    for &beta in &q.betas {
        let p = skew(beta)?;
        let mut samples = kinds
            .iter()
            .enumerate()
            .map(|(k, &c)| {
                mc::terminal_values(run, c, &p, q.dt, q.t, q.paths, sub_seed(q.seed, k as u64))
            })
            .collect::<CliResult<Vec<_>>>()?;
        for (i, j) in [(0, 1), (0, 2), (1, 2)] {
            let (a, b) = samples.split_at_mut(j);
            let ks = ks_two_sample(&mut a[i], &mut b[0]);
            out.push(Check::new(
                format!(
                    "KS {} vs {} at T={} beta={beta} [p-value]",
                    kinds[i].name(),
                    kinds[j].name(),
                    q.t
                ),
                ks.p_value,
                Bound::AtLeast,
                q.level,
            ));
        }
    }
    Ok(out)
}

/// Synthesized V-profiles against path local times conditioned on the
/// endpoint window, plus a negative control with a wrong `λ`.
#[derive(Debug, Clone, PartialEq)]
pub struct RayKnightParams {
    pub beta: f64,
    pub lambda: f64,
    pub window: (f64, f64),
    pub probes: Vec<f64>,
    pub epsilon: f64,
    pub dt: f64,
    pub dh: f64,
    pub paths: u64,
    pub seed: u64,
    pub level: f64,
    pub control_lambda: f64,
    pub control_probe: f64,
}

impl RayKnightParams {
    pub fn full() -> Self {
        RayKnightParams {
            beta: 0.7,
            lambda: 0.5,
            window: (0.95, 1.05),
            probes: vec![-0.5, 0.25, 0.75, 1.5],
            epsilon: 0.02,
            dt: 1e-4,
            dh: 1e-4,
            paths: 100_000,
            seed: 4,
            level: 0.01,
            control_lambda: 1.0,
            control_probe: 0.25,
        }
    }

    pub fn desk() -> Self {
        RayKnightParams {
            dh: 1e-3,
            paths: 5_000,
            ..Self::full()
        }
    }
}

pub fn rayknight_checks(run: &Runner, q: &RayKnightParams) -> CliResult<Vec<Check>> {
    let p = skew(q.beta)?;
    let window = EndpointWindow::new(q.window.0, q.window.1)?;
    let path = mc::conditioned_local_times(
        run, &p, q.lambda, &window, &q.probes, q.epsilon, q.dt, q.paths, q.seed,
    )?;
    let synth = |lambda, probes: &[f64], tag| {
        mc::synthesized_local_times(
            run,
            RkFamily::V,
            &p,
            lambda,
            &window,
            probes,
            q.epsilon,
            q.dh,
            q.paths,
            sub_seed(q.seed, tag),
        )
    };
    let rk = synth(q.lambda, &q.probes, 1)?;
    let mut a = mc::columns(&path);
    let mut b = mc::columns(&rk);
    let cmp = compare_columns(&q.probes, &mut a, &mut b, q.level)?;
    let mut out: Vec<Check> = cmp
        .probes
        .iter()
        .map(|t| {
            Check::new(
                format!(
                    "KS path vs Ray-Knight profile at y={} beta={} lambda={} [p-value]",
                    t.y, q.beta, q.lambda
                ),
                t.ks.p_value,
                Bound::AtLeast,
                q.level,
            )
        })
        .collect();

    let k = q
        .probes
        .iter()
        .position(|&y| y == q.control_probe)
        .ok_or_else(|| CliError::Config("the control probe must be one of the probes".into()))?;
    let wrong = synth(q.control_lambda, &[q.control_probe], 2)?;
    let mut a = vec![mc::columns(&path).swap_remove(k)];
    let mut b = mc::columns(&wrong);
    let cmp = compare_columns(&[q.control_probe], &mut a, &mut b, q.level)?;
    out.push(Check::new(
        format!(
            "negative control: profile with lambda={} rejected at y={} [p-value]",
            q.control_lambda, q.control_probe
        ),
        cmp.probes[0].ks.p_value,
        Bound::Below,
        q.level,
    ));
    Ok(out)
}

/// Settings of the smoothed-supremum estimator: occupation on cells of
/// width `cell`, largest average over windows of half-widths `m·cell` for
/// `m` in `windows`, then extrapolation to zero width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupEstimator {
    pub dt: f64,
    pub cell: f64,
    pub windows: (usize, usize),
}

impl Default for SupEstimator {
    fn default() -> Self {
        SupEstimator {
            dt: 1e-5,
            cell: 0.005,
            windows: (2, 4),
        }
    }
}

impl SupEstimator {
    /// Per-path smoothed suprema at the two window widths.
    pub fn samples(
        &self,
        run: &Runner,
        positive: f64,
        horizon: Horizon,
        paths: u64,
        seed: u64,
    ) -> CliResult<Vec<(f64, f64)>> {
        let ms = [self.windows.0, self.windows.1];
        let rows =
            mc::sup_local_times(run, positive, horizon, self.dt, self.cell, &ms, paths, seed)?;
        Ok(rows.iter().map(|r| (r[0], r[1])).collect())
    }

    /// `P(sup > h)` extrapolated in the window width, with its standard
    /// error.
    pub fn tail(samples: &[(f64, f64)], h: f64) -> (f64, f64) {
        let r = std::f64::consts::SQRT_2;
        mean_se(samples.iter().map(|&(fine, coarse)| {
            let a = (fine > h) as u8 as f64;
            let b = (coarse > h) as u8 as f64;
            (r * a - b) / (r - 1.0)
        }))
    }

    /// `P(sup > h)` with the extrapolation applied to the quantiles of the
    /// two widths, which suits laws whose bias is a shift rather than a
    /// tilt. The standard error is binomial.
    pub fn tail_quantile(samples: &[(f64, f64)], h: f64) -> (f64, f64) {
        let r = std::f64::consts::SQRT_2;
        let mut fine: Vec<f64> = samples.iter().map(|s| s.0).collect();
        let mut coarse: Vec<f64> = samples.iter().map(|s| s.1).collect();
        fine.sort_by(f64::total_cmp);
        coarse.sort_by(f64::total_cmp);
        let n = fine.len();
        let above = fine
            .iter()
            .zip(&coarse)
            .filter(|&(a, b)| (r * a - b) / (r - 1.0) > h)
            .count();
        let p = above as f64 / n as f64;
        (p, binomial_se(p, n))
    }
}

/// Law of `sup_y ℓ(τ, y)` at exponential time against Monte Carlo.
#[derive(Debug, Clone, PartialEq)]
pub struct SupExpParams {
    /// `(β of the law, probability of a positive excursion in the
    /// simulation)`; a simulated `0.1` checks the law at `0.9` by the mirror
    /// identity and `1.0` simulates reflected Brownian motion.
    pub configs: Vec<(f64, f64)>,
    pub lambda: f64,
    pub levels: Vec<f64>,
    pub estimator: SupEstimator,
    pub paths: u64,
    pub seed: u64,
    pub tol: f64,
    /// Widen the tolerance to three standard errors when that is larger.
    pub se_floor: bool,
}

impl SupExpParams {
    pub fn full() -> Self {
        SupExpParams {
            configs: vec![(0.5, 0.5), (0.7, 0.7), (0.9, 0.1), (1.0, 1.0)],
            lambda: 0.5,
            levels: vec![0.5, 1.0, 2.0],
            estimator: SupEstimator::default(),
            paths: 100_000,
            seed: 5,
            tol: 0.01,
            se_floor: false,
        }
    }

    pub fn desk() -> Self {
        SupExpParams {
            paths: 4_000,
            se_floor: true,
            ..Self::full()
        }
    }
}

fn tolerance(tol: f64, se: f64, se_floor: bool) -> f64 {
    if se_floor {
        tol.max(3.0 * se)
    } else {
        tol
    }
}

pub fn sup_exp_checks(run: &Runner, q: &SupExpParams) -> CliResult<Vec<Check>> {
    let mut out = Vec::new();
    for (k, &(beta, positive)) in q.configs.iter().enumerate() {
        let law = SupBeta::new(beta)?;
        let samples = q.estimator.samples(
            run,
            positive,
            Horizon::Exponential(q.lambda),
            q.paths,
            sub_seed(q.seed, k as u64),
        )?;
        for &h in &q.levels {
            let exact = sup_tail(law, q.lambda, h)?;
            let (est, se) = SupEstimator::tail(&samples, h);
            out.push(Check::new(
                format!(
                    "P(sup l(tau,.) > {h}) beta={beta} (simulated {positive}) lambda={} |MC - law|",
                    q.lambda
                ),
                (est - exact).abs(),
                Bound::AtMost,
                tolerance(q.tol, se, q.se_floor),
            ));
        }
    }
    Ok(out)
}

/// Law of `sup_y ℓ(t, y)` at a fixed time for `β = 1/2` against Monte
/// Carlo, and the Brownian scaling `(t, h) ↔ (c²t, ch)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SupFixedParams {
    pub t: f64,
    pub levels: Vec<f64>,
    pub estimator: SupEstimator,
    pub scale: f64,
    pub paths: u64,
    pub seed: u64,
    pub tol: f64,
    pub se_floor: bool,
}

impl SupFixedParams {
    pub fn full() -> Self {
        SupFixedParams {
            t: 1.0,
            levels: vec![1.0, 1.5, 2.0],
            estimator: SupEstimator {
                dt: 2.5e-6,
                cell: 0.0025,
                windows: (1, 2),
            },
            scale: 0.5,
            paths: 20_000,
            seed: 6,
            tol: 0.02,
            se_floor: false,
        }
    }

    pub fn desk() -> Self {
        SupFixedParams {
            paths: 4_000,
            se_floor: true,
            ..Self::full()
        }
    }
}

pub fn sup_fixed_checks(run: &Runner, q: &SupFixedParams) -> CliResult<Vec<Check>> {
    let law = SupBeta::new(0.5)?;
    let base = q
        .estimator
        .samples(run, 0.5, Horizon::Fixed(q.t), q.paths, q.seed)?;
    let c = q.scale;
    let scaled_est = SupEstimator {
        dt: q.estimator.dt * c * c,
        cell: q.estimator.cell * c,
        ..q.estimator
    };
    let scaled = scaled_est.samples(
        run,
        0.5,
        Horizon::Fixed(c * c * q.t),
        q.paths,
        sub_seed(q.seed, 1),
    )?;
    let mut out = Vec::new();
    for &h in &q.levels {
        let exact = sup_cdf_fixed_time(&SupLawQuery::fixed(law, q.t, h)?)?.cdf;
        let (tail, se) = SupEstimator::tail_quantile(&base, h);
        out.push(Check::new(
            format!("P(sup l({},.) <= {h}) beta=0.5 |MC - series|", q.t),
            (1.0 - tail - exact).abs(),
            Bound::AtMost,
            tolerance(q.tol, se, q.se_floor),
        ));
        let (tail_c, se_c) = SupEstimator::tail_quantile(&scaled, c * h);
        out.push(Check::new(
            format!(
                "scaling: P(sup l({},.) <= {}) vs P(sup l({},.) <= {h}) by MC",
                c * c * q.t,
                c * h,
                q.t
            ),
            (tail_c - tail).abs(),
            Bound::AtMost,
            tolerance(q.tol, (se * se + se_c * se_c).sqrt(), q.se_floor),
        ));
    }
    Ok(out)
}

/// `R(v)` for `f = 0`.
pub fn r_closed(lambda: f64, h: f64, v: f64) -> f64 {
    let k = (lambda / 2.0).sqrt();
    ((h - v) * k).sinh() / (h * k).sinh()
}

/// `Q(v)` for `f = 0`.
pub fn q_closed(lambda: f64, h: f64, v: f64) -> f64 {
    let k = (lambda / 2.0).sqrt();
    let c = (2.0 * lambda).sqrt() * (h * k).sinh();
    ((h - v) * k).cosh() / c - i0(v * k) / (c * i0(h * k))
}

/// Density of `W_β(τ)` started at `x`.
pub fn green_closed(beta: f64, lambda: f64, x: f64, z: f64) -> f64 {
    let r = (2.0 * lambda).sqrt();
    let a = (lambda / 2.0).sqrt();
    let sign = if z > 0.0 {
        1.0
    } else if z < 0.0 {
        -1.0
    } else {
        0.0
    };
    a * (-(x - z).abs() * r).exp()
        + a * (2.0 * beta - 1.0) * sign * (-(x.abs() + z.abs()) * r).exp()
}

/// `E_0[e^{−γℓ(τ,0)}; W(τ) ∈ dz]/dz` from the free fundamental solutions.
pub fn mu_closed(beta: f64, lambda: f64, z: f64, gamma: f64) -> f64 {
    let r = (2.0 * lambda).sqrt();
    2.0 * lambda * beta * (-z * r).exp() / (beta * 2.0 * r + (1.0 - 2.0 * beta) * r + gamma)
}

fn max_error(grid: &[f64], values: &[f64], exact: impl Fn(f64) -> f64) -> f64 {
    grid.iter()
        .zip(values)
        .map(|(&x, &u)| (u - exact(x)).abs())
        .fold(0.0, f64::max)
}

/// Solver output against closed forms and identities.
pub fn fk_oracle_checks() -> CliResult<Vec<Check>> {
    let zero = PiecewiseFunction::zero();
    let opts = FdOptions::default();
    let mut out = Vec::new();
    for &lambda in &[0.5, 1.0] {
        for &h in &[1.0, 2.0] {
            let (r, q) = solve_rq(lambda, &zero, h, &opts)?;
            let er = max_error(r.grid(), r.values(), |v| r_closed(lambda, h, v));
            let eq = max_error(q.grid(), q.values(), |v| q_closed(lambda, h, v));
            out.push(Check::new(
                format!("R closed form lambda={lambda} h={h} [max error]"),
                er,
                Bound::AtMost,
                1e-8,
            ));
            out.push(Check::new(
                format!("Q closed form lambda={lambda} h={h} [max error]"),
                eq,
                Bound::AtMost,
                1e-8,
            ));
        }
    }
    let raw = |nodes| FdOptions {
        nodes,
        max_step: 1.0,
        richardson: false,
    };
    for &(lambda, h) in &[(0.5, 1.0), (1.0, 2.0)] {
        let (r1, q1) = solve_rq(lambda, &zero, h, &raw(1000))?;
        let (r2, q2) = solve_rq(lambda, &zero, h, &raw(2000))?;
        let ratio = |a: &[f64], av: &[f64], b: &[f64], bv: &[f64], f: &dyn Fn(f64) -> f64| {
            max_error(a, av, f) / max_error(b, bv, f)
        };
        let rr = ratio(r1.grid(), r1.values(), r2.grid(), r2.values(), &|v| {
            r_closed(lambda, h, v)
        });
        let rq = ratio(q1.grid(), q1.values(), q2.grid(), q2.values(), &|v| {
            q_closed(lambda, h, v)
        });
        out.push(Check::new(
            format!("R/Q error ratio on grid halving lambda={lambda} h={h}"),
            rr.min(rq),
            Bound::AtLeast,
            3.5,
        ));
    }
    for &(beta, lambda, z) in &[(0.7, 0.5, 1.0), (0.3, 1.0, -0.5), (0.5, 2.0, 0.25)] {
        let g = solve_g(&skew(beta)?, lambda, &zero, 0.0, 0.0, z, None, &opts)?;
        out.push(Check::new(
            format!("Green kernel beta={beta} lambda={lambda} z={z} [max error]"),
            max_error(g.grid(), g.values(), |x| green_closed(beta, lambda, x, z)),
            Bound::AtMost,
            1e-8,
        ));
    }
    let (beta, lambda, z, gamma) = (0.7, 0.5, 1.0, 1.0);
    let g = solve_g(&skew(beta)?, lambda, &zero, gamma, 0.0, z, None, &opts)?;
    out.push(Check::new(
        format!("killing at 0: G(0) vs mu beta={beta} lambda={lambda} z={z} gamma={gamma}"),
        (g.value_at(0.0)? - mu_closed(beta, lambda, z, gamma)).abs(),
        Bound::AtMost,
        1e-6,
    ));
    for &h in &[0.5, 1.0, 2.0] {
        let v = functional_transform(&skew(0.7)?, 0.5, &zero, h, &opts)?;
        let exact = 1.0 - sup_tail(SupBeta::new(0.7)?, 0.5, h)?;
        out.push(Check::new(
            format!("transform with f=0 vs 1 - sup law beta=0.7 lambda=0.5 h={h}"),
            (v - exact).abs(),
            Bound::AtMost,
            1e-6,
        ));
    }
    let f = PiecewiseFunction::smooth(|v| v);
    for &(beta, lambda) in &[(0.6, 1.0), (0.8, 0.5)] {
        let v = functional_transform(&skew(beta)?, lambda, &f, f64::INFINITY, &opts)?;
        out.push(Check::new(
            format!("transform with f=v, h=inf vs lambda/(lambda+1) beta={beta} lambda={lambda}"),
            (v - lambda / (lambda + 1.0)).abs(),
            Bound::AtMost,
            1e-6,
        ));
    }
    Ok(out)
}

/// The suites reachable from the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Jump,
    RayKnight,
    SupLawMc,
    FkOracles,
    ConstructionAgreement,
}

impl Suite {
    pub const ALL: [Suite; 5] = [
        Suite::Jump,
        Suite::RayKnight,
        Suite::SupLawMc,
        Suite::FkOracles,
        Suite::ConstructionAgreement,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Suite::Jump => "jump",
            Suite::RayKnight => "rayknight",
            Suite::SupLawMc => "suplaw-mc",
            Suite::FkOracles => "fk-oracles",
            Suite::ConstructionAgreement => "construction-agreement",
        }
    }

    pub fn parse(name: &str) -> CliResult<Self> {
        Self::ALL
            .into_iter()
            .find(|s| s.name() == name)
            .ok_or_else(|| {
                let names: Vec<&str> = Self::ALL.iter().map(Suite::name).collect();
                CliError::Config(format!(
                    "unknown suite '{name}' (expected one of: {})",
                    names.join(", ")
                ))
            })
    }
}

/// Desk-scale overrides from the command line.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Overrides {
    pub seed: u64,
    pub beta: Option<f64>,
    pub paths: Option<u64>,
}

/// Runs `suite` at desk scale.
pub fn run_suite(run: &Runner, suite: Suite, o: &Overrides) -> CliResult<Vec<Check>> {
    let paths = |d: u64| o.paths.unwrap_or(d);
    let betas = |d: Vec<f64>| o.beta.map_or(d, |b| vec![b]);
    match suite {
        Suite::Jump => {
            let d = JumpParams::desk();
            jump_checks(
                run,
                &JumpParams {
                    betas: betas(d.betas.clone()),
                    paths: paths(d.paths),
                    seed: o.seed,
                    ..d
                },
            )
        }
        Suite::RayKnight => {
            let d = RayKnightParams::desk();
            rayknight_checks(
                run,
                &RayKnightParams {
                    beta: o.beta.unwrap_or(d.beta),
                    paths: paths(d.paths),
                    seed: o.seed,
                    ..d
                },
            )
        }
        Suite::SupLawMc => {
            let d = SupExpParams::desk();
            let configs = match o.beta {
                None => d.configs.clone(),
                Some(b) if b >= 0.5 => vec![(b, b)],
                Some(b) => vec![(1.0 - b, b)],
            };
            let mut checks = sup_exp_checks(
                run,
                &SupExpParams {
                    configs,
                    paths: paths(d.paths),
                    seed: o.seed,
                    ..d
                },
            )?;
            if o.beta.is_none() {
                let f = SupFixedParams::desk();
                checks.extend(sup_fixed_checks(
                    run,
                    &SupFixedParams {
                        paths: paths(f.paths),
                        seed: sub_seed(o.seed, 99),
                        ..f
                    },
                )?);
            }
            Ok(checks)
        }
        Suite::FkOracles => fk_oracle_checks(),
        Suite::ConstructionAgreement => {
            let d = ConstructionParams::desk();
            construction_checks(
                run,
                &ConstructionParams {
                    betas: betas(d.betas.clone()),
                    paths: paths(d.paths),
                    seed: o.seed,
                    ..d
                },
            )
        }
    }
}
