//! Sample paths of skew Brownian motion by three constructions, exponential
//! stopping, and streaming path generators for Monte Carlo.

use crate::error::{check_finite, check_positive, Error, Result};
use crate::model::{scale_inverse, skew_step, skew_step_with, SkewParam};
use crate::rng::RandomStream;
use alloc::vec::Vec;
#[allow(unused_imports)] // inherent methods win once std is in the crate graph
use num_traits::Float;
use rand::Rng;
use rand_distr::{Distribution, Exp1, InverseGaussian, StandardNormal};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Construction {
    MarkovKernel,
    TimeChange,
    SignFlip,
}

impl Construction {
    pub fn name(&self) -> &'static str {
        match self {
            Construction::MarkovKernel => "markov",
            Construction::TimeChange => "timechange",
            Construction::SignFlip => "signflip",
        }
    }
}

/// A sampled trajectory on a strictly increasing time grid starting at 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    times: Vec<f64>,
    values: Vec<f64>,
    construction: Construction,
    seed: u64,
}

impl Path {
    pub fn new(
        times: Vec<f64>,
        values: Vec<f64>,
        construction: Construction,
        seed: u64,
    ) -> Result<Self> {
        validate_grid(&times)?;
        if values.len() != times.len() {
            return Err(Error::InvalidInput(
                "path values and times differ in length",
            ));
        }
        Ok(Path {
            times,
            values,
            construction,
            seed,
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn construction(&self) -> Construction {
        self.construction
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn terminal(&self) -> f64 {
        *self.values.last().unwrap()
    }

    /// Iterates `(w_k, w_{k+1}, t_{k+1} − t_k)` over grid steps.
    pub fn steps(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.values
            .windows(2)
            .zip(self.times.windows(2))
            .map(|(v, t)| (v[0], v[1], t[1] - t[0]))
    }
}

/// A path truncated at an independent exponential time.
#[derive(Debug, Clone, PartialEq)]
pub struct StoppedPath {
    pub path: Path,
    pub tau: f64,
    pub lambda: f64,
}

fn validate_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidInput("time grid is empty"));
    }
    if grid[0] != 0.0 {
        return Err(Error::InvalidInput("time grid must start at 0"));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0]) || !w[1].is_finite()) {
        return Err(Error::InvalidInput(
            "time grid must be strictly increasing and finite",
        ));
    }
    Ok(())
}

/// Uniform grid `0, dt, 2dt, …` ending exactly at `horizon` (the last step
/// is shortened if `horizon` is not a multiple of `dt`).
pub fn uniform_grid(dt: f64, horizon: f64) -> Result<Vec<f64>> {
    check_positive("dt", dt)?;
    check_positive("horizon", horizon)?;
    if dt >= horizon {
        return Err(Error::InvalidParameter {
            name: "dt",
            value: dt,
            reason: "must be smaller than the horizon",
        });
    }
    let ratio = horizon / dt;
    let n = if (ratio - ratio.round()).abs() < 1e-9 * ratio {
        ratio.round() as usize
    } else {
        ratio.ceil() as usize
    };
    let mut g: Vec<f64> = (0..n).map(|k| k as f64 * dt).collect();
    g.push(horizon);
    Ok(g)
}

/// Iterates the exact transition kernel over `grid`.
pub fn simulate_markov(
    p: &SkewParam,
    grid: &[f64],
    x0: f64,
    rng: &mut RandomStream,
) -> Result<Path> {
    validate_grid(grid)?;
    check_finite("x0", x0)?;
    let mut values = Vec::with_capacity(grid.len());
    let mut x = x0;
    values.push(x);
    for w in grid.windows(2) {
        x = skew_step(p.beta(), w[1] - w[0], x, rng);
        values.push(x);
    }
    Path::new(
        grid.to_vec(),
        values,
        Construction::MarkovKernel,
        rng.seed(),
    )
}

/// Refinement factor of the driving Brownian grid in the time-change
/// construction.
pub fn timechange_refinement(p: &SkewParam) -> usize {
    let a = (p.two_beta() * p.two_beta()).ceil();
    let b = (p.two_one_minus_beta() * p.two_one_minus_beta()).ceil();
    (a.max(b) as usize).max(1)
}

/// Time change of a standard Brownian motion `Ŵ` by the inverse of
/// `A_t = ∫ m̂(Ŵ_s) ds`, `m̂ = (2β)²` on `[0,∞)` and `(2(1−β))²` below,
/// mapped back through the inverse scale function.
pub fn simulate_timechange(
    p: &SkewParam,
    dt: f64,
    horizon: f64,
    rng: &mut RandomStream,
) -> Result<Path> {
    let grid = uniform_grid(dt, horizon)?;
    let r = timechange_refinement(p);
    let h = dt / r as f64;
    let sh = h.sqrt();
    let rate_pos = p.two_beta() * p.two_beta();
    let rate_neg = p.two_one_minus_beta() * p.two_one_minus_beta();
    let clock = |w: f64| if w >= 0.0 { rate_pos } else { rate_neg };

    let mut values = Vec::with_capacity(grid.len());
    values.push(0.0);
    let (mut w0, mut a0) = (0.0f64, 0.0f64);
    let mut w1 = w0 + sh * rng.sample::<f64, _>(StandardNormal);
    let mut a1 = a0 + clock(w0) * h;
    for &target in &grid[1..] {
        while a1 < target {
            w0 = w1;
            a0 = a1;
            w1 = w0 + sh * rng.sample::<f64, _>(StandardNormal);
            a1 = a0 + clock(w0) * h;
        }
        let frac = (target - a0) / (a1 - a0);
        let w = w0 + frac * (w1 - w0);
        values.push(scale_inverse(p, w));
    }
    Path::new(grid, values, Construction::TimeChange, rng.seed())
}

/// Itô-McKean construction: reflect a Brownian path and give each
/// excursion (delimited by grid-level sign changes of the unreflected path)
/// the sign `+` with probability `β`.
pub fn simulate_signflip(
    p: &SkewParam,
    dt: f64,
    horizon: f64,
    rng: &mut RandomStream,
) -> Result<Path> {
    simulate_signflip_with(p.beta(), dt, horizon, rng)
}

/// As [`simulate_signflip`] with the flip probability given directly;
/// `positive = 1` (never flip) yields reflected Brownian motion.
pub fn simulate_signflip_with(
    positive: f64,
    dt: f64,
    horizon: f64,
    rng: &mut RandomStream,
) -> Result<Path> {
    if !(positive > 0.0 && positive <= 1.0) {
        return Err(Error::InvalidParameter {
            name: "positive",
            value: positive,
            reason: "must lie in (0, 1]",
        });
    }
    let grid = uniform_grid(dt, horizon)?;
    let mut values = Vec::with_capacity(grid.len());
    values.push(0.0);
    let mut w = 0.0f64;
    let mut sign = 1.0;
    for step in grid.windows(2) {
        let next = w + (step[1] - step[0]).sqrt() * rng.sample::<f64, _>(StandardNormal);
        let crossed = w == 0.0 || (w > 0.0) != (next > 0.0);
        if crossed {
            sign = if positive >= 1.0 || rng.random::<f64>() < positive {
                1.0
            } else {
                -1.0
            };
        }
        w = next;
        values.push(sign * w.abs());
    }
    Path::new(grid, values, Construction::SignFlip, rng.seed())
}

/// Draws `τ ~ Exp(λ)` from `rng` and truncates the path at `τ`, linearly
/// interpolating the final value.
pub fn stop_exponential(path: Path, lambda: f64, rng: &mut RandomStream) -> Result<StoppedPath> {
    check_positive("lambda", lambda)?;
    let e: f64 = rng.sample(Exp1);
    let tau = e / lambda;
    let horizon = path.horizon();
    if tau > horizon {
        return Err(Error::HorizonExceeded { tau, horizon });
    }
    let Path {
        mut times,
        mut values,
        construction,
        seed,
    } = path;
    // index of the last grid time <= tau
    let k = times.partition_point(|&t| t <= tau) - 1;
    if tau > times[k] {
        let frac = (tau - times[k]) / (times[k + 1] - times[k]);
        let w = values[k] + frac * (values[k + 1] - values[k]);
        times.truncate(k + 1);
        values.truncate(k + 1);
        times.push(tau);
        values.push(w);
    } else {
        times.truncate(k + 1);
        values.truncate(k + 1);
    }
    Ok(StoppedPath {
        path: Path {
            times,
            values,
            construction,
            seed,
        },
        tau,
        lambda,
    })
}

/// Receives consecutive path steps `(from, to, duration)`.
pub trait PathSink {
    fn step(&mut self, from: f64, to: f64, dt: f64);
}

impl<F: FnMut(f64, f64, f64)> PathSink for F {
    fn step(&mut self, from: f64, to: f64, dt: f64) {
        self(from, to, dt)
    }
}

/// Exact streaming generator on a fixed step.
#[derive(Debug, Clone, Copy)]
pub struct SkewWalker {
    positive: f64,
    dt: f64,
}

impl SkewWalker {
    pub fn new(p: &SkewParam, dt: f64) -> Result<Self> {
        check_positive("dt", dt)?;
        Ok(SkewWalker {
            positive: p.beta(),
            dt,
        })
    }

    /// Reflected Brownian motion (every excursion positive).
    pub fn reflected(dt: f64) -> Result<Self> {
        check_positive("dt", dt)?;
        Ok(SkewWalker { positive: 1.0, dt })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Runs from 0 up to time `t`, returning the terminal value.
    pub fn run_for<R: Rng + ?Sized>(&self, t: f64, rng: &mut R, sink: &mut impl PathSink) -> f64 {
        let n = (t / self.dt).floor() as u64;
        let rest = t - n as f64 * self.dt;
        let mut x = 0.0;
        let (sq, inv) = (self.dt.sqrt(), 2.0 / self.dt);
        for _ in 0..n {
            let y = skew_step_with(self.positive, sq, inv, x, rng);
            sink.step(x, y, self.dt);
            x = y;
        }
        if rest > 1e-12 * self.dt {
            let y = skew_step(self.positive, rest, x, rng);
            sink.step(x, y, rest);
            x = y;
        }
        x
    }

    /// Draws `τ ~ Exp(λ)` and runs from 0 up to `τ`; returns `(τ, W(τ))`.
    pub fn run_to_exponential<R: Rng + ?Sized>(
        &self,
        lambda: f64,
        rng: &mut R,
        sink: &mut impl PathSink,
    ) -> (f64, f64) {
        let e: f64 = rng.sample(Exp1);
        let tau = e / lambda;
        (tau, self.run_for(tau, rng, sink))
    }
}

/// Endpoint window `(lo, hi)` with `0 < lo < hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EndpointWindow {
    pub lo: f64,
    pub hi: f64,
}

impl EndpointWindow {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo > 0.0 && hi > lo && hi.is_finite() {
            Ok(EndpointWindow { lo, hi })
        } else {
            Err(Error::InvalidInput(
                "endpoint window must satisfy 0 < lo < hi < inf",
            ))
        }
    }

    pub fn contains(&self, z: f64) -> bool {
        z > self.lo && z < self.hi
    }

    /// Draws `W_β(τ)` conditioned to fall in the window. On `(0, ∞)` the
    /// Green kernel from 0 is proportional to `e^{−z√(2λ)}` for every `β`.
    pub fn sample_endpoint<R: Rng + ?Sized>(&self, lambda: f64, rng: &mut R) -> f64 {
        let r = (2.0 * lambda).sqrt();
        let u: f64 = rng.random();
        let span = -(-(r * (self.hi - self.lo))).exp_m1();
        let z = self.lo - (-u * span).ln_1p() / r;
        z.clamp(self.lo, self.hi)
    }
}

/// Exact path of `W_β` on `[0, τ]`, `τ ~ Exp(λ)`, conditioned on
/// `W_β(τ) ∈ window`.
///
/// Given `z = W_β(τ) > 0`, `τ` has `1/τ ~ InverseGaussian(√(2λ)/z, 2λ)` and
/// `|W_β|` is the modulus of a Brownian bridge from 0 to `z`. The bridge is
/// generated backwards from `z`, so the excursion reached first is the one
/// straddling `τ` and keeps the sign `+`; every earlier excursion (found
/// from grid sign changes or sub-step bridge hits) gets an independent sign.
/// Returns `(τ, z)`.
pub fn run_conditioned_bridge<R: Rng + ?Sized>(
    p: &SkewParam,
    lambda: f64,
    window: &EndpointWindow,
    dt: f64,
    rng: &mut R,
    sink: &mut impl PathSink,
) -> Result<(f64, f64)> {
    check_positive("lambda", lambda)?;
    check_positive("dt", dt)?;
    let z = window.sample_endpoint(lambda, rng);
    let ig = InverseGaussian::new((2.0 * lambda).sqrt() / z, 2.0 * lambda)
        .map_err(|_| Error::InvalidInput("inverse Gaussian parameters"))?;
    let tau = 1.0 / ig.sample(rng);
    let mut remaining = tau;
    let mut b = z;
    let mut sign = 1.0;
    loop {
        let last = remaining <= dt * (1.0 + 1e-9);
        let h = if last { remaining } else { dt };
        let next = if last {
            0.0
        } else {
            let n: f64 = rng.sample(StandardNormal);
            b * (1.0 - h / remaining) + (h * (remaining - h) / remaining).sqrt() * n
        };
        let from = sign * b.abs();
        let touched = next == 0.0
            || (b > 0.0) != (next > 0.0)
            || rng.random::<f64>() < (-2.0 * b * next / h).exp();
        if touched {
            sign = if rng.random::<f64>() < p.beta() {
                1.0
            } else {
                -1.0
            };
        }
        sink.step(from, sign * next.abs(), h);
        if last {
            break;
        }
        b = next;
        remaining -= h;
    }
    Ok((tau, z))
}

/// Rejection version of [`run_conditioned_bridge`]: runs unconditioned
/// exponential-time paths until one ends in the window. Returns
/// `(τ, W(τ), attempts)` and the accepted path's steps through `record`.
pub fn run_conditioned_rejection<R: Rng + ?Sized>(
    p: &SkewParam,
    lambda: f64,
    window: &EndpointWindow,
    dt: f64,
    rng: &mut R,
    record: &mut Vec<(f64, f64, f64)>,
) -> Result<(f64, f64, usize)> {
    let walker = SkewWalker::new(p, dt)?;
    check_positive("lambda", lambda)?;
    let mut attempts = 0;
    loop {
        attempts += 1;
        record.clear();
        let (tau, w) =
            walker.run_to_exponential(lambda, rng, &mut |a, b, h| record.push((a, b, h)));
        if window.contains(w) {
            return Ok((tau, w, attempts));
        }
    }
}
