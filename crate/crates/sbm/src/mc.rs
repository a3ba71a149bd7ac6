//! Parallel Monte Carlo drivers.
//!
//! Path `i` always draws from `RandomStream::for_path(seed, i)` and results
//! come back in path order, so every output is independent of the number
//! of worker threads.

use crate::error::{CliError, CliResult};
use rayon::prelude::*;
use sbm_core::localtime::{segment_occupation, OccupationHistogram};
use sbm_core::rayknight::{synthesize_profile, RkFamily};
use sbm_core::sim::{
    run_conditioned_bridge, simulate_markov, simulate_signflip, simulate_timechange, uniform_grid,
    Construction, EndpointWindow, SkewWalker,
};
use sbm_core::{RandomStream, SkewParam};

/// A fixed-size worker pool.
pub struct Runner {
    pool: rayon::ThreadPool,
    workers: usize,
}

impl Runner {
    /// `None` uses every available core.
    pub fn new(workers: Option<usize>) -> CliResult<Self> {
        let workers = match workers {
            Some(0) => return Err(CliError::Config("--workers must be at least 1".into())),
            Some(w) => w,
            None => std::thread::available_parallelism().map_or(1, |n| n.get()),
        };
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| CliError::Config(format!("cannot start {workers} workers: {e}")))?;
        Ok(Runner { pool, workers })
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    /// `f(i)` for `i in 0..n`, in index order.
    pub fn map<T: Send>(&self, n: u64, f: impl Fn(u64) -> T + Sync + Send) -> Vec<T> {
        self.pool
            .install(|| (0..n).into_par_iter().map(&f).collect())
    }
}

/// Transposes per-path rows into per-quantity columns.
pub fn columns(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let k = rows.first().map_or(0, Vec::len);
    (0..k)
        .map(|j| rows.iter().map(|r| r[j]).collect())
        .collect()
}

/// Terminal values `W(T)` of `n` paths built by `construction`.
pub fn terminal_values(
    run: &Runner,
    construction: Construction,
    p: &SkewParam,
    dt: f64,
    horizon: f64,
    n: u64,
    seed: u64,
) -> CliResult<Vec<f64>> {
    let grid = uniform_grid(dt, horizon)?;
    let out = run.map(n, |i| {
        let mut r = RandomStream::for_path(seed, i);
        let path = match construction {
            Construction::MarkovKernel => simulate_markov(p, &grid, 0.0, &mut r),
            Construction::TimeChange => simulate_timechange(p, dt, horizon, &mut r),
            Construction::SignFlip => simulate_signflip(p, dt, horizon, &mut r),
        };
        path.map(|p| p.terminal())
    });
    out.into_iter().map(|r| r.map_err(CliError::from)).collect()
}

/// Window estimate `ℓ(τ, 0)` with half-width `eps`, `τ ~ Exp(λ)`.
pub fn local_time_at_zero(
    run: &Runner,
    p: &SkewParam,
    lambda: f64,
    eps: f64,
    dt: f64,
    n: u64,
    seed: u64,
) -> CliResult<Vec<f64>> {
    let w = SkewWalker::new(p, dt)?;
    Ok(run.map(n, |i| {
        let mut occ = 0.0;
        w.run_to_exponential(
            lambda,
            &mut RandomStream::for_path(seed, i),
            &mut |a, b, h| occ += segment_occupation(a, b, h, -eps, eps),
        );
        occ / (2.0 * eps)
    }))
}

/// One-sided estimates `(ℓ(τ,0+), ℓ(τ,0−))` from the windows `(0, ε)` and
/// `(−ε, 0)`, for every `ε` in `eps` along the same path.
pub fn one_sided_at_zero(
    run: &Runner,
    p: &SkewParam,
    lambda: f64,
    eps: &[f64],
    dt: f64,
    n: u64,
    seed: u64,
) -> CliResult<Vec<Vec<(f64, f64)>>> {
    let w = SkewWalker::new(p, dt)?;
    let reach = eps.iter().fold(0.0f64, |m, &e| m.max(e));
    Ok(run.map(n, |i| {
        let mut acc = vec![(0.0, 0.0); eps.len()];
        w.run_to_exponential(
            lambda,
            &mut RandomStream::for_path(seed, i),
            &mut |a: f64, b: f64, h| {
                if a.abs().min(b.abs()) >= reach && a * b > 0.0 {
                    return;
                }
                for (s, &e) in acc.iter_mut().zip(eps) {
                    s.0 += segment_occupation(a, b, h, 0.0, e);
                    s.1 += segment_occupation(a, b, h, -e, 0.0);
                }
            },
        );
        acc.iter()
            .zip(eps)
            .map(|(&(r, l), &e)| (r / e, l / e))
            .collect()
    }))
}

/// Window estimates of `ℓ(τ, y)` at each probe for paths conditioned on
/// `W(τ) ∈ window`.
#[allow(clippy::too_many_arguments)]
pub fn conditioned_local_times(
    run: &Runner,
    p: &SkewParam,
    lambda: f64,
    window: &EndpointWindow,
    probes: &[f64],
    eps: f64,
    dt: f64,
    n: u64,
    seed: u64,
) -> CliResult<Vec<Vec<f64>>> {
    let out = run.map(n, |i| {
        let mut occ = vec![0.0; probes.len()];
        run_conditioned_bridge(
            p,
            lambda,
            window,
            dt,
            &mut RandomStream::for_path(seed, i),
            &mut |a, b, h| {
                for (o, &y) in occ.iter_mut().zip(probes) {
                    *o += segment_occupation(a, b, h, y - eps, y + eps);
                }
            },
        )
        .map(|_| occ.iter().map(|o| o / (2.0 * eps)).collect())
    });
    out.into_iter().map(|r| r.map_err(CliError::from)).collect()
}

/// The same window estimates read off synthesized profiles, with the
/// endpoint drawn from the window-conditional law of `W(τ)`.
#[allow(clippy::too_many_arguments)]
pub fn synthesized_local_times(
    run: &Runner,
    family: RkFamily,
    p: &SkewParam,
    lambda: f64,
    window: &EndpointWindow,
    probes: &[f64],
    eps: f64,
    dh: f64,
    n: u64,
    seed: u64,
) -> CliResult<Vec<Vec<f64>>> {
    let per = 40usize;
    let mut grid: Vec<f64> = probes
        .iter()
        .flat_map(|&y| (0..=per).map(move |k| y - eps + 2.0 * eps * k as f64 / per as f64))
        .collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let out = run.map(n, |i| {
        let mut r = RandomStream::for_path(seed, i);
        let z = window.sample_endpoint(lambda, &mut r);
        synthesize_profile(family, p, lambda, z, &grid, dh, &r).map(|prof| {
            probes
                .iter()
                .map(|&y| prof.window_mean(y, eps).expect("window inside grid"))
                .collect()
        })
    });
    out.into_iter().map(|r| r.map_err(CliError::from)).collect()
}

/// When the local time is read off.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Horizon {
    Exponential(f64),
    Fixed(f64),
}

/// Per path, the largest window estimate of `ℓ(·, y)` over `y` for each
/// window half-width `m·cell` in `ms`. `positive = 1` gives reflected
/// Brownian motion.
pub fn sup_local_times(
    run: &Runner,
    positive: f64,
    horizon: Horizon,
    dt: f64,
    cell: f64,
    ms: &[usize],
    n: u64,
    seed: u64,
) -> CliResult<Vec<Vec<f64>>> {
    let w = if positive >= 1.0 {
        SkewWalker::reflected(dt)?
    } else {
        SkewWalker::new(&SkewParam::new(positive)?, dt)?
    };
    OccupationHistogram::new(0.0, cell)?;
    Ok(run.map(n, |i| {
        let mut hist = OccupationHistogram::new(0.0, cell).expect("cell checked");
        let mut r = RandomStream::for_path(seed, i);
        match horizon {
            Horizon::Exponential(lambda) => {
                w.run_to_exponential(lambda, &mut r, &mut hist);
            }
            Horizon::Fixed(t) => {
                w.run_for(t, &mut r, &mut hist);
            }
        }
        ms.iter().map(|&m| sliding_max(&hist, m)).collect()
    }))
}

/// Largest occupation of `2m` consecutive cells, over every cell offset,
/// divided by the window width.
pub fn sliding_max(hist: &OccupationHistogram, m: usize) -> f64 {
    let (a, b) = hist.cell_range();
    if b < a {
        return 0.0;
    }
    let m = m as i64;
    let cells: Vec<f64> = (a..=b).map(|k| hist.cell(k)).collect();
    let w = (2 * m) as usize;
    let mut sum: f64 = cells.iter().take(w).sum();
    let mut best = sum;
    for k in w..cells.len() {
        sum += cells[k] - cells[k - w];
        best = best.max(sum);
    }
    best / (2.0 * m as f64 * hist.cell_width())
}

/// Fraction of `samples` above `h`.
pub fn tail_fraction(samples: &[f64], h: f64) -> f64 {
    samples.iter().filter(|&&s| s > h).count() as f64 / samples.len() as f64
}

/// Tail estimates at window half-widths `ε` and `2ε` combined to cancel
/// the leading `√ε` bias of the smoothed supremum.
pub fn extrapolated_tail(fine: &[f64], coarse: &[f64], h: f64) -> f64 {
    let r = std::f64::consts::SQRT_2;
    (r * tail_fraction(fine, h) - tail_fraction(coarse, h)) / (r - 1.0)
}
