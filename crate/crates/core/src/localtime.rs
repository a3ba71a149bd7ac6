//! Occupation-time estimators of local time under the Lebesgue and the
//! speed-measure normalizations.

use crate::error::{check_finite, check_positive, Error, Result};
use crate::model::{speed_window_mass, SkewParam};
use crate::sim::{Path, PathSink};
use alloc::vec::Vec;
#[allow(unused_imports)] // inherent methods win once std is in the crate graph
use num_traits::Float;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    /// Occupation density with respect to Lebesgue measure, `ℓ(t, x)`.
    Lebesgue,
    /// Occupation density with respect to the halved speed measure, `L(t, x)`.
    SpeedMeasure,
}

impl Normalization {
    pub fn name(&self) -> &'static str {
        match self {
            Normalization::Lebesgue => "lebesgue",
            Normalization::SpeedMeasure => "speed",
        }
    }
}

/// Local time estimates on a space grid.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalTimeProfile {
    pub xs: Vec<f64>,
    pub values: Vec<f64>,
    pub normalization: Normalization,
    pub epsilon: f64,
    pub t: f64,
}

impl LocalTimeProfile {
    /// Linear interpolation inside the grid, `None` outside.
    pub fn value_at(&self, y: f64) -> Option<f64> {
        interpolate(&self.xs, &self.values, y)
    }
}

pub(crate) fn interpolate(xs: &[f64], vs: &[f64], y: f64) -> Option<f64> {
    if xs.is_empty() || y < xs[0] || y > *xs.last().unwrap() {
        return None;
    }
    let k = xs.partition_point(|&x| x <= y);
    if k == xs.len() {
        return Some(*vs.last().unwrap());
    }
    if k == 0 {
        return Some(vs[0]);
    }
    let (x0, x1) = (xs[k - 1], xs[k]);
    let w = (y - x0) / (x1 - x0);
    // rounding noise next to a node must not leak the neighbour's value
    if w < 1e-9 {
        return Some(vs[k - 1]);
    }
    if w > 1.0 - 1e-9 {
        return Some(vs[k]);
    }
    Some(vs[k - 1] + w * (vs[k] - vs[k - 1]))
}

/// Time a linear segment from `a` to `b` of duration `dt` spends in the
/// open interval `(lo, hi)`.
#[inline]
pub fn segment_occupation(a: f64, b: f64, dt: f64, lo: f64, hi: f64) -> f64 {
    if a == b {
        return if a > lo && a < hi { dt } else { 0.0 };
    }
    let (m, n) = if a < b { (a, b) } else { (b, a) };
    let overlap = n.min(hi) - m.max(lo);
    if overlap <= 0.0 {
        0.0
    } else {
        dt * overlap / (n - m)
    }
}

/// `∫ 1(|W_s − x| < ε) ds` for the piecewise-linear interpolant of the path.
pub fn occupation(path: &Path, x: f64, epsilon: f64) -> Result<f64> {
    check_positive("epsilon", epsilon)?;
    check_finite("x", x)?;
    Ok(path
        .steps()
        .map(|(a, b, dt)| segment_occupation(a, b, dt, x - epsilon, x + epsilon))
        .sum())
}

pub fn lebesgue_local_time(path: &Path, x: f64, epsilon: f64) -> Result<f64> {
    Ok(occupation(path, x, epsilon)? / (2.0 * epsilon))
}

/// Occupation divided by `m*((x−ε, x+ε))`.
pub fn speed_local_time(p: &SkewParam, path: &Path, x: f64, epsilon: f64) -> Result<f64> {
    let mass = speed_window_mass(p, x, epsilon)?;
    Ok(occupation(path, x, epsilon)? / mass)
}

/// One-sided Lebesgue-normalized estimates `(ℓ(t,0+), ℓ(t,0−))` from the
/// windows `(0, ε)` and `(−ε, 0)`.
pub fn jump_at_zero(path: &Path, epsilon: f64) -> Result<(f64, f64)> {
    check_positive("epsilon", epsilon)?;
    let (mut r, mut l) = (0.0, 0.0);
    for (a, b, dt) in path.steps() {
        r += segment_occupation(a, b, dt, 0.0, epsilon);
        l += segment_occupation(a, b, dt, -epsilon, 0.0);
    }
    Ok((r / epsilon, l / epsilon))
}

/// True when `dt` is too coarse to resolve windows of half-width `ε`
/// (`dt > ε²/10`).
pub fn under_resolved(dt: f64, epsilon: f64) -> bool {
    dt > epsilon * epsilon / 10.0
}

/// `floor` by truncation; baseline x86-64 lacks a rounding instruction and
/// would call into libm.
#[inline]
fn floor_i64(x: f64) -> i64 {
    let k = x as i64;
    if (k as f64) > x {
        k - 1
    } else {
        k
    }
}

/// Occupation times of cells `[origin + k c, origin + (k+1) c)`, filled
/// from path steps in one pass.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupationHistogram {
    origin: f64,
    cell: f64,
    inv_cell: f64,
    first: i64,
    times: Vec<f64>,
    elapsed: f64,
}

impl OccupationHistogram {
    pub fn new(origin: f64, cell: f64) -> Result<Self> {
        check_finite("origin", origin)?;
        check_positive("cell", cell)?;
        Ok(OccupationHistogram {
            origin,
            cell,
            inv_cell: 1.0 / cell,
            first: 0,
            times: Vec::new(),
            elapsed: 0.0,
        })
    }

    pub fn from_path(path: &Path, origin: f64, cell: f64) -> Result<Self> {
        let mut h = Self::new(origin, cell)?;
        for (a, b, dt) in path.steps() {
            h.add(a, b, dt);
        }
        Ok(h)
    }

    pub fn cell_width(&self) -> f64 {
        self.cell
    }

    pub fn elapsed(&self) -> f64 {
        self.elapsed
    }

    /// Zeroes all cells, keeping the allocation.
    pub fn clear(&mut self) {
        self.times.iter_mut().for_each(|t| *t = 0.0);
        self.elapsed = 0.0;
    }

    /// Index range `[first, first + len)` of cells stored so far.
    pub fn cell_range(&self) -> (i64, i64) {
        (self.first, self.first + self.times.len() as i64)
    }

    /// Occupation time of cell `k`.
    pub fn cell(&self, k: i64) -> f64 {
        let i = k - self.first;
        if i < 0 || i >= self.times.len() as i64 {
            0.0
        } else {
            self.times[i as usize]
        }
    }

    /// Sum of cells `k0..k1` (exclusive).
    pub fn cells(&self, k0: i64, k1: i64) -> f64 {
        (k0..k1).map(|k| self.cell(k)).sum()
    }

    #[cold]
    fn ensure(&mut self, k0: i64, k1: i64) {
        if self.times.is_empty() {
            self.first = k0 - 64;
            self.times.resize((k1 - k0 + 129) as usize, 0.0);
            return;
        }
        if k0 < self.first {
            let grow = ((self.first - k0) as usize).max(self.times.len());
            let mut v = alloc::vec![0.0; grow];
            v.extend_from_slice(&self.times);
            self.times = v;
            self.first -= grow as i64;
        }
        let last = self.first + self.times.len() as i64 - 1;
        if k1 > last {
            let grow = ((k1 - last) as usize).max(self.times.len());
            let n = self.times.len() + grow;
            self.times.resize(n, 0.0);
        }
    }

    #[inline]
    pub fn add(&mut self, a: f64, b: f64, dt: f64) {
        self.elapsed += dt;
        let u = (a - self.origin) * self.inv_cell;
        let v = (b - self.origin) * self.inv_cell;
        let m = u.min(v);
        let n = u.max(v);
        let k0 = floor_i64(m);
        let k1 = floor_i64(n);
        if k0 < self.first || k1 >= self.first + self.times.len() as i64 {
            self.ensure(k0, k1);
        }
        let i0 = (k0 - self.first) as usize;
        let i1 = (k1 - self.first) as usize;
        // share of the step in the first cell; 1 when both ends share a cell
        let rate = 1.0 / (n - m).max(1e-300);
        let f0 = (((k0 + 1) as f64 - m) * rate).min(1.0);
        if k1 > k0 + 1 {
            let mid = dt * rate;
            for t in &mut self.times[i0 + 1..i1] {
                *t += mid;
            }
            self.times[i0] += f0 * dt;
            self.times[i1] += (n - k1 as f64) * rate * dt;
        } else {
            self.times[i0] += f0 * dt;
            self.times[i1] += (1.0 - f0) * dt;
        }
    }

    /// Occupation of `(x − ε, x + ε)` when both ends fall on cell
    /// boundaries, `None` otherwise.
    pub fn aligned_window(&self, x: f64, epsilon: f64) -> Option<f64> {
        let lo = (x - epsilon - self.origin) / self.cell;
        let hi = (x + epsilon - self.origin) / self.cell;
        let (kl, kh) = (lo.round(), hi.round());
        let tol = 1e-9 * (1.0 + hi.abs());
        if (lo - kl).abs() > tol || (hi - kh).abs() > tol {
            return None;
        }
        Some(self.cells(kl as i64, kh as i64))
    }

    /// Lebesgue-normalized estimates at `x_k = origin + k·m·c` over all
    /// stored cells, with window half-width `m·c`. Returns the maximum.
    pub fn max_window_estimate(&self, m: usize) -> f64 {
        if self.times.is_empty() {
            return 0.0;
        }
        let m = m as i64;
        let width = 2.0 * m as f64 * self.cell;
        let (a, b) = self.cell_range();
        // window centred at x = origin + j m c covers cells [j m − m, j m + m)
        let jlo = (a - m).div_euclid(m);
        let jhi = (b + m).div_euclid(m) + 1;
        let mut best = 0.0f64;
        for j in jlo..=jhi {
            best = best.max(self.cells(j * m - m, j * m + m));
        }
        best / width
    }
}

impl PathSink for OccupationHistogram {
    fn step(&mut self, from: f64, to: f64, dt: f64) {
        self.add(from, to, dt)
    }
}

/// Applies the chosen estimator at every grid point in one pass over the
/// path (via a cell histogram when the grid is aligned with a common cell).
pub fn profile(
    p: &SkewParam,
    path: &Path,
    xs: &[f64],
    epsilon: f64,
    normalization: Normalization,
) -> Result<LocalTimeProfile> {
    check_positive("epsilon", epsilon)?;
    if xs.is_empty() || xs.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidInput(
            "profile grid must be nonempty and strictly increasing",
        ));
    }
    let mut masses = Vec::with_capacity(xs.len());
    for &x in xs {
        masses.push(match normalization {
            Normalization::Lebesgue => 2.0 * epsilon,
            Normalization::SpeedMeasure => speed_window_mass(p, x, epsilon)?,
        });
    }
    let hist = grid_cell(xs, epsilon)
        .map(|c| OccupationHistogram::from_path(path, xs[0] - epsilon, c))
        .transpose()?;
    let mut values = Vec::with_capacity(xs.len());
    for (&x, mass) in xs.iter().zip(masses) {
        let occ = match hist.as_ref().and_then(|h| h.aligned_window(x, epsilon)) {
            Some(o) => o,
            None => occupation(path, x, epsilon)?,
        };
        values.push(occ / mass);
    }
    Ok(LocalTimeProfile {
        xs: xs.to_vec(),
        values,
        normalization,
        epsilon,
        t: path.horizon(),
    })
}

/// A common cell width for a uniform grid whose spacing and `ε` are both
/// integer multiples of it.
fn grid_cell(xs: &[f64], epsilon: f64) -> Option<f64> {
    if xs.len() < 2 {
        return None;
    }
    let step = xs[1] - xs[0];
    let uniform = xs
        .windows(2)
        .all(|w| ((w[1] - w[0]) - step).abs() <= 1e-9 * step);
    if !uniform {
        return None;
    }
    let (big, small) = if step >= epsilon {
        (step, epsilon)
    } else {
        (epsilon, step)
    };
    let r = big / small;
    if (r - r.round()).abs() < 1e-9 * r {
        Some(small)
    } else {
        None
    }
}

pub fn sup_local_time(profile: &LocalTimeProfile) -> Result<f64> {
    if profile.values.is_empty() {
        return Err(Error::InvalidInput("empty profile"));
    }
    Ok(profile.values.iter().copied().fold(0.0, f64::max))
}

/// Trapezoid integral of `f(profile)` over the grid. The profile must
/// vanish at both ends of the grid.
pub fn integral_functional(profile: &LocalTimeProfile, f: impl Fn(f64) -> f64) -> Result<f64> {
    let v = &profile.values;
    if v.len() < 2 {
        return Err(Error::InvalidInput("profile needs at least two points"));
    }
    if v[0] != 0.0 || *v.last().unwrap() != 0.0 {
        return Err(Error::InvalidInput(
            "profile grid does not cover the occupied range",
        ));
    }
    let mut s = 0.0;
    for i in 1..v.len() {
        s += 0.5 * (f(v[i]) + f(v[i - 1])) * (profile.xs[i] - profile.xs[i - 1]);
    }
    Ok(s)
}
