//! Ray-Knight synthesis of the local-time profile at an exponential time.
//!
//! Conditionally on `W_β(τ) = z > 0`, the profile `y ↦ ℓ_β(τ, y)` is glued
//! from three squared radial Ornstein-Uhlenbeck type diffusions run in the
//! space variable: `V2` on `[0, z]`, `V1` from `z` on, and `V3` from 0 towards
//! `-∞`. The `U` kinds give the same construction for the speed-normalized
//! local time `L_β`, which is continuous at 0.

use crate::error::{check_positive, Error, Result};
use crate::localtime::{LocalTimeProfile, Normalization};
use crate::model::SkewParam;
use crate::rng::RandomStream;
use crate::stats::{ks_two_sample, KsResult};
use alloc::vec::Vec;
#[allow(unused_imports)] // inherent methods win once std is in the crate graph
use num_traits::Float;
use rand::Rng;
use rand_distr::{Exp1, StandardNormal};

/// Default space step of the Euler scheme.
pub const DEFAULT_DH: f64 = 1e-4;
/// Values below this count towards the stall rule.
pub const STALL_LEVEL: f64 = 1e-10;
/// Consecutive stalled steps after which an absorbing kind is set to 0.
pub const STALL_STEPS: u32 = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RkKind {
    V1,
    V2,
    V3,
    U1,
    U2,
    U3,
}

impl RkKind {
    pub fn name(&self) -> &'static str {
        match self {
            RkKind::V1 => "V1",
            RkKind::V2 => "V2",
            RkKind::V3 => "V3",
            RkKind::U1 => "U1",
            RkKind::U2 => "U2",
            RkKind::U3 => "U3",
        }
    }

    pub fn family(&self) -> RkFamily {
        match self {
            RkKind::V1 | RkKind::V2 | RkKind::V3 => RkFamily::V,
            RkKind::U1 | RkKind::U2 | RkKind::U3 => RkFamily::U,
        }
    }
}

/// Which local time a profile describes: `V` gives `ℓ_β` (Lebesgue
/// normalization), `U` gives `L_β` (speed normalization).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RkFamily {
    V,
    U,
}

impl RkFamily {
    pub fn name(&self) -> &'static str {
        match self {
            RkFamily::V => "V",
            RkFamily::U => "U",
        }
    }

    pub fn normalization(&self) -> Normalization {
        match self {
            RkFamily::V => Normalization::Lebesgue,
            RkFamily::U => Normalization::SpeedMeasure,
        }
    }

    /// Kinds used on `[z, ∞)`, `[0, z]` and `(-∞, 0]`.
    pub fn kinds(&self) -> [RkKind; 3] {
        match self {
            RkFamily::V => [RkKind::V1, RkKind::V2, RkKind::V3],
            RkFamily::U => [RkKind::U1, RkKind::U2, RkKind::U3],
        }
    }
}

/// Diffusion with generator `2 c₂ v d²/dv² + (c₁ - 2√(2λ) v) d/dv`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RKDiffusionSpec {
    kind: RkKind,
    lambda: f64,
    beta: f64,
    drift_const: f64,
    diffusion_scale: f64,
}

impl RKDiffusionSpec {
    pub fn new(kind: RkKind, lambda: f64, p: &SkewParam) -> Result<Self> {
        check_positive("lambda", lambda)?;
        let beta = p.beta();
        let (drift_const, diffusion_scale) = match kind {
            RkKind::V1 | RkKind::V3 => (0.0, 1.0),
            RkKind::V2 => (2.0, 1.0),
            RkKind::U1 => (0.0, 1.0 / (2.0 * beta)),
            RkKind::U2 => (1.0 / beta, 1.0 / (2.0 * beta)),
            RkKind::U3 => (0.0, 1.0 / (2.0 * (1.0 - beta))),
        };
        if !diffusion_scale.is_finite() || !drift_const.is_finite() {
            return Err(Error::InvalidParameter {
                name: "beta",
                value: beta,
                reason: "this kind needs 0 < beta < 1",
            });
        }
        Ok(RKDiffusionSpec {
            kind,
            lambda,
            beta,
            drift_const,
            diffusion_scale,
        })
    }

    pub fn kind(&self) -> RkKind {
        self.kind
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `c₁`: 2 for `V2`, `1/β` for `U2`, 0 otherwise.
    pub fn drift_const(&self) -> f64 {
        self.drift_const
    }

    /// `c₂`: 1 for `V` kinds, `1/(2β)` for `U1`, `U2`, `1/(2(1-β))` for `U3`.
    pub fn diffusion_scale(&self) -> f64 {
        self.diffusion_scale
    }

    /// 0 is absorbing exactly when there is no constant drift.
    pub fn absorbing(&self) -> bool {
        self.drift_const == 0.0
    }

    /// Mean-reversion rate `2√(2λ)` of the linear drift.
    pub fn decay_rate(&self) -> f64 {
        2.0 * (2.0 * self.lambda).sqrt()
    }

    fn stepper(&self, dh: f64) -> Stepper {
        Stepper {
            keep: 1.0 - self.decay_rate() * dh,
            push: self.drift_const * dh,
            noise: (4.0 * self.diffusion_scale * dh).sqrt(),
            absorbing: self.absorbing(),
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Stepper {
    keep: f64,
    push: f64,
    noise: f64,
    absorbing: bool,
}

impl Stepper {
    #[inline]
    fn step<R: Rng + ?Sized>(&self, v: f64, rng: &mut R) -> f64 {
        if v == 0.0 && self.absorbing {
            return 0.0;
        }
        let n: f64 = rng.sample(StandardNormal);
        (v * self.keep + self.push + self.noise * v.sqrt() * n).max(0.0)
    }
}

/// One Euler-Maruyama step of length `dh`, clamped at 0.
pub fn rk_step<R: Rng + ?Sized>(
    spec: &RKDiffusionSpec,
    v: f64,
    dh: f64,
    rng: &mut R,
) -> Result<f64> {
    if !(v >= 0.0) || !v.is_finite() {
        return Err(Error::InvalidParameter {
            name: "v",
            value: v,
            reason: "must be finite and >= 0",
        });
    }
    check_positive("dh", dh)?;
    Ok(spec.stepper(dh).step(v, rng))
}

/// `ℓ_β(τ, 0)`: exponential with rate `√(2λ)`, whatever `β` and `z` are.
pub fn draw_l0<R: Rng + ?Sized>(lambda: f64, rng: &mut R) -> Result<f64> {
    check_positive("lambda", lambda)?;
    let e: f64 = rng.sample(Exp1);
    Ok(e / (2.0 * lambda).sqrt())
}

/// Survival function of [`draw_l0`].
pub fn l0_survival(lambda: f64, v: f64) -> f64 {
    if v <= 0.0 {
        1.0
    } else {
        (-v * (2.0 * lambda).sqrt()).exp()
    }
}

/// A synthesized profile recorded on a caller-chosen grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RKProfile {
    pub xs: Vec<f64>,
    pub values: Vec<f64>,
    pub normalization: Normalization,
    pub family: RkFamily,
    pub lambda: f64,
    pub dh: f64,
    /// Conditioning endpoint `W_β(τ) = z`.
    pub z: f64,
    /// Drawn value of `ℓ_β(τ, 0)`.
    pub v0: f64,
    /// Initial value of the branch on `(-∞, 0]` (`V3(0)` or `U3(0)`).
    pub left_limit: f64,
    /// Initial value of the branch on `[0, z]` (`V2(0)` or `U2(0)`).
    pub right_limit: f64,
    /// Where the left branch was absorbed, if that happened inside the grid.
    pub left_end: Option<f64>,
    /// Where the right branch was absorbed, if that happened inside the grid.
    pub right_end: Option<f64>,
}

impl RKProfile {
    /// Linear interpolation inside the grid, `None` outside.
    pub fn value_at(&self, y: f64) -> Option<f64> {
        crate::localtime::interpolate(&self.xs, &self.values, y)
    }

    /// Mean of the interpolated profile over `[y - eps, y + eps]`, the
    /// quantity an occupation-window estimator with half-width `eps` sees.
    pub fn window_mean(&self, y: f64, eps: f64) -> Option<f64> {
        let (a, b) = (y - eps, y + eps);
        let xs = &self.xs;
        if !(eps > 0.0) || xs.is_empty() || a < xs[0] || b > *xs.last().unwrap() {
            return None;
        }
        let mut s = 0.0;
        let mut x0 = a;
        let mut v0 = self.value_at(a)?;
        let start = xs.partition_point(|&x| x <= a);
        for (&x1, &v1) in xs[start..].iter().zip(&self.values[start..]) {
            if x1 >= b {
                break;
            }
            s += 0.5 * (v0 + v1) * (x1 - x0);
            x0 = x1;
            v0 = v1;
        }
        s += 0.5 * (v0 + self.value_at(b)?) * (b - x0);
        Some(s / (2.0 * eps))
    }

    pub fn sup(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }
}

fn check_grid(ys: &[f64]) -> Result<()> {
    if ys.is_empty() || ys.iter().any(|y| !y.is_finite()) || ys.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidInput(
            "profile grid must be nonempty, finite and strictly increasing",
        ));
    }
    Ok(())
}

/// Runs one branch from `v0` with step `step` and writes interpolated
/// values at the ascending `offsets` (distances from the branch origin).
/// With `steps = Some(n)` it stops after `n` steps, otherwise once every
/// offset is covered or the state is absorbed. Returns the final state
/// and the absorption offset, if any.
fn run_branch<R: Rng + ?Sized>(
    st: &Stepper,
    v0: f64,
    step: f64,
    steps: Option<usize>,
    offsets: &[f64],
    out: &mut [f64],
    rng: &mut R,
) -> (f64, Option<f64>) {
    let mut next = 0;
    let mut v = v0;
    let mut k = 0usize;
    let mut stalled = 0u32;
    while next < offsets.len() && offsets[next] <= 0.0 {
        out[next] = v0;
        next += 1;
    }
    loop {
        if steps.map_or(next == offsets.len(), |n| k == n) {
            return (v, None);
        }
        let mut w = st.step(v, rng);
        if st.absorbing && w > 0.0 {
            stalled = if w < STALL_LEVEL { stalled + 1 } else { 0 };
            if stalled >= STALL_STEPS {
                w = 0.0;
            }
        }
        let (x0, x1) = (k as f64 * step, (k + 1) as f64 * step);
        let last = steps.is_some_and(|n| k + 1 == n);
        while next < offsets.len() && (offsets[next] <= x1 || last) {
            let s = (offsets[next] - x0) / step;
            out[next] = if s >= 1.0 || (last && offsets[next] >= x1 - 1e-9 * step) {
                w
            } else {
                v + s.max(0.0) * (w - v)
            };
            next += 1;
        }
        v = w;
        k += 1;
        if v == 0.0 && st.absorbing {
            for o in &mut out[next..] {
                *o = 0.0;
            }
            return (0.0, Some(x1));
        }
    }
}

fn synthesize(
    family: RkFamily,
    p: &SkewParam,
    lambda: f64,
    z: f64,
    ys: &[f64],
    dh: f64,
    rng: &RandomStream,
) -> Result<RKProfile> {
    check_positive("z", z)?;
    check_positive("dh", dh)?;
    check_grid(ys)?;
    let [k1, k2, k3] = family.kinds();
    let s1 = RKDiffusionSpec::new(k1, lambda, p)?;
    let s2 = RKDiffusionSpec::new(k2, lambda, p)?;
    let s3 = RKDiffusionSpec::new(k3, lambda, p)?;

    let mut r0 = rng.split(0);
    let v0 = draw_l0(lambda, &mut r0)?;
    let (left, right) = match family {
        RkFamily::V => (p.two_one_minus_beta() * v0, p.two_beta() * v0),
        RkFamily::U => (v0, v0),
    };

    let mut values = alloc::vec![0.0; ys.len()];
    let neg = ys.partition_point(|&y| y < 0.0);
    let zero = ys.partition_point(|&y| y <= 0.0);
    let mid = ys.partition_point(|&y| y <= z);
    if zero > neg {
        values[neg] = v0;
    }

    // [0, z]: fixed number of steps so that the branch ends exactly at z
    let n2 = ((z / dh) - 1e-9).ceil().max(1.0) as usize;
    let mut r2 = rng.split(2);
    let (vz, _) = run_branch(
        &s2.stepper(z / n2 as f64),
        right,
        z / n2 as f64,
        Some(n2),
        &ys[zero..mid],
        &mut values[zero..mid],
        &mut r2,
    );

    let off1: Vec<f64> = ys[mid..].iter().map(|y| y - z).collect();
    let mut r1 = rng.split(1);
    let (_, end1) = run_branch(
        &s1.stepper(dh),
        vz,
        dh,
        None,
        &off1,
        &mut values[mid..],
        &mut r1,
    );

    let off3: Vec<f64> = ys[..neg].iter().rev().map(|y| -y).collect();
    let mut out3 = alloc::vec![0.0; neg];
    let mut r3 = rng.split(3);
    let (_, end3) = run_branch(&s3.stepper(dh), left, dh, None, &off3, &mut out3, &mut r3);
    for (dst, src) in values[..neg].iter_mut().zip(out3.iter().rev()) {
        *dst = *src;
    }

    Ok(RKProfile {
        xs: ys.to_vec(),
        values,
        normalization: family.normalization(),
        family,
        lambda,
        dh,
        z,
        v0,
        left_limit: left,
        right_limit: right,
        left_end: end3.map(|e| -e),
        right_end: end1.map(|e| z + e),
    })
}

/// `ℓ_β(τ, ·)` given `W_β(τ) = z` from `V1`, `V2`, `V3`, recorded at `ys`.
/// Sub-streams `split(0..=3)` of `rng` drive `ℓ(τ,0)`, `V1`, `V2` and `V3`,
/// so the three diffusions are independent given their initial values.
pub fn synthesize_profile_discontinuous(
    p: &SkewParam,
    lambda: f64,
    z: f64,
    ys: &[f64],
    dh: f64,
    rng: &RandomStream,
) -> Result<RKProfile> {
    synthesize(RkFamily::V, p, lambda, z, ys, dh, rng)
}

/// `L_β(τ, ·)` given `W_β(τ) = z` from `U1`, `U2`, `U3` glued at
/// `U2(0) = U3(0) = ℓ_β(τ, 0)`.
pub fn synthesize_profile_continuous(
    p: &SkewParam,
    lambda: f64,
    z: f64,
    ys: &[f64],
    dh: f64,
    rng: &RandomStream,
) -> Result<RKProfile> {
    synthesize(RkFamily::U, p, lambda, z, ys, dh, rng)
}

/// Either synthesis by family.
pub fn synthesize_profile(
    family: RkFamily,
    p: &SkewParam,
    lambda: f64,
    z: f64,
    ys: &[f64],
    dh: f64,
    rng: &RandomStream,
) -> Result<RKProfile> {
    synthesize(family, p, lambda, z, ys, dh, rng)
}

/// Anything that can be read off at a probe point.
pub trait ProfileSample {
    fn probe(&self, y: f64) -> Option<f64>;
}

impl ProfileSample for RKProfile {
    fn probe(&self, y: f64) -> Option<f64> {
        self.value_at(y)
    }
}

impl ProfileSample for LocalTimeProfile {
    fn probe(&self, y: f64) -> Option<f64> {
        self.value_at(y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeTest {
    pub y: f64,
    pub ks: KsResult,
}

/// Per-probe two-sample KS tests at a common level.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileComparison {
    pub level: f64,
    pub probes: Vec<ProbeTest>,
}

impl ProfileComparison {
    pub fn passes(&self, y: f64) -> Option<bool> {
        self.probes
            .iter()
            .find(|t| t.y == y)
            .map(|t| t.ks.passes(self.level))
    }

    pub fn all_pass(&self) -> bool {
        self.probes.iter().all(|t| t.ks.passes(self.level))
    }
}

/// Compares two samples of profiles at the probe points `ys`.
pub fn compare_profiles<A: ProfileSample, B: ProfileSample>(
    a: &[A],
    b: &[B],
    ys: &[f64],
    level: f64,
) -> Result<ProfileComparison> {
    let col = |y: f64, s: &mut dyn Iterator<Item = Option<f64>>| -> Result<Vec<f64>> {
        s.map(|v| v.ok_or(Error::ProbeOutsideGrid { y })).collect()
    };
    let mut ac = Vec::with_capacity(ys.len());
    let mut bc = Vec::with_capacity(ys.len());
    for &y in ys {
        ac.push(col(y, &mut a.iter().map(|p| p.probe(y)))?);
        bc.push(col(y, &mut b.iter().map(|p| p.probe(y)))?);
    }
    compare_columns(ys, &mut ac, &mut bc, level)
}

/// Same as [`compare_profiles`] with the probe values already extracted:
/// `a[i]` and `b[i]` are the samples at `ys[i]`. Sorts the columns.
pub fn compare_columns(
    ys: &[f64],
    a: &mut [Vec<f64>],
    b: &mut [Vec<f64>],
    level: f64,
) -> Result<ProfileComparison> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidParameter {
            name: "level",
            value: level,
            reason: "must lie in (0, 1)",
        });
    }
    if a.len() != ys.len() || b.len() != ys.len() {
        return Err(Error::InvalidInput("one sample column per probe required"));
    }
    if a.iter().chain(b.iter()).any(|c| c.is_empty()) {
        return Err(Error::InvalidInput("samples must be nonempty"));
    }
    let probes = ys
        .iter()
        .zip(a.iter_mut().zip(b.iter_mut()))
        .map(|(&y, (ca, cb))| ProbeTest {
            y,
            ks: ks_two_sample(ca, cb),
        })
        .collect();
    Ok(ProfileComparison { level, probes })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(b: f64) -> SkewParam {
        SkewParam::new(b).unwrap()
    }

    #[test]
    fn constants_follow_the_generators() {
        let q = p(0.7);
        let c = |k| {
            let s = RKDiffusionSpec::new(k, 0.5, &q).unwrap();
            (s.drift_const(), s.diffusion_scale())
        };
        assert_eq!(c(RkKind::V1), (0.0, 1.0));
        assert_eq!(c(RkKind::V2), (2.0, 1.0));
        assert_eq!(c(RkKind::V3), (0.0, 1.0));
        assert_eq!(c(RkKind::U1), (0.0, 1.0 / 1.4));
        assert_eq!(c(RkKind::U2), (1.0 / 0.7, 1.0 / 1.4));
        assert_eq!(c(RkKind::U3), (0.0, 1.0 / (2.0 * (1.0 - 0.7))));
    }

    #[test]
    fn negative_state_is_rejected() {
        let s = RKDiffusionSpec::new(RkKind::V1, 1.0, &p(0.5)).unwrap();
        let mut r = RandomStream::new(1);
        assert!(rk_step(&s, -1e-3, 1e-4, &mut r).is_err());
        assert!(rk_step(&s, 1.0, 0.0, &mut r).is_err());
    }

    #[test]
    fn branch_interpolates_and_stops_at_n() {
        let st = RKDiffusionSpec::new(RkKind::V2, 1.0, &p(0.5))
            .unwrap()
            .stepper(0.1);
        let mut r = RandomStream::new(3);
        let mut out = [0.0; 2];
        let (end, abs) = run_branch(&st, 1.0, 0.1, Some(10), &[0.0, 1.0], &mut out, &mut r);
        assert_eq!(out[0], 1.0);
        assert_eq!(out[1], end);
        assert!(abs.is_none());
    }

    #[test]
    fn window_mean_of_linear_profile() {
        let prof = RKProfile {
            xs: alloc::vec![0.0, 0.3, 1.0, 2.0],
            values: alloc::vec![0.0, 0.3, 1.0, 2.0],
            normalization: Normalization::Lebesgue,
            family: RkFamily::V,
            lambda: 1.0,
            dh: 1e-3,
            z: 1.0,
            v0: 0.0,
            left_limit: 0.0,
            right_limit: 0.0,
            left_end: None,
            right_end: None,
        };
        assert!((prof.window_mean(0.9, 0.25).unwrap() - 0.9).abs() < 1e-15);
        assert!((prof.window_mean(0.5, 0.1).unwrap() - 0.5).abs() < 1e-15);
        assert!(prof.window_mean(1.9, 0.2).is_none());
    }

    #[test]
    fn grid_must_be_increasing() {
        let r = RandomStream::new(3);
        let q = p(0.6);
        assert!(synthesize_profile_discontinuous(&q, 1.0, 1.0, &[0.5, 0.2], 1e-3, &r).is_err());
        assert!(synthesize_profile_discontinuous(&q, 1.0, 0.0, &[0.5], 1e-3, &r).is_err());
    }
}
