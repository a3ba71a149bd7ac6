//! Closed-form laws of the supremum of local time: the hybrid Bessel
//! integrals, the tail at an exponential time and the residue series at a
//! fixed time.

use crate::error::{check_positive, Error, Result};
use crate::model::SkewParam;
use crate::quad::AdaptiveQuad;
use crate::special::{i0, i0e, i1e, j0, j1, I_OVERFLOW_GUARD};
use alloc::vec::Vec;
use core::f64::consts::PI;
#[allow(unused_imports)] // inherent methods win once std is in the crate graph
use num_traits::Float;

pub use crate::special::{bessel, j0_zeros, BesselKind, BesselZeroTable};

/// Relative tolerance of the hybrid-integral quadrature.
pub const HYBRID_REL_TOL: f64 = 1e-10;

/// Skewness restricted to `[1/2, 1]`, the range where the supremum laws
/// hold. `β = 1` is reflected Brownian motion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupBeta(f64);

impl SupBeta {
    pub fn new(beta: f64) -> Result<Self> {
        if (0.5..=1.0).contains(&beta) {
            Ok(SupBeta(beta))
        } else {
            Err(Error::InvalidParameter {
                name: "beta",
                value: beta,
                reason: "supremum laws need beta in [1/2, 1]; map beta < 1/2 through the mirror 1 - beta",
            })
        }
    }

    pub const HALF: SupBeta = SupBeta(0.5);
    pub const REFLECTED: SupBeta = SupBeta(1.0);

    /// `β` itself when `β ≥ 1/2`, otherwise the mirrored `1 − β`.
    pub fn mirrored(p: &SkewParam) -> Self {
        SupBeta(p.beta().max(1.0 - p.beta()))
    }

    pub fn beta(&self) -> f64 {
        self.0
    }

    /// `β̂ = (1 − β)/β ∈ [0, 1]`.
    pub fn hat(&self) -> f64 {
        (1.0 - self.0) / self.0
    }
}

impl TryFrom<SkewParam> for SupBeta {
    type Error = Error;

    fn try_from(p: SkewParam) -> Result<Self> {
        SupBeta::new(p.beta())
    }
}

/// The four hybrid integrals: `I0b = I₀(β,·)`, `I1b = I₁(β,·)` and their
/// trigonometric companions `J0b`, `J1b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HybridKind {
    I0b,
    I1b,
    J0b,
    J1b,
}

impl HybridKind {
    fn is_odd(self) -> bool {
        matches!(self, HybridKind::I1b | HybridKind::J1b)
    }
}

fn quad() -> AdaptiveQuad {
    AdaptiveQuad::new(HYBRID_REL_TOL, 1e-300)
}

/// Defining integrand at `x ≥ 0`, unscaled.
fn integrand(kind: HybridKind, bh: f64, x: f64, v: f64) -> f64 {
    let a = (1.0 - bh * v) * x;
    let b = (1.0 - v) * x;
    match kind {
        HybridKind::I0b => a.cosh() * i0(v * x) + bh * b.cosh() * i0(bh * v * x),
        HybridKind::I1b => a.sinh() * i0(v * x) + bh * b.sinh() * i0(bh * v * x),
        HybridKind::J0b => a.cos() * j0(v * x) + bh * b.cos() * j0(bh * v * x),
        HybridKind::J1b => a.sin() * j0(v * x) + bh * b.sin() * j0(bh * v * x),
    }
}

/// Integrand of the I-kinds multiplied by `e^{−2x}`, free of overflow.
fn integrand_scaled(sign: f64, bh: f64, x: f64, v: f64) -> f64 {
    let first = i0e(v * x)
        * (((v * (1.0 - bh) - 1.0) * x).exp() + sign * ((v * (1.0 + bh) - 3.0) * x).exp());
    let second = bh
        * i0e(bh * v * x)
        * (((-1.0 - v * (1.0 - bh)) * x).exp() + sign * ((-3.0 + v * (1.0 + bh)) * x).exp());
    0.5 * (first + second)
}

fn check_x(x: f64) -> Result<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(Error::InvalidParameter {
            name: "x",
            value: x,
            reason: "must be finite",
        })
    }
}

/// Hybrid integral by quadrature of its definition, whatever `β` is.
pub fn hybrid_integral_quadrature(kind: HybridKind, beta: SupBeta, x: f64) -> Result<f64> {
    let x = check_x(x)?;
    let sign = if kind.is_odd() && x < 0.0 { -1.0 } else { 1.0 };
    let ax = x.abs();
    if ax == 0.0 {
        return Ok(match kind {
            HybridKind::I0b | HybridKind::J0b => 0.5 * (1.0 + beta.hat()),
            _ => 0.0,
        });
    }
    let bh = beta.hat();
    let v = match kind {
        HybridKind::I0b | HybridKind::I1b => {
            if ax > 0.5 * I_OVERFLOW_GUARD {
                return Err(Error::Overflow {
                    x,
                    limit: 0.5 * I_OVERFLOW_GUARD,
                });
            }
            if ax <= 1.0 {
                quad().integrate(|v| integrand(kind, bh, ax, v), 0.0, 1.0)?
            } else {
                hybrid_scaled_i(kind, beta, ax)? * (2.0 * ax).exp()
            }
        }
        HybridKind::J0b | HybridKind::J1b => {
            let panels = (ax / 4.0).ceil() as usize + 1;
            quad().integrate_panels(|v| integrand(kind, bh, ax, v), 0.0, 1.0, panels)?
        }
    };
    Ok(sign * 0.5 * v)
}

/// `e^{−2x}` times the integral of an I-kind integrand for `x > 0`, before
/// the outer factor 1/2.
fn hybrid_scaled_i(kind: HybridKind, beta: SupBeta, x: f64) -> Result<f64> {
    let sign = if kind == HybridKind::I1b { -1.0 } else { 1.0 };
    let bh = beta.hat();
    quad().integrate(|v| integrand_scaled(sign, bh, x, v), 0.0, 1.0)
}

/// Hybrid integral. At `β = 1/2` the closed forms `I₀, I₁, J₀, J₁` are
/// used; elsewhere the defining integral is computed to relative `1e−10`.
pub fn hybrid_integral(kind: HybridKind, beta: SupBeta, x: f64) -> Result<f64> {
    let x = check_x(x)?;
    if beta.beta() == 0.5 {
        return match kind {
            HybridKind::I0b => bessel(BesselKind::I0, x),
            HybridKind::I1b => bessel(BesselKind::I1, x),
            HybridKind::J0b => Ok(j0(x)),
            HybridKind::J1b => Ok(j1(x)),
        };
    }
    hybrid_integral_quadrature(kind, beta, x)
}

/// `e^{−2x} I₁(β,x)` for `x ≥ 0`, computable for any finite `x`.
pub fn hybrid_i1_scaled(beta: SupBeta, x: f64) -> Result<f64> {
    let x = check_x(x)?;
    if x < 0.0 {
        return Err(Error::InvalidParameter {
            name: "x",
            value: x,
            reason: "scaled hybrid integral needs x >= 0",
        });
    }
    if beta.beta() == 0.5 {
        return Ok(i1e(x) * (-x).exp());
    }
    if x <= 1.0 {
        return Ok(hybrid_integral_quadrature(HybridKind::I1b, beta, x)? * (-2.0 * x).exp());
    }
    Ok(0.5 * hybrid_scaled_i(HybridKind::I1b, beta, x)?)
}

/// `d/dx I₁(β,x) = sh((2 − 1/β)x) I₀(x)/(2x) − I₁(β,x)/x + I₀(β,x)`.
///
/// The factor `I₀(x)` comes from differentiating the upper limit of
/// `x I₁(β,x) = ½∫₀^x sh(x − β̂u) I₀(u) du + ½∫₀^{β̂x} sh(x − u/β̂) I₀(u) du`;
/// it matters only for `1/2 < β < 1`.
pub fn hybrid_i1_derivative(beta: SupBeta, x: f64) -> Result<f64> {
    let x = check_x(x)?;
    if x == 0.0 {
        return Err(Error::InvalidParameter {
            name: "x",
            value: x,
            reason: "derivative formula is singular at x = 0",
        });
    }
    let c = 2.0 - 1.0 / beta.beta();
    let i1b = hybrid_integral(HybridKind::I1b, beta, x)?;
    let i0b = hybrid_integral(HybridKind::I0b, beta, x)?;
    let i0x = bessel(BesselKind::I0, x)?;
    Ok((c * x).sinh() * i0x / (2.0 * x) - i1b / x + i0b)
}

/// Which random time the supremum is taken up to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SupLawTime {
    /// Independent exponential time with this rate.
    Exponential { lambda: f64 },
    /// Deterministic time.
    Fixed { t: f64 },
}

/// Query for the law of `sup_y ℓ(·, y)` at level `h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupLawQuery {
    pub beta: SupBeta,
    pub h: f64,
    pub time: SupLawTime,
    /// Largest number of terms allowed in each residue sum.
    pub series_terms: usize,
    /// Absolute accuracy demanded of the residue series.
    pub tolerance: f64,
}

impl SupLawQuery {
    pub const DEFAULT_TERMS: usize = 200;
    pub const DEFAULT_TOLERANCE: f64 = 1e-12;

    pub fn exponential(beta: SupBeta, lambda: f64, h: f64) -> Result<Self> {
        check_positive("lambda", lambda)?;
        Self::build(beta, h, SupLawTime::Exponential { lambda })
    }

    pub fn fixed(beta: SupBeta, t: f64, h: f64) -> Result<Self> {
        check_positive("t", t)?;
        Self::build(beta, h, SupLawTime::Fixed { t })
    }

    fn build(beta: SupBeta, h: f64, time: SupLawTime) -> Result<Self> {
        if !(h.is_finite() && h >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "h",
                value: h,
                reason: "level must be finite and >= 0",
            });
        }
        Ok(SupLawQuery {
            beta,
            h,
            time,
            series_terms: Self::DEFAULT_TERMS,
            tolerance: Self::DEFAULT_TOLERANCE,
        })
    }

    pub fn with_terms(mut self, k: usize) -> Self {
        self.series_terms = k;
        self
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tolerance = tol;
        self
    }
}

/// `P₀(sup_y ℓ(τ,y) > h)` for `τ ~ Exp(λ)`:
/// `h√(2λ) I₁(β,x) / (sh²(x) I₀(x))` with `x = h√(λ/2)`.
pub fn sup_tail_exp_time(q: &SupLawQuery) -> Result<f64> {
    let lambda = match q.time {
        SupLawTime::Exponential { lambda } => lambda,
        SupLawTime::Fixed { .. } => {
            return Err(Error::InvalidInput(
                "sup_tail_exp_time needs an exponential-time query",
            ))
        }
    };
    sup_tail(q.beta, lambda, q.h)
}

/// Shorthand for [`sup_tail_exp_time`].
pub fn sup_tail(beta: SupBeta, lambda: f64, h: f64) -> Result<f64> {
    check_positive("lambda", lambda)?;
    if h == 0.0 {
        return Ok(1.0);
    }
    check_positive("h", h)?;
    let x = h * (0.5 * lambda).sqrt();
    let p = if x <= 1.0 {
        let i1b = hybrid_integral(HybridKind::I1b, beta, x)?;
        let sh = x.sinh();
        2.0 * x * i1b / (sh * sh * i0(x))
    } else {
        // sh²(x) = e^{2x} q², I₀(x) = e^x i0e(x)
        let s1 = hybrid_i1_scaled(beta, x)?;
        let q = -0.5 * (-2.0 * x).exp_m1();
        2.0 * x * s1 * (-x).exp() / (q * q * i0e(x))
    };
    clamp_probability(p, 1e-9)
}

fn clamp_probability(p: f64, tol: f64) -> Result<f64> {
    if !p.is_finite() || p < -tol || p > 1.0 + tol {
        return Err(Error::NonConvergence {
            what: "probability outside [0, 1]",
            achieved: p,
            required: tol,
        });
    }
    Ok(p.clamp(0.0, 1.0))
}

/// `P(ℓ(τ,0) > v) = e^{−v√(2λ)}`, the exponential law of local time at 0.
pub fn exp_law_at_zero(lambda: f64, v: f64) -> Result<f64> {
    check_positive("lambda", lambda)?;
    if !(v.is_finite() && v >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "v",
            value: v,
            reason: "must be finite and >= 0",
        });
    }
    Ok((-v * (2.0 * lambda).sqrt()).exp())
}

/// Result of summing the residue series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesValue {
    /// `P(sup_y ℓ(t,y) ≤ h)`.
    pub cdf: f64,
    /// Terms used in each of the two sums.
    pub terms: usize,
    /// Bound on the omitted terms.
    pub tail_bound: f64,
    /// Estimated rounding error from cancellation between terms.
    pub roundoff: f64,
}

/// Coefficients of the residue series for one `β`, computed on demand and
/// cached. The series only depends on `s = t/h²`.
#[derive(Debug, Clone)]
pub struct FixedTimeSeries {
    beta: SupBeta,
    zeros: Vec<f64>,
    // first sum: a_k e^{−2 j_k² s}
    a: Vec<f64>,
    // second sum: (16 s π k c_k + d_k) e^{−2 π² k² s}
    c: Vec<f64>,
    d: Vec<f64>,
}

impl FixedTimeSeries {
    pub fn new(beta: SupBeta) -> Self {
        FixedTimeSeries {
            beta,
            zeros: Vec::new(),
            a: Vec::new(),
            c: Vec::new(),
            d: Vec::new(),
        }
    }

    pub fn beta(&self) -> SupBeta {
        self.beta
    }

    fn ensure(&mut self, k: usize) -> Result<()> {
        if self.a.len() >= k {
            return Ok(());
        }
        if self.zeros.len() < k {
            let want = k.max(2 * self.zeros.len()).max(16);
            self.zeros = j0_zeros(want)?.zeros().to_vec();
        }
        let b = self.beta;
        let w = 2.0 - 1.0 / b.beta();
        for n in self.a.len() + 1..=k {
            let j = self.zeros[n - 1];
            let s = j.sin();
            self.a
                .push(4.0 * hybrid_integral(HybridKind::J1b, b, j)? / (s * s * j1(j)));
            let pk = PI * n as f64;
            let (j0p, j1p) = (j0(pk), j1(pk));
            let j1b = hybrid_integral(HybridKind::J1b, b, pk)?;
            let j0b = hybrid_integral(HybridKind::J0b, b, pk)?;
            self.c.push(j1b / j0p);
            // the sine term carries 1/(2πk): its residue comes from the
            // I₀(x) factor in the derivative of I₁(β,x)
            self.d.push(
                4.0 * (-(w * pk).sin() / (2.0 * pk) - j0b / j0p + j1b / (pk * j0p)
                    - j1b * j1p / (j0p * j0p)),
            );
        }
        Ok(())
    }

    /// The k-th terms `(A_k(s), B_k(s))` of the two sums, k from 1.
    pub fn terms(&mut self, s: f64, k: usize) -> Result<(f64, f64)> {
        if k == 0 {
            return Err(Error::InvalidInput("series terms are counted from 1"));
        }
        self.ensure(k)?;
        let j = self.zeros[k - 1];
        let pk = PI * k as f64;
        let a = self.a[k - 1] * (-2.0 * j * j * s).exp();
        let b = (16.0 * s * pk * self.c[k - 1] + self.d[k - 1]) * (-2.0 * pk * pk * s).exp();
        Ok((a, b))
    }

    /// Envelope of `|A_k| + |B_k|` that does not vanish at sign changes.
    fn envelope(&self, s: f64, k: usize) -> f64 {
        let j = self.zeros[k - 1];
        let pk = PI * k as f64;
        self.a[k - 1].abs() * (-2.0 * j * j * s).exp()
            + (16.0 * s * pk * self.c[k - 1].abs() + self.d[k - 1].abs())
                * (-2.0 * pk * pk * s).exp()
    }

    /// `P(sup_y ℓ(t,y) ≤ h)` at `s = t/h²`, summing at most `max_terms`
    /// terms per sum until the omitted tail is below `tol/10`.
    pub fn cdf(&mut self, s: f64, max_terms: usize, tol: f64) -> Result<SeriesValue> {
        check_positive("t/h^2", s)?;
        check_positive("tolerance", tol)?;
        if max_terms == 0 {
            return Err(Error::InvalidInput("series needs at least one term"));
        }
        let mut sum = 0.0;
        let mut abs_sum = 0.0;
        let mut tail = f64::INFINITY;
        let mut used = 0;
        for k in 1..=max_terms {
            let (a, b) = self.terms(s, k)?;
            sum += a + b;
            abs_sum += a.abs() + b.abs();
            used = k;
            // later terms shrink at least by this ratio (coefficients grow
            // at most linearly in k)
            let kf = k as f64;
            let r = (kf + 1.0) / kf * (-2.0 * PI * PI * (2.0 * kf + 1.0) * s).exp();
            if r < 1.0 {
                let bound = self.envelope(s, k) * r / (1.0 - r);
                tail = bound;
                if k >= 2 && bound < 0.1 * tol {
                    break;
                }
            }
        }
        let roundoff = 16.0 * f64::EPSILON * abs_sum;
        if !(tail < 0.1 * tol) {
            return Err(Error::NonConvergence {
                what: "fixed-time series (too few terms for this t/h^2)",
                achieved: tail,
                required: 0.1 * tol,
            });
        }
        if roundoff > tol {
            return Err(Error::NonConvergence {
                what: "fixed-time series (cancellation at small t/h^2)",
                achieved: roundoff,
                required: tol,
            });
        }
        let cdf = clamp_probability(sum, tol + tail + roundoff)?;
        Ok(SeriesValue {
            cdf,
            terms: used,
            tail_bound: tail,
            roundoff,
        })
    }
}

/// `P(sup_y ℓ(t,y) ≤ h)` from the residue series, routed through `s = t/h²`.
pub fn sup_cdf_fixed_time(q: &SupLawQuery) -> Result<SeriesValue> {
    let t = match q.time {
        SupLawTime::Fixed { t } => t,
        SupLawTime::Exponential { .. } => {
            return Err(Error::InvalidInput(
                "sup_cdf_fixed_time needs a fixed-time query",
            ))
        }
    };
    check_positive("h", q.h)?;
    FixedTimeSeries::new(q.beta).cdf(t / (q.h * q.h), q.series_terms, q.tolerance)
}
