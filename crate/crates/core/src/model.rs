//! Skew Brownian motion parameterization, scale and speed, transition
//! density, Green kernel and exact one-step sampling.

use crate::error::{check_finite, check_positive, Error, Result};
use crate::special::{normal_cdf, normal_pdf};
use core::f64::consts::PI;
#[allow(unused_imports)] // inherent methods win once std is in the crate graph
use num_traits::Float;
use rand::Rng;
use rand_distr::StandardNormal;

/// Skewness `β ∈ (0, 1)` with its derived constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SkewParam {
    beta: f64,
}

impl SkewParam {
    pub fn new(beta: f64) -> Result<Self> {
        if beta.is_finite() && beta > 0.0 && beta < 1.0 {
            Ok(SkewParam { beta })
        } else {
            Err(Error::InvalidParameter {
                name: "beta",
                value: beta,
                reason: "must lie in the open interval (0, 1)",
            })
        }
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn two_beta(&self) -> f64 {
        2.0 * self.beta
    }

    pub fn two_one_minus_beta(&self) -> f64 {
        2.0 * (1.0 - self.beta)
    }

    /// `max(β, 1 − β)`.
    pub fn beta_star(&self) -> f64 {
        self.beta.max(1.0 - self.beta)
    }

    /// The mirrored parameter `1 − β`: `W_β` started at 0 equals `−W_{1−β}`
    /// in law.
    pub fn mirror(&self) -> Self {
        SkewParam {
            beta: 1.0 - self.beta,
        }
    }
}

/// Time and endpoints of a transition `x → z` over time `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionQuery {
    pub t: f64,
    pub x: f64,
    pub z: f64,
}

impl TransitionQuery {
    pub fn new(t: f64, x: f64, z: f64) -> Result<Self> {
        check_positive("t", t)?;
        check_finite("x", x)?;
        check_finite("z", z)?;
        Ok(TransitionQuery { t, x, z })
    }
}

#[inline]
fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Scale function: `x/(2β)` on the right, `x/(2(1−β))` on the left.
pub fn scale(p: &SkewParam, x: f64) -> f64 {
    if x >= 0.0 {
        x / p.two_beta()
    } else {
        x / p.two_one_minus_beta()
    }
}

pub fn scale_inverse(p: &SkewParam, y: f64) -> f64 {
    if y >= 0.0 {
        y * p.two_beta()
    } else {
        y * p.two_one_minus_beta()
    }
}

/// Density of the halved speed measure `m*` away from 0.
pub fn speed_density_star(p: &SkewParam, x: f64) -> Result<f64> {
    if x > 0.0 {
        Ok(p.two_beta())
    } else if x < 0.0 {
        Ok(p.two_one_minus_beta())
    } else {
        Err(Error::SpeedAtZero)
    }
}

/// `m*((x−ε, x+ε))` for a window not straddling 0, or centred at 0.
pub fn speed_window_mass(p: &SkewParam, x: f64, eps: f64) -> Result<f64> {
    check_positive("epsilon", eps)?;
    if x == 0.0 {
        Ok(2.0 * eps)
    } else if eps <= x.abs() {
        Ok(2.0 * eps * speed_density_star(p, x)?)
    } else {
        Err(Error::InvalidInput(
            "speed window straddles 0; require epsilon <= |x| for x != 0",
        ))
    }
}

/// Gaussian kernel `e^{−u²/2t}/√(2πt)`.
#[inline]
pub fn gauss(u: f64, t: f64) -> f64 {
    (-u * u / (2.0 * t)).exp() / (2.0 * PI * t).sqrt()
}

/// Transition density with respect to Lebesgue measure.
pub fn transition_density(p: &SkewParam, q: &TransitionQuery) -> f64 {
    let TransitionQuery { t, x, z } = *q;
    gauss(z - x, t) + (2.0 * p.beta - 1.0) * sign(z) * gauss(x.abs() + z.abs(), t)
}

/// Transition distribution function `P_x(W(t) ≤ z)`.
pub fn transition_cdf(p: &SkewParam, q: &TransitionQuery) -> f64 {
    let TransitionQuery { t, x, z } = *q;
    let s = t.sqrt();
    let k = 2.0 * p.beta - 1.0;
    let ax = x.abs();
    if z <= 0.0 {
        normal_cdf((z - x) / s) - k * normal_cdf((z - ax) / s)
    } else {
        // F(0) + mass of (0, z]
        normal_cdf((z - x) / s) - k * normal_cdf(-ax / s)
            + k * (normal_cdf((ax + z) / s) - normal_cdf(ax / s))
    }
}

/// Green kernel: density of `W_β(τ)` started at `x`, `τ ~ Exp(λ)`.
pub fn green_kernel(p: &SkewParam, lambda: f64, x: f64, z: f64) -> Result<f64> {
    check_positive("lambda", lambda)?;
    let r = (2.0 * lambda).sqrt();
    let c = (0.5 * lambda).sqrt();
    Ok(c * (-(x - z).abs() * r).exp()
        + c * (2.0 * p.beta - 1.0) * sign(z) * (-(x.abs() + z.abs()) * r).exp())
}

/// Distribution function of the Green kernel in `z`.
pub fn green_cdf(p: &SkewParam, lambda: f64, x: f64, z: f64) -> Result<f64> {
    check_positive("lambda", lambda)?;
    let r = (2.0 * lambda).sqrt();
    let k = 2.0 * p.beta - 1.0;
    // integral of sqrt(l/2) e^{-|u - x| r} du up to z
    let free = |z: f64| {
        if z <= x {
            0.5 * (-(x - z) * r).exp()
        } else {
            1.0 - 0.5 * (-(z - x) * r).exp()
        }
    };
    let ax = x.abs();
    let skew = if z <= 0.0 {
        -0.5 * (-(ax - z) * r).exp()
    } else {
        -0.5 * (-ax * r).exp() + 0.5 * (-ax * r).exp() * (1.0 - (-z * r).exp())
    };
    Ok(free(z) + k * skew)
}

/// One exact transition step of length `t` from `x`, with `positive` the
/// probability that an excursion away from 0 is positive.
///
/// Runs a Brownian increment; if the segment crossed or touched 0 (sign
/// change, or a bridge hit with probability `e^{−2xy/t}`), the endpoint's
/// sign is redrawn. `positive = 1` gives reflected Brownian motion.
#[inline]
pub fn skew_step<R: Rng + ?Sized>(positive: f64, t: f64, x: f64, rng: &mut R) -> f64 {
    skew_step_with(positive, t.sqrt(), 2.0 / t, x, rng)
}

/// [`skew_step`] with `√t` and `2/t` precomputed.
#[inline]
pub fn skew_step_with<R: Rng + ?Sized>(
    positive: f64,
    sqrt_t: f64,
    two_over_t: f64,
    x: f64,
    rng: &mut R,
) -> f64 {
    let n: f64 = rng.sample(StandardNormal);
    let y = x + sqrt_t * n;
    let touched = if x == 0.0 || (x > 0.0) != (y > 0.0) {
        true
    } else {
        let a = two_over_t * x * y;
        a < 40.0 && rng.random::<f64>() < (-a).exp()
    };
    if touched {
        if positive >= 1.0 || rng.random::<f64>() < positive {
            y.abs()
        } else {
            -y.abs()
        }
    } else {
        y
    }
}

/// Exact draw from the transition density.
pub fn sample_transition<R: Rng + ?Sized>(
    p: &SkewParam,
    t: f64,
    x: f64,
    rng: &mut R,
) -> Result<f64> {
    check_positive("t", t)?;
    check_finite("x", x)?;
    Ok(skew_step(p.beta, t, x, rng))
}

/// Exact draw by inverting the closed-form distribution function
/// (bisection, then safeguarded Newton, to 1e-12 in probability). At
/// `x = 0` uses the mixture `|N(0,t)|` with sign `+` w.p. `β`.
pub fn sample_transition_inverse_cdf<R: Rng + ?Sized>(
    p: &SkewParam,
    t: f64,
    x: f64,
    rng: &mut R,
) -> Result<f64> {
    check_positive("t", t)?;
    check_finite("x", x)?;
    if x == 0.0 {
        let n: f64 = rng.sample(StandardNormal);
        let a = t.sqrt() * n.abs();
        return Ok(if rng.random::<f64>() < p.beta { a } else { -a });
    }
    let u: f64 = rng.random();
    let s = t.sqrt();
    let cdf = |z: f64| transition_cdf(p, &TransitionQuery { t, x, z });
    let mut lo = x.min(0.0) - 40.0 * s;
    let mut hi = x.max(0.0) + 40.0 * s;
    for _ in 0..30 {
        let mid = 0.5 * (lo + hi);
        if cdf(mid) < u {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut z = 0.5 * (lo + hi);
    for _ in 0..60 {
        let f = cdf(z) - u;
        if f.abs() < 1e-12 {
            return Ok(z);
        }
        if f < 0.0 {
            lo = z;
        } else {
            hi = z;
        }
        let d = transition_density(p, &TransitionQuery { t, x, z });
        let mut next = if d > 0.0 { z - f / d } else { f64::NAN };
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        z = next;
        if hi - lo < 1e-15 * (1.0 + z.abs()) {
            return Ok(z);
        }
    }
    Ok(z)
}

/// Density of the normal `N(x, t)` at `z`, exposed for tests and oracles.
pub fn brownian_density(t: f64, x: f64, z: f64) -> f64 {
    normal_pdf((z - x) / t.sqrt()) / t.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::AdaptiveQuad;
    use crate::rng::RandomStream;
    use crate::stats::{ks_one_sample, ks_two_sample};
    use alloc::vec::Vec;

    fn sp(b: f64) -> SkewParam {
        SkewParam::new(b).unwrap()
    }

    #[test]
    fn skew_param_validation() {
        assert!(SkewParam::new(0.0).is_err());
        assert!(SkewParam::new(1.0).is_err());
        assert!(SkewParam::new(1.5).is_err());
        assert!(SkewParam::new(f64::NAN).is_err());
        let p = sp(0.3);
        assert_eq!(p.two_beta(), 0.6);
        assert!((p.two_one_minus_beta() - 1.4).abs() < 1e-15);
        assert_eq!(p.beta_star(), 0.7);
        assert!((p.mirror().beta() - 0.7).abs() < 1e-15);
    }

    #[test]
    fn scale_examples() {
        assert_eq!(scale(&sp(0.5), 3.0), 3.0);
        assert!((scale(&sp(0.75), 1.0) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(scale(&sp(0.3), 0.0), 0.0);
        assert_eq!(scale_inverse(&sp(0.5), -2.0), -2.0);
        assert!((scale_inverse(&sp(0.75), 2.0 / 3.0) - 1.0).abs() < 1e-15);
        assert_eq!(scale_inverse(&sp(0.75), 0.0), 0.0);
    }

    #[test]
    fn speed_examples() {
        assert_eq!(speed_density_star(&sp(0.5), 1.0).unwrap(), 1.0);
        assert!((speed_density_star(&sp(0.7), -0.1).unwrap() - 0.6).abs() < 1e-15);
        assert!((speed_density_star(&sp(0.7), 0.1).unwrap() - 1.4).abs() < 1e-15);
        assert_eq!(speed_density_star(&sp(0.7), 0.0), Err(Error::SpeedAtZero));
        assert!((speed_window_mass(&sp(0.7), 0.0, 0.1).unwrap() - 0.2).abs() < 1e-15);
        assert!((speed_window_mass(&sp(0.7), 0.5, 0.1).unwrap() - 0.28).abs() < 1e-15);
        assert!(speed_window_mass(&sp(0.7), 0.05, 0.1).is_err());
    }

    #[test]
    fn density_examples() {
        let q = TransitionQuery::new(1.0, 0.0, 0.0).unwrap();
        assert!((transition_density(&sp(0.5), &q) - 0.3989422804014327).abs() < 1e-15);
        assert!(TransitionQuery::new(0.0, 0.0, 0.0).is_err());
        let quad = AdaptiveQuad::new(1e-13, 1e-300);
        let p = sp(0.7);
        let total = quad
            .integrate(
                |z| transition_density(&p, &TransitionQuery { t: 2.0, x: 0.5, z }),
                -40.0,
                0.0,
            )
            .unwrap()
            + quad
                .integrate(
                    |z| transition_density(&p, &TransitionQuery { t: 2.0, x: 0.5, z }),
                    0.0,
                    40.0,
                )
                .unwrap();
        assert!((total - 1.0).abs() < 1e-10);
    }

    #[test]
    fn green_examples() {
        let g = green_kernel(&sp(0.5), 0.5, 0.0, 1.0).unwrap();
        assert!((g - 0.5 * (-1.0f64).exp()).abs() < 1e-15);
        let p = sp(0.7);
        let ratio =
            green_kernel(&p, 1.0, 0.0, 1.0).unwrap() / green_kernel(&p, 1.0, 0.0, -1.0).unwrap();
        assert!((ratio - 7.0 / 3.0).abs() < 1e-12);
        let quad = AdaptiveQuad::new(1e-13, 1e-300);
        let total = quad
            .integrate_line(|z| green_kernel(&p, 1.0, 0.0, z).unwrap(), 0.0, 1.0)
            .unwrap();
        assert!((total - 1.0).abs() < 1e-10);
        assert!(green_kernel(&p, 0.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn cdfs_are_integrals_of_densities() {
        let quad = AdaptiveQuad::new(1e-13, 1e-300);
        for &(b, t, x) in &[(0.7, 1.0, 0.3), (0.2, 0.5, -1.0), (0.9, 2.0, 0.0)] {
            let p = sp(b);
            for &z in &[-2.0, -0.1, 0.0, 0.4, 3.0] {
                let dens = |u: f64| transition_density(&p, &TransitionQuery { t, x, z: u });
                let mut v = quad.integrate(dens, -40.0, z.min(0.0)).unwrap();
                if z > 0.0 {
                    v += quad.integrate(dens, 0.0, z).unwrap();
                }
                let c = transition_cdf(&p, &TransitionQuery { t, x, z });
                assert!((v - c).abs() < 1e-12, "transition cdf b={b} x={x} z={z}");
                let lam = 0.8;
                let g = |u: f64| green_kernel(&p, lam, x, u).unwrap();
                let mut w = quad
                    .integrate_to_infinity(|u| g(z.min(0.0) - u), 0.0, 1.0)
                    .unwrap();
                if z > 0.0 {
                    w += quad.integrate(g, 0.0, z).unwrap();
                }
                let gc = green_cdf(&p, lam, x, z).unwrap();
                assert!(
                    (w - gc).abs() < 1e-12,
                    "green cdf b={b} x={x} z={z}: {w} vs {gc}"
                );
            }
        }
    }

    #[test]
    fn green_is_laplace_transform_of_density() {
        let quad = AdaptiveQuad::new(1e-12, 1e-300);
        for &(b, lam, x, z) in &[
            (0.7, 0.5, 0.3, 1.1),
            (0.3, 2.0, -0.5, 0.7),
            (0.9, 1.0, 1.0, -0.4),
        ] {
            let p = sp(b);
            // t = s^2 removes the 1/sqrt(t) behaviour at the origin
            let v = quad
                .integrate_to_infinity(
                    |s| {
                        let t = s * s;
                        if t == 0.0 {
                            return 0.0;
                        }
                        2.0 * s
                            * lam
                            * (-lam * t).exp()
                            * transition_density(&p, &TransitionQuery { t, x, z })
                    },
                    0.0,
                    1.0,
                )
                .unwrap();
            let g = green_kernel(&p, lam, x, z).unwrap();
            assert!((v - g).abs() < 1e-8, "{v} vs {g}");
        }
    }

    #[test]
    fn chapman_kolmogorov() {
        let quad = AdaptiveQuad::new(1e-12, 1e-300);
        let mut rng = RandomStream::new(3);
        for _ in 0..12 {
            let b = 0.05 + 0.9 * rng.random::<f64>();
            let s = 0.1 + rng.random::<f64>();
            let t = 0.1 + rng.random::<f64>();
            let x = 2.0 * rng.random::<f64>() - 1.0;
            let z = 2.0 * rng.random::<f64>() - 1.0;
            let p = sp(b);
            let f = |y: f64| {
                transition_density(&p, &TransitionQuery { t: s, x, z: y })
                    * transition_density(&p, &TransitionQuery { t, x: y, z })
            };
            let v = quad.integrate(f, -30.0, 0.0).unwrap() + quad.integrate(f, 0.0, 30.0).unwrap();
            let w = transition_density(&p, &TransitionQuery { t: s + t, x, z });
            assert!((v - w).abs() < 1e-8, "CK b={b}: {v} vs {w}");
        }
    }

    #[test]
    fn density_never_negative() {
        for &b in &[0.01, 0.3, 0.99] {
            let p = sp(b);
            for i in 0..200 {
                let z = -5.0 + 0.05 * i as f64;
                for &x in &[-1.0, 0.0, 0.4] {
                    assert!(transition_density(&p, &TransitionQuery { t: 0.7, x, z }) >= 0.0);
                }
            }
        }
    }

    #[test]
    fn positive_fraction_from_zero() {
        let p = sp(0.7);
        let mut rng = RandomStream::new(11);
        let n = 1_000_000;
        let pos = (0..n)
            .filter(|_| sample_transition(&p, 1.0, 0.0, &mut rng).unwrap() > 0.0)
            .count();
        let se = (0.7f64 * 0.3 / n as f64).sqrt();
        assert!((pos as f64 / n as f64 - 0.7).abs() < 3.0 * se);
    }

    #[test]
    fn symmetric_case_is_gaussian() {
        let p = sp(0.5);
        let mut rng = RandomStream::new(12);
        let mut xs: Vec<f64> = (0..100_000)
            .map(|_| sample_transition(&p, 1.0, 2.0, &mut rng).unwrap())
            .collect();
        let r = ks_one_sample(&mut xs, |z| normal_cdf(z - 2.0));
        assert!(r.p_value > 0.01, "{r:?}");
    }

    #[test]
    fn histogram_matches_density() {
        let p = sp(0.7);
        let (t, x) = (1.0, 0.3);
        let mut rng = RandomStream::new(13);
        let n = 1_000_000;
        let bins = 200;
        let w = 10.0 / bins as f64;
        let mut h = alloc::vec![0usize; bins];
        for _ in 0..n {
            let z = sample_transition(&p, t, x, &mut rng).unwrap();
            if (-5.0..5.0).contains(&z) {
                h[((z + 5.0) / w) as usize] += 1;
            }
        }
        let mut worst = 0.0f64;
        for (i, &c) in h.iter().enumerate() {
            let lo = -5.0 + i as f64 * w;
            let mass = transition_cdf(&p, &TransitionQuery { t, x, z: lo + w })
                - transition_cdf(&p, &TransitionQuery { t, x, z: lo });
            worst = worst.max((c as f64 / n as f64 / w - mass / w).abs());
        }
        assert!(worst < 0.01, "{worst}");
    }

    #[test]
    fn exact_samplers_agree() {
        let p = sp(0.7);
        let mut rng = RandomStream::new(14);
        for &x in &[0.3, -0.4, 0.0] {
            let n = 50_000;
            let mut a: Vec<f64> = (0..n)
                .map(|_| sample_transition(&p, 0.5, x, &mut rng).unwrap())
                .collect();
            let mut b: Vec<f64> = (0..n)
                .map(|_| sample_transition_inverse_cdf(&p, 0.5, x, &mut rng).unwrap())
                .collect();
            let cdf = |z: f64| transition_cdf(&p, &TransitionQuery { t: 0.5, x, z });
            assert!(ks_one_sample(&mut a, cdf).p_value > 0.001);
            assert!(ks_one_sample(&mut b, cdf).p_value > 0.001);
            assert!(ks_two_sample(&mut a, &mut b).p_value > 0.001);
        }
    }
}
