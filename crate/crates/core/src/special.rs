//! Regularized incomplete Beta function and its inverse.
//!
//! Everything here is evaluated in the log domain where it matters: the
//! threshold schedule needs `F⁻¹_{a, 1/2}(q)` with `a` up to several hundred
//! thousand and `q` far below the smallest positive double, so the inverse is
//! also exposed on `ln q` directly.
//!
//! Points close to 1 cannot be represented to useful relative precision as a
//! plain `f64` (`1 - x` loses everything below the ulp of 1). [`UnitPoint`]
//! carries both `x` and `1 - x` so that `F(F⁻¹(q))` composes exactly on
//! either tail.

use std::f64::consts::PI;

use crate::error::{Error, Result};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;
const LN_PI: f64 = 1.144_729_885_849_400_2;

/// Shape parameters of a Beta distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaParams {
    a: f64,
    b: f64,
}

impl BetaParams {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) || !(b > 0.0 && b.is_finite()) {
            return Err(Error::Domain(format!(
                "beta shapes must be positive and finite, got a={a}, b={b}"
            )));
        }
        Ok(Self { a, b })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    fn swapped(self) -> Self {
        Self {
            a: self.b,
            b: self.a,
        }
    }
}

/// A point of `[0, 1]` stored together with its complement.
///
/// Invariant: `value + complement == 1` up to one rounding of whichever of
/// the two was derived from the other. The smaller of the two is always the
/// exactly computed one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitPoint {
    value: f64,
    complement: f64,
}

impl UnitPoint {
    pub fn new(value: f64) -> Result<Self> {
        check_unit("x", value)?;
        Ok(Self {
            value,
            complement: 1.0 - value,
        })
    }

    /// Builds the point `1 - complement` without rounding `complement`.
    pub fn from_complement(complement: f64) -> Result<Self> {
        check_unit("1 - x", complement)?;
        Ok(Self {
            value: 1.0 - complement,
            complement,
        })
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn complement(&self) -> f64 {
        self.complement
    }
}

fn check_unit(name: &str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::Domain(format!("{name} must lie in [0, 1], got {v}")));
    }
    Ok(())
}

/// Stirling series remainder `ln Γ(x) - [(x - 1/2) ln x - x + ln √(2π)]`,
/// accurate to ~1e-16 for `x ≥ 10`.
fn stirling_tail(x: f64) -> f64 {
    let r = 1.0 / x;
    let r2 = r * r;
    r * (1.0 / 12.0
        - r2 * (1.0 / 360.0
            - r2 * (1.0 / 1260.0
                - r2 * (1.0 / 1680.0 - r2 * (1.0 / 1188.0 - r2 * 691.0 / 360_360.0)))))
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// `ln Γ(x)` for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    if x >= 10.0 {
        return (x - 0.5) * x.ln() - x + LN_SQRT_2PI + stirling_tail(x);
    }
    if x < 0.5 {
        // Reflection keeps the Lanczos sum in its accurate range.
        return LN_PI - (PI * x).sin().ln() - ln_gamma(1.0 - x);
    }
    let z = x - 1.0;
    let mut sum = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        sum += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    LN_SQRT_2PI + (z + 0.5) * t.ln() - t + sum.ln()
}

/// `ln B(a, b)`.
///
/// For a large shape the difference `ln Γ(a) - ln Γ(a + b)` is formed from
/// the Stirling expansion directly, which avoids cancelling two numbers of
/// size `a ln a`.
pub fn log_beta(params: BetaParams) -> f64 {
    let (big, small) = if params.a >= params.b {
        (params.a, params.b)
    } else {
        (params.b, params.a)
    };
    let sum = big + small;
    if big < 10.0 {
        return ln_gamma(big) + ln_gamma(small) - ln_gamma(sum);
    }
    let ratio = small / big;
    if small < 10.0 {
        // ln Γ(big) - ln Γ(big + small)
        let diff = -(big - 0.5) * ratio.ln_1p() - small * sum.ln() + small + stirling_tail(big)
            - stirling_tail(sum);
        return ln_gamma(small) + diff;
    }
    LN_SQRT_2PI - (big - 0.5) * ratio.ln_1p() + (small - 0.5) * (small / sum).ln() - 0.5 * sum.ln()
        + stirling_tail(big)
        + stirling_tail(small)
        - stirling_tail(sum)
}

/// `ln(1 - e^v)` for `v ≤ 0`.
fn ln_one_minus_exp(v: f64) -> f64 {
    if v > -std::f64::consts::LN_2 {
        (-v.exp_m1()).ln()
    } else {
        (-v.exp()).ln_1p()
    }
}

/// Continued fraction for `I_x(a, b)`, modified Lentz. Converges quickly for
/// `x < (a + 1) / (a + b + 2)`.
fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-16;
    let max_iter = 10_000 + 20 * (a.max(b).sqrt() as usize);

    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=max_iter {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// `ln I_x(a, b)` through the continued fraction, valid (and accurate) below
/// the switch point.
fn ln_lower_cf(p: BetaParams, x: f64, one_minus_x: f64) -> f64 {
    let ln_front = p.a * x.ln() + p.b * one_minus_x.ln() - log_beta(p) - p.a.ln();
    ln_front + beta_cf(p.a, p.b, x).ln()
}

/// Both tails of the distribution at a point, in linear and log scale.
#[derive(Debug, Clone, Copy)]
struct Tails {
    ln_lower: f64,
    ln_upper: f64,
}

fn tails(p: BetaParams, pt: UnitPoint) -> Tails {
    let x = pt.value;
    if x <= 0.0 {
        return Tails {
            ln_lower: f64::NEG_INFINITY,
            ln_upper: 0.0,
        };
    }
    if pt.complement <= 0.0 {
        return Tails {
            ln_lower: 0.0,
            ln_upper: f64::NEG_INFINITY,
        };
    }
    if x < (p.a + 1.0) / (p.a + p.b + 2.0) {
        let ln_lower = ln_lower_cf(p, x, pt.complement);
        Tails {
            ln_lower,
            ln_upper: ln_one_minus_exp(ln_lower),
        }
    } else {
        let ln_upper = ln_lower_cf(p.swapped(), pt.complement, x);
        Tails {
            ln_lower: ln_one_minus_exp(ln_upper),
            ln_upper,
        }
    }
}

/// `F_{a,b}(x)`, the Beta CDF.
pub fn reg_inc_beta(params: BetaParams, x: f64) -> Result<f64> {
    Ok(reg_inc_beta_at(params, UnitPoint::new(x)?))
}

/// `F_{a,b}` at a point given with its complement.
pub fn reg_inc_beta_at(params: BetaParams, point: UnitPoint) -> f64 {
    tails(params, point).ln_lower.exp()
}

/// `1 - F_{a,b}` at a point, without cancellation near `F = 1`.
pub fn reg_inc_beta_upper_at(params: BetaParams, point: UnitPoint) -> f64 {
    tails(params, point).ln_upper.exp()
}

/// `ln F_{a,b}(x)`; stays finite where `F` itself underflows.
pub fn ln_reg_inc_beta(params: BetaParams, x: f64) -> Result<f64> {
    Ok(tails(params, UnitPoint::new(x)?).ln_lower)
}

/// `F⁻¹_{a,b}(q)` as a plain number.
pub fn reg_inc_beta_inv(params: BetaParams, q: f64) -> Result<f64> {
    Ok(reg_inc_beta_inv_point(params, q)?.value)
}

/// `F⁻¹_{a,b}(q)` with the complement kept at full precision.
pub fn reg_inc_beta_inv_point(params: BetaParams, q: f64) -> Result<UnitPoint> {
    check_unit("q", q)?;
    if q == 0.0 {
        return UnitPoint::new(0.0);
    }
    if q == 1.0 {
        return UnitPoint::new(1.0);
    }
    // Solve the tail holding at most half the mass; when the answer lands
    // past 1/2, refine it through its complement.
    if q <= 0.5 {
        let ln_q = q.ln();
        Ok(polish_complement(params, ln_q, solve_lower(params, ln_q)))
    } else {
        // Upper tail of (a, b) at x is the lower tail of (b, a) at 1 - x.
        let ln_q = (-q).ln_1p();
        let mirrored =
            polish_complement(params.swapped(), ln_q, solve_lower(params.swapped(), ln_q));
        Ok(UnitPoint {
            value: mirrored.complement,
            complement: mirrored.value,
        })
    }
}

/// Newton steps on `ln F(1 - u) = ln q` taken in `u = 1 - x`, for a
/// lower-tail solution `x > 1/2` whose own ulp is too coarse.
fn polish_complement(p: BetaParams, ln_q: f64, x: f64) -> UnitPoint {
    if x <= 0.5 {
        return UnitPoint {
            value: x,
            complement: 1.0 - x,
        };
    }
    let ln_b = log_beta(p);
    let at = |u: f64| UnitPoint {
        value: 1.0 - u,
        complement: u,
    };
    let residual = |u: f64| tails(p, at(u)).ln_lower - ln_q;
    let mut u = 1.0 - x;
    let mut h = residual(u);
    for _ in 0..8 {
        if h == 0.0 {
            break;
        }
        // d/du ln F(1 - u) = -f(1 - u) / F(1 - u)
        let ln_density = (p.a - 1.0) * (-u).ln_1p() + (p.b - 1.0) * u.ln() - ln_b;
        let next = u + h / (ln_density - (h + ln_q)).exp();
        if !(next > 0.0 && next < 1.0) {
            break;
        }
        let h_next = residual(next);
        if h_next.abs() >= h.abs() {
            break;
        }
        u = next;
        h = h_next;
    }
    at(u)
}

/// `F⁻¹_{a,b}(e^{ln_q})` for `ln_q ≤ 0`; handles targets that underflow.
pub fn reg_inc_beta_inv_ln(params: BetaParams, ln_q: f64) -> Result<f64> {
    if ln_q.is_nan() || ln_q > 0.0 {
        return Err(Error::Domain(format!("ln q must be ≤ 0, got {ln_q}")));
    }
    if ln_q == f64::NEG_INFINITY {
        return Ok(0.0);
    }
    if ln_q == 0.0 {
        return Ok(1.0);
    }
    if ln_q > -std::f64::consts::LN_2 {
        return reg_inc_beta_inv(params, ln_q.exp());
    }
    Ok(solve_lower(params, ln_q))
}

/// Safeguarded Newton iteration on `ln F(x) - ln q`, for `q ≤ 1/2`.
///
/// Newton steps that leave the current bracket, or fail to halve it, are
/// replaced by bisection (geometric while the bracket spans decades).
fn solve_lower(p: BetaParams, ln_q: f64) -> f64 {
    let ln_b = log_beta(p);
    let mut lo = 0.0_f64;
    let mut hi = 1.0_f64;

    // Leading term of the small-z expansion; clamp into the open interval.
    let mut x = ((p.a.ln() + ln_q + ln_b) / p.a).exp();
    if !(x > 0.0 && x < 1.0) {
        x = 0.5;
    }

    let mut stalls = 0;
    let mut last_width = hi - lo;
    for _ in 0..400 {
        let t = tails(
            p,
            UnitPoint {
                value: x,
                complement: 1.0 - x,
            },
        );
        let h = t.ln_lower - ln_q;
        if h.abs() <= 1e-15 {
            return x;
        }
        if h > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let width = hi - lo;
        if width <= 1e-16 * hi || width <= f64::MIN_POSITIVE {
            return 0.5 * (lo + hi);
        }
        if width > 0.5 * last_width {
            stalls += 1;
        } else {
            stalls = 0;
        }
        last_width = width;

        // d ln F / dx = f(x) / F(x)
        let ln_density = (p.a - 1.0) * x.ln() + (p.b - 1.0) * (-x).ln_1p() - ln_b;
        let newton = x - h / (ln_density - t.ln_lower).exp();

        let next = if newton.is_finite() && newton > lo && newton < hi && stalls < 3 {
            newton
        } else {
            stalls = 0;
            if lo > 0.0 && hi / lo > 16.0 {
                (lo * hi).sqrt()
            } else if lo == 0.0 && hi < 1e-3 {
                hi * 1e-3
            } else {
                0.5 * (lo + hi)
            }
        };
        if (next - x).abs() <= 4.0 * f64::EPSILON * x {
            return next;
        }
        x = next;
    }
    x
}

/// Partial sum of the small-`z` expansion of `F⁻¹_{a,b}(z)`:
///
/// `w + (b-1)/(a+1) w² + (b-1)(a² + 3ab - a + 5b - 4) / (2 (a+1)² (a+2)) w³`,
/// with `w = (a z B(a, b))^{1/a}`.
pub fn inv_beta_series(params: BetaParams, z: f64, n_terms: usize) -> Result<f64> {
    if !(z > 0.0 && z < 1.0) {
        return Err(Error::Domain(format!("z must lie in (0, 1), got {z}")));
    }
    if !(1..=3).contains(&n_terms) {
        return Err(Error::Domain(format!(
            "series supports 1 to 3 terms, got {n_terms}"
        )));
    }
    let (a, b) = (params.a, params.b);
    let w = ((a.ln() + z.ln() + log_beta(params)) / a).exp();
    let coefficients = [
        1.0,
        (b - 1.0) / (a + 1.0),
        (b - 1.0) * (a * a + 3.0 * a * b - a + 5.0 * b - 4.0)
            / (2.0 * (a + 1.0).powi(2) * (a + 2.0)),
    ];
    Ok(coefficients
        .iter()
        .take(n_terms)
        .enumerate()
        .map(|(i, c)| c * w.powi(i as i32 + 1))
        .sum())
}
