//! Stable exponential primitives and a bracketing root finder.

use std::sync::OnceLock;

use crate::error::{PricingError, Result};
use crate::quadrature::GaussLegendre;

/// `(e^x - 1) / x`, equal to 1 at the origin.
pub fn phi1(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 + 0.5 * x
    } else {
        x.exp_m1() / x
    }
}

/// `(1 - e^{-x}) / x`, the mean of `e^{-s}` over `[0, x]` scaled by 1/x.
pub fn phi1_neg(x: f64) -> f64 {
    phi1(-x)
}

/// `tanh(x/2) / x`, equal to 1/2 at the origin.
pub fn half_tanh_ratio(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        0.5 - x2 / 24.0 + x2 * x2 / 240.0
    } else {
        (0.5 * x).tanh() / x
    }
}

fn unit_rule() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(64))
}

/// `int_0^1 t^k e^{m t} dt`.
fn moment_exp(k: u32, m: f64) -> f64 {
    if m.abs() <= 40.0 {
        unit_rule().integrate(0.0, 1.0, |t| t.powi(k as i32) * (m * t).exp())
    } else {
        // forward recurrence is stable once |m| exceeds k
        let em = m.exp();
        let mut acc = phi1(m);
        for j in 1..=k {
            acc = (em - j as f64 * acc) / m;
        }
        acc
    }
}

/// Divided difference `(phi1(x) - phi1(y)) / (x - y)`, continuous across
/// `x = y` where it equals `phi1'(x)`.
///
/// Also equals `int_0^1 int_0^t e^{(x - y) s + y t} ds dt` which is how the
/// ordered double integral of an exponential reduces to it.
pub fn dd_phi1(x: f64, y: f64) -> f64 {
    let h = 0.5 * (x - y);
    if h.abs() > 0.25 {
        return (phi1(x) - phi1(y)) / (x - y);
    }
    let m = 0.5 * (x + y);
    if m.abs() <= 40.0 {
        // positive integrand, so no cancellation
        return unit_rule().integrate(0.0, 1.0, |t| t * (y * t).exp() * phi1((x - y) * t));
    }
    // odd Taylor terms of phi1 about the midpoint
    let mut sum = 0.0;
    let mut hp = 1.0;
    let mut fact = 1.0;
    for k in (1..=19u32).step_by(2) {
        fact *= k as f64 * if k > 1 { (k - 1) as f64 } else { 1.0 };
        sum += moment_exp(k, m) * hp / fact;
        hp *= h * h;
    }
    sum
}

/// `sum_{i=0}^{n-1} e^{-c i}` for `c >= 0`.
pub fn geometric_decay_sum(c: f64, n: u32) -> f64 {
    if c * n as f64 <= 1e-12 {
        return n as f64;
    }
    (-c * n as f64).exp_m1() / (-c).exp_m1()
}

/// `I_{nu+1}(z) / I_nu(z)` for `nu > -1`, `z >= 0`.
pub fn bessel_ratio(nu: f64, z: f64) -> f64 {
    if z == 0.0 {
        return 0.0;
    }
    if z >= 20.0 && z >= 0.5 * nu * nu {
        if let Some(r) = hankel_ratio(nu, z) {
            return r;
        }
    }
    if z <= 30.0 {
        return ascending_ratio(nu, z);
    }
    // Lentz evaluation of 1 / (b_1 + 1 / (b_2 + ...)), b_k = 2 (nu + k) / z
    const TINY: f64 = 1e-300;
    let (mut f, mut c, mut d) = (TINY, TINY, 0.0);
    let mut k = 1.0;
    loop {
        let b = 2.0 * (nu + k) / z;
        d += b;
        if d == 0.0 {
            d = TINY;
        }
        c = b + 1.0 / c;
        if c == 0.0 {
            c = TINY;
        }
        d = 1.0 / d;
        let step = c * d;
        f *= step;
        if (step - 1.0).abs() < 1e-16 || k > 1e6 {
            return f;
        }
        k += 1.0;
    }
}

/// Ratio of the ascending series of `I_{nu+1}` and `I_nu`.
fn ascending_ratio(nu: f64, z: f64) -> f64 {
    let q = 0.25 * z * z;
    let (mut term, mut sum, mut sum_next) = (1.0f64, 1.0f64, 1.0 / (nu + 1.0));
    let mut k = 1.0;
    loop {
        term *= q / (k * (nu + k));
        sum += term;
        sum_next += term / (nu + k + 1.0);
        if term < 1e-17 * sum {
            return 0.5 * z * sum_next / sum;
        }
        k += 1.0;
    }
}

/// Ratio of the large-argument series of `e^{-z} sqrt(2 pi z) I_nu(z)` at
/// `nu + 1` and `nu`; `None` when the series stops shrinking before full
/// precision.
fn hankel_ratio(nu: f64, z: f64) -> Option<f64> {
    let (mu_top, mu_bot) = (4.0 * (nu + 1.0) * (nu + 1.0), 4.0 * nu * nu);
    let step = -0.125 / z;
    let (mut top, mut bot) = (1.0f64, 1.0f64);
    let (mut sum_top, mut sum_bot) = (1.0f64, 1.0f64);
    for k in 1..60 {
        let odd = (2 * k - 1) as f64;
        let scale = step / k as f64;
        let next_top = top * (mu_top - odd * odd) * scale;
        let next_bot = bot * (mu_bot - odd * odd) * scale;
        if next_top.abs() > top.abs() || next_bot.abs() > bot.abs() {
            return None;
        }
        top = next_top;
        bot = next_bot;
        sum_top += top;
        sum_bot += bot;
        if top.abs() < 1e-17 && bot.abs() < 1e-17 {
            return Some(sum_top / sum_bot);
        }
    }
    None
}

/// Brent's method on a bracketing interval.
pub fn brent<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, xtol: f64) -> Result<f64> {
    let (mut a, mut b) = (lo, hi);
    let (mut fa, mut fb) = (f(a), f(b));
    if !(fa.is_finite() && fb.is_finite()) || fa * fb > 0.0 {
        return Err(PricingError::RootNotBracketed { lo, hi });
    }
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..200 {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = d;
            }
        } else {
            d = m;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = f(b);
        if !fb.is_finite() {
            return Err(PricingError::NonFinite("root finder"));
        }
    }
    Ok(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn phi1_limits() {
        assert_eq!(phi1(0.0), 1.0);
        assert_relative_eq!(phi1(1e-9), 1.0 + 5e-10, max_relative = 1e-15);
        assert_relative_eq!(phi1(2.0), (2f64.exp() - 1.0) / 2.0, max_relative = 1e-15);
    }

    #[test]
    fn dd_at_coincidence_is_derivative() {
        // phi1'(0) = 1/2, phi1'(x) = (x e^x - e^x + 1) / x^2
        assert_relative_eq!(dd_phi1(0.0, 0.0), 0.5, max_relative = 1e-15);
        let x: f64 = 1.3;
        let d = (x * x.exp() - x.exp() + 1.0) / (x * x);
        assert_relative_eq!(dd_phi1(x, x), d, max_relative = 1e-14);
        let x: f64 = -60.0;
        let d = (x * x.exp() - x.exp() + 1.0) / (x * x);
        assert_relative_eq!(dd_phi1(x, x), d, max_relative = 1e-13);
        let x: f64 = 55.0;
        let d = (x * x.exp() - x.exp() + 1.0) / (x * x);
        assert_relative_eq!(dd_phi1(x + 1e-3, x), dd_phi1(x, x), max_relative = 1e-3);
        assert_relative_eq!(dd_phi1(x, x), d, max_relative = 1e-13);
    }

    #[test]
    fn dd_equals_ordered_double_integral() {
        let (a, b) = (-0.7, 2.1);
        let rule = GaussLegendre::new(40);
        let direct = rule.integrate(0.0, 1.0, |t| rule.integrate(0.0, t, |s| (a * s + b * t).exp()));
        assert_relative_eq!(dd_phi1(a + b, b), direct, max_relative = 1e-14);
    }

    #[test]
    fn geometric_sum() {
        let direct: f64 = (0..37).map(|i| (-0.3 * i as f64).exp()).sum();
        assert_relative_eq!(geometric_decay_sum(0.3, 37), direct, max_relative = 1e-14);
        assert_eq!(geometric_decay_sum(0.0, 5), 5.0);
    }

    #[test]
    fn brent_finds_cubic_root() {
        let root = brent(|x| x * x * x - 2.0, 0.0, 3.0, 1e-15).unwrap();
        assert_relative_eq!(root, 2f64.cbrt(), max_relative = 1e-14);
        assert!(brent(|x| x * x + 1.0, -1.0, 1.0, 1e-12).is_err());
    }

    #[test]
    fn bessel_ratio_reference_values() {
        let cases = [
            (-0.9, 0.001, 0.0049999886363906937905),
            (-0.64, 3.0, 1.0566547711451504142),
            (0.0, 10000.0, 0.99994999874987498046),
            (1.45, 0.5, 0.10129484475653757905),
            (1.45, 100.0, 0.98059356096170241981),
            (10.0, 40.0, 0.76896075288897569159),
            (200.0, 800.0, 0.78018804515194218379),
        ];
        for (nu, z, r) in cases {
            assert_relative_eq!(bessel_ratio(nu, z), r, max_relative = 1e-14);
        }
        assert_eq!(bessel_ratio(0.3, 0.0), 0.0);
    }

    proptest! {
        #[test]
        fn dd_matches_direct_quotient(x in -80.0f64..80.0, h in 1e-2f64..0.5, flip in any::<bool>()) {
            let h = if flip { -h } else { h };
            let series = dd_phi1(x + h, x);
            let direct = (phi1(x + h) - phi1(x)) / h;
            prop_assert!((series - direct).abs() <= 1e-10 * series.abs());
        }

        #[test]
        fn dd_symmetric(x in -50.0f64..50.0, y in -50.0f64..50.0) {
            let a = dd_phi1(x, y);
            let b = dd_phi1(y, x);
            prop_assert!((a - b).abs() <= 1e-12 * a.abs());
        }

        #[test]
        fn bessel_ratio_recurrence(nu in -0.95f64..30.0, z in 1e-3f64..2e3) {
            // I_nu - I_{nu+2} = 2 (nu + 1) / z I_{nu+1}
            let lhs = 1.0 / bessel_ratio(nu, z) - bessel_ratio(nu + 1.0, z);
            let rhs = 2.0 * (nu + 1.0) / z;
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 / bessel_ratio(nu, z)));
        }

        #[test]
        fn half_tanh_smooth(x in -1e-3f64..1e-3) {
            let direct = if x == 0.0 { 0.5 } else { (0.5 * x).tanh() / x };
            prop_assert!((half_tanh_ratio(x) - direct).abs() < 1e-12);
        }
    }
}
