//! Schobel-Zhu model: Ornstein-Uhlenbeck volatility
//! `dV = kappa (theta - V) dt + gamma dW`, variance `V^2`.
//!
//! All parameters are in volatility units and are never squared implicitly.

use crate::error::{PricingError, Result};
use crate::framework::MomentKernels;
use crate::heston::check_kappa_floor;
use crate::numerics::{dd_phi1, geometric_decay_sum, phi1};
use crate::params::{SchobelZhuParams, SwapSpec};

/// Moments of the Gaussian OU volatility.
#[derive(Debug, Clone, Copy)]
pub struct OuMoments {
    pub params: SchobelZhuParams,
}

impl OuMoments {
    pub fn new(params: SchobelZhuParams) -> Self {
        OuMoments { params }
    }

    /// `e_s = E[V_s]`.
    pub fn mean(&self, s: f64) -> f64 {
        let p = &self.params;
        p.theta + (p.v0 - p.theta) * (-p.kappa * s).exp()
    }

    /// `v(s) = Var(V_s)`.
    pub fn var(&self, s: f64) -> f64 {
        let p = &self.params;
        p.gamma * p.gamma / (2.0 * p.kappa) * -(-2.0 * p.kappa * s).exp_m1()
    }

    /// `E[V_s^k]` for `k` in 1..=4.
    pub fn raw(&self, k: u32, s: f64) -> f64 {
        let (e, v) = (self.mean(s), self.var(s));
        match k {
            1 => e,
            2 => e * e + v,
            3 => e * e * e + 3.0 * e * v,
            4 => e.powi(4) + 6.0 * e * e * v + 3.0 * v * v,
            _ => panic!("raw moment of order {k} is not provided"),
        }
    }

    /// `E[V_s^i V_u^j]` for `s <= u` and `i, j` in 1..=2.
    pub fn ordered(&self, i: u32, j: u32, s: f64, u: f64) -> f64 {
        let p = &self.params;
        let w = (-p.kappa * (u - s)).exp();
        let g = p.gamma * p.gamma / (2.0 * p.kappa);
        let c = p.theta * p.theta * (1.0 - w) * (1.0 - w) + g * (1.0 - w * w);
        let m = |k| self.raw(k, s);
        match (i, j) {
            (1, 1) => w * m(2) + p.theta * (1.0 - w) * m(1),
            (2, 1) => w * m(3) + p.theta * (1.0 - w) * m(2),
            (1, 2) => w * w * m(3) + 2.0 * p.theta * w * (1.0 - w) * m(2) + c * m(1),
            (2, 2) => w * w * m(4) + 2.0 * p.theta * w * (1.0 - w) * m(3) + c * m(2),
            _ => panic!("cross moment ({i}, {j}) is not provided"),
        }
    }

    /// `E[V_s^i V_u^j]` for any order of `s` and `u`.
    pub fn cross(&self, i: u32, j: u32, s: f64, u: f64) -> f64 {
        if s <= u {
            self.ordered(i, j, s, u)
        } else {
            self.ordered(j, i, u, s)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OuMomentValues {
    /// `E[V_s^k]`, `k = 1..4`
    pub raw: [f64; 4],
    pub v_v: f64,
    pub v2_v2: f64,
    pub v_v2: f64,
    pub v2_v: f64,
}

/// Single moments at `s` and cross moments of `(V_s, V_u)`, `s <= u`.
pub fn ou_moments(p: &SchobelZhuParams, s: f64, u: f64) -> Result<OuMomentValues> {
    if s > u || s < 0.0 {
        return Err(PricingError::OrderViolation { earlier: s, later: u });
    }
    let m = OuMoments::new(*p);
    Ok(OuMomentValues {
        raw: [m.raw(1, s), m.raw(2, s), m.raw(3, s), m.raw(4, s)],
        v_v: m.ordered(1, 1, s, u),
        v2_v2: m.ordered(2, 2, s, u),
        v_v2: m.ordered(1, 2, s, u),
        v2_v: m.ordered(2, 1, s, u),
    })
}

/// `(1/T) int_0^T E[V_s^2] ds`.
pub fn sz_continuous_strike(p: &SchobelZhuParams, maturity: f64) -> Result<f64> {
    check_kappa_floor(p.kappa, maturity)?;
    let g = p.gamma * p.gamma / (2.0 * p.kappa);
    let d0 = p.v0 - p.theta;
    let kt = p.kappa * maturity;
    Ok(g + p.theta * p.theta + 2.0 * p.theta * d0 * phi1(-kt) + (d0 * d0 - g) * phi1(-2.0 * kt))
}

/// Polynomial in `z = e^{-kappa s}` of degree at most 4.
type Poly = [f64; 5];

fn mul(a: &Poly, b: &Poly) -> Poly {
    let mut out = [0.0; 5];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            if *x != 0.0 && *y != 0.0 {
                out[i + j] += x * y;
            }
        }
    }
    out
}

fn comb(terms: &[(f64, &Poly)]) -> Poly {
    let mut out = [0.0; 5];
    for (c, p) in terms {
        for (o, x) in out.iter_mut().zip(p.iter()) {
            *o += c * x;
        }
    }
    out
}

/// `sum c[a][b] z^a w^b` with `z = e^{-kappa s}` at the earlier time and
/// `w = e^{-kappa (u - s)}`.
#[derive(Debug, Clone, Copy, Default)]
struct Table([[f64; 5]; 5]);

impl Table {
    fn from_columns(cols: &[&Poly]) -> Self {
        let mut t = Table::default();
        for (b, col) in cols.iter().enumerate() {
            for a in 0..5 {
                t.0[a][b] = col[a];
            }
        }
        t
    }

    /// A moment taken at the later time: `P(z w)`.
    fn late(p: &Poly) -> Self {
        let mut t = Table::default();
        for a in 0..5 {
            t.0[a][a] = p[a];
        }
        t
    }

    fn early(p: &Poly) -> Self {
        Table::from_columns(&[p])
    }

    fn constant(c: f64) -> Self {
        let mut t = Table::default();
        t.0[0][0] = c;
        t
    }

    fn comb(terms: &[(f64, &Table)]) -> Self {
        let mut t = Table::default();
        for (c, x) in terms {
            for a in 0..5 {
                for b in 0..5 {
                    t.0[a][b] += c * x.0[a][b];
                }
            }
        }
        t
    }

    fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..5).flat_map(move |a| (0..5).map(move |b| (a, b, self.0[a][b]))).filter(|e| e.2 != 0.0)
    }
}

/// Per-interval coefficients of `z_t^a`, `t` the interval start.
struct Interval {
    kd: f64,
    delta: f64,
}

impl Interval {
    fn decay(&self, a: usize) -> f64 {
        -self.kd * a as f64
    }

    /// `int_t^{t+D} P(z_s) ds`.
    fn single(&self, p: &Poly) -> Poly {
        let mut out = [0.0; 5];
        for a in 0..5 {
            out[a] = p[a] * self.delta * phi1(self.decay(a));
        }
        out
    }

    /// `int int_{t <= s <= u <= t+D} X(s, u) ds du`.
    fn triangle(&self, x: &Table) -> Poly {
        let mut out = [0.0; 5];
        for (a, b, c) in x.entries() {
            out[a] += c * self.delta * self.delta * dd_phi1(self.decay(a), self.decay(b));
        }
        out
    }

    /// `int_t^{t+D} X(s, t+D) ds`.
    fn to_end(&self, x: &Table) -> Poly {
        let mut out = [0.0; 5];
        for (a, b, c) in x.entries() {
            out[a] += c * self.delta * self.decay(b).exp() * phi1(self.decay(a) - self.decay(b));
        }
        out
    }

    /// `int_t^{t+D} X(t, s) ds`.
    fn from_start(&self, x: &Table) -> Poly {
        let mut out = [0.0; 5];
        for (a, b, c) in x.entries() {
            out[a] += c * self.delta * phi1(self.decay(b));
        }
        out
    }

    /// `X(t, t+D)`.
    fn point(&self, x: &Table) -> Poly {
        let mut out = [0.0; 5];
        for (a, b, c) in x.entries() {
            out[a] += c * self.decay(b).exp();
        }
        out
    }

    /// `P(z_{t+D}) - P(z_t)`.
    fn increment(&self, p: &Poly) -> Poly {
        let mut out = [0.0; 5];
        for a in 0..5 {
            out[a] = p[a] * self.decay(a).exp_m1();
        }
        out
    }
}

/// Discrete strike on the grid of `spec`.
///
/// Every kernel is a combination of `e^{-kappa(a s + b (u - s))}`, so each
/// interval contributes `sum_a C_a e^{-kappa a t_i}` with `C_a` independent
/// of `i`. The sum over intervals is geometric. Relative precision degrades
/// like `eps / gamma^2` as `gamma -> 0`; `gamma = 0` is evaluated directly.
pub fn sz_discrete_strike(p: &SchobelZhuParams, spec: &SwapSpec) -> Result<f64> {
    check_kappa_floor(p.kappa, spec.maturity)?;
    check_kappa_floor(p.kappa, spec.delta())?;
    let (t, r, delta) = (spec.maturity, spec.rate, spec.delta());
    if p.gamma == 0.0 {
        return deterministic(p, spec);
    }
    let SchobelZhuParams { kappa: k, theta: th, gamma: gm, rho, v0 } = *p;
    let g = gm * gm / (2.0 * k);
    let e: Poly = [th, v0 - th, 0.0, 0.0, 0.0];
    let v: Poly = [g, 0.0, -g, 0.0, 0.0];
    let e2 = mul(&e, &e);
    let m1 = e;
    let m2 = comb(&[(1.0, &e2), (1.0, &v)]);
    let m3 = comb(&[(1.0, &mul(&e2, &e)), (3.0, &mul(&e, &v))]);
    let m4 = comb(&[(1.0, &mul(&e2, &e2)), (6.0, &mul(&e2, &v)), (3.0, &mul(&v, &v))]);

    let x11 = Table::from_columns(&[&comb(&[(th, &m1)]), &comb(&[(1.0, &m2), (-th, &m1)])]);
    let x21 = Table::from_columns(&[&comb(&[(th, &m2)]), &comb(&[(1.0, &m3), (-th, &m2)])]);
    let x12 = Table::from_columns(&[
        &comb(&[(th * th + g, &m1)]),
        &comb(&[(2.0 * th, &m2), (-2.0 * th * th, &m1)]),
        &comb(&[(1.0, &m3), (-2.0 * th, &m2), (th * th - g, &m1)]),
    ]);
    let x22 = Table::from_columns(&[
        &comb(&[(th * th + g, &m2)]),
        &comb(&[(2.0 * th, &m3), (-2.0 * th * th, &m2)]),
        &comb(&[(1.0, &m4), (-2.0 * th, &m3), (th * th - g, &m2)]),
    ]);

    // h(v) = A v - B v^2 + C
    let (ca, cb, cc) = (k * th / gm, k / gm, gm / 2.0);
    let (m1e, m1l) = (Table::early(&m1), Table::late(&m1));
    let (m2e, m2l) = (Table::early(&m2), Table::late(&m2));
    let hh = Table::comb(&[
        (ca * ca, &x11),
        (-ca * cb, &x12),
        (-ca * cb, &x21),
        (ca * cc, &m1e),
        (ca * cc, &m1l),
        (cb * cb, &x22),
        (-cb * cc, &m2e),
        (-cb * cc, &m2l),
        (1.0, &Table::constant(cc * cc)),
    ]);
    let h_early = Table::comb(&[(ca, &x12), (-cb, &x22), (cc, &m2l)]);
    let h_late = Table::comb(&[(ca, &x21), (-cb, &x22), (cc, &m2e)]);

    let iv = Interval { kd: k * delta, delta };
    let single = iv.single(&m2);
    let sq2 = iv.triangle(&x22);
    let sq3 = iv.triangle(&hh);
    let tri4 = comb(&[(1.0, &iv.triangle(&h_early)), (1.0, &iv.triangle(&h_late))]);
    let lever = comb(&[
        (2.0 * rho * ca, &iv.to_end(&x12)),
        (-2.0 * rho * ca, &iv.from_start(&x21)),
        (1.0 - 2.0 * rho * cb, &iv.to_end(&x22)),
        (-(1.0 - 2.0 * rho * cb), &iv.from_start(&x22)),
        (2.0 * rho * cc * delta, &iv.increment(&m2)),
    ]);
    let inc = comb(&[(1.0, &iv.increment(&m4)), (2.0, &m4), (-2.0, &iv.point(&x22))]);
    let coeffs = comb(&[
        (1.0 - rho * rho - r * delta, &single),
        (0.5, &sq2),
        (2.0 * rho * rho, &sq3),
        (rho, &tri4),
        (-rho / (2.0 * gm), &lever),
        (rho * rho / (4.0 * gm * gm), &inc),
    ]);
    let mut total = spec.periods as f64 * r * r * delta * delta;
    for (a, c) in coeffs.iter().enumerate() {
        total += c * geometric_decay_sum(k * delta * a as f64, spec.periods);
    }
    let value = total / t;
    if value.is_finite() {
        Ok(value)
    } else {
        Err(PricingError::NonFinite("schobel-zhu discrete strike"))
    }
}

fn deterministic(p: &SchobelZhuParams, spec: &SwapSpec) -> Result<f64> {
    let (r, delta) = (spec.rate, spec.delta());
    let d0 = p.v0 - p.theta;
    let x = p.kappa * delta;
    let total: f64 = (0..spec.periods)
        .map(|i| {
            let z = (-p.kappa * spec.time(i)).exp();
            let integral =
                delta * (p.theta * p.theta + 2.0 * p.theta * d0 * z * phi1(-x) + d0 * d0 * z * z * phi1(-2.0 * x));
            (r * delta - 0.5 * integral).powi(2) + integral
        })
        .sum();
    Ok(total / spec.maturity)
}

/// Moment kernels evaluated pointwise from [`OuMoments`], with
/// `f(v) = v^2 / (2 gamma)` and `h(v) = A v - B v^2 + C`,
/// `A = kappa theta / gamma`, `B = kappa / gamma`, `C = gamma / 2`.
#[derive(Debug, Clone, Copy)]
pub struct SzKernels {
    moments: OuMoments,
    a: f64,
    b: f64,
    c: f64,
}

impl SzKernels {
    pub fn new(params: SchobelZhuParams) -> Self {
        SzKernels {
            moments: OuMoments::new(params),
            a: params.kappa * params.theta / params.gamma,
            b: params.kappa / params.gamma,
            c: params.gamma / 2.0,
        }
    }
}

impl MomentKernels for SzKernels {
    fn rho(&self) -> f64 {
        self.moments.params.rho
    }

    fn m1(&self, s: f64) -> f64 {
        self.moments.raw(2, s)
    }

    fn m2(&self, s: f64, u: f64) -> f64 {
        self.moments.cross(2, 2, s, u)
    }

    fn m3(&self, s: f64, u: f64) -> f64 {
        let m = &self.moments;
        let (a, b, c) = (self.a, self.b, self.c);
        a * a * m.cross(1, 1, s, u) - a * b * (m.cross(1, 2, s, u) + m.cross(2, 1, s, u))
            + a * c * (m.raw(1, s) + m.raw(1, u))
            + b * b * m.cross(2, 2, s, u)
            - b * c * (m.raw(2, s) + m.raw(2, u))
            + c * c
    }

    fn m4(&self, s: f64, u: f64) -> f64 {
        let m = &self.moments;
        self.a * m.cross(1, 2, s, u) - self.b * m.cross(2, 2, s, u) + self.c * m.raw(2, u)
    }

    fn m5(&self, t: f64, delta: f64, s: f64) -> f64 {
        let m = &self.moments;
        let p = &m.params;
        let e = t + delta;
        (2.0 * p.rho * self.a * (m.ordered(1, 2, s, e) - m.ordered(2, 1, t, s))
            + (1.0 - 2.0 * p.rho * self.b) * (m.ordered(2, 2, s, e) - m.ordered(2, 2, t, s))
            + 2.0 * p.rho * self.c * (m.raw(2, e) - m.raw(2, t)))
            / (2.0 * p.gamma)
    }

    fn f_increment_sq(&self, t: f64, delta: f64) -> f64 {
        let m = &self.moments;
        let g = m.params.gamma;
        let e = t + delta;
        (m.raw(4, e) + m.raw(4, t) - 2.0 * m.ordered(2, 2, t, e)) / (4.0 * g * g)
    }
}
