//! Isotherm models and the scalar functions of the gas concentration `c`
//! derived from them.
//!
//! With `c = c₁`, `c₂ = 1 − c` and `qᵢ(c) = qᵢ*(c, 1 − c)` the system only
//! needs
//!
//! ```text
//! h(c) = q₁ + q₂            I(c) = c + q₁
//! f(c) = q₁ − c·h           H(c) = 1 + q₁′ − c·h′
//! a(c) = H − h = 1 + f′     g′ = −h′/H,  g(0) = 0,  G = exp(g)
//! A±(c) = ∫₀ᶜ a±(ξ) dξ      a⁺ = max(a, 0),  a⁻ = −min(a, 0)
//! ```
//!
//! Every closed-form isotherm here is a ratio of a linear numerator and a
//! quadratic denominator in `c`, so value, first and second derivative come
//! from one small recurrence. `A±` are evaluated exactly from the antiderivative
//! `c + f(c)` of `a`, split at the sign changes of `a`; `g` is tabulated once by
//! adaptive quadrature and interpolated with monotone cubic Hermite pieces.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::IsothermError;
use crate::numeric::{antiderivative_table, bisect, HermiteTable, QUAD_TOL};

/// Fraction of the pole location used as the upper end of the validity interval.
pub const POLE_MARGIN: f64 = 0.99;
/// Node count of the cached `g` table.
pub const TABLE_NODES: usize = 4096;
const ROOT_SCAN: usize = 8192;
const DOMAIN_SLACK: f64 = 1e-12;

/// Value with first and second derivative in `c`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Jet {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
}

/// Equilibrium relation for the two species, restricted to `c₂ = 1 − c`.
///
/// Implementors return analytic derivatives; [`DerivedFunctions`] builds
/// everything else on top.
pub trait Isotherm: Send + Sync + fmt::Debug {
    fn q1(&self, c: f64) -> Jet;
    fn q2(&self, c: f64) -> Jet;
    /// Upper end of the validity interval `[0, c_max]`.
    fn c_max(&self) -> f64;
    /// Location of the nearest pole, when one lies in `(0, 1]`.
    fn pole(&self) -> Option<f64> {
        None
    }
}

/// Printed or standard BET denominator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum BetForm {
    /// `Q·K·c / ((1 − c/cs)(1 − c/cs + K·c))`.
    #[default]
    Standard,
    /// `Q·K·c / ((1 + (K − 1/cs)·c)(1 − 1/cs))`; negative for `cs < 1`.
    AsPrinted,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum IsothermModel {
    /// One adsorbable species against an inert carrier: `q₁* = K₁c/(1 − c)`, `q₂* = 0`.
    InertRational { k1: f64 },
    /// BET isotherm for the active species, inert carrier.
    Bet { q: f64, k: f64, cs: f64, form: BetForm },
    /// Competitive binary Langmuir: `qᵢ* = QᵢKᵢcᵢ / (1 + K₁c₁ + K₂c₂)`.
    BinaryLangmuir { q1: f64, k1: f64, q2: f64, k2: f64 },
}

/// `(n₀ + n₁c) / (d₀ + d₁c + d₂c²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Rational {
    num: [f64; 2],
    den: [f64; 3],
}

impl Rational {
    const ZERO: Rational = Rational { num: [0.0, 0.0], den: [1.0, 0.0, 0.0] };

    fn jet(&self, c: f64) -> Jet {
        let [n0, n1] = self.num;
        let [d0, d1, d2] = self.den;
        let d = d0 + c * (d1 + c * d2);
        let dd = d1 + 2.0 * d2 * c;
        let ddd = 2.0 * d2;
        // q·D = n  ⇒  q′D + qD′ = n′,  q″D + 2q′D′ + qD″ = 0
        let value = (n0 + n1 * c) / d;
        let d1q = (n1 - value * dd) / d;
        let d2q = (-2.0 * d1q * dd - value * ddd) / d;
        Jet { value, d1: d1q, d2: d2q }
    }

    /// Smallest root of the denominator in `(0, 1]`.
    fn pole(&self) -> Option<f64> {
        let [d0, d1, d2] = self.den;
        let mut roots = Vec::new();
        if d2.abs() < 1e-300 {
            if d1 != 0.0 {
                roots.push(-d0 / d1);
            }
        } else {
            let disc = d1 * d1 - 4.0 * d2 * d0;
            if disc >= 0.0 {
                let s = disc.sqrt();
                let q = -0.5 * (d1 + d1.signum() * s);
                if q != 0.0 {
                    roots.push(q / d2);
                    roots.push(d0 / q);
                }
            }
        }
        roots
            .into_iter()
            .filter(|r| *r > 0.0 && *r <= 1.0)
            .fold(None, |acc: Option<f64>, r| Some(acc.map_or(r, |a| a.min(r))))
    }
}

impl IsothermModel {
    pub fn validate(&self) -> Result<(), IsothermError> {
        fn positive(name: &'static str, value: f64) -> Result<(), IsothermError> {
            if value.is_finite() && value > 0.0 {
                Ok(())
            } else {
                Err(IsothermError::InvalidParameter { name, value, reason: "must be positive" })
            }
        }
        match *self {
            IsothermModel::InertRational { k1 } => positive("K1", k1),
            IsothermModel::Bet { q, k, cs, .. } => {
                positive("Q", q)?;
                positive("K", k)?;
                if !(cs > 0.0 && cs < 1.0) {
                    return Err(IsothermError::InvalidParameter {
                        name: "cs",
                        value: cs,
                        reason: "must lie in (0, 1)",
                    });
                }
                Ok(())
            }
            IsothermModel::BinaryLangmuir { q1, k1, q2, k2 } => {
                positive("Q1", q1)?;
                positive("K1", k1)?;
                positive("Q2", q2)?;
                positive("K2", k2)
            }
        }
    }

    fn rationals(&self) -> (Rational, Rational) {
        match *self {
            IsothermModel::InertRational { k1 } => (Rational { num: [0.0, k1], den: [1.0, -1.0, 0.0] }, Rational::ZERO),
            IsothermModel::Bet { q, k, cs, form } => {
                let inv = 1.0 / cs;
                let beta = k - inv;
                let den = match form {
                    // (1 − c/cs)(1 + (K − 1/cs)c)
                    BetForm::Standard => [1.0, beta - inv, -inv * beta],
                    // (1 + (K − 1/cs)c)(1 − 1/cs)
                    BetForm::AsPrinted => [1.0 - inv, beta * (1.0 - inv), 0.0],
                };
                (Rational { num: [0.0, q * k], den }, Rational::ZERO)
            }
            IsothermModel::BinaryLangmuir { q1, k1, q2, k2 } => {
                let den = [1.0 + k2, k1 - k2, 0.0];
                (Rational { num: [0.0, q1 * k1], den }, Rational { num: [q2 * k2, -q2 * k2], den })
            }
        }
    }

    /// Short human-readable label.
    pub fn label(&self) -> String {
        match *self {
            IsothermModel::InertRational { k1 } => format!("inert-rational(K1={k1})"),
            IsothermModel::Bet { q, k, cs, form } => format!("bet-{form:?}(Q={q}, K={k}, cs={cs})").to_lowercase(),
            IsothermModel::BinaryLangmuir { q1, k1, q2, k2 } => {
                format!("binary-langmuir(Q1={q1}, K1={k1}, Q2={q2}, K2={k2})")
            }
        }
    }
}

impl Isotherm for IsothermModel {
    fn q1(&self, c: f64) -> Jet {
        self.rationals().0.jet(c)
    }

    fn q2(&self, c: f64) -> Jet {
        self.rationals().1.jet(c)
    }

    fn c_max(&self) -> f64 {
        self.pole().map_or(1.0, |p| POLE_MARGIN * p)
    }

    fn pole(&self) -> Option<f64> {
        let (r1, r2) = self.rationals();
        match (r1.pole(), r2.pole()) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        }
    }
}

/// Isotherm with its rational pieces resolved once, so the hot loops avoid
/// re-matching the model on every call.
#[derive(Debug, Clone, Copy)]
struct ResolvedModel {
    q1: Rational,
    q2: Rational,
    c_max: f64,
    pole: Option<f64>,
}

impl Isotherm for ResolvedModel {
    fn q1(&self, c: f64) -> Jet {
        self.q1.jet(c)
    }
    fn q2(&self, c: f64) -> Jet {
        self.q2.jet(c)
    }
    fn c_max(&self) -> f64 {
        self.c_max
    }
    fn pole(&self) -> Option<f64> {
        self.pole
    }
}

/// Every derived scalar at one concentration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PointValues {
    pub c: f64,
    pub q1: f64,
    pub q2: f64,
    pub dq1: f64,
    pub dq2: f64,
    pub h: f64,
    pub dh: f64,
    pub i: f64,
    pub f: f64,
    pub df: f64,
    pub d2f: f64,
    pub big_h: f64,
    pub a: f64,
    pub g: f64,
    pub big_g: f64,
}

/// Evaluator for `h, I, f, f′, f″, H, a, A±, g, G` of one isotherm.
///
/// Immutable after construction and cheap to share behind an [`Arc`].
#[derive(Debug, Clone)]
pub struct DerivedFunctions {
    iso: Arc<dyn Isotherm>,
    c_max: f64,
    pole: Option<f64>,
    // piece boundaries of a's sign pattern: 0, roots..., c_max
    knots: Vec<f64>,
    positive: Vec<bool>,
    a_plus_at: Vec<f64>,
    a_minus_at: Vec<f64>,
    // c + f(c) at each knot
    knot_base: Vec<f64>,
    g_table: HermiteTable,
}

impl DerivedFunctions {
    pub fn new(model: &IsothermModel) -> Result<Self, IsothermError> {
        model.validate()?;
        let (q1, q2) = model.rationals();
        let resolved = ResolvedModel { q1, q2, c_max: model.c_max(), pole: Isotherm::pole(model) };
        Self::from_isotherm(Arc::new(resolved))
    }

    pub fn from_isotherm(iso: Arc<dyn Isotherm>) -> Result<Self, IsothermError> {
        let c_max = iso.c_max();
        let pole = iso.pole();
        let a_of = |c: f64| {
            let (q1, q2) = (iso.q1(c), iso.q2(c));
            1.0 + q1.d1 - (q1.value + q2.value) - c * (q1.d1 + q2.d1)
        };

        let mut knots = vec![0.0];
        let mut prev_c = 0.0;
        let mut prev_a = a_of(0.0);
        for k in 1..=ROOT_SCAN {
            let c = c_max * k as f64 / ROOT_SCAN as f64;
            let a = a_of(c);
            if a == 0.0 && k < ROOT_SCAN {
                knots.push(c);
            } else if prev_a != 0.0 && a.signum() != prev_a.signum() {
                if let Some(r) = bisect(a_of, prev_c, c, 1e-15) {
                    if r > *knots.last().unwrap() && r < c_max {
                        knots.push(r);
                    }
                }
            }
            prev_c = c;
            prev_a = a;
        }
        knots.push(c_max);

        let antideriv = |c: f64| {
            let (q1, q2) = (iso.q1(c), iso.q2(c));
            c + q1.value - c * (q1.value + q2.value)
        };
        let mut positive = Vec::with_capacity(knots.len() - 1);
        let mut a_plus_at = vec![0.0];
        let mut a_minus_at = vec![0.0];
        for w in knots.windows(2) {
            let mid = 0.5 * (w[0] + w[1]);
            let pos = a_of(mid) >= 0.0;
            positive.push(pos);
            let delta = antideriv(w[1]) - antideriv(w[0]);
            let (p, m) = (*a_plus_at.last().unwrap(), *a_minus_at.last().unwrap());
            if pos {
                a_plus_at.push(p + delta);
                a_minus_at.push(m);
            } else {
                a_plus_at.push(p);
                a_minus_at.push(m - delta);
            }
        }

        let knot_base = knots.iter().map(|&k| antideriv(k)).collect();

        let g_prime = |c: f64| {
            let (q1, q2) = (iso.q1(c), iso.q2(c));
            let dh = q1.d1 + q2.d1;
            -dh / (1.0 + q1.d1 - c * dh)
        };
        let g_table = antiderivative_table(g_prime, 0.0, c_max, TABLE_NODES, QUAD_TOL)?;

        Ok(Self { iso, c_max, pole, knots, positive, a_plus_at, a_minus_at, knot_base, g_table })
    }

    pub fn c_max(&self) -> f64 {
        self.c_max
    }

    pub fn pole(&self) -> Option<f64> {
        self.pole
    }

    pub fn isotherm(&self) -> &dyn Isotherm {
        self.iso.as_ref()
    }

    /// Interior sign-change points of `a = 1 + f′` on the validity interval.
    pub fn sign_changes(&self) -> &[f64] {
        &self.knots[1..self.knots.len() - 1]
    }

    pub fn check_domain(&self, c: f64) -> Result<(), IsothermError> {
        if c.is_finite() && c >= -DOMAIN_SLACK && c <= self.c_max + DOMAIN_SLACK {
            Ok(())
        } else {
            Err(IsothermError::OutOfDomain { c, c_max: self.c_max, pole: self.pole })
        }
    }

    /// All derived values at `c`, with analytic derivatives.
    pub fn eval(&self, c: f64) -> Result<PointValues, IsothermError> {
        self.check_domain(c)?;
        let (q1, q2) = (self.iso.q1(c), self.iso.q2(c));
        let h = q1.value + q2.value;
        let dh = q1.d1 + q2.d1;
        let d2h = q1.d2 + q2.d2;
        let big_h = 1.0 + q1.d1 - c * dh;
        let df = q1.d1 - h - c * dh;
        let g = self.g_table.eval(c);
        Ok(PointValues {
            c,
            q1: q1.value,
            q2: q2.value,
            dq1: q1.d1,
            dq2: q2.d1,
            h,
            dh,
            i: c + q1.value,
            f: q1.value - c * h,
            df,
            d2f: q1.d2 - 2.0 * dh - c * d2h,
            big_h,
            a: 1.0 + df,
            g,
            big_g: g.exp(),
        })
    }

    // Unchecked evaluators for inner loops; callers keep `c` in range.

    #[inline]
    pub fn h(&self, c: f64) -> f64 {
        self.iso.q1(c).value + self.iso.q2(c).value
    }

    #[inline]
    pub fn dh(&self, c: f64) -> f64 {
        self.iso.q1(c).d1 + self.iso.q2(c).d1
    }

    #[inline]
    pub fn i(&self, c: f64) -> f64 {
        c + self.iso.q1(c).value
    }

    #[inline]
    pub fn f(&self, c: f64) -> f64 {
        let (q1, q2) = (self.iso.q1(c), self.iso.q2(c));
        q1.value - c * (q1.value + q2.value)
    }

    #[inline]
    pub fn df(&self, c: f64) -> f64 {
        let (q1, q2) = (self.iso.q1(c), self.iso.q2(c));
        q1.d1 - (q1.value + q2.value) - c * (q1.d1 + q2.d1)
    }

    #[inline]
    pub fn d2f(&self, c: f64) -> f64 {
        let (q1, q2) = (self.iso.q1(c), self.iso.q2(c));
        q1.d2 - 2.0 * (q1.d1 + q2.d1) - c * (q1.d2 + q2.d2)
    }

    #[inline]
    pub fn big_h(&self, c: f64) -> f64 {
        let (q1, q2) = (self.iso.q1(c), self.iso.q2(c));
        1.0 + q1.d1 - c * (q1.d1 + q2.d1)
    }

    #[inline]
    pub fn a(&self, c: f64) -> f64 {
        1.0 + self.df(c)
    }

    /// `(h(c), A⁺(c), A⁻(c))` in one pass over the isotherm.
    #[inline]
    pub fn h_and_a_pm(&self, c: f64) -> (f64, f64, f64) {
        let (q1, q2) = (self.iso.q1(c), self.iso.q2(c));
        let h = q1.value + q2.value;
        let antideriv = c + q1.value - c * h;
        let (ap, am) = self.a_pm_from(c, antideriv);
        (h, ap, am)
    }

    /// `(A⁺(c), A⁻(c))` with `a⁻ = −min(a, 0) ≥ 0`, so `A⁺ − A⁻ = c + f(c) − f(0)`.
    pub fn a_pm(&self, c: f64) -> (f64, f64) {
        let antideriv = c + self.f(c);
        self.a_pm_from(c, antideriv)
    }

    fn a_pm_from(&self, c: f64, antideriv: f64) -> (f64, f64) {
        let pieces = self.positive.len();
        let mut j = 0;
        while j + 1 < pieces && c >= self.knots[j + 1] {
            j += 1;
        }
        let delta = antideriv - self.knot_base[j];
        if self.positive[j] {
            (self.a_plus_at[j] + delta, self.a_minus_at[j])
        } else {
            (self.a_plus_at[j], self.a_minus_at[j] - delta)
        }
    }

    #[inline]
    pub fn g(&self, c: f64) -> f64 {
        self.g_table.eval(c)
    }

    #[inline]
    pub fn big_g(&self, c: f64) -> f64 {
        self.g_table.eval(c).exp()
    }

    /// `(g(c), G(c))` with the normalization `g(0) = 0`.
    pub fn g_and_big_g(&self, c: f64) -> Result<(f64, f64), IsothermError> {
        self.check_domain(c)?;
        let g = self.g(c);
        Ok((g, g.exp()))
    }

    /// Sup-norms of `h` and `a` over `[lo, hi]`, by dense sampling.
    pub fn norms_on(&self, lo: f64, hi: f64) -> (f64, f64) {
        let samples = 4096;
        (0..=samples).fold((0.0_f64, 0.0_f64), |(hm, am), k| {
            let c = if hi > lo { lo + (hi - lo) * k as f64 / samples as f64 } else { lo };
            (hm.max(self.h(c).abs()), am.max(self.a(c).abs()))
        })
    }

    /// `(inf G, sup G)` over `[lo, hi]`, by dense sampling of the table.
    pub fn big_g_range(&self, lo: f64, hi: f64) -> (f64, f64) {
        let samples = 4096;
        (0..=samples).fold((f64::INFINITY, 0.0_f64), |(mn, mx), k| {
            let c = if hi > lo { lo + (hi - lo) * k as f64 / samples as f64 } else { lo };
            let g = self.big_g(c);
            (mn.min(g), mx.max(g))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum AdmissibilityViolation {
    /// `q₁′ < 0`
    Q1Decreasing,
    /// `q₂′ > 0`
    Q2Increasing,
    /// `H < 1`
    HBelowOne,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdmissibilityReport {
    pub samples: usize,
    pub c_max: f64,
    /// First violating concentration and the violated condition.
    pub violation: Option<(f64, AdmissibilityViolation)>,
}

impl AdmissibilityReport {
    pub fn passed(&self) -> bool {
        self.violation.is_none()
    }
}

/// Samples `q₁′ ≥ 0 ≥ q₂′` and `H ≥ 1` on a uniform grid of the validity interval.
pub fn check_admissible(iso: &dyn Isotherm, n_samples: usize) -> AdmissibilityReport {
    assert!(n_samples >= 2, "need at least two samples");
    const TOL: f64 = 1e-12;
    let c_max = iso.c_max();
    let violation = (0..n_samples).find_map(|k| {
        let c = c_max * k as f64 / (n_samples - 1) as f64;
        let (q1, q2) = (iso.q1(c), iso.q2(c));
        let big_h = 1.0 + q1.d1 - c * (q1.d1 + q2.d1);
        if q1.d1 < -TOL {
            Some((c, AdmissibilityViolation::Q1Decreasing))
        } else if q2.d1 > TOL {
            Some((c, AdmissibilityViolation::Q2Increasing))
        } else if big_h < 1.0 - TOL {
            Some((c, AdmissibilityViolation::HBelowOne))
        } else {
            None
        }
    });
    AdmissibilityReport { samples: n_samples, c_max, violation }
}
