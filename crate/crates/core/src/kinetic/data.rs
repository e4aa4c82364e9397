use std::fmt;
use std::sync::Arc;

use crate::numeric::adaptive_simpson;

/// Scalar data along one axis (`t` for boundary data, `x` for initial data).
#[derive(Clone)]
pub enum DataProfile {
    Constant(f64),
    /// `values[k]` on `[breaks[k-1], breaks[k])`, with `values.len() == breaks.len() + 1`.
    Piecewise {
        breaks: Vec<f64>,
        values: Vec<f64>,
    },
    /// Arbitrary function; averaged by quadrature.
    Function(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for DataProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DataProfile::Constant(v) => f.debug_tuple("Constant").field(v).finish(),
            DataProfile::Piecewise { breaks, values } => {
                f.debug_struct("Piecewise").field("breaks", breaks).field("values", values).finish()
            }
            DataProfile::Function(_) => f.write_str("Function(..)"),
        }
    }
}

impl DataProfile {
    pub fn function(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        DataProfile::Function(Arc::new(f))
    }

    /// Piecewise-constant profile; panics unless `values.len() == breaks.len() + 1`
    /// and `breaks` is nondecreasing.
    pub fn piecewise(breaks: Vec<f64>, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), breaks.len() + 1, "piecewise profile needs one more value than breaks");
        assert!(breaks.windows(2).all(|w| w[0] <= w[1]), "breaks must be sorted");
        DataProfile::Piecewise { breaks, values }
    }

    pub fn value_at(&self, s: f64) -> f64 {
        match self {
            DataProfile::Constant(v) => *v,
            DataProfile::Piecewise { breaks, values } => values[breaks.partition_point(|&b| b <= s)],
            DataProfile::Function(f) => f(s),
        }
    }

    /// Mean value over `[a, b]`; the point value when `a == b`.
    pub fn average(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return self.value_at(a);
        }
        match self {
            DataProfile::Constant(v) => *v,
            DataProfile::Piecewise { breaks, values } => {
                let mut total = 0.0;
                let mut left = a;
                let mut k = breaks.partition_point(|&br| br <= a);
                while left < b {
                    let right = if k < breaks.len() { breaks[k].min(b) } else { b };
                    total += values[k] * (right - left);
                    left = right;
                    k += 1;
                }
                total / (b - a)
            }
            DataProfile::Function(f) => {
                let integral = adaptive_simpson(|s| f(s), a, b, 1e-13 * (b - a), 30)
                    .unwrap_or_else(|_| simpson_fallback(f.as_ref(), a, b));
                integral / (b - a)
            }
        }
    }

    /// `(min, max)` over `[a, b]`; exact for constant and piecewise data, sampled otherwise.
    pub fn range(&self, a: f64, b: f64) -> (f64, f64) {
        match self {
            DataProfile::Constant(v) => (*v, *v),
            DataProfile::Piecewise { breaks, values } => {
                let lo = breaks.partition_point(|&br| br <= a);
                let hi = breaks.partition_point(|&br| br < b);
                values[lo..=hi.max(lo)]
                    .iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(mn, mx), &v| (mn.min(v), mx.max(v)))
            }
            DataProfile::Function(f) => {
                let n = 2048;
                (0..=n).fold((f64::INFINITY, f64::NEG_INFINITY), |(mn, mx), k| {
                    let v = f(a + (b - a) * k as f64 / n as f64);
                    (mn.min(v), mx.max(v))
                })
            }
        }
    }
}

fn simpson_fallback(f: &(dyn Fn(f64) -> f64 + Send + Sync), a: f64, b: f64) -> f64 {
    let n = 1024;
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for k in 1..n {
        acc += f(a + h * k as f64) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    acc * h / 3.0
}
