//! Extended nonnegative distances and the pseudo-metrics used on carriers.

use serde::{Deserialize, Serialize};

use crate::error::SpaceError;
use crate::space::{Carrier, Element, Payload};

/// Absolute tolerance for floating-point metric comparisons in validators.
pub const METRIC_TOL: f64 = 1e-9;

/// A distance value in `[0, ∞]`. Never negative, never NaN; `∞` absorbs
/// addition and dominates `max`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct MetricValue(f64);

impl MetricValue {
    pub const ZERO: MetricValue = MetricValue(0.0);
    pub const INFINITE: MetricValue = MetricValue(f64::INFINITY);

    /// Wraps a raw value, rejecting negatives and NaN.
    pub fn new(v: f64) -> Result<MetricValue, SpaceError> {
        if v.is_nan() || v < 0.0 {
            return Err(SpaceError::InvalidMetricValue(v));
        }
        Ok(MetricValue(v))
    }

    /// Wraps a value known to be nonnegative and non-NaN.
    ///
    /// Panics in debug builds when the invariant is violated.
    pub fn from_nonneg(v: f64) -> MetricValue {
        debug_assert!(!v.is_nan() && v >= 0.0, "metric value {v} out of range");
        MetricValue(v)
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_finite(self) -> bool {
        self.0.is_finite()
    }

    pub fn is_infinite(self) -> bool {
        self.0.is_infinite()
    }

    pub fn max(self, other: MetricValue) -> MetricValue {
        MetricValue(self.0.max(other.0))
    }

    pub fn min(self, other: MetricValue) -> MetricValue {
        MetricValue(self.0.min(other.0))
    }
}

impl std::ops::Add for MetricValue {
    type Output = MetricValue;
    fn add(self, rhs: MetricValue) -> MetricValue {
        MetricValue(self.0 + rhs.0)
    }
}

impl std::fmt::Display for MetricValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.0.is_infinite() {
            write!(f, "inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

/// Pseudo-metric on a carrier.
///
/// `ExplicitTable` is validated exhaustively at construction; the other kinds
/// satisfy the axioms by shape.
#[derive(Debug, Clone, PartialEq)]
pub enum PseudoMetric {
    /// 0 iff equal, else 1.
    Discrete,
    /// Sum of absolute differences over entries.
    L1,
    /// Sup-norm over entries.
    LInfinity,
    /// n×n distance table for finite carriers.
    ExplicitTable(DistanceTable),
}

/// Symmetric distance table with zero diagonal and verified triangle
/// inequality.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceTable {
    n: usize,
    d: Vec<f64>,
}

impl DistanceTable {
    /// Builds a table from rows, checking (R), (S) and (T) exhaustively.
    pub fn new(rows: Vec<Vec<f64>>) -> Result<DistanceTable, SpaceError> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(SpaceError::MalformedTable("distance table is not square".into()));
        }
        let mut d = Vec::with_capacity(n * n);
        for row in &rows {
            for &v in row {
                if v.is_nan() || v < 0.0 {
                    return Err(SpaceError::InvalidMetricValue(v));
                }
                d.push(v);
            }
        }
        let table = DistanceTable { n, d };
        table.check_axioms()?;
        Ok(table)
    }

    /// Builds a table without the eager axiom check, for exercising the
    /// space validator on deliberately broken metrics. Shape is still
    /// enforced.
    pub fn unchecked(rows: Vec<Vec<f64>>) -> Result<DistanceTable, SpaceError> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(SpaceError::MalformedTable("distance table is not square".into()));
        }
        let mut d = Vec::with_capacity(n * n);
        for row in &rows {
            for &v in row {
                if v.is_nan() || v < 0.0 {
                    return Err(SpaceError::InvalidMetricValue(v));
                }
                d.push(v);
            }
        }
        Ok(DistanceTable { n, d })
    }

    fn check_axioms(&self) -> Result<(), SpaceError> {
        let n = self.n;
        for i in 0..n {
            if self.get(i, i) != 0.0 {
                return Err(SpaceError::MetricAxiom {
                    axiom: "reflexivity",
                    witness: format!("d({i},{i}) = {}", self.get(i, i)),
                });
            }
            for j in 0..n {
                if (self.get(i, j) - self.get(j, i)).abs() > METRIC_TOL {
                    return Err(SpaceError::MetricAxiom {
                        axiom: "symmetry",
                        witness: format!("d({i},{j}) = {} but d({j},{i}) = {}", self.get(i, j), self.get(j, i)),
                    });
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    if self.get(i, k) > self.get(i, j) + self.get(j, k) + METRIC_TOL {
                        return Err(SpaceError::MetricAxiom {
                            axiom: "triangle inequality",
                            witness: format!(
                                "d({i},{k}) = {} > d({i},{j}) + d({j},{k}) = {}",
                                self.get(i, k),
                                self.get(i, j) + self.get(j, k)
                            ),
                        });
                    }
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.d[i * self.n + j]
    }
}

impl PseudoMetric {
    /// Distance between two elements of `carrier`.
    pub fn distance(
        &self,
        carrier: &Carrier,
        a: &Element,
        b: &Element,
    ) -> Result<MetricValue, SpaceError> {
        match self {
            PseudoMetric::Discrete => Ok(if elements_equal(carrier, a, b)? {
                MetricValue::ZERO
            } else {
                MetricValue::from_nonneg(1.0)
            }),
            PseudoMetric::L1 => entrywise(carrier, a, b, |acc, x, y| acc + (x - y).abs()),
            PseudoMetric::LInfinity => entrywise(carrier, a, b, |acc, x, y| acc.max((x - y).abs())),
            PseudoMetric::ExplicitTable(table) => {
                let i = carrier.index_of(a)?;
                let j = carrier.index_of(b)?;
                if i >= table.len() || j >= table.len() {
                    return Err(SpaceError::IndexOutOfRange { index: i.max(j), size: table.len() });
                }
                Ok(MetricValue::from_nonneg(table.get(i, j)))
            }
        }
    }
}

fn elements_equal(carrier: &Carrier, a: &Element, b: &Element) -> Result<bool, SpaceError> {
    match (a, b) {
        (Element::Point(i), Element::Point(j)) => Ok(i == j),
        (Element::Image(x), Element::Image(y)) => Ok(x == y),
        (Element::Unit, Element::Unit) => Ok(true),
        (Element::Tuple(xs), Element::Tuple(ys)) => {
            let factors = match carrier {
                Carrier::Product(fs) if fs.len() == xs.len() && fs.len() == ys.len() => fs,
                _ => return Err(SpaceError::ElementKind("tuple does not match carrier".into())),
            };
            for ((f, x), y) in factors.iter().zip(xs).zip(ys) {
                if !elements_equal(f, x, y)? {
                    return Ok(false);
                }
            }
            Ok(true)
        }
        _ => Err(SpaceError::ElementKind("mismatched element kinds".into())),
    }
}

/// Folds `f` over paired entries of the two elements' numeric payloads.
fn entrywise(
    carrier: &Carrier,
    a: &Element,
    b: &Element,
    f: impl Fn(f64, f64, f64) -> f64,
) -> Result<MetricValue, SpaceError> {
    let xa = numeric_entries(carrier, a)?;
    let xb = numeric_entries(carrier, b)?;
    if xa.len() != xb.len() {
        return Err(SpaceError::ElementKind(format!(
            "entry count mismatch: {} vs {}",
            xa.len(),
            xb.len()
        )));
    }
    let mut acc = 0.0;
    for (x, y) in xa.iter().zip(xb.iter()) {
        acc = f(acc, *x, *y);
    }
    Ok(MetricValue::from_nonneg(acc))
}

fn numeric_entries<'a>(carrier: &'a Carrier, e: &'a Element) -> Result<std::borrow::Cow<'a, [f64]>, SpaceError> {
    use std::borrow::Cow;
    match e {
        Element::Image(img) => Ok(Cow::Borrowed(&img.pixels)),
        Element::Point(i) => match carrier.payload(*i)? {
            Payload::Vector(v) => Ok(Cow::Borrowed(v.as_slice())),
            other => Err(SpaceError::ElementKind(format!(
                "L1/LInfinity metric needs numeric payloads, found {}",
                other.kind_name()
            ))),
        },
        _ => Err(SpaceError::ElementKind(
            "L1/LInfinity metric needs vector or image elements".into(),
        )),
    }
}
