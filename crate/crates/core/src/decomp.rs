//! Decomposition of the bi-objective problem into scalar sub-problems.
//!
//! Objective vectors are kept in maximization space. The weighted sum is
//! maximized directly. Tchebycheff is minimized as `max_j w_j |f_j - z_j|`
//! with `z` the best value seen per objective. PBI is minimized in the
//! flipped space `f' = 1 - f`, where the ideal point sits at the low corner
//! and the penalty geometry applies unchanged. Every scalar value carries its
//! optimization direction so values of different kinds cannot be compared.

use std::cmp::Ordering;

use thiserror::Error;

use crate::objectives::ObjectiveVector;

/// Substitute for zero Tchebycheff weights.
pub const TCH_ZERO_WEIGHT: f64 = 1e-6;

/// Default PBI penalty.
pub const DEFAULT_THETA: f64 = 0.1;

#[derive(Debug, Error, PartialEq)]
pub enum DecompError {
    #[error("at least 2 weight vectors required, got {0}")]
    TooFewWeights(usize),
    #[error("only 2 objectives are supported, got {0}")]
    UnsupportedObjectives(usize),
    #[error("neighborhood size {t} must be in 1..={n}")]
    NeighborhoodSize { t: usize, n: usize },
    #[error("PBI is undefined for a zero weight vector")]
    ZeroWeight,
    #[error("PBI penalty must be positive, got {0}")]
    Theta(f64),
    #[error("cannot compare a minimized value with a maximized one")]
    MixedDirection,
}

/// Non-negative weights summing to one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightVector(pub [f64; 2]);

impl WeightVector {
    pub fn components(&self) -> [f64; 2] {
        self.0
    }

    fn norm(&self) -> f64 {
        self.0[0].hypot(self.0[1])
    }

    pub fn distance(&self, other: &WeightVector) -> f64 {
        (self.0[0] - other.0[0]).hypot(self.0[1] - other.0[1])
    }
}

/// `λ^i = (i/(n-1), 1 - i/(n-1))` for `i = 0..n`.
pub fn uniform_weights(n: usize, m: usize) -> Result<Vec<WeightVector>, DecompError> {
    if m != 2 {
        return Err(DecompError::UnsupportedObjectives(m));
    }
    if n < 2 {
        return Err(DecompError::TooFewWeights(n));
    }
    let last = (n - 1) as f64;
    Ok((0..n)
        .map(|i| {
            let a = i as f64 / last;
            WeightVector([a, 1.0 - a])
        })
        .collect())
}

/// `B(i)`: the `t` weight vectors nearest to each `λ^i`, nearest first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NeighborhoodTable {
    rows: Vec<Vec<usize>>,
}

impl NeighborhoodTable {
    pub fn row(&self, i: usize) -> &[usize] {
        &self.rows[i]
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn neighborhood_size(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }
}

/// Sorts by Euclidean distance; equal distances keep the lower index first.
pub fn build_neighborhoods(weights: &[WeightVector], t: usize) -> Result<NeighborhoodTable, DecompError> {
    let n = weights.len();
    if t == 0 || t > n {
        return Err(DecompError::NeighborhoodSize { t, n });
    }
    let rows = weights
        .iter()
        .map(|wi| {
            let mut order: Vec<(f64, usize)> = weights.iter().enumerate().map(|(j, wj)| (wi.distance(wj), j)).collect();
            order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            order.into_iter().take(t).map(|(_, j)| j).collect()
        })
        .collect();
    Ok(NeighborhoodTable { rows })
}

/// Best objective values seen so far (maximization space).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdealPoint(pub [f64; 2]);

impl IdealPoint {
    /// Component-wise maximum over `points`; `(-inf, -inf)` when empty.
    pub fn from_points<'a>(points: impl IntoIterator<Item = &'a ObjectiveVector>) -> Self {
        points
            .into_iter()
            .fold(IdealPoint([f64::NEG_INFINITY; 2]), update_ideal)
    }
}

pub fn update_ideal(z: IdealPoint, f: &ObjectiveVector) -> IdealPoint {
    IdealPoint([z.0[0].max(f.tpr), z.0[1].max(f.tnr)])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Maximize,
    Minimize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarValue {
    pub value: f64,
    pub direction: Direction,
}

impl ScalarValue {
    pub fn maximize(value: f64) -> Self {
        ScalarValue {
            value,
            direction: Direction::Maximize,
        }
    }

    pub fn minimize(value: f64) -> Self {
        ScalarValue {
            value,
            direction: Direction::Minimize,
        }
    }

    /// Ordering where `Greater` means better.
    fn quality_cmp(&self, other: &ScalarValue) -> Result<Ordering, DecompError> {
        if self.direction != other.direction {
            return Err(DecompError::MixedDirection);
        }
        let ord = self.value.total_cmp(&other.value);
        Ok(match self.direction {
            Direction::Maximize => ord,
            Direction::Minimize => ord.reverse(),
        })
    }
}

/// Strictly better under the shared direction.
pub fn is_better(a: ScalarValue, b: ScalarValue) -> Result<bool, DecompError> {
    Ok(a.quality_cmp(&b)? == Ordering::Greater)
}

/// Better or equal under the shared direction.
pub fn is_better_or_equal(a: ScalarValue, b: ScalarValue) -> Result<bool, DecompError> {
    Ok(a.quality_cmp(&b)? != Ordering::Less)
}

/// Weighted sum `Σ w_j f_j`, maximized.
pub fn g_ws(f: &ObjectiveVector, w: &WeightVector) -> ScalarValue {
    ScalarValue::maximize(w.0[0] * f.tpr + w.0[1] * f.tnr)
}

/// Tchebycheff `max_j w_j |f_j - z_j|`, minimized.
pub fn g_tch(f: &ObjectiveVector, w: &WeightVector, z: &IdealPoint) -> ScalarValue {
    let weight = |x: f64| if x == 0.0 { TCH_ZERO_WEIGHT } else { x };
    let a = weight(w.0[0]) * (f.tpr - z.0[0]).abs();
    let b = weight(w.0[1]) * (f.tnr - z.0[1]).abs();
    ScalarValue::minimize(a.max(b))
}

/// PBI distances `(d1, d2)`: `d1` is the length of the projection of
/// `f' - z'` onto the weight direction and `d2` the distance from `f'` to
/// that ray.
pub fn pbi_distances(f: &ObjectiveVector, w: &WeightVector, z: &IdealPoint) -> Result<(f64, f64), DecompError> {
    let norm = w.norm();
    if norm == 0.0 {
        return Err(DecompError::ZeroWeight);
    }
    let unit = [w.0[0] / norm, w.0[1] / norm];
    // f' - z' with f' = 1 - f and z' = 1 - z.
    let diff = [z.0[0] - f.tpr, z.0[1] - f.tnr];
    let d1 = (diff[0] * unit[0] + diff[1] * unit[1]).abs();
    let d2 = (diff[0] - d1 * unit[0]).hypot(diff[1] - d1 * unit[1]);
    Ok((d1, d2))
}

/// PBI `d1 + θ d2`, minimized.
pub fn g_pbi(f: &ObjectiveVector, w: &WeightVector, z: &IdealPoint, theta: f64) -> Result<ScalarValue, DecompError> {
    if theta.is_nan() || theta <= 0.0 {
        return Err(DecompError::Theta(theta));
    }
    let (d1, d2) = pbi_distances(f, w, z)?;
    Ok(ScalarValue::minimize(d1 + theta * d2))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scalarizer {
    WeightedSum,
    Tchebycheff,
    Pbi { theta: f64 },
}

impl Scalarizer {
    pub fn pbi() -> Self {
        Scalarizer::Pbi { theta: DEFAULT_THETA }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Scalarizer::WeightedSum => "wgt",
            Scalarizer::Tchebycheff => "tch",
            Scalarizer::Pbi { .. } => "pbi",
        }
    }

    pub fn validate(&self) -> Result<(), DecompError> {
        match *self {
            Scalarizer::Pbi { theta } if theta.is_nan() || theta <= 0.0 => Err(DecompError::Theta(theta)),
            _ => Ok(()),
        }
    }

    pub fn evaluate(&self, f: &ObjectiveVector, w: &WeightVector, z: &IdealPoint) -> Result<ScalarValue, DecompError> {
        match *self {
            Scalarizer::WeightedSum => Ok(g_ws(f, w)),
            Scalarizer::Tchebycheff => Ok(g_tch(f, w, z)),
            Scalarizer::Pbi { theta } => g_pbi(f, w, z, theta),
        }
    }
}
