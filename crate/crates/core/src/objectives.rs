//! Zero-threshold classification and the two rate objectives.
//!
//! A program output `>= 0` predicts the minority class. Fitness is the pair
//! (TPR, TNR), both maximized: TPR = TP / (TP + FN) is recall on the
//! minority class and TNR = TN / (TN + FP) is recall on the majority class.

use thiserror::Error;

use crate::dataset::Class;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ObjectiveError {
    #[error("semantics has {semantics} entries but there are {labels} labels")]
    LengthMismatch { semantics: usize, labels: usize },
    #[error("the {0} class has no examples")]
    EmptyClass(Class),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fn_: usize,
    pub tn: usize,
    pub fp: usize,
}

impl ConfusionCounts {
    pub fn minority_count(&self) -> usize {
        self.tp + self.fn_
    }

    pub fn majority_count(&self) -> usize {
        self.tn + self.fp
    }
}

/// A point in (TPR, TNR) space.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ObjectiveVector {
    pub tpr: f64,
    pub tnr: f64,
}

impl ObjectiveVector {
    pub const fn new(tpr: f64, tnr: f64) -> Self {
        ObjectiveVector { tpr, tnr }
    }

    pub fn as_array(&self) -> [f64; 2] {
        [self.tpr, self.tnr]
    }

    /// Pareto dominance under maximization.
    pub fn dominates(&self, other: &ObjectiveVector) -> bool {
        self.tpr >= other.tpr && self.tnr >= other.tnr && (self.tpr > other.tpr || self.tnr > other.tnr)
    }
}

impl From<[f64; 2]> for ObjectiveVector {
    fn from(v: [f64; 2]) -> Self {
        ObjectiveVector::new(v[0], v[1])
    }
}

#[inline]
pub fn predict(output: f64) -> Class {
    if output >= 0.0 {
        Class::Minority
    } else {
        Class::Majority
    }
}

pub fn classify_and_count(semantics: &[f64], labels: &[Class]) -> Result<ConfusionCounts, ObjectiveError> {
    if semantics.len() != labels.len() {
        return Err(ObjectiveError::LengthMismatch {
            semantics: semantics.len(),
            labels: labels.len(),
        });
    }
    let mut c = ConfusionCounts::default();
    for (&out, &truth) in semantics.iter().zip(labels) {
        match (predict(out), truth) {
            (Class::Minority, Class::Minority) => c.tp += 1,
            (Class::Majority, Class::Minority) => c.fn_ += 1,
            (Class::Majority, Class::Majority) => c.tn += 1,
            (Class::Minority, Class::Majority) => c.fp += 1,
        }
    }
    Ok(c)
}

pub fn objectives(c: &ConfusionCounts) -> Result<ObjectiveVector, ObjectiveError> {
    if c.minority_count() == 0 {
        return Err(ObjectiveError::EmptyClass(Class::Minority));
    }
    if c.majority_count() == 0 {
        return Err(ObjectiveError::EmptyClass(Class::Majority));
    }
    Ok(ObjectiveVector {
        tpr: c.tp as f64 / c.minority_count() as f64,
        tnr: c.tn as f64 / c.majority_count() as f64,
    })
}

/// `objectives(classify_and_count(semantics, labels))`.
pub fn evaluate_objectives(semantics: &[f64], labels: &[Class]) -> Result<ObjectiveVector, ObjectiveError> {
    objectives(&classify_and_count(semantics, labels)?)
}
