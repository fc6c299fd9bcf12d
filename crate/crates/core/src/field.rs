//! Per-vertex fields.

use std::ops::{Deref, DerefMut};

use crate::error::{Error, Result};
use crate::mesh::Vec2;

/// One scalar per mesh vertex.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ScalarField(Vec<f64>);

impl ScalarField {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn constant(n: usize, value: f64) -> Self {
        Self(vec![value; n])
    }

    /// Checks the length against `n` vertices and that every value is finite.
    pub fn check(&self, n: usize) -> Result<()> {
        if self.0.len() != n {
            return Err(Error::FieldLength { expected: n, got: self.0.len() });
        }
        match self.0.iter().position(|v| !v.is_finite()) {
            Some(vertex) => Err(Error::NonFinite { vertex }),
            None => Ok(()),
        }
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

impl Deref for ScalarField {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for ScalarField {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl From<Vec<f64>> for ScalarField {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

impl FromIterator<f64> for ScalarField {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        Self(iter.into_iter().collect())
    }
}

/// One 2-vector per mesh vertex (gradients, displacements).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct VectorField(Vec<Vec2>);

impl VectorField {
    pub fn new(values: Vec<Vec2>) -> Self {
        Self(values)
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![Vec2::zeros(); n])
    }

    pub fn into_inner(self) -> Vec<Vec2> {
        self.0
    }

    /// Largest Euclidean norm over the vertices.
    pub fn max_norm(&self) -> f64 {
        self.0.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

impl Deref for VectorField {
    type Target = [Vec2];
    fn deref(&self) -> &[Vec2] {
        &self.0
    }
}

impl DerefMut for VectorField {
    fn deref_mut(&mut self) -> &mut [Vec2] {
        &mut self.0
    }
}

impl From<Vec<Vec2>> for VectorField {
    fn from(v: Vec<Vec2>) -> Self {
        Self(v)
    }
}

impl FromIterator<Vec2> for VectorField {
    fn from_iter<I: IntoIterator<Item = Vec2>>(iter: I) -> Self {
        Self(iter.into_iter().collect())
    }
}
