use nalgebra::DMatrix;

use crate::linops::{BlurKernel, GradField, ImageGrid};

/// A block variable viewed as a flat real vector.
pub trait Block: Clone {
    fn as_slice(&self) -> &[f64];
    fn as_mut_slice(&mut self) -> &mut [f64];

    fn dot(&self, other: &Self) -> f64 {
        self.as_slice().iter().zip(other.as_slice()).map(|(a, b)| a * b).sum()
    }

    fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    fn dist(&self, other: &Self) -> f64 {
        self.as_slice()
            .iter()
            .zip(other.as_slice())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    /// `self += a * other`.
    fn axpy(&mut self, a: f64, other: &Self) {
        for (s, o) in self.as_mut_slice().iter_mut().zip(other.as_slice()) {
            *s += a * o;
        }
    }

    fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        z.as_mut_slice().iter_mut().for_each(|v| *v = 0.0);
        z
    }
}

impl Block for Vec<f64> {
    fn as_slice(&self) -> &[f64] {
        self
    }
    fn as_mut_slice(&mut self) -> &mut [f64] {
        self
    }
}

impl Block for ImageGrid {
    fn as_slice(&self) -> &[f64] {
        ImageGrid::as_slice(self)
    }
    fn as_mut_slice(&mut self) -> &mut [f64] {
        ImageGrid::as_mut_slice(self)
    }
}

impl Block for GradField {
    fn as_slice(&self) -> &[f64] {
        GradField::as_slice(self)
    }
    fn as_mut_slice(&mut self) -> &mut [f64] {
        GradField::as_mut_slice(self)
    }
}

impl Block for BlurKernel {
    fn as_slice(&self) -> &[f64] {
        self.weights()
    }
    fn as_mut_slice(&mut self) -> &mut [f64] {
        self.weights_mut()
    }
}

impl Block for DMatrix<f64> {
    fn as_slice(&self) -> &[f64] {
        nalgebra::Matrix::as_slice(self)
    }
    fn as_mut_slice(&mut self) -> &mut [f64] {
        nalgebra::Matrix::as_mut_slice(self)
    }
}
