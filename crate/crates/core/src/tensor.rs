//! Dense spatial tensors with jet-valued components.
//!
//! Spatial indices run over `0..3` and stand for the coordinates `x1..x3`.
//! Components are stored row-major in slot order.

use std::ops::Index;

use crate::jets::Jet;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    Up,
    Down,
}

pub use Slot::{Down, Up};

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    slots: Vec<Slot>,
    data: Vec<Jet>,
}

fn flat(idx: &[usize]) -> usize {
    idx.iter().fold(0, |acc, &i| acc * 3 + i)
}

fn unflat(mut n: usize, rank: usize, out: &mut [usize]) {
    for slot in (0..rank).rev() {
        out[slot] = n % 3;
        n /= 3;
    }
}

impl Tensor {
    pub fn from_fn(slots: &[Slot], mut f: impl FnMut(&[usize]) -> Jet) -> Tensor {
        let rank = slots.len();
        let n = 3usize.pow(rank as u32);
        let mut idx = vec![0; rank];
        let data = (0..n)
            .map(|p| {
                unflat(p, rank, &mut idx);
                f(&idx)
            })
            .collect();
        Tensor {
            slots: slots.to_vec(),
            data,
        }
    }

    pub fn scalar(value: Jet) -> Tensor {
        Tensor {
            slots: Vec::new(),
            data: vec![value],
        }
    }

    pub fn vector(slot: Slot, v: [Jet; 3]) -> Tensor {
        Tensor::from_fn(&[slot], |ix| v[ix[0]])
    }

    pub fn matrix(slots: [Slot; 2], m: &[[Jet; 3]; 3]) -> Tensor {
        Tensor::from_fn(&slots, |ix| m[ix[0]][ix[1]])
    }

    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    pub fn rank(&self) -> usize {
        self.slots.len()
    }

    pub fn get(&self, idx: &[usize]) -> &Jet {
        debug_assert_eq!(idx.len(), self.rank());
        &self.data[flat(idx)]
    }

    pub fn components(&self) -> impl Iterator<Item = (Vec<usize>, &Jet)> {
        let rank = self.rank();
        self.data.iter().enumerate().map(move |(p, j)| {
            let mut idx = vec![0; rank];
            unflat(p, rank, &mut idx);
            (idx, j)
        })
    }

    pub fn map(&self, f: impl Fn(&Jet) -> Jet) -> Tensor {
        Tensor {
            slots: self.slots.clone(),
            data: self.data.iter().map(f).collect(),
        }
    }

    /// Largest absolute component value at the base point.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, j| m.max(j.value().abs()))
    }

    /// Largest absolute componentwise difference of values.
    pub fn max_abs_diff(&self, other: &Tensor) -> f64 {
        assert_eq!(self.rank(), other.rank(), "rank mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0f64, |m, (a, b)| m.max((a.value() - b.value()).abs()))
    }

    /// Largest relative componentwise difference with denominator `max(1, |other|)`.
    pub fn max_rel_diff(&self, other: &Tensor) -> f64 {
        assert_eq!(self.rank(), other.rank(), "rank mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0f64, |m, (a, b)| m.max(rel_diff(a.value(), b.value())))
    }

    pub fn values(&self) -> Vec<f64> {
        self.data.iter().map(Jet::value).collect()
    }
}

/// `|a - b| / max(1, |b|)`.
pub fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

impl<const N: usize> Index<[usize; N]> for Tensor {
    type Output = Jet;
    fn index(&self, idx: [usize; N]) -> &Jet {
        assert_eq!(N, self.rank(), "index arity does not match tensor rank");
        &self.data[flat(&idx)]
    }
}

/// Sum of `f(m)` over a spatial index.
pub fn sum3(f: impl Fn(usize) -> Jet) -> Jet {
    f(0) + f(1) + f(2)
}

/// Kronecker delta.
pub fn kronecker(i: usize, j: usize) -> f64 {
    if i == j {
        1.0
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_and_indexing() {
        let t = Tensor::from_fn(&[Up, Down, Down], |ix| {
            Jet::constant((ix[0] * 100 + ix[1] * 10 + ix[2]) as f64)
        });
        assert_eq!(t[[2, 1, 0]].value(), 210.0);
        assert_eq!(t.get(&[0, 2, 1]).value(), 21.0);
        assert_eq!(t.components().count(), 27);
        let s = Tensor::scalar(Jet::constant(4.0));
        assert_eq!(s[[]].value(), 4.0);
        assert_eq!(s.max_abs(), 4.0);
    }

    #[test]
    fn relative_difference_floor() {
        assert_eq!(rel_diff(1e-3, 0.0), 1e-3);
        assert_eq!(rel_diff(110.0, 100.0), 0.1);
    }
}
