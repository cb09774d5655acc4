//! Tours and their lengths.

use std::ops::Add;

use num_traits::Zero;

use crate::error::{contract, Result};
use crate::numeric::Scalar;

/// A closed tour: `order` lists every city once and wraps around.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tour<L = Scalar> {
    pub order: Vec<usize>,
    pub length: L,
}

impl<L> Tour<L> {
    /// Builds a tour and computes its length in the listed direction.
    pub fn from_order(order: Vec<usize>, dist: impl Fn(usize, usize) -> L) -> Self
    where
        L: Zero + Add<Output = L>,
    {
        let length = cycle_length(&order, dist);
        Tour { order, length }
    }
}

/// Sum of `dist(order[i], order[i + 1])`, closing back to the start.
pub fn cycle_length<L: Zero + Add<Output = L>>(
    order: &[usize],
    dist: impl Fn(usize, usize) -> L,
) -> L {
    if order.len() < 2 {
        return L::zero();
    }
    let closing = dist(order[order.len() - 1], order[0]);
    order
        .windows(2)
        .fold(closing, |acc, w| acc + dist(w[0], w[1]))
}

/// Checks that `order` is a permutation of `0..n`.
pub fn check_permutation(order: &[usize], n: usize) -> Result<()> {
    if order.len() != n {
        return Err(contract(format!(
            "tour visits {} cities, expected {n}",
            order.len()
        )));
    }
    let mut seen = vec![false; n];
    for &c in order {
        if c >= n || std::mem::replace(&mut seen[c], true) {
            return Err(contract(format!("city {c} is out of range or repeated")));
        }
    }
    Ok(())
}
