//! Direct-method selection: waiting time from the total propensity and the
//! channel from the cumulative sum.

use rand::Rng;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Step {
    /// Time to the next event and the index of the channel that fires.
    Fire { tau: f64, channel: usize },
    /// Total propensity is zero; nothing can happen.
    Quiescent,
}

/// Uniform variate on `(0, 1]`.
#[inline]
pub fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    1.0 - rng.random::<f64>()
}

/// One direct-method step over a propensity slice, scanning linearly.
pub fn ssa_step<R: Rng + ?Sized>(propensities: &[f64], rng: &mut R) -> Result<Step> {
    check_finite(propensities)?;
    if propensities.iter().sum::<f64>() <= 0.0 {
        return Ok(Step::Quiescent);
    }
    let u1 = open_unit(rng);
    let u2 = open_unit(rng);
    Ok(step_with(propensities, u1, u2))
}

/// Deterministic core of [`ssa_step`] for given uniforms `u1, u2 ∈ (0, 1]`.
pub fn step_with(propensities: &[f64], u1: f64, u2: f64) -> Step {
    let a0: f64 = propensities.iter().sum();
    if a0 <= 0.0 {
        return Step::Quiescent;
    }
    let target = u2 * a0;
    let mut acc = 0.0;
    let mut chosen = None;
    for (j, &a) in propensities.iter().enumerate() {
        acc += a;
        if a > 0.0 {
            chosen = Some(j);
            if acc >= target {
                break;
            }
        }
    }
    Step::Fire {
        tau: -u1.ln() / a0,
        channel: chosen.expect("a0 > 0 implies a positive channel"),
    }
}

fn check_finite(propensities: &[f64]) -> Result<()> {
    match propensities.iter().position(|a| !a.is_finite() || *a < 0.0) {
        Some(j) => Err(Error::Numeric {
            channel: format!("#{j}"),
            value: propensities[j],
        }),
        None => Ok(()),
    }
}

/// Complete binary tree of integer partial sums.
///
/// Channel weights are integer count products, so the sums are exact: an
/// incrementally maintained tree always equals a fresh build. Leaf updates
/// can be deferred with [`WeightTree::set_deferred`] and propagated in one
/// pass by [`WeightTree::flush`].
#[derive(Clone, Debug)]
pub struct WeightTree {
    capacity: usize,
    len: usize,
    nodes: Vec<u128>,
    dirty: Vec<usize>,
}

impl Default for WeightTree {
    fn default() -> Self {
        Self::new()
    }
}

impl WeightTree {
    pub fn new() -> Self {
        WeightTree {
            capacity: 1,
            len: 0,
            nodes: vec![0; 2],
            dirty: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Sum of all leaves. Pending deferred updates must be flushed first.
    pub fn total(&self) -> u128 {
        debug_assert!(self.dirty.is_empty());
        self.nodes[1]
    }

    pub fn get(&self, i: usize) -> u128 {
        self.nodes[self.capacity + i]
    }

    pub fn push(&mut self, value: u128) -> usize {
        if self.len == self.capacity {
            self.flush();
            self.grow();
        }
        let i = self.len;
        self.len += 1;
        self.set(i, value);
        i
    }

    fn grow(&mut self) {
        let old_cap = self.capacity;
        let cap = old_cap * 2;
        let mut nodes = vec![0; 2 * cap];
        nodes[cap..cap + old_cap].copy_from_slice(&self.nodes[old_cap..2 * old_cap]);
        self.capacity = cap;
        self.nodes = nodes;
        self.rebuild();
    }

    fn rebuild(&mut self) {
        for n in (1..self.capacity).rev() {
            self.nodes[n] = self.nodes[2 * n] + self.nodes[2 * n + 1];
        }
    }

    pub fn set(&mut self, i: usize, value: u128) {
        debug_assert!(i < self.len);
        let mut n = self.capacity + i;
        self.nodes[n] = value;
        while n > 1 {
            n /= 2;
            self.nodes[n] = self.nodes[2 * n] + self.nodes[2 * n + 1];
        }
    }

    /// Writes a leaf without updating its ancestors.
    pub fn set_deferred(&mut self, i: usize, value: u128) {
        debug_assert!(i < self.len);
        let n = self.capacity + i;
        if self.nodes[n] != value {
            self.nodes[n] = value;
            self.dirty.push(n);
        }
    }

    /// Propagates deferred leaf writes, rebuilding wholesale when most of
    /// the tree is affected.
    pub fn flush(&mut self) {
        if self.dirty.is_empty() {
            return;
        }
        let depth = self.capacity.trailing_zeros() as usize + 1;
        if self.dirty.len() * depth >= self.capacity {
            self.rebuild();
        } else {
            for k in 0..self.dirty.len() {
                let mut n = self.dirty[k];
                while n > 1 {
                    n /= 2;
                    self.nodes[n] = self.nodes[2 * n] + self.nodes[2 * n + 1];
                }
            }
        }
        self.dirty.clear();
    }

    /// Leaf holding the `target`-th unit of weight (1-based), i.e. the
    /// smallest index whose inclusive prefix sum reaches `target`, together
    /// with the remaining offset inside that leaf. `target` must lie in
    /// `1..=total`.
    pub fn select(&self, target: u128) -> (usize, u128) {
        debug_assert!(target >= 1 && target <= self.total());
        let mut n = 1;
        let mut rest = target;
        while n < self.capacity {
            let left = self.nodes[2 * n];
            if rest <= left {
                n *= 2;
            } else {
                rest -= left;
                n = 2 * n + 1;
            }
        }
        (n - self.capacity, rest)
    }
}
