//! Truncated Fock spaces and the joint transmon-cavity space.

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::Result;

/// Truncated cavity Hilbert space: `d` computational levels plus guard levels
/// above them that absorb transient population.
///
/// All cavity operators are built on the full `n_levels = d + n_guard` space;
/// costs are evaluated on the computational block after projection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FockSpace {
    d: usize,
    n_guard: usize,
}

impl FockSpace {
    /// Space with an explicit guard-level count.
    pub fn with_guard(d: usize, n_guard: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::OutOfDomain {
                what: "computational dimension",
                value: 0.0,
            });
        }
        Ok(Self { d, n_guard })
    }

    /// Space with the default guard-level count `max(4, d)`.
    pub fn new(d: usize) -> Result<Self> {
        Self::with_guard(d, d.max(4))
    }

    /// Computational dimension `d`.
    pub fn d(&self) -> usize {
        self.d
    }

    /// Number of guard levels above the computational block.
    pub fn n_guard(&self) -> usize {
        self.n_guard
    }

    /// Total truncation dimension `d + n_guard`.
    pub fn n_levels(&self) -> usize {
        self.d + self.n_guard
    }
}

/// Two-level transmon tensored with a cavity [`FockSpace`].
///
/// Basis states are |q> (x) |n> with the qubit as the slow index: the joint
/// index is `q * n_levels + n`, with q = 0 for |g> and q = 1 for |e>.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct JointSpace {
    cavity: FockSpace,
}

impl JointSpace {
    pub fn new(cavity: FockSpace) -> Self {
        Self { cavity }
    }

    pub fn cavity(&self) -> FockSpace {
        self.cavity
    }

    /// Total dimension `2 * n_levels`.
    pub fn dim(&self) -> usize {
        2 * self.cavity.n_levels()
    }

    /// Joint index of |q> (x) |n>.
    pub fn index(&self, q: usize, n: usize) -> usize {
        debug_assert!(q < 2 && n < self.cavity.n_levels());
        q * self.cavity.n_levels() + n
    }
}
