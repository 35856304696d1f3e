//! Multi-mode Fock space with occupancies in {0, 1}.
//!
//! Every basis vector is the ordered creation string
//! `(a_0^+)^{n_0} (a_1^+)^{n_1} ... |vac>` taken in layout order. An operator
//! declared on a subset `S` of modes is embedded by moving the creation
//! operators of `S` to the front of that string, acting with the local
//! matrix, and moving them back. The two reordering signs are what make
//! single fermionic mode operators carry their Jordan-Wigner string.

pub mod density;
pub mod io;
pub mod layout;
pub mod matrix;
pub mod measure;
pub mod operator;
pub mod state;

pub use density::{DensityMatrix, MixedState};
pub use layout::{ModeId, ModeSpec, Occupation, Statistics, SystemLayout};
pub use matrix::LocalMatrix;
pub use measure::{measure, outcome_branches, Observable, Outcome};
pub use operator::{LinearOperator, ModeOpKind};
pub use state::{Factor, PureState};

/// Largest layout that fits a `u64` basis key with headroom.
pub const MAX_MODES: usize = 62;

/// Largest operator support handled by [`LocalMatrix`].
pub const MAX_SUPPORT: usize = 16;

/// Amplitudes below this magnitude are dropped from state tables.
pub const PRUNE: f64 = 1e-14;

/// Tolerance for normalization, hermiticity, completeness and similar checks.
pub const TOL: f64 = 1e-10;

/// Parity of the number of transpositions needed to move the occupied
/// fermionic modes of `sub` in front of all other occupied fermionic modes,
/// preserving relative order inside each group.
pub(crate) fn reorder_parity(key: u64, sub: u64, fermions: u64) -> bool {
    let mut occ = key & fermions;
    let mut others = 0u32;
    let mut parity = 0u32;
    while occ != 0 {
        let bit = 1u64 << (63 - occ.leading_zeros());
        if sub & bit != 0 {
            parity += others;
        } else {
            others += 1;
        }
        occ &= !bit;
    }
    parity & 1 == 1
}

pub(crate) fn sign(odd: bool) -> f64 {
    if odd {
        -1.0
    } else {
        1.0
    }
}

/// Maps between a global key and the local index over an ordered subset of
/// bit positions (first entry = most significant local bit).
#[derive(Debug, Clone)]
pub(crate) struct Subset {
    bits: Vec<u64>,
    mask: u64,
}

impl Subset {
    pub(crate) fn new(bits: Vec<u64>) -> Self {
        let mask = bits.iter().fold(0, |m, b| m | b);
        Subset { bits, mask }
    }

    pub(crate) fn of(layout: &SystemLayout, ids: &[ModeId]) -> Self {
        Subset::new(ids.iter().map(|&id| layout.bit(id)).collect())
    }

    pub(crate) fn mask(&self) -> u64 {
        self.mask
    }

    pub(crate) fn extract(&self, key: u64) -> usize {
        let k = self.bits.len();
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| key & b != 0)
            .fold(0usize, |idx, (j, _)| idx | 1 << (k - 1 - j))
    }

    pub(crate) fn deposit(&self, local: usize) -> u64 {
        let k = self.bits.len();
        self.bits
            .iter()
            .enumerate()
            .filter(|(j, _)| local >> (k - 1 - j) & 1 == 1)
            .fold(0u64, |key, (_, &b)| key | b)
    }
}
