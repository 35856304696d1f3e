//! Resource quantifiers: the parity monotone `A`, entanglement entropy and
//! perfect e-mode detection.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fock::density::{entropy_of, schmidt_entropy, trace_distance};
use crate::fock::{MixedState, ModeId, PureState};
use crate::locc::KrausSet;
use crate::ssr::{local_parity_expectation, parity_sector, ParitySector};

/// Trace-distance threshold for recognizing a perfect e-mode.
pub const EMODE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResourceReport {
    pub monotone_a: f64,
    pub entropy_bits: f64,
    pub extraction_bound: f64,
}

/// `A = <phi| P^party |phi>^2`; only defined for definite global parity.
pub fn siv_monotone(state: &PureState, party: &str) -> Result<f64> {
    if parity_sector(state) == ParitySector::Indefinite {
        return Err(Error::IndefiniteParity);
    }
    let e = local_parity_expectation(state, party)?;
    Ok((e * e).min(1.0))
}

/// Von Neumann entropy (bits) of the modes owned by `party`.
pub fn entanglement_entropy(state: &PureState, party: &str) -> Result<f64> {
    let modes = state.layout().party_modes(party)?;
    schmidt_entropy(state, &modes)
}

/// Upper bound `1 - A` on the probability of extracting a perfect e-mode.
pub fn emode_extraction_bound(state: &PureState, party: &str) -> Result<f64> {
    Ok(1.0 - siv_monotone(state, party)?)
}

pub fn resource_report(state: &PureState, party: &str) -> Result<ResourceReport> {
    let a = siv_monotone(state, party)?;
    Ok(ResourceReport { monotone_a: a, entropy_bits: entanglement_entropy(state, party)?, extraction_bound: 1.0 - a })
}

fn psi_plus_projector() -> DMatrix<Complex64> {
    let h = Complex64::new(0.5, 0.0);
    let mut m = DMatrix::zeros(4, 4);
    for (r, c) in [(1, 1), (1, 2), (2, 1), (2, 2)] {
        m[(r, c)] = h;
    }
    m
}

/// Trace distance of the reduced state on `(mode_a, mode_b)` from
/// `(|01> + |10>)/sqrt 2`.
pub fn emode_distance(state: &MixedState, mode_a: ModeId, mode_b: ModeId) -> Result<f64> {
    let layout = state.layout();
    layout.check(mode_a)?;
    layout.check(mode_b)?;
    if layout.party_of(mode_a) == layout.party_of(mode_b) {
        return Err(Error::InvalidArgument(format!(
            "modes `{}` and `{}` belong to the same party",
            layout.label(mode_a),
            layout.label(mode_b)
        )));
    }
    let rho = state.reduced_density(&[mode_a, mode_b])?;
    Ok(trace_distance(rho.matrix(), &psi_plus_projector()))
}

/// True when the pair is a perfect e-mode uncorrelated with everything
/// else (a reduced state this close to a pure state is itself nearly pure).
pub fn is_perfect_emode(state: &MixedState, mode_a: ModeId, mode_b: ModeId) -> Result<bool> {
    Ok(emode_distance(state, mode_a, mode_b)? <= EMODE_TOLERANCE)
}

pub fn is_perfect_emode_pure(state: &PureState, mode_a: ModeId, mode_b: ModeId) -> Result<bool> {
    is_perfect_emode(&MixedState::pure(state.clone()), mode_a, mode_b)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonotoneStep {
    pub before: f64,
    pub average_after: f64,
}

impl MonotoneStep {
    /// The average never drops below the initial value.
    pub fn holds(&self, tol: f64) -> bool {
        self.average_after >= self.before - tol
    }
}

/// `A` before a local measurement and its average `sum_i p_i A(phi_i)`
/// over the outcomes. Callers decide what to do with a violation.
pub fn average_monotone_after(state: &PureState, kraus: &KrausSet, party: &str) -> Result<MonotoneStep> {
    let before = siv_monotone(state, party)?;
    let mut average_after = 0.0;
    for m in kraus.elements() {
        let out = m.apply(state)?;
        let p = out.norm_sqr();
        if p < 1e-14 {
            continue;
        }
        average_after += p * siv_monotone(&out.normalize()?, party)?;
    }
    Ok(MonotoneStep { before, average_after })
}

/// Largest A|B entanglement entropy among the bosonic states obtained by
/// fixing the occupation of every fermionic mode. Zero certifies that the
/// bosonic modes carry no entanglement across the cut: the bosonic reduced
/// state is then a mixture of products.
pub fn bosonic_cross_cut_entropy(state: &PureState, party_a: &str, party_b: &str) -> Result<f64> {
    let layout = state.layout();
    let fermions = layout.fermion_mask();
    let bos_a = layout.party_mask(party_a)? & !fermions;
    let bos_b = layout.party_mask(party_b)? & !fermions;
    let others = layout.full_mask() & !fermions & !bos_a & !bos_b;
    if others != 0 {
        return Err(Error::InvalidArgument("bosonic modes outside the two parties".into()));
    }
    // fermionic configuration -> (A bosons, B bosons) -> amplitude
    let mut groups: BTreeMap<u64, BTreeMap<(u64, u64), Complex64>> = BTreeMap::new();
    for (k, a) in state.amplitudes() {
        groups.entry(k & fermions).or_default().insert((k & bos_a, k & bos_b), a);
    }
    let mut worst: f64 = 0.0;
    for g in groups.values() {
        let rows: Vec<u64> = g.keys().map(|k| k.0).collect::<std::collections::BTreeSet<_>>().into_iter().collect();
        let cols: Vec<u64> = g.keys().map(|k| k.1).collect::<std::collections::BTreeSet<_>>().into_iter().collect();
        if rows.len() == 1 || cols.len() == 1 {
            continue;
        }
        let mut m = DMatrix::<Complex64>::zeros(rows.len(), cols.len());
        for (&(ra, cb), &a) in g {
            let r = rows.binary_search(&ra).expect("row present");
            let c = cols.binary_search(&cb).expect("col present");
            m[(r, c)] = a;
        }
        let norm: f64 = g.values().map(|a| a.norm_sqr()).sum();
        let gram = if rows.len() <= cols.len() { &m * m.adjoint() } else { m.adjoint() * &m };
        let ev: Vec<f64> = SymmetricEigen::new(gram).eigenvalues.iter().map(|l| l / norm).collect();
        worst = worst.max(entropy_of(&ev));
    }
    Ok(worst)
}
