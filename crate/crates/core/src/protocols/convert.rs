//! Reference-assisted conversion between a bosonic and a fermionic e-mode.
//!
//! A shared fermionic reference `(|0x> + |1 not-x>)/sqrt 2` lets each party
//! trade a bosonic excitation for a fermionic one while flipping its half
//! of the reference. Both halves flip together, which leaves the reference
//! as it was, so one reference serves any number of conversions.

use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use super::one;
use crate::error::{Error, Result};
use crate::fock::{Factor, LinearOperator, MixedState, ModeId, ModeSpec, PureState, SystemLayout};
use crate::locc::{enumerate_branches, OperatorSpec, ProtocolScript, Step};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Reference {
    /// `|00> + |11>`
    X0,
    /// `|01> + |10>`
    X1,
    /// Equal mixture of the two.
    Mixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    BosonToFermion,
    FermionToBoson,
}

/// One conversion site: an ancilla and a boson on each side.
#[derive(Debug, Clone, Copy)]
pub struct Slot {
    pub anc_a: ModeId,
    pub bos_a: ModeId,
    pub anc_b: ModeId,
    pub bos_b: ModeId,
}

#[derive(Debug, Clone)]
pub struct ConversionSetup {
    pub layout: Arc<SystemLayout>,
    pub ref_a: ModeId,
    pub ref_b: ModeId,
    pub slots: Vec<Slot>,
}

/// Alice holds `ref_a` then `(anc_i_a, bos_i_a)` per slot, Bob the same.
pub fn conversion_setup(slots: usize) -> Result<ConversionSetup> {
    if slots == 0 {
        return Err(Error::InvalidArgument("need at least one conversion slot".into()));
    }
    let mut specs = Vec::new();
    for (p, s) in [("A", "a"), ("B", "b")] {
        specs.push(ModeSpec::fermion(format!("ref_{s}"), p));
        for i in 1..=slots {
            specs.push(ModeSpec::fermion(format!("anc{i}_{s}"), p));
            specs.push(ModeSpec::boson(format!("bos{i}_{s}"), p));
        }
    }
    let layout = Arc::new(SystemLayout::new(specs)?);
    let width = 1 + 2 * slots;
    let slots = (0..slots)
        .map(|i| Slot {
            anc_a: ModeId(1 + 2 * i),
            bos_a: ModeId(2 + 2 * i),
            anc_b: ModeId(width + 1 + 2 * i),
            bos_b: ModeId(width + 2 + 2 * i),
        })
        .collect();
    Ok(ConversionSetup { layout, ref_a: ModeId(0), ref_b: ModeId(width), slots })
}

fn half() -> Complex64 {
    one() * std::f64::consts::FRAC_1_SQRT_2
}

/// The reference pair as one or two ensemble members.
pub fn reference_state(setup: &ConversionSetup, reference: Reference) -> Result<Vec<(f64, Factor)>> {
    let pair = |x: bool| -> Result<Factor> {
        let (t0, t1) = if x { ("01", "10") } else { ("00", "11") };
        Factor::new(vec![setup.ref_a, setup.ref_b], &[(t0, half()), (t1, half())])
    };
    Ok(match reference {
        Reference::X0 => vec![(1.0, pair(false)?)],
        Reference::X1 => vec![(1.0, pair(true)?)],
        Reference::Mixed => vec![(0.5, pair(false)?), (0.5, pair(true)?)],
    })
}

/// Bosonic e-mode with empty/filled ancillas, or fermionic e-mode on the
/// ancillas with the boson parked on Bob's side.
fn slot_factors(slot: &Slot, fermionic: bool) -> Result<Vec<Factor>> {
    let e = [("01", half()), ("10", half())];
    Ok(if fermionic {
        vec![Factor::new(vec![slot.anc_a, slot.anc_b], &e)?, Factor::new(vec![slot.bos_a, slot.bos_b], &[("01", one())])?]
    } else {
        vec![Factor::new(vec![slot.bos_a, slot.bos_b], &e)?, Factor::new(vec![slot.anc_a, slot.anc_b], &[("01", one())])?]
    })
}

/// State with the reference member and each slot in the given form.
pub fn slot_state(setup: &ConversionSetup, reference: &Factor, fermionic: &[bool]) -> Result<PureState> {
    let mut factors = vec![reference.clone()];
    for (slot, &f) in setup.slots.iter().zip(fermionic) {
        factors.extend(slot_factors(slot, f)?);
    }
    PureState::product(&setup.layout, &factors)
}

/// Alice's and Bob's boson-to-fermion maps on one slot, local order
/// `(anc, ref, bos)`.
pub fn conversion_unitaries(setup: &ConversionSetup, slot: &Slot) -> Result<(LinearOperator, LinearOperator)> {
    let l = &setup.layout;
    let alice = LinearOperator::embed_local_map(
        l,
        "A",
        &[slot.anc_a, setup.ref_a, slot.bos_a],
        // sign fixed by the creation-order convention
        &[("001", one(), "110"), ("110", one(), "001"), ("011", -one(), "100"), ("100", -one(), "011")],
    )?;
    let bob = LinearOperator::embed_local_map(
        l,
        "B",
        &[slot.anc_b, setup.ref_b, slot.bos_b],
        &[("100", one(), "011"), ("011", one(), "100"), ("110", one(), "001"), ("001", one(), "110")],
    )?;
    Ok((alice, bob))
}

/// The two local unitaries for one slot; the reverse direction uses their
/// adjoints.
pub fn conversion_script(setup: &ConversionSetup, slot: usize, direction: Direction) -> Result<ProtocolScript> {
    let s = setup
        .slots
        .get(slot)
        .ok_or_else(|| Error::InvalidArgument(format!("no conversion slot {slot}")))?;
    let (a, b) = conversion_unitaries(setup, s)?;
    let (a, b) = match direction {
        Direction::BosonToFermion => (a, b),
        Direction::FermionToBoson => (a.adjoint(), b.adjoint()),
    };
    Ok(ProtocolScript::new(
        format!("convert-slot{}", slot + 1),
        vec![
            Step::LocalUnitary { party: "A".into(), op: OperatorSpec::from_operator(&a) },
            Step::LocalUnitary { party: "B".into(), op: OperatorSpec::from_operator(&b) },
        ],
    ))
}

#[derive(Debug, Clone, Serialize)]
pub struct ConversionStep {
    pub slot: usize,
    /// Smallest `|<target|final>|` over the reference members.
    pub fidelity: f64,
    /// Trace distance of the reference pair from its initial state.
    pub reference_change: f64,
    pub probability: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConversionReport {
    pub reference: Reference,
    pub direction: Direction,
    pub steps: Vec<ConversionStep>,
    pub min_fidelity: f64,
}

/// Converts every slot in turn with the same reference.
pub fn convert(reference: Reference, direction: Direction, slots: usize) -> Result<ConversionReport> {
    let setup = conversion_setup(slots)?;
    let start_fermionic = direction == Direction::FermionToBoson;
    let members = reference_state(&setup, reference)?;
    let mut forms = vec![start_fermionic; slots];
    let mut current = MixedState::new(
        members
            .iter()
            .map(|(p, r)| Ok((*p, slot_state(&setup, r, &forms)?)))
            .collect::<Result<Vec<_>>>()?,
    )?;
    let ref_modes = [setup.ref_a, setup.ref_b];
    let ref_before = current.reduced_density(&ref_modes)?;
    let mut steps = Vec::new();
    for i in 0..slots {
        let script = conversion_script(&setup, i, direction)?;
        let branches = enumerate_branches(&script, &current)?;
        forms[i] = !start_fermionic;
        let mut fidelity = f64::INFINITY;
        let mut next = Vec::new();
        for t in branches.iter() {
            let target = slot_state(&setup, &members[t.member].1, &forms)?;
            fidelity = fidelity.min(target.inner(&t.final_state)?.norm());
            next.push((t.probability, t.final_state.clone()));
        }
        let probability = branches.iter().map(|t| t.probability).sum();
        current = MixedState::new(next)?;
        let reference_change = current.reduced_density(&ref_modes)?.trace_distance(&ref_before)?;
        steps.push(ConversionStep { slot: i + 1, fidelity, reference_change, probability });
    }
    Ok(ConversionReport {
        reference,
        direction,
        min_fidelity: steps.iter().map(|s| s.fidelity).fold(f64::INFINITY, f64::min),
        steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ssr::{classify_local_op, AncillaSign};

    #[test]
    fn conversion_is_exact_for_every_reference() {
        for reference in [Reference::X0, Reference::X1, Reference::Mixed] {
            for direction in [Direction::BosonToFermion, Direction::FermionToBoson] {
                let r = convert(reference, direction, 1).unwrap();
                let s = &r.steps[0];
                assert!(s.fidelity > 1.0 - 1e-12, "{reference:?} {direction:?}: {}", s.fidelity);
                assert!(s.reference_change < 1e-12);
                assert!((s.probability - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn reference_is_reused() {
        let r = convert(Reference::Mixed, Direction::BosonToFermion, 2).unwrap();
        assert_eq!(r.steps.len(), 2);
        assert!(r.min_fidelity > 1.0 - 1e-12);
        assert!(r.steps.iter().all(|s| s.reference_change < 1e-12));
    }

    #[test]
    fn maps_are_parity_preserving() {
        let setup = conversion_setup(1).unwrap();
        let (a, b) = conversion_unitaries(&setup, &setup.slots[0]).unwrap();
        assert!(a.is_unitary(1e-15) && b.is_unitary(1e-15));
        assert_eq!(classify_local_op(&a, "A").unwrap(), AncillaSign::Plus);
        assert_eq!(classify_local_op(&b, "B").unwrap(), AncillaSign::Plus);
    }
}
