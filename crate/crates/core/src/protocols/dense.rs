//! Dense coding with one shared psi+ pair: Alice encodes two bits locally,
//! hands her mode to Bob, and Bob reads them off with the two Bell
//! observables.

use std::sync::Arc;

use serde::Serialize;

use super::bell::{bell_operators, bell_state, phase_flip, ssr_bit_flip, BellKind};
use crate::error::{Error, Result};
use crate::fock::measure::spectral_projectors;
use crate::fock::{MixedState, ModeId, ModeSpec, PureState, SystemLayout};
use crate::locc::{enumerate_branches, run_script, OperatorSpec, ProtocolScript, Step, TrialReport};

/// Outcome index of each eigenvalue `-1, 0, +1` of `O1` and `O2`.
const EIGENVALUES: [i8; 3] = [-1, 0, 1];

/// Bell state Alice's encoding produces for a message.
pub fn encoded_state(bits: u8) -> Result<BellKind> {
    Ok(match bits {
        0b00 => BellKind::PsiPlus,
        0b01 => BellKind::PsiMinus,
        0b10 => BellKind::PhiPlus,
        0b11 => BellKind::PhiMinus,
        _ => return Err(Error::InvalidArgument(format!("message {bits} does not fit in two bits"))),
    })
}

fn message_of(kind: BellKind) -> u8 {
    (0u8..4).find(|&b| encoded_state(b).ok() == Some(kind)).expect("every Bell state encodes a message")
}

pub struct DenseCodingSetup {
    pub layout: Arc<SystemLayout>,
    pub a: ModeId,
    pub a_anc: ModeId,
    pub b: ModeId,
    pub initial: PureState,
}

pub fn dense_coding_setup() -> Result<DenseCodingSetup> {
    let layout = Arc::new(SystemLayout::new(vec![
        ModeSpec::fermion("a", "A"),
        ModeSpec::fermion("a_anc", "A"),
        ModeSpec::fermion("b", "B"),
    ])?);
    let (a, a_anc, b) = (ModeId(0), ModeId(1), ModeId(2));
    let initial = bell_state(&layout, BellKind::PsiPlus, a, b)?;
    Ok(DenseCodingSetup { layout, a, a_anc, b, initial })
}

/// Encoding, transfer of `a`, then Bob's `O1` and `O2` measurements into
/// registers `o1` and `o2`.
pub fn dense_coding_script(setup: &DenseCodingSetup, bits: u8) -> Result<ProtocolScript> {
    let l = &setup.layout;
    let flip = || -> Result<Step> {
        Ok(Step::LocalUnitary { party: "A".into(), op: OperatorSpec::from_operator(&ssr_bit_flip(l, setup.a, setup.a_anc)?) })
    };
    let phase = || -> Result<Step> {
        Ok(Step::LocalUnitary { party: "A".into(), op: OperatorSpec::from_operator(&phase_flip(l, setup.a)?) })
    };
    let mut steps = match encoded_state(bits)? {
        BellKind::PsiPlus => vec![],
        BellKind::PsiMinus => vec![phase()?],
        BellKind::PhiPlus => vec![flip()?],
        BellKind::PhiMinus => vec![flip()?, phase()?],
    };
    steps.push(Step::Transfer { mode: l.label(setup.a).to_string(), to: "B".into() });
    let (o1, o2) = bell_operators(l, setup.a, setup.b)?;
    for (register, op) in [("o1", o1), ("o2", o2)] {
        let projectors = spectral_projectors(&op)?;
        debug_assert_eq!(projectors.iter().map(|p| p.0.round() as i8).collect::<Vec<_>>(), EIGENVALUES);
        steps.push(Step::Povm {
            party: "B".into(),
            register: register.into(),
            kraus: projectors.iter().map(|(_, p)| OperatorSpec::from_operator(p)).collect(),
        });
    }
    Ok(ProtocolScript::new(format!("dense-coding-{bits:02b}"), steps))
}

/// Bob's reading of the two observables, if they identify a Bell state.
pub fn decode(trial: &TrialReport) -> Option<u8> {
    let o1 = EIGENVALUES[trial.register("o1")? as usize];
    let o2 = EIGENVALUES[trial.register("o2")? as usize];
    BellKind::from_eigenvalues(o1, o2).map(message_of)
}

#[derive(Debug, Clone, Serialize)]
pub struct DenseCodingOutcome {
    pub sent: u8,
    pub decoded: Option<u8>,
    pub probability: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DenseCodingReport {
    /// Every branch of every message.
    pub outcomes: Vec<DenseCodingOutcome>,
    /// Probability of a correct decoding, averaged over the four messages.
    pub success_probability: f64,
    /// Modes physically sent from Alice to Bob.
    pub modes_sent: usize,
}

pub fn dense_coding() -> Result<DenseCodingReport> {
    let setup = dense_coding_setup()?;
    let initial = MixedState::pure(setup.initial.clone());
    let mut outcomes = Vec::new();
    let mut success = 0.0;
    for bits in 0..4u8 {
        for t in enumerate_branches(&dense_coding_script(&setup, bits)?, &initial)? {
            let decoded = decode(&t);
            if decoded == Some(bits) {
                success += t.probability / 4.0;
            }
            outcomes.push(DenseCodingOutcome { sent: bits, decoded, probability: t.probability });
        }
    }
    Ok(DenseCodingReport { outcomes, success_probability: success, modes_sent: 1 })
}

/// One sampled transmission.
pub fn dense_coding_once(bits: u8, seed: u64) -> Result<DenseCodingOutcome> {
    let setup = dense_coding_setup()?;
    let t = run_script(&dense_coding_script(&setup, bits)?, &MixedState::pure(setup.initial.clone()), seed)?;
    Ok(DenseCodingOutcome { sent: bits, decoded: decode(&t), probability: t.probability })
}
