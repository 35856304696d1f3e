//! Teleporting Alice's half of a partial e-mode to Charlie through a
//! maximally entangled pair.

use std::sync::Arc;

use serde::Serialize;

use super::bell::{bell_projectors, phase_flip, ssr_bit_flip, BellKind};
use super::{local_fidelity, EModeParams};
use crate::error::Result;
use crate::fock::{Factor, MixedState, ModeId, ModeSpec, PureState, SystemLayout};
use crate::locc::{enumerate_branches, run_script, OperatorSpec, ProtocolScript, Step, TrialReport};

pub const BELL_REGISTER: &str = "bell";

/// Modes: Alice `a1, a2`, Bob `b`, Charlie `c` plus the flip ancilla `c_anc`.
/// `(a1, b)` holds the e-mode to teleport, `(a2, c)` the psi+ channel.
#[derive(Debug, Clone)]
pub struct TeleportSetup {
    pub layout: Arc<SystemLayout>,
    pub a1: ModeId,
    pub a2: ModeId,
    pub b: ModeId,
    pub c: ModeId,
    pub c_anc: ModeId,
    pub params: EModeParams,
    pub initial: PureState,
    pub script: ProtocolScript,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Correction {
    BitFlip,
    PhaseFlip,
}

/// Charlie's correction for each Bell outcome, applied left to right.
pub fn corrections(kind: BellKind) -> &'static [Correction] {
    match kind {
        BellKind::PsiPlus => &[Correction::PhaseFlip],
        BellKind::PsiMinus => &[],
        BellKind::PhiPlus => &[Correction::BitFlip, Correction::PhaseFlip],
        BellKind::PhiMinus => &[Correction::BitFlip],
    }
}

pub fn teleport_setup(params: EModeParams) -> Result<TeleportSetup> {
    let layout = Arc::new(SystemLayout::new(vec![
        ModeSpec::fermion("a1", "A"),
        ModeSpec::fermion("a2", "A"),
        ModeSpec::fermion("b", "B"),
        ModeSpec::fermion("c", "C"),
        ModeSpec::fermion("c_anc", "C"),
    ])?);
    let (a1, a2, b, c, c_anc) = (ModeId(0), ModeId(1), ModeId(2), ModeId(3), ModeId(4));
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let channel = Factor::new(vec![a2, c], &[("01", super::one() * h), ("10", super::one() * h)])?;
    let initial = PureState::product(&layout, &[params.factor(a1, b)?, channel])?;

    let bit = OperatorSpec::from_operator(&ssr_bit_flip(&layout, c, c_anc)?);
    let phase = OperatorSpec::from_operator(&phase_flip(&layout, c)?);
    let mut steps = vec![
        Step::Povm {
            party: "A".into(),
            register: BELL_REGISTER.into(),
            kraus: bell_projectors(&layout, a1, a2)?.iter().map(OperatorSpec::from_operator).collect(),
        },
        Step::ClassicalSend { from: "A".into(), to: "C".into(), register: BELL_REGISTER.into() },
    ];
    for kind in BellKind::ALL {
        let inner = corrections(kind)
            .iter()
            .map(|c| Step::LocalUnitary {
                party: "C".into(),
                op: match c {
                    Correction::BitFlip => bit.clone(),
                    Correction::PhaseFlip => phase.clone(),
                },
            })
            .collect();
        steps.push(Step::Conditional {
            party: "C".into(),
            register: BELL_REGISTER.into(),
            equals: kind.index() as u64,
            steps: inner,
        });
    }
    let script = ProtocolScript::new("teleport", steps);
    Ok(TeleportSetup { layout, a1, a2, b, c, c_anc, params, initial, script })
}

#[derive(Debug, Clone, Serialize)]
pub struct TeleportBranch {
    pub outcome: BellKind,
    pub probability: f64,
    pub message: String,
    pub corrections: Vec<Correction>,
    /// `|<target|final>|` on `(c, b)`.
    pub fidelity: f64,
    #[serde(skip)]
    pub trial: TrialReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct TeleportReport {
    pub alpha2: f64,
    pub branches: Vec<TeleportBranch>,
    pub total_probability: f64,
    pub min_fidelity: f64,
}

impl TeleportSetup {
    pub fn branch(&self, trial: TrialReport) -> Result<TeleportBranch> {
        let outcome = BellKind::from_index(trial.register(BELL_REGISTER).expect("bell outcome") as usize)
            .expect("bell index");
        let message = trial
            .steps
            .iter()
            .find_map(|s| s.message.clone())
            .unwrap_or_default();
        let fidelity = local_fidelity(&trial.final_state, &[self.c, self.b], &self.params.vector())?;
        Ok(TeleportBranch {
            outcome,
            probability: trial.probability,
            message,
            corrections: corrections(outcome).to_vec(),
            fidelity,
            trial,
        })
    }
}

/// All four Bell branches.
pub fn teleport(params: EModeParams) -> Result<TeleportReport> {
    let setup = teleport_setup(params)?;
    let trials = enumerate_branches(&setup.script, &MixedState::pure(setup.initial.clone()))?;
    let branches = trials.into_iter().map(|t| setup.branch(t)).collect::<Result<Vec<_>>>()?;
    Ok(TeleportReport {
        alpha2: params.alpha2(),
        total_probability: branches.iter().map(|b| b.probability).sum(),
        min_fidelity: branches.iter().map(|b| b.fidelity).fold(f64::INFINITY, f64::min),
        branches,
    })
}

/// One sampled run.
pub fn teleport_once(params: EModeParams, seed: u64) -> Result<TeleportBranch> {
    let setup = teleport_setup(params)?;
    let trial = run_script(&setup.script, &MixedState::pure(setup.initial.clone()), seed)?;
    setup.branch(trial)
}
