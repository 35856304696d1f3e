//! Script execution: seeded sampling of one branch, or exhaustive
//! enumeration of all branches.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::script::{compile, Compiled, ProtocolScript};
use crate::error::{Error, Result};
use crate::fock::{MixedState, PureState, SystemLayout};
use crate::ssr::{local_parity_expectation, parity_sector, ParitySector};

/// Enumeration aborts beyond this many live branches.
pub const MAX_BRANCHES: usize = 100_000;

/// Kraus outcomes below this probability are dropped.
const MIN_PROBABILITY: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartyMonotone {
    pub party: String,
    pub before: Option<f64>,
    pub after: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepRecord {
    pub path: String,
    pub kind: String,
    pub party: Option<String>,
    /// Kraus index for measurements, 1/0 for taken/skipped conditionals.
    pub outcome: Option<usize>,
    /// Probability of `outcome` given everything before this step.
    pub probability: f64,
    pub message: Option<String>,
    pub monotone: Vec<PartyMonotone>,
    pub parity: ParitySector,
}

#[derive(Debug, Clone, Serialize)]
pub struct TrialReport {
    pub script: String,
    pub seed: Option<u64>,
    /// Ensemble member of a mixed initial state.
    pub member: usize,
    /// Weight of this branch (member weight times outcome probabilities).
    pub probability: f64,
    pub registers: BTreeMap<String, u64>,
    pub steps: Vec<StepRecord>,
    pub final_parity: ParitySector,
    #[serde(skip)]
    pub final_state: PureState,
}

impl TrialReport {
    /// Outcome recorded for `register`, if it was set on this branch.
    pub fn register(&self, register: &str) -> Option<u64> {
        self.registers.get(register).copied()
    }
}

/// `A = <P^party>^2` for every party, `None` when the state has no definite
/// global parity.
fn monotones(state: &PureState) -> Vec<(String, Option<f64>)> {
    let definite = parity_sector(state) != ParitySector::Indefinite;
    state
        .layout()
        .parties()
        .into_iter()
        .map(|p| {
            let a = definite.then(|| local_parity_expectation(state, &p).map(|e| e * e).ok()).flatten();
            (p, a)
        })
        .collect()
}

#[derive(Clone)]
struct Branch {
    state: PureState,
    probability: f64,
    registers: BTreeMap<String, u64>,
    records: Vec<StepRecord>,
    expected: ParitySector,
}

enum Chooser {
    All,
    Sample(ChaCha8Rng),
}

struct Engine {
    chooser: Chooser,
    live: usize,
}

fn flip(sector: ParitySector, sign: i8) -> ParitySector {
    match sector.value() {
        Some(v) => ParitySector::from_value(v * sign),
        None => ParitySector::Indefinite,
    }
}

impl Engine {
    fn record(
        branch: &mut Branch,
        path: &str,
        kind: &str,
        party: Option<&str>,
        outcome: Option<usize>,
        probability: f64,
        message: Option<String>,
        before: Vec<(String, Option<f64>)>,
    ) -> Result<()> {
        let parity = parity_sector(&branch.state);
        if branch.expected != ParitySector::Indefinite && parity != branch.expected {
            return Err(Error::ParityDrift(path.to_string()));
        }
        let after = monotones(&branch.state);
        let monotone = before
            .into_iter()
            .zip(after)
            .map(|((party, before), (_, after))| PartyMonotone { party, before, after })
            .collect();
        branch.records.push(StepRecord {
            path: path.to_string(),
            kind: kind.to_string(),
            party: party.map(str::to_string),
            outcome,
            probability,
            message,
            monotone,
            parity,
        });
        Ok(())
    }

    fn run(&mut self, steps: &[(String, Compiled)], branch: Branch) -> Result<Vec<Branch>> {
        let mut current = vec![branch];
        for (path, step) in steps {
            let mut next = Vec::with_capacity(current.len());
            for b in current {
                next.extend(self.step(path, step, b)?);
            }
            current = next;
        }
        Ok(current)
    }

    fn step(&mut self, path: &str, step: &Compiled, mut b: Branch) -> Result<Vec<Branch>> {
        let before = monotones(&b.state);
        match step {
            Compiled::Unitary { party, op } => {
                b.state = op.apply(&b.state)?.normalize()?;
                Self::record(&mut b, path, step.kind(), Some(party), None, 1.0, None, before)?;
                Ok(vec![b])
            }
            Compiled::Povm { party, register, elements, signs } => {
                let mut outcomes = Vec::with_capacity(elements.len());
                for (i, m) in elements.iter().enumerate() {
                    let s = m.apply(&b.state)?;
                    let p = s.norm_sqr();
                    if p >= MIN_PROBABILITY {
                        outcomes.push((i, p, s));
                    }
                }
                let chosen: Vec<(usize, f64, PureState)> = match &mut self.chooser {
                    Chooser::All => outcomes,
                    Chooser::Sample(rng) => {
                        let total: f64 = outcomes.iter().map(|o| o.1).sum();
                        let mut u = rng.random::<f64>() * total;
                        let last = outcomes.len() - 1;
                        let pick = outcomes
                            .iter()
                            .position(|o| {
                                let hit = u < o.1;
                                u -= o.1;
                                hit
                            })
                            .unwrap_or(last);
                        vec![outcomes.swap_remove(pick)]
                    }
                };
                self.live += chosen.len().saturating_sub(1);
                if self.live > MAX_BRANCHES {
                    return Err(Error::BranchExplosion(MAX_BRANCHES));
                }
                let mut out = Vec::with_capacity(chosen.len());
                for (i, p, s) in chosen {
                    let mut nb = b.clone();
                    nb.state = s.normalize()?;
                    nb.probability *= p;
                    nb.expected = flip(b.expected, signs[i].value());
                    nb.registers.insert(register.clone(), i as u64);
                    Self::record(&mut nb, path, step.kind(), Some(party), Some(i), p, None, before.clone())?;
                    out.push(nb);
                }
                Ok(out)
            }
            Compiled::Send { from, to, register, width } => {
                let v = b.registers[register];
                let msg = format!("{from}->{to} {register}={v:0width$b}");
                Self::record(&mut b, path, step.kind(), Some(from), None, 1.0, Some(msg), before)?;
                Ok(vec![b])
            }
            Compiled::Conditional { party, register, equals, steps } => {
                let taken = b.registers.get(register) == Some(equals);
                Self::record(&mut b, path, step.kind(), Some(party), Some(taken as usize), 1.0, None, before)?;
                if taken {
                    self.run(steps, b)
                } else {
                    Ok(vec![b])
                }
            }
            Compiled::Transfer { mode, to } => {
                b.state = b.state.transfer_mode(*mode, to)?;
                Self::record(&mut b, path, step.kind(), Some(to), None, 1.0, None, before)?;
                Ok(vec![b])
            }
        }
    }
}

fn execute(
    script: &ProtocolScript,
    initial: &MixedState,
    mut chooser: Chooser,
    seed: Option<u64>,
) -> Result<Vec<TrialReport>> {
    let layout: &Arc<SystemLayout> = initial.layout();
    let compiled = compile(script, layout)?;
    let members: Vec<(usize, f64, PureState)> = match &mut chooser {
        Chooser::All => initial.members().iter().enumerate().map(|(i, (p, s))| (i, *p, s.clone())).collect(),
        Chooser::Sample(rng) => {
            let mut u = rng.random::<f64>();
            let m = initial.members();
            let mut pick = m.len() - 1;
            for (i, (p, _)) in m.iter().enumerate() {
                if u < *p {
                    pick = i;
                    break;
                }
                u -= p;
            }
            vec![(pick, 1.0, m[pick].1.clone())]
        }
    };
    let mut engine = Engine { chooser, live: members.len() };
    let mut reports = Vec::new();
    for (member, weight, state) in members {
        let expected = parity_sector(&state);
        let branch = Branch { state, probability: weight, registers: BTreeMap::new(), records: Vec::new(), expected };
        for b in engine.run(&compiled, branch)? {
            reports.push(TrialReport {
                script: script.name.clone(),
                seed,
                member,
                probability: b.probability,
                registers: b.registers,
                steps: b.records,
                final_parity: parity_sector(&b.state),
                final_state: b.state,
            });
        }
    }
    Ok(reports)
}

/// Samples one branch. A mixed initial state first draws an ensemble member.
/// The same seed always produces the same report.
pub fn run_script(script: &ProtocolScript, initial: &MixedState, seed: u64) -> Result<TrialReport> {
    let rng = ChaCha8Rng::seed_from_u64(seed);
    let mut reports = execute(script, initial, Chooser::Sample(rng), Some(seed))?;
    Ok(reports.pop().expect("sampling yields exactly one branch"))
}

/// Every branch with nonzero probability, in depth-first outcome order.
pub fn enumerate_branches(script: &ProtocolScript, initial: &MixedState) -> Result<Vec<TrialReport>> {
    execute(script, initial, Chooser::All, None)
}

#[cfg(test)]
mod tests {
    use num_complex::Complex64;

    use super::*;
    use crate::fock::{ModeSpec, SystemLayout};
    use crate::locc::script::{OperatorSpec, Step};

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    fn setup() -> (Arc<SystemLayout>, PureState) {
        let l = Arc::new(SystemLayout::new(vec![ModeSpec::fermion("a", "A"), ModeSpec::fermion("b", "B")]).unwrap());
        let s = PureState::from_bitstrings(&l, &[("01", c(0.6)), ("10", c(0.8))]).unwrap();
        (l, s)
    }

    fn number_povm(mode: &str) -> Vec<OperatorSpec> {
        vec![
            OperatorSpec { modes: vec![mode.into()], entries: vec![(0, 0, 1.0, 0.0)] },
            OperatorSpec { modes: vec![mode.into()], entries: vec![(1, 1, 1.0, 0.0)] },
        ]
    }

    fn script() -> ProtocolScript {
        ProtocolScript::new(
            "measure-and-tell",
            vec![
                Step::Povm { party: "A".into(), register: "n".into(), kraus: number_povm("a") },
                Step::ClassicalSend { from: "A".into(), to: "B".into(), register: "n".into() },
                Step::Conditional {
                    party: "B".into(),
                    register: "n".into(),
                    equals: 0,
                    steps: vec![Step::LocalUnitary {
                        party: "B".into(),
                        op: OperatorSpec { modes: vec!["b".into()], entries: vec![(0, 0, 1.0, 0.0), (1, 1, -1.0, 0.0)] },
                    }],
                },
            ],
        )
    }

    #[test]
    fn enumeration_weights_and_monotone() {
        let (_, s) = setup();
        let reports = enumerate_branches(&script(), &MixedState::pure(s)).unwrap();
        assert_eq!(reports.len(), 2);
        let total: f64 = reports.iter().map(|r| r.probability).sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!((reports[0].probability - 0.36).abs() < 1e-12);
        let first = &reports[0].steps[0].monotone[0];
        assert_eq!(first.party, "A");
        assert!((first.before.unwrap() - 0.0784).abs() < 1e-12);
        assert!((first.after.unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(reports[0].steps.len(), 4);
        assert_eq!(reports[1].steps.len(), 3);
        assert_eq!(reports[0].steps[1].message.as_deref(), Some("A->B n=0"));
    }

    #[test]
    fn sampling_is_deterministic() {
        let (_, s) = setup();
        let m = MixedState::pure(s);
        let a = serde_json::to_string(&run_script(&script(), &m, 11).unwrap()).unwrap();
        let b = serde_json::to_string(&run_script(&script(), &m, 11).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn empty_script_keeps_state() {
        let (_, s) = setup();
        let r = run_script(&ProtocolScript::new("empty", vec![]), &MixedState::pure(s.clone()), 1).unwrap();
        assert!(r.final_state.overlap(&s).unwrap() > 1.0 - 1e-15);
        assert_eq!(r.probability, 1.0);
    }

    #[test]
    fn sampling_frequencies_follow_branch_weights() {
        let (_, s) = setup();
        let m = MixedState::pure(s);
        let trials = 10_000;
        let zeros = (0..trials).filter(|&t| run_script(&script(), &m, t).unwrap().register("n") == Some(0)).count();
        let expected = 0.36 * trials as f64;
        let chi2 = (zeros as f64 - expected).powi(2) / expected
            + ((trials as usize - zeros) as f64 - (trials as f64 - expected)).powi(2) / (trials as f64 - expected);
        // one degree of freedom, 99.9% quantile
        assert!(chi2 < 10.83, "chi2 = {chi2}");
    }
}
