//! Serializable protocol scripts and their validation.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::kraus::completeness_deviation;
use crate::error::{Error, Result};
use crate::fock::{LinearOperator, LocalMatrix, ModeId, SystemLayout, TOL};
use crate::ssr::{check_ssr_operator, classify_local_op, AncillaSign};

pub const SCRIPT_FORMAT: &str = "fermode-script";
pub const SCRIPT_VERSION: u32 = 1;

/// Operator written against mode labels. `entries` are `(row, col, re, im)`
/// over the local basis of `modes` in the listed order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorSpec {
    pub modes: Vec<String>,
    pub entries: Vec<(usize, usize, f64, f64)>,
}

impl OperatorSpec {
    pub fn from_operator(op: &LinearOperator) -> Self {
        let layout = op.layout();
        OperatorSpec {
            modes: op.support().iter().map(|&m| layout.label(m).to_string()).collect(),
            entries: op.matrix().entries().map(|(r, c, v)| (r, c, v.re, v.im)).collect(),
        }
    }

    pub fn to_operator(&self, layout: &Arc<SystemLayout>) -> Result<LinearOperator> {
        let modes = self.modes.iter().map(|l| layout.mode(l)).collect::<Result<Vec<ModeId>>>()?;
        let dim = 1usize << modes.len();
        if let Some(&(r, c, _, _)) = self.entries.iter().find(|&&(r, c, _, _)| r >= dim || c >= dim) {
            return Err(Error::DimensionMismatch(format!("entry ({r}, {c}) outside a {dim}-dimensional matrix")));
        }
        let m = LocalMatrix::from_entries(dim, self.entries.iter().map(|&(r, c, re, im)| (r, c, Complex64::new(re, im))));
        LinearOperator::from_local(layout, &modes, m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "step", rename_all = "snake_case")]
pub enum Step {
    /// Parity-preserving unitary on modes of `party`.
    LocalUnitary { party: String, op: OperatorSpec },
    /// Generalized measurement by `party`; the outcome index is stored in
    /// `register`, known to `party` only.
    Povm { party: String, register: String, kraus: Vec<OperatorSpec> },
    /// Copies a register from one party to another.
    ClassicalSend { from: String, to: String, register: String },
    /// Runs `steps` when `register` (known to `party`) equals `equals`.
    Conditional { party: String, register: String, equals: u64, steps: Vec<Step> },
    /// Hands a mode to another party.
    Transfer { mode: String, to: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolScript {
    pub format: String,
    pub version: u32,
    pub name: String,
    pub steps: Vec<Step>,
}

impl ProtocolScript {
    pub fn new(name: impl Into<String>, steps: Vec<Step>) -> Self {
        ProtocolScript { format: SCRIPT_FORMAT.into(), version: SCRIPT_VERSION, name: name.into(), steps }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let s: ProtocolScript = serde_json::from_str(text)?;
        if s.format != SCRIPT_FORMAT || s.version != SCRIPT_VERSION {
            return Err(Error::Format(format!("unsupported script {} v{}", s.format, s.version)));
        }
        Ok(s)
    }
}

/// Script with operators resolved against a layout.
#[derive(Debug, Clone)]
pub(crate) enum Compiled {
    Unitary { party: String, op: LinearOperator },
    Povm { party: String, register: String, elements: Vec<LinearOperator>, signs: Vec<AncillaSign> },
    Send { from: String, to: String, register: String, width: usize },
    Conditional { party: String, register: String, equals: u64, steps: Vec<(String, Compiled)> },
    Transfer { mode: ModeId, to: String },
}

impl Compiled {
    pub(crate) fn kind(&self) -> &'static str {
        match self {
            Compiled::Unitary { .. } => "local_unitary",
            Compiled::Povm { .. } => "povm",
            Compiled::Send { .. } => "classical_send",
            Compiled::Conditional { .. } => "conditional",
            Compiled::Transfer { .. } => "transfer",
        }
    }
}

struct Checker {
    issues: Vec<String>,
    // number of outcomes of every register seen so far
    widths: BTreeMap<String, usize>,
}

fn bits_for(outcomes: usize) -> usize {
    (usize::BITS - outcomes.saturating_sub(1).leading_zeros()).max(1) as usize
}

impl Checker {
    fn issue(&mut self, path: &str, msg: impl std::fmt::Display) {
        self.issues.push(format!("step {path}: {msg}"));
    }

    fn local(&mut self, path: &str, layout: &Arc<SystemLayout>, party: &str, op: &LinearOperator) -> bool {
        match classify_local_op(&op.rebind(layout).expect("same basis"), party) {
            Ok(_) => true,
            Err(Error::NotSsrImplementable(_)) => {
                self.issue(path, format!("SSR violation, operator on `{party}` mixes parity sectors"));
                false
            }
            Err(e) => {
                self.issue(path, e);
                false
            }
        }
    }

    fn steps(
        &mut self,
        prefix: &str,
        steps: &[Step],
        layout: &mut Arc<SystemLayout>,
        known: &mut BTreeMap<String, BTreeSet<String>>,
        nested: bool,
    ) -> Vec<(String, Compiled)> {
        let mut out = Vec::new();
        for (i, step) in steps.iter().enumerate() {
            let path = if prefix.is_empty() { i.to_string() } else { format!("{prefix}.{i}") };
            if let Some(c) = self.step(&path, step, layout, known, nested) {
                out.push((path, c));
            }
        }
        out
    }

    fn party(&mut self, path: &str, layout: &SystemLayout, party: &str) -> bool {
        if layout.has_party(party) {
            true
        } else {
            self.issue(path, format!("unknown party `{party}`"));
            false
        }
    }

    fn step(
        &mut self,
        path: &str,
        step: &Step,
        layout: &mut Arc<SystemLayout>,
        known: &mut BTreeMap<String, BTreeSet<String>>,
        nested: bool,
    ) -> Option<Compiled> {
        match step {
            Step::LocalUnitary { party, op } => {
                if !self.party(path, layout, party) {
                    return None;
                }
                let op = match op.to_operator(layout) {
                    Ok(op) => op,
                    Err(e) => {
                        self.issue(path, e);
                        return None;
                    }
                };
                if !self.local(path, layout, party, &op) {
                    return None;
                }
                let mut ok = true;
                if !check_ssr_operator(&op, TOL) {
                    self.issue(path, "SSR violation, unitary changes the local parity (route it through an ancilla)");
                    ok = false;
                }
                let dev = op.unitarity_deviation();
                if dev > TOL {
                    self.issue(path, Error::NotUnitary(dev));
                    ok = false;
                }
                ok.then(|| Compiled::Unitary { party: party.clone(), op })
            }
            Step::Povm { party, register, kraus } => {
                if !self.party(path, layout, party) {
                    return None;
                }
                if kraus.is_empty() {
                    self.issue(path, "measurement without Kraus elements");
                    return None;
                }
                let mut elements = Vec::new();
                let mut signs = Vec::new();
                let mut ok = true;
                for (j, spec) in kraus.iter().enumerate() {
                    match spec.to_operator(layout) {
                        Ok(op) => {
                            if self.local(&format!("{path} element {j}"), layout, party, &op) {
                                signs.push(classify_local_op(&op.rebind(layout).unwrap(), party).unwrap());
                            } else {
                                ok = false;
                            }
                            elements.push(op);
                        }
                        Err(e) => {
                            self.issue(path, e);
                            ok = false;
                        }
                    }
                }
                if ok {
                    match completeness_deviation(layout, &elements) {
                        Ok(dev) if dev > TOL => {
                            self.issue(path, Error::IncompleteKraus(dev));
                            ok = false;
                        }
                        Ok(_) => {}
                        Err(e) => {
                            self.issue(path, e);
                            ok = false;
                        }
                    }
                }
                known.entry(party.clone()).or_default().insert(register.clone());
                self.widths.insert(register.clone(), kraus.len());
                ok.then(|| Compiled::Povm { party: party.clone(), register: register.clone(), elements, signs })
            }
            Step::ClassicalSend { from, to, register } => {
                if !(self.party(path, layout, from) & self.party(path, layout, to)) {
                    return None;
                }
                if !known.get(from).is_some_and(|k| k.contains(register)) {
                    self.issue(path, format!("`{from}` sends register `{register}` it does not hold"));
                    return None;
                }
                known.entry(to.clone()).or_default().insert(register.clone());
                let width = bits_for(self.widths[register]);
                Some(Compiled::Send { from: from.clone(), to: to.clone(), register: register.clone(), width })
            }
            Step::Conditional { party, register, equals, steps } => {
                if !self.party(path, layout, party) {
                    return None;
                }
                if !known.get(party).is_some_and(|k| k.contains(register)) {
                    self.issue(path, format!("`{party}` conditions on register `{register}` it has not received"));
                    return None;
                }
                // registers set inside the branch stay inside it
                let mut inner_known = known.clone();
                let before = self.issues.len();
                let inner = self.steps(path, steps, layout, &mut inner_known, true);
                (self.issues.len() == before).then(|| Compiled::Conditional {
                    party: party.clone(),
                    register: register.clone(),
                    equals: *equals,
                    steps: inner,
                })
            }
            Step::Transfer { mode, to } => {
                if nested {
                    self.issue(path, "transfers inside conditional steps are not supported");
                    return None;
                }
                let id = match layout.mode(mode) {
                    Ok(id) => id,
                    Err(e) => {
                        self.issue(path, e);
                        return None;
                    }
                };
                if !self.party(path, layout, to) {
                    return None;
                }
                *layout = Arc::new(layout.with_party(id, to).expect("checked mode and party"));
                Some(Compiled::Transfer { mode: id, to: to.clone() })
            }
        }
    }
}

/// Resolves and checks a script against the layout it will start from.
pub(crate) fn compile(script: &ProtocolScript, layout: &Arc<SystemLayout>) -> Result<Vec<(String, Compiled)>> {
    let mut checker = Checker { issues: Vec::new(), widths: BTreeMap::new() };
    let mut current = layout.clone();
    let mut known = BTreeMap::new();
    let compiled = checker.steps("", &script.steps, &mut current, &mut known, false);
    if checker.issues.is_empty() {
        Ok(compiled)
    } else {
        Err(Error::InvalidScript(checker.issues))
    }
}

/// Checks locality, SSR compliance, Kraus completeness and the
/// classical-information flow of a script. All problems are reported.
pub fn validate_script(script: &ProtocolScript, layout: &Arc<SystemLayout>) -> Result<()> {
    compile(script, layout).map(|_| ())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::ModeSpec;

    fn layout() -> Arc<SystemLayout> {
        Arc::new(
            SystemLayout::new(vec![
                ModeSpec::fermion("a", "A"),
                ModeSpec::fermion("a2", "A"),
                ModeSpec::fermion("b", "B"),
            ])
            .unwrap(),
        )
    }

    fn flip(mode: &str) -> OperatorSpec {
        OperatorSpec { modes: vec![mode.into()], entries: vec![(0, 1, 1.0, 0.0), (1, 0, 1.0, 0.0)] }
    }

    fn number_povm(mode: &str) -> Vec<OperatorSpec> {
        vec![
            OperatorSpec { modes: vec![mode.into()], entries: vec![(0, 0, 1.0, 0.0)] },
            OperatorSpec { modes: vec![mode.into()], entries: vec![(1, 1, 1.0, 0.0)] },
        ]
    }

    #[test]
    fn bare_bit_flip_is_an_ssr_violation() {
        let s = ProtocolScript::new("bad", vec![Step::LocalUnitary { party: "A".into(), op: flip("a") }]);
        match validate_script(&s, &layout()) {
            Err(Error::InvalidScript(issues)) => {
                assert_eq!(issues.len(), 1);
                assert!(issues[0].starts_with("step 0: SSR violation"), "{}", issues[0]);
            }
            other => panic!("expected a violation, got {other:?}"),
        }
    }

    #[test]
    fn incomplete_povm_and_bad_flow_are_reported() {
        let mut povm = number_povm("a");
        povm.pop();
        let s = ProtocolScript::new(
            "bad",
            vec![
                Step::Povm { party: "A".into(), register: "r".into(), kraus: povm },
                Step::Conditional { party: "B".into(), register: "r".into(), equals: 0, steps: vec![] },
                Step::ClassicalSend { from: "B".into(), to: "A".into(), register: "q".into() },
                Step::Povm { party: "B".into(), register: "s".into(), kraus: number_povm("a") },
            ],
        );
        let Err(Error::InvalidScript(issues)) = validate_script(&s, &layout()) else { panic!() };
        assert_eq!(issues.len(), 5, "{issues:?}");
        assert!(issues[0].contains("incomplete"));
        assert!(issues[3].contains("not local") && issues[4].starts_with("step 3 element 1"));
    }

    #[test]
    fn transfer_changes_locality() {
        let s = ProtocolScript::new(
            "ok",
            vec![
                Step::Transfer { mode: "a".into(), to: "B".into() },
                Step::Povm { party: "B".into(), register: "r".into(), kraus: number_povm("a") },
                Step::ClassicalSend { from: "B".into(), to: "A".into(), register: "r".into() },
                Step::Conditional { party: "A".into(), register: "r".into(), equals: 1, steps: vec![] },
            ],
        );
        validate_script(&s, &layout()).unwrap();
        let text = s.to_json().unwrap();
        assert_eq!(ProtocolScript::from_json(&text).unwrap(), s);
        assert_eq!(bits_for(2), 1);
        assert_eq!(bits_for(4), 2);
        assert_eq!(bits_for(5), 3);
        assert_eq!(bits_for(1), 1);
    }
}
