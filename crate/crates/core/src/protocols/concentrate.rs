//! Entanglement concentration of `N` identical partial e-modes, and the
//! two-copy bootstrap that makes a first maximally entangled resource.
//!
//! Alice measures her total occupation `m`. The `C(N, m)` surviving terms
//! are relabelled by their colex rank `r`; the first `2^k` ranks
//! (`k = floor log2 C`) are written as `k` bits into pairs `1..=k`, a flag in
//! pair `k + 1` marks the rest. Relabelling changes the local parity by
//! `m - popcount(code)`, which both parties absorb by flipping their half of
//! one pre-shared perfect e-mode.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use super::{one, EModeParams};
use crate::error::{Error, Result};
use crate::fock::{Factor, LinearOperator, LocalMatrix, MixedState, ModeId, ModeSpec, PureState, Subset, SystemLayout};
use crate::locc::{enumerate_branches, OperatorSpec, ProtocolScript, Step, TrialReport};
use crate::resources::{entanglement_entropy, is_perfect_emode_pure, siv_monotone};

/// Largest `N` accepted: Alice's unitary acts on `N + 1` modes.
pub const MAX_PAIRS: usize = 14;

pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    (0..k.min(n - k)).fold(1u64, |acc, i| acc * (n - i) as u64 / (i + 1) as u64)
}

/// `floor(log2 C(n, m))`.
pub fn block_bits(n: usize, m: usize) -> usize {
    (63 - binomial(n, m).leading_zeros()) as usize
}

fn entropy_h(p: f64) -> f64 {
    [p, 1.0 - p].iter().filter(|&&x| x > 0.0).map(|&x| -x * x.log2()).sum()
}

/// `m`-subsets of `0..n` as bit masks in colex order.
fn colex_subsets(n: usize, m: usize) -> Vec<u32> {
    (0u32..1 << n).filter(|s| s.count_ones() as usize == m).collect()
}

#[derive(Debug, Clone)]
pub struct ConcentrationSetup {
    pub layout: Arc<SystemLayout>,
    pub n: usize,
    pub a: Vec<ModeId>,
    pub b: Vec<ModeId>,
    pub e_a: ModeId,
    pub e_b: ModeId,
}

impl ConcentrationSetup {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 || n > MAX_PAIRS {
            return Err(Error::InvalidArgument(format!("number of pairs must be in 1..={MAX_PAIRS}, got {n}")));
        }
        let mut specs: Vec<ModeSpec> = (1..=n).map(|i| ModeSpec::fermion(format!("a{i}"), "A")).collect();
        specs.push(ModeSpec::fermion("e_a", "A"));
        specs.extend((1..=n).map(|i| ModeSpec::fermion(format!("b{i}"), "B")));
        specs.push(ModeSpec::fermion("e_b", "B"));
        let layout = Arc::new(SystemLayout::new(specs)?);
        Ok(ConcentrationSetup {
            layout,
            n,
            a: (0..n).map(ModeId).collect(),
            b: (n + 1..2 * n + 1).map(ModeId).collect(),
            e_a: ModeId(n),
            e_b: ModeId(2 * n + 1),
        })
    }

    /// `N` copies of the e-mode plus the perfect ancillary e-mode.
    pub fn initial_state(&self, params: &EModeParams) -> Result<PureState> {
        let mut factors = (0..self.n).map(|i| params.factor(self.a[i], self.b[i])).collect::<Result<Vec<_>>>()?;
        factors.push(psi_plus(self.e_a, self.e_b)?);
        PureState::product(&self.layout, &factors)
    }

    fn alice_modes(&self) -> Vec<ModeId> {
        let mut m = self.a.clone();
        m.push(self.e_a);
        m
    }

    fn bob_modes(&self) -> Vec<ModeId> {
        let mut m = self.b.clone();
        m.push(self.e_b);
        m
    }

    /// Projector onto Alice's total occupation `m` of `a1..aN`.
    pub fn number_projector(&self, m: usize) -> Result<LinearOperator> {
        LinearOperator::diagonal(&self.layout, &self.a, |i| one() * ((i.count_ones() as usize == m) as u8 as f64))
    }

    /// Relabelling permutations for outcome `m`, before the phase fix:
    /// `(alice, bob)` as `(to, from)` pairs of local indices over
    /// `a1..aN, e_a` and `b1..bN, e_b` (MSB first).
    fn relabel_maps(&self, m: usize) -> (Vec<(usize, usize)>, Vec<(usize, usize)>) {
        let n = self.n;
        let k = block_bits(n, m);
        let idx = |bits: u32, e: usize| ((bits as usize) << 1) | e;
        // pair i (0-based) sits at bit n-1-i of the occupation word
        let word = |f: &dyn Fn(usize) -> bool| (0..n).fold(0u32, |w, i| w | (f(i) as u32) << (n - 1 - i));
        let mut alice = Vec::new();
        let mut bob = Vec::new();
        for (r, s) in colex_subsets(n, m).into_iter().enumerate() {
            let (code, flag) = if r < 1 << k { (r, false) } else { (r - (1 << k), true) };
            let bit = |i: usize| i < k && code >> (k - 1 - i) & 1 == 1;
            let a_code = word(&|i| bit(i) || (flag && i == k));
            let b_code = word(&|i| if i < k { !bit(i) } else { !(flag && i == k) });
            let a_src = word(&|i| s >> i & 1 == 1);
            let b_src = word(&|i| s >> i & 1 == 0);
            let deficit = (a_code.count_ones() as usize + m) % 2;
            for e in 0..2 {
                alice.push((idx(a_code, e ^ deficit), idx(a_src, e)));
                bob.push((idx(b_code, e ^ deficit), idx(b_src, e)));
            }
        }
        (complete(alice, n + 1), complete(bob, n + 1))
    }

    /// Alice's and Bob's unitaries for outcome `m`, with the diagonal phase
    /// on Alice's side that makes the success branch a plain product of
    /// `psi+` pairs.
    pub fn relabel_unitaries(&self, m: usize) -> Result<(LinearOperator, LinearOperator)> {
        let (am, bm) = self.relabel_maps(m);
        let dim = 1usize << (self.n + 1);
        let perm = |map: &[(usize, usize)], phases: &[Complex64]| {
            LocalMatrix::from_entries(dim, map.iter().map(|&(t, f)| (t, f, phases[t])))
        };
        let unit = vec![one(); dim];
        let alice_modes = self.alice_modes();
        let bob = LinearOperator::from_local(&self.layout, &self.bob_modes(), perm(&bm, &unit))?.with_party("B");
        let raw = LinearOperator::from_local(&self.layout, &alice_modes, perm(&am, &unit))?.with_party("A");

        // The phases do not depend on alpha and beta: every term of the
        // post-measurement state carries the same alpha^(N-m) beta^m.
        let probe = EModeParams::from_alpha2(0.5, 0.0)?;
        let post = self.number_projector(m)?.apply(&self.initial_state(&probe)?)?;
        let mapped = bob.apply(&raw.apply(&post)?)?;
        let target = self.success_target(m)?;
        let sub = Subset::of(&self.layout, &alice_modes);
        let mut phases = unit;
        let mut reference: Option<Complex64> = None;
        for (key, amp) in target.amplitudes() {
            let got = mapped.amplitude(key);
            if got.norm() < 1e-12 {
                return Err(Error::InvalidArgument(format!("relabelled state misses a success term for m = {m}")));
            }
            let ratio = (amp / amp.norm()) / (got / got.norm());
            let g = *reference.get_or_insert(ratio);
            phases[sub.extract(key)] = ratio / g;
        }
        let alice = LinearOperator::from_local(&self.layout, &alice_modes, perm(&am, &phases))?.with_party("A");
        Ok((alice, bob))
    }

    /// `k` psi+ pairs, the remaining Bob modes filled, the ancillary psi+.
    pub fn success_target(&self, m: usize) -> Result<PureState> {
        let k = block_bits(self.n, m);
        let mut factors = Vec::new();
        for i in 0..self.n {
            factors.push(if i < k {
                psi_plus(self.a[i], self.b[i])?
            } else {
                Factor::new(vec![self.b[i]], &[("1", one())])?
            });
        }
        factors.push(psi_plus(self.e_a, self.e_b)?);
        PureState::product(&self.layout, &factors)
    }

    /// Number measurement, relabelling on both sides, flag measurement.
    pub fn script(&self) -> Result<ProtocolScript> {
        let l = &self.layout;
        let mut steps = vec![
            Step::Povm {
                party: "A".into(),
                register: "m".into(),
                kraus: (0..=self.n).map(|m| Ok(OperatorSpec::from_operator(&self.number_projector(m)?))).collect::<Result<_>>()?,
            },
            Step::ClassicalSend { from: "A".into(), to: "B".into(), register: "m".into() },
        ];
        for m in 0..=self.n {
            let (ua, ub) = self.relabel_unitaries(m)?;
            let flag = self.a[block_bits(self.n, m)];
            let p0 = LinearOperator::diagonal(l, &[flag], |i| one() * (i == 0) as u8 as f64)?;
            let p1 = LinearOperator::number(l, flag)?;
            steps.push(Step::Conditional {
                party: "A".into(),
                register: "m".into(),
                equals: m as u64,
                steps: vec![
                    Step::LocalUnitary { party: "A".into(), op: OperatorSpec::from_operator(&ua) },
                    Step::Povm {
                        party: "A".into(),
                        register: "flag".into(),
                        kraus: vec![OperatorSpec::from_operator(&p0), OperatorSpec::from_operator(&p1)],
                    },
                    Step::ClassicalSend { from: "A".into(), to: "B".into(), register: "flag".into() },
                ],
            });
            steps.push(Step::Conditional {
                party: "B".into(),
                register: "m".into(),
                equals: m as u64,
                steps: vec![Step::LocalUnitary { party: "B".into(), op: OperatorSpec::from_operator(&ub) }],
            });
        }
        Ok(ProtocolScript::new(format!("concentrate-{}", self.n), steps))
    }
}

/// Extends a partial permutation to a full, parity-preserving one.
fn complete(mut map: Vec<(usize, usize)>, width: usize) -> Vec<(usize, usize)> {
    let dim = 1usize << width;
    let mut src = vec![false; dim];
    let mut dst = vec![false; dim];
    for &(t, f) in &map {
        src[f] = true;
        dst[t] = true;
    }
    for parity in 0..2 {
        let free = |used: &[bool]| -> Vec<usize> {
            (0..dim).filter(|&i| !used[i] && i.count_ones() % 2 == parity).collect()
        };
        let (fs, ts) = (free(&src), free(&dst));
        debug_assert_eq!(fs.len(), ts.len());
        map.extend(ts.into_iter().zip(fs));
    }
    map
}

fn psi_plus(a: ModeId, b: ModeId) -> Result<Factor> {
    let h = one() * std::f64::consts::FRAC_1_SQRT_2;
    Factor::new(vec![a, b], &[("01", h), ("10", h)])
}

pub fn concentration_script(n: usize) -> Result<ProtocolScript> {
    ConcentrationSetup::new(n)?.script()
}

#[derive(Debug, Clone, Serialize)]
pub struct ConcentrationOutcome {
    pub m: usize,
    pub probability: f64,
    /// `floor(log2 C(N, m))`.
    pub k: usize,
    /// Probability that the flag reads 0 given `m`.
    pub success_probability: f64,
    /// Every success branch holds `k` perfect e-modes and an intact ancilla.
    pub verified: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConcentrationReport {
    pub n: usize,
    pub alpha2: f64,
    pub outcomes: Vec<ConcentrationOutcome>,
    /// `sum_m P(m) k(m)`.
    pub expected_k: f64,
    pub expected_k_per_pair: f64,
    /// `sum_m P(m) P(success | m) k(m)`.
    pub extracted_per_pair: f64,
    /// `S(rho_A)` of one input pair.
    pub entropy_per_pair: f64,
    /// Most probable `m`.
    pub mode_m: usize,
    pub total_probability: f64,
}

fn success_ok(setup: &ConcentrationSetup, t: &TrialReport, k: usize) -> Result<bool> {
    let s = &t.final_state;
    for i in 0..k {
        if !is_perfect_emode_pure(s, setup.a[i], setup.b[i])? {
            return Ok(false);
        }
    }
    is_perfect_emode_pure(s, setup.e_a, setup.e_b)
}

/// Exact branch enumeration of the concentration protocol.
pub fn concentrate(params: EModeParams, n: usize) -> Result<ConcentrationReport> {
    let setup = ConcentrationSetup::new(n)?;
    let initial = MixedState::pure(setup.initial_state(&params)?);
    let branches = enumerate_branches(&setup.script()?, &initial)?;
    let mut by_m: BTreeMap<usize, (f64, f64, bool)> = BTreeMap::new();
    for t in &branches {
        let m = t.register("m").expect("number outcome") as usize;
        let e = by_m.entry(m).or_insert((0.0, 0.0, true));
        e.0 += t.probability;
        if t.register("flag") == Some(0) {
            e.1 += t.probability;
            e.2 &= success_ok(&setup, t, block_bits(n, m))?;
        }
    }
    let outcomes: Vec<ConcentrationOutcome> = by_m
        .into_iter()
        .map(|(m, (p, s, verified))| ConcentrationOutcome {
            m,
            probability: p,
            k: block_bits(n, m),
            success_probability: if p > 0.0 { s / p } else { 0.0 },
            verified,
        })
        .collect();
    let expected_k: f64 = outcomes.iter().map(|o| o.probability * o.k as f64).sum();
    let extracted: f64 = outcomes.iter().map(|o| o.probability * o.success_probability * o.k as f64).sum();
    let mode_m = outcomes
        .iter()
        .fold(None::<&ConcentrationOutcome>, |best, o| match best {
            Some(b) if b.probability >= o.probability => Some(b),
            _ => Some(o),
        })
        .map(|o| o.m)
        .unwrap_or(0);
    Ok(ConcentrationReport {
        n,
        alpha2: params.alpha2(),
        total_probability: outcomes.iter().map(|o| o.probability).sum(),
        expected_k,
        expected_k_per_pair: expected_k / n as f64,
        extracted_per_pair: extracted / n as f64,
        entropy_per_pair: entropy_h(params.alpha2()),
        mode_m,
        outcomes,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct YieldPoint {
    pub n: usize,
    pub expected_k_per_pair: f64,
    pub extracted_per_pair: f64,
    pub entropy_per_pair: f64,
}

pub fn concentration_yield(params: EModeParams, ns: &[usize]) -> Result<Vec<YieldPoint>> {
    ns.iter()
        .map(|&n| {
            let r = concentrate(params, n)?;
            Ok(YieldPoint {
                n,
                expected_k_per_pair: r.expected_k_per_pair,
                extracted_per_pair: r.extracted_per_pair,
                entropy_per_pair: r.entropy_per_pair,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct BootstrapReport {
    pub alpha2: f64,
    pub pairs: usize,
    pub attempts: usize,
    /// Probability that a single attempt on two fresh pairs succeeds.
    pub success_per_attempt: f64,
    /// Probability that some attempt succeeds.
    pub total_success: f64,
    /// `A` of Alice's two modes in a success branch: the dual-rail resource
    /// has definite local parity.
    pub resource_monotone: f64,
    /// Entanglement entropy carried by the successful pair of pairs.
    pub resource_entropy_bits: f64,
}

fn bootstrap_layout(pairs: usize) -> Result<Arc<SystemLayout>> {
    let mut specs: Vec<ModeSpec> = (1..=pairs).map(|i| ModeSpec::fermion(format!("a{i}"), "A")).collect();
    specs.extend((1..=pairs).map(|i| ModeSpec::fermion(format!("b{i}"), "B")));
    Ok(Arc::new(SystemLayout::new(specs)?))
}

fn bootstrap_attempts(layout: &Arc<SystemLayout>, pairs: usize, j: usize) -> Result<Vec<Step>> {
    if 2 * j + 1 >= pairs {
        return Ok(Vec::new());
    }
    let modes = [ModeId(2 * j), ModeId(2 * j + 1)];
    let register = format!("m{}", j + 1);
    let kraus = (0..3)
        .map(|m| {
            let p = LinearOperator::diagonal(layout, &modes, |i| one() * ((i.count_ones() == m) as u8 as f64))?;
            Ok(OperatorSpec::from_operator(&p))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut steps = vec![
        Step::Povm { party: "A".into(), register: register.clone(), kraus },
        Step::ClassicalSend { from: "A".into(), to: "B".into(), register: register.clone() },
    ];
    for fail in [0u64, 2] {
        let next = bootstrap_attempts(layout, pairs, j + 1)?;
        if !next.is_empty() {
            steps.push(Step::Conditional { party: "A".into(), register: register.clone(), equals: fail, steps: next });
        }
    }
    Ok(steps)
}

/// Pairs are consumed two at a time until Alice finds one excitation in a
/// pair of pairs.
pub fn bootstrap_emode(params: EModeParams, pairs: usize) -> Result<BootstrapReport> {
    if !(2..=MAX_PAIRS).contains(&pairs) {
        return Err(Error::InvalidArgument(format!("bootstrap needs 2..={MAX_PAIRS} pairs, got {pairs}")));
    }
    let layout = bootstrap_layout(pairs)?;
    let factors = (0..pairs).map(|i| params.factor(ModeId(i), ModeId(pairs + i))).collect::<Result<Vec<_>>>()?;
    let initial = MixedState::pure(PureState::product(&layout, &factors)?);
    let script = ProtocolScript::new(format!("bootstrap-{pairs}"), bootstrap_attempts(&layout, pairs, 0)?);
    let branches = enumerate_branches(&script, &initial)?;
    let attempts = pairs / 2;
    let mut success_per_attempt = 0.0;
    let mut total_success = 0.0;
    let mut resource_monotone = f64::NAN;
    let mut resource_entropy_bits = f64::NAN;
    for t in &branches {
        let won = (1..=attempts).find(|j| t.register(&format!("m{j}")) == Some(1));
        if t.register("m1") == Some(1) {
            success_per_attempt += t.probability;
        }
        if let Some(j) = won {
            total_success += t.probability;
            if resource_monotone.is_nan() {
                let sub = Arc::new(SystemLayout::new(vec![
                    ModeSpec::fermion("x1", "A"),
                    ModeSpec::fermion("x2", "A"),
                    ModeSpec::fermion("y1", "B"),
                    ModeSpec::fermion("y2", "B"),
                ])?);
                let resource = dual_rail_part(&t.final_state, &sub, &[2 * j - 2, 2 * j - 1, pairs + 2 * j - 2, pairs + 2 * j - 1])?;
                resource_monotone = siv_monotone(&resource, "A")?;
                resource_entropy_bits = entanglement_entropy(&resource, "A")?;
            }
        }
    }
    Ok(BootstrapReport {
        alpha2: params.alpha2(),
        pairs,
        attempts,
        success_per_attempt,
        total_success,
        resource_monotone,
        resource_entropy_bits,
    })
}

/// The (pure) state of four modes after the others were found in a
/// definite configuration.
fn dual_rail_part(state: &PureState, sub: &Arc<SystemLayout>, modes: &[usize]) -> Result<PureState> {
    let ids: Vec<ModeId> = modes.iter().map(|&m| ModeId(m)).collect();
    let rho = state.reduced_density(&ids)?;
    if (rho.purity() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument("dual-rail resource is entangled with the remaining modes".into()));
    }
    let (w, v) = {
        let eig = nalgebra::SymmetricEigen::new(rho.matrix().clone());
        let i = eig.eigenvalues.imax();
        (eig.eigenvalues[i], eig.eigenvectors.column(i).into_owned())
    };
    debug_assert!((w - 1.0).abs() < 1e-9);
    PureState::from_amplitudes(sub, v.iter().enumerate().map(|(i, &a)| (i as u64, a)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomials_and_block_sizes() {
        assert_eq!(binomial(12, 6), 924);
        assert_eq!(binomial(4, 5), 0);
        assert_eq!(block_bits(12, 6), 9);
        assert_eq!(block_bits(4, 1), 2);
        assert_eq!(block_bits(5, 0), 0);
        assert_eq!(colex_subsets(4, 2), vec![0b0011, 0b0101, 0b0110, 0b1001, 0b1010, 0b1100]);
    }

    #[test]
    fn relabelling_is_a_parity_preserving_permutation() {
        let s = ConcentrationSetup::new(4).unwrap();
        for m in 0..=4 {
            let (a, b) = s.relabel_maps(m);
            for map in [&a, &b] {
                assert_eq!(map.len(), 32);
                let mut seen = [false; 32];
                for &(t, f) in map.iter() {
                    assert!(!std::mem::replace(&mut seen[t], true));
                    assert_eq!(t.count_ones() % 2, f.count_ones() % 2);
                }
            }
        }
    }

    #[test]
    fn four_pairs_concentrate_exactly() {
        let r = concentrate(EModeParams::from_alpha2(0.7, 0.4).unwrap(), 4).unwrap();
        assert!((r.total_probability - 1.0).abs() < 1e-12);
        for o in &r.outcomes {
            assert!(o.verified, "m = {}", o.m);
            let c = binomial(4, o.m) as f64;
            assert!((o.success_probability - (1u64 << o.k) as f64 / c).abs() < 1e-12);
        }
    }

    #[test]
    fn bootstrap_rate() {
        let p = EModeParams::from_alpha2(0.8, 0.0).unwrap();
        let r = bootstrap_emode(p, 4).unwrap();
        assert!((r.success_per_attempt - 2.0 * 0.8 * 0.2).abs() < 1e-12);
        let q: f64 = 1.0 - 0.32;
        assert!((r.total_success - (1.0 - q * q)).abs() < 1e-12);
        assert!((r.resource_monotone - 1.0).abs() < 1e-12);
        assert!((r.resource_entropy_bits - 1.0).abs() < 1e-12);
    }
}
