//! Parity superselection: parity operators, sectors, and operator checks.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{LinearOperator, LocalMatrix, ModeId, PureState, SystemLayout, MAX_SUPPORT, TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParitySector {
    Even,
    Odd,
    Indefinite,
}

impl ParitySector {
    pub fn value(self) -> Option<i8> {
        match self {
            ParitySector::Even => Some(1),
            ParitySector::Odd => Some(-1),
            ParitySector::Indefinite => None,
        }
    }

    pub fn from_value(v: i8) -> Self {
        if v >= 0 {
            ParitySector::Even
        } else {
            ParitySector::Odd
        }
    }
}

impl fmt::Display for ParitySector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParitySector::Even => f.write_str("+1"),
            ParitySector::Odd => f.write_str("-1"),
            ParitySector::Indefinite => f.write_str("indefinite"),
        }
    }
}

/// Whether a local operator commutes (`Plus`) or anticommutes (`Minus`)
/// with its party's parity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AncillaSign {
    Plus,
    Minus,
}

impl AncillaSign {
    pub fn value(self) -> i8 {
        match self {
            AncillaSign::Plus => 1,
            AncillaSign::Minus => -1,
        }
    }

    pub fn times(self, other: AncillaSign) -> AncillaSign {
        if self == other {
            AncillaSign::Plus
        } else {
            AncillaSign::Minus
        }
    }
}

/// `(-1)^(number of occupied fermionic modes)` of a basis key.
pub fn key_parity(layout: &SystemLayout, key: u64) -> i8 {
    if (key & layout.fermion_mask()).count_ones().is_multiple_of(2) {
        1
    } else {
        -1
    }
}

fn parity_diagonal(layout: &Arc<SystemLayout>, modes: &[ModeId]) -> Result<LinearOperator> {
    let fermionic: Vec<ModeId> = modes.iter().copied().filter(|&m| layout.spec(m).is_fermion()).collect();
    if fermionic.is_empty() {
        return Ok(LinearOperator::identity(layout));
    }
    if fermionic.len() > MAX_SUPPORT {
        return Err(Error::TooLargeForDense(fermionic.len()));
    }
    LinearOperator::diagonal(layout, &fermionic, |i| {
        Complex64::new(if i.count_ones() % 2 == 0 { 1.0 } else { -1.0 }, 0.0)
    })
}

/// Global parity `prod_i (-1)^{n_i}` over the fermionic modes.
pub fn global_parity(layout: &Arc<SystemLayout>) -> Result<LinearOperator> {
    let all: Vec<ModeId> = layout.ids().collect();
    parity_diagonal(layout, &all)
}

/// Parity restricted to the fermionic modes currently owned by `party`.
pub fn local_parity(layout: &Arc<SystemLayout>, party: &str) -> Result<LinearOperator> {
    let modes = layout.party_modes(party)?;
    Ok(parity_diagonal(layout, &modes)?.with_party(party))
}

/// Expectation of the local parity of `party`, computed on the keys.
pub fn local_parity_expectation(state: &PureState, party: &str) -> Result<f64> {
    let layout = state.layout();
    let mask = layout.party_mask(party)? & layout.fermion_mask();
    let mut acc = 0.0;
    for (k, a) in state.amplitudes() {
        let s = if (k & mask).count_ones().is_multiple_of(2) { 1.0 } else { -1.0 };
        acc += s * a.norm_sqr();
    }
    Ok(acc / state.norm_sqr())
}

pub fn parity_sector(state: &PureState) -> ParitySector {
    let layout = state.layout();
    let (mut even, mut odd) = (0.0, 0.0);
    for (k, a) in state.amplitudes() {
        if key_parity(layout, k) == 1 {
            even += a.norm_sqr();
        } else {
            odd += a.norm_sqr();
        }
    }
    let total = even + odd;
    if total == 0.0 {
        ParitySector::Indefinite
    } else if odd <= TOL * total {
        ParitySector::Even
    } else if even <= TOL * total {
        ParitySector::Odd
    } else {
        ParitySector::Indefinite
    }
}

/// Normalized projection onto a parity sector; an empty (zero) state when
/// the projection vanishes.
pub fn project_parity(state: &PureState, sector: ParitySector) -> Result<PureState> {
    let want = sector.value().ok_or_else(|| Error::InvalidArgument("cannot project onto an indefinite sector".into()))?;
    let layout = state.layout_arc();
    let kept: Vec<(u64, Complex64)> = state.amplitudes().filter(|&(k, _)| key_parity(layout, k) == want).collect();
    if kept.iter().map(|(_, a)| a.norm_sqr()).sum::<f64>() < crate::fock::PRUNE {
        return Ok(PureState::empty(layout));
    }
    PureState::from_amplitudes(layout, kept)
}

/// Local parity matrix over the fermionic modes of `support`, in the local
/// basis of the support.
pub(crate) fn support_parity(layout: &SystemLayout, support: &[ModeId]) -> Vec<f64> {
    let k = support.len();
    let fermionic: usize = support
        .iter()
        .enumerate()
        .filter(|(_, &m)| layout.spec(m).is_fermion())
        .fold(0, |acc, (j, _)| acc | 1 << (k - 1 - j));
    (0..1usize << k).map(|i| if (i & fermionic).count_ones().is_multiple_of(2) { 1.0 } else { -1.0 }).collect()
}

/// `(||[O, P]||_max, ||O - P_+ O P_+ - P_- O P_-||_max)`.
///
/// Both are evaluated on the operator's support: the parity of modes
/// outside the support commutes with `O` by construction of the embedding.
pub fn ssr_deviation(op: &LinearOperator) -> (f64, f64) {
    let p = support_parity(op.layout(), op.support());
    let mut comm: f64 = 0.0;
    let mut cross: f64 = 0.0;
    for (r, c, v) in op.matrix().entries() {
        // [O, P]_{rc} = O_rc (p_c - p_r)
        comm = comm.max((v * (p[c] - p[r])).norm());
        if p[r] != p[c] {
            cross = cross.max(v.norm());
        }
    }
    (comm, cross)
}

/// True iff `[O, P] = 0` within `tol`.
pub fn check_ssr_operator(op: &LinearOperator, tol: f64) -> bool {
    let (comm, cross) = ssr_deviation(op);
    let verdict = comm <= tol;
    debug_assert!((comm - 2.0 * cross).abs() <= 1e-12 * (1.0 + comm), "commutator and block forms disagree");
    verdict
}

/// Classifies a local operator by its relation to the local parity of
/// `party`. Errors when neither relation holds.
pub fn classify_local_op(op: &LinearOperator, party: &str) -> Result<AncillaSign> {
    classify_local_op_tol(op, party, TOL)
}

pub fn classify_local_op_tol(op: &LinearOperator, party: &str, tol: f64) -> Result<AncillaSign> {
    let layout = op.layout();
    let owned = layout.party_modes(party)?;
    if let Some(&m) = op.support().iter().find(|m| !owned.contains(m)) {
        return Err(Error::NotLocal {
            party: party.to_string(),
            detail: format!("operator touches `{}` owned by `{}`", layout.label(m), layout.party_of(m)),
        });
    }
    classify_matrix(op.matrix(), &support_parity(layout, op.support()), tol)
        .ok_or_else(|| Error::NotSsrImplementable(party.to_string()))
}

pub(crate) fn classify_matrix(m: &LocalMatrix, parity: &[f64], tol: f64) -> Option<AncillaSign> {
    let (mut comm, mut anti): (f64, f64) = (0.0, 0.0);
    for (r, c, v) in m.entries() {
        comm = comm.max((v * (parity[c] - parity[r])).norm());
        anti = anti.max((v * (parity[c] + parity[r])).norm());
    }
    if comm <= tol {
        Some(AncillaSign::Plus)
    } else if anti <= tol {
        Some(AncillaSign::Minus)
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::ModeSpec;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    fn layout(specs: Vec<ModeSpec>) -> Arc<SystemLayout> {
        Arc::new(SystemLayout::new(specs).unwrap())
    }

    #[test]
    fn parity_of_basis_states() {
        let l = layout(vec![ModeSpec::fermion("a", "A"), ModeSpec::fermion("b", "B")]);
        let p = global_parity(&l).unwrap();
        for (bits, want) in [("00", 1.0), ("11", 1.0), ("01", -1.0), ("10", -1.0)] {
            let s = PureState::basis(&l, &bits.into()).unwrap();
            assert_eq!(p.expectation(&s).unwrap(), c(want), "{bits}");
        }
        let lb = layout(vec![ModeSpec::boson("x", "A"), ModeSpec::fermion("b", "B")]);
        let s = PureState::basis(&lb, &"10".into()).unwrap();
        assert_eq!(global_parity(&lb).unwrap().expectation(&s).unwrap(), c(1.0));
        assert!(local_parity(&lb, "A").unwrap().support().is_empty());
    }

    #[test]
    fn local_parities_multiply_to_global() {
        let l = layout(vec![
            ModeSpec::fermion("a1", "A"),
            ModeSpec::boson("x", "A"),
            ModeSpec::fermion("b1", "B"),
            ModeSpec::fermion("b2", "B"),
            ModeSpec::fermion("c", "C"),
        ]);
        let mut prod = LinearOperator::identity(&l);
        for party in l.parties() {
            prod = prod.mul(&local_parity(&l, &party).unwrap()).unwrap();
        }
        let g = global_parity(&l).unwrap();
        assert_eq!(prod.to_full_matrix().unwrap(), g.to_full_matrix().unwrap());
        assert!(local_parity(&l, "D").is_err());
    }

    #[test]
    fn sectors_and_projections() {
        let l = layout(vec![ModeSpec::fermion("a", "A"), ModeSpec::fermion("b", "B")]);
        let phi_m = PureState::from_bitstrings(&l, &[("00", c(1.0)), ("11", c(-1.0))]).unwrap();
        let psi_p = PureState::from_bitstrings(&l, &[("01", c(1.0)), ("10", c(1.0))]).unwrap();
        let mixed = PureState::from_bitstrings(&l, &[("00", c(1.0)), ("01", c(1.0))]).unwrap();
        assert_eq!(parity_sector(&phi_m), ParitySector::Even);
        assert_eq!(parity_sector(&psi_p), ParitySector::Odd);
        assert_eq!(parity_sector(&mixed), ParitySector::Indefinite);
        assert!(project_parity(&phi_m, ParitySector::Odd).unwrap().is_zero());
        assert!(project_parity(&phi_m, ParitySector::Even).unwrap().overlap(&phi_m).unwrap() > 1.0 - 1e-15);
        let odd = project_parity(&mixed, ParitySector::Odd).unwrap();
        assert_eq!(odd.amplitude(0b01), c(1.0));
    }

    #[test]
    fn ssr_checks() {
        let l = layout(vec![ModeSpec::fermion("a", "A"), ModeSpec::fermion("b", "A")]);
        let flip = LinearOperator::embed_local_map(&l, "A", &[ModeId(0)], &[("0", c(1.0), "1"), ("1", c(1.0), "0")])
            .unwrap();
        assert!(!check_ssr_operator(&flip, 1e-10));
        let diag = LinearOperator::diagonal(&l, &[ModeId(0), ModeId(1)], |i| Complex64::from_polar(1.0, i as f64))
            .unwrap();
        assert!(check_ssr_operator(&diag, 1e-10));
        let pair = LinearOperator::embed_local_unitary(
            &l,
            "A",
            &[("00", c(1.0), "11"), ("11", c(1.0), "00"), ("01", c(1.0), "10"), ("10", c(1.0), "01")],
        )
        .unwrap();
        assert!(check_ssr_operator(&pair, 1e-10));
        assert_eq!(classify_local_op(&pair, "A").unwrap(), AncillaSign::Plus);
        let create = LinearOperator::create(&l, ModeId(1)).unwrap();
        assert_eq!(classify_local_op(&create, "A").unwrap(), AncillaSign::Minus);
        // diagonal phase plus an off-diagonal |1><0| fails both relations
        let m = LocalMatrix::from_entries(
            2,
            [(0, 0, c(1.0)), (1, 1, Complex64::from_polar(1.0, 0.4)), (1, 0, c(1.0))],
        );
        let bad = LinearOperator::from_local(&l, &[ModeId(0)], m).unwrap();
        assert!(matches!(classify_local_op(&bad, "A"), Err(Error::NotSsrImplementable(_))));
    }
}
