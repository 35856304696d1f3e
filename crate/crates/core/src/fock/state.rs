use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::DVector;
use num_complex::Complex64;

use super::layout::{ModeId, ModeSpec, Occupation, SystemLayout};
use super::operator::{LinearOperator, ModeOpKind};
use super::{sign, PRUNE, TOL};
use crate::error::{Error, Result};

/// Amplitude table over occupation keys.
///
/// States are normalized unless built by an operation that is allowed to
/// leave them unnormalized (operator application, mode operators); that
/// case is carried explicitly by [`PureState::is_normalized`].
#[derive(Debug, Clone)]
pub struct PureState {
    layout: Arc<SystemLayout>,
    amps: BTreeMap<u64, Complex64>,
    normalized: bool,
}

impl PureState {
    pub(crate) fn from_map(layout: Arc<SystemLayout>, amps: BTreeMap<u64, Complex64>, normalized: bool) -> Self {
        PureState { layout, amps, normalized }
    }

    pub fn basis(layout: &Arc<SystemLayout>, occupation: &Occupation) -> Result<Self> {
        let key = occupation.key(layout)?;
        Ok(Self::basis_key(layout, key))
    }

    pub(crate) fn basis_key(layout: &Arc<SystemLayout>, key: u64) -> Self {
        PureState::from_map(layout.clone(), [(key, Complex64::new(1.0, 0.0))].into(), true)
    }

    /// The zero vector, flagged unnormalized.
    pub fn empty(layout: &Arc<SystemLayout>) -> Self {
        PureState::from_map(layout.clone(), BTreeMap::new(), false)
    }

    pub fn vacuum(layout: &Arc<SystemLayout>) -> Self {
        Self::basis_key(layout, 0)
    }

    /// Normalized state from amplitudes on layout-order bit strings.
    pub fn from_bitstrings(layout: &Arc<SystemLayout>, terms: &[(&str, Complex64)]) -> Result<Self> {
        let mut amps = BTreeMap::new();
        for (bits, a) in terms {
            *amps.entry(layout.parse_key(bits)?).or_insert(Complex64::new(0.0, 0.0)) += a;
        }
        PureState::from_map(layout.clone(), amps, false).normalize()
    }

    /// Normalized state from raw `(key, amplitude)` pairs.
    pub fn from_amplitudes(
        layout: &Arc<SystemLayout>,
        terms: impl IntoIterator<Item = (u64, Complex64)>,
    ) -> Result<Self> {
        let full = layout.full_mask();
        let mut amps = BTreeMap::new();
        for (k, a) in terms {
            if k & !full != 0 {
                return Err(Error::InvalidArgument(format!("key {k:#b} outside layout")));
            }
            *amps.entry(k).or_insert(Complex64::new(0.0, 0.0)) += a;
        }
        PureState::from_map(layout.clone(), amps, false).normalize()
    }

    /// Normalized linear combination.
    pub fn superpose(terms: &[(Complex64, &PureState)]) -> Result<Self> {
        let first = terms.first().ok_or(Error::ZeroVector)?.1;
        let mut amps: BTreeMap<u64, Complex64> = BTreeMap::new();
        for (c, s) in terms {
            if !s.layout.same_basis(&first.layout) {
                return Err(Error::LayoutMismatch);
            }
            for (&k, &a) in &s.amps {
                *amps.entry(k).or_default() += c * a;
            }
        }
        PureState::from_map(first.layout.clone(), amps, false).normalize()
    }

    /// Product `C_1 C_2 ... C_n |vac>` where `C_i` is the creation
    /// polynomial of the i-th factor (its modes taken in the factor's own
    /// order). Factors must be on disjoint modes. The result is normalized.
    pub fn product(layout: &Arc<SystemLayout>, factors: &[Factor]) -> Result<Self> {
        let mut used = 0u64;
        for f in factors {
            for &m in &f.modes {
                layout.check(m)?;
                if used & layout.bit(m) != 0 {
                    return Err(Error::InvalidArgument(format!(
                        "mode `{}` appears in two factors",
                        layout.label(m)
                    )));
                }
                used |= layout.bit(m);
            }
        }
        // partial products: (ordered occupied fermion positions, key, amplitude)
        let mut acc: Vec<(Vec<usize>, u64, Complex64)> = vec![(Vec::new(), 0, Complex64::new(1.0, 0.0))];
        for f in factors {
            let k = f.modes.len();
            let mut next = Vec::with_capacity(acc.len() * f.terms.len());
            for (string, key, amp) in &acc {
                for &(local, c) in &f.terms {
                    let mut s = string.clone();
                    let mut nk = *key;
                    for (j, &m) in f.modes.iter().enumerate() {
                        if local >> (k - 1 - j) & 1 == 1 {
                            nk |= layout.bit(m);
                            if layout.spec(m).is_fermion() {
                                s.push(m.0);
                            }
                        }
                    }
                    next.push((s, nk, amp * c));
                }
            }
            acc = next;
        }
        let mut amps: BTreeMap<u64, Complex64> = BTreeMap::new();
        for (string, key, amp) in acc {
            let inversions = (0..string.len())
                .map(|i| string[i + 1..].iter().filter(|&&q| q < string[i]).count())
                .sum::<usize>();
            *amps.entry(key).or_default() += amp * sign(inversions % 2 == 1);
        }
        PureState::from_map(layout.clone(), amps, false).normalize()
    }

    pub fn layout(&self) -> &SystemLayout {
        &self.layout
    }

    pub fn layout_arc(&self) -> &Arc<SystemLayout> {
        &self.layout
    }

    pub(crate) fn amplitude_map(&self) -> &BTreeMap<u64, Complex64> {
        &self.amps
    }

    /// Nonzero `(key, amplitude)` pairs in ascending key order.
    pub fn amplitudes(&self) -> impl Iterator<Item = (u64, Complex64)> + '_ {
        self.amps.iter().map(|(&k, &a)| (k, a))
    }

    pub fn amplitude(&self, key: u64) -> Complex64 {
        self.amps.get(&key).copied().unwrap_or_default()
    }

    pub fn amplitude_of(&self, occupation: &Occupation) -> Result<Complex64> {
        Ok(self.amplitude(occupation.key(&self.layout)?))
    }

    pub fn len(&self) -> usize {
        self.amps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amps.is_empty()
    }

    /// True when every amplitude has been annihilated.
    pub fn is_zero(&self) -> bool {
        self.amps.is_empty()
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.values().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Rescales to unit norm and prunes amplitudes below [`PRUNE`].
    pub fn normalize(mut self) -> Result<Self> {
        let n = self.norm();
        if n < PRUNE {
            return Err(Error::ZeroVector);
        }
        for a in self.amps.values_mut() {
            *a /= n;
        }
        self.amps.retain(|_, a| a.norm() >= PRUNE);
        self.normalized = true;
        Ok(self)
    }

    pub(crate) fn check_normalized(&self) -> Result<()> {
        if (self.norm_sqr() - 1.0).abs() > TOL {
            return Err(Error::InvalidArgument(format!("state norm^2 is {}", self.norm_sqr())));
        }
        Ok(())
    }

    /// `<self|other>`, conjugate-linear in `self`.
    pub fn inner(&self, other: &PureState) -> Result<Complex64> {
        if !self.layout.same_basis(&other.layout) {
            return Err(Error::LayoutMismatch);
        }
        let (small, large, conj_small) =
            if self.amps.len() <= other.amps.len() { (self, other, true) } else { (other, self, false) };
        let mut acc = Complex64::new(0.0, 0.0);
        for (k, a) in &small.amps {
            if let Some(b) = large.amps.get(k) {
                acc += if conj_small { a.conj() * b } else { b.conj() * a };
            }
        }
        Ok(acc)
    }

    /// `|<self|other>|`; 1 means equal up to a global phase.
    pub fn overlap(&self, other: &PureState) -> Result<f64> {
        Ok(self.inner(other)?.norm())
    }

    pub fn apply(&self, op: &LinearOperator) -> Result<PureState> {
        op.apply(self)
    }

    /// Applies `a^+_mode` or `a_mode`. The result is not renormalized and is
    /// empty when every component is annihilated.
    pub fn apply_mode_op(&self, mode: ModeId, kind: ModeOpKind) -> Result<PureState> {
        self.layout.check(mode)?;
        let bit = self.layout.bit(mode);
        let string = if self.layout.spec(mode).is_fermion() {
            self.layout.before_mask(mode) & self.layout.fermion_mask()
        } else {
            0
        };
        let mut out = BTreeMap::new();
        for (&k, &a) in &self.amps {
            let occupied = k & bit != 0;
            let nk = match (kind, occupied) {
                (ModeOpKind::Create, false) => k | bit,
                (ModeOpKind::Annihilate, true) => k & !bit,
                _ => continue,
            };
            out.insert(nk, a * sign((k & string).count_ones() % 2 == 1));
        }
        Ok(PureState::from_map(self.layout.clone(), out, false))
    }

    /// Adds a mode at the end of its party's block in the given occupancy.
    /// An occupied fermionic ancilla is created in front of the existing
    /// creation string, i.e. the result is `a^+_anc |self>`.
    pub fn add_ancilla(&self, spec: ModeSpec, occupancy: u8) -> Result<PureState> {
        if occupancy > 1 {
            return Err(Error::InvalidOccupancy { mode: spec.label, value: occupancy });
        }
        if self.layout.mode(&spec.label).is_ok() {
            return Err(Error::DuplicateLabel(spec.label));
        }
        let (layout, id) = self.layout.with_mode_appended_to_party(spec)?;
        let layout = Arc::new(layout);
        let n_new = layout.len();
        let pos = id.0;
        // bits below the insertion point keep their value, bits above shift up
        let low_width = n_new - 1 - pos;
        let low_mask = (1u64 << low_width) - 1;
        let amps = self
            .amps
            .iter()
            .map(|(&k, &a)| (((k & !low_mask) << 1) | (k & low_mask), a))
            .collect();
        let vacant = PureState::from_map(layout, amps, self.normalized);
        if occupancy == 0 {
            return Ok(vacant);
        }
        let mut s = vacant.apply_mode_op(id, ModeOpKind::Create)?;
        s.normalized = self.normalized;
        Ok(s)
    }

    /// Reattributes `mode` to `party`. Amplitudes and the mode order are
    /// unchanged.
    pub fn transfer_mode(&self, mode: ModeId, party: &str) -> Result<PureState> {
        self.layout.check(mode)?;
        if !self.layout.has_party(party) {
            return Err(Error::UnknownParty(party.to_string()));
        }
        let layout = Arc::new(self.layout.with_party(mode, party)?);
        Ok(PureState { layout, amps: self.amps.clone(), normalized: self.normalized })
    }

    /// Same amplitudes on a layout with the same basis.
    pub fn rebind(&self, layout: &Arc<SystemLayout>) -> Result<PureState> {
        if !self.layout.same_basis(layout) {
            return Err(Error::LayoutMismatch);
        }
        Ok(PureState { layout: layout.clone(), amps: self.amps.clone(), normalized: self.normalized })
    }

    /// Multiplies by a global phase.
    pub fn with_phase(&self, phase: Complex64) -> PureState {
        let mut s = self.clone();
        for a in s.amps.values_mut() {
            *a *= phase;
        }
        s
    }
}

/// Local state on an ordered list of modes, used to build products.
#[derive(Debug, Clone)]
pub struct Factor {
    modes: Vec<ModeId>,
    // (local index over `modes` in the given order, amplitude)
    terms: Vec<(usize, Complex64)>,
}

impl Factor {
    /// Terms are bit strings over `modes` in the given order.
    pub fn new(modes: Vec<ModeId>, terms: &[(&str, Complex64)]) -> Result<Self> {
        let k = modes.len();
        let mut parsed = Vec::with_capacity(terms.len());
        for (bits, c) in terms {
            if bits.len() != k {
                return Err(Error::OccupationLength { expected: k, got: bits.len() });
            }
            let mut idx = 0usize;
            for (j, ch) in bits.chars().enumerate() {
                match ch {
                    '0' => {}
                    '1' => idx |= 1 << (k - 1 - j),
                    _ => {
                        return Err(Error::InvalidOccupancy {
                            mode: format!("{}", modes[j]),
                            value: ch.to_digit(10).map(|d| d as u8).unwrap_or(u8::MAX),
                        })
                    }
                }
            }
            parsed.push((idx, *c));
        }
        Factor::from_indices(modes, parsed)
    }

    pub fn from_indices(modes: Vec<ModeId>, terms: Vec<(usize, Complex64)>) -> Result<Self> {
        let mut sorted = modes.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != modes.len() {
            return Err(Error::InvalidArgument("factor lists a mode twice".into()));
        }
        if terms.iter().any(|&(i, _)| i >> modes.len() != 0) {
            return Err(Error::InvalidArgument("factor term outside its modes".into()));
        }
        Ok(Factor { modes, terms })
    }

    pub fn modes(&self) -> &[ModeId] {
        &self.modes
    }

    /// The factor as a normalized vector over its modes sorted into layout
    /// order, with the creation-string reordering signs applied.
    pub fn local_vector(&self, layout: &Arc<SystemLayout>) -> Result<(Vec<ModeId>, DVector<Complex64>)> {
        let mut sorted = self.modes.clone();
        sorted.sort();
        let sub = Arc::new(SystemLayout::new(
            sorted
                .iter()
                .map(|&m| {
                    let mut s = layout.spec(m).clone();
                    s.party = "_".into();
                    s
                })
                .collect(),
        )?);
        let remap: Vec<ModeId> =
            self.modes.iter().map(|m| ModeId(sorted.iter().position(|s| s == m).unwrap())).collect();
        let f = Factor { modes: remap, terms: self.terms.clone() };
        let state = PureState::product(&sub, &[f])?;
        let mut v = DVector::zeros(1 << sorted.len());
        for (k, a) in state.amplitudes() {
            v[k as usize] = a;
        }
        Ok((sorted, v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    fn two_party() -> Arc<SystemLayout> {
        Arc::new(SystemLayout::new(vec![ModeSpec::fermion("a", "A"), ModeSpec::fermion("b", "B")]).unwrap())
    }

    #[test]
    fn superpose_builds_bell_states() {
        let l = two_party();
        let s01 = PureState::basis(&l, &"01".into()).unwrap();
        let s10 = PureState::basis(&l, &"10".into()).unwrap();
        let psi = PureState::superpose(&[(c(1.0), &s01), (c(1.0), &s10)]).unwrap();
        assert!((psi.amplitude(0b01) - c(std::f64::consts::FRAC_1_SQRT_2)).norm() < 1e-15);
        assert!((psi.norm() - 1.0).abs() < 1e-15);
        assert_eq!(PureState::superpose(&[(c(1.0), &s01), (c(-1.0), &s01)]).unwrap_err(), Error::ZeroVector);
    }

    #[test]
    fn mode_operators() {
        let l = two_party();
        let vac = PureState::vacuum(&l);
        let a = vac.apply_mode_op(ModeId(0), ModeOpKind::Create).unwrap();
        assert_eq!(a.amplitude(0b10), c(1.0));
        let ab = a.apply_mode_op(ModeId(1), ModeOpKind::Create).unwrap();
        assert_eq!(ab.amplitude(0b11), c(-1.0));
        let z = PureState::basis(&l, &"01".into()).unwrap().apply_mode_op(ModeId(0), ModeOpKind::Annihilate).unwrap();
        assert!(z.is_zero());
        assert!(!z.is_normalized());
    }

    #[test]
    fn inner_products() {
        let l = two_party();
        let s01 = PureState::basis(&l, &"01".into()).unwrap();
        let psi = PureState::from_bitstrings(&l, &[("01", c(1.0)), ("10", c(1.0))]).unwrap();
        let phi = PureState::from_bitstrings(&l, &[("00", c(1.0)), ("11", c(1.0))]).unwrap();
        assert!((psi.inner(&psi).unwrap() - c(1.0)).norm() < 1e-15);
        assert_eq!(psi.inner(&phi).unwrap(), c(0.0));
        assert!((s01.inner(&psi).unwrap() - c(0.5f64.sqrt())).norm() < 1e-15);
        let i = Complex64::new(0.0, 1.0);
        let s = PureState::from_bitstrings(&l, &[("01", i)]).unwrap();
        assert_eq!(s.inner(&s01).unwrap(), -i);
    }

    #[test]
    fn product_of_two_odd_factors_carries_sign() {
        let l = Arc::new(
            SystemLayout::new(vec![
                ModeSpec::fermion("a1", "A"),
                ModeSpec::fermion("a2", "A"),
                ModeSpec::fermion("b", "B"),
            ])
            .unwrap(),
        );
        // (a1^+)(a2^+ ... ) written as factor (b | a1) then (a2): b^+ a2^+ = - a2^+ b^+
        let f1 = Factor::new(vec![ModeId(0), ModeId(2)], &[("01", c(1.0))]).unwrap();
        let f2 = Factor::new(vec![ModeId(1)], &[("1", c(1.0))]).unwrap();
        let s = PureState::product(&l, &[f1, f2]).unwrap();
        assert_eq!(s.amplitude(0b011), c(-1.0));
    }

    #[test]
    fn ancilla_insertion() {
        let l = two_party();
        let psi = PureState::from_bitstrings(&l, &[("01", c(1.0)), ("10", c(1.0))]).unwrap();
        let with = psi.add_ancilla(ModeSpec::fermion("anc", "A"), 0).unwrap();
        assert_eq!(with.layout().len(), 3);
        assert_eq!(with.layout().label(ModeId(1)), "anc");
        assert!(with.amplitude(0b001).norm() > 0.7 && with.amplitude(0b100).norm() > 0.7);
        assert_eq!(
            psi.add_ancilla(ModeSpec::fermion("a", "A"), 0).unwrap_err(),
            Error::DuplicateLabel("a".into())
        );
        let occupied = PureState::vacuum(&l).add_ancilla(ModeSpec::fermion("x", "B"), 1).unwrap();
        assert_eq!(occupied.amplitude(0b001), c(1.0));
    }

    #[test]
    fn transfer_changes_only_party() {
        let l = two_party();
        let psi = PureState::from_bitstrings(&l, &[("01", c(1.0)), ("10", c(1.0))]).unwrap();
        let moved = psi.transfer_mode(ModeId(0), "B").unwrap();
        assert_eq!(moved.layout().party_of(ModeId(0)), "B");
        assert!(moved.layout().party_modes("A").unwrap().is_empty());
        assert_eq!(moved.inner(&psi).unwrap(), psi.inner(&psi).unwrap());
        let back = moved.transfer_mode(ModeId(0), "A").unwrap();
        assert_eq!(back.layout(), psi.layout());
        assert!(psi.transfer_mode(ModeId(7), "B").is_err());
        assert_eq!(psi.transfer_mode(ModeId(0), "Z").unwrap_err(), Error::UnknownParty("Z".into()));
    }
}
