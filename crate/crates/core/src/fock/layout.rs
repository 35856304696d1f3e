//! Mode registry. The order of modes in a layout is the Jordan-Wigner order
//! used for every fermionic sign in the crate.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::MAX_MODES;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Statistics {
    Fermion,
    Boson,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModeSpec {
    pub label: String,
    pub statistics: Statistics,
    pub party: String,
}

impl ModeSpec {
    pub fn fermion(label: impl Into<String>, party: impl Into<String>) -> Self {
        ModeSpec { label: label.into(), statistics: Statistics::Fermion, party: party.into() }
    }

    pub fn boson(label: impl Into<String>, party: impl Into<String>) -> Self {
        ModeSpec { label: label.into(), statistics: Statistics::Boson, party: party.into() }
    }

    pub fn is_fermion(&self) -> bool {
        self.statistics == Statistics::Fermion
    }
}

/// Position of a mode inside its layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ModeId(pub usize);

impl fmt::Display for ModeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// Ordered, immutable set of modes.
///
/// Basis vectors are bit strings with the first mode as the most significant
/// bit, so `|n_0 n_1 ... n_{L-1}>` has key `sum_p n_p << (L - 1 - p)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SystemLayout {
    modes: Vec<ModeSpec>,
    // every party ever declared, in order of first appearance; a party may
    // temporarily own no modes after a transfer
    parties: Vec<String>,
    fermion_mask: u64,
}

impl SystemLayout {
    /// Builds a layout; parties must occupy contiguous blocks.
    pub fn new(specs: Vec<ModeSpec>) -> Result<Self> {
        let layout = Self::new_unchecked_order(specs)?;
        let mut seen: Vec<&str> = Vec::new();
        for spec in &layout.modes {
            match seen.last() {
                Some(last) if *last == spec.party => {}
                _ => {
                    if seen.contains(&spec.party.as_str()) {
                        return Err(Error::NonContiguousParty(spec.party.clone()));
                    }
                    seen.push(&spec.party);
                }
            }
        }
        Ok(layout)
    }

    /// Same checks as [`SystemLayout::new`] except party contiguity. Used
    /// after a mode has been handed to another party.
    pub(crate) fn new_unchecked_order(specs: Vec<ModeSpec>) -> Result<Self> {
        if specs.is_empty() {
            return Err(Error::EmptyLayout);
        }
        if specs.len() > MAX_MODES {
            return Err(Error::TooManyModes(specs.len()));
        }
        let mut labels = BTreeSet::new();
        for spec in &specs {
            if !labels.insert(spec.label.as_str()) {
                return Err(Error::DuplicateLabel(spec.label.clone()));
            }
            if spec.party.is_empty() {
                return Err(Error::EmptyParty(spec.label.clone()));
            }
        }
        let n = specs.len();
        let fermion_mask = specs
            .iter()
            .enumerate()
            .filter(|(_, s)| s.is_fermion())
            .fold(0u64, |m, (p, _)| m | 1u64 << (n - 1 - p));
        let mut parties: Vec<String> = Vec::new();
        for m in &specs {
            if !parties.contains(&m.party) {
                parties.push(m.party.clone());
            }
        }
        Ok(SystemLayout { modes: specs, parties, fermion_mask })
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    /// Hilbert-space dimension `2^L`.
    pub fn dim(&self) -> u128 {
        1u128 << self.modes.len()
    }

    pub fn modes(&self) -> &[ModeSpec] {
        &self.modes
    }

    pub fn spec(&self, id: ModeId) -> &ModeSpec {
        &self.modes[id.0]
    }

    pub fn label(&self, id: ModeId) -> &str {
        &self.modes[id.0].label
    }

    pub fn mode(&self, label: &str) -> Result<ModeId> {
        self.modes
            .iter()
            .position(|m| m.label == label)
            .map(ModeId)
            .ok_or_else(|| Error::UnknownMode(label.to_string()))
    }

    pub fn ids(&self) -> impl Iterator<Item = ModeId> {
        (0..self.modes.len()).map(ModeId)
    }

    pub fn check(&self, id: ModeId) -> Result<()> {
        if id.0 < self.modes.len() {
            Ok(())
        } else {
            Err(Error::UnknownMode(id.to_string()))
        }
    }

    /// Parties in order of first appearance.
    pub fn parties(&self) -> Vec<String> {
        self.parties.clone()
    }

    pub fn has_party(&self, party: &str) -> bool {
        self.parties.iter().any(|p| p == party)
    }

    /// Modes currently owned by `party` (possibly none).
    pub fn party_modes(&self, party: &str) -> Result<Vec<ModeId>> {
        if !self.has_party(party) {
            return Err(Error::UnknownParty(party.to_string()));
        }
        Ok(self.ids().filter(|&id| self.modes[id.0].party == party).collect())
    }

    pub fn party_of(&self, id: ModeId) -> &str {
        &self.modes[id.0].party
    }

    /// Bit of `id` in a basis key.
    pub fn bit(&self, id: ModeId) -> u64 {
        1u64 << (self.modes.len() - 1 - id.0)
    }

    pub fn mask(&self, ids: &[ModeId]) -> u64 {
        ids.iter().fold(0, |m, &id| m | self.bit(id))
    }

    pub fn fermion_mask(&self) -> u64 {
        self.fermion_mask
    }

    pub fn party_mask(&self, party: &str) -> Result<u64> {
        Ok(self.mask(&self.party_modes(party)?))
    }

    /// Bits of all modes strictly before `id` in the Jordan-Wigner order.
    pub fn before_mask(&self, id: ModeId) -> u64 {
        let n = self.modes.len();
        if id.0 == 0 {
            0
        } else {
            (!0u64 << (n - id.0)) & self.full_mask()
        }
    }

    pub fn full_mask(&self) -> u64 {
        if self.modes.len() == 64 {
            !0
        } else {
            (1u64 << self.modes.len()) - 1
        }
    }

    /// True if both layouts describe the same modes in the same order,
    /// irrespective of party attribution.
    pub fn same_basis(&self, other: &SystemLayout) -> bool {
        self.modes.len() == other.modes.len()
            && self
                .modes
                .iter()
                .zip(&other.modes)
                .all(|(a, b)| a.label == b.label && a.statistics == b.statistics)
    }

    /// Copy of the layout with `id` attributed to `party`. Party blocks may
    /// become non-contiguous; the mode order is untouched.
    pub fn with_party(&self, id: ModeId, party: &str) -> Result<SystemLayout> {
        self.check(id)?;
        if !self.has_party(party) {
            return Err(Error::UnknownParty(party.to_string()));
        }
        let mut modes = self.modes.clone();
        modes[id.0].party = party.to_string();
        let mut layout = Self::new_unchecked_order(modes)?;
        layout.parties = self.parties.clone();
        Ok(layout)
    }

    /// Rebuilds a layout with an explicit party registry (used when loading
    /// documents).
    pub(crate) fn with_registry(specs: Vec<ModeSpec>, parties: Vec<String>) -> Result<SystemLayout> {
        let mut layout = Self::new_unchecked_order(specs)?;
        let mut registry = parties;
        for p in layout.parties.drain(..) {
            if !registry.contains(&p) {
                registry.push(p);
            }
        }
        layout.parties = registry;
        Ok(layout)
    }

    /// Copy of the layout with `spec` inserted after the last mode of its
    /// party (or at the end if the party is new). Returns the new mode id.
    pub fn with_mode_appended_to_party(&self, spec: ModeSpec) -> Result<(SystemLayout, ModeId)> {
        let pos = self
            .modes
            .iter()
            .rposition(|m| m.party == spec.party)
            .map(|p| p + 1)
            .unwrap_or(self.modes.len());
        let mut modes = self.modes.clone();
        modes.insert(pos, spec);
        let mut layout = Self::new_unchecked_order(modes)?;
        let mut parties = self.parties.clone();
        for p in layout.parties.drain(..) {
            if !parties.contains(&p) {
                parties.push(p);
            }
        }
        layout.parties = parties;
        Ok((layout, ModeId(pos)))
    }

    /// Renders a key as a bit string in layout order.
    pub fn format_key(&self, key: u64) -> String {
        let n = self.modes.len();
        (0..n).map(|p| if key >> (n - 1 - p) & 1 == 1 { '1' } else { '0' }).collect()
    }

    /// Parses a bit string in layout order.
    pub fn parse_key(&self, bits: &str) -> Result<u64> {
        let n = self.modes.len();
        if bits.chars().count() != n {
            return Err(Error::OccupationLength { expected: n, got: bits.chars().count() });
        }
        let mut key = 0u64;
        for (p, c) in bits.chars().enumerate() {
            match c {
                '0' => {}
                '1' => key |= 1u64 << (n - 1 - p),
                other => {
                    return Err(Error::InvalidOccupancy {
                        mode: self.modes[p].label.clone(),
                        value: other.to_digit(10).map(|d| d as u8).unwrap_or(u8::MAX),
                    })
                }
            }
        }
        Ok(key)
    }
}

/// Per-mode occupation numbers, each 0 or 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Occupation(pub Vec<u8>);

impl Occupation {
    pub fn key(&self, layout: &SystemLayout) -> Result<u64> {
        if self.0.len() != layout.len() {
            return Err(Error::OccupationLength { expected: layout.len(), got: self.0.len() });
        }
        let n = layout.len();
        let mut key = 0;
        for (p, &v) in self.0.iter().enumerate() {
            match v {
                0 => {}
                1 => key |= 1u64 << (n - 1 - p),
                _ => {
                    return Err(Error::InvalidOccupancy {
                        mode: layout.modes[p].label.clone(),
                        value: v,
                    })
                }
            }
        }
        Ok(key)
    }

    pub fn from_key(layout: &SystemLayout, key: u64) -> Self {
        let n = layout.len();
        Occupation((0..n).map(|p| (key >> (n - 1 - p) & 1) as u8).collect())
    }
}

impl From<&str> for Occupation {
    fn from(s: &str) -> Self {
        Occupation(s.bytes().map(|b| b.wrapping_sub(b'0')).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_fermion_layout_has_dimension_four() {
        let l = SystemLayout::new(vec![ModeSpec::fermion("a", "A"), ModeSpec::fermion("b", "B")])
            .unwrap();
        assert_eq!(l.len(), 2);
        assert_eq!(l.dim(), 4);
        assert_eq!(l.parties(), vec!["A", "B"]);
    }

    #[test]
    fn three_party_layout() {
        let l = SystemLayout::new(vec![
            ModeSpec::fermion("a1", "A"),
            ModeSpec::fermion("a2", "A"),
            ModeSpec::fermion("b", "B"),
            ModeSpec::fermion("c", "C"),
        ])
        .unwrap();
        assert_eq!(l.parties(), vec!["A", "B", "C"]);
        assert_eq!(l.party_modes("A").unwrap(), vec![ModeId(0), ModeId(1)]);
    }

    #[test]
    fn rejects_bad_layouts() {
        assert_eq!(SystemLayout::new(vec![]), Err(Error::EmptyLayout));
        assert_eq!(
            SystemLayout::new(vec![ModeSpec::fermion("a", "A"), ModeSpec::fermion("a", "B")]),
            Err(Error::DuplicateLabel("a".into()))
        );
        assert_eq!(
            SystemLayout::new(vec![ModeSpec::fermion("a", "")]),
            Err(Error::EmptyParty("a".into()))
        );
        assert_eq!(
            SystemLayout::new(vec![
                ModeSpec::fermion("a", "A"),
                ModeSpec::fermion("b", "B"),
                ModeSpec::fermion("c", "A"),
            ]),
            Err(Error::NonContiguousParty("A".into()))
        );
    }

    #[test]
    fn key_conventions() {
        let l = SystemLayout::new(vec![
            ModeSpec::fermion("a", "A"),
            ModeSpec::boson("x", "A"),
            ModeSpec::fermion("b", "B"),
        ])
        .unwrap();
        assert_eq!(l.bit(ModeId(0)), 0b100);
        assert_eq!(l.fermion_mask(), 0b101);
        assert_eq!(l.before_mask(ModeId(2)), 0b110);
        assert_eq!(l.before_mask(ModeId(0)), 0);
        assert_eq!(l.parse_key("101").unwrap(), 0b101);
        assert_eq!(l.format_key(0b011), "011");
        assert!(matches!(
            Occupation(vec![0, 2, 0]).key(&l),
            Err(Error::InvalidOccupancy { value: 2, .. })
        ));
    }

    #[test]
    fn ancilla_goes_to_end_of_party_block() {
        let l = SystemLayout::new(vec![ModeSpec::fermion("a", "A"), ModeSpec::fermion("b", "B")])
            .unwrap();
        let (l2, id) = l.with_mode_appended_to_party(ModeSpec::fermion("anc", "A")).unwrap();
        assert_eq!(id, ModeId(1));
        assert_eq!(l2.label(ModeId(2)), "b");
    }
}
