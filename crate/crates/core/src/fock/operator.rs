use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::layout::{ModeId, SystemLayout};
use super::matrix::LocalMatrix;
use super::state::PureState;
use super::{reorder_parity, sign, Subset, MAX_SUPPORT, PRUNE};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeOpKind {
    Create,
    Annihilate,
}

/// Operator with a declared mode support, acting as the identity elsewhere.
///
/// `matrix` is expressed in the local occupation basis of `support` taken
/// in layout order, first support mode most significant. The full-space
/// operator is defined by the reordering embedding described in
/// [`crate::fock`].
#[derive(Debug, Clone)]
pub struct LinearOperator {
    layout: Arc<SystemLayout>,
    support: Vec<ModeId>,
    matrix: LocalMatrix,
    party: Option<String>,
}

fn one() -> Complex64 {
    Complex64::new(1.0, 0.0)
}

impl LinearOperator {
    pub fn identity(layout: &Arc<SystemLayout>) -> Self {
        LinearOperator {
            layout: layout.clone(),
            support: Vec::new(),
            matrix: LocalMatrix::identity(1),
            party: None,
        }
    }

    /// Builds an operator from a matrix over `modes` taken in the given
    /// order (which need not be the layout order).
    pub fn from_local(layout: &Arc<SystemLayout>, modes: &[ModeId], matrix: LocalMatrix) -> Result<Self> {
        let k = modes.len();
        if k > MAX_SUPPORT {
            return Err(Error::TooLargeForDense(k));
        }
        for &m in modes {
            layout.check(m)?;
        }
        let mut sorted = modes.to_vec();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != k {
            return Err(Error::InvalidArgument("operator support lists a mode twice".into()));
        }
        if matrix.dim() != 1 << k {
            return Err(Error::DimensionMismatch(format!(
                "{} modes need a {}-dimensional matrix, got {}",
                k,
                1usize << k,
                matrix.dim()
            )));
        }
        let matrix = if sorted == modes {
            matrix
        } else {
            let relabel = reorder_table(layout, modes, &sorted);
            LocalMatrix::from_entries(
                matrix.dim(),
                matrix.entries().map(|(r, c, v)| {
                    let (rr, sr) = relabel[r];
                    let (cc, sc) = relabel[c];
                    (rr, cc, v * sr * sc)
                }),
            )
        };
        let party = common_party(layout, &sorted);
        Ok(LinearOperator { layout: layout.clone(), support: sorted, matrix, party })
    }

    pub fn from_dense(layout: &Arc<SystemLayout>, modes: &[ModeId], matrix: &DMatrix<Complex64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::DimensionMismatch("matrix is not square".into()));
        }
        Self::from_local(layout, modes, LocalMatrix::from_dense(matrix))
    }

    /// Single-mode creation or annihilation operator.
    pub fn mode_op(layout: &Arc<SystemLayout>, mode: ModeId, kind: ModeOpKind) -> Result<Self> {
        let m = match kind {
            ModeOpKind::Create => LocalMatrix::from_entries(2, [(1, 0, one())]),
            ModeOpKind::Annihilate => LocalMatrix::from_entries(2, [(0, 1, one())]),
        };
        Self::from_local(layout, &[mode], m)
    }

    pub fn create(layout: &Arc<SystemLayout>, mode: ModeId) -> Result<Self> {
        Self::mode_op(layout, mode, ModeOpKind::Create)
    }

    pub fn annihilate(layout: &Arc<SystemLayout>, mode: ModeId) -> Result<Self> {
        Self::mode_op(layout, mode, ModeOpKind::Annihilate)
    }

    pub fn number(layout: &Arc<SystemLayout>, mode: ModeId) -> Result<Self> {
        Self::from_local(layout, &[mode], LocalMatrix::diagonal(&[Complex64::new(0.0, 0.0), one()]))
    }

    /// Diagonal operator; `f` receives the local occupation index over
    /// `modes` in the given order.
    pub fn diagonal(
        layout: &Arc<SystemLayout>,
        modes: &[ModeId],
        f: impl Fn(usize) -> Complex64,
    ) -> Result<Self> {
        if modes.len() > MAX_SUPPORT {
            return Err(Error::TooLargeForDense(modes.len()));
        }
        let values: Vec<Complex64> = (0..1usize << modes.len()).map(f).collect();
        Self::from_local(layout, modes, LocalMatrix::diagonal(&values))
    }

    /// Rank-one operator `|ket><bra|` for local vectors over `modes` in the
    /// given order.
    pub fn outer(
        layout: &Arc<SystemLayout>,
        modes: &[ModeId],
        ket: &[Complex64],
        bra: &[Complex64],
    ) -> Result<Self> {
        let dim = 1usize << modes.len();
        if ket.len() != dim || bra.len() != dim {
            return Err(Error::DimensionMismatch("outer product vectors".into()));
        }
        let entries = ket.iter().enumerate().flat_map(|(r, &k)| {
            bra.iter().enumerate().map(move |(c, &b)| (r, c, k * b.conj()))
        });
        Self::from_local(layout, modes, LocalMatrix::from_entries(dim, entries))
    }

    /// Unitary given as a basis map on `modes` of `party` (in the given
    /// order): each entry sends local occupation `from` to `phase * to`.
    /// Unlisted occupations map to themselves.
    pub fn embed_local_map(
        layout: &Arc<SystemLayout>,
        party: &str,
        modes: &[ModeId],
        map: &[(&str, Complex64, &str)],
    ) -> Result<Self> {
        let owned = layout.party_modes(party)?;
        for &m in modes {
            layout.check(m)?;
            if !owned.contains(&m) {
                return Err(Error::NotLocal {
                    party: party.to_string(),
                    detail: format!("mode `{}` belongs to `{}`", layout.label(m), layout.party_of(m)),
                });
            }
        }
        let k = modes.len();
        let parse = |bits: &str| -> Result<usize> {
            if bits.len() != k {
                return Err(Error::OccupationLength { expected: k, got: bits.len() });
            }
            bits.chars().try_fold(0usize, |acc, ch| match ch {
                '0' => Ok(acc << 1),
                '1' => Ok(acc << 1 | 1),
                _ => Err(Error::InvalidArgument(format!("bad occupation `{bits}`"))),
            })
        };
        let dim = 1usize << k;
        let mut image: Vec<Option<(usize, Complex64)>> = vec![None; dim];
        for (from, phase, to) in map {
            let (f, t) = (parse(from)?, parse(to)?);
            if image[f].is_some() {
                return Err(Error::NotBijective(format!("input {from} mapped twice")));
            }
            if (phase.norm() - 1.0).abs() > super::TOL {
                return Err(Error::NotUnitary((phase.norm() - 1.0).abs()));
            }
            image[f] = Some((t, *phase));
        }
        let mut hit = vec![false; dim];
        let mut entries = Vec::with_capacity(dim);
        for (f, img) in image.into_iter().enumerate() {
            let (t, phase) = img.unwrap_or((f, one()));
            if std::mem::replace(&mut hit[t], true) {
                return Err(Error::NotBijective(format!("two inputs reach output {t:0k$b}")));
            }
            entries.push((t, f, phase));
        }
        let op = Self::from_local(layout, modes, LocalMatrix::from_entries(dim, entries))?;
        Ok(op.with_party(party))
    }

    /// [`LinearOperator::embed_local_map`] over all modes of `party`.
    pub fn embed_local_unitary(
        layout: &Arc<SystemLayout>,
        party: &str,
        map: &[(&str, Complex64, &str)],
    ) -> Result<Self> {
        let modes = layout.party_modes(party)?;
        Self::embed_local_map(layout, party, &modes, map)
    }

    pub fn with_party(mut self, party: &str) -> Self {
        self.party = Some(party.to_string());
        self
    }

    pub fn layout(&self) -> &Arc<SystemLayout> {
        &self.layout
    }

    pub fn support(&self) -> &[ModeId] {
        &self.support
    }

    pub fn matrix(&self) -> &LocalMatrix {
        &self.matrix
    }

    pub fn party(&self) -> Option<&str> {
        self.party.as_deref()
    }

    /// Rebinds the operator to a layout with the same basis (for example
    /// after a mode transfer changed party attributions).
    pub fn rebind(&self, layout: &Arc<SystemLayout>) -> Result<Self> {
        if !self.layout.same_basis(layout) {
            return Err(Error::LayoutMismatch);
        }
        let mut op = self.clone();
        op.layout = layout.clone();
        op.party = common_party(layout, &op.support);
        Ok(op)
    }

    /// Matrix of this operator over a sorted superset of its support.
    pub fn lift(&self, target: &[ModeId]) -> Result<LocalMatrix> {
        if target.len() > MAX_SUPPORT {
            return Err(Error::TooLargeForDense(target.len()));
        }
        if target == self.support.as_slice() {
            return Ok(self.matrix.clone());
        }
        let m = target.len();
        let local_bit = |i: usize| 1u64 << (m - 1 - i);
        let mut sub_bits = Vec::with_capacity(self.support.len());
        for s in &self.support {
            let i = target
                .iter()
                .position(|t| t == s)
                .ok_or_else(|| Error::InvalidArgument("lift target does not contain the support".into()))?;
            sub_bits.push(local_bit(i));
        }
        let fermions = target
            .iter()
            .enumerate()
            .filter(|(_, &t)| self.layout.spec(t).is_fermion())
            .fold(0u64, |f, (i, _)| f | local_bit(i));
        let sub = Subset::new(sub_bits);
        let dim = 1usize << m;
        let mut entries = Vec::new();
        for c in 0..dim {
            let key = c as u64;
            let rest = key & !sub.mask();
            let p_in = reorder_parity(key, sub.mask(), fermions);
            for &(r, v) in self.matrix.col(sub.extract(key)) {
                let nk = rest | sub.deposit(r);
                let p_out = reorder_parity(nk, sub.mask(), fermions);
                entries.push((nk as usize, c, v * sign(p_in ^ p_out)));
            }
        }
        Ok(LocalMatrix::from_entries(dim, entries))
    }

    fn union_support(&self, other: &Self) -> Result<Vec<ModeId>> {
        if !self.layout.same_basis(&other.layout) {
            return Err(Error::LayoutMismatch);
        }
        let mut s: Vec<ModeId> = self.support.iter().chain(&other.support).copied().collect();
        s.sort();
        s.dedup();
        Ok(s)
    }

    fn combine(&self, other: &Self, f: impl Fn(&LocalMatrix, &LocalMatrix) -> LocalMatrix) -> Result<Self> {
        let support = self.union_support(other)?;
        let a = self.lift(&support)?;
        let b = other.lift(&support)?;
        let party = common_party(&self.layout, &support);
        Ok(LinearOperator { layout: self.layout.clone(), support, matrix: f(&a, &b), party })
    }

    /// `self * other` (other acts first).
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.combine(other, |a, b| a.mul(b))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.combine(other, |a, b| a.add(b))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.combine(other, |a, b| a.sub(b))
    }

    pub fn commutator(&self, other: &Self) -> Result<Self> {
        self.combine(other, |a, b| a.mul(b).sub(&b.mul(a)))
    }

    pub fn anticommutator(&self, other: &Self) -> Result<Self> {
        self.combine(other, |a, b| a.mul(b).add(&b.mul(a)))
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let mut op = self.clone();
        op.matrix = self.matrix.scale(s);
        op
    }

    pub fn adjoint(&self) -> Self {
        let mut op = self.clone();
        op.matrix = self.matrix.adjoint();
        op
    }

    /// Largest entry of `self - other` over the union support.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        Ok(self.sub(other)?.matrix.max_abs())
    }

    pub fn max_abs(&self) -> f64 {
        self.matrix.max_abs()
    }

    pub fn hermiticity_deviation(&self) -> f64 {
        self.matrix.max_abs_diff(&self.matrix.adjoint())
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_deviation() <= tol
    }

    pub fn unitarity_deviation(&self) -> f64 {
        self.matrix.adjoint().mul(&self.matrix).max_abs_diff(&LocalMatrix::identity(self.matrix.dim()))
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_deviation() <= tol
    }

    /// Dense matrix over the whole layout; only for small layouts.
    pub fn to_full_matrix(&self) -> Result<DMatrix<Complex64>> {
        if self.layout.len() > 12 {
            return Err(Error::TooLargeForDense(self.layout.len()));
        }
        let all: Vec<ModeId> = self.layout.ids().collect();
        Ok(self.lift(&all)?.to_dense())
    }

    /// Matrix-vector product; the result is flagged unnormalized.
    pub fn apply(&self, state: &PureState) -> Result<PureState> {
        if !self.layout.same_basis(state.layout()) {
            return Err(Error::LayoutMismatch);
        }
        let sub = Subset::of(&self.layout, &self.support);
        let fermions = self.layout.fermion_mask();
        let mut out: BTreeMap<u64, Complex64> = BTreeMap::new();
        for (&key, &amp) in state.amplitude_map() {
            let rest = key & !sub.mask();
            let p_in = reorder_parity(key, sub.mask(), fermions);
            for &(r, v) in self.matrix.col(sub.extract(key)) {
                let nk = rest | sub.deposit(r);
                let p_out = reorder_parity(nk, sub.mask(), fermions);
                *out.entry(nk).or_default() += amp * v * sign(p_in ^ p_out);
            }
        }
        out.retain(|_, a| a.norm() >= PRUNE);
        Ok(PureState::from_map(state.layout_arc().clone(), out, false))
    }

    /// `<a| self |b>`.
    pub fn matrix_element(&self, a: &PureState, b: &PureState) -> Result<Complex64> {
        a.inner(&self.apply(b)?)
    }

    pub fn expectation(&self, state: &PureState) -> Result<Complex64> {
        self.matrix_element(state, state)
    }
}

fn common_party(layout: &SystemLayout, support: &[ModeId]) -> Option<String> {
    let first = layout.party_of(*support.first()?);
    support.iter().all(|&m| layout.party_of(m) == first).then(|| first.to_string())
}

/// For each local index over `given` (first entry most significant), the
/// index over `sorted` and the sign of the creation-string reordering.
pub(crate) fn reorder_table(layout: &SystemLayout, given: &[ModeId], sorted: &[ModeId]) -> Vec<(usize, f64)> {
    let k = given.len();
    let target_pos: Vec<usize> =
        given.iter().map(|g| sorted.iter().position(|s| s == g).expect("same mode set")).collect();
    (0..1usize << k)
        .map(|x| {
            let occupied: Vec<usize> = (0..k).filter(|&j| x >> (k - 1 - j) & 1 == 1).collect();
            let y = occupied.iter().fold(0usize, |y, &j| y | 1 << (k - 1 - target_pos[j]));
            let fermionic: Vec<usize> = occupied
                .iter()
                .filter(|&&j| layout.spec(given[j]).is_fermion())
                .map(|&j| target_pos[j])
                .collect();
            let mut inversions = 0usize;
            for i in 0..fermionic.len() {
                for j in i + 1..fermionic.len() {
                    if fermionic[i] > fermionic[j] {
                        inversions += 1;
                    }
                }
            }
            (y, sign(inversions % 2 == 1))
        })
        .collect()
}
