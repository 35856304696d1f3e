//! Reduced density matrices and ensembles.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use super::layout::{ModeId, SystemLayout};
use super::operator::reorder_table;
use super::state::PureState;
use super::{reorder_parity, sign, Subset, MAX_SUPPORT, TOL};
use crate::error::{Error, Result};

/// Density matrix over a subset of modes.
///
/// The local basis is the occupation basis of `modes` in the stored order,
/// first mode most significant. Basis vectors are creation strings in that
/// order acting on the vacuum, which is what makes traces over the
/// complement independent of where the complement sits in the layout.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    layout: Arc<SystemLayout>,
    modes: Vec<ModeId>,
    matrix: DMatrix<Complex64>,
}

fn sorted_modes(layout: &SystemLayout, modes: &[ModeId]) -> Result<Vec<ModeId>> {
    if modes.is_empty() {
        return Err(Error::InvalidArgument("empty mode set".into()));
    }
    for &m in modes {
        layout.check(m)?;
    }
    let mut sorted = modes.to_vec();
    sorted.sort();
    sorted.dedup();
    if sorted.len() != modes.len() {
        return Err(Error::InvalidArgument("mode listed twice".into()));
    }
    if sorted.len() > MAX_SUPPORT {
        return Err(Error::TooLargeForDense(sorted.len()));
    }
    Ok(sorted)
}

/// Rows of the Schmidt matrix: for every configuration of the complement,
/// the signed amplitudes over the kept modes.
fn schmidt_columns(state: &PureState, sub: &Subset) -> BTreeMap<u64, Vec<(usize, Complex64)>> {
    let fermions = state.layout().fermion_mask();
    let mut cols: BTreeMap<u64, Vec<(usize, Complex64)>> = BTreeMap::new();
    for (key, amp) in state.amplitudes() {
        let rest = key & !sub.mask();
        let s = sign(reorder_parity(key, sub.mask(), fermions));
        cols.entry(rest).or_default().push((sub.extract(key), amp * s));
    }
    cols
}

impl DensityMatrix {
    /// `|psi><psi|` traced down to `modes`.
    pub fn reduce_pure(state: &PureState, modes: &[ModeId]) -> Result<Self> {
        let layout = state.layout_arc().clone();
        let sorted = sorted_modes(&layout, modes)?;
        let sub = Subset::of(&layout, &sorted);
        let dim = 1usize << sorted.len();
        let mut rho = DMatrix::zeros(dim, dim);
        for col in schmidt_columns(state, &sub).values() {
            for &(i, a) in col {
                for &(j, b) in col {
                    rho[(i, j)] += a * b.conj();
                }
            }
        }
        let d = DensityMatrix { layout, modes: sorted, matrix: rho };
        d.reorder(modes)
    }

    pub fn from_matrix(layout: &Arc<SystemLayout>, modes: &[ModeId], matrix: DMatrix<Complex64>) -> Result<Self> {
        let dim = 1usize << modes.len();
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::DimensionMismatch(format!("expected {dim}x{dim} density matrix")));
        }
        sorted_modes(layout, modes)?;
        Ok(DensityMatrix { layout: layout.clone(), modes: modes.to_vec(), matrix })
    }

    /// Same operator expressed over `order` (a permutation of the stored
    /// modes).
    pub fn reorder(&self, order: &[ModeId]) -> Result<Self> {
        if order == self.modes.as_slice() {
            return Ok(self.clone());
        }
        let mut a = order.to_vec();
        a.sort();
        let mut b = self.modes.clone();
        b.sort();
        if a != b {
            return Err(Error::InvalidArgument("reorder needs the same mode set".into()));
        }
        // both orders relative to the sorted one
        let to_sorted_new = reorder_table(&self.layout, order, &a);
        let to_sorted_old = reorder_table(&self.layout, &self.modes, &a);
        let dim = self.matrix.nrows();
        let mut old_index = vec![(0usize, 1.0f64); dim];
        for (x, &(y, s)) in to_sorted_old.iter().enumerate() {
            old_index[y] = (x, s);
        }
        let map: Vec<(usize, f64)> = to_sorted_new
            .iter()
            .map(|&(y, s)| {
                let (x, so) = old_index[y];
                (x, s * so)
            })
            .collect();
        let m = DMatrix::from_fn(dim, dim, |r, c| {
            let (ro, sr) = map[r];
            let (co, sc) = map[c];
            self.matrix[(ro, co)] * sr * sc
        });
        Ok(DensityMatrix { layout: self.layout.clone(), modes: order.to_vec(), matrix: m })
    }

    pub fn modes(&self) -> &[ModeId] {
        &self.modes
    }

    pub fn layout(&self) -> &Arc<SystemLayout> {
        &self.layout
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> Complex64 {
        self.matrix.trace()
    }

    pub fn hermiticity_deviation(&self) -> f64 {
        (&self.matrix - self.matrix.adjoint()).iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let herm = (&self.matrix + self.matrix.adjoint()) * Complex64::new(0.5, 0.0);
        let mut ev: Vec<f64> = SymmetricEigen::new(herm).eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    /// Hermitian, unit trace and positive semidefinite within `tol`.
    pub fn is_valid(&self, tol: f64) -> bool {
        self.hermiticity_deviation() <= tol
            && (self.trace() - Complex64::new(1.0, 0.0)).norm() <= tol
            && self.eigenvalues().first().is_none_or(|&l| l >= -tol)
    }

    /// Von Neumann entropy in bits.
    pub fn entropy_bits(&self) -> f64 {
        entropy_of(&self.eigenvalues())
    }

    pub fn purity(&self) -> f64 {
        (&self.matrix * &self.matrix).trace().re
    }

    /// `<v| rho |v>` for a local vector over the stored mode order.
    pub fn fidelity_with(&self, v: &DVector<Complex64>) -> Result<f64> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch("vector and density matrix".into()));
        }
        Ok((v.adjoint() * &self.matrix * v)[(0, 0)].re)
    }

    /// Half the trace norm of `self - other`; both must cover the same modes
    /// in the same order.
    pub fn trace_distance(&self, other: &DensityMatrix) -> Result<f64> {
        if self.modes != other.modes || !self.layout.same_basis(&other.layout) {
            return Err(Error::LayoutMismatch);
        }
        Ok(trace_distance(&self.matrix, &other.matrix))
    }
}

pub(crate) fn trace_distance(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    let d = a - b;
    let herm = (&d + d.adjoint()) * Complex64::new(0.5, 0.0);
    0.5 * SymmetricEigen::new(herm).eigenvalues.iter().map(|l| l.abs()).sum::<f64>()
}

pub(crate) fn entropy_of(eigenvalues: &[f64]) -> f64 {
    eigenvalues.iter().filter(|&&l| l > 1e-15).map(|&l| -l * l.log2()).sum::<f64>().max(0.0)
}

/// Entanglement entropy across `modes` versus the rest for a pure state,
/// computed from the Gram matrix on whichever side has fewer occupied
/// configurations. Never materializes the full reduced matrix.
pub fn schmidt_entropy(state: &PureState, modes: &[ModeId]) -> Result<f64> {
    let layout = state.layout_arc();
    for &m in modes {
        layout.check(m)?;
    }
    if modes.is_empty() || modes.len() == layout.len() {
        return Ok(0.0);
    }
    let mut sorted = modes.to_vec();
    sorted.sort();
    sorted.dedup();
    let sub = Subset::of(layout, &sorted);
    let cols = schmidt_columns(state, &sub);
    let mut row_ids: BTreeMap<usize, usize> = BTreeMap::new();
    for col in cols.values() {
        for &(i, _) in col {
            let n = row_ids.len();
            row_ids.entry(i).or_insert(n);
        }
    }
    let (nr, nc) = (row_ids.len(), cols.len());
    if nr.min(nc) > 4096 {
        return Err(Error::TooLargeForDense(nr.min(nc)));
    }
    let mut m = DMatrix::<Complex64>::zeros(nr, nc);
    for (c, col) in cols.values().enumerate() {
        for &(i, a) in col {
            m[(row_ids[&i], c)] = a;
        }
    }
    let norm = state.norm_sqr();
    let gram = if nr <= nc { &m * m.adjoint() } else { m.adjoint() * &m };
    let ev: Vec<f64> = SymmetricEigen::new(gram).eigenvalues.iter().map(|l| l / norm).collect();
    Ok(entropy_of(&ev))
}

/// Probabilistic ensemble of pure states on one layout.
#[derive(Debug, Clone)]
pub struct MixedState {
    members: Vec<(f64, PureState)>,
}

impl MixedState {
    pub fn new(members: Vec<(f64, PureState)>) -> Result<Self> {
        let first = members.first().ok_or(Error::InvalidArgument("empty ensemble".into()))?;
        let layout = first.1.layout_arc().clone();
        let mut total = 0.0;
        for (p, s) in &members {
            if p.is_nan() || *p < 0.0 {
                return Err(Error::InvalidArgument(format!("negative probability {p}")));
            }
            if !s.layout().same_basis(&layout) {
                return Err(Error::LayoutMismatch);
            }
            s.check_normalized()?;
            total += p;
        }
        if (total - 1.0).abs() > TOL {
            return Err(Error::InvalidArgument(format!("probabilities sum to {total}")));
        }
        Ok(MixedState { members })
    }

    pub fn pure(state: PureState) -> Self {
        MixedState { members: vec![(1.0, state)] }
    }

    pub fn members(&self) -> &[(f64, PureState)] {
        &self.members
    }

    pub fn layout(&self) -> &Arc<SystemLayout> {
        self.members[0].1.layout_arc()
    }

    pub fn reduced_density(&self, modes: &[ModeId]) -> Result<DensityMatrix> {
        let mut acc: Option<DensityMatrix> = None;
        for (p, s) in &self.members {
            let d = DensityMatrix::reduce_pure(s, modes)?;
            let scaled = d.matrix * Complex64::new(*p, 0.0);
            acc = Some(match acc {
                None => DensityMatrix { layout: self.layout().clone(), modes: d.modes, matrix: scaled },
                Some(mut a) => {
                    a.matrix += scaled;
                    a
                }
            });
        }
        Ok(acc.expect("ensemble is nonempty"))
    }

    /// Density matrix over every mode of the layout.
    pub fn density_matrix(&self) -> Result<DensityMatrix> {
        let all: Vec<ModeId> = self.layout().ids().collect();
        self.reduced_density(&all)
    }
}

impl PureState {
    pub fn reduced_density(&self, modes: &[ModeId]) -> Result<DensityMatrix> {
        DensityMatrix::reduce_pure(self, modes)
    }
}
