//! Projected t-J Hamiltonian on a sector basis, materialized as CSR or
//! applied matrix-free.
//!
//! `H = -t Σ_{⟨ij⟩σ} P (c†_{iσ} c_{jσ} + h.c.) P + J Σ_{⟨ij⟩} S_i·S_j` with
//! `t = 1`. Hopping signs follow the canonical mode order of [`crate::basis`].

use rayon::prelude::*;

use crate::basis::{mode, mode_parity_between, BasisState, Boundary, ModelParams, SectorBasis, SiteState};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Sectors above this dimension are only ever applied matrix-free.
pub const MATERIALIZE_LIMIT: usize = 1_000_000;

const PARALLEL_MIN_DIM: usize = 4096;

/// Undirected nearest-neighbour bonds, each listed once.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BondList {
    n_sites: usize,
    bonds: Vec<(usize, usize)>,
}

impl BondList {
    /// Open or periodic chain. A periodic two-site chain has a single bond.
    pub fn chain(n_sites: usize, boundary: Boundary) -> Self {
        let mut bonds: Vec<(usize, usize)> = (0..n_sites.saturating_sub(1)).map(|i| (i, i + 1)).collect();
        if boundary == Boundary::Periodic && n_sites > 2 {
            bonds.push((n_sites - 1, 0));
        }
        Self { n_sites, bonds }
    }

    pub fn for_params(params: &ModelParams) -> Self {
        Self::chain(params.n_sites, params.boundary)
    }

    /// Arbitrary bond set, e.g. a relabelled chain.
    pub fn from_pairs(n_sites: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        for &(i, j) in pairs {
            if i == j || i >= n_sites || j >= n_sites {
                return Err(Error::InvalidInput(format!("bad bond ({i}, {j})")));
            }
            if !seen.insert((i.min(j), i.max(j))) {
                return Err(Error::InvalidInput(format!("duplicate bond ({i}, {j})")));
            }
        }
        Ok(Self {
            n_sites,
            bonds: pairs.to_vec(),
        })
    }

    pub fn bonds(&self) -> &[(usize, usize)] {
        &self.bonds
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }
}

/// Couplings in the working precision.
#[derive(Debug, Clone, Copy)]
struct Couplings<T> {
    hop: T,
    j: T,
    density_term: bool,
}

impl<T: Scalar> Couplings<T> {
    fn new(params: &ModelParams) -> Self {
        Self {
            hop: -T::one(),
            j: T::c(params.j_over_t),
            density_term: params.density_term,
        }
    }
}

/// Calls `f(target, amplitude)` for every term of `H |state⟩`, diagonal
/// included. Targets may repeat.
#[inline]
fn for_each_connection<T: Scalar>(
    state: BasisState,
    bonds: &[(usize, usize)],
    c: Couplings<T>,
    mut f: impl FnMut(BasisState, T),
) {
    let quarter = T::c(0.25);
    let half = T::c(0.5);
    let mut diag = T::zero();
    for &(i, j) in bonds {
        let si = state.site(i);
        let sj = state.site(j);
        match (si, sj) {
            (SiteState::Hole, SiteState::Hole) => {}
            (s, SiteState::Hole) | (SiteState::Hole, s) => {
                let (from, to) = if si == SiteState::Hole { (j, i) } else { (i, j) };
                let spin = if s == SiteState::Up { 0 } else { 1 };
                let sign = mode_parity_between(state, mode(from, spin), mode(to, spin));
                let target = state.with_site(from, SiteState::Hole).with_site(to, s);
                let amp = if sign > 0 { c.hop } else { -c.hop };
                f(target, amp);
            }
            (a, b) => {
                if a == b {
                    diag += c.j * quarter;
                } else {
                    diag -= c.j * quarter;
                    f(state.with_site(i, b).with_site(j, a), c.j * half);
                }
                if c.density_term {
                    diag -= c.j * quarter;
                }
            }
        }
    }
    f(state, diag);
}

fn check_sector(params: &ModelParams, basis: &SectorBasis) -> Result<()> {
    let b = basis.params();
    if b.n_sites != params.n_sites || b.n_up != params.n_up || b.n_dn != params.n_dn {
        return Err(Error::DimensionMismatch {
            expected: params.sector_dim() as usize,
            actual: basis.dim(),
        });
    }
    Ok(())
}

/// Symmetric matrix in compressed sparse row form.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSymMatrix<T> {
    pub dim: usize,
    pub row_offsets: Vec<usize>,
    pub col_indices: Vec<u32>,
    pub values: Vec<T>,
}

impl<T: Scalar> SparseSymMatrix<T> {
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> (&[u32], &[T]) {
        let (a, b) = (self.row_offsets[r], self.row_offsets[r + 1]);
        (&self.col_indices[a..b], &self.values[a..b])
    }

    pub fn get(&self, r: usize, c: usize) -> T {
        let (cols, vals) = self.row(r);
        match cols.binary_search(&(c as u32)) {
            Ok(k) => vals[k],
            Err(_) => T::zero(),
        }
    }

    pub fn to_dense(&self) -> Vec<T> {
        let n = self.dim;
        let mut a = vec![T::zero(); n * n];
        for r in 0..n {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                a[r * n + c as usize] = v;
            }
        }
        a
    }

    /// Exact structural and numerical symmetry.
    pub fn is_symmetric(&self) -> bool {
        (0..self.dim).all(|r| {
            let (cols, vals) = self.row(r);
            cols.iter().zip(vals).all(|(&c, &v)| self.get(c as usize, r) == v)
        })
    }

    pub fn matvec_into(&self, x: &[T], y: &mut [T]) {
        assert_eq!(x.len(), self.dim);
        assert_eq!(y.len(), self.dim);
        let row = |r: usize| {
            let (cols, vals) = self.row(r);
            cols.iter().zip(vals).map(|(&c, &v)| v * x[c as usize]).sum::<T>()
        };
        if self.dim >= PARALLEL_MIN_DIM {
            y.par_iter_mut().enumerate().for_each(|(r, yr)| *yr = row(r));
        } else {
            for (r, yr) in y.iter_mut().enumerate() {
                *yr = row(r);
            }
        }
    }

    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        let mut y = vec![T::zero(); self.dim];
        self.matvec_into(x, &mut y);
        y
    }
}

pub fn build_hamiltonian<T: Scalar>(params: &ModelParams, basis: &SectorBasis) -> Result<SparseSymMatrix<T>> {
    build_hamiltonian_with_bonds(params, basis, &BondList::for_params(params))
}

pub fn build_hamiltonian_with_bonds<T: Scalar>(
    params: &ModelParams,
    basis: &SectorBasis,
    bonds: &BondList,
) -> Result<SparseSymMatrix<T>> {
    check_sector(params, basis)?;
    if basis.dim() > MATERIALIZE_LIMIT {
        return Err(Error::Capacity {
            dim: basis.dim() as u128,
            limit: MATERIALIZE_LIMIT as u128,
        });
    }
    let c = Couplings::<T>::new(params);
    let dim = basis.dim();
    let mut row_offsets = Vec::with_capacity(dim + 1);
    let mut col_indices = Vec::new();
    let mut values = Vec::new();
    row_offsets.push(0);
    let mut entries: Vec<(u32, T)> = Vec::new();
    for &state in basis.states() {
        entries.clear();
        for_each_connection(state, bonds.bonds(), c, |target, amp| {
            let col = basis
                .index_of(target)
                .expect("Hamiltonian left the particle-number sector");
            entries.push((col as u32, amp));
        });
        entries.sort_by_key(|e| e.0);
        let mut k = 0;
        while k < entries.len() {
            let (col, mut v) = entries[k];
            k += 1;
            while k < entries.len() && entries[k].0 == col {
                v += entries[k].1;
                k += 1;
            }
            if v != T::zero() {
                col_indices.push(col);
                values.push(v);
            }
        }
        row_offsets.push(values.len());
    }
    Ok(SparseSymMatrix {
        dim,
        row_offsets,
        col_indices,
        values,
    })
}

/// `H · x` without materializing `H`. Each output row is an independent
/// gather, so the result does not depend on the thread count.
pub fn apply_hamiltonian<T: Scalar>(params: &ModelParams, basis: &SectorBasis, x: &[T]) -> Result<Vec<T>> {
    let op = MatrixFreeHamiltonian::new(params, basis)?;
    if x.len() != basis.dim() {
        return Err(Error::DimensionMismatch {
            expected: basis.dim(),
            actual: x.len(),
        });
    }
    let mut y = vec![T::zero(); basis.dim()];
    op.apply(x, &mut y);
    Ok(y)
}

/// Symmetric operator acting on vectors of a fixed dimension.
pub trait LinearOperator<T: Scalar>: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[T], y: &mut [T]);
}

impl<T: Scalar> LinearOperator<T> for SparseSymMatrix<T> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn apply(&self, x: &[T], y: &mut [T]) {
        self.matvec_into(x, y);
    }
}

/// Wraps a closure as an operator.
pub struct FnOperator<F> {
    dim: usize,
    f: F,
}

impl<F> FnOperator<F> {
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<T: Scalar, F: Fn(&[T], &mut [T]) + Sync> LinearOperator<T> for FnOperator<F> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn apply(&self, x: &[T], y: &mut [T]) {
        (self.f)(x, y)
    }
}

pub struct MatrixFreeHamiltonian<'a, T> {
    basis: &'a SectorBasis,
    bonds: BondList,
    couplings: Couplings<T>,
}

impl<'a, T: Scalar> MatrixFreeHamiltonian<'a, T> {
    pub fn new(params: &ModelParams, basis: &'a SectorBasis) -> Result<Self> {
        check_sector(params, basis)?;
        Ok(Self {
            basis,
            bonds: BondList::for_params(params),
            couplings: Couplings::new(params),
        })
    }

    fn row(&self, k: usize, x: &[T]) -> T {
        let mut acc = T::zero();
        for_each_connection(self.basis.state(k), self.bonds.bonds(), self.couplings, |target, amp| {
            let col = self
                .basis
                .index_of(target)
                .expect("Hamiltonian left the particle-number sector");
            acc += amp * x[col];
        });
        acc
    }
}

impl<T: Scalar> LinearOperator<T> for MatrixFreeHamiltonian<'_, T> {
    fn dim(&self) -> usize {
        self.basis.dim()
    }

    fn apply(&self, x: &[T], y: &mut [T]) {
        assert_eq!(x.len(), self.basis.dim());
        if self.basis.dim() >= PARALLEL_MIN_DIM {
            y.par_iter_mut().enumerate().for_each(|(k, yk)| *yk = self.row(k, x));
        } else {
            for (k, yk) in y.iter_mut().enumerate() {
                *yk = self.row(k, x);
            }
        }
    }
}

/// Materialized when small enough, matrix-free otherwise.
pub enum Hamiltonian<'a, T> {
    Sparse(SparseSymMatrix<T>),
    MatrixFree(MatrixFreeHamiltonian<'a, T>),
}

impl<'a, T: Scalar> Hamiltonian<'a, T> {
    pub fn new(params: &ModelParams, basis: &'a SectorBasis) -> Result<Self> {
        if basis.dim() <= MATERIALIZE_LIMIT {
            Ok(Self::Sparse(build_hamiltonian(params, basis)?))
        } else {
            Ok(Self::MatrixFree(MatrixFreeHamiltonian::new(params, basis)?))
        }
    }
}

impl<T: Scalar> LinearOperator<T> for Hamiltonian<'_, T> {
    fn dim(&self) -> usize {
        match self {
            Self::Sparse(m) => m.dim,
            Self::MatrixFree(m) => LinearOperator::<T>::dim(m),
        }
    }
    fn apply(&self, x: &[T], y: &mut [T]) {
        match self {
            Self::Sparse(m) => m.matvec_into(x, y),
            Self::MatrixFree(m) => m.apply(x, y),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::enumerate_sector;
    use crate::linalg::symmetric_eigenvalues;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn spectrum(params: &ModelParams) -> Vec<f64> {
        let basis = enumerate_sector(params).unwrap();
        let h = build_hamiltonian::<f64>(params, &basis).unwrap();
        symmetric_eigenvalues(&h.to_dense(), h.dim)
    }

    #[test]
    fn bond_lists() {
        assert_eq!(BondList::chain(2, Boundary::Periodic).bonds(), &[(0, 1)]);
        assert_eq!(BondList::chain(3, Boundary::Open).bonds(), &[(0, 1), (1, 2)]);
        assert_eq!(BondList::chain(3, Boundary::Periodic).bonds(), &[(0, 1), (1, 2), (2, 0)]);
        assert!(BondList::from_pairs(3, &[(0, 1), (1, 0)]).is_err());
        assert!(BondList::from_pairs(3, &[(0, 0)]).is_err());
    }

    #[test]
    fn single_particle_two_sites() {
        let p = ModelParams::new(2, 1, 0, 1.0, Boundary::Open).unwrap();
        let e = spectrum(&p);
        assert_abs_diff_eq!(e[0], -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(e[1], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn two_spin_heisenberg() {
        for boundary in [Boundary::Open, Boundary::Periodic] {
            for j in [0.5, 1.0, 3.0] {
                let p = ModelParams::new(2, 1, 1, j, boundary).unwrap();
                let e = spectrum(&p);
                assert_abs_diff_eq!(e[0], -0.75 * j, epsilon = 1e-14);
                assert_abs_diff_eq!(e[1], 0.25 * j, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn four_site_heisenberg_ring() {
        let p = ModelParams::new(4, 2, 2, 1.0, Boundary::Periodic).unwrap();
        assert_abs_diff_eq!(spectrum(&p)[0], -2.0, epsilon = 1e-12);
    }

    #[test]
    fn density_term_shifts_singlet() {
        let p = ModelParams::new(2, 1, 1, 1.0, Boundary::Open).unwrap().with_density_term(true);
        let e = spectrum(&p);
        assert_abs_diff_eq!(e[0], -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(e[1], 0.0, epsilon = 1e-14);
    }

    #[test]
    fn matrix_is_exactly_symmetric_and_sorted() {
        for (n, up, dn) in [(6, 2, 2), (7, 3, 1), (8, 1, 1), (5, 2, 3)] {
            for boundary in [Boundary::Open, Boundary::Periodic] {
                let p = ModelParams::new(n, up, dn, 1.7, boundary).unwrap();
                let basis = enumerate_sector(&p).unwrap();
                let h = build_hamiltonian::<f64>(&p, &basis).unwrap();
                assert!(h.is_symmetric());
                for r in 0..h.dim {
                    assert!(h.row(r).0.windows(2).all(|w| w[0] < w[1]));
                }
            }
        }
    }

    #[test]
    fn matrix_free_matches_materialized() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for (n, up, dn) in [(6, 2, 2), (6, 3, 2), (6, 1, 1)] {
            let p = ModelParams::new(n, up, dn, 1.3, Boundary::Periodic).unwrap();
            let basis = enumerate_sector(&p).unwrap();
            let h = build_hamiltonian::<f64>(&p, &basis).unwrap();
            let x: Vec<f64> = (0..basis.dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let y1 = h.matvec(&x);
            let y2 = apply_hamiltonian(&p, &basis, &x).unwrap();
            let nrm: f64 = y1.iter().map(|v| v * v).sum::<f64>().sqrt();
            let diff: f64 = y1.iter().zip(&y2).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            assert!(diff <= 1e-12 * nrm, "relative deviation {}", diff / nrm);
        }
    }

    #[test]
    fn apply_zero_and_singlet() {
        let p = ModelParams::new(2, 1, 1, 2.0, Boundary::Periodic).unwrap();
        let basis = enumerate_sector(&p).unwrap();
        assert_eq!(apply_hamiltonian(&p, &basis, &[0.0, 0.0]).unwrap(), vec![0.0, 0.0]);
        // states sorted: ↑↓ (0b1001) before ↓↑ (0b0110)? encode and look up
        let ud = BasisState::from_sites(&[SiteState::Up, SiteState::Down]);
        let du = BasisState::from_sites(&[SiteState::Down, SiteState::Up]);
        let mut x = vec![0.0; 2];
        x[basis.index_of(ud).unwrap()] = std::f64::consts::FRAC_1_SQRT_2;
        x[basis.index_of(du).unwrap()] = -std::f64::consts::FRAC_1_SQRT_2;
        let y = apply_hamiltonian(&p, &basis, &x).unwrap();
        for k in 0..2 {
            assert_abs_diff_eq!(y[k], -1.5 * x[k], epsilon = 1e-15);
        }
        assert!(apply_hamiltonian(&p, &basis, &[1.0]).is_err());
    }

    #[test]
    fn sector_mismatch_is_an_error() {
        let p = ModelParams::new(4, 1, 1, 1.0, Boundary::Periodic).unwrap();
        let q = ModelParams::new(4, 2, 1, 1.0, Boundary::Periodic).unwrap();
        let basis = enumerate_sector(&q).unwrap();
        assert!(matches!(
            build_hamiltonian::<f64>(&p, &basis),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn su2_partner_sectors_share_ground_energy() {
        for n in 3..=7 {
            for up in 0..=n {
                for dn in 0..up {
                    if up + dn > n {
                        continue;
                    }
                    let a = ModelParams::new(n, up, dn, 1.4, Boundary::Periodic).unwrap();
                    let b = ModelParams::new(n, dn, up, 1.4, Boundary::Periodic).unwrap();
                    assert_abs_diff_eq!(spectrum(&a)[0], spectrum(&b)[0], epsilon = 1e-10);
                }
            }
        }
    }

    #[test]
    fn minimal_sz_sector_holds_the_lowest_energy() {
        for n in 2..=8 {
            for n_el in 0..=n {
                let p0 = ModelParams::periodic(n, n_el, 0.9).unwrap();
                let e0 = spectrum(&p0)[0];
                for up in 0..=n_el {
                    let p = ModelParams::new(n, up, n_el - up, 0.9, Boundary::Periodic).unwrap();
                    assert!(e0 <= spectrum(&p)[0] + 1e-10, "N={n} N_el={n_el} up={up}");
                }
            }
        }
    }

    /// Relabels sites by `perm` and checks the spectrum is unchanged. Arbitrary
    /// permutations reorder fermionic modes, so this exercises the signs.
    #[test]
    fn ground_energy_invariant_under_site_relabeling() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for (n, up, dn) in [(5, 2, 1), (6, 2, 2), (6, 1, 1), (7, 2, 2)] {
            let p = ModelParams::new(n, up, dn, 1.1, Boundary::Periodic).unwrap();
            let basis = enumerate_sector(&p).unwrap();
            let reference = spectrum(&p);
            for trial in 0..4 {
                let mut perm: Vec<usize> = (0..n).collect();
                if trial == 0 {
                    perm.rotate_left(1);
                } else if trial == 1 {
                    perm.reverse();
                } else {
                    for i in (1..n).rev() {
                        perm.swap(i, rng.random_range(0..=i));
                    }
                }
                let pairs: Vec<(usize, usize)> = BondList::for_params(&p)
                    .bonds()
                    .iter()
                    .map(|&(i, j)| (perm[i], perm[j]))
                    .collect();
                let bonds = BondList::from_pairs(n, &pairs).unwrap();
                let h = build_hamiltonian_with_bonds::<f64>(&p, &basis, &bonds).unwrap();
                let e = symmetric_eigenvalues(&h.to_dense(), h.dim);
                for (a, b) in e.iter().zip(&reference) {
                    assert_abs_diff_eq!(a, b, epsilon = 1e-10);
                }
            }
        }
    }
}
