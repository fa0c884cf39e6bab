//! Doped RVB gas: products of sublattice-bridging singlets with holes on the
//! remaining sites, and its weight-optimized fidelity with a ground state.

use rayon::prelude::*;

use crate::basis::{binomial, BasisState, SectorBasis, SiteState};
use crate::eigensolver::GroundState;
use crate::error::{Error, Result};
use crate::linalg::symmetric_eigen;
use crate::scalar::Scalar;

pub const DEFAULT_COVERING_LIMIT: u128 = 100_000;

/// Relative spectral cutoff of the Gram pseudo-inverse.
pub const GRAM_CUTOFF: f64 = 1e-12;

/// Disjoint singlets `(a, b)`, `a` even (sublattice A) and `b` odd
/// (sublattice B); every other site is a hole.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DimerCovering {
    pub dimers: Vec<(usize, usize)>,
    pub holes: Vec<usize>,
}

impl DimerCovering {
    pub fn new(n_sites: usize, dimers: Vec<(usize, usize)>) -> Result<Self> {
        let mut used = vec![false; n_sites];
        for &(a, b) in &dimers {
            if a >= n_sites || b >= n_sites || a % 2 != 0 || b % 2 != 1 {
                return Err(Error::InvalidInput(format!("dimer ({a}, {b}) does not join sublattice A to B")));
            }
            if used[a] || used[b] {
                return Err(Error::InvalidInput(format!("dimer ({a}, {b}) overlaps another")));
            }
            used[a] = true;
            used[b] = true;
        }
        let holes = (0..n_sites).filter(|&s| !used[s]).collect();
        Ok(Self { dimers, holes })
    }

    pub fn n_sites(&self) -> usize {
        2 * self.dimers.len() + self.holes.len()
    }
}

/// Number of coverings `C(N/2, k)² · k!` with `k = N_el / 2` dimers.
pub fn covering_count(n_sites: usize, n_electrons: usize) -> u128 {
    let k = (n_electrons / 2) as u64;
    let half = (n_sites / 2) as u64;
    let c = binomial(half, k);
    c * c * (1..=k as u128).product::<u128>()
}

pub fn enumerate_coverings(n_sites: usize, n_electrons: usize) -> Result<Vec<DimerCovering>> {
    enumerate_coverings_with_limit(n_sites, n_electrons, DEFAULT_COVERING_LIMIT)
}

/// All coverings in a deterministic order: A-site sets ascending, then B-site
/// sets ascending, then the B assignment in lexicographic permutation order.
pub fn enumerate_coverings_with_limit(n_sites: usize, n_electrons: usize, limit: u128) -> Result<Vec<DimerCovering>> {
    if n_sites % 2 != 0 || n_electrons % 2 != 0 || n_electrons > n_sites {
        return Err(Error::InvalidInput(format!(
            "coverings need even N and even N_el <= N, got N={n_sites}, N_el={n_electrons}"
        )));
    }
    let count = covering_count(n_sites, n_electrons);
    if count > limit {
        return Err(Error::Capacity { dim: count, limit });
    }
    let half = n_sites / 2;
    let k = n_electrons / 2;
    let mut out = Vec::with_capacity(count as usize);
    let pick = |mask: u64, offset: usize| -> Vec<usize> {
        (0..half).filter(|&x| (mask >> x) & 1 == 1).map(|x| 2 * x + offset).collect()
    };
    for a_mask in crate::basis::subsets_of_size(half, k) {
        let a_sites = pick(a_mask, 0);
        for b_mask in crate::basis::subsets_of_size(half, k) {
            let mut b_sites = pick(b_mask, 1);
            loop {
                let dimers = a_sites.iter().copied().zip(b_sites.iter().copied()).collect();
                out.push(DimerCovering::new(n_sites, dimers)?);
                if !next_permutation(&mut b_sites) {
                    break;
                }
            }
        }
    }
    Ok(out)
}

fn next_permutation(v: &mut [usize]) -> bool {
    if v.len() < 2 {
        return false;
    }
    let mut i = v.len() - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = v.len() - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

/// Sparse vector with ascending indices.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseVector<T> {
    pub indices: Vec<usize>,
    pub values: Vec<T>,
}

impl<T: Scalar> SparseVector<T> {
    pub fn dot(&self, other: &Self) -> T {
        let (mut i, mut j) = (0, 0);
        let mut acc = T::zero();
        while i < self.indices.len() && j < other.indices.len() {
            match self.indices[i].cmp(&other.indices[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    acc += self.values[i] * other.values[j];
                    i += 1;
                    j += 1;
                }
            }
        }
        acc
    }

    pub fn dot_dense(&self, dense: &[T]) -> T {
        self.indices.iter().zip(&self.values).map(|(&k, &v)| v * dense[k]).sum()
    }

    pub fn norm(&self) -> T {
        self.values.iter().map(|&v| v * v).sum::<T>().sqrt()
    }

    pub fn scaled(&self, factor: T) -> Self {
        Self {
            indices: self.indices.clone(),
            values: self.values.iter().map(|&v| v * factor).collect(),
        }
    }

    pub fn to_dense(&self, dim: usize) -> Vec<T> {
        let mut out = vec![T::zero(); dim];
        for (&k, &v) in self.indices.iter().zip(&self.values) {
            out[k] = v;
        }
        out
    }
}

/// Each singlet is `(|↑⟩_a|↓⟩_b − |↓⟩_a|↑⟩_b)/√2`; a basis state stands for
/// creation operators in ascending mode order, so the expansion carries no
/// further signs.
pub fn covering_vector<T: Scalar>(c: &DimerCovering, basis: &SectorBasis) -> Result<SparseVector<T>> {
    let p = basis.params();
    let k = c.dimers.len();
    if p.n_sites != c.n_sites() || p.n_up != k || p.n_dn != k {
        return Err(Error::InvalidInput(format!(
            "covering with {k} dimers on {} sites does not live in sector N={} ({}, {})",
            c.n_sites(),
            p.n_sites,
            p.n_up,
            p.n_dn
        )));
    }
    let amp = T::c(0.5f64.powf(k as f64 / 2.0));
    let mut terms: Vec<(usize, T)> = Vec::with_capacity(1 << k);
    for flips in 0..(1u64 << k) {
        let mut state = BasisState::default();
        for (d, &(a, b)) in c.dimers.iter().enumerate() {
            let (sa, sb) = if (flips >> d) & 1 == 0 {
                (SiteState::Up, SiteState::Down)
            } else {
                (SiteState::Down, SiteState::Up)
            };
            state = state.with_site(a, sa).with_site(b, sb);
        }
        let idx = basis.index_of(state).expect("covering state outside the sector");
        let v = if flips.count_ones() % 2 == 0 { amp } else { -amp };
        terms.push((idx, v));
    }
    terms.sort_by_key(|t| t.0);
    Ok(SparseVector {
        indices: terms.iter().map(|t| t.0).collect(),
        values: terms.iter().map(|t| t.1).collect(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RvbFidelityResult<T> {
    /// `max_w |⟨φ|Σ_C w_C v_C⟩| / ‖Σ_C w_C v_C‖`.
    pub fidelity: T,
    /// Optimal weights `S⁺ g`, defined up to scale.
    pub weights: Vec<T>,
    pub gram_rank: usize,
    /// Ratio of the largest to the smallest retained Gram eigenvalue.
    pub gram_condition: T,
}

/// Fidelity of a normalized state with the span of `vectors`:
/// `F = √(gᵀ S⁺ g)`, `g_C = ⟨φ|v_C⟩`, `S_{CC'} = ⟨v_C|v_C'⟩`.
pub fn fidelity_with_span<T: Scalar>(state: &[T], vectors: &[SparseVector<T>]) -> Result<RvbFidelityResult<T>> {
    let m = vectors.len();
    if m == 0 {
        return Err(Error::InvalidInput("empty covering list".into()));
    }
    let g: Vec<T> = vectors.iter().map(|v| v.dot_dense(state)).collect();
    let rows: Vec<Vec<T>> = (0..m)
        .into_par_iter()
        .map(|r| (0..m).map(|c| vectors[r].dot(&vectors[c])).collect())
        .collect();
    let mut gram = vec![T::zero(); m * m];
    for (r, row) in rows.into_iter().enumerate() {
        gram[r * m..(r + 1) * m].copy_from_slice(&row);
    }
    let eig = symmetric_eigen(&gram, m);
    let largest = eig.values[m - 1];
    let cutoff = T::tol(GRAM_CUTOFF) * largest.max(T::zero());
    let mut weights = vec![T::zero(); m];
    let mut f2 = T::zero();
    let mut rank = 0;
    let mut smallest_kept = largest;
    for k in 0..m {
        let lambda = eig.values[k];
        if lambda <= cutoff || lambda <= T::zero() {
            continue;
        }
        rank += 1;
        smallest_kept = smallest_kept.min(lambda);
        let u = eig.vector(k);
        let ug: T = u.iter().zip(&g).map(|(&a, &b)| a * b).sum();
        f2 += ug * ug / lambda;
        for (w, &uc) in weights.iter_mut().zip(&u) {
            *w += uc * ug / lambda;
        }
    }
    let gram_condition = if rank == 0 { T::infinity() } else { largest / smallest_kept };
    Ok(RvbFidelityResult {
        fidelity: f2.max(T::zero()).sqrt().min(T::one()),
        weights,
        gram_rank: rank,
        gram_condition,
    })
}

pub fn rvb_fidelity<T: Scalar>(gs: &GroundState<T>, coverings: &[DimerCovering], basis: &SectorBasis) -> Result<RvbFidelityResult<T>> {
    if gs.dim() != basis.dim() {
        return Err(Error::DimensionMismatch {
            expected: basis.dim(),
            actual: gs.dim(),
        });
    }
    if coverings.is_empty() {
        return Err(Error::InvalidInput("empty covering list".into()));
    }
    let vectors: Vec<SparseVector<T>> = coverings.iter().map(|c| covering_vector(c, basis)).collect::<Result<_>>()?;
    fidelity_with_span(&gs.amplitudes, &vectors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{enumerate_sector, Boundary, ModelParams};
    use approx::assert_abs_diff_eq;

    #[test]
    fn small_counts() {
        let c = enumerate_coverings(4, 2).unwrap();
        assert_eq!(c.len(), 4);
        assert_eq!(c[0].dimers, vec![(0, 1)]);
        assert_eq!(c[0].holes, vec![2, 3]);
        assert_eq!(enumerate_coverings(30, 2).unwrap().len(), 225);
        assert_eq!(covering_count(8, 4), 72);
        assert_eq!(enumerate_coverings(2, 0).unwrap().len(), 1);
    }

    #[test]
    fn bad_arguments() {
        assert!(enumerate_coverings(5, 2).is_err());
        assert!(enumerate_coverings(6, 3).is_err());
        assert!(matches!(enumerate_coverings_with_limit(12, 6, 10), Err(Error::Capacity { .. })));
        assert!(DimerCovering::new(4, vec![(0, 2)]).is_err());
        assert!(DimerCovering::new(4, vec![(0, 1), (2, 1)]).is_err());
    }

    #[test]
    fn two_site_singlet_vector() {
        let p = ModelParams::new(2, 1, 1, 1.0, Boundary::Periodic).unwrap();
        let basis = enumerate_sector(&p).unwrap();
        let c = DimerCovering::new(2, vec![(0, 1)]).unwrap();
        let v = covering_vector::<f64>(&c, &basis).unwrap();
        let dense = v.to_dense(2);
        let ud = basis.index_of(BasisState::from_sites(&[SiteState::Up, SiteState::Down])).unwrap();
        let du = basis.index_of(BasisState::from_sites(&[SiteState::Down, SiteState::Up])).unwrap();
        assert_abs_diff_eq!(dense[ud], std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-15);
        assert_abs_diff_eq!(dense[du], -std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-15);
    }

    #[test]
    fn covering_vectors_are_normalized() {
        let p = ModelParams::new(8, 2, 2, 1.0, Boundary::Periodic).unwrap();
        let basis = enumerate_sector(&p).unwrap();
        for c in enumerate_coverings(8, 4).unwrap() {
            assert_abs_diff_eq!(covering_vector::<f64>(&c, &basis).unwrap().norm(), 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn sector_mismatch_rejected() {
        let p = ModelParams::new(4, 2, 0, 1.0, Boundary::Periodic).unwrap();
        let basis = enumerate_sector(&p).unwrap();
        let c = DimerCovering::new(4, vec![(0, 1)]).unwrap();
        assert!(covering_vector::<f64>(&c, &basis).is_err());
    }

    #[test]
    fn fidelity_limits() {
        let p = ModelParams::new(4, 1, 1, 1.0, Boundary::Periodic).unwrap();
        let basis = enumerate_sector(&p).unwrap();
        let covs = enumerate_coverings(4, 2).unwrap();
        let v = covering_vector::<f64>(&covs[2], &basis).unwrap().to_dense(basis.dim());
        let r = fidelity_with_span(&v, &covs.iter().map(|c| covering_vector(c, &basis).unwrap()).collect::<Vec<_>>()).unwrap();
        assert_abs_diff_eq!(r.fidelity, 1.0, epsilon = 1e-12);
        assert_eq!(r.gram_rank, 4);

        // a triplet-like state is orthogonal to every singlet product
        let mut t = vec![0.0; basis.dim()];
        let a = basis.index_of(BasisState::from_sites(&[SiteState::Up, SiteState::Down, SiteState::Hole, SiteState::Hole])).unwrap();
        let b = basis.index_of(BasisState::from_sites(&[SiteState::Down, SiteState::Up, SiteState::Hole, SiteState::Hole])).unwrap();
        t[a] = std::f64::consts::FRAC_1_SQRT_2;
        t[b] = std::f64::consts::FRAC_1_SQRT_2;
        let vecs: Vec<_> = covs.iter().map(|c| covering_vector(c, &basis).unwrap()).collect();
        let r = fidelity_with_span(&t, &vecs).unwrap();
        assert_abs_diff_eq!(r.fidelity, 0.0, epsilon = 1e-12);
        assert!(fidelity_with_span::<f64>(&t, &[]).is_err());
    }

    #[test]
    fn permutation_order() {
        let mut v = vec![1, 3, 5];
        let mut seen = vec![v.clone()];
        while next_permutation(&mut v) {
            seen.push(v.clone());
        }
        assert_eq!(seen.len(), 6);
        assert_eq!(seen[5], vec![5, 3, 1]);
    }
}
