//! Two-site reduced density matrices, logarithmic negativity, spin
//! correlators and the generalized geometric measure (GGM).
//!
//! All quantities are taken on the state vector in the qutrit-per-site
//! occupation basis, with amplitudes as fixed by the canonical mode order.

use std::collections::HashMap;
use std::fmt;

use rayon::prelude::*;

use crate::basis::{site_mask, Boundary, SectorBasis, SiteState};
use crate::eigensolver::GroundState;
use crate::error::{Error, Result};
use crate::linalg::symmetric_eigenvalues;
use crate::scalar::Scalar;

/// Eigenvalues in `[-ROUNDOFF, 0)` count as zero.
pub const ROUNDOFF: f64 = 1e-12;

/// Reduced state of a site pair in the `|hole⟩, |↑⟩, |↓⟩ ⊗ |hole⟩, |↑⟩, |↓⟩`
/// basis, site `i` major.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoSiteRdm<T> {
    pub pair: (usize, usize),
    /// Row-major 9 × 9.
    pub matrix: [T; 81],
}

impl<T: Scalar> TwoSiteRdm<T> {
    #[inline]
    pub fn get(&self, row: usize, col: usize) -> T {
        self.matrix[row * 9 + col]
    }

    pub fn trace(&self) -> T {
        (0..9).map(|k| self.get(k, k)).sum()
    }

    pub fn eigenvalues(&self) -> Vec<T> {
        symmetric_eigenvalues(&self.matrix, 9)
    }

    /// Builds an RDM from an explicit matrix, e.g. a product `ρ_i ⊗ ρ_j`.
    pub fn from_matrix(pair: (usize, usize), matrix: [T; 81]) -> Self {
        Self { pair, matrix }
    }

    /// Partial transpose on the first (`i`) or second (`j`) factor.
    pub fn partial_transpose(&self, first: bool) -> [T; 81] {
        let mut out = [T::zero(); 81];
        for ai in 0..3 {
            for aj in 0..3 {
                for bi in 0..3 {
                    for bj in 0..3 {
                        let src = if first {
                            (bi * 3 + aj) * 9 + ai * 3 + bj
                        } else {
                            (ai * 3 + bj) * 9 + bi * 3 + aj
                        };
                        out[(ai * 3 + aj) * 9 + bi * 3 + bj] = self.matrix[src];
                    }
                }
            }
        }
        out
    }
}

fn check_state<T: Scalar>(gs: &GroundState<T>, basis: &SectorBasis) -> Result<()> {
    if gs.dim() != basis.dim() {
        return Err(Error::DimensionMismatch {
            expected: basis.dim(),
            actual: gs.dim(),
        });
    }
    Ok(())
}

/// `ρ_ij = Tr_rest |ψ⟩⟨ψ|` for `i < j`.
pub fn two_site_rdm<T: Scalar>(gs: &GroundState<T>, basis: &SectorBasis, i: usize, j: usize) -> Result<TwoSiteRdm<T>> {
    check_state(gs, basis)?;
    let n = basis.n_sites();
    if i >= j || j >= n {
        return Err(Error::InvalidInput(format!("invalid site pair ({i}, {j}) for {n} sites")));
    }
    let pair_mask = site_mask(i) | site_mask(j);
    let mut rho = [T::zero(); 81];
    // local configurations grouped by their (n_up, n_dn) content
    let local_numbers = |a: SiteState, b: SiteState| {
        let up = (a == SiteState::Up) as u8 + (b == SiteState::Up) as u8;
        let dn = (a == SiteState::Down) as u8 + (b == SiteState::Down) as u8;
        (up, dn)
    };
    for (k, &state) in basis.states().iter().enumerate() {
        let amp = gs.amplitudes[k];
        if amp == T::zero() {
            continue;
        }
        let (ai, aj) = (state.site(i), state.site(j));
        let row = ai.index() * 3 + aj.index();
        let numbers = local_numbers(ai, aj);
        let rest = state.bits() & !pair_mask;
        for bi in SiteState::ALL {
            for bj in SiteState::ALL {
                if local_numbers(bi, bj) != numbers {
                    continue;
                }
                let partner = crate::basis::BasisState(rest | (bi.bits() << (2 * i)) | (bj.bits() << (2 * j)));
                if let Some(kp) = basis.index_of(partner) {
                    rho[row * 9 + bi.index() * 3 + bj.index()] += amp * gs.amplitudes[kp];
                }
            }
        }
    }
    let half = T::c(0.5);
    for r in 0..9 {
        for c in (r + 1)..9 {
            let avg = (rho[r * 9 + c] + rho[c * 9 + r]) * half;
            rho[r * 9 + c] = avg;
            rho[c * 9 + r] = avg;
        }
    }
    Ok(TwoSiteRdm { pair: (i, j), matrix: rho })
}

/// Negativity `𝒩`: magnitude of the summed negative eigenvalues of `ρ^{T_i}`.
pub fn negativity<T: Scalar>(rdm: &TwoSiteRdm<T>) -> Result<T> {
    negativity_on_side(rdm, true)
}

pub fn negativity_on_side<T: Scalar>(rdm: &TwoSiteRdm<T>, first: bool) -> Result<T> {
    let floor = T::tol(ROUNDOFF);
    let min_eig = rdm.eigenvalues()[0];
    if min_eig < -floor {
        return Err(Error::NotPositiveSemidefinite {
            min_eigenvalue: min_eig.to_f64_lossy(),
        });
    }
    let pt = rdm.partial_transpose(first);
    let neg: T = symmetric_eigenvalues(&pt, 9)
        .into_iter()
        .filter(|&l| l < -floor)
        .map(|l| -l)
        .sum();
    Ok(if neg < floor { T::zero() } else { neg })
}

/// Logarithmic negativity `log₂(2𝒩 + 1)` in ebits.
pub fn log_negativity<T: Scalar>(rdm: &TwoSiteRdm<T>) -> Result<T> {
    let n = negativity(rdm)?;
    Ok((T::c(2.0) * n + T::one()).log2())
}

/// `Tr(ρ_ij S_i·S_j)`; the exchange operator vanishes on any hole.
pub fn spin_correlation<T: Scalar>(rdm: &TwoSiteRdm<T>) -> T {
    let up_up = 1 * 3 + 1;
    let dn_dn = 2 * 3 + 2;
    let up_dn = 1 * 3 + 2;
    let dn_up = 2 * 3 + 1;
    let quarter = T::c(0.25);
    let half = T::c(0.5);
    quarter * (rdm.get(up_up, up_up) + rdm.get(dn_dn, dn_dn))
        - quarter * (rdm.get(up_dn, up_dn) + rdm.get(dn_up, dn_up))
        + half * (rdm.get(up_dn, dn_up) + rdm.get(dn_up, up_dn))
}

/// Largest Schmidt coefficient `λ_{A:B}` of `amplitudes` across the split
/// whose `A` side is the site bitmask `subset_a`.
///
/// The reduced density matrix of the side with fewer sites is block diagonal
/// in that side's `(n_up, n_dn)`; each block is assembled exactly and
/// diagonalized densely.
pub fn schmidt_lambda_max_of<T: Scalar>(amplitudes: &[T], basis: &SectorBasis, subset_a: u64) -> Result<T> {
    if amplitudes.len() != basis.dim() {
        return Err(Error::DimensionMismatch {
            expected: basis.dim(),
            actual: amplitudes.len(),
        });
    }
    let n = basis.n_sites();
    let all: u64 = if n >= 64 { u64::MAX } else { (1u64 << n) - 1 };
    if subset_a == 0 || subset_a & !all != 0 || subset_a == all {
        return Err(Error::InvalidInput(format!(
            "subset {subset_a:#b} is not a proper non-empty subset of {n} sites"
        )));
    }
    let subset_b = all & !subset_a;
    let (ka, kb) = (subset_a.count_ones(), subset_b.count_ones());
    // the same side for A:B and B:A; on equal sizes the one without site N-1
    let small = if ka < kb || (ka == kb && (subset_a >> (n - 1)) & 1 == 0) {
        subset_a
    } else {
        subset_b
    };
    let small_sites: Vec<usize> = (0..n).filter(|&s| (small >> s) & 1 == 1).collect();
    let mut small_bits = 0u64;
    for &s in &small_sites {
        small_bits |= site_mask(s);
    }

    // Reduced-side configurations: compact key -> (block, index in block).
    let mut config_slot: HashMap<u64, (usize, usize)> = HashMap::new();
    let mut block_of_numbers: HashMap<(u32, u32), usize> = HashMap::new();
    let mut block_dims: Vec<usize> = Vec::new();
    let mut entries: Vec<(u64, usize, T)> = Vec::with_capacity(basis.dim());
    for (k, &state) in basis.states().iter().enumerate() {
        let amp = amplitudes[k];
        if amp == T::zero() {
            continue;
        }
        let key = state.bits() & small_bits;
        let slot = *config_slot.entry(key).or_insert_with(|| {
            let up = (key & 0x5555_5555_5555_5555).count_ones();
            let dn = (key & 0xAAAA_AAAA_AAAA_AAAA).count_ones();
            let next = block_dims.len();
            let b = *block_of_numbers.entry((up, dn)).or_insert(next);
            if b == block_dims.len() {
                block_dims.push(0);
            }
            block_dims[b] += 1;
            (b, block_dims[b] - 1)
        });
        let _ = slot;
        entries.push((state.bits() & !small_bits, k, amp));
    }
    if entries.is_empty() {
        return Err(Error::InvalidInput("state vector is zero".into()));
    }
    entries.sort_unstable_by_key(|e| (e.0, e.1));

    let mut blocks: Vec<Vec<T>> = block_dims.iter().map(|&d| vec![T::zero(); d * d]).collect();
    let mut start = 0;
    while start < entries.len() {
        let mut end = start + 1;
        while end < entries.len() && entries[end].0 == entries[start].0 {
            end += 1;
        }
        let group: Vec<(usize, usize, T)> = entries[start..end]
            .iter()
            .map(|&(_, k, amp)| {
                let (b, idx) = config_slot[&(basis.state(k).bits() & small_bits)];
                (b, idx, amp)
            })
            .collect();
        for &(b, x, ax) in &group {
            let d = block_dims[b];
            for &(b2, y, ay) in &group {
                debug_assert_eq!(b, b2);
                blocks[b][x * d + y] += ax * ay;
            }
        }
        start = end;
    }

    let mut top = T::zero();
    for (block, &d) in blocks.iter().zip(&block_dims) {
        let largest = if d == 1 {
            block[0]
        } else {
            *symmetric_eigenvalues(block, d).last().expect("non-empty block")
        };
        top = top.max(largest);
    }
    let norm2: T = amplitudes.iter().map(|&a| a * a).sum();
    Ok((top / norm2).max(T::zero()).min(T::one()).sqrt())
}

pub fn schmidt_lambda_max<T: Scalar>(gs: &GroundState<T>, basis: &SectorBasis, subset_a: u64) -> Result<T> {
    check_state(gs, basis)?;
    schmidt_lambda_max_of(&gs.amplitudes, basis, subset_a)
}

/// Which bipartitions the GGM maximization visits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SplitPolicy {
    /// Every bipartition.
    Exhaustive,
    /// All splits with at most `max_size` sites on one side, plus every
    /// contiguous block (cyclic under periodic boundaries).
    Bounded { max_size: usize },
}

impl SplitPolicy {
    /// Exhaustive up to twelve sites, bounded (`|A| ≤ 3` plus blocks) beyond.
    pub fn default_for(n_sites: usize) -> Self {
        if n_sites <= 12 {
            SplitPolicy::Exhaustive
        } else {
            SplitPolicy::Bounded { max_size: 3 }
        }
    }

    /// Canonical split masks (site `N-1` always on the `B` side), ascending.
    pub fn splits(&self, n_sites: usize, boundary: Boundary) -> Vec<u64> {
        let n = n_sites;
        let all: u64 = (1u64 << n) - 1;
        let canon = |m: u64| if (m >> (n - 1)) & 1 == 1 { all & !m } else { m };
        let mut out: Vec<u64> = match *self {
            SplitPolicy::Exhaustive => (1..(1u64 << (n - 1))).collect(),
            SplitPolicy::Bounded { max_size } => {
                let mut v = Vec::new();
                for size in 1..=max_size.min(n - 1) {
                    v.extend(crate::basis::subsets_of_size(n, size).map(canon));
                }
                for len in 1..n {
                    let starts = match boundary {
                        Boundary::Periodic => n,
                        Boundary::Open => n - len + 1,
                    };
                    for s in 0..starts {
                        let mut m = 0u64;
                        for k in 0..len {
                            m |= 1u64 << ((s + k) % n);
                        }
                        v.push(canon(m));
                    }
                }
                v
            }
        };
        out.sort_unstable();
        out.dedup();
        out
    }
}

impl fmt::Display for SplitPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SplitPolicy::Exhaustive => f.write_str("exhaustive"),
            SplitPolicy::Bounded { max_size } => write!(f, "bounded{max_size}+contiguous"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GgmResult<T> {
    /// `1 - λ_max²`.
    pub value: T,
    pub lambda_max: T,
    /// Site mask of the `A` side of the maximizing split.
    pub argmax_split: u64,
    pub policy: SplitPolicy,
    pub n_splits: usize,
}

impl<T> GgmResult<T> {
    pub fn argmax_sites(&self) -> Vec<usize> {
        (0..64).filter(|&s| (self.argmax_split >> s) & 1 == 1).collect()
    }
}

/// GGM over an explicit list of split masks. Ties go to the smallest mask.
pub fn ggm_over_splits<T: Scalar>(gs: &GroundState<T>, basis: &SectorBasis, splits: &[u64], policy: SplitPolicy) -> Result<GgmResult<T>> {
    check_state(gs, basis)?;
    if splits.is_empty() {
        return Err(Error::InvalidInput("no bipartitions to scan".into()));
    }
    let lambdas: Vec<T> = splits
        .par_iter()
        .map(|&m| schmidt_lambda_max_of(&gs.amplitudes, basis, m))
        .collect::<Result<_>>()?;
    let mut order: Vec<usize> = (0..splits.len()).collect();
    order.sort_by_key(|&k| splits[k]);
    let mut best = order[0];
    for &k in &order[1..] {
        if lambdas[k] > lambdas[best] {
            best = k;
        }
    }
    let lambda_max = lambdas[best];
    Ok(GgmResult {
        value: T::one() - lambda_max * lambda_max,
        lambda_max,
        argmax_split: splits[best],
        policy,
        n_splits: splits.len(),
    })
}

pub fn ggm<T: Scalar>(gs: &GroundState<T>, basis: &SectorBasis, policy: SplitPolicy) -> Result<GgmResult<T>> {
    let splits = policy.splits(basis.n_sites(), basis.params().boundary);
    ggm_over_splits(gs, basis, &splits, policy)
}

/// Amplitudes re-expressed in the spin-major mode order (all up modes by
/// site, then all down modes). The two orders differ by the sign of the
/// permutation, i.e. the parity of (down at `i`, up at `j`) pairs with `i < j`.
pub fn spin_major_amplitudes<T: Scalar>(amplitudes: &[T], basis: &SectorBasis) -> Vec<T> {
    let n = basis.n_sites();
    basis
        .states()
        .iter()
        .zip(amplitudes)
        .map(|(&s, &a)| {
            let mut downs_seen = 0u32;
            let mut crossings = 0u32;
            for site in 0..n {
                match s.site(site) {
                    SiteState::Down => downs_seen += 1,
                    SiteState::Up => crossings += downs_seen,
                    SiteState::Hole => {}
                }
            }
            if crossings % 2 == 0 {
                a
            } else {
                -a
            }
        })
        .collect()
}

/// Splits whose `λ_{A:B}` moves by more than `tol` when the amplitudes are
/// taken in spin-major instead of site-major mode order.
pub fn convention_sensitive_splits<T: Scalar>(gs: &GroundState<T>, basis: &SectorBasis, splits: &[u64], tol: T) -> Result<Vec<(u64, T)>> {
    check_state(gs, basis)?;
    let other = spin_major_amplitudes(&gs.amplitudes, basis);
    let mut out = Vec::new();
    for &m in splits {
        let a = schmidt_lambda_max_of(&gs.amplitudes, basis, m)?;
        let b = schmidt_lambda_max_of(&other, basis, m)?;
        if (a - b).abs() > tol {
            out.push((m, a - b));
        }
    }
    Ok(out)
}
