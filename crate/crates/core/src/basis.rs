//! Gutzwiller-projected occupation basis in fixed `(n_up, n_dn)` sectors.
//!
//! Each site carries two bits, site-major, with the up bit in the lower
//! position: bit `2i` is the up mode of site `i` and bit `2i + 1` its down
//! mode. The bit index of a mode is therefore its position in the canonical
//! fermionic ordering `mode(i, σ) = 2i + σ`, and a basis state stands for
//! the product of creation operators applied in ascending mode order.

use std::fmt;

use crate::error::{Error, Result};

/// Default upper bound on the number of states in a sector.
pub const DEFAULT_SECTOR_LIMIT: u128 = 50_000_000;

/// Largest chain that fits the packed 64-bit encoding.
pub const MAX_SITES: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Boundary {
    Periodic,
    Open,
}

impl fmt::Display for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Boundary::Periodic => f.write_str("periodic"),
            Boundary::Open => f.write_str("open"),
        }
    }
}

/// Lattice, filling and coupling of one t-J chain. Energies are in units of `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub n_sites: usize,
    pub n_up: usize,
    pub n_dn: usize,
    pub j_over_t: f64,
    pub boundary: Boundary,
    /// Adds the `-J/4 n_i n_j` density term of the textbook t-J model to each
    /// bond. Off by default: the exchange is the bare `J S_i·S_j`.
    pub density_term: bool,
}

impl ModelParams {
    pub fn new(
        n_sites: usize,
        n_up: usize,
        n_dn: usize,
        j_over_t: f64,
        boundary: Boundary,
    ) -> Result<Self> {
        let p = Self {
            n_sites,
            n_up,
            n_dn,
            j_over_t,
            boundary,
            density_term: false,
        };
        p.validate()?;
        Ok(p)
    }

    /// Periodic chain in the minimal-|Sz| sector holding `n_electrons`.
    pub fn periodic(n_sites: usize, n_electrons: usize, j_over_t: f64) -> Result<Self> {
        Self::new(
            n_sites,
            n_electrons.div_ceil(2),
            n_electrons / 2,
            j_over_t,
            Boundary::Periodic,
        )
    }

    pub fn with_density_term(mut self, on: bool) -> Self {
        self.density_term = on;
        self
    }

    pub fn with_coupling(mut self, j_over_t: f64) -> Self {
        self.j_over_t = j_over_t;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_sites < 2 {
            return Err(Error::InvalidParams(format!(
                "n_sites must be at least 2, got {}",
                self.n_sites
            )));
        }
        if self.n_sites > MAX_SITES {
            return Err(Error::InvalidParams(format!(
                "n_sites must be at most {MAX_SITES}, got {}",
                self.n_sites
            )));
        }
        if self.n_up + self.n_dn > self.n_sites {
            return Err(Error::InvalidParams(format!(
                "n_up + n_dn = {} exceeds n_sites = {}",
                self.n_up + self.n_dn,
                self.n_sites
            )));
        }
        if !(self.j_over_t.is_finite() && self.j_over_t >= 0.0) {
            return Err(Error::InvalidParams(format!(
                "j_over_t must be finite and non-negative, got {}",
                self.j_over_t
            )));
        }
        Ok(())
    }

    pub fn n_electrons(&self) -> usize {
        self.n_up + self.n_dn
    }

    /// Electron density `N_el / N`.
    pub fn density(&self) -> f64 {
        self.n_electrons() as f64 / self.n_sites as f64
    }

    /// Closed-form sector dimension `C(N, N_el) · C(N_el, n_up)`.
    pub fn sector_dim(&self) -> u128 {
        binomial(self.n_sites as u64, self.n_electrons() as u64)
            * binomial(self.n_electrons() as u64, self.n_up as u64)
    }
}

pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// Local state of one site.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SiteState {
    Hole = 0,
    Up = 1,
    Down = 2,
}

impl SiteState {
    pub const ALL: [SiteState; 3] = [SiteState::Hole, SiteState::Up, SiteState::Down];

    pub fn from_bits(bits: u64) -> Option<Self> {
        match bits {
            0 => Some(SiteState::Hole),
            1 => Some(SiteState::Up),
            2 => Some(SiteState::Down),
            _ => None,
        }
    }

    /// Position in the local `|hole⟩, |↑⟩, |↓⟩` basis.
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn bits(self) -> u64 {
        self as u64
    }
}

/// Packed occupation configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct BasisState(pub u64);

const UP_BITS: u64 = 0x5555_5555_5555_5555;
const DN_BITS: u64 = 0xAAAA_AAAA_AAAA_AAAA;

impl BasisState {
    pub fn from_sites(sites: &[SiteState]) -> Self {
        let mut w = 0u64;
        for (i, s) in sites.iter().enumerate() {
            w |= s.bits() << (2 * i);
        }
        BasisState(w)
    }

    #[inline]
    pub fn bits(self) -> u64 {
        self.0
    }

    /// Local state at `site`; panics on the forbidden doubly occupied pattern.
    #[inline]
    pub fn site(self, site: usize) -> SiteState {
        SiteState::from_bits((self.0 >> (2 * site)) & 3).expect("doubly occupied site")
    }

    #[inline]
    pub fn with_site(self, site: usize, s: SiteState) -> Self {
        BasisState((self.0 & !(3u64 << (2 * site))) | (s.bits() << (2 * site)))
    }

    #[inline]
    pub fn n_up(self) -> usize {
        (self.0 & UP_BITS).count_ones() as usize
    }

    #[inline]
    pub fn n_dn(self) -> usize {
        (self.0 & DN_BITS).count_ones() as usize
    }

    #[inline]
    pub fn is_mode_occupied(self, mode: usize) -> bool {
        (self.0 >> mode) & 1 == 1
    }

    /// True when no site holds the `11` pattern and no bits lie beyond `n_sites`.
    pub fn is_valid(self, n_sites: usize) -> bool {
        let used = if n_sites >= 32 { u64::MAX } else { (1u64 << (2 * n_sites)) - 1 };
        self.0 & !used == 0 && (self.0 & UP_BITS) & ((self.0 & DN_BITS) >> 1) == 0
    }

    pub fn sites(self, n_sites: usize) -> Vec<SiteState> {
        (0..n_sites).map(|i| self.site(i)).collect()
    }
}

/// Canonical mode index of `(site, spin)` with spin 0 = up, 1 = down.
#[inline]
pub fn mode(site: usize, spin: usize) -> usize {
    2 * site + spin
}

/// Mask selecting both bits of `site`.
#[inline]
pub fn site_mask(site: usize) -> u64 {
    3u64 << (2 * site)
}

/// Sign `(-1)^k`, `k` the number of occupied modes strictly between `mode_a`
/// and `mode_b` in canonical order.
#[inline]
pub fn mode_parity_between(state: BasisState, mode_a: usize, mode_b: usize) -> i8 {
    assert_ne!(mode_a, mode_b, "modes must differ");
    let (lo, hi) = if mode_a < mode_b { (mode_a, mode_b) } else { (mode_b, mode_a) };
    let below_hi = if hi >= 64 { u64::MAX } else { (1u64 << hi) - 1 };
    let upto_lo = if lo + 1 >= 64 { u64::MAX } else { (1u64 << (lo + 1)) - 1 };
    let between = state.0 & below_hi & !upto_lo;
    if between.count_ones() % 2 == 0 {
        1
    } else {
        -1
    }
}

/// Sorted enumeration of one particle-number sector.
#[derive(Debug, Clone)]
pub struct SectorBasis {
    params: ModelParams,
    states: Vec<BasisState>,
}

impl SectorBasis {
    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn states(&self) -> &[BasisState] {
        &self.states
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn n_sites(&self) -> usize {
        self.params.n_sites
    }

    #[inline]
    pub fn state(&self, k: usize) -> BasisState {
        self.states[k]
    }

    #[inline]
    pub fn index_of(&self, state: BasisState) -> Option<usize> {
        self.states.binary_search(&state).ok()
    }

    /// Same enumeration re-tagged with a different coupling.
    pub fn with_params(&self, params: ModelParams) -> Result<Self> {
        if params.n_sites != self.params.n_sites
            || params.n_up != self.params.n_up
            || params.n_dn != self.params.n_dn
        {
            return Err(Error::InvalidParams(
                "sector of new params differs from the basis".into(),
            ));
        }
        Ok(Self {
            params,
            states: self.states.clone(),
        })
    }
}

pub fn enumerate_sector(params: &ModelParams) -> Result<SectorBasis> {
    enumerate_sector_with_limit(params, DEFAULT_SECTOR_LIMIT)
}

pub fn enumerate_sector_with_limit(params: &ModelParams, limit: u128) -> Result<SectorBasis> {
    params.validate()?;
    let dim = params.sector_dim();
    if dim > limit {
        return Err(Error::Capacity { dim, limit });
    }
    let n = params.n_sites;
    let n_el = params.n_electrons();
    let mut states = Vec::with_capacity(dim as usize);
    for occupied in subsets_of_size(n, n_el) {
        let occ_sites: Vec<usize> = (0..n).filter(|&i| (occupied >> i) & 1 == 1).collect();
        for ups in subsets_of_size(n_el, params.n_up) {
            let mut w = 0u64;
            for (k, &site) in occ_sites.iter().enumerate() {
                let s = if (ups >> k) & 1 == 1 { SiteState::Up } else { SiteState::Down };
                w |= s.bits() << (2 * site);
            }
            states.push(BasisState(w));
        }
    }
    states.sort_unstable();
    debug_assert_eq!(states.len() as u128, dim);
    Ok(SectorBasis {
        params: *params,
        states,
    })
}

/// All `k`-element subsets of `0..n` as bitmasks, ascending (Gosper's hack).
pub fn subsets_of_size(n: usize, k: usize) -> impl Iterator<Item = u64> {
    let limit: u64 = 1u64 << n;
    let first: u64 = if k == 0 { 0 } else { (1u64 << k) - 1 };
    let mut next = if k > n { None } else { Some(first) };
    std::iter::from_fn(move || {
        let cur = next?;
        next = if cur == 0 {
            None
        } else {
            let c = cur & cur.wrapping_neg();
            let r = cur + c;
            let nxt = (((r ^ cur) >> 2) / c) | r;
            (nxt < limit).then_some(nxt)
        };
        Some(cur)
    })
}
