//! Ground states by restarted Lanczos with full reorthogonalization, plus a
//! dense oracle for small sectors.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::basis::{enumerate_sector, ModelParams, SectorBasis};
use crate::error::{Error, Result};
use crate::hamiltonian::{Hamiltonian, LinearOperator, SparseSymMatrix};
use crate::linalg::{symmetric_eigen, tridiagonal_eigen};
use crate::scalar::{axpy, dot, norm, scale, Scalar};

/// Largest sector handed to [`dense_ground`].
pub const DENSE_LIMIT: usize = 4000;

/// Two lowest levels closer than this are reported as degenerate.
pub const DEGENERACY_GAP: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Relative residual tolerance `‖Hψ − Eψ‖ ≤ tol · max(1, |E|)`.
    pub tol: f64,
    /// Budget of operator applications per eigenpair.
    pub max_iter: usize,
    /// Seed of the pseudo-random start vector.
    pub seed: u64,
    /// Krylov vectors kept before restarting from the current Ritz vector.
    pub restart_after: usize,
    /// Run a deflated second solve to decide `degenerate`.
    pub detect_degeneracy: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 2000,
            seed: 0x5eed,
            restart_after: 60,
            detect_degeneracy: true,
        }
    }
}

impl SolverConfig {
    pub fn for_precision<T: Scalar>() -> Self {
        Self {
            tol: T::DEFAULT_TOL,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::InvalidInput(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidInput("max_iter must be at least 1".into()));
        }
        if self.restart_after < 2 {
            return Err(Error::InvalidInput("restart_after must be at least 2".into()));
        }
        Ok(())
    }
}

/// Normalized lowest eigenvector of a sector Hamiltonian.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundState<T> {
    pub energy: T,
    pub amplitudes: Vec<T>,
    /// `(n_up, n_dn)` when known.
    pub sector: Option<(usize, usize)>,
    pub residual_norm: T,
    pub degenerate: bool,
    /// Operator applications spent, degeneracy probe excluded.
    pub iterations: usize,
    /// Lowest Ritz value after every Lanczos step.
    pub ritz_history: Vec<T>,
}

impl<T: Scalar> GroundState<T> {
    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn with_sector(mut self, n_up: usize, n_dn: usize) -> Self {
        self.sector = Some((n_up, n_dn));
        self
    }
}

/// Flips the global sign so that the first largest-magnitude entry is positive.
fn fix_sign<T: Scalar>(v: &mut [T]) {
    let mut best = 0;
    for (k, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = k;
        }
    }
    if v.get(best).is_some_and(|x| *x < T::zero()) {
        scale(-T::one(), v);
    }
}

fn random_vector<T: Scalar>(n: usize, seed: u64) -> Vec<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| T::c(rng.random_range(-1.0..1.0))).collect()
}

fn project_out<T: Scalar>(deflate: &[&[T]], w: &mut [T]) {
    for d in deflate {
        let c = dot(d, w);
        axpy(-c, d, w);
    }
}

struct Eigenpair<T> {
    value: T,
    vector: Vec<T>,
    residual: T,
    iterations: usize,
    history: Vec<T>,
    converged: bool,
}

/// Lowest eigenpair of `op` restricted to the orthogonal complement of the
/// (orthonormal) `deflate` vectors.
fn lanczos_lowest<T: Scalar, O: LinearOperator<T> + ?Sized>(
    op: &O,
    cfg: &SolverConfig,
    mut x: Vec<T>,
    deflate: &[&[T]],
) -> Result<Eigenpair<T>> {
    let n = op.dim();
    if n <= deflate.len() {
        return Err(Error::InvalidInput("no space left after deflation".into()));
    }
    let tol = T::tol(cfg.tol);
    let m_max = cfg.restart_after.min(n - deflate.len()).max(1);
    let breakdown = T::epsilon() * T::c(64.0);

    project_out(deflate, &mut x);
    let nx = norm(&x);
    if nx == T::zero() {
        return Err(Error::InvalidInput("start vector vanishes".into()));
    }
    scale(T::one() / nx, &mut x);

    let mut history = Vec::new();
    let mut total = 0usize;
    let mut w = vec![T::zero(); n];
    let mut best: Option<Eigenpair<T>> = None;

    loop {
        let mut vs: Vec<Vec<T>> = vec![x];
        let mut alphas: Vec<T> = Vec::new();
        let mut betas: Vec<T> = Vec::new();
        let ritz_coeffs: Vec<T>;
        loop {
            let j = vs.len() - 1;
            op.apply(&vs[j], &mut w);
            project_out(deflate, &mut w);
            total += 1;
            let alpha = dot(&vs[j], &w);
            axpy(-alpha, &vs[j], &mut w);
            if j > 0 {
                axpy(-betas[j - 1], &vs[j - 1], &mut w);
            }
            for _ in 0..2 {
                for v in &vs {
                    let c = dot(v, &w);
                    axpy(-c, v, &mut w);
                }
                project_out(deflate, &mut w);
            }
            let beta = norm(&w);
            alphas.push(alpha);

            let theta = tridiagonal_eigen(&alphas, &betas, false).values[0];
            history.push(theta);

            let last = vs.len() == m_max || total >= cfg.max_iter;
            let scale_ref = T::one().max(theta.abs());
            let stagnant = beta <= breakdown * scale_ref;
            let check = last || stagnant || j < 20 || j % 5 == 4;
            if check {
                let eig = tridiagonal_eigen(&alphas, &betas, true);
                let s = eig.vector(0);
                let estimate = beta * s[s.len() - 1].abs();
                if last || stagnant || estimate <= tol * scale_ref {
                    ritz_coeffs = s;
                    break;
                }
            }
            betas.push(beta);
            let mut next = w.clone();
            scale(T::one() / beta, &mut next);
            vs.push(next);
        }

        let mut y = vec![T::zero(); n];
        for (c, v) in ritz_coeffs.iter().zip(&vs) {
            axpy(*c, v, &mut y);
        }
        project_out(deflate, &mut y);
        let ny = norm(&y);
        scale(T::one() / ny, &mut y);
        op.apply(&y, &mut w);
        project_out(deflate, &mut w);
        let rho = dot(&y, &w);
        axpy(-rho, &y, &mut w);
        let residual = norm(&w);

        let converged = residual <= tol * T::one().max(rho.abs());
        let better = best.as_ref().is_none_or(|b| residual < b.residual);
        if converged || better {
            best = Some(Eigenpair {
                value: rho,
                vector: y.clone(),
                residual,
                iterations: total,
                history: history.clone(),
                converged,
            });
        }
        if converged || total >= cfg.max_iter {
            let mut out = best.expect("at least one cycle ran");
            out.iterations = total;
            out.history = history;
            return Ok(out);
        }
        x = y;
    }
}

/// Lowest eigenpair of a symmetric operator.
pub fn lanczos_ground<T: Scalar, O: LinearOperator<T> + ?Sized>(op: &O, cfg: &SolverConfig) -> Result<GroundState<T>> {
    cfg.validate()?;
    let n = op.dim();
    if n == 0 {
        return Err(Error::InvalidInput("operator dimension is zero".into()));
    }
    let ground = lanczos_lowest(op, cfg, random_vector(n, cfg.seed), &[])?;
    if !ground.converged {
        return Err(Error::NotConverged {
            iterations: ground.iterations,
            best_residual: ground.residual.to_f64_lossy(),
        });
    }
    let mut amplitudes = ground.vector;
    fix_sign(&mut amplitudes);

    let degenerate = if cfg.detect_degeneracy && n >= 2 {
        let probe = lanczos_lowest(op, cfg, random_vector(n, cfg.seed.wrapping_add(1)), &[&amplitudes])?;
        probe.value - ground.value < T::tol(DEGENERACY_GAP)
    } else {
        false
    };

    Ok(GroundState {
        energy: ground.value,
        amplitudes,
        sector: None,
        residual_norm: ground.residual,
        degenerate,
        iterations: ground.iterations,
        ritz_history: ground.history,
    })
}

/// Full diagonalization of a small sparse matrix.
pub fn dense_ground<T: Scalar>(matrix: &SparseSymMatrix<T>) -> Result<GroundState<T>> {
    let n = matrix.dim;
    if n == 0 {
        return Err(Error::InvalidInput("matrix dimension is zero".into()));
    }
    if n > DENSE_LIMIT {
        return Err(Error::Capacity {
            dim: n as u128,
            limit: DENSE_LIMIT as u128,
        });
    }
    let eig = symmetric_eigen(&matrix.to_dense(), n);
    let mut v = eig.vector(0);
    fix_sign(&mut v);
    let hv = matrix.matvec(&v);
    let e = eig.values[0];
    let residual = norm(&hv.iter().zip(&v).map(|(&a, &b)| a - e * b).collect::<Vec<_>>());
    let degenerate = n >= 2 && eig.values[1] - eig.values[0] < T::tol(DEGENERACY_GAP);
    Ok(GroundState {
        energy: e,
        amplitudes: v,
        sector: None,
        residual_norm: residual,
        degenerate,
        iterations: 0,
        ritz_history: vec![],
    })
}

/// Ground state of the sector spanned by `basis`.
pub fn sector_ground<T: Scalar>(params: &ModelParams, basis: &SectorBasis, cfg: &SolverConfig) -> Result<GroundState<T>> {
    let h = Hamiltonian::<T>::new(params, basis)?;
    Ok(lanczos_ground(&h, cfg)?.with_sector(params.n_up, params.n_dn))
}

/// The sector `(⌈N_el/2⌉, ⌊N_el/2⌋)` for `params`' electron count.
pub fn minimal_sz_params(params: &ModelParams) -> ModelParams {
    let n_el = params.n_electrons();
    ModelParams {
        n_up: n_el.div_ceil(2),
        n_dn: n_el / 2,
        ..*params
    }
}

/// Ground state at fixed electron number, solved in the minimal-|Sz| sector,
/// which holds a member of every total-spin multiplet.
pub fn global_ground<T: Scalar>(params: &ModelParams, cfg: &SolverConfig) -> Result<(SectorBasis, GroundState<T>)> {
    let p = minimal_sz_params(params);
    let basis = enumerate_sector(&p)?;
    let gs = sector_ground(&p, &basis, cfg)?;
    Ok((basis, gs))
}
