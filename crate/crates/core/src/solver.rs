//! Lowest eigenpairs of a real symmetric sparse matrix.
//!
//! Small problems are diagonalized densely. Larger ones use Lanczos with full
//! (twice-applied classical Gram-Schmidt) reorthogonalization and explicit
//! restarts from the current Ritz vector. Further eigenpairs are obtained by
//! deflating against those already converged.
//!
//! Inner products are evaluated sequentially so that results are bitwise
//! reproducible for any thread count; only row-wise work is parallel.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fock::{enumerate_basis, BasisTable};
use crate::model::{build_hamiltonian, reference_vector, ModelParams, SparseHermitian};
use crate::par;

#[derive(Clone, Debug, PartialEq)]
pub struct SolverOptions {
    /// Residual bound ||Hx - Ex|| for accepted eigenpairs.
    pub tol: f64,
    /// Krylov dimension per restart cycle.
    pub max_iter: usize,
    pub max_restarts: usize,
    /// Problems up to this dimension are diagonalized densely.
    pub dense_threshold: usize,
    pub seed: u64,
    /// Compute the first excited level to set [`GroundState::degenerate`].
    pub detect_degeneracy: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 300,
            max_restarts: 40,
            dense_threshold: 2000,
            seed: 0,
            detect_degeneracy: true,
        }
    }
}

#[derive(Clone, Debug)]
pub struct GroundState {
    pub energy: f64,
    /// Normalized amplitudes in basis order; largest-magnitude entry positive.
    pub vector: Vec<f64>,
    pub residual: f64,
    /// Next level lies within [`degeneracy_threshold`] of `energy`.
    pub degenerate: bool,
}

#[derive(Clone, Debug)]
pub struct Eigenpair {
    pub energy: f64,
    pub vector: Vec<f64>,
    pub residual: f64,
}

pub fn degeneracy_threshold(energy: f64) -> f64 {
    1e-8 * energy.abs().max(1.0)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn scale(a: &mut [f64], s: f64) {
    a.iter_mut().for_each(|x| *x *= s);
}

fn residual_norm(h: &SparseHermitian, x: &[f64], energy: f64) -> f64 {
    let mut hx = vec![0.0; x.len()];
    h.matvec_into(x, &mut hx);
    hx.iter()
        .zip(x)
        .map(|(a, b)| (a - energy * b).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Flips the overall sign so that the largest-magnitude amplitude (first one
/// on ties) is positive.
pub fn fix_gauge(v: &mut [f64]) {
    let mut best = 0usize;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v.get(best).is_some_and(|&x| x < 0.0) {
        scale(v, -1.0);
    }
}

/// Removes from `w` its components along every vector of each basis, twice.
fn orthogonalize(w: &mut [f64], bases: &[&[Vec<f64>]]) {
    for _ in 0..2 {
        for basis in bases {
            if basis.is_empty() {
                continue;
            }
            let coeffs = par::map(basis, |v| dot(v, w));
            let w_old = w.to_vec();
            par::fill(w, |i| {
                let mut x = w_old[i];
                for (c, v) in coeffs.iter().zip(basis.iter()) {
                    x -= c * v[i];
                }
                x
            });
        }
    }
}

fn random_vector(dim: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..dim).map(|_| rng.gen::<f64>() - 0.5).collect()
}

/// Stopping rule for one Lanczos run.
#[derive(Clone, Copy, PartialEq)]
enum Target {
    /// Residual of the Ritz pair below `tol`.
    Vector,
    /// Lowest Ritz value stationary to 1e-13 relative, or residual below `tol`.
    Value,
}

/// Lowest eigenpair of `h` restricted to the orthogonal complement of
/// `deflate`, starting from `start`.
fn lanczos_lowest(
    h: &SparseHermitian,
    start: &[f64],
    deflate: &[Vec<f64>],
    opts: &SolverOptions,
    target: Target,
    rng: &mut ChaCha8Rng,
) -> Result<Eigenpair> {
    let dim = h.dim();
    let room = dim - deflate.len();
    let mut v = start.to_vec();
    orthogonalize(&mut v, &[deflate]);
    let mut nv = norm(&v);
    if nv < 1e-8 {
        v = random_vector(dim, rng);
        orthogonalize(&mut v, &[deflate]);
        nv = norm(&v);
    }
    scale(&mut v, 1.0 / nv);

    let mut last_residual = f64::INFINITY;
    let mut total_iters = 0;
    for _restart in 0..=opts.max_restarts {
        let max_m = opts.max_iter.max(2).min(room);
        let mut basis: Vec<Vec<f64>> = vec![v.clone()];
        let mut alpha: Vec<f64> = Vec::new();
        let mut beta: Vec<f64> = Vec::new();
        let mut w = vec![0.0; dim];
        let mut prev_theta = f64::INFINITY;
        let mut ritz: Option<(f64, Vec<f64>)> = None;

        for m in 0..max_m {
            total_iters += 1;
            h.matvec_into(&basis[m], &mut w);
            let a = dot(&w, &basis[m]);
            alpha.push(a);
            orthogonalize(&mut w, &[deflate, &basis]);
            let b = norm(&w);

            let breakdown = b <= 1e-13 * a.abs().max(1.0);
            let last = m + 1 == max_m;
            if breakdown || last || (m + 1) % 8 == 0 {
                let (theta, y) = lowest_of_tridiagonal(&alpha, &beta);
                let estimate = b * y[m].abs();
                let stationary = (prev_theta - theta).abs() <= 1e-13 * theta.abs().max(1.0);
                prev_theta = theta;
                let settled = match target {
                    Target::Vector => estimate <= 0.5 * opts.tol,
                    Target::Value => estimate <= 0.5 * opts.tol || stationary,
                };
                if breakdown || last || settled {
                    let x = combine(&basis, &y);
                    ritz = Some((theta, x));
                    if breakdown || settled {
                        break;
                    }
                }
            }
            scale(&mut w, 1.0 / b);
            basis.push(std::mem::replace(&mut w, vec![0.0; dim]));
            beta.push(b);
        }

        let (_, mut x) = ritz.expect("Lanczos loop always produces a Ritz vector");
        orthogonalize(&mut x, &[deflate]);
        let nx = norm(&x);
        scale(&mut x, 1.0 / nx);
        let mut hx = vec![0.0; dim];
        h.matvec_into(&x, &mut hx);
        let energy = dot(&x, &hx);
        let residual = hx
            .iter()
            .zip(&x)
            .map(|(p, q)| (p - energy * q).powi(2))
            .sum::<f64>()
            .sqrt();
        last_residual = residual;
        let done = match target {
            Target::Vector => residual <= opts.tol,
            Target::Value => true,
        };
        if done {
            return Ok(Eigenpair {
                energy,
                vector: x,
                residual,
            });
        }
        v = x;
    }
    Err(Error::NonConvergence {
        iterations: total_iters,
        residual: last_residual,
    })
}

fn lowest_of_tridiagonal(alpha: &[f64], beta: &[f64]) -> (f64, Vec<f64>) {
    let m = alpha.len();
    let mut t = DMatrix::zeros(m, m);
    for i in 0..m {
        t[(i, i)] = alpha[i];
        if i + 1 < m {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    let eig = SymmetricEigen::new(t);
    let k = (0..m)
        .min_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]))
        .unwrap();
    (
        eig.eigenvalues[k],
        eig.eigenvectors.column(k).iter().copied().collect(),
    )
}

fn combine(basis: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    let mut x = vec![0.0; basis[0].len()];
    par::fill(&mut x, |i| basis.iter().zip(y).map(|(v, c)| c * v[i]).sum());
    x
}

fn sorted_dense(h: &SparseHermitian) -> (Vec<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(h.to_dense());
    let mut order: Vec<usize> = (0..h.dim()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = eig.eigenvectors.select_columns(&order);
    (values, vectors)
}

fn check_dim(h: &SparseHermitian, start: Option<&[f64]>) -> Result<()> {
    if h.dim() == 0 {
        return Err(Error::InvalidParams("empty matrix".into()));
    }
    if let Some(s) = start {
        if s.len() != h.dim() {
            return Err(Error::DimensionMismatch {
                expected: h.dim(),
                got: s.len(),
            });
        }
    }
    Ok(())
}

/// Ground state from a seeded random start vector.
pub fn ground_state(h: &SparseHermitian, opts: &SolverOptions) -> Result<GroundState> {
    check_dim(h, None)?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let start = random_vector(h.dim(), &mut rng);
    ground_state_from(h, &start, opts)
}

/// Ground state seeded by `start`. Inside a degenerate ground manifold the
/// returned vector is the normalized projection of `start` onto it.
pub fn ground_state_from(
    h: &SparseHermitian,
    start: &[f64],
    opts: &SolverOptions,
) -> Result<GroundState> {
    check_dim(h, Some(start))?;
    let dim = h.dim();
    if dim <= opts.dense_threshold {
        return dense_ground_state(h, start, opts);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x9e37_79b9_7f4a_7c15);
    let ground = lanczos_lowest(h, start, &[], opts, Target::Vector, &mut rng)?;
    let degenerate = if opts.detect_degeneracy && dim > 1 {
        let probe = random_vector(dim, &mut rng);
        let next = lanczos_lowest(
            h,
            &probe,
            std::slice::from_ref(&ground.vector),
            opts,
            Target::Value,
            &mut rng,
        )?;
        next.energy - ground.energy < degeneracy_threshold(ground.energy)
    } else {
        false
    };
    let mut vector = ground.vector;
    fix_gauge(&mut vector);
    Ok(GroundState {
        energy: ground.energy,
        vector,
        residual: ground.residual,
        degenerate,
    })
}

/// Dense eigendecomposition. The eigenvectors it returns can carry residuals
/// near 1e-7, so a vector failing `tol` is polished by Lanczos started from it.
fn dense_ground_state(
    h: &SparseHermitian,
    start: &[f64],
    opts: &SolverOptions,
) -> Result<GroundState> {
    let (values, vectors) = sorted_dense(h);
    let e0 = values[0];
    let thr = degeneracy_threshold(e0);
    let manifold: Vec<usize> = (0..values.len())
        .filter(|&k| values[k] - e0 < thr)
        .collect();
    let mut x = vec![0.0; h.dim()];
    for &k in &manifold {
        let col = vectors.column(k);
        let c: f64 = col.iter().zip(start).map(|(a, b)| a * b).sum();
        x.iter_mut()
            .zip(col.iter())
            .for_each(|(xi, vi)| *xi += c * vi);
    }
    let nx = norm(&x);
    if nx < 1e-8 {
        x = vectors.column(0).iter().copied().collect();
    } else {
        scale(&mut x, 1.0 / nx);
    }
    let mut hx = vec![0.0; x.len()];
    h.matvec_into(&x, &mut hx);
    let mut energy = dot(&x, &hx);
    let mut residual = residual_norm(h, &x, energy);
    if residual > opts.tol {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        let polished = lanczos_lowest(h, &x, &[], opts, Target::Vector, &mut rng)?;
        energy = polished.energy;
        residual = polished.residual;
        x = polished.vector;
    }
    fix_gauge(&mut x);
    Ok(GroundState {
        energy,
        residual,
        vector: x,
        degenerate: manifold.len() > 1,
    })
}

/// The `k` lowest eigenpairs, energies non-decreasing.
pub fn lowest_k(h: &SparseHermitian, k: usize, opts: &SolverOptions) -> Result<Vec<Eigenpair>> {
    check_dim(h, None)?;
    let dim = h.dim();
    if k == 0 || k > dim {
        return Err(Error::InvalidParams(format!(
            "requested {k} eigenpairs of a {dim}-dimensional matrix"
        )));
    }
    if dim <= opts.dense_threshold {
        let (values, vectors) = sorted_dense(h);
        return Ok((0..k)
            .map(|j| {
                let mut v: Vec<f64> = vectors.column(j).iter().copied().collect();
                fix_gauge(&mut v);
                Eigenpair {
                    energy: values[j],
                    residual: residual_norm(h, &v, values[j]),
                    vector: v,
                }
            })
            .collect());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut found: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut pairs = Vec::with_capacity(k);
    for _ in 0..k {
        let start = random_vector(dim, &mut rng);
        let mut pair = lanczos_lowest(h, &start, &found, opts, Target::Vector, &mut rng)?;
        found.push(pair.vector.clone());
        fix_gauge(&mut pair.vector);
        pairs.push(pair);
    }
    // deflation finds levels in order up to solver tolerance; sort to be safe
    pairs.sort_by(|a, b| a.energy.total_cmp(&b.energy));
    Ok(pairs)
}

/// Builds the basis and Hamiltonian for `params` and solves for the ground
/// state starting from [`reference_vector`].
pub fn solve(params: &ModelParams, opts: &SolverOptions) -> Result<(BasisTable, GroundState)> {
    params.validate()?;
    let basis = enumerate_basis(params.sites, params.bosons)?;
    let h = build_hamiltonian(params, &basis)?;
    let start = reference_vector(params, &basis, opts.seed);
    let gs = ground_state_from(&h, &start, opts)?;
    Ok((basis, gs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Boundary;

    fn params(l: usize, n: usize, j: f64, u: f64, ulr: f64) -> ModelParams {
        ModelParams {
            hopping: j,
            onsite: u,
            long_range: ulr,
            ..ModelParams::new(l, n)
        }
    }

    fn lanczos_only() -> SolverOptions {
        SolverOptions {
            dense_threshold: 0,
            ..SolverOptions::default()
        }
    }

    #[test]
    fn mott_at_zero_hopping() {
        let (basis, gs) = solve(&params(8, 8, 0.0, 1.0, 0.0), &SolverOptions::default()).unwrap();
        assert!(gs.energy.abs() < 1e-12);
        let mott = basis.rank_of(&[1; 8]).unwrap();
        assert!((gs.vector[mott] - 1.0).abs() < 1e-12);
        assert!(!gs.degenerate);
    }

    #[test]
    fn free_bosons_on_ring() {
        let (_, gs) = solve(&params(8, 8, 1.0, 0.0, 0.0), &SolverOptions::default()).unwrap();
        assert!((gs.energy + 16.0).abs() < 1e-9, "{}", gs.energy);
        assert!(gs.residual <= 1e-10);
        assert!((norm(&gs.vector) - 1.0).abs() < 1e-12);
        assert!(!gs.degenerate);
    }

    #[test]
    fn single_site() {
        let basis = enumerate_basis(1, 3).unwrap();
        let p = params(1, 3, 0.0, 1.0, 0.0);
        let h = build_hamiltonian(&p, &basis).unwrap();
        let gs = ground_state(&h, &SolverOptions::default()).unwrap();
        assert_eq!(gs.energy, 3.0);
        assert_eq!(gs.vector, vec![1.0]);
    }

    #[test]
    fn cdw_doublet_is_degenerate() {
        let basis = enumerate_basis(8, 8).unwrap();
        let h = build_hamiltonian(&params(8, 8, 0.0, 1.0, 1.0), &basis).unwrap();
        let pairs = lowest_k(&h, 2, &SolverOptions::default()).unwrap();
        assert!((pairs[0].energy + 4.0).abs() < 1e-12);
        assert!((pairs[1].energy + 4.0).abs() < 1e-12);
        assert!(dot(&pairs[0].vector, &pairs[1].vector).abs() < 1e-8);

        let (_, gs) = solve(&params(8, 8, 0.0, 1.0, 1.0), &SolverOptions::default()).unwrap();
        assert!(gs.degenerate);
        let a = basis.rank_of(&[2, 0, 2, 0, 2, 0, 2, 0]).unwrap();
        let b = basis.rank_of(&[0, 2, 0, 2, 0, 2, 0, 2]).unwrap();
        let half = 0.5f64.sqrt();
        assert!((gs.vector[a] - half).abs() < 1e-10);
        assert!((gs.vector[b] - half).abs() < 1e-10);
    }

    #[test]
    fn superfluid_is_not_degenerate() {
        let basis = enumerate_basis(4, 4).unwrap();
        let h = build_hamiltonian(&params(4, 4, 1.0, 0.0, 0.0), &basis).unwrap();
        for opts in [SolverOptions::default(), lanczos_only()] {
            let pairs = lowest_k(&h, 2, &opts).unwrap();
            assert!(pairs[1].energy - pairs[0].energy > 0.1);
            assert!((pairs[0].energy + 8.0).abs() < 1e-10);
        }
    }

    #[test]
    fn full_spectrum_lanczos_matches_dense() {
        let basis = enumerate_basis(3, 3).unwrap();
        let p = ModelParams {
            boundary: Boundary::Open,
            ..params(3, 3, 0.7, 1.0, 0.25)
        };
        let h = build_hamiltonian(&p, &basis).unwrap();
        let dim = h.dim();
        let dense = lowest_k(&h, dim, &SolverOptions::default()).unwrap();
        let krylov = lowest_k(&h, dim, &lanczos_only()).unwrap();
        for (a, b) in dense.iter().zip(&krylov) {
            assert!((a.energy - b.energy).abs() < 1e-10);
        }
        for (i, a) in krylov.iter().enumerate() {
            assert!(a.residual <= 1e-10);
            for b in &krylov[..i] {
                assert!(dot(&a.vector, &b.vector).abs() < 1e-8);
            }
        }
        assert!(dense.windows(2).all(|w| w[0].energy <= w[1].energy));
    }

    #[test]
    fn dense_and_krylov_agree() {
        let basis = enumerate_basis(6, 5).unwrap();
        let p = params(6, 5, 0.3, 1.0, 0.4);
        let h = build_hamiltonian(&p, &basis).unwrap();
        let a = ground_state(&h, &SolverOptions::default()).unwrap();
        let b = ground_state(&h, &lanczos_only()).unwrap();
        assert!((a.energy - b.energy).abs() < 1e-10);
        assert!(dot(&a.vector, &b.vector).abs() > 1.0 - 1e-10);
    }

    #[test]
    fn variational_bound() {
        let basis = enumerate_basis(5, 5).unwrap();
        let p = params(5, 5, 0.6, 1.0, 0.0);
        let h = build_hamiltonian(&p, &basis).unwrap();
        let gs = ground_state(&h, &lanczos_only()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let v = random_vector(h.dim(), &mut rng);
            let hv = h.matvec(&v).unwrap();
            assert!(gs.energy <= dot(&v, &hv) / dot(&v, &v));
        }
    }

    #[test]
    fn gauge_and_determinism() {
        let basis = enumerate_basis(6, 6).unwrap();
        let h = build_hamiltonian(&params(6, 6, 0.4, 1.0, 0.0), &basis).unwrap();
        let a = ground_state(&h, &lanczos_only()).unwrap();
        let b = ground_state(&h, &lanczos_only()).unwrap();
        assert_eq!(a.vector, b.vector);
        let imax = (0..a.vector.len())
            .max_by(|&i, &j| a.vector[i].abs().total_cmp(&a.vector[j].abs()))
            .unwrap();
        assert!(a.vector[imax] > 0.0);
    }

    #[test]
    fn argument_errors() {
        let basis = enumerate_basis(3, 2).unwrap();
        let h = build_hamiltonian(&params(3, 2, 1.0, 1.0, 0.0), &basis).unwrap();
        assert!(lowest_k(&h, 0, &SolverOptions::default()).is_err());
        assert!(lowest_k(&h, 7, &SolverOptions::default()).is_err());
        assert!(matches!(
            ground_state_from(&h, &[1.0], &SolverOptions::default()),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn reports_non_convergence() {
        let basis = enumerate_basis(6, 6).unwrap();
        let h = build_hamiltonian(&params(6, 6, 1.0, 1.0, 0.0), &basis).unwrap();
        let opts = SolverOptions {
            max_iter: 3,
            max_restarts: 1,
            ..lanczos_only()
        };
        assert!(matches!(
            ground_state(&h, &opts),
            Err(Error::NonConvergence { .. })
        ));
    }
}
