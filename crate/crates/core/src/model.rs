//! Extended Bose-Hubbard Hamiltonian: nearest-neighbour hopping, on-site
//! repulsion and the cavity-mediated long-range imbalance term.
//!
//! H = -J Σ_<ij> (b†_i b_j + h.c.) + (U/2) Σ_j n_j (n_j - 1)
//!     - (U_LR / N) D² + ε_pin D,      D = Σ_j (-1)^j n_j
//!
//! Site `j` (0-indexed) carries parity `(-1)^(j+1)`, so site 0 has parity -1.
//! The matrix is real symmetric in the Fock basis.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fock::{hop_in_place, BasisTable};
use crate::par;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Boundary {
    Periodic,
    Open,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    pub sites: usize,
    pub bosons: usize,
    /// Hopping J.
    pub hopping: f64,
    /// On-site interaction U; sets the energy scale.
    pub onsite: f64,
    /// Cavity long-range coupling U_LR.
    pub long_range: f64,
    pub boundary: Boundary,
    /// Staggered field strength. Positive values lower the energy of bosons on
    /// the parity -1 sublattice (sites 0, 2, 4, ...).
    pub pin_epsilon: f64,
    /// Extra hopping added to `hopping`; used to lift the J = 0 degeneracy.
    pub j_epsilon: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            sites: 8,
            bosons: 8,
            hopping: 0.0,
            onsite: 1.0,
            long_range: 0.0,
            boundary: Boundary::Periodic,
            pin_epsilon: 0.0,
            j_epsilon: 0.0,
        }
    }
}

impl ModelParams {
    pub fn new(sites: usize, bosons: usize) -> Self {
        Self {
            sites,
            bosons,
            ..Self::default()
        }
    }

    pub fn with_bosons(&self, bosons: usize) -> Self {
        Self {
            bosons,
            ..self.clone()
        }
    }

    /// Hopping amplitude actually placed in the matrix.
    pub fn effective_hopping(&self) -> f64 {
        self.hopping + self.j_epsilon
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParams(msg));
        for (name, v) in [
            ("J", self.hopping),
            ("U", self.onsite),
            ("U_LR", self.long_range),
            ("pin_epsilon", self.pin_epsilon),
            ("j_epsilon", self.j_epsilon),
        ] {
            if !v.is_finite() {
                return bad(format!("{name} must be finite, got {v}"));
            }
        }
        if self.sites == 0 {
            return bad("lattice needs at least one site".into());
        }
        if self.effective_hopping() != 0.0 && self.sites < 2 {
            return bad("hopping requires at least two sites".into());
        }
        if self.long_range != 0.0 {
            if self.bosons == 0 {
                return bad("long-range term is undefined for N = 0".into());
            }
            if self.boundary == Boundary::Periodic && self.sites % 2 == 1 {
                return bad(format!(
                    "long-range term needs an even number of sites with periodic boundary, got L = {}",
                    self.sites
                ));
            }
        }
        Ok(())
    }

    /// Unordered nearest-neighbour pairs, each listed once.
    pub fn bonds(&self) -> Vec<(usize, usize)> {
        let l = self.sites;
        let mut bonds: Vec<(usize, usize)> = (0..l.saturating_sub(1)).map(|j| (j, j + 1)).collect();
        if self.boundary == Boundary::Periodic && l > 2 {
            bonds.push((l - 1, 0));
        }
        bonds
    }

    /// Diagonal matrix element of a Fock state.
    pub fn diagonal_energy(&self, occ: &[u8]) -> f64 {
        let onsite: f64 = occ
            .iter()
            .map(|&n| {
                let n = n as f64;
                n * (n - 1.0)
            })
            .sum::<f64>()
            * 0.5
            * self.onsite;
        let d = imbalance(occ) as f64;
        let mut e = onsite;
        if self.long_range != 0.0 {
            e -= self.long_range / self.bosons as f64 * d * d;
        }
        e + self.pin_epsilon * d
    }
}

/// Parity (-1)^(j+1) of 0-indexed site `j`.
pub fn site_parity(site: usize) -> i64 {
    if site.is_multiple_of(2) {
        -1
    } else {
        1
    }
}

/// Sublattice imbalance D = Σ_j (-1)^(j+1) n_j.
pub fn imbalance(occ: &[u8]) -> i64 {
    occ.iter()
        .enumerate()
        .map(|(j, &n)| site_parity(j) * n as i64)
        .sum()
}

/// Real symmetric matrix in compressed-row form.
#[derive(Clone, Debug)]
pub struct SparseHermitian {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseHermitian {
    /// Builds from per-row entry lists. Duplicate columns are summed and
    /// explicit zeros dropped.
    pub fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> Self {
        let dim = rows.len();
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|&(c, _)| c);
            let mut last: Option<usize> = None;
            for (c, v) in row {
                if last == Some(c) {
                    *vals.last_mut().unwrap() += v;
                } else {
                    cols.push(c);
                    vals.push(v);
                    last = Some(c);
                }
            }
            // drop entries that cancelled to zero
            let start = *row_ptr.last().unwrap();
            let mut w = start;
            for r in start..cols.len() {
                if vals[r] != 0.0 {
                    cols[w] = cols[r];
                    vals[w] = vals[r];
                    w += 1;
                }
            }
            cols.truncate(w);
            vals.truncate(w);
            row_ptr.push(cols.len());
        }
        Self {
            dim,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn from_dense(m: &nalgebra::DMatrix<f64>) -> Self {
        let rows = (0..m.nrows())
            .map(|r| (0..m.ncols()).map(|c| (c, m[(r, c)])).collect())
            .collect();
        Self::from_rows(rows)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.cols[span.clone()]
            .iter()
            .copied()
            .zip(self.vals[span].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        match self.cols[span.clone()].binary_search(&c) {
            Ok(k) => self.vals[span.start + k],
            Err(_) => 0.0,
        }
    }

    /// All stored entries as (row, col, value).
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.dim).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|r| self.get(r, r)).collect()
    }

    /// Largest |H_rc - H_cr| over stored entries.
    pub fn asymmetry(&self) -> f64 {
        self.entries()
            .map(|(r, c, v)| (v - self.get(c, r)).abs())
            .fold(0.0, f64::max)
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.dim);
        assert_eq!(y.len(), self.dim);
        par::fill(y, |r| self.row(r).map(|(c, v)| v * x[c]).sum());
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        let mut y = vec![0.0; self.dim];
        self.matvec_into(x, &mut y);
        Ok(y)
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.dim, self.dim);
        for (r, c, v) in self.entries() {
            m[(r, c)] = v;
        }
        m
    }
}

fn check_basis(params: &ModelParams, basis: &BasisTable) -> Result<()> {
    if basis.sites() != params.sites || basis.bosons() != params.bosons {
        return Err(Error::InvalidParams(format!(
            "basis is for L = {}, N = {} but parameters ask for L = {}, N = {}",
            basis.sites(),
            basis.bosons(),
            params.sites,
            params.bosons
        )));
    }
    Ok(())
}

/// Row `r` of H as (column, value) pairs, unmerged.
fn hamiltonian_row(
    params: &ModelParams,
    basis: &BasisTable,
    bonds: &[(usize, usize)],
    r: usize,
) -> Vec<(usize, f64)> {
    let state = basis.states()[r].as_slice();
    let mut row = vec![(r, params.diagonal_energy(state))];
    let t = params.effective_hopping();
    if t != 0.0 {
        let mut scratch = state.to_vec();
        for &(i, j) in bonds {
            for (dest, src) in [(i, j), (j, i)] {
                if let Some(amp) = hop_in_place(&mut scratch, dest, src) {
                    let c = basis
                        .rank_of(&scratch)
                        .expect("hopping stays in the N sector");
                    row.push((c, -t * amp));
                    scratch.copy_from_slice(state);
                }
            }
        }
    }
    row
}

pub fn build_hamiltonian(params: &ModelParams, basis: &BasisTable) -> Result<SparseHermitian> {
    params.validate()?;
    check_basis(params, basis)?;
    let bonds = params.bonds();
    let idx: Vec<usize> = (0..basis.dim()).collect();
    let rows = par::map(&idx, |&r| hamiltonian_row(params, basis, &bonds, r));
    Ok(SparseHermitian::from_rows(rows))
}

/// Matrix-free H·psi. H is symmetric, so gathering row `r` from the hops out
/// of state `r` gives the same result as scattering.
pub fn apply_hamiltonian(
    params: &ModelParams,
    basis: &BasisTable,
    psi: &[f64],
) -> Result<Vec<f64>> {
    params.validate()?;
    check_basis(params, basis)?;
    if psi.len() != basis.dim() {
        return Err(Error::DimensionMismatch {
            expected: basis.dim(),
            got: psi.len(),
        });
    }
    let bonds = params.bonds();
    let t = params.effective_hopping();
    let mut out = vec![0.0; psi.len()];
    par::fill(&mut out, |r| {
        let state = basis.states()[r].as_slice();
        let mut acc = params.diagonal_energy(state) * psi[r];
        if t != 0.0 {
            let mut scratch = state.to_vec();
            for &(i, j) in &bonds {
                for (dest, src) in [(i, j), (j, i)] {
                    if let Some(amp) = hop_in_place(&mut scratch, dest, src) {
                        let c = basis
                            .rank_of(&scratch)
                            .expect("hopping stays in the N sector");
                        acc -= t * amp * psi[c];
                        scratch.copy_from_slice(state);
                    }
                }
            }
        }
        acc
    });
    Ok(out)
}

/// Site permutations that commute with H: reflection, plus cyclic
/// translations under periodic boundary. Translations by an odd number of
/// sites swap the sublattices, which leaves D² invariant but flips the
/// pinning term; they are omitted when `pin_epsilon` is nonzero.
pub fn lattice_symmetries(params: &ModelParams) -> Vec<Vec<usize>> {
    let l = params.sites;
    let mut perms = Vec::new();
    let shifts: Vec<usize> = match params.boundary {
        Boundary::Periodic => (0..l)
            .filter(|s| params.pin_epsilon == 0.0 || s % 2 == 0)
            .collect(),
        Boundary::Open => vec![0],
    };
    for &s in &shifts {
        perms.push((0..l).map(|j| (j + s) % l).collect::<Vec<_>>());
    }
    // Reflection j -> L-1-j keeps the parity pattern only for odd L.
    let reflection_ok = params.pin_epsilon == 0.0 || l % 2 == 1;
    if reflection_ok {
        let base: Vec<Vec<usize>> = perms.clone();
        for p in base {
            perms.push(p.iter().map(|&j| l - 1 - j).collect());
        }
    }
    perms
}

/// Deterministic Krylov start vector: seeded positive random weights averaged
/// over the orbit of each state under [`lattice_symmetries`], normalized.
///
/// For J_eff >= 0 the Hamiltonian has non-positive off-diagonal elements, so
/// its ground state has non-negative amplitudes and overlaps this vector. The
/// vector is invariant under every lattice symmetry, so projecting it onto a
/// degenerate ground manifold yields the symmetric combination. With
/// J_eff < 0 the ground state may sit in another symmetry sector, and a plain
/// seeded random vector is returned instead.
pub fn reference_vector(params: &ModelParams, basis: &BasisTable, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = basis.dim();
    if params.effective_hopping() < 0.0 {
        let v: Vec<f64> = (0..dim).map(|_| rng.gen::<f64>() - 0.5).collect();
        return normalized(v);
    }
    let weights: Vec<f64> = (0..dim).map(|_| 0.5 + rng.gen::<f64>()).collect();
    let perms = lattice_symmetries(params);
    let mut out = vec![0.0; dim];
    par::fill(&mut out, |r| {
        let state = basis.states()[r].as_slice();
        let mut image = vec![0u8; state.len()];
        let mut orbit: Vec<f64> = perms
            .iter()
            .map(|p| {
                for (j, &pj) in p.iter().enumerate() {
                    image[pj] = state[j];
                }
                weights[basis.rank_of(&image).expect("site permutation preserves N")]
            })
            .collect();
        // sorted so that every state of an orbit sums identically
        orbit.sort_by(f64::total_cmp);
        orbit.iter().sum::<f64>() / perms.len() as f64
    });
    normalized(out)
}

fn normalized(mut v: Vec<f64>) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= n);
    v
}
