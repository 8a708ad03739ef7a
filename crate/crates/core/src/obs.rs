//! Ground-state observables.
//!
//! All functions take a real amplitude vector in basis order. The witness uses
//! the momentum mode b_q = L^{-1/2} Σ_j e^{-i q j} b_j with q = 2πm/L and the
//! number-like observable R = b_q† b_q; λ = Var(R) - R_sep certifies
//! entanglement among sites when negative.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::{enumerate_basis, hop_in_place, BasisTable};
use crate::model::{imbalance, ModelParams};
use crate::par;
use crate::solver::{solve, SolverOptions};

/// Imaginary parts of reported real scalars must stay below this.
const IMAG_TOL: f64 = 1e-10;

/// Two λ values closer than this count as a tie in [`witness_min_over_q`].
const LAMBDA_TIE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct WitnessReport {
    /// Grid index, q = 2πm/L.
    pub m: usize,
    pub q: f64,
    pub mean_r: f64,
    pub var_r: f64,
    pub r_sep: f64,
    pub lambda: f64,
}

#[derive(Clone, Debug)]
pub struct OneBodyMatrix {
    /// `g[(i, j)] = <b†_i b_j>`.
    pub g: DMatrix<Complex64>,
}

impl OneBodyMatrix {
    pub fn trace(&self) -> f64 {
        (0..self.g.nrows()).map(|i| self.g[(i, i)].re).sum()
    }

    pub fn max_hermiticity_error(&self) -> f64 {
        let n = self.g.nrows();
        let mut err: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                err = err.max((self.g[(i, j)] - self.g[(j, i)].conj()).norm());
            }
        }
        err
    }

    /// Σ_ij e^{ik(i-j)} G_ij.
    pub fn fourier(&self, k: f64) -> Complex64 {
        let n = self.g.nrows();
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                acc += Complex64::from_polar(1.0, k * (i as f64 - j as f64)) * self.g[(i, j)];
            }
        }
        acc
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThetaLr {
    /// (2/N) <D>
    pub signed: f64,
    /// (2/N) sqrt(<D²>)
    pub rms: f64,
}

#[derive(Clone, Debug)]
pub struct EntropyReport {
    pub cut: usize,
    /// Squared Schmidt coefficients, descending, zeros dropped.
    pub schmidt: Vec<f64>,
    /// Von Neumann entropy in nats.
    pub entropy: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GapReport {
    pub e_minus: f64,
    pub e_zero: f64,
    pub e_plus: f64,
    pub delta: f64,
}

/// Every nonvanishing b†_j b_i (i ≠ j) matrix element leaving each state:
/// `hops[t]` holds (i, j, s, amp) with amp = <s| b†_j b_i |t>.
struct HopTable {
    hops: Vec<Vec<(u8, u8, u32, f64)>>,
}

impl HopTable {
    fn new(basis: &BasisTable) -> Self {
        let l = basis.sites();
        let states = basis.states();
        let mut hops = vec![Vec::new(); basis.dim()];
        par::fill(&mut hops, |t| {
            let occ = states[t].as_slice();
            let mut scratch = occ.to_vec();
            let mut out = Vec::new();
            for i in 0..l {
                if occ[i] == 0 {
                    continue;
                }
                for j in 0..l {
                    if i == j {
                        continue;
                    }
                    if let Some(amp) = hop_in_place(&mut scratch, j, i) {
                        let s = basis.rank_of(&scratch).expect("hop stays in sector");
                        out.push((i as u8, j as u8, s as u32, amp));
                        scratch.copy_from_slice(occ);
                    }
                }
            }
            out
        });
        Self { hops }
    }
}

fn check_len(psi: &[f64], basis: &BasisTable) -> Result<()> {
    if psi.len() != basis.dim() {
        return Err(Error::DimensionMismatch {
            expected: basis.dim(),
            got: psi.len(),
        });
    }
    Ok(())
}

pub fn site_densities(psi: &[f64], basis: &BasisTable) -> Result<Vec<f64>> {
    check_len(psi, basis)?;
    let l = basis.sites();
    let mut dens = vec![0.0; l];
    for (s, &a) in basis.states().iter().zip(psi) {
        let w = a * a;
        for (d, &n) in dens.iter_mut().zip(s.as_slice()) {
            *d += w * n as f64;
        }
    }
    Ok(dens)
}

pub fn one_body_matrix(psi: &[f64], basis: &BasisTable) -> Result<OneBodyMatrix> {
    check_len(psi, basis)?;
    Ok(one_body_with(psi, basis, &HopTable::new(basis)))
}

fn one_body_with(psi: &[f64], basis: &BasisTable, table: &HopTable) -> OneBodyMatrix {
    let l = basis.sites();
    let dens = site_densities(psi, basis).expect("length checked by caller");
    // <b†_j b_i> = Σ_t ψ_s ψ_t <s|b†_j b_i|t>, accumulated per row j
    let rows: Vec<usize> = (0..l).collect();
    let per_row = par::map(&rows, |&row| {
        let mut acc = vec![0.0; l];
        for (t, hops) in table.hops.iter().enumerate() {
            let at = psi[t];
            if at == 0.0 {
                continue;
            }
            for &(i, j, s, amp) in hops {
                if j as usize == row {
                    acc[i as usize] += psi[s as usize] * amp * at;
                }
            }
        }
        acc
    });
    let mut g = DMatrix::from_element(l, l, Complex64::new(0.0, 0.0));
    for j in 0..l {
        for i in 0..l {
            g[(j, i)] = if i == j {
                Complex64::new(dens[i], 0.0)
            } else {
                Complex64::new(per_row[j][i], 0.0)
            };
        }
    }
    OneBodyMatrix { g }
}

/// Wavenumber of grid point `m` on an `l`-site lattice.
pub fn grid_q(m: usize, l: usize) -> f64 {
    2.0 * PI * m as f64 / l as f64
}

/// Grid index of `q`, or `NotOnGrid`.
pub fn grid_index(q: f64, l: usize) -> Result<usize> {
    let x = q * l as f64 / (2.0 * PI);
    let r = x.round();
    if !x.is_finite() || (x - r).abs() > 1e-9 {
        return Err(Error::NotOnGrid { q, sites: l });
    }
    Ok((r as i64).rem_euclid(l as i64) as usize)
}

/// Separable-state lower bound on Var(R):
/// [N(L-1) + N² - Σ_j <n_j>²] / L².
pub fn separable_bound(sites: usize, bosons: usize, densities: &[f64]) -> f64 {
    let l = sites as f64;
    let n = bosons as f64;
    let sq: f64 = densities.iter().map(|d| d * d).sum();
    (n * (l - 1.0) + n * n - sq) / (l * l)
}

/// R·ψ for the grid mode `m`.
fn apply_r(psi: &[f64], basis: &BasisTable, table: &HopTable, m: usize) -> Vec<Complex64> {
    let l = basis.sites();
    let q = grid_q(m, l);
    let inv_l = 1.0 / l as f64;
    // e^{iq(i-j)} depends on (i - j) mod L only
    let phase: Vec<Complex64> = (0..l)
        .map(|d| Complex64::from_polar(inv_l, q * d as f64))
        .collect();
    let n = basis.bosons() as f64;
    let mut out = vec![Complex64::new(0.0, 0.0); psi.len()];
    par::fill(&mut out, |t| {
        // diagonal part: (1/L) Σ_i n_i = N/L
        let mut acc = Complex64::new(n * inv_l * psi[t], 0.0);
        for &(i, j, s, amp) in &table.hops[t] {
            let d = (i as usize + l - j as usize) % l;
            acc += phase[d] * (amp * psi[s as usize]);
        }
        acc
    });
    out
}

/// First and second moments (<R>, <R²>) of R for mode `m`.
pub fn r_moments(psi: &[f64], basis: &BasisTable, m: usize) -> Result<(f64, f64)> {
    check_len(psi, basis)?;
    let table = HopTable::new(basis);
    Ok(r_moments_with(psi, basis, &table, m))
}

fn r_moments_with(psi: &[f64], basis: &BasisTable, table: &HopTable, m: usize) -> (f64, f64) {
    let rpsi = apply_r(psi, basis, table, m);
    let mean: Complex64 = rpsi.iter().zip(psi).map(|(r, &p)| r * p).sum();
    assert!(
        mean.im.abs() < IMAG_TOL,
        "<R> has imaginary part {}",
        mean.im
    );
    let second: f64 = rpsi.iter().map(|r| r.norm_sqr()).sum();
    (mean.re, second)
}

fn witness_with(
    psi: &[f64],
    basis: &BasisTable,
    table: &HopTable,
    g: &OneBodyMatrix,
    m: usize,
) -> WitnessReport {
    let l = basis.sites();
    let q = grid_q(m, l);
    let mean = g.fourier(q) / l as f64;
    assert!(
        mean.im.abs() < IMAG_TOL,
        "<R> has imaginary part {}",
        mean.im
    );
    let (_, second) = r_moments_with(psi, basis, table, m);
    let var_r = second - mean.re * mean.re;
    let dens: Vec<f64> = (0..l).map(|i| g.g[(i, i)].re).collect();
    let r_sep = separable_bound(l, basis.bosons(), &dens);
    WitnessReport {
        m,
        q,
        mean_r: mean.re,
        var_r,
        r_sep,
        lambda: var_r - r_sep,
    }
}

/// Witness at wavenumber `q`, which must lie on the grid 2πm/L.
pub fn witness(psi: &[f64], basis: &BasisTable, q: f64) -> Result<WitnessReport> {
    let m = grid_index(q, basis.sites())?;
    witness_mode(psi, basis, m)
}

/// Witness at grid index `m` (taken mod L).
pub fn witness_mode(psi: &[f64], basis: &BasisTable, m: usize) -> Result<WitnessReport> {
    check_len(psi, basis)?;
    let table = HopTable::new(basis);
    let g = one_body_with(psi, basis, &table);
    Ok(witness_with(psi, basis, &table, &g, m % basis.sites()))
}

/// Witness at every grid point, m = 0..L.
pub fn witness_all(psi: &[f64], basis: &BasisTable) -> Result<Vec<WitnessReport>> {
    check_len(psi, basis)?;
    let table = HopTable::new(basis);
    let g = one_body_with(psi, basis, &table);
    let modes: Vec<usize> = (0..basis.sites()).collect();
    Ok(par::map(&modes, |&m| {
        witness_with(psi, basis, &table, &g, m)
    }))
}

/// Grid point with the smallest λ; ties (within 1e-12) go to the smallest m.
pub fn witness_min_over_q(psi: &[f64], basis: &BasisTable) -> Result<WitnessReport> {
    let all = witness_all(psi, basis)?;
    let min = all.iter().map(|w| w.lambda).fold(f64::INFINITY, f64::min);
    Ok(all
        .into_iter()
        .find(|w| w.lambda <= min + LAMBDA_TIE)
        .expect("grid is non-empty"))
}

/// Witness evaluator that builds the hop table once and reuses it across many
/// states in the same sector.
pub struct WitnessKernel<'a> {
    basis: &'a BasisTable,
    table: HopTable,
}

impl<'a> WitnessKernel<'a> {
    pub fn new(basis: &'a BasisTable) -> Self {
        Self {
            basis,
            table: HopTable::new(basis),
        }
    }

    pub fn mode(&self, psi: &[f64], m: usize) -> Result<WitnessReport> {
        check_len(psi, self.basis)?;
        let g = one_body_with(psi, self.basis, &self.table);
        Ok(witness_with(
            psi,
            self.basis,
            &self.table,
            &g,
            m % self.basis.sites(),
        ))
    }

    /// (<R>, <R²>) for mode `m`, as in [`r_moments`].
    pub fn moments(&self, psi: &[f64], m: usize) -> Result<(f64, f64)> {
        check_len(psi, self.basis)?;
        Ok(r_moments_with(
            psi,
            self.basis,
            &self.table,
            m % self.basis.sites(),
        ))
    }
}

pub fn theta_lr(psi: &[f64], basis: &BasisTable) -> Result<ThetaLr> {
    check_len(psi, basis)?;
    if basis.sites() % 2 == 1 {
        return Err(Error::InvalidParams(format!(
            "order parameter needs an even number of sites, got L = {}",
            basis.sites()
        )));
    }
    if basis.bosons() == 0 {
        return Err(Error::InvalidParams(
            "order parameter undefined for N = 0".into(),
        ));
    }
    let (mut d1, mut d2) = (0.0, 0.0);
    for (s, &a) in basis.states().iter().zip(psi) {
        let d = imbalance(s.as_slice()) as f64;
        d1 += a * a * d;
        d2 += a * a * d * d;
    }
    let scale = 2.0 / basis.bosons() as f64;
    Ok(ThetaLr {
        signed: scale * d1,
        rms: scale * d2.sqrt(),
    })
}

/// Entropy of the first `cut` sites against the rest. The state is split into
/// blocks of fixed particle number in the left part; each block's singular
/// values contribute to the pooled Schmidt spectrum.
pub fn entanglement_entropy(psi: &[f64], basis: &BasisTable, cut: usize) -> Result<EntropyReport> {
    check_len(psi, basis)?;
    let l = basis.sites();
    let n = basis.bosons();
    if cut == 0 || cut >= l {
        return Err(Error::InvalidParams(format!(
            "cut must be within 1..={}, got {cut}",
            l - 1
        )));
    }
    let left: Vec<BasisTable> = (0..=n)
        .map(|na| enumerate_basis(cut, na))
        .collect::<Result<_>>()?;
    let right: Vec<BasisTable> = (0..=n)
        .map(|na| enumerate_basis(l - cut, n - na))
        .collect::<Result<_>>()?;
    let mut blocks: Vec<DMatrix<f64>> = (0..=n)
        .map(|na| DMatrix::zeros(left[na].dim(), right[na].dim()))
        .collect();
    for (s, &a) in basis.states().iter().zip(psi) {
        let occ = s.as_slice();
        let (la, lb) = occ.split_at(cut);
        let na: usize = la.iter().map(|&x| x as usize).sum();
        let r = left[na].rank_of(la).expect("left part is in its sector");
        let c = right[na].rank_of(lb).expect("right part is in its sector");
        blocks[na][(r, c)] = a;
    }
    let spectra = par::map(&blocks, |b| {
        if b.iter().all(|&x| x == 0.0) {
            return Vec::new();
        }
        b.clone()
            .singular_values()
            .iter()
            .map(|s| s * s)
            .filter(|&p| p > 0.0)
            .collect::<Vec<f64>>()
    });
    let mut schmidt: Vec<f64> = spectra.into_iter().flatten().collect();
    schmidt.sort_by(|a, b| b.total_cmp(a));
    let entropy = von_neumann(&schmidt);
    Ok(EntropyReport {
        cut,
        schmidt,
        entropy,
    })
}

/// -Σ p ln p over positive entries, clamped at zero.
pub fn von_neumann(probs: &[f64]) -> f64 {
    let s: f64 = probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.ln())
        .sum();
    s.max(0.0)
}

/// Σ_ij e^{ik(i-j)} <b†_i b_j>.
pub fn structure_factor(psi: &[f64], basis: &BasisTable, k: f64) -> Result<f64> {
    let g = one_body_matrix(psi, basis)?;
    let s = g.fourier(k);
    assert!(
        s.im.abs() < IMAG_TOL * basis.sites() as f64,
        "S(k) has imaginary part {}",
        s.im
    );
    Ok(s.re)
}

/// Δ(N) = N [E(N+1)/(N+1) + E(N-1)/(N-1) - 2E(N)/N] from three ground-state
/// solves with identical couplings.
pub fn energy_gap(params: &ModelParams, opts: &SolverOptions) -> Result<GapReport> {
    let n = params.bosons;
    if n < 2 {
        return Err(Error::InvalidParams(format!(
            "energy gap needs N >= 2, got N = {n}"
        )));
    }
    let opts = SolverOptions {
        detect_degeneracy: false,
        ..opts.clone()
    };
    let energy = |bosons: usize| -> Result<f64> {
        let (_, gs) = solve(&params.with_bosons(bosons), &opts)?;
        Ok(gs.energy)
    };
    let (e_minus, (e_zero, e_plus)) = par::join(
        || energy(n - 1),
        || par::join(|| energy(n), || energy(n + 1)),
    );
    let (e_minus, e_zero, e_plus) = (e_minus?, e_zero?, e_plus?);
    Ok(GapReport {
        e_minus,
        e_zero,
        e_plus,
        delta: gap_formula(n, e_minus, e_zero, e_plus),
    })
}

pub fn gap_formula(n: usize, e_minus: f64, e_zero: f64, e_plus: f64) -> f64 {
    let nf = n as f64;
    nf * (e_plus / (nf + 1.0) + e_minus / (nf - 1.0) - 2.0 * e_zero / nf)
}
