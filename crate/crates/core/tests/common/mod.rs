//! Reference computations that share no code with the library beyond the
//! basis ordering. Each one works from the defining formula using explicit
//! creation and annihilation operators or full dense matrices.

#![allow(dead_code)]

use std::collections::BTreeMap;

use ebh_core::BasisTable;
use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

/// Sparse many-body state keyed by occupation vector.
pub type Ket = BTreeMap<Vec<u8>, Complex64>;

pub fn ket_from(psi: &[f64], basis: &BasisTable) -> Ket {
    basis
        .states()
        .iter()
        .zip(psi)
        .filter(|(_, &a)| a != 0.0)
        .map(|(s, &a)| (s.as_slice().to_vec(), Complex64::new(a, 0.0)))
        .collect()
}

pub fn annihilate(ket: &Ket, site: usize) -> Ket {
    let mut out = Ket::new();
    for (occ, &a) in ket {
        if occ[site] == 0 {
            continue;
        }
        let mut next = occ.clone();
        let n = next[site] as f64;
        next[site] -= 1;
        *out.entry(next).or_default() += a * n.sqrt();
    }
    out
}

pub fn create(ket: &Ket, site: usize) -> Ket {
    let mut out = Ket::new();
    for (occ, &a) in ket {
        let mut next = occ.clone();
        next[site] += 1;
        let n = next[site] as f64;
        *out.entry(next).or_default() += a * n.sqrt();
    }
    out
}

pub fn add_scaled(acc: &mut Ket, ket: &Ket, c: Complex64) {
    for (occ, &a) in ket {
        *acc.entry(occ.clone()).or_default() += c * a;
    }
}

pub fn inner(bra: &Ket, ket: &Ket) -> Complex64 {
    bra.iter()
        .filter_map(|(occ, a)| ket.get(occ).map(|b| a.conj() * b))
        .sum()
}

/// R|ψ> with R = (1/L) Σ_ij e^{iq(i-j)} b†_i b_j, built operator by operator.
pub fn apply_r(ket: &Ket, sites: usize, q: f64) -> Ket {
    let mut out = Ket::new();
    for j in 0..sites {
        let lowered = annihilate(ket, j);
        for i in 0..sites {
            let phase = Complex64::from_polar(1.0 / sites as f64, q * (i as f64 - j as f64));
            add_scaled(&mut out, &create(&lowered, i), phase);
        }
    }
    out
}

/// (<R>, <R R>) by applying R twice; the four-index correlator
/// <b†_i b_j b†_k b_l> is never factorized.
pub fn r_moments(psi: &[f64], basis: &BasisTable, q: f64) -> (Complex64, Complex64) {
    let ket = ket_from(psi, basis);
    let r1 = apply_r(&ket, basis.sites(), q);
    let r2 = apply_r(&r1, basis.sites(), q);
    (inner(&ket, &r1), inner(&ket, &r2))
}

pub fn var_r(psi: &[f64], basis: &BasisTable, q: f64) -> f64 {
    let (m1, m2) = r_moments(psi, basis, q);
    m2.re - m1.re * m1.re
}

/// <n_j> from <ψ| b†_j b_j |ψ>.
pub fn densities(psi: &[f64], basis: &BasisTable) -> Vec<f64> {
    let ket = ket_from(psi, basis);
    (0..basis.sites())
        .map(|j| inner(&ket, &create(&annihilate(&ket, j), j)).re)
        .collect()
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Free-boson ground state (1/sqrt(N!)) (b†_{k=0})^N |0>, written out in the
/// Fock basis: amplitude sqrt(N!/Π n_j!) L^{-N/2}.
pub fn superfluid_state(basis: &BasisTable) -> Vec<f64> {
    let l = basis.sites() as f64;
    let n = basis.bosons();
    basis
        .states()
        .iter()
        .map(|s| {
            let denom: f64 = s
                .as_slice()
                .iter()
                .map(|&k| factorial(k as usize))
                .product();
            (factorial(n) / denom).sqrt() * l.powf(-(n as f64) / 2.0)
        })
        .collect()
}

/// Entanglement entropy of sites [0, cut) from the full reduced density
/// matrix ρ_A = Tr_B |ψ><ψ|, diagonalized densely.
pub fn entropy(psi: &[f64], basis: &BasisTable, cut: usize) -> f64 {
    let mut left: BTreeMap<Vec<u8>, usize> = BTreeMap::new();
    let mut right: BTreeMap<Vec<u8>, usize> = BTreeMap::new();
    for s in basis.states() {
        let (a, b) = s.as_slice().split_at(cut);
        let n = left.len();
        left.entry(a.to_vec()).or_insert(n);
        let n = right.len();
        right.entry(b.to_vec()).or_insert(n);
    }
    let mut m = DMatrix::<f64>::zeros(left.len(), right.len());
    for (s, &amp) in basis.states().iter().zip(psi) {
        let (a, b) = s.as_slice().split_at(cut);
        m[(left[a], right[b])] = amp;
    }
    let rho = &m * m.transpose();
    SymmetricEigen::new(rho)
        .eigenvalues
        .iter()
        .filter(|&&p| p > 1e-300)
        .map(|&p| -p * p.ln())
        .sum()
}

/// Lowest eigenvalue of a dense symmetric matrix.
pub fn lowest_eigenvalue(m: DMatrix<f64>) -> f64 {
    SymmetricEigen::new(m)
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Dense Hamiltonian from second-quantized operators acting on basis kets:
/// -J Σ_bonds (b†_i b_j + h.c.) + U/2 Σ n(n-1) - (U_LR/N) D² + pin D, with
/// D = Σ_j (-1)^{j+1} n_j.
pub fn hamiltonian_dense(params: &ebh_core::ModelParams, basis: &BasisTable) -> DMatrix<f64> {
    let l = basis.sites();
    let dim = basis.dim();
    let j_total = params.hopping + params.j_epsilon;
    let mut bonds: Vec<(usize, usize)> = (0..l.saturating_sub(1)).map(|i| (i, i + 1)).collect();
    if params.boundary == ebh_core::Boundary::Periodic && l > 2 {
        bonds.push((l - 1, 0));
    }
    let mut h = DMatrix::<f64>::zeros(dim, dim);
    for (col, s) in basis.states().iter().enumerate() {
        let mut ket = Ket::new();
        ket.insert(s.as_slice().to_vec(), Complex64::new(1.0, 0.0));
        let mut out = Ket::new();
        for &(a, b) in &bonds {
            add_scaled(
                &mut out,
                &create(&annihilate(&ket, b), a),
                Complex64::new(-j_total, 0.0),
            );
            add_scaled(
                &mut out,
                &create(&annihilate(&ket, a), b),
                Complex64::new(-j_total, 0.0),
            );
        }
        let number = |site: usize| create(&annihilate(&ket, site), site);
        let mut d = Ket::new();
        for site in 0..l {
            let n_ket = number(site);
            let n_n1 = create(&annihilate(&n_ket, site), site);
            add_scaled(&mut out, &n_n1, Complex64::new(params.onsite / 2.0, 0.0));
            add_scaled(&mut out, &n_ket, Complex64::new(-params.onsite / 2.0, 0.0));
            let sign = if site % 2 == 0 { -1.0 } else { 1.0 };
            add_scaled(&mut d, &n_ket, Complex64::new(sign, 0.0));
        }
        // D is diagonal, so <s|D²|s> = <s|D|s>²
        let dval = d.values().next().map_or(0.0, |c| c.re);
        let n = params.bosons.max(1) as f64;
        let diag = -params.long_range / n * dval * dval + params.pin_epsilon * dval;
        add_scaled(&mut out, &ket, Complex64::new(diag, 0.0));
        for (occ, amp) in out {
            let row = basis.rank_of(&occ).expect("operators conserve N");
            h[(row, col)] += amp.re;
        }
    }
    h
}
