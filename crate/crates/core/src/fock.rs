//! Particle-number-conserving bosonic Fock basis.
//!
//! Sites are 0-indexed throughout the crate. States are stored in strictly
//! increasing lexicographic order of their occupation tuples, so the rank of a
//! state is reproducible across platforms and runs.

use std::borrow::Borrow;
use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};

/// Default ceiling on the number of basis states.
pub const DEFAULT_MAX_DIM: usize = 5_000_000;

/// Per-site boson counts of one Fock state.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OccupationVector(Box<[u8]>);

impl OccupationVector {
    pub fn new(occupations: impl Into<Box<[u8]>>) -> Self {
        Self(occupations.into())
    }

    pub fn sites(&self) -> usize {
        self.0.len()
    }

    pub fn total(&self) -> usize {
        self.0.iter().map(|&n| n as usize).sum()
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.0
    }

    pub fn get(&self, site: usize) -> u8 {
        self.0[site]
    }
}

// Hash/Eq of the newtype agree with those of the inner slice.
impl Borrow<[u8]> for OccupationVector {
    fn borrow(&self) -> &[u8] {
        &self.0
    }
}

impl fmt::Debug for OccupationVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, n) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{n}")?;
        }
        write!(f, ")")
    }
}

impl From<Vec<u8>> for OccupationVector {
    fn from(v: Vec<u8>) -> Self {
        Self(v.into_boxed_slice())
    }
}

impl From<&[u8]> for OccupationVector {
    fn from(v: &[u8]) -> Self {
        Self(v.into())
    }
}

/// Number of ways to place `bosons` indistinguishable bosons on `sites` sites,
/// C(bosons + sites - 1, bosons). Saturates at `u128::MAX`.
pub fn sector_dimension(sites: usize, bosons: usize) -> u128 {
    if sites == 0 {
        return u128::from(bosons == 0);
    }
    let k = bosons.min(sites - 1) as u128;
    let n = (bosons + sites - 1) as u128;
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) / (i + 1) stays integral at every step
        acc = match acc.checked_mul(n - i) {
            Some(v) => v / (i + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// Ordered N-conserving basis with rank/unrank maps.
#[derive(Clone, Debug)]
pub struct BasisTable {
    sites: usize,
    bosons: usize,
    states: Vec<OccupationVector>,
    index: HashMap<OccupationVector, usize>,
}

impl BasisTable {
    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn bosons(&self) -> usize {
        self.bosons
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[OccupationVector] {
        &self.states
    }

    pub fn rank(&self, state: &OccupationVector) -> Result<usize> {
        self.index
            .get(state)
            .copied()
            .ok_or_else(|| Error::UnknownState(state.as_slice().to_vec()))
    }

    /// Lookup by raw occupations; `None` when the tuple is not in the table.
    pub fn rank_of(&self, occupations: &[u8]) -> Option<usize> {
        self.index.get(occupations).copied()
    }

    pub fn unrank(&self, index: usize) -> Result<&OccupationVector> {
        self.states.get(index).ok_or(Error::IndexOutOfRange {
            index,
            dim: self.states.len(),
        })
    }
}

/// Enumerates every occupation vector on `sites` sites with `bosons` in total,
/// using the default capacity ceiling.
pub fn enumerate_basis(sites: usize, bosons: usize) -> Result<BasisTable> {
    enumerate_basis_with_capacity(sites, bosons, DEFAULT_MAX_DIM)
}

pub fn enumerate_basis_with_capacity(
    sites: usize,
    bosons: usize,
    max_dim: usize,
) -> Result<BasisTable> {
    if sites == 0 {
        return Err(Error::InvalidParams(
            "lattice needs at least one site".into(),
        ));
    }
    if bosons > u8::MAX as usize {
        return Err(Error::InvalidParams(format!(
            "at most {} bosons supported, got {bosons}",
            u8::MAX
        )));
    }
    let dim = sector_dimension(sites, bosons);
    if dim > max_dim as u128 {
        return Err(Error::Capacity { dim, max: max_dim });
    }

    let mut states = Vec::with_capacity(dim as usize);
    let mut current = vec![0u8; sites];
    fill_lexicographic(&mut current, 0, bosons, &mut states);
    debug_assert_eq!(states.len() as u128, dim);

    let index = states
        .iter()
        .enumerate()
        .map(|(i, s)| (s.clone(), i))
        .collect();
    Ok(BasisTable {
        sites,
        bosons,
        states,
        index,
    })
}

fn fill_lexicographic(
    current: &mut [u8],
    site: usize,
    remaining: usize,
    out: &mut Vec<OccupationVector>,
) {
    if site + 1 == current.len() {
        current[site] = remaining as u8;
        out.push(OccupationVector::from(&*current));
        return;
    }
    for n in 0..=remaining {
        current[site] = n as u8;
        fill_lexicographic(current, site + 1, remaining - n, out);
    }
}

/// Applies b†_dest b_src to a Fock state. Returns `None` when `src` is empty.
pub fn apply_hop(
    state: &OccupationVector,
    dest: usize,
    src: usize,
) -> Option<(OccupationVector, f64)> {
    let mut occ = state.as_slice().to_vec();
    let amp = hop_in_place(&mut occ, dest, src)?;
    Some((OccupationVector::from(occ), amp))
}

/// In-place variant of [`apply_hop`] for hot loops. `occ` is left unchanged
/// when the hop annihilates the state.
pub fn hop_in_place(occ: &mut [u8], dest: usize, src: usize) -> Option<f64> {
    assert_ne!(dest, src, "hop requires distinct sites");
    let n_src = occ[src];
    if n_src == 0 {
        return None;
    }
    let n_dest = occ[dest];
    occ[src] = n_src - 1;
    occ[dest] = n_dest + 1;
    Some(((n_src as f64) * (n_dest as f64 + 1.0)).sqrt())
}
