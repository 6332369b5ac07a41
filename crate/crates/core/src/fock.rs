//! Spin-orbital bases, Slater determinants and fermionic operator strings.
//!
//! A determinant is stored as an occupation bit-string. It stands for the
//! product of creators in ascending orbital order acting on the vacuum, so a
//! creator or annihilator acting on orbital `i` contributes a factor `-1` for
//! every occupied orbital with index below `i`.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use itertools::Itertools;
use smallvec::SmallVec;

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Spin {
    Up,
    Down,
}

/// Label of one basis function: a spatial orbital and a spin.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SpinOrbital {
    pub index: usize,
    pub spin: Spin,
}

/// Ordered list of spin-orbital labels.
///
/// The order fixes the sign convention of every operator string built on the
/// basis and never changes after construction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpinOrbitalBasis {
    orbitals: Vec<SpinOrbital>,
}

impl SpinOrbitalBasis {
    pub fn new(orbitals: Vec<SpinOrbital>) -> Result<Self> {
        if orbitals.is_empty() {
            return Err(Error::Incompatible("basis has no orbitals".into()));
        }
        if orbitals
            .iter()
            .enumerate()
            .any(|(i, o)| orbitals[..i].contains(o))
        {
            return Err(Error::Incompatible("basis labels are not unique".into()));
        }
        Ok(Self { orbitals })
    }

    /// All spin-up orbitals `0..n_spatial` followed by all spin-down ones.
    pub fn spin_blocked(n_spatial: usize) -> Self {
        let orbitals = [Spin::Up, Spin::Down]
            .into_iter()
            .flat_map(|spin| (0..n_spatial).map(move |index| SpinOrbital { index, spin }))
            .collect();
        Self { orbitals }
    }

    /// Spin-blocked basis when `k` is even, otherwise `k` spin-up orbitals.
    pub fn default_for(k: usize) -> Self {
        if k.is_multiple_of(2) {
            Self::spin_blocked(k / 2)
        } else {
            let orbitals = (0..k)
                .map(|index| SpinOrbital {
                    index,
                    spin: Spin::Up,
                })
                .collect();
            Self { orbitals }
        }
    }

    pub fn len(&self) -> usize {
        self.orbitals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.orbitals.is_empty()
    }

    pub fn orbitals(&self) -> &[SpinOrbital] {
        &self.orbitals
    }

    pub fn get(&self, i: usize) -> Option<SpinOrbital> {
        self.orbitals.get(i).copied()
    }

    /// Position of a label in the basis.
    pub fn position(&self, label: SpinOrbital) -> Option<usize> {
        self.orbitals.iter().position(|&o| o == label)
    }

    pub fn check_index(&self, i: usize) -> Result<()> {
        if i < self.len() {
            Ok(())
        } else {
            Err(Error::BasisMismatch {
                index: i,
                size: self.len(),
            })
        }
    }
}

type Words = SmallVec<[u64; 2]>;

/// Occupation bit-string over `K` spin orbitals.
///
/// Any `K` is supported; up to 128 orbitals the bits live inline.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SlaterDeterminant {
    words: Words,
    k: usize,
}

impl SlaterDeterminant {
    /// The empty determinant over `k` orbitals.
    pub fn vacuum(k: usize) -> Self {
        let mut words = Words::new();
        words.resize(k.div_ceil(64).max(1), 0);
        Self { words, k }
    }

    pub fn from_occupied(k: usize, occupied: &[usize]) -> Result<Self> {
        let mut det = Self::vacuum(k);
        for &i in occupied {
            if i >= k {
                return Err(Error::BasisMismatch { index: i, size: k });
            }
            if det.is_occupied(i) {
                return Err(Error::Incompatible(format!("orbital {i} listed twice")));
            }
            det.flip(i);
        }
        Ok(det)
    }

    /// Parses an occupation string such as `"11001100"`; character `i` is orbital `i`.
    pub fn parse(s: &str) -> Result<Self> {
        let k = s.chars().count();
        if k == 0 {
            return Err(Error::Parse("empty occupation string".into()));
        }
        let mut det = Self::vacuum(k);
        for (i, c) in s.chars().enumerate() {
            match c {
                '0' => {}
                '1' => det.flip(i),
                other => {
                    return Err(Error::Parse(format!(
                        "occupation string {s:?} contains {other:?} at position {i}"
                    )))
                }
            }
        }
        Ok(det)
    }

    /// Number of spin orbitals `K`.
    pub fn n_orbitals(&self) -> usize {
        self.k
    }

    /// Number of electrons `N`.
    pub fn n_electrons(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_occupied(&self, i: usize) -> bool {
        i < self.k && (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    /// Occupied orbital indices in ascending order.
    pub fn occupied(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.k).filter(move |&i| self.is_occupied(i))
    }

    /// Unoccupied orbital indices in ascending order.
    pub fn unoccupied(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.k).filter(move |&i| !self.is_occupied(i))
    }

    /// Number of occupied orbitals with index strictly below `i`.
    pub fn occupied_below(&self, i: usize) -> usize {
        let (w, b) = (i / 64, i % 64);
        let full: usize = self.words[..w.min(self.words.len())]
            .iter()
            .map(|x| x.count_ones() as usize)
            .sum();
        let partial = if w < self.words.len() && b > 0 {
            (self.words[w] & ((1u64 << b) - 1)).count_ones() as usize
        } else {
            0
        };
        full + partial
    }

    /// Number of orbitals occupied in both determinants.
    pub fn shared_occupation(&self, other: &Self) -> usize {
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones() as usize)
            .sum()
    }

    pub(crate) fn flip(&mut self, i: usize) {
        self.words[i / 64] ^= 1u64 << (i % 64);
    }

    /// Raw occupation words, orbital `i` at bit `i % 64` of word `i / 64`.
    pub fn words(&self) -> &[u64] {
        &self.words
    }
}

impl fmt::Display for SlaterDeterminant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: String = (0..self.k)
            .map(|i| if self.is_occupied(i) { '1' } else { '0' })
            .collect();
        f.write_str(&s)
    }
}

impl fmt::Debug for SlaterDeterminant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SlaterDeterminant({self})")
    }
}

impl core::str::FromStr for SlaterDeterminant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Action {
    Create,
    Annihilate,
}

/// Product of creation and annihilation operators, written left to right.
///
/// Application to a ket proceeds right to left.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct OperatorString {
    ops: Vec<(Action, usize)>,
}

impl OperatorString {
    pub fn new(ops: Vec<(Action, usize)>) -> Self {
        Self { ops }
    }

    /// `c†_{i1} … c†_{ir} c_{jr} … c_{j1}` for `creators = [i1, …, ir]` and
    /// `annihilators = [j1, …, jr]`.
    pub fn excitation(creators: &[usize], annihilators: &[usize]) -> Self {
        let ops = creators
            .iter()
            .map(|&i| (Action::Create, i))
            .chain(annihilators.iter().rev().map(|&j| (Action::Annihilate, j)))
            .collect();
        Self { ops }
    }

    pub fn ops(&self) -> &[(Action, usize)] {
        &self.ops
    }

    /// Hermitian conjugate: reversed order with every action swapped.
    pub fn adjoint(&self) -> Self {
        let ops = self
            .ops
            .iter()
            .rev()
            .map(|&(a, i)| {
                let a = match a {
                    Action::Create => Action::Annihilate,
                    Action::Annihilate => Action::Create,
                };
                (a, i)
            })
            .collect();
        Self { ops }
    }
}

/// Applies `op` to `det`.
///
/// Returns `Ok(None)` when the result vanishes, that is when a creator hits an
/// occupied orbital or an annihilator an empty one.
pub fn apply_operator_string(
    op: &OperatorString,
    det: &SlaterDeterminant,
) -> Result<Option<(i8, SlaterDeterminant)>> {
    let k = det.n_orbitals();
    if let Some(&(_, index)) = op.ops.iter().find(|&&(_, i)| i >= k) {
        return Err(Error::BasisMismatch { index, size: k });
    }
    let mut out = det.clone();
    let mut sign = 1i8;
    for &(action, i) in op.ops.iter().rev() {
        let occupied = out.is_occupied(i);
        if occupied == (action == Action::Create) {
            return Ok(None);
        }
        if out.occupied_below(i) % 2 == 1 {
            sign = -sign;
        }
        out.flip(i);
    }
    Ok(Some((sign, out)))
}

/// Occupation `f(ε)` of spin orbital `eps` in `det`.
pub fn distribution(det: &SlaterDeterminant, eps: usize) -> Result<u8> {
    if eps >= det.n_orbitals() {
        return Err(Error::BasisMismatch {
            index: eps,
            size: det.n_orbitals(),
        });
    }
    Ok(u8::from(det.is_occupied(eps)))
}

/// Number of single-particle transitions connecting two determinants,
/// `s = N - Σ_ε f_a(ε) f_b(ε)`.
pub fn coherence_order(a: &SlaterDeterminant, b: &SlaterDeterminant) -> Result<usize> {
    if a.n_orbitals() != b.n_orbitals() {
        return Err(Error::Incompatible(format!(
            "determinants over {} and {} orbitals",
            a.n_orbitals(),
            b.n_orbitals()
        )));
    }
    let n = a.n_electrons();
    if n != b.n_electrons() {
        return Err(Error::Incompatible(format!(
            "determinants with {} and {} electrons",
            n,
            b.n_electrons()
        )));
    }
    Ok(n - a.shared_occupation(b))
}

/// Every determinant with `n` electrons in `k` orbitals, in lexicographic
/// order of the occupied index lists.
pub fn all_determinants(k: usize, n: usize) -> Vec<SlaterDeterminant> {
    (0..k)
        .combinations(n)
        .map(|occ| SlaterDeterminant::from_occupied(k, &occ).expect("indices below k"))
        .collect()
}

/// Determinants of a spin-blocked basis with `n_spatial` orbitals per spin and
/// fixed numbers of up and down electrons, ordered by the up pattern first.
pub fn spin_sector_determinants(
    n_spatial: usize,
    n_up: usize,
    n_down: usize,
) -> Vec<SlaterDeterminant> {
    let ups: Vec<Vec<usize>> = (0..n_spatial).combinations(n_up).collect();
    let downs: Vec<Vec<usize>> = (0..n_spatial).combinations(n_down).collect();
    let mut out = Vec::with_capacity(ups.len() * downs.len());
    for u in &ups {
        for d in &downs {
            let occ: Vec<usize> = u
                .iter()
                .copied()
                .chain(d.iter().map(|&j| j + n_spatial))
                .collect();
            out.push(
                SlaterDeterminant::from_occupied(2 * n_spatial, &occ).expect("indices below k"),
            );
        }
    }
    out
}
