//! Occupation bitstrings and the logical/physical basis bijection.
//!
//! A logical string on `L_tau` sites maps to a physical string on
//! `L = L_tau + N - 1` sites by substituting `0 -> 0`, `1 -> 01` and dropping the
//! leftmost character (always a `0`). The image is exactly the set of physical
//! strings with no two adjacent occupied sites. In particle coordinates the map
//! is `k_i = j_i - i + 1` for the `i`-th particle (1-based).

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const WORD: usize = 64;

/// Bit-packed occupation string. Site 1 is the least significant bit of the
/// first word; the textual form prints site 1 first.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitString {
    len: usize,
    words: Vec<u64>,
}

impl BitString {
    pub fn zeros(len: usize) -> Self {
        BitString {
            len,
            words: vec![0; len.div_ceil(WORD)],
        }
    }

    /// Builds a string of length `len` with the given 0-based occupied sites.
    pub fn from_sites(len: usize, sites: &[usize]) -> Self {
        let mut b = BitString::zeros(len);
        for &s in sites {
            assert!(s < len, "site {s} out of range for length {len}");
            b.set(s, true);
        }
        b
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Occupation of 0-based site `i`.
    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        (self.words[i / WORD] >> (i % WORD)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        debug_assert!(i < self.len);
        let mask = 1u64 << (i % WORD);
        if value {
            self.words[i / WORD] |= mask;
        } else {
            self.words[i / WORD] &= !mask;
        }
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// 0-based occupied sites in ascending order.
    pub fn ones(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.count_ones());
        for (wi, &w) in self.words.iter().enumerate() {
            let mut w = w;
            while w != 0 {
                let b = w.trailing_zeros() as usize;
                out.push(wi * WORD + b);
                w &= w - 1;
            }
        }
        out
    }

    /// True iff two neighbouring sites are both occupied.
    pub fn has_adjacent_pair(&self) -> bool {
        let mut carry = 0u64;
        for &w in &self.words {
            if w & (w >> 1) != 0 || w & carry != 0 {
                return true;
            }
            carry = w >> (WORD - 1);
        }
        false
    }

    /// Site-reversed copy.
    pub fn reversed(&self) -> Self {
        let sites: Vec<usize> = self.ones().into_iter().map(|s| self.len - 1 - s).collect();
        BitString::from_sites(self.len, &sites)
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len {
            f.write_str(if self.get(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitString({self})")
    }
}

impl FromStr for BitString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut b = BitString::zeros(s.len());
        for (i, c) in s.bytes().enumerate() {
            match c {
                b'0' => {}
                b'1' => b.set(i, true),
                _ => return Err(Error::InvalidBitstring(s.to_string())),
            }
        }
        Ok(b)
    }
}

impl Serialize for BitString {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for BitString {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Occupations of the logical (free-fermion) chain.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LogicalConfig(BitString);

impl LogicalConfig {
    pub fn new(bits: BitString) -> Self {
        LogicalConfig(bits)
    }

    pub fn from_sites(len: usize, sites: &[usize]) -> Self {
        LogicalConfig(BitString::from_sites(len, sites))
    }

    pub fn bits(&self) -> &BitString {
        &self.0
    }

    /// `L_tau`.
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `N`.
    pub fn particles(&self) -> usize {
        self.0.count_ones()
    }

    pub fn sites(&self) -> Vec<usize> {
        self.0.ones()
    }
}

impl fmt::Display for LogicalConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl fmt::Debug for LogicalConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LogicalConfig({})", self.0)
    }
}

impl FromStr for LogicalConfig {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(LogicalConfig(s.parse()?))
    }
}

/// Occupations of the physical chain; never contains two adjacent particles.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(transparent)]
pub struct PhysicalConfig(BitString);

impl PhysicalConfig {
    pub fn new(bits: BitString) -> Result<Self> {
        if bits.has_adjacent_pair() {
            return Err(Error::ConstraintViolation(bits.to_string()));
        }
        Ok(PhysicalConfig(bits))
    }

    pub fn from_sites(len: usize, sites: &[usize]) -> Result<Self> {
        PhysicalConfig::new(BitString::from_sites(len, sites))
    }

    pub fn bits(&self) -> &BitString {
        &self.0
    }

    /// `L`.
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn particles(&self) -> usize {
        self.0.count_ones()
    }

    pub fn sites(&self) -> Vec<usize> {
        self.0.ones()
    }
}

impl<'de> Deserialize<'de> for PhysicalConfig {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let bits = BitString::deserialize(d)?;
        PhysicalConfig::new(bits).map_err(serde::de::Error::custom)
    }
}

impl fmt::Display for PhysicalConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl fmt::Debug for PhysicalConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PhysicalConfig({})", self.0)
    }
}

impl FromStr for PhysicalConfig {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        PhysicalConfig::new(s.parse()?)
    }
}

/// True iff the raw string has no `11` substring.
pub fn check_constraint(bits: &BitString) -> bool {
    !bits.has_adjacent_pair()
}

/// Physical chain length for a logical chain of `logical_len` sites holding
/// `particles` fermions.
pub fn physical_len(logical_len: usize, particles: usize) -> usize {
    (logical_len + particles).saturating_sub(1)
}

/// Logical chain length `L + 1 - N`.
pub fn logical_len(physical_len: usize, particles: usize) -> usize {
    physical_len + 1 - particles
}

pub fn logical_to_physical(m: &LogicalConfig) -> PhysicalConfig {
    let n = m.particles();
    let len = physical_len(m.len(), n);
    let sites: Vec<usize> = m.sites().into_iter().enumerate().map(|(i, k)| k + i).collect();
    PhysicalConfig(BitString::from_sites(len, &sites))
}

pub fn physical_to_logical(n: &PhysicalConfig) -> LogicalConfig {
    let count = n.particles();
    let len = logical_len(n.len(), count);
    let sites: Vec<usize> = n.sites().into_iter().enumerate().map(|(i, j)| j - i).collect();
    LogicalConfig(BitString::from_sites(len, &sites))
}

/// Validating decode from a raw string.
pub fn decode(bits: &BitString) -> Result<LogicalConfig> {
    Ok(physical_to_logical(&PhysicalConfig::new(bits.clone())?))
}

/// Logical particle positions (1-based) for a physical string: `k_i = j_i - i + 1`.
pub fn particle_coordinates(bits: &BitString) -> Result<Vec<usize>> {
    if bits.has_adjacent_pair() {
        return Err(Error::ConstraintViolation(bits.to_string()));
    }
    Ok(bits
        .ones()
        .into_iter()
        .enumerate()
        .map(|(i, j)| (j + 1) - i)
        .collect())
}

pub fn validate_sector(sites: usize, particles: usize) -> Result<()> {
    if particles > sites.div_ceil(2) || (sites == 0 && particles > 0) {
        return Err(Error::InvalidSector { sites, particles });
    }
    Ok(())
}

/// Number of constrained configurations, `C(L + 1 - N, N)`.
pub fn sector_dimension(sites: usize, particles: usize) -> usize {
    if particles > sites.div_ceil(2) {
        return 0;
    }
    binomial(sites + 1 - particles, particles)
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as usize
}

/// Lexicographically ordered constrained configurations of a fixed sector,
/// with an index for reverse lookup.
#[derive(Clone, Debug)]
pub struct ConstrainedBasis {
    sites: usize,
    particles: usize,
    configs: Vec<BitString>,
    index: HashMap<BitString, usize>,
}

impl ConstrainedBasis {
    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn particles(&self) -> usize {
        self.particles
    }

    pub fn len(&self) -> usize {
        self.configs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.configs.is_empty()
    }

    pub fn configs(&self) -> &[BitString] {
        &self.configs
    }

    pub fn get(&self, i: usize) -> &BitString {
        &self.configs[i]
    }

    pub fn index_of(&self, bits: &BitString) -> Option<usize> {
        self.index.get(bits).copied()
    }

    fn from_configs(sites: usize, particles: usize, configs: Vec<BitString>) -> Self {
        let index = configs.iter().enumerate().map(|(i, c)| (c.clone(), i)).collect();
        ConstrainedBasis {
            sites,
            particles,
            configs,
            index,
        }
    }

    /// All `N`-particle strings on `L` sites, constrained or not, in the same
    /// lexicographic order. Used for the unconstrained reference chain.
    pub fn unconstrained(sites: usize, particles: usize) -> Result<Self> {
        if particles > sites {
            return Err(Error::InvalidSector { sites, particles });
        }
        let mut configs = Vec::with_capacity(binomial(sites, particles));
        let mut cur = BitString::zeros(sites);
        fill_lex(&mut cur, 0, particles, false, &mut configs);
        Ok(Self::from_configs(sites, particles, configs))
    }
}

// Emits strings in lexicographic order, '0' before '1' at every site.
fn fill_lex(cur: &mut BitString, pos: usize, left: usize, constrained: bool, out: &mut Vec<BitString>) {
    let len = cur.len();
    if left == 0 {
        out.push(cur.clone());
        return;
    }
    if pos >= len {
        return;
    }
    // a '0' at pos must leave room for the remaining particles
    let room = |p: usize| -> usize {
        if p >= len {
            0
        } else if constrained {
            (len - p).div_ceil(2)
        } else {
            len - p
        }
    };
    if room(pos + 1) >= left {
        fill_lex(cur, pos + 1, left, constrained, out);
    }
    cur.set(pos, true);
    let next = if constrained { pos + 2 } else { pos + 1 };
    if left == 1 || room(next) >= left - 1 {
        fill_lex(cur, next, left - 1, constrained, out);
    }
    cur.set(pos, false);
}

pub fn enumerate_physical(sites: usize, particles: usize) -> Result<ConstrainedBasis> {
    validate_sector(sites, particles)?;
    let mut configs = Vec::with_capacity(sector_dimension(sites, particles));
    let mut cur = BitString::zeros(sites);
    fill_lex(&mut cur, 0, particles, true, &mut configs);
    Ok(ConstrainedBasis::from_configs(sites, particles, configs))
}

/// All `N`-particle logical configurations on `L_tau` sites in lexicographic order.
pub fn enumerate_logical(logical_len: usize, particles: usize) -> Result<Vec<LogicalConfig>> {
    Ok(ConstrainedBasis::unconstrained(logical_len, particles)?
        .configs
        .into_iter()
        .map(LogicalConfig)
        .collect())
}
