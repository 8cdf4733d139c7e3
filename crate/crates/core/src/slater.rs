//! Free-fermion dynamics on the logical chain.
//!
//! The single-particle Hamiltonian is the open nearest-neighbour hopping
//! matrix, diagonalised in closed form by sine orbitals. Slater states are
//! propagated in one shot through that spectral decomposition, so arbitrarily
//! long times cost the same as short ones.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::basis::LogicalConfig;
use crate::error::{Error, Result};
use crate::linalg::{self, LogDet};
use crate::observables::CorrelationMatrix;

/// Open-chain hopping matrix with unit off-diagonals, plus its eigenbasis.
#[derive(Clone, Debug)]
pub struct HoppingHamiltonian {
    size: usize,
    energies: Vec<f64>,
    /// Column `q` is the orbital of `energies[q]`; energies ascend.
    modes: DMatrix<f64>,
}

impl HoppingHamiltonian {
    pub fn new(size: usize) -> Self {
        assert!(size >= 1, "hopping chain needs at least one site");
        let denom = (size + 1) as f64;
        let norm = (2.0 / denom).sqrt();
        // q = size..1 gives ascending 2 cos(q pi / (size + 1))
        let qs: Vec<usize> = (1..=size).rev().collect();
        let energies = qs.iter().map(|&q| 2.0 * (q as f64 * PI / denom).cos()).collect();
        let modes = DMatrix::from_fn(size, size, |k, col| {
            let q = qs[col] as f64;
            norm * (q * (k + 1) as f64 * PI / denom).sin()
        });
        HoppingHamiltonian { size, energies, modes }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn modes(&self) -> &DMatrix<f64> {
        &self.modes
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.size, self.size, |i, j| if i.abs_diff(j) == 1 { 1.0 } else { 0.0 })
    }

    /// `exp(-i h t)` as a dense complex matrix.
    pub fn propagator(&self, t: f64) -> DMatrix<C64> {
        let n = self.size;
        let phases: Vec<C64> = self.energies.iter().map(|&e| C64::from_polar(1.0, -e * t)).collect();
        let mut out = DMatrix::<C64>::zeros(n, n);
        for col in 0..n {
            for row in 0..n {
                let mut acc = C64::new(0.0, 0.0);
                for q in 0..n {
                    acc += phases[q] * (self.modes[(row, q)] * self.modes[(col, q)]);
                }
                out[(row, col)] = acc;
            }
        }
        out
    }
}

pub fn build_hamiltonian(logical_len: usize) -> HoppingHamiltonian {
    HoppingHamiltonian::new(logical_len)
}

/// `N` occupied single-particle orbitals on `L_tau` sites at a given time.
/// Orbitals are stored row-major: `orbital(k, a)` is the amplitude of orbital
/// `a` on site `k`.
#[derive(Clone, Debug, PartialEq)]
pub struct SlaterState {
    rows: usize,
    cols: usize,
    orbitals: Vec<C64>,
    time: f64,
}

impl SlaterState {
    pub fn from_orbitals(orbitals: &DMatrix<C64>, time: f64) -> Self {
        let (rows, cols) = orbitals.shape();
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(orbitals[(r, c)]);
            }
        }
        SlaterState {
            rows,
            cols,
            orbitals: data,
            time,
        }
    }

    /// `L_tau`.
    pub fn sites(&self) -> usize {
        self.rows
    }

    /// `N`.
    pub fn particles(&self) -> usize {
        self.cols
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    #[inline]
    pub fn orbital(&self, site: usize, a: usize) -> C64 {
        self.orbitals[site * self.cols + a]
    }

    /// Row-major `L_tau x N` buffer.
    pub fn raw(&self) -> &[C64] {
        &self.orbitals
    }

    pub fn to_matrix(&self) -> DMatrix<C64> {
        DMatrix::from_fn(self.rows, self.cols, |r, c| self.orbital(r, c))
    }

    /// Copy with the site order reversed.
    pub fn reflected(&self) -> SlaterState {
        let mut data = Vec::with_capacity(self.orbitals.len());
        for r in (0..self.rows).rev() {
            data.extend_from_slice(&self.orbitals[r * self.cols..(r + 1) * self.cols]);
        }
        SlaterState {
            rows: self.rows,
            cols: self.cols,
            orbitals: data,
            time: self.time,
        }
    }

    /// Propagates by `dt`: orbitals <- exp(-i h dt) orbitals.
    pub fn evolve_with(&self, h: &HoppingHamiltonian, dt: f64) -> SlaterState {
        assert_eq!(h.size(), self.rows);
        if dt == 0.0 {
            return self.clone();
        }
        let v = h.modes();
        let n = self.rows;
        // coefficients in the eigenbasis, then phase, then back
        let mut coef = vec![C64::new(0.0, 0.0); n * self.cols];
        for q in 0..n {
            let phase = C64::from_polar(1.0, -h.energies()[q] * dt);
            for k in 0..n {
                let vk = v[(k, q)];
                if vk == 0.0 {
                    continue;
                }
                for a in 0..self.cols {
                    coef[q * self.cols + a] += self.orbitals[k * self.cols + a] * vk;
                }
            }
            for a in 0..self.cols {
                coef[q * self.cols + a] *= phase;
            }
        }
        let mut out = vec![C64::new(0.0, 0.0); n * self.cols];
        for k in 0..n {
            for q in 0..n {
                let vk = v[(k, q)];
                for a in 0..self.cols {
                    out[k * self.cols + a] += coef[q * self.cols + a] * vk;
                }
            }
        }
        SlaterState {
            rows: self.rows,
            cols: self.cols,
            orbitals: out,
            time: self.time + dt,
        }
    }

    pub fn evolve(&self, dt: f64) -> SlaterState {
        self.evolve_with(&HoppingHamiltonian::new(self.rows), dt)
    }

    /// Largest deviation of the orbital Gram matrix from the identity.
    pub fn orthonormality_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for a in 0..self.cols {
            for b in 0..self.cols {
                let g: C64 = (0..self.rows).map(|k| self.orbital(k, a).conj() * self.orbital(k, b)).sum();
                let e = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((g - C64::new(e, 0.0)).norm());
            }
        }
        worst
    }

    fn check_sector(&self, m: &LogicalConfig) -> Result<Vec<usize>> {
        if m.len() != self.rows {
            return Err(Error::InvalidArgument(format!(
                "configuration has {} sites, state has {}",
                m.len(),
                self.rows
            )));
        }
        let sites = m.sites();
        if sites.len() != self.cols {
            return Err(Error::SectorMismatch {
                expected: self.cols,
                found: sites.len(),
            });
        }
        Ok(sites)
    }

    /// Amplitude of `m` as a log-magnitude/phase pair.
    pub fn amplitude_log(&self, m: &LogicalConfig) -> Result<LogDet> {
        let sites = self.check_sector(m)?;
        Ok(self.amplitude_at(&sites))
    }

    /// Amplitude for sorted 0-based occupied sites; no validation.
    pub fn amplitude_at(&self, sites: &[usize]) -> LogDet {
        let cols: Vec<usize> = (0..self.cols).collect();
        let mut scratch = Vec::with_capacity(self.cols * self.cols);
        linalg::submatrix_logdet(&self.orbitals, self.cols, sites, &cols, &mut scratch)
    }

    pub fn amplitude(&self, m: &LogicalConfig) -> Result<C64> {
        Ok(self.amplitude_log(m)?.to_complex())
    }

    fn check_move(&self, m: &LogicalConfig, from: usize, to: usize) -> Result<Vec<usize>> {
        let sites = self.check_sector(m)?;
        if from >= self.rows || to >= self.rows {
            return Err(Error::InvalidArgument(format!("site out of range: {from} -> {to}")));
        }
        if !m.bits().get(from) {
            return Err(Error::InvalidArgument(format!("site {from} is empty")));
        }
        if from != to && m.bits().get(to) {
            return Err(Error::InvalidArgument(format!("site {to} is occupied")));
        }
        Ok(sites)
    }

    /// `amplitude(m') / amplitude(m)` where `m'` moves the particle on `from` to
    /// `to`, via one factorisation of the `m` submatrix and a row-replacement
    /// solve.
    pub fn amplitude_ratio(&self, m: &LogicalConfig, from: usize, to: usize) -> Result<C64> {
        let sites = self.check_move(m, from, to)?;
        if from == to {
            return Ok(C64::new(1.0, 0.0));
        }
        let n = self.cols;
        let mut a = Vec::with_capacity(n * n);
        for &s in &sites {
            a.extend_from_slice(&self.orbitals[s * n..(s + 1) * n]);
        }
        let det = linalg::lu_logdet(&mut a.clone(), n);
        if det.is_zero() || det.log_abs < DEGENERATE_LOG {
            return Err(Error::DegenerateAmplitude);
        }
        let inv = linalg::invert(&a, n).ok_or(Error::DegenerateAmplitude)?;
        let pos = sites.iter().position(|&s| s == from).expect("from is occupied");
        let row = &self.orbitals[to * n..(to + 1) * n];
        let mut ratio: C64 = (0..n).map(|c| row[c] * inv[c * n + pos]).sum();
        let (lo, hi) = if from < to { (from, to) } else { (to, from) };
        let between = sites.iter().filter(|&&s| s > lo && s < hi).count();
        if between % 2 == 1 {
            ratio = -ratio;
        }
        Ok(ratio)
    }

    /// Same quantity as [`amplitude_ratio`](Self::amplitude_ratio) from two
    /// independent determinant evaluations.
    pub fn amplitude_ratio_direct(&self, m: &LogicalConfig, from: usize, to: usize) -> Result<C64> {
        let sites = self.check_move(m, from, to)?;
        if from == to {
            return Ok(C64::new(1.0, 0.0));
        }
        let old = self.amplitude_at(&sites);
        if old.is_zero() || old.log_abs < DEGENERATE_LOG {
            return Err(Error::DegenerateAmplitude);
        }
        let mut moved: Vec<usize> = sites.iter().map(|&s| if s == from { to } else { s }).collect();
        moved.sort_unstable();
        Ok(self.amplitude_at(&moved).ratio(old))
    }

    /// `<f_k^dag f_k'>` for all pairs of logical sites.
    pub fn logical_correlation(&self) -> CorrelationMatrix {
        let n = self.rows;
        let mut m = DMatrix::<C64>::zeros(n, n);
        for k in 0..n {
            for kp in k..n {
                let v: C64 = (0..self.cols).map(|a| self.orbital(kp, a) * self.orbital(k, a).conj()).sum();
                m[(k, kp)] = v;
                m[(kp, k)] = v.conj();
            }
        }
        CorrelationMatrix::new(m)
    }

    pub fn to_snapshot(&self) -> SlaterSnapshot {
        SlaterSnapshot {
            logical_len: self.rows,
            particles: self.cols,
            time: self.time,
            orbitals: (0..self.rows)
                .map(|r| (0..self.cols).map(|c| {
                    let z = self.orbital(r, c);
                    [z.re, z.im]
                }).collect())
                .collect(),
        }
    }

    pub fn from_snapshot(s: &SlaterSnapshot) -> Result<Self> {
        if s.orbitals.len() != s.logical_len || s.orbitals.iter().any(|r| r.len() != s.particles) {
            return Err(Error::InvalidArgument("orbital array shape does not match L_tau x N".into()));
        }
        let orbitals = s
            .orbitals
            .iter()
            .flat_map(|r| r.iter().map(|p| C64::new(p[0], p[1])))
            .collect();
        Ok(SlaterState {
            rows: s.logical_len,
            cols: s.particles,
            orbitals,
            time: s.time,
        })
    }
}

/// Amplitudes below `1e-300` cannot serve as ratio denominators.
pub(crate) const DEGENERATE_LOG: f64 = -690.775_527_898_213_7;

/// JSON checkpoint of a Slater state; orbitals are `[re, im]` pairs indexed
/// `[site][orbital]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlaterSnapshot {
    #[serde(rename = "L_tau")]
    pub logical_len: usize,
    #[serde(rename = "N")]
    pub particles: usize,
    pub time: f64,
    pub orbitals: Vec<Vec<[f64; 2]>>,
}

/// Product state with unit-vector orbitals on the occupied sites of `m0`.
pub fn initial_slater(m0: &LogicalConfig) -> SlaterState {
    let rows = m0.len();
    let sites = m0.sites();
    let cols = sites.len();
    let mut orbitals = vec![C64::new(0.0, 0.0); rows * cols];
    for (a, &s) in sites.iter().enumerate() {
        orbitals[s * cols + a] = C64::new(1.0, 0.0);
    }
    SlaterState {
        rows,
        cols,
        orbitals,
        time: 0.0,
    }
}

pub fn evolve(s: &SlaterState, dt: f64) -> SlaterState {
    s.evolve(dt)
}

/// Filled lowest `N` hopping orbitals, ordered by ascending energy.
pub fn ground_state_slater(logical_len: usize, particles: usize) -> Result<SlaterState> {
    if particles > logical_len {
        return Err(Error::InvalidSector {
            sites: logical_len,
            particles,
        });
    }
    let h = HoppingHamiltonian::new(logical_len);
    let orbitals = h.modes().columns(0, particles).map(|x| C64::new(x, 0.0));
    Ok(SlaterState::from_orbitals(&orbitals, 0.0))
}

/// Uniformly random `N`-particle logical configuration.
pub fn random_product_config<R: Rng + ?Sized>(logical_len: usize, particles: usize, rng: &mut R) -> Result<LogicalConfig> {
    if particles > logical_len {
        return Err(Error::InvalidSector {
            sites: logical_len,
            particles,
        });
    }
    let mut sites: Vec<usize> = (0..logical_len).collect();
    for i in 0..particles {
        let j = rng.random_range(i..logical_len);
        sites.swap(i, j);
    }
    sites.truncate(particles);
    sites.sort_unstable();
    Ok(LogicalConfig::from_sites(logical_len, &sites))
}

/// Sum of the `N` lowest single-particle energies.
pub fn ground_energy(logical_len: usize, particles: usize) -> f64 {
    HoppingHamiltonian::new(logical_len).energies()[..particles].iter().sum()
}

/// Diagonal entries of a correlation matrix as a real vector.
pub fn densities(c: &CorrelationMatrix) -> DVector<f64> {
    DVector::from_fn(c.dim(), |i, _| c.entries()[(i, i)].re)
}
