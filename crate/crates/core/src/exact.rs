//! Dense exact diagonalization on fixed-`N` sectors: the constrained physical
//! chain, its unconstrained counterpart, and the thermal OTOC.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::basis::{
    enumerate_physical, physical_to_logical, sector_dimension, validate_sector, BitString, ConstrainedBasis, PhysicalConfig,
    binomial,
};
use crate::error::{Error, Result};
use crate::observables::CorrelationMatrix;
use crate::slater::{HoppingHamiltonian, SlaterState};

/// Default cap on dense sector dimensions.
pub const DEFAULT_DIM_CAP: usize = 20_000;

/// Nearest-neighbour hopping Hamiltonian on a fixed-`N` sector. The XX
/// couplings are real, so the matrix is stored as real symmetric.
#[derive(Clone, Debug)]
pub struct ManyBodyOperator {
    basis: ConstrainedBasis,
    matrix: DMatrix<f64>,
    constrained: bool,
}

impl ManyBodyOperator {
    pub fn basis(&self) -> &ConstrainedBasis {
        &self.basis
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Whether configurations with adjacent particles are excluded.
    pub fn is_constrained(&self) -> bool {
        self.constrained
    }

    pub fn hermiticity_error(&self) -> f64 {
        (&self.matrix - self.matrix.transpose()).amax()
    }
}

fn check_cap(dim: usize, cap: usize) -> Result<()> {
    if dim > cap {
        Err(Error::SectorTooLarge { dim, cap })
    } else {
        Ok(())
    }
}

pub fn build_physical_hamiltonian(sites: usize, particles: usize) -> Result<ManyBodyOperator> {
    build_physical_hamiltonian_capped(sites, particles, DEFAULT_DIM_CAP)
}

/// Constrained chain: `<n'|H|n> = 1` whenever `n'` follows from `n` by one
/// nearest-neighbour hop and both respect the constraint.
pub fn build_physical_hamiltonian_capped(sites: usize, particles: usize, cap: usize) -> Result<ManyBodyOperator> {
    validate_sector(sites, particles)?;
    check_cap(sector_dimension(sites, particles), cap)?;
    let basis = enumerate_physical(sites, particles)?;
    let matrix = hopping_matrix(&basis);
    Ok(ManyBodyOperator {
        basis,
        matrix,
        constrained: true,
    })
}

pub fn build_unconstrained_hamiltonian(sites: usize, particles: usize) -> Result<ManyBodyOperator> {
    build_unconstrained_hamiltonian_capped(sites, particles, DEFAULT_DIM_CAP)
}

/// XX chain on the full `N`-particle sector without the projector.
pub fn build_unconstrained_hamiltonian_capped(sites: usize, particles: usize, cap: usize) -> Result<ManyBodyOperator> {
    if particles > sites {
        return Err(Error::InvalidSector { sites, particles });
    }
    check_cap(binomial(sites, particles), cap)?;
    let basis = ConstrainedBasis::unconstrained(sites, particles)?;
    let matrix = hopping_matrix(&basis);
    Ok(ManyBodyOperator {
        basis,
        matrix,
        constrained: false,
    })
}

// Targets outside the basis (constraint violations) are dropped by the lookup.
fn hopping_matrix(basis: &ConstrainedBasis) -> DMatrix<f64> {
    let dim = basis.len();
    let len = basis.sites();
    let mut h = DMatrix::zeros(dim, dim);
    for (col, cfg) in basis.configs().iter().enumerate() {
        for j in cfg.ones() {
            for target in [j.wrapping_sub(1), j + 1] {
                if target >= len || cfg.get(target) {
                    continue;
                }
                let mut next = cfg.clone();
                next.set(j, false);
                next.set(target, true);
                if let Some(row) = basis.index_of(&next) {
                    h[(row, col)] = 1.0;
                }
            }
        }
    }
    h
}

/// Sorted sums of `N`-element subsets of the single-particle energies
/// `2 cos(q pi / (L_tau + 1))`.
pub fn logical_manybody_spectrum(logical_len: usize, particles: usize) -> Vec<f64> {
    if particles > logical_len {
        return Vec::new();
    }
    let h = HoppingHamiltonian::new(logical_len.max(1));
    let eps = if logical_len == 0 { &[][..] } else { h.energies() };
    let mut out = Vec::with_capacity(binomial(logical_len, particles));
    fn rec(eps: &[f64], start: usize, left: usize, acc: f64, out: &mut Vec<f64>) {
        if left == 0 {
            out.push(acc);
            return;
        }
        for i in start..=eps.len() - left {
            rec(eps, i + 1, left - 1, acc + eps[i], out);
        }
    }
    rec(eps, 0, particles, 0.0, &mut out);
    out.sort_by(f64::total_cmp);
    out
}

/// Outcome of comparing the constrained spectrum with logical subset sums.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct SpectrumCheck {
    #[serde(rename = "L")]
    pub sites: usize,
    #[serde(rename = "N")]
    pub particles: usize,
    pub dim: usize,
    pub max_deviation: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Diagonalizes the constrained Hamiltonian on `(L, N)` and compares its
/// sorted eigenvalues with the logical free-fermion spectrum.
pub fn spectrum_check(sites: usize, particles: usize, tolerance: f64) -> Result<SpectrumCheck> {
    let op = build_physical_hamiltonian(sites, particles)?;
    let mut ev: Vec<f64> = op.matrix.clone().symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    let want = logical_manybody_spectrum(crate::basis::logical_len(sites, particles), particles);
    let max_deviation = if ev.len() == want.len() {
        ev.iter().zip(&want).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    } else {
        f64::INFINITY
    };
    Ok(SpectrumCheck {
        sites,
        particles,
        dim: ev.len(),
        max_deviation,
        tolerance,
        passed: max_deviation <= tolerance,
    })
}

/// Eigendecomposition of a [`ManyBodyOperator`], computed once and reused for
/// every time.
#[derive(Clone, Debug)]
pub struct ExactEngine {
    basis: ConstrainedBasis,
    energies: DVector<f64>,
    vectors: DMatrix<f64>,
}

impl ExactEngine {
    pub fn new(op: &ManyBodyOperator) -> Self {
        let eig = SymmetricEigen::new(op.matrix.clone());
        let mut order: Vec<usize> = (0..op.dim()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let energies = DVector::from_iterator(order.len(), order.iter().map(|&i| eig.eigenvalues[i]));
        let vectors = DMatrix::from_fn(op.dim(), op.dim(), |r, c| eig.eigenvectors[(r, order[c])]);
        ExactEngine {
            basis: op.basis.clone(),
            energies,
            vectors,
        }
    }

    pub fn basis(&self) -> &ConstrainedBasis {
        &self.basis
    }

    /// Ascending many-body energies.
    pub fn energies(&self) -> &DVector<f64> {
        &self.energies
    }

    pub fn vectors(&self) -> &DMatrix<f64> {
        &self.vectors
    }

    /// `exp(-i H t) psi0`.
    pub fn evolve(&self, psi0: &DVector<C64>, t: f64) -> DVector<C64> {
        let dim = self.basis.len();
        assert_eq!(psi0.len(), dim, "state dimension does not match the basis");
        let mut coeffs = DVector::<C64>::zeros(dim);
        for a in 0..dim {
            let overlap: C64 = (0..dim).map(|n| psi0[n] * self.vectors[(n, a)]).sum();
            coeffs[a] = overlap * C64::from_polar(1.0, -self.energies[a] * t);
        }
        DVector::from_fn(dim, |n, _| (0..dim).map(|a| coeffs[a] * self.vectors[(n, a)]).sum())
    }
}

pub fn evolve_exact(h: &ManyBodyOperator, psi0: &DVector<C64>, t: f64) -> DVector<C64> {
    ExactEngine::new(h).evolve(psi0, t)
}

/// Basis vector of a single configuration.
pub fn basis_state(basis: &ConstrainedBasis, cfg: &BitString) -> Result<DVector<C64>> {
    let idx = basis
        .index_of(cfg)
        .ok_or_else(|| Error::ConstraintViolation(format!("{cfg} is not in the sector basis")))?;
    let mut v = DVector::zeros(basis.len());
    v[idx] = C64::new(1.0, 0.0);
    Ok(v)
}

/// Physical amplitudes `Psi(n) = det U[m(n)]` of a logical Slater state,
/// indexed by the constrained basis.
pub fn physical_state_from_slater(s: &SlaterState, basis: &ConstrainedBasis) -> Result<DVector<C64>> {
    let mut out = DVector::zeros(basis.len());
    for (i, cfg) in basis.configs().iter().enumerate() {
        let n = PhysicalConfig::new(cfg.clone())?;
        out[i] = s.amplitude(&physical_to_logical(&n))?;
    }
    Ok(out)
}

/// `<psi| c_j^dag c_j' |psi>` with the Jordan-Wigner string counted over sites
/// strictly between `j` and `j'`.
pub fn exact_correlation(basis: &ConstrainedBasis, psi: &DVector<C64>) -> CorrelationMatrix {
    let len = basis.sites();
    let mut c = DMatrix::<C64>::zeros(len, len);
    for (idx, cfg) in basis.configs().iter().enumerate() {
        let amp = psi[idx];
        if amp == C64::new(0.0, 0.0) {
            continue;
        }
        let occ = cfg.ones();
        for &jp in &occ {
            c[(jp, jp)] += amp.norm_sqr();
            for j in 0..len {
                if cfg.get(j) {
                    continue;
                }
                let mut next = cfg.clone();
                next.set(jp, false);
                next.set(j, true);
                let Some(target) = basis.index_of(&next) else { continue };
                let (lo, hi) = (j.min(jp), j.max(jp));
                let between = occ.iter().filter(|&&s| s > lo && s < hi).count();
                let sign = if between % 2 == 0 { 1.0 } else { -1.0 };
                c[(j, jp)] += psi[target].conj() * amp * sign;
            }
        }
    }
    CorrelationMatrix::new(c)
}

/// Correlations of `exp(-i H t) psi0`.
pub fn exact_correlation_at(engine: &ExactEngine, psi0: &DVector<C64>, t: f64) -> CorrelationMatrix {
    exact_correlation(&engine.basis, &engine.evolve(psi0, t)).with_time(t)
}

/// Thermal squared-commutator engine for `G_ij(t) =
/// <[Z_i(t), Z_j]^dag [Z_i(t), Z_j]>_beta` in the canonical fixed-`N` ensemble,
/// with `Z = 2 n - 1`.
///
/// Since `Z_i(t)^2 = 1`, `G = 2 - 2 Re Tr[rho Z_j Z_i(t) Z_j Z_i(t)] / Tr rho`.
/// Each time point costs six dense products: `Z_i(t)` in the occupation basis
/// (real and imaginary parts) and `Z_i(t) rho`. Every `j` then costs
/// `O(dim^2)`.
#[derive(Clone, Debug)]
pub struct OtocEngine {
    engine: ExactEngine,
    beta: f64,
    rho: DMatrix<f64>,
    trace: f64,
    rho_diag: Vec<f64>,
}

impl OtocEngine {
    pub fn new(op: &ManyBodyOperator, beta: f64) -> Result<Self> {
        if !(beta >= 0.0) || !beta.is_finite() {
            return Err(Error::InvalidArgument(format!("beta must be finite and non-negative, got {beta}")));
        }
        let engine = ExactEngine::new(op);
        let dim = op.dim();
        let e0 = if dim > 0 { engine.energies[0] } else { 0.0 };
        let weights: Vec<f64> = engine.energies.iter().map(|&e| (-beta * (e - e0)).exp()).collect();
        // rho = V diag(w) V^T in the occupation basis
        let mut scaled = engine.vectors.clone();
        for (c, w) in weights.iter().enumerate() {
            scaled.column_mut(c).scale_mut(*w);
        }
        let rho = &scaled * engine.vectors.transpose();
        let rho_diag: Vec<f64> = (0..dim).map(|n| rho[(n, n)]).collect();
        let trace = rho_diag.iter().sum();
        Ok(OtocEngine {
            engine,
            beta,
            rho,
            trace,
            rho_diag,
        })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn sites(&self) -> usize {
        self.engine.basis.sites()
    }

    pub fn dim(&self) -> usize {
        self.engine.basis.len()
    }

    fn z_values(&self, site: usize) -> Vec<f64> {
        self.engine
            .basis
            .configs()
            .iter()
            .map(|c| if c.get(site) { 1.0 } else { -1.0 })
            .collect()
    }

    /// `G_{i j}(t)` for every `j` in `js` (0-based sites).
    pub fn row(&self, i: usize, t: f64, js: &[usize]) -> Vec<f64> {
        let len = self.sites();
        assert!(i < len && js.iter().all(|&j| j < len), "site index out of range");
        let dim = self.dim();
        let zi = self.z_values(i);
        if t == 0.0 {
            // Z_i(0) is diagonal and commutes with Z_j
            let total: f64 = self.rho_diag.iter().sum();
            return js
                .iter()
                .map(|&j| {
                    let zj = self.z_values(j);
                    let f: f64 = (0..dim).map(|n| zj[n] * zi[n] * zj[n] * zi[n] * self.rho_diag[n]).sum();
                    2.0 - 2.0 * f / total
                })
                .collect();
        }
        let v = &self.engine.vectors;
        let e = &self.engine.energies;
        // A = V^T Z_i V in the eigenbasis
        let mut zv = v.clone();
        for (r, z) in zi.iter().enumerate() {
            zv.row_mut(r).scale_mut(*z);
        }
        let a = v.transpose() * zv;
        let mut re = DMatrix::<f64>::zeros(dim, dim);
        let mut im = DMatrix::<f64>::zeros(dim, dim);
        for col in 0..dim {
            for row in 0..dim {
                let phase = (e[row] - e[col]) * t;
                let x = a[(row, col)];
                re[(row, col)] = x * phase.cos();
                im[(row, col)] = x * phase.sin();
            }
        }
        let vt = v.transpose();
        let at_re = v * (re * &vt);
        let at_im = v * (im * &vt);
        let y_re = &at_re * &self.rho;
        let y_im = &at_im * &self.rho;
        js.iter()
            .map(|&j| {
                let zj = self.z_values(j);
                // F = sum_{n,m} z_n At_nm z_m Y_mn, real part only
                let mut f = 0.0;
                for n in 0..dim {
                    for m in 0..dim {
                        let w = zj[n] * zj[m];
                        f += w * (at_re[(n, m)] * y_re[(m, n)] - at_im[(n, m)] * y_im[(m, n)]);
                    }
                }
                2.0 - 2.0 * f / self.trace
            })
            .collect()
    }

    /// `G_{i j}(t)` on a time grid, one row per time in input order.
    pub fn grid(&self, i: usize, t_grid: &[f64], js: &[usize]) -> Vec<Vec<f64>> {
        t_grid.par_iter().map(|&t| self.row(i, t, js)).collect()
    }
}

fn otoc_with(op: ManyBodyOperator, j: usize, jp: usize, t_grid: &[f64], beta: f64) -> Result<Vec<f64>> {
    let len = op.basis.sites();
    if j >= len || jp >= len {
        return Err(Error::InvalidArgument(format!("sites ({j}, {jp}) outside a chain of {len}")));
    }
    let engine = OtocEngine::new(&op, beta)?;
    Ok(engine.grid(j, t_grid, &[jp]).into_iter().map(|r| r[0]).collect())
}

/// `G_{j j'}(t)` on the constrained chain; sites are 0-based.
pub fn otoc(sites: usize, particles: usize, j: usize, jp: usize, t_grid: &[f64], beta: f64) -> Result<Vec<f64>> {
    otoc_with(build_physical_hamiltonian(sites, particles)?, j, jp, t_grid, beta)
}

/// The same OTOC on the unconstrained XX chain.
pub fn free_fermion_otoc_reference(sites: usize, particles: usize, j: usize, jp: usize, t_grid: &[f64], beta: f64) -> Result<Vec<f64>> {
    otoc_with(build_unconstrained_hamiltonian(sites, particles)?, j, jp, t_grid, beta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{logical_to_physical, LogicalConfig};
    use crate::slater::initial_slater;

    #[test]
    fn three_site_sectors() {
        let h = build_physical_hamiltonian(3, 1).unwrap();
        let want = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0]);
        assert_eq!(h.matrix(), &want);
        let h = build_physical_hamiltonian(3, 2).unwrap();
        assert_eq!(h.dim(), 1);
        assert_eq!(h.matrix()[(0, 0)], 0.0);
    }

    #[test]
    fn sector_cap_is_enforced() {
        assert!(matches!(
            build_physical_hamiltonian_capped(20, 5, 100),
            Err(Error::SectorTooLarge { dim: 4368, cap: 100 })
        ));
        assert!(matches!(build_physical_hamiltonian(5, 4), Err(Error::InvalidSector { .. })));
    }

    #[test]
    fn small_logical_spectra() {
        let s = logical_manybody_spectrum(2, 1);
        assert!((s[0] + 1.0).abs() < 1e-15 && (s[1] - 1.0).abs() < 1e-15);
        let s = logical_manybody_spectrum(4, 2);
        assert_eq!(s.len(), 6);
        assert_eq!(logical_manybody_spectrum(3, 0), vec![0.0]);
    }

    #[test]
    fn unconstrained_chain_matches_subset_sums() {
        // JW equivalence on the unconstrained chain itself
        for l in 1..=8 {
            for n in 0..=l {
                let op = build_unconstrained_hamiltonian(l, n).unwrap();
                let eng = ExactEngine::new(&op);
                let want = logical_manybody_spectrum(l, n);
                for (a, b) in eng.energies().iter().zip(&want) {
                    assert!((a - b).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn spectrum_equivalence_l12_n4() {
        let op = build_physical_hamiltonian(12, 4).unwrap();
        assert!(op.hermiticity_error() == 0.0);
        let eng = ExactEngine::new(&op);
        let want = logical_manybody_spectrum(9, 4);
        assert_eq!(eng.energies().len(), want.len());
        for (a, b) in eng.energies().iter().zip(&want) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn evolution_preserves_norm() {
        let op = build_physical_hamiltonian(9, 3).unwrap();
        let eng = ExactEngine::new(&op);
        let psi0 = basis_state(op.basis(), &"010100100".parse().unwrap()).unwrap();
        assert!((eng.evolve(&psi0, 0.0) - &psi0).norm() < 1e-13);
        assert!((eng.evolve(&psi0, 1e3).norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn amplitude_equality_small() {
        let m0: LogicalConfig = "0110010".parse().unwrap();
        let n0 = logical_to_physical(&m0);
        let op = build_physical_hamiltonian(n0.len(), 3).unwrap();
        let eng = ExactEngine::new(&op);
        let psi0 = basis_state(op.basis(), n0.bits()).unwrap();
        for t in [0.0, 0.37, 2.5] {
            let exact = eng.evolve(&psi0, t);
            let slater = physical_state_from_slater(&initial_slater(&m0).evolve(t), op.basis()).unwrap();
            assert!((exact - slater).camax() < 1e-10);
        }
    }

    #[test]
    fn correlation_basics() {
        let op = build_physical_hamiltonian(10, 3).unwrap();
        let eng = ExactEngine::new(&op);
        let cfg: BitString = "1001000010".parse().unwrap();
        let psi0 = basis_state(op.basis(), &cfg).unwrap();
        let c0 = exact_correlation_at(&eng, &psi0, 0.0);
        for i in 0..10 {
            for j in 0..10 {
                let want = if i == j && cfg.get(i) { 1.0 } else { 0.0 };
                assert!((c0.entries()[(i, j)] - C64::new(want, 0.0)).norm() < 1e-14);
            }
        }
        let c = exact_correlation_at(&eng, &psi0, 1.7);
        assert!(c.hermiticity_error() < 1e-12);
        assert!((c.trace() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn otoc_vanishes_at_zero_time_and_is_nonnegative() {
        let op = build_physical_hamiltonian(9, 3).unwrap();
        let eng = OtocEngine::new(&op, 1.0).unwrap();
        let js: Vec<usize> = (0..9).collect();
        let rows = eng.grid(2, &[0.0, 0.5, 3.0, 20.0], &js);
        assert!(rows[0].iter().all(|&g| g == 0.0));
        for row in &rows {
            for &g in row {
                assert!(g >= -1e-12 && g <= 4.0 + 1e-12);
            }
        }
    }

    #[test]
    fn otoc_reflection_symmetry() {
        let l = 10;
        let op = build_physical_hamiltonian(l, 3).unwrap();
        let eng = OtocEngine::new(&op, 0.7).unwrap();
        let js: Vec<usize> = (0..l).collect();
        let mirrored: Vec<usize> = js.iter().map(|&j| l - 1 - j).collect();
        for &t in &[0.4, 1.3, 5.0] {
            let a = eng.row(2, t, &js);
            let b = eng.row(l - 1 - 2, t, &mirrored);
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn infinite_temperature_self_otoc() {
        // at beta = 0 the same-site OTOC is symmetric in i and j
        let op = build_physical_hamiltonian(8, 2).unwrap();
        let eng = OtocEngine::new(&op, 0.0).unwrap();
        let g13 = eng.row(1, 0.9, &[3])[0];
        let g31 = eng.row(3, 0.9, &[1])[0];
        assert!((g13 - g31).abs() < 1e-10);
    }

    #[test]
    fn rejects_negative_beta() {
        let op = build_physical_hamiltonian(5, 2).unwrap();
        assert!(OtocEngine::new(&op, -1.0).is_err());
    }

    // Gaussian-state evaluation: every factor is the second quantization of a
    // single-particle matrix, so the fixed-N trace follows from determinants
    // along a discrete Fourier projection onto particle number N.
    fn wick_otoc(l: usize, n: usize, i: usize, j: usize, t: f64, beta: f64) -> f64 {
        let h = HoppingHamiltonian::new(l);
        let u = h.propagator(t);
        let ud = u.adjoint();
        let thermal = DMatrix::from_fn(l, l, |r, c| {
            let mut acc = 0.0;
            for q in 0..l {
                acc += h.modes()[(r, q)] * h.modes()[(c, q)] * (-beta * h.energies()[q]).exp();
            }
            C64::new(acc, 0.0)
        });
        let parity = |s: usize| {
            DMatrix::<C64>::from_fn(l, l, |r, c| {
                if r != c {
                    C64::new(0.0, 0.0)
                } else if r == s {
                    C64::new(-1.0, 0.0)
                } else {
                    C64::new(1.0, 0.0)
                }
            })
        };
        let pi_t = &ud * parity(i) * &u;
        let pj = parity(j);
        let m = &thermal * &pj * &pi_t * &pj * &pi_t;
        let project = |m: &DMatrix<C64>| -> C64 {
            let mut acc = C64::new(0.0, 0.0);
            for s in 0..=l {
                let phi = 2.0 * std::f64::consts::PI * s as f64 / (l + 1) as f64;
                let z = C64::from_polar(1.0, phi);
                let det = (DMatrix::<C64>::identity(l, l) + m * z).determinant();
                acc += C64::from_polar(1.0, -phi * n as f64) * det;
            }
            acc / (l + 1) as f64
        };
        let num = project(&m);
        let den = project(&thermal);
        2.0 - 2.0 * (num / den).re
    }

    #[test]
    fn free_fermion_reference_matches_gaussian_evaluation() {
        let (l, n, beta) = (8, 3, 1.0);
        let ts = [0.0, 0.6, 1.5, 4.0];
        for (i, j) in [(2usize, 5usize), (3, 3), (0, 7)] {
            let got = free_fermion_otoc_reference(l, n, i, j, &ts, beta).unwrap();
            for (k, &t) in ts.iter().enumerate() {
                let want = wick_otoc(l, n, i, j, t, beta);
                assert!((got[k] - want).abs() < 1e-9, "i={i} j={j} t={t}: {} vs {want}", got[k]);
            }
        }
    }
}
