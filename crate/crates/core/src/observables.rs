//! Physical-basis observables: one-body correlations, natural orbitals and the
//! scrambling diagnostics built from them.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;

use crate::basis::{logical_to_physical, physical_len};
use crate::error::{Error, Result};
use crate::estimator::{self, Workspace};
use crate::sampler::{with_threads, SampleBatch};
use crate::slater::SlaterState;

/// Jackknife block count for correlation estimates.
pub const JACKKNIFE_BLOCKS: usize = 20;

/// Abort when more than this fraction of samples has a degenerate amplitude.
pub const MAX_SKIPPED_FRACTION: f64 = 1e-3;

/// Hermitian one-body correlation matrix `<c_j^dag c_j'>`, optionally with
/// per-entry standard errors.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationMatrix {
    entries: DMatrix<C64>,
    stderr: Option<DMatrix<f64>>,
    time: f64,
}

impl CorrelationMatrix {
    pub fn new(entries: DMatrix<C64>) -> Self {
        assert!(entries.is_square());
        CorrelationMatrix {
            entries,
            stderr: None,
            time: 0.0,
        }
    }

    pub fn with_stderr(mut self, stderr: DMatrix<f64>) -> Self {
        self.stderr = Some(stderr);
        self
    }

    pub fn with_time(mut self, time: f64) -> Self {
        self.time = time;
        self
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<C64> {
        &self.entries
    }

    pub fn stderr(&self) -> Option<&DMatrix<f64>> {
        self.stderr.as_ref()
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.entries[(i, i)].re).sum()
    }

    /// Replaces the entries by `(C + C^dag) / 2`.
    pub fn symmetrize(&mut self) {
        self.entries = hermitian_part(&self.entries);
    }

    pub fn hermiticity_error(&self) -> f64 {
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                worst = worst.max((self.entries[(i, j)] - self.entries[(j, i)].conj()).norm());
            }
        }
        worst
    }
}

fn hermitian_part(m: &DMatrix<C64>) -> DMatrix<C64> {
    (m + m.adjoint()) * C64::new(0.5, 0.0)
}

/// Eigen-decomposition of a correlation matrix with occupations sorted in
/// descending order and clipped to `[0, 1]`.
#[derive(Clone, Debug)]
pub struct NaturalOrbitalSpectrum {
    pub lambdas: Vec<f64>,
    /// Column `l` is the natural orbital with occupation `lambdas[l]`.
    pub vectors: DMatrix<C64>,
    pub time: f64,
    /// Total magnitude removed by clipping.
    pub clipped_mass: f64,
}

impl NaturalOrbitalSpectrum {
    pub fn sum(&self) -> f64 {
        self.lambdas.iter().sum()
    }
}

/// Hamming distance `D`, overlap `chi` and relaxation overlap `Z`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ScramblingDiagnostics {
    pub d: f64,
    pub chi: f64,
    pub z: f64,
}

pub fn natural_orbitals(corr: &CorrelationMatrix) -> NaturalOrbitalSpectrum {
    let eig = SymmetricEigen::new(hermitian_part(corr.entries()));
    let mut order: Vec<usize> = (0..corr.dim()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let mut clipped_mass = 0.0;
    let lambdas = order
        .iter()
        .map(|&i| {
            let raw = eig.eigenvalues[i];
            let c = raw.clamp(0.0, 1.0);
            clipped_mass += (raw - c).abs();
            c
        })
        .collect();
    let vectors = DMatrix::from_fn(corr.dim(), corr.dim(), |r, c| eig.eigenvectors[(r, order[c])]);
    NaturalOrbitalSpectrum {
        lambdas,
        vectors,
        time: corr.time(),
        clipped_mass,
    }
}

/// `chi = (1/N) sum_{l <= N} lambda_l`.
pub fn overlap_chi(spec: &NaturalOrbitalSpectrum, particles: usize) -> f64 {
    if particles == 0 {
        return 1.0;
    }
    spec.lambdas.iter().take(particles).sum::<f64>() / particles as f64
}

/// `D = 2 N (1 - chi)`.
pub fn hamming_distance(spec: &NaturalOrbitalSpectrum, particles: usize) -> f64 {
    let top: f64 = spec.lambdas.iter().take(particles).sum();
    2.0 * (particles as f64 - top)
}

/// `Z = (1/N) sum_l sqrt(lambda_l(t) lambda_l(inf))`.
pub fn relaxation_z(spec_t: &NaturalOrbitalSpectrum, spec_inf: &NaturalOrbitalSpectrum, particles: usize) -> f64 {
    assert_eq!(spec_t.lambdas.len(), spec_inf.lambdas.len(), "spectra must have equal dimension");
    spec_t
        .lambdas
        .iter()
        .zip(&spec_inf.lambdas)
        .map(|(a, b)| (a * b).sqrt())
        .sum::<f64>()
        / particles as f64
}

/// Averages occupations of several late-time spectra, entry by entry in sorted
/// order, to form a lower-noise long-time reference.
pub fn average_spectra(spectra: &[NaturalOrbitalSpectrum]) -> NaturalOrbitalSpectrum {
    assert!(!spectra.is_empty());
    let dim = spectra[0].lambdas.len();
    let mut lambdas = vec![0.0; dim];
    for s in spectra {
        for (acc, l) in lambdas.iter_mut().zip(&s.lambdas) {
            *acc += l / spectra.len() as f64;
        }
    }
    NaturalOrbitalSpectrum {
        lambdas,
        vectors: spectra[0].vectors.clone(),
        time: spectra.last().map(|s| s.time).unwrap_or_default(),
        clipped_mass: spectra.iter().map(|s| s.clipped_mass).sum::<f64>() / spectra.len() as f64,
    }
}

pub fn diagnostics(spec_t: &NaturalOrbitalSpectrum, spec_inf: &NaturalOrbitalSpectrum, particles: usize) -> ScramblingDiagnostics {
    ScramblingDiagnostics {
        d: hamming_distance(spec_t, particles),
        chi: overlap_chi(spec_t, particles),
        z: relaxation_z(spec_t, spec_inf, particles),
    }
}

/// Physical site densities with standard errors of the mean.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityEstimate {
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
}

pub fn density_estimate(batch: &SampleBatch) -> Result<DensityEstimate> {
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let len = physical_len(batch.logical_len, batch.particles);
    let mut counts = vec![0usize; len];
    for m in &batch.configs {
        for j in logical_to_physical(m).sites() {
            counts[j] += 1;
        }
    }
    let total = batch.len() as f64;
    let mean: Vec<f64> = counts.iter().map(|&c| c as f64 / total).collect();
    let stderr = mean
        .iter()
        .map(|&p| {
            if batch.len() > 1 {
                (p * (1.0 - p) / (total - 1.0)).sqrt()
            } else {
                0.0
            }
        })
        .collect();
    Ok(DensityEstimate { mean, stderr })
}

/// Estimated physical correlation matrix plus bookkeeping.
#[derive(Clone, Debug)]
pub struct CorrelationEstimate {
    pub matrix: CorrelationMatrix,
    /// Samples whose amplitude was too small to use as a ratio denominator.
    pub skipped: usize,
    pub samples: usize,
    /// Leave-one-block-out estimates in block order, for jackknifing derived
    /// quantities. Empty when fewer than two blocks exist.
    pub leave_out: Vec<CorrelationMatrix>,
}

impl CorrelationEstimate {
    /// Jackknife mean and standard error of a scalar function of the
    /// correlation matrix. Falls back to the full estimate with zero error
    /// when no blocks are available.
    pub fn jackknife<F: Fn(&CorrelationMatrix) -> f64>(&self, f: F) -> (f64, f64) {
        let full = f(&self.matrix);
        let nb = self.leave_out.len();
        if nb < 2 {
            return (full, 0.0);
        }
        let values: Vec<f64> = self.leave_out.iter().map(&f).collect();
        let mean = values.iter().sum::<f64>() / nb as f64;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() * (nb as f64 - 1.0) / nb as f64;
        (full, var.sqrt())
    }
}

pub fn correlation_estimate(s: &SlaterState, batch: &SampleBatch) -> Result<CorrelationEstimate> {
    correlation_estimate_with(s, batch, 0)
}

/// Local-estimator correlation matrix with jackknife errors over
/// [`JACKKNIFE_BLOCKS`] contiguous blocks. Blocks are reduced independently
/// and combined in block order, so the result does not depend on `threads`.
pub fn correlation_estimate_with(s: &SlaterState, batch: &SampleBatch, threads: usize) -> Result<CorrelationEstimate> {
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    if batch.logical_len != s.sites() || batch.particles != s.particles() {
        return Err(Error::InvalidArgument("batch was not drawn from this state".into()));
    }
    let len = physical_len(s.sites(), s.particles());
    let total = batch.len();
    let blocks = JACKKNIFE_BLOCKS.min(total);
    let reflected = s.reflected();

    let sums: Vec<(DMatrix<C64>, usize, usize)> = with_threads(threads, || {
        (0..blocks)
            .into_par_iter()
            .map(|b| {
                let start = b * total / blocks;
                let end = (b + 1) * total / blocks;
                let mut acc = DMatrix::<C64>::zeros(len, len);
                let mut ws = Workspace::default();
                let mut used = 0;
                let mut skipped = 0;
                for m in &batch.configs[start..end] {
                    let phys = logical_to_physical(m).sites();
                    let ok = estimator::accumulate_sample(s, &reflected, len, &phys, &mut ws, &mut |j: usize, jp: usize, v: C64| {
                        acc[(j, jp)] += v
                    });
                    if !ok {
                        skipped += 1;
                        continue;
                    }
                    for &j in &phys {
                        acc[(j, j)] += C64::new(1.0, 0.0);
                    }
                    used += 1;
                }
                (acc, used, skipped)
            })
            .collect()
    });

    let skipped: usize = sums.iter().map(|s| s.2).sum();
    let used: usize = sums.iter().map(|s| s.1).sum();
    if skipped as f64 > MAX_SKIPPED_FRACTION * total as f64 || used == 0 {
        return Err(Error::TooManyDegenerate { skipped, total });
    }
    let mut grand = DMatrix::<C64>::zeros(len, len);
    for (acc, _, _) in &sums {
        grand += acc;
    }
    let estimate = combine_directions(&(&grand / C64::new(used as f64, 0.0)));

    let mut leave_out: Vec<DMatrix<C64>> = Vec::new();
    let stderr = if blocks >= 2 {
        leave_out = sums
            .iter()
            .filter(|(_, n, _)| used > *n)
            .map(|(acc, n, _)| combine_directions(&((&grand - acc) / C64::new((used - n) as f64, 0.0))))
            .collect();
        let nb = leave_out.len() as f64;
        let mut mean = DMatrix::<C64>::zeros(len, len);
        for m in leave_out.iter() {
            mean += m;
        }
        mean /= C64::new(nb, 0.0);
        let mut var = DMatrix::<f64>::zeros(len, len);
        for m in leave_out.iter() {
            for (v, (x, y)) in var.iter_mut().zip(m.iter().zip(mean.iter())) {
                *v += (x - y).norm_sqr();
            }
        }
        Some(var.map(|v| (v * (nb - 1.0) / nb).sqrt()))
    } else {
        None
    };

    let mut matrix = CorrelationMatrix::new(estimate).with_time(s.time());
    if let Some(e) = stderr {
        matrix = matrix.with_stderr(e);
    }
    Ok(CorrelationEstimate {
        matrix,
        skipped,
        samples: total,
        leave_out: leave_out
            .into_iter()
            .map(|m| CorrelationMatrix::new(m).with_time(s.time()))
            .collect(),
    })
}

/// Merges the two one-sided estimates of each Hermitian pair. `raw[(j, j')]`
/// comes from samples occupying `j'`, `conj(raw[(j', j)])` from samples
/// occupying `j`. Their variances scale with the density of the target site,
/// so each is weighted by the density of its source site.
fn combine_directions(raw: &DMatrix<C64>) -> DMatrix<C64> {
    let n = raw.nrows();
    let mut out = DMatrix::<C64>::zeros(n, n);
    for j in 0..n {
        out[(j, j)] = C64::new(raw[(j, j)].re, 0.0);
        for jp in j + 1..n {
            let (dj, djp) = (raw[(j, j)].re.max(0.0), raw[(jp, jp)].re.max(0.0));
            let w = if dj + djp > 0.0 { djp / (dj + djp) } else { 0.5 };
            let v = raw[(j, jp)] * w + raw[(jp, j)].conj() * (1.0 - w);
            out[(j, jp)] = v;
            out[(jp, j)] = v.conj();
        }
    }
    out
}

/// Momentum grid `k = 2 pi q / L`, `q = 0..L-1`.
pub fn momentum_grid(len: usize) -> Vec<f64> {
    (0..len).map(|q| 2.0 * PI * q as f64 / len as f64).collect()
}

/// `n(k) = (1/L) sum_{j,j'} exp(-i k (j - j')) <c_j^dag c_j'>` on the periodic
/// grid. Returns `(k, n_k)` pairs; the imaginary part vanishes for Hermitian
/// input and is dropped.
pub fn momentum_distribution(corr: &CorrelationMatrix) -> Vec<(f64, f64)> {
    let len = corr.dim();
    let c = hermitian_part(corr.entries());
    let roots: Vec<C64> = (0..len).map(|p| C64::from_polar(1.0, -2.0 * PI * p as f64 / len as f64)).collect();
    momentum_grid(len)
        .into_iter()
        .enumerate()
        .map(|(q, k)| {
            let mut acc = C64::new(0.0, 0.0);
            for j in 0..len {
                for jp in 0..len {
                    // exp(-i k (j - j')) with the exponent reduced mod L
                    let idx = (q * ((j + len - jp) % len)) % len;
                    acc += roots[idx] * c[(j, jp)];
                }
            }
            (k, acc.re / len as f64)
        })
        .collect()
}

/// Static structure factor from diagonal samples.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StructureFactor {
    pub k: Vec<f64>,
    pub s: Vec<f64>,
    pub stderr: Vec<f64>,
}

/// `S(k) = (1/L) < |sum_j exp(i k j) (n_j - rho)|^2 >` over the batch.
pub fn structure_factor(batch: &SampleBatch) -> Result<StructureFactor> {
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let len = physical_len(batch.logical_len, batch.particles);
    let rho = batch.particles as f64 / len as f64;
    let roots: Vec<C64> = (0..len).map(|p| C64::from_polar(1.0, 2.0 * PI * p as f64 / len as f64)).collect();
    let mut sum = vec![0.0; len];
    let mut sumsq = vec![0.0; len];
    let mut amp = vec![C64::new(0.0, 0.0); len];
    for m in &batch.configs {
        let phys = logical_to_physical(m).sites();
        amp.iter_mut().for_each(|a| *a = C64::new(0.0, 0.0));
        for (q, a) in amp.iter_mut().enumerate() {
            for &j in &phys {
                *a += roots[(q * j) % len];
            }
        }
        // sum_j exp(i k j) vanishes on the grid except at k = 0
        amp[0] -= C64::new(rho * len as f64, 0.0);
        for q in 0..len {
            let v = amp[q].norm_sqr() / len as f64;
            sum[q] += v;
            sumsq[q] += v * v;
        }
    }
    let m = batch.len() as f64;
    let s: Vec<f64> = sum.iter().map(|x| x / m).collect();
    let stderr = s
        .iter()
        .zip(&sumsq)
        .map(|(mean, sq)| {
            if batch.len() > 1 {
                ((sq / m - mean * mean).max(0.0) / (m - 1.0)).sqrt()
            } else {
                0.0
            }
        })
        .collect();
    Ok(StructureFactor {
        k: momentum_grid(len),
        s,
        stderr,
    })
}

/// Number of smallest nonzero momenta used for the Luttinger slope.
pub const LUTTINGER_POINTS: usize = 4;

/// `K = 2 pi dS/dk`, the slope from a least-squares line through the
/// [`LUTTINGER_POINTS`] smallest nonzero momenta.
pub fn luttinger_k(sf: &StructureFactor) -> Result<f64> {
    if sf.k.len() <= LUTTINGER_POINTS {
        return Err(Error::FitFailure("not enough momenta for the slope".into()));
    }
    let xs = &sf.k[1..=LUTTINGER_POINTS];
    let ys = &sf.s[1..=LUTTINGER_POINTS];
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    if !(slope > 0.0) {
        return Err(Error::FitFailure(format!("structure-factor slope {slope} is not positive")));
    }
    Ok(2.0 * PI * slope)
}

/// Late-time mean of `sqrt(<n_j>)` for Gaussian density fluctuations with
/// variance `rho (1/l_d - 1/L)`, `l_d = sqrt(D t)`.
pub fn diffusion_prediction(particles: usize, len: usize, diffusion: f64, t: f64) -> f64 {
    assert!(diffusion > 0.0 && t > 0.0, "diffusion constant and time must be positive");
    let rho = particles as f64 / len as f64;
    let ld = (diffusion * t).sqrt();
    let var = rho * (1.0 / ld - 1.0 / len as f64);
    rho.sqrt() * (1.0 - var / (8.0 * rho * rho))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::LogicalConfig;
    use crate::sampler::sample_batch;
    use crate::slater::{ground_state_slater, initial_slater};

    fn diag(values: &[f64]) -> CorrelationMatrix {
        let n = values.len();
        CorrelationMatrix::new(DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                C64::new(values[i], 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        }))
    }

    #[test]
    fn initial_state_spectrum_and_hamming() {
        let c = diag(&[0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 1.0]);
        let spec = natural_orbitals(&c);
        assert_eq!(spec.lambdas, vec![1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(hamming_distance(&spec, 3), 0.0);
        assert_eq!(overlap_chi(&spec, 3), 1.0);
        assert!((relaxation_z(&spec, &spec, 3) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn fully_scrambled_limit() {
        let (n, l) = (4usize, 16usize);
        let rho = n as f64 / l as f64;
        let spec = natural_orbitals(&diag(&vec![rho; l]));
        let d = hamming_distance(&spec, n);
        assert!((d - 2.0 * n as f64 * (1.0 - rho)).abs() < 1e-12);
    }

    #[test]
    fn relaxation_identities() {
        let spec = natural_orbitals(&diag(&[0.9, 0.6, 0.3, 0.2]));
        let z = relaxation_z(&spec, &spec, 2);
        assert!((z - spec.sum() / 2.0).abs() < 1e-14);
        let init = natural_orbitals(&diag(&[1.0, 1.0, 0.0, 0.0]));
        let late = natural_orbitals(&diag(&[0.7, 0.5, 0.5, 0.3]));
        let z = relaxation_z(&init, &late, 2);
        assert!((z - (0.7f64.sqrt() + 0.5f64.sqrt()) / 2.0).abs() < 1e-14);
    }

    #[test]
    fn clipping_is_reported() {
        let spec = natural_orbitals(&diag(&[1.02, -0.01, 0.5]));
        assert_eq!(spec.lambdas, vec![1.0, 0.5, 0.0]);
        assert!((spec.clipped_mass - 0.03).abs() < 1e-12);
    }

    #[test]
    fn natural_orbitals_diagonalise() {
        let s = initial_slater(&"0101001".parse().unwrap()).evolve(0.8);
        let c = s.logical_correlation();
        let spec = natural_orbitals(&c);
        assert!(spec.lambdas.windows(2).all(|w| w[0] >= w[1]));
        // free-fermion state: occupations are exactly 0 or 1
        for (l, &lam) in spec.lambdas.iter().enumerate() {
            let want = if l < 3 { 1.0 } else { 0.0 };
            assert!((lam - want).abs() < 1e-10);
        }
        let recon = &spec.vectors
            * DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(7, spec.lambdas.iter().map(|&x| C64::new(x, 0.0))))
            * spec.vectors.adjoint();
        assert!((recon - c.entries()).norm() < 1e-9);
    }

    #[test]
    fn flat_momentum_distribution_for_product_state() {
        let c = diag(&[1.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        let nk = momentum_distribution(&c);
        for (_, n) in &nk {
            assert!((n - 3.0 / 8.0).abs() < 1e-14);
        }
        let total: f64 = nk.iter().map(|p| p.1).sum();
        assert!((total - c.trace()).abs() < 1e-12);
    }

    #[test]
    fn single_particle_momentum_distribution() {
        // N = 1: physical chain equals logical chain
        let g = ground_state_slater(12, 1).unwrap();
        let c = g.logical_correlation();
        let nk = momentum_distribution(&c);
        for (k, n) in nk {
            let ft: C64 = (0..12).map(|j| C64::from_polar(1.0, k * j as f64) * g.orbital(j, 0)).sum();
            assert!((n - ft.norm_sqr() / 12.0).abs() < 1e-12);
        }
    }

    #[test]
    fn density_of_product_state() {
        let m0: LogicalConfig = "0110010".parse().unwrap();
        let s = initial_slater(&m0);
        let b = sample_batch(&s, 10, 1, 1).unwrap();
        let d = density_estimate(&b).unwrap();
        // physical image 0101010010: occupied 1,3,5,8 (0-based) for 0110010 -> 01 01 0 0 01 0 minus leading 0
        let phys = logical_to_physical(&m0);
        for j in 0..phys.len() {
            assert_eq!(d.mean[j], if phys.bits().get(j) { 1.0 } else { 0.0 });
        }
        assert!((d.mean.iter().sum::<f64>() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn estimator_at_time_zero_is_diagonal() {
        let m0: LogicalConfig = "0110010".parse().unwrap();
        let s = initial_slater(&m0);
        let b = sample_batch(&s, 40, 1, 1).unwrap();
        let est = correlation_estimate(&s, &b).unwrap();
        let phys = logical_to_physical(&m0);
        for i in 0..phys.len() {
            for j in 0..phys.len() {
                let want = if i == j && phys.bits().get(i) { 1.0 } else { 0.0 };
                assert!((est.matrix.entries()[(i, j)] - C64::new(want, 0.0)).norm() < 1e-14);
            }
        }
        assert_eq!(est.skipped, 0);
    }

    #[test]
    fn single_particle_estimator_converges_to_orbital_product() {
        // every site carries at least 3% weight at this time
        let s = initial_slater(&"00100000".parse().unwrap()).evolve(2.3);
        let b = sample_batch(&s, 4000, 9, 1).unwrap();
        let est = correlation_estimate(&s, &b).unwrap();
        let se = est.matrix.stderr().unwrap();
        for j in 0..8 {
            for jp in 0..8 {
                let want = s.orbital(j, 0).conj() * s.orbital(jp, 0);
                let got = est.matrix.entries()[(j, jp)];
                assert!((got - want).norm() < 5.0 * se[(j, jp)] + 1e-12, "({j},{jp}) {got} vs {want}");
            }
        }
        assert!(est.matrix.hermiticity_error() < 1e-12);
    }

    #[test]
    fn direction_weights_favour_the_occupied_source() {
        let mut raw = DMatrix::<C64>::zeros(2, 2);
        raw[(0, 0)] = C64::new(0.9, 0.0);
        raw[(1, 1)] = C64::new(0.1, 0.0);
        raw[(0, 1)] = C64::new(0.2, 0.1);
        raw[(1, 0)] = C64::new(0.4, -0.3);
        let c = combine_directions(&raw);
        // raw[(0, 1)] comes from samples occupying site 1 and gets weight 0.1
        let want = C64::new(0.2, 0.1) * 0.1 + C64::new(0.4, 0.3) * 0.9;
        assert!((c[(0, 1)] - want).norm() < 1e-15);
        assert_eq!(c[(1, 0)], want.conj());
        let herm = hermitian_part(&raw);
        let sym = combine_directions(&herm);
        assert!((sym - herm).norm() < 1e-15);
    }

    #[test]
    fn jackknife_of_a_linear_function_matches_entry_error() {
        let s = initial_slater(&"00100000".parse().unwrap()).evolve(2.3);
        let b = sample_batch(&s, 2000, 4, 1).unwrap();
        let est = correlation_estimate(&s, &b).unwrap();
        assert_eq!(est.leave_out.len(), JACKKNIFE_BLOCKS);
        let (v, e) = est.jackknife(|c| c.entries()[(2, 2)].re);
        assert_eq!(v, est.matrix.entries()[(2, 2)].re);
        assert!((e - est.matrix.stderr().unwrap()[(2, 2)]).abs() < 1e-12);
    }

    #[test]
    fn empty_batch_is_rejected() {
        let s = initial_slater(&"01".parse().unwrap());
        let b = SampleBatch {
            configs: vec![],
            seed: 0,
            state_time: 0.0,
            logical_len: 2,
            particles: 1,
        };
        assert!(matches!(density_estimate(&b), Err(Error::EmptyBatch)));
        assert!(matches!(correlation_estimate(&s, &b), Err(Error::EmptyBatch)));
        assert!(matches!(structure_factor(&b), Err(Error::EmptyBatch)));
    }

    #[test]
    fn structure_factor_of_product_state() {
        let m0: LogicalConfig = "0100110".parse().unwrap();
        let s = initial_slater(&m0);
        let b = sample_batch(&s, 5, 2, 1).unwrap();
        let sf = structure_factor(&b).unwrap();
        let phys = logical_to_physical(&m0);
        let len = phys.len();
        let rho = 3.0 / len as f64;
        assert!(sf.s[0].abs() < 1e-20);
        for (q, &k) in sf.k.iter().enumerate() {
            let amp: C64 = (0..len)
                .map(|j| {
                    let n = if phys.bits().get(j) { 1.0 } else { 0.0 };
                    C64::from_polar(1.0, k * j as f64) * (n - rho)
                })
                .sum();
            assert!((sf.s[q] - amp.norm_sqr() / len as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn luttinger_slope_of_linear_data() {
        let k = momentum_grid(64);
        let s: Vec<f64> = k.iter().map(|k| 0.8 * k / (2.0 * PI)).collect();
        let sf = StructureFactor { stderr: vec![0.0; 64], k, s };
        assert!((luttinger_k(&sf).unwrap() - 0.8).abs() < 1e-12);
        let flat = StructureFactor {
            k: momentum_grid(64),
            s: vec![0.3; 64],
            stderr: vec![0.0; 64],
        };
        assert!(matches!(luttinger_k(&flat), Err(Error::FitFailure(_))));
    }

    #[test]
    fn diffusion_prediction_limits() {
        let (n, l) = (32, 128);
        let full = diffusion_prediction(n, l, 1.0, (l * l) as f64);
        assert!((full - 0.5).abs() < 1e-15);
        // with L -> infinity the correction scales as t^{-1/2}
        let big = 1usize << 50;
        let rho_n = big / 4;
        let base = (0.25f64).sqrt();
        let c1 = base - diffusion_prediction(rho_n, big, 0.7, 100.0);
        let c2 = base - diffusion_prediction(rho_n, big, 0.7, 200.0);
        assert!((c1 / c2 - 2f64.sqrt()).abs() < 1e-9);
    }
}
