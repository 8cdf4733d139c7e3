//! Exact sampling of logical configurations from `|Psi_m|^2`.
//!
//! The production sampler is the permutation chain rule: draw a uniform
//! permutation `v` of the orbital columns, then pick rows one at a time with
//! weight `|det U[x_1..x_k; v_1..v_k]|^2`. Averaging over `v` makes the
//! marginal law of the row set exactly `|det U[m; :]|^2`.
//!
//! Two implementations of the conditional weights are kept side by side:
//! a reference path that evaluates every `k x k` determinant with LU in log
//! space, and an incremental path that tracks the Schur complement of the
//! already-chosen block. Both consume the random stream identically, so they
//! produce identical draws whenever their weights agree to rounding.
//!
//! A determinantal-point-process sampler on `K = U U^dag` and full
//! enumeration serve as independent oracles.

use std::collections::BTreeMap;

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::{binomial, enumerate_logical, LogicalConfig};
use crate::error::{Error, Result};
use crate::linalg;
use crate::slater::SlaterState;

/// Conditional weights below this are treated as underflow.
const WEIGHT_FLOOR: f64 = 1e-300;

/// Default enumeration cap for [`exact_distribution`].
pub const EXACT_CAP: usize = 1_000_000;

/// Independent random stream for one sample: the run seed selects the key,
/// the sample index selects the stream.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn random_permutation<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<usize> {
    let mut v: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        v.swap(i, j);
    }
    v
}

/// Index into `weights` selected by the uniform `u` in `[0, 1)`.
fn pick(weights: &[f64], total: f64, u: f64) -> usize {
    let target = u * total;
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            last = i;
        }
        acc += w;
        if acc > target {
            return i;
        }
    }
    last
}

fn build_config(len: usize, mut chosen: Vec<usize>) -> LogicalConfig {
    chosen.sort_unstable();
    LogicalConfig::from_sites(len, &chosen)
}

/// One chain-rule sample using incremental Schur-complement weights.
pub fn sample_one<R: Rng + ?Sized>(s: &SlaterState, rng: &mut R) -> Result<LogicalConfig> {
    let (len, n) = (s.sites(), s.particles());
    let u = s.raw();
    let v = random_permutation(n, rng);
    let mut chosen: Vec<usize> = Vec::with_capacity(n);
    let mut taken = vec![false; len];
    // inverse of U[chosen; v[..k]], row-major k x k
    let mut inv: Vec<C64> = Vec::with_capacity(n * n);
    let mut weights = vec![0.0; len];
    let mut resid = vec![C64::new(0.0, 0.0); len];
    let mut c = Vec::with_capacity(n);
    for k in 0..n {
        let vk = v[k];
        // c = inv * U[chosen, vk]
        c.clear();
        for i in 0..k {
            let mut acc = C64::new(0.0, 0.0);
            for (l, &x) in chosen.iter().enumerate() {
                acc += inv[i * k + l] * u[x * n + vk];
            }
            c.push(acc);
        }
        let mut total = 0.0;
        let mut best: f64 = 0.0;
        for x in 0..len {
            if taken[x] {
                weights[x] = 0.0;
                continue;
            }
            let row = &u[x * n..(x + 1) * n];
            let mut r = row[vk];
            for i in 0..k {
                r -= row[v[i]] * c[i];
            }
            resid[x] = r;
            let w = r.norm_sqr();
            weights[x] = w;
            total += w;
            best = best.max(w);
        }
        if best < WEIGHT_FLOOR {
            return Err(Error::NumericalUnderflow { step: k });
        }
        let x = pick(&weights, total, rng.random::<f64>());
        // bordered inverse update
        let sch = resid[x];
        let sinv = sch.inv();
        let row = &u[x * n..(x + 1) * n];
        let mut b = vec![C64::new(0.0, 0.0); k];
        for j in 0..k {
            let mut acc = C64::new(0.0, 0.0);
            for i in 0..k {
                acc += row[v[i]] * inv[i * k + j];
            }
            b[j] = acc;
        }
        let k1 = k + 1;
        let mut next = vec![C64::new(0.0, 0.0); k1 * k1];
        for i in 0..k {
            for j in 0..k {
                next[i * k1 + j] = inv[i * k + j] + c[i] * b[j] * sinv;
            }
            next[i * k1 + k] = -c[i] * sinv;
        }
        for j in 0..k {
            next[k * k1 + j] = -b[j] * sinv;
        }
        next[k * k1 + k] = sinv;
        inv = next;
        chosen.push(x);
        taken[x] = true;
    }
    Ok(build_config(len, chosen))
}

/// Reference chain-rule sample: every conditional weight is a fresh `k x k`
/// determinant, normalised in log space against the previous step.
pub fn sample_one_reference<R: Rng + ?Sized>(s: &SlaterState, rng: &mut R) -> Result<LogicalConfig> {
    let (len, n) = (s.sites(), s.particles());
    let u = s.raw();
    let v = random_permutation(n, rng);
    let mut chosen: Vec<usize> = Vec::with_capacity(n);
    let mut taken = vec![false; len];
    let mut prev_log = 0.0;
    let mut logs = vec![f64::NEG_INFINITY; len];
    let mut weights = vec![0.0; len];
    let mut rows = Vec::with_capacity(n);
    let mut scratch = Vec::with_capacity(n * n);
    for k in 0..n {
        let cols = &v[..=k];
        let mut hi = f64::NEG_INFINITY;
        for x in 0..len {
            if taken[x] {
                logs[x] = f64::NEG_INFINITY;
                continue;
            }
            rows.clear();
            rows.extend_from_slice(&chosen);
            rows.push(x);
            let d = linalg::submatrix_logdet(u, n, &rows, cols, &mut scratch);
            logs[x] = 2.0 * d.log_abs;
            hi = hi.max(logs[x]);
        }
        if hi == f64::NEG_INFINITY || hi - prev_log < WEIGHT_FLOOR.ln() {
            return Err(Error::NumericalUnderflow { step: k });
        }
        let mut total = 0.0;
        for x in 0..len {
            // weights relative to the previous determinant, like the Schur path
            weights[x] = if logs[x] == f64::NEG_INFINITY {
                0.0
            } else {
                (logs[x] - prev_log).exp()
            };
            total += weights[x];
        }
        let x = pick(&weights, total, rng.random::<f64>());
        prev_log = logs[x];
        chosen.push(x);
        taken[x] = true;
    }
    Ok(build_config(len, chosen))
}

/// Conditional row law at one step of the chain rule for a fixed column
/// order, by explicit determinants. Entries for already-chosen rows are zero.
pub fn conditional_law(s: &SlaterState, chosen: &[usize], columns: &[usize]) -> Vec<f64> {
    let (len, n) = (s.sites(), s.particles());
    assert_eq!(chosen.len() + 1, columns.len());
    let mut scratch = Vec::new();
    let mut rows = Vec::with_capacity(columns.len());
    let mut w: Vec<f64> = (0..len)
        .map(|x| {
            if chosen.contains(&x) {
                return 0.0;
            }
            rows.clear();
            rows.extend_from_slice(chosen);
            rows.push(x);
            linalg::submatrix_logdet(s.raw(), n, &rows, columns, &mut scratch)
                .to_complex()
                .norm_sqr()
        })
        .collect();
    let total: f64 = w.iter().sum();
    if total > 0.0 {
        w.iter_mut().for_each(|x| *x /= total);
    }
    w
}

/// Sequential Bernoulli sampler for the projection kernel `K = U U^dag`:
/// each site is included with its conditional marginal, then the kernel is
/// conditioned on that outcome by a rank-one Schur downdate.
pub fn dpp_sample<R: Rng + ?Sized>(s: &SlaterState, rng: &mut R) -> Result<LogicalConfig> {
    let (len, n) = (s.sites(), s.particles());
    let mut k = vec![C64::new(0.0, 0.0); len * len];
    for i in 0..len {
        for j in 0..len {
            k[i * len + j] = (0..n).map(|a| s.orbital(i, a) * s.orbital(j, a).conj()).sum();
        }
    }
    let mut chosen = Vec::with_capacity(n);
    for i in 0..len {
        if chosen.len() == n {
            break;
        }
        let p = k[i * len + i].re.clamp(0.0, 1.0);
        let include = rng.random::<f64>() < p;
        let denom = if include { p } else { p - 1.0 };
        if denom.abs() < WEIGHT_FLOOR {
            return Err(Error::NumericalUnderflow { step: i });
        }
        if include {
            chosen.push(i);
        }
        // K_ab <- K_ab - K_ai K_ib / (K_ii - [not included])
        let col: Vec<C64> = (i + 1..len).map(|a| k[a * len + i]).collect();
        let row: Vec<C64> = (i + 1..len).map(|b| k[i * len + b]).collect();
        for (ai, a) in (i + 1..len).enumerate() {
            for (bi, b) in (i + 1..len).enumerate() {
                k[a * len + b] -= col[ai] * row[bi] / denom;
            }
        }
    }
    if chosen.len() != n {
        return Err(Error::NumericalUnderflow { step: len });
    }
    Ok(LogicalConfig::from_sites(len, &chosen))
}

/// Full law `|amplitude(m)|^2` over the fixed-`N` sector.
pub fn exact_distribution(s: &SlaterState) -> Result<BTreeMap<LogicalConfig, f64>> {
    exact_distribution_capped(s, EXACT_CAP)
}

pub fn exact_distribution_capped(s: &SlaterState, cap: usize) -> Result<BTreeMap<LogicalConfig, f64>> {
    let size = binomial(s.sites(), s.particles());
    if size > cap {
        return Err(Error::TooLarge { size, cap });
    }
    let configs = enumerate_logical(s.sites(), s.particles())?;
    let mut out = BTreeMap::new();
    let mut total = 0.0;
    for m in configs {
        let p = s.amplitude_at(&m.sites()).to_complex().norm_sqr();
        total += p;
        out.insert(m, p);
    }
    if total > 0.0 {
        out.values_mut().for_each(|p| *p /= total);
    }
    Ok(out)
}

/// Which sampler backs a batch.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplerKind {
    #[default]
    ChainRule,
    ChainRuleReference,
    Dpp,
}

/// A reproducible set of samples drawn from one Slater state.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleBatch {
    pub configs: Vec<LogicalConfig>,
    pub seed: u64,
    pub state_time: f64,
    pub logical_len: usize,
    pub particles: usize,
}

impl SampleBatch {
    /// `M_s`.
    pub fn len(&self) -> usize {
        self.configs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.configs.is_empty()
    }

    pub fn sidecar(&self) -> BatchSidecar {
        BatchSidecar {
            seed: self.seed,
            samples: self.configs.len(),
            logical_len: self.logical_len,
            particles: self.particles,
            time: self.state_time,
        }
    }

    /// Newline-delimited bitstrings.
    pub fn to_lines(&self) -> String {
        let mut out = String::with_capacity(self.configs.len() * (self.logical_len + 1));
        for c in &self.configs {
            out.push_str(&c.to_string());
            out.push('\n');
        }
        out
    }

    pub fn from_lines(text: &str, sidecar: &BatchSidecar) -> Result<Self> {
        let mut configs = Vec::with_capacity(sidecar.samples);
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
            let c: LogicalConfig = line.parse()?;
            if c.len() != sidecar.logical_len {
                return Err(Error::InvalidArgument(format!("line {line:?} has wrong length")));
            }
            if c.particles() != sidecar.particles {
                return Err(Error::SectorMismatch {
                    expected: sidecar.particles,
                    found: c.particles(),
                });
            }
            configs.push(c);
        }
        if configs.len() != sidecar.samples {
            return Err(Error::InvalidArgument(format!(
                "sidecar promises {} samples, file has {}",
                sidecar.samples,
                configs.len()
            )));
        }
        Ok(SampleBatch {
            configs,
            seed: sidecar.seed,
            state_time: sidecar.time,
            logical_len: sidecar.logical_len,
            particles: sidecar.particles,
        })
    }
}

/// JSON sidecar stored next to a batch file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BatchSidecar {
    pub seed: u64,
    #[serde(rename = "M_s")]
    pub samples: usize,
    #[serde(rename = "L_tau")]
    pub logical_len: usize,
    #[serde(rename = "N")]
    pub particles: usize,
    pub time: f64,
}

/// Runs `f` on a pool of `threads` workers, or the global pool when `threads`
/// is zero.
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    if threads == 0 {
        return f();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}

/// `M_s` independent samples. Sample `i` uses stream `i` of the seed, so the
/// batch does not depend on the thread count.
pub fn sample_batch(s: &SlaterState, samples: usize, seed: u64, threads: usize) -> Result<SampleBatch> {
    sample_batch_with(s, samples, seed, threads, SamplerKind::ChainRule)
}

pub fn sample_batch_with(
    s: &SlaterState,
    samples: usize,
    seed: u64,
    threads: usize,
    kind: SamplerKind,
) -> Result<SampleBatch> {
    if samples == 0 {
        return Err(Error::InvalidArgument("sample count must be at least 1".into()));
    }
    let configs: Result<Vec<LogicalConfig>> = with_threads(threads, || {
        (0..samples)
            .into_par_iter()
            .map(|i| {
                let mut rng = sample_rng(seed, i as u64);
                let r = match kind {
                    SamplerKind::ChainRule => sample_one(s, &mut rng),
                    SamplerKind::ChainRuleReference => sample_one_reference(s, &mut rng),
                    SamplerKind::Dpp => dpp_sample(s, &mut rng),
                };
                r.map_err(|e| Error::Sample {
                    index: i,
                    source: Box::new(e),
                })
            })
            .collect()
    });
    Ok(SampleBatch {
        configs: configs?,
        seed,
        state_time: s.time(),
        logical_len: s.sites(),
        particles: s.particles(),
    })
}
