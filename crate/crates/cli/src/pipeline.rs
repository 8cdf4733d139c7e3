//! End-to-end experiments shared by the binary and the integration tests.

use serde::Serialize;

use scrambling_core::exact::{build_physical_hamiltonian, build_unconstrained_hamiltonian, OtocEngine};
use scrambling_core::fits::{self, FitResult, LYAPUNOV_WINDOW};
use scrambling_core::observables::{self, CorrelationEstimate, NaturalOrbitalSpectrum};
use scrambling_core::sampler::{sample_rng, with_threads};
use scrambling_core::slater::random_product_config;
use scrambling_core::{
    correlation_estimate, ground_state_slater, initial_slater, luttinger_k, natural_orbitals, sample_batch, structure_factor,
    Error, LogicalConfig, Result, SlaterState,
};

use crate::config::{ExperimentConfig, InitialState, DEFAULT_T_INF};

/// Mixes a run seed with stream labels into an independent 64-bit seed.
pub fn derive_seed(seed: u64, labels: &[u64]) -> u64 {
    let mut x = seed;
    for &l in labels {
        x = splitmix(x ^ splitmix(l.wrapping_add(0x9e37_79b9_7f4a_7c15)));
    }
    x
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

const TAG_INITIAL: u64 = 1;
const TAG_SAMPLES: u64 = 2;
const TAG_REFERENCE: u64 = 3;

/// Initial states for a run. Random product states are drawn uniformly over
/// the `C(L_tau, N)` logical configurations from the run seed.
pub fn initial_states(cfg: &ExperimentConfig) -> Result<Vec<(String, SlaterState)>> {
    let (l, n) = cfg.sector()?;
    let lt = cfg.logical_len()?;
    match cfg.initial_state() {
        InitialState::Ground => Ok(vec![("ground".to_string(), ground_state_slater(lt, n)?)]),
        InitialState::Explicit(m) => {
            if m.len() != lt || m.particles() != n {
                return Err(Error::InvalidArgument(format!(
                    "initial state {m} does not fit L = {l}, N = {n} (needs {lt} logical sites)"
                )));
            }
            Ok(vec![(m.to_string(), initial_slater(&m))])
        }
        InitialState::RandomProduct => {
            let seed = cfg.require_seed()?;
            (0..cfg.n_initial_states()?)
                .map(|k| {
                    let mut rng = sample_rng(derive_seed(seed, &[TAG_INITIAL, k as u64]), 0);
                    let m: LogicalConfig = random_product_config(lt, n, &mut rng)?;
                    Ok((m.to_string(), initial_slater(&m)))
                })
                .collect()
        }
    }
}

fn estimate_at(s0: &SlaterState, t: f64, samples: usize, seed: u64, threads: usize) -> Result<CorrelationEstimate> {
    let s = s0.evolve(t);
    let batch = scrambling_core::sample_batch_with(&s, samples, seed, threads, scrambling_core::SamplerKind::ChainRule)?;
    observables::correlation_estimate_with(&s, &batch, threads)
}

/// Mean and standard error across states; with a single state the supplied
/// jackknife error is used.
fn combine(values: &[f64], single_err: f64) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, single_err);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[derive(Clone, Debug, Serialize)]
pub struct HammingRun {
    pub times: Vec<f64>,
    pub d_mean: Vec<f64>,
    pub d_stderr: Vec<f64>,
    pub initial_states: Vec<String>,
    /// `D` per initial state, indexed `[state][time]`.
    pub per_state: Vec<Vec<f64>>,
    /// Largest clipped eigenvalue mass seen in any estimate.
    pub max_clipped: f64,
    pub plateau: Option<f64>,
    pub plateau_window: (f64, f64),
    pub target_plateau: f64,
    pub fit: std::result::Result<FitResult, String>,
}

pub fn run_hamming(cfg: &ExperimentConfig) -> Result<HammingRun> {
    let (l, n) = cfg.sector()?;
    let times = cfg.times()?;
    let seed = cfg.require_seed()?;
    let samples = cfg.samples()?;
    let threads = cfg.threads();
    let states = initial_states(cfg)?;
    let mut per_state = Vec::with_capacity(states.len());
    let mut errs = Vec::with_capacity(states.len());
    let mut max_clipped: f64 = 0.0;
    for (si, (_, s0)) in states.iter().enumerate() {
        let mut row = Vec::with_capacity(times.len());
        let mut err_row = Vec::with_capacity(times.len());
        for (ti, &t) in times.iter().enumerate() {
            let est = estimate_at(s0, t, samples, derive_seed(seed, &[TAG_SAMPLES, si as u64, ti as u64]), threads)?;
            let (d, e) = est.jackknife(|c| observables::hamming_distance(&natural_orbitals(c), n));
            max_clipped = max_clipped.max(natural_orbitals(&est.matrix).clipped_mass);
            row.push(d);
            err_row.push(e);
        }
        per_state.push(row);
        errs.push(err_row);
    }
    let mut d_mean = Vec::with_capacity(times.len());
    let mut d_stderr = Vec::with_capacity(times.len());
    for ti in 0..times.len() {
        let col: Vec<f64> = per_state.iter().map(|r| r[ti]).collect();
        let (m, e) = combine(&col, errs[0][ti]);
        d_mean.push(m);
        d_stderr.push(e);
    }
    let rho = n as f64 / l as f64;
    let t_last = times.iter().copied().fold(0.0, f64::max);
    let plateau_window = cfg.fit_window.unwrap_or((t_last / 10.0, t_last));
    let late: Vec<f64> = times
        .iter()
        .zip(&d_mean)
        .filter(|(t, _)| **t >= plateau_window.0 && **t <= plateau_window.1)
        .map(|(_, d)| *d)
        .collect();
    let plateau = (!late.is_empty()).then(|| late.iter().sum::<f64>() / late.len() as f64);
    let (ft, fd): (Vec<f64>, Vec<f64>) = times.iter().zip(&d_mean).filter(|(t, _)| **t > 0.0).map(|(t, d)| (*t, *d)).unzip();
    let fit = fits::fit_arctan(&ft, &fd).map_err(|e| e.to_string());
    Ok(HammingRun {
        times,
        d_mean,
        d_stderr,
        initial_states: states.into_iter().map(|(s, _)| s).collect(),
        per_state,
        max_clipped,
        plateau,
        plateau_window,
        target_plateau: 2.0 * n as f64 * (1.0 - rho),
        fit,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct RelaxRun {
    pub times: Vec<f64>,
    pub z_mean: Vec<f64>,
    pub z_stderr: Vec<f64>,
    pub t_inf: Vec<f64>,
    pub initial_states: Vec<String>,
    pub fit_window: (f64, f64),
    pub fit: std::result::Result<FitResult, String>,
}

/// Reference times for the long-time spectrum.
pub fn reference_times(t_inf: f64, average: bool) -> Vec<f64> {
    if average {
        (0..5).map(|i| t_inf * 10f64.powf(-1.0 + i as f64 / 4.0)).collect()
    } else {
        vec![t_inf]
    }
}

pub fn run_relax(cfg: &ExperimentConfig) -> Result<RelaxRun> {
    let (_, n) = cfg.sector()?;
    let times = cfg.times()?;
    let seed = cfg.require_seed()?;
    let samples = cfg.samples()?;
    let threads = cfg.threads();
    let t_inf = reference_times(cfg.t_inf.unwrap_or(DEFAULT_T_INF), cfg.t_inf_average.unwrap_or(false));
    let states = initial_states(cfg)?;
    let mut per_state = Vec::with_capacity(states.len());
    let mut errs = Vec::with_capacity(states.len());
    for (si, (_, s0)) in states.iter().enumerate() {
        let refs: Vec<CorrelationEstimate> = t_inf
            .iter()
            .enumerate()
            .map(|(k, &t)| estimate_at(s0, t, samples, derive_seed(seed, &[TAG_REFERENCE, si as u64, k as u64]), threads))
            .collect::<Result<_>>()?;
        let spectrum_of = |pick: &dyn Fn(&CorrelationEstimate) -> NaturalOrbitalSpectrum| -> NaturalOrbitalSpectrum {
            let spectra: Vec<NaturalOrbitalSpectrum> = refs.iter().map(pick).collect();
            observables::average_spectra(&spectra)
        };
        let inf_full = spectrum_of(&|e| natural_orbitals(&e.matrix));
        let blocks = refs[0].leave_out.len();
        let inf_blocks: Vec<NaturalOrbitalSpectrum> = (0..blocks)
            .map(|b| spectrum_of(&|e: &CorrelationEstimate| natural_orbitals(&e.leave_out[b])))
            .collect();
        let mut row = Vec::with_capacity(times.len());
        let mut err_row = Vec::with_capacity(times.len());
        for (ti, &t) in times.iter().enumerate() {
            let est = estimate_at(s0, t, samples, derive_seed(seed, &[TAG_SAMPLES, si as u64, ti as u64]), threads)?;
            let z = observables::relaxation_z(&natural_orbitals(&est.matrix), &inf_full, n);
            // pair leave-out block b at time t with leave-out block b of the reference
            let zs: Vec<f64> = est
                .leave_out
                .iter()
                .zip(&inf_blocks)
                .map(|(c, inf)| observables::relaxation_z(&natural_orbitals(c), inf, n))
                .collect();
            let err = if zs.len() >= 2 {
                let nb = zs.len() as f64;
                let m = zs.iter().sum::<f64>() / nb;
                (zs.iter().map(|v| (v - m).powi(2)).sum::<f64>() * (nb - 1.0) / nb).sqrt()
            } else {
                0.0
            };
            row.push(z);
            err_row.push(err);
        }
        per_state.push(row);
        errs.push(err_row);
    }
    let mut z_mean = Vec::with_capacity(times.len());
    let mut z_stderr = Vec::with_capacity(times.len());
    for ti in 0..times.len() {
        let col: Vec<f64> = per_state.iter().map(|r| r[ti]).collect();
        let (m, e) = combine(&col, errs[0][ti]);
        z_mean.push(m);
        z_stderr.push(e);
    }
    let fit_window = cfg.fit_window.unwrap_or((50.0, 500.0));
    let one_minus: Vec<f64> = z_mean.iter().map(|z| 1.0 - z).collect();
    let fit = fits::fit_powerlaw(&times, &one_minus, fit_window).map_err(|e| e.to_string());
    Ok(RelaxRun {
        times,
        z_mean,
        z_stderr,
        t_inf,
        initial_states: states.into_iter().map(|(s, _)| s).collect(),
        fit_window,
        fit,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct NkRun {
    pub k: Vec<f64>,
    pub n_k: Option<Vec<f64>>,
    pub s_k: Vec<f64>,
    pub s_k_stderr: Vec<f64>,
    pub luttinger_k: std::result::Result<f64, String>,
    pub initial_state: String,
}

pub fn run_nk(cfg: &ExperimentConfig) -> Result<NkRun> {
    let seed = cfg.require_seed()?;
    let samples = cfg.samples()?;
    let threads = cfg.threads();
    let mut states = initial_states(&ExperimentConfig {
        initial_state: Some(cfg.initial_state.clone().unwrap_or(InitialState::Ground)),
        n_initial_states: Some(1),
        ..cfg.clone()
    })?;
    let (label, s) = states.remove(0);
    let batch = sample_batch(&s, samples, derive_seed(seed, &[TAG_SAMPLES, 0, 0]), threads)?;
    let sf = structure_factor(&batch)?;
    let n_k = if cfg.momentum.unwrap_or(true) {
        let est = correlation_estimate(&s, &batch)?;
        Some(observables::momentum_distribution(&est.matrix).into_iter().map(|(_, v)| v).collect())
    } else {
        None
    };
    Ok(NkRun {
        luttinger_k: luttinger_k(&sf).map_err(|e| e.to_string()),
        k: sf.k,
        n_k,
        s_k: sf.s,
        s_k_stderr: sf.stderr,
        initial_state: label,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct OtocRun {
    pub times: Vec<f64>,
    /// 1-based site labels of the measured operator.
    pub sites: Vec<usize>,
    /// `g[t][j]`.
    pub g: Vec<Vec<f64>>,
    pub site: usize,
    pub beta: f64,
    pub constrained: bool,
    pub ensemble: &'static str,
    pub threshold: f64,
    pub butterfly: std::result::Result<FitResult, String>,
    pub lyapunov: std::result::Result<FitResult, String>,
}

impl OtocRun {
    /// Rows of `G` at sites to the right of the perturbed one, indexed
    /// `[distance - 1][time]`, together with the distances.
    pub fn right_of_site(&self) -> (Vec<f64>, Vec<Vec<f64>>) {
        let mut d = Vec::new();
        let mut rows = Vec::new();
        for (col, &j) in self.sites.iter().enumerate() {
            if j > self.site {
                d.push((j - self.site) as f64);
                rows.push(self.g.iter().map(|r| r[col]).collect());
            }
        }
        (d, rows)
    }
}

pub const DEFAULT_OTOC_THRESHOLD: f64 = 1e-3;

/// Thermal OTOC of `Z_i(t)` against every `Z_j`; `site` is 1-based. Fits use
/// the sites to the right of `site`, with `d = j - i`.
pub fn run_otoc(cfg: &ExperimentConfig, constrained: bool) -> Result<OtocRun> {
    let (l, n) = cfg.sector()?;
    let times = cfg.times()?;
    let beta = cfg.beta.unwrap_or(1.0);
    let site = cfg.site.ok_or_else(|| Error::InvalidArgument("the perturbed site i is required".into()))?;
    if site == 0 || site > l {
        return Err(Error::InvalidArgument(format!("site {site} outside 1..={l}")));
    }
    let threshold = cfg.threshold.unwrap_or(DEFAULT_OTOC_THRESHOLD);
    let op = if constrained {
        build_physical_hamiltonian(l, n)?
    } else {
        build_unconstrained_hamiltonian(l, n)?
    };
    let engine = OtocEngine::new(&op, beta)?;
    let js: Vec<usize> = (0..l).collect();
    let g = with_threads(cfg.threads(), || engine.grid(site - 1, &times, &js));
    let mut run = OtocRun {
        times,
        sites: (1..=l).collect(),
        g,
        site,
        beta,
        constrained,
        ensemble: "canonical, fixed N",
        threshold,
        butterfly: Err("not computed".into()),
        lyapunov: Err("not computed".into()),
    };
    let (d, rows) = run.right_of_site();
    run.butterfly = fits::extract_butterfly_velocity(&run.times, &d, &rows, threshold).map_err(|e| e.to_string());
    run.lyapunov = match &run.butterfly {
        Ok(b) => fits::fit_lyapunov(&run.times, &d, &rows, b.param("v_B"), LYAPUNOV_WINDOW).map_err(|e| e.to_string()),
        Err(e) => Err(format!("no butterfly velocity: {e}")),
    };
    Ok(run)
}
