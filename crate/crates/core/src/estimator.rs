//! Local estimator for physical one-body correlations `<c_j^dag c_j'>`.
//!
//! For a sampled physical configuration `n` the operator `c_j^dag c_j'` has at
//! most one nonzero matrix element, connecting `n` to the configuration `n'`
//! with the particle on `j'` moved to `j`. The estimator accumulates
//! `sign * conj(Psi(n') / Psi(n))`, where `sign` counts the particles between
//! `j` and `j'`.
//!
//! In logical coordinates a physical move that jumps over `p` particles shifts
//! each of those `p` logical coordinates by one, so `n'` differs from `n` in up
//! to `p + 1` rows. With `G = U A^{-1}` (`A` the occupied-row block) the ratio
//! is a `(p + 1) x (p + 1)` minor of `G`. For a fixed removed particle and a
//! fixed landing gap only the last row of that minor depends on the landing
//! site, so one cofactor vector per gap serves every site in it.
//!
//! Leftward moves reuse the rightward kernel on the reflected chain; site
//! reflection multiplies every amplitude by the same sign, leaving ratios
//! unchanged.

use num_complex::Complex64 as C64;

use crate::linalg;
use crate::slater::{SlaterState, DEGENERATE_LOG};

/// Per-sample workspace, reused across samples to avoid reallocations.
#[derive(Default)]
pub struct Workspace {
    a: Vec<C64>,
    g: Vec<C64>,
    top: Vec<C64>,
    w: Vec<C64>,
    logical: Vec<usize>,
}

/// Receives `(j, j', value)` contributions for the entry `<c_j^dag c_j'>`.
pub trait Sink {
    fn add(&mut self, j: usize, jp: usize, value: C64);
}

impl<F: FnMut(usize, usize, C64)> Sink for F {
    fn add(&mut self, j: usize, jp: usize, value: C64) {
        self(j, jp, value)
    }
}

/// Accumulates off-diagonal contributions of one physical sample. `phys` are
/// the sorted 0-based physical positions on a chain of `len` sites. Returns
/// `false` when the sample amplitude is too small to serve as a denominator.
pub fn accumulate_sample<S: Sink>(
    state: &SlaterState,
    reflected: &SlaterState,
    len: usize,
    phys: &[usize],
    ws: &mut Workspace,
    sink: &mut S,
) -> bool {
    if !right_moves(state, len, phys, ws, &mut |j: usize, jp: usize, v: C64| sink.add(j, jp, v)) {
        return false;
    }
    let mirrored: Vec<usize> = phys.iter().rev().map(|&j| len - 1 - j).collect();
    right_moves(reflected, len, &mirrored, ws, &mut |j: usize, jp: usize, v: C64| {
        sink.add(len - 1 - j, len - 1 - jp, v)
    })
}

/// All moves of one particle to a site on its right.
pub fn right_moves<S: Sink>(state: &SlaterState, len: usize, phys: &[usize], ws: &mut Workspace, sink: &mut S) -> bool {
    let n = state.particles();
    let rows = state.sites();
    debug_assert_eq!(phys.len(), n);
    if n == 0 {
        return true;
    }
    let u = state.raw();
    ws.logical.clear();
    ws.logical.extend(phys.iter().enumerate().map(|(i, &j)| j - i));
    let k = &ws.logical;

    ws.a.clear();
    for &s in k {
        ws.a.extend_from_slice(&u[s * n..(s + 1) * n]);
    }
    let det = linalg::lu_logdet(&mut ws.a.clone(), n);
    if det.is_zero() || det.log_abs < DEGENERATE_LOG {
        return false;
    }
    let inv = match linalg::invert(&ws.a, n) {
        Some(inv) => inv,
        None => return false,
    };
    // G = U A^{-1}, rows x cols = L_tau x N
    ws.g.clear();
    ws.g.resize(rows * n, C64::new(0.0, 0.0));
    for x in 0..rows {
        let ux = &u[x * n..(x + 1) * n];
        let gx = &mut ws.g[x * n..(x + 1) * n];
        for (l, &ul) in ux.iter().enumerate() {
            if ul == C64::new(0.0, 0.0) {
                continue;
            }
            let irow = &inv[l * n..(l + 1) * n];
            for c in 0..n {
                gx[c] += ul * irow[c];
            }
        }
    }
    let g = &ws.g;

    for a in 0..n {
        for r in a..n {
            // landing window between the remaining neighbours
            let lo = if r > a { phys[r] + 2 } else { phys[a] + 1 };
            let hi = if r + 1 < n {
                match phys[r + 1].checked_sub(2) {
                    Some(h) => h,
                    None => continue,
                }
            } else {
                len - 1
            };
            if lo > hi {
                continue;
            }
            let dim = r - a + 1;
            // rows of the minor above the landing row: original particles
            // a+1..=r, now one rank lower, sit one logical site to the right
            ws.top.clear();
            for p in a + 1..=r {
                let site = k[p] + 1;
                ws.top.extend_from_slice(&g[site * n + a..site * n + r + 1]);
            }
            linalg::last_row_cofactors(&mut ws.top, dim, &mut ws.w);
            if ws.w.iter().all(|z| *z == C64::new(0.0, 0.0)) {
                continue;
            }
            let sign = if (r - a) % 2 == 0 { 1.0 } else { -1.0 };
            for j in lo..=hi {
                let x = j - r;
                let gx = &g[x * n + a..x * n + r + 1];
                let ratio: C64 = gx.iter().zip(&ws.w).map(|(p, q)| p * q).sum();
                sink.add(j, phys[a], ratio.conj() * sign);
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{logical_to_physical, physical_to_logical, BitString, LogicalConfig, PhysicalConfig};
    use crate::sampler::sample_rng;
    use crate::slater::{initial_slater, random_product_config};
    use std::collections::HashMap;

    // Brute-force contributions: enumerate all (j, j') moves and evaluate the
    // ratio by two determinants.
    fn brute(state: &SlaterState, n_phys: &PhysicalConfig) -> HashMap<(usize, usize), C64> {
        let len = n_phys.len();
        let sites = n_phys.sites();
        let m = physical_to_logical(n_phys);
        let psi = state.amplitude(&m).unwrap();
        let mut out = HashMap::new();
        for &jp in &sites {
            for j in 0..len {
                if n_phys.bits().get(j) {
                    continue;
                }
                let mut moved: Vec<usize> = sites.iter().copied().filter(|&s| s != jp).collect();
                moved.push(j);
                moved.sort();
                let bits = BitString::from_sites(len, &moved);
                let Ok(np) = PhysicalConfig::new(bits) else { continue };
                let psi2 = state.amplitude(&physical_to_logical(&np)).unwrap();
                let (lo, hi) = (j.min(jp), j.max(jp));
                let between = sites.iter().filter(|&&s| s > lo && s < hi).count();
                let sign = if between % 2 == 0 { 1.0 } else { -1.0 };
                out.insert((j, jp), (psi2 / psi).conj() * sign);
            }
        }
        out
    }

    #[test]
    fn kernel_matches_brute_force() {
        for trial in 0..40u64 {
            let len_tau = 5 + (trial % 8) as usize;
            let n = 1 + (trial as usize % 4).min(len_tau - 1);
            let mut rng = sample_rng(trial, 1);
            let m0 = random_product_config(len_tau, n, &mut rng).unwrap();
            let s = initial_slater(&m0).evolve(0.3 + trial as f64 * 0.21);
            let refl = s.reflected();
            let m: LogicalConfig = random_product_config(len_tau, n, &mut rng).unwrap();
            let p = logical_to_physical(&m);
            let want = brute(&s, &p);
            let mut got: HashMap<(usize, usize), C64> = HashMap::new();
            let mut ws = Workspace::default();
            let ok = accumulate_sample(&s, &refl, p.len(), &p.sites(), &mut ws, &mut |j: usize, jp: usize, v: C64| {
                assert!(got.insert((j, jp), v).is_none(), "duplicate ({j},{jp})");
            });
            assert!(ok);
            for (key, v) in &want {
                let g = got.get(key).copied().unwrap_or_default();
                assert!((g - v).norm() < 1e-9 * (1.0 + v.norm()), "trial {trial} {key:?}: {g} vs {v}");
            }
            for (key, v) in &got {
                if !want.contains_key(key) {
                    assert!(v.norm() < 1e-12, "unexpected {key:?}");
                }
            }
        }
    }

    #[test]
    fn degenerate_reference_is_reported() {
        let m0: LogicalConfig = "1100".parse().unwrap();
        let s = initial_slater(&m0);
        let refl = s.reflected();
        // physical image of 0011 has zero amplitude at t = 0
        let p = logical_to_physical(&"0011".parse().unwrap());
        let mut ws = Workspace::default();
        assert!(!accumulate_sample(&s, &refl, p.len(), &p.sites(), &mut ws, &mut |_: usize, _: usize, _: C64| {}));
    }
}
