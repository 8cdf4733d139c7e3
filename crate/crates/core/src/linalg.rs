//! Small dense kernels on row-major complex buffers.
//!
//! These sit on the sampling and estimator hot paths, so they work on flat
//! slices instead of allocating matrix objects per call.

use num_complex::Complex64 as C64;

/// Determinant stored as `exp(log_abs) * phase`, with `|phase| = 1`.
/// A singular matrix has `log_abs = -inf`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogDet {
    pub log_abs: f64,
    pub phase: C64,
}

impl LogDet {
    pub const ONE: LogDet = LogDet {
        log_abs: 0.0,
        phase: C64 { re: 1.0, im: 0.0 },
    };

    pub const ZERO: LogDet = LogDet {
        log_abs: f64::NEG_INFINITY,
        phase: C64 { re: 1.0, im: 0.0 },
    };

    pub fn is_zero(&self) -> bool {
        self.log_abs == f64::NEG_INFINITY
    }

    pub fn to_complex(self) -> C64 {
        if self.is_zero() {
            C64::new(0.0, 0.0)
        } else {
            self.phase * self.log_abs.exp()
        }
    }

    /// `self / other`, returned as an ordinary complex number.
    pub fn ratio(self, other: LogDet) -> C64 {
        if self.is_zero() {
            return C64::new(0.0, 0.0);
        }
        self.phase / other.phase * (self.log_abs - other.log_abs).exp()
    }
}

/// In-place LU with partial pivoting of an `n x n` row-major matrix; returns
/// the determinant. `a` is overwritten with the factors.
pub fn lu_logdet(a: &mut [C64], n: usize) -> LogDet {
    debug_assert_eq!(a.len(), n * n);
    let mut log_abs = 0.0;
    let mut phase = C64::new(1.0, 0.0);
    for col in 0..n {
        let mut piv = col;
        let mut best = a[col * n + col].norm_sqr();
        for r in col + 1..n {
            let v = a[r * n + col].norm_sqr();
            if v > best {
                best = v;
                piv = r;
            }
        }
        if best == 0.0 {
            return LogDet::ZERO;
        }
        if piv != col {
            for c in 0..n {
                a.swap(col * n + c, piv * n + c);
            }
            phase = -phase;
        }
        let p = a[col * n + col];
        let pn = p.norm();
        log_abs += pn.ln();
        phase *= p / pn;
        let inv = p.inv();
        for r in col + 1..n {
            let f = a[r * n + col] * inv;
            if f == C64::new(0.0, 0.0) {
                continue;
            }
            a[r * n + col] = f;
            for c in col + 1..n {
                let v = a[col * n + c];
                a[r * n + c] -= f * v;
            }
        }
    }
    LogDet { log_abs, phase }
}

/// Determinant of the square matrix formed by the given rows and columns of a
/// row-major matrix with `stride` columns. Rows and columns are taken in the
/// order supplied.
pub fn submatrix_logdet(m: &[C64], stride: usize, rows: &[usize], cols: &[usize], scratch: &mut Vec<C64>) -> LogDet {
    let n = rows.len();
    debug_assert_eq!(n, cols.len());
    if n == 0 {
        return LogDet::ONE;
    }
    scratch.clear();
    for &r in rows {
        for &c in cols {
            scratch.push(m[r * stride + c]);
        }
    }
    lu_logdet(scratch, n)
}

/// Cofactor vector of the last row of an `n x n` matrix whose first `n - 1`
/// rows are given: the unique `w` with `det([top; x]) = x . w` for every row
/// `x`. `top` is row-major `(n - 1) x n` and is destroyed.
///
/// Uses complete pivoting so rank-deficient tops yield `w = 0` instead of
/// blowing up.
pub fn last_row_cofactors(top: &mut [C64], n: usize, out: &mut Vec<C64>) {
    out.clear();
    out.resize(n, C64::new(0.0, 0.0));
    if n == 0 {
        return;
    }
    if n == 1 {
        out[0] = C64::new(1.0, 0.0);
        return;
    }
    let rows = n - 1;
    debug_assert_eq!(top.len(), rows * n);
    let mut colperm: Vec<usize> = (0..n).collect();
    let mut sign = 1.0;
    let mut det = C64::new(1.0, 0.0);
    for s in 0..rows {
        let (mut pr, mut pc, mut best) = (s, s, 0.0);
        for r in s..rows {
            for c in s..n {
                let v = top[r * n + c].norm_sqr();
                if v > best {
                    best = v;
                    pr = r;
                    pc = c;
                }
            }
        }
        if best == 0.0 {
            return;
        }
        if pr != s {
            for c in 0..n {
                top.swap(s * n + c, pr * n + c);
            }
            sign = -sign;
        }
        if pc != s {
            for r in 0..rows {
                top.swap(r * n + s, r * n + pc);
            }
            colperm.swap(s, pc);
            sign = -sign;
        }
        let p = top[s * n + s];
        det *= p;
        let inv = p.inv();
        for r in s + 1..rows {
            let f = top[r * n + s] * inv;
            if f == C64::new(0.0, 0.0) {
                continue;
            }
            top[r * n + s] = C64::new(0.0, 0.0);
            for c in s + 1..n {
                let v = top[s * n + c];
                top[r * n + c] -= f * v;
            }
        }
    }
    // back substitution for U1 y = -u2, with v = [y; 1]
    let mut v = vec![C64::new(0.0, 0.0); n];
    v[n - 1] = C64::new(1.0, 0.0);
    for r in (0..rows).rev() {
        let mut acc = -top[r * n + (n - 1)];
        for c in r + 1..rows {
            acc -= top[r * n + c] * v[c];
        }
        v[r] = acc / top[r * n + r];
    }
    let scale = det * sign;
    for c in 0..n {
        out[colperm[c]] = v[c] * scale;
    }
}

/// Inverse of an `n x n` row-major matrix by Gauss-Jordan with partial
/// pivoting. Returns `None` if singular.
pub fn invert(a: &[C64], n: usize) -> Option<Vec<C64>> {
    let mut m = a.to_vec();
    let mut inv = vec![C64::new(0.0, 0.0); n * n];
    for i in 0..n {
        inv[i * n + i] = C64::new(1.0, 0.0);
    }
    for col in 0..n {
        let mut piv = col;
        let mut best = m[col * n + col].norm_sqr();
        for r in col + 1..n {
            let v = m[r * n + col].norm_sqr();
            if v > best {
                best = v;
                piv = r;
            }
        }
        if best == 0.0 {
            return None;
        }
        if piv != col {
            for c in 0..n {
                m.swap(col * n + c, piv * n + c);
                inv.swap(col * n + c, piv * n + c);
            }
        }
        let p = m[col * n + col].inv();
        for c in 0..n {
            m[col * n + c] *= p;
            inv[col * n + c] *= p;
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let f = m[r * n + col];
            if f == C64::new(0.0, 0.0) {
                continue;
            }
            for c in 0..n {
                let mv = m[col * n + c];
                let iv = inv[col * n + c];
                m[r * n + c] -= f * mv;
                inv[r * n + c] -= f * iv;
            }
        }
    }
    Some(inv)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    // Leibniz expansion, independent of the LU path.
    fn leibniz(m: &[C64], n: usize) -> C64 {
        fn perms(k: usize, cur: &mut Vec<usize>, used: &mut Vec<bool>, out: &mut Vec<Vec<usize>>) {
            if cur.len() == k {
                out.push(cur.clone());
                return;
            }
            for i in 0..k {
                if !used[i] {
                    used[i] = true;
                    cur.push(i);
                    perms(k, cur, used, out);
                    cur.pop();
                    used[i] = false;
                }
            }
        }
        let mut all = Vec::new();
        perms(n, &mut Vec::new(), &mut vec![false; n], &mut all);
        let mut total = c(0.0, 0.0);
        for p in all {
            let mut inv = 0;
            for i in 0..n {
                for j in i + 1..n {
                    if p[i] > p[j] {
                        inv += 1;
                    }
                }
            }
            let mut term = if inv % 2 == 0 { c(1.0, 0.0) } else { c(-1.0, 0.0) };
            for (i, &pi) in p.iter().enumerate() {
                term *= m[i * n + pi];
            }
            total += term;
        }
        total
    }

    fn pseudo(n: usize, seed: u64) -> Vec<C64> {
        let mut s = seed;
        (0..n)
            .map(|_| {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let a = (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5;
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let b = (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5;
                c(a, b)
            })
            .collect()
    }

    #[test]
    fn lu_matches_leibniz() {
        for n in 1..=5 {
            for seed in 0..5 {
                let m = pseudo(n * n, seed * 31 + n as u64);
                let want = leibniz(&m, n);
                let got = lu_logdet(&mut m.clone(), n).to_complex();
                assert!((want - got).norm() < 1e-12, "n={n}: {want} vs {got}");
            }
        }
    }

    #[test]
    fn singular_matrix_has_zero_det() {
        let mut m = vec![c(1.0, 0.0), c(2.0, 0.0), c(2.0, 0.0), c(4.0, 0.0)];
        assert!(lu_logdet(&mut m, 2).is_zero());
        assert!(invert(&[c(1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0)], 2).is_none());
    }

    #[test]
    fn cofactors_reproduce_determinant() {
        for n in 1..=6 {
            for seed in 0..4 {
                let full = pseudo(n * n, 1000 + seed * 7 + n as u64);
                let mut top = full[..(n - 1) * n].to_vec();
                let mut w = Vec::new();
                last_row_cofactors(&mut top, n, &mut w);
                let x = &full[(n - 1) * n..];
                let got: C64 = x.iter().zip(&w).map(|(a, b)| a * b).sum();
                let want = leibniz(&full, n);
                assert!((want - got).norm() < 1e-12, "n={n}");
            }
        }
    }

    #[test]
    fn cofactors_of_rank_deficient_top_vanish() {
        // second row is twice the first
        let mut top = vec![c(1.0, 0.0), c(2.0, 1.0), c(0.5, 0.0), c(2.0, 0.0), c(4.0, 2.0), c(1.0, 0.0)];
        let mut w = Vec::new();
        last_row_cofactors(&mut top, 3, &mut w);
        assert!(w.iter().all(|z| z.norm() < 1e-14));
    }

    #[test]
    fn inverse_round_trip() {
        let n = 4;
        let m = pseudo(n * n, 99);
        let inv = invert(&m, n).unwrap();
        for i in 0..n {
            for j in 0..n {
                let v: C64 = (0..n).map(|k| m[i * n + k] * inv[k * n + j]).sum();
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((v - c(e, 0.0)).norm() < 1e-12);
            }
        }
    }
}
