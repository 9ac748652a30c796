//! Independent reference implementations used by the integration tests.

#![allow(dead_code)]

use nqkr::Complex64;

/// `J_0(z) ..= J_nmax(z)` for complex `z` by Miller's backward recurrence,
/// normalized with `J_0 + 2 sum_k J_{2k} = 1`.
pub fn bessel_j(z: Complex64, nmax: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); nmax + 1];
    if z.norm() == 0.0 {
        out[0] = Complex64::new(1.0, 0.0);
        return out;
    }
    let mut start = nmax.max(z.norm().ceil() as usize) + 60 + (8.0 * z.norm().sqrt()) as usize;
    start += start % 2;
    let mut vals = vec![Complex64::new(0.0, 0.0); start + 2];
    vals[start] = Complex64::new(1e-30, 0.0);
    for k in (1..=start).rev() {
        let prev = vals[k] * (2.0 * k as f64) / z - vals[k + 1];
        vals[k - 1] = prev;
        if prev.norm() > 1e100 {
            for v in &mut vals[k - 1..] {
                *v *= 1e-100;
            }
        }
    }
    let mut norm = vals[0];
    for k in (2..=start).step_by(2) {
        norm += 2.0 * vals[k];
    }
    for (o, v) in out.iter_mut().zip(&vals) {
        *o = v / norm;
    }
    out
}

/// `J_n(z)` for any integer `n` from a table of non-negative orders.
pub fn bessel_signed(table: &[Complex64], n: i64) -> Complex64 {
    let v = table.get(n.unsigned_abs() as usize).copied().unwrap_or_default();
    if n < 0 && n % 2 != 0 {
        -v
    } else {
        v
    }
}

/// Power series, adequate for moderate `|z|`.
pub fn bessel_series(z: Complex64, n: usize) -> Complex64 {
    let half = z / 2.0;
    let mut term = Complex64::new(1.0, 0.0);
    for k in 1..=n {
        term *= half / k as f64;
    }
    let mut sum = term;
    let q = -half * half;
    for m in 1..200 {
        term *= q / (m as f64 * (m + n) as f64);
        sum += term;
        if term.norm() < 1e-18 * sum.norm() {
            break;
        }
    }
    sum
}

/// `(-i)^k`.
pub fn minus_i_pow(k: i64) -> Complex64 {
    match k.rem_euclid(4) {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, -1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, 1.0),
    }
}

/// One-period matrix element `<m|U|n>` from the Jacobi-Anger expansion of
/// the kick followed by the free phase. `periodize` adds the images
/// `m - n + j dim` that a discrete angle grid aliases onto each entry.
/// `table` holds `J_0(z)..` for `z = (K + i lambda) / hbar`.
pub fn analytic_element(hbar: f64, dim: usize, m: i64, n: i64, table: &[Complex64], periodize: bool) -> Complex64 {
    let d = dim as i64;
    let diff = m - n;
    let mut kick = minus_i_pow(diff) * bessel_signed(table, diff);
    if periodize {
        for j in 1..4 {
            for image in [diff + j * d, diff - j * d] {
                kick += minus_i_pow(image) * bessel_signed(table, image);
            }
        }
    }
    let phase = -hbar * (m * m) as f64 / 2.0;
    Complex64::from_polar(1.0, phase) * kick
}
