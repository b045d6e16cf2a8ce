//! Integer-order Bessel functions J_n, I_n and K_n of real argument.
//!
//! J_n uses the ascending series for small arguments and Miller's backward
//! recurrence otherwise. K_n uses the logarithmic series for x <= 2 and a
//! trapezoidal sum of `K_n(x) = int_0^inf exp(-x cosh t) cosh(n t) dt` above,
//! which converges geometrically for analytic integrands. Higher orders of K
//! come from the (stable) upward recurrence.

use crate::constants::EULER_GAMMA;

const SERIES_LIMIT_J: f64 = 5.0;
const SERIES_LIMIT_K: f64 = 2.0;

/// Bessel function of the first kind J_n(x).
pub fn bessel_j(n: u32, x: f64) -> f64 {
    if x < 0.0 {
        let v = bessel_j(n, -x);
        return if n.is_multiple_of(2) { v } else { -v };
    }
    if x <= SERIES_LIMIT_J {
        j_series(n, x)
    } else {
        j_miller(n, x)
    }
}

/// Modified Bessel function of the first kind I_n(x), x >= 0.
pub fn bessel_i(n: u32, x: f64) -> f64 {
    // all terms positive: no cancellation
    let half = 0.5 * x;
    let q = half * half;
    let mut term = half.powi(n as i32) / factorial(n);
    let mut sum = term;
    let mut k = 0.0;
    loop {
        k += 1.0;
        term *= q / (k * (k + n as f64));
        sum += term;
        if term < sum * 1e-17 {
            return sum;
        }
    }
}

/// Modified Bessel function of the second kind K_n(x), x > 0.
pub fn bessel_k(n: u32, x: f64) -> f64 {
    debug_assert!(x > 0.0);
    let (k0, k1) = if x <= SERIES_LIMIT_K {
        (k_series(0, x), k_series(1, x))
    } else {
        (k_integral(0, x), k_integral(1, x))
    };
    match n {
        0 => k0,
        1 => k1,
        _ => {
            let (mut km, mut k) = (k0, k1);
            for m in 1..n {
                let kp = km + 2.0 * m as f64 / x * k;
                km = k;
                k = kp;
            }
            k
        }
    }
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

pub(crate) fn j_series(n: u32, x: f64) -> f64 {
    let half = 0.5 * x;
    let q = -half * half;
    let mut term = half.powi(n as i32) / factorial(n);
    let mut sum = term;
    let mut k = 0.0;
    loop {
        k += 1.0;
        term *= q / (k * (k + n as f64));
        sum += term;
        if term.abs() <= sum.abs() * 1e-17 || term == 0.0 {
            return sum;
        }
    }
}

/// Miller's algorithm normalised by `J_0 + 2 sum J_2k = 1`.
pub(crate) fn j_miller(n: u32, x: f64) -> f64 {
    if x == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    let big = 1e250;
    let top = (n as f64).max(x);
    let mut start = (top + 30.0 + (50.0 * top).sqrt()) as u32;
    start += start % 2;
    let (mut jp, mut j) = (0.0_f64, 1e-300_f64);
    let mut norm = 0.0;
    let mut wanted = 0.0;
    for k in (1..=start).rev() {
        // j holds J_k, jp holds J_{k+1}; produce J_{k-1}
        let jm = 2.0 * k as f64 / x * j - jp;
        jp = j;
        j = jm;
        if j.abs() > big {
            j /= big;
            jp /= big;
            norm /= big;
            wanted /= big;
        }
        let order = k - 1;
        if order % 2 == 0 && order > 0 {
            norm += 2.0 * j;
        }
        if order == n {
            wanted = j;
        }
    }
    norm += j;
    wanted / norm
}

/// Ascending series (A&S 9.6.11) for n = 0, 1.
pub(crate) fn k_series(n: u32, x: f64) -> f64 {
    let half = 0.5 * x;
    let q = half * half;
    let log_half = half.ln();
    match n {
        0 => {
            let mut term = 1.0;
            let mut psi = -EULER_GAMMA;
            let mut sum = term * psi;
            let mut k = 0.0;
            loop {
                k += 1.0;
                term *= q / (k * k);
                psi += 1.0 / k;
                let add = term * psi;
                sum += add;
                if add.abs() < sum.abs() * 1e-17 {
                    break;
                }
            }
            -log_half * bessel_i(0, x) + sum
        }
        1 => {
            let mut term = 1.0;
            let mut psi1 = -EULER_GAMMA;
            let mut psi2 = 1.0 - EULER_GAMMA;
            let mut sum = term * (psi1 + psi2);
            let mut k = 0.0;
            loop {
                k += 1.0;
                term *= q / (k * (k + 1.0));
                psi1 += 1.0 / k;
                psi2 += 1.0 / (k + 1.0);
                let add = term * (psi1 + psi2);
                sum += add;
                if add.abs() < sum.abs() * 1e-17 {
                    break;
                }
            }
            1.0 / x + log_half * bessel_i(1, x) - 0.5 * half * sum
        }
        _ => unreachable!("series implemented for orders 0 and 1"),
    }
}

/// Trapezoidal sum of the integral representation; accurate for x >~ 0.3.
pub(crate) fn k_integral(n: u32, x: f64) -> f64 {
    // exp(-x (cosh t - 1)) has width ~ 1/sqrt(x) near t = 0
    let h = (0.5 / x.sqrt()).min(0.1);
    let t_max = (1.0 + 46.0 / x).acosh();
    let steps = (t_max / h).ceil() as usize;
    let nu = n as f64;
    let mut sum = 0.5;
    for i in 1..=steps {
        let t = i as f64 * h;
        sum += (-x * (t.cosh() - 1.0)).exp() * (nu * t).cosh();
    }
    sum * h * (-x).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn tabulated_values() {
        // Abramowitz & Stegun tables 9.1 and 9.8
        assert!(rel(bessel_j(0, 1.0), 0.765_197_686_557_966_6) < 1e-14);
        assert!(rel(bessel_j(1, 1.0), 0.440_050_585_744_933_5) < 1e-14);
        assert!(rel(bessel_j(2, 1.0), 0.114_903_484_931_900_5) < 1e-14);
        assert!(rel(bessel_k(0, 1.0), 0.421_024_438_240_708_3) < 1e-14);
        assert!(rel(bessel_k(1, 1.0), 0.601_907_230_197_234_6) < 1e-14);
        assert!(rel(bessel_k(1, 2.0), 0.139_865_881_816_522_4) < 1e-14);
        assert!(rel(bessel_k(0, 5.0), 3.691_098_334_042_594e-3) < 1e-13);
    }

    #[test]
    fn series_and_recurrence_agree_for_j() {
        for n in 0..4 {
            let mut x = 0.3;
            while x < 5.0 {
                let (s, m) = (j_series(n, x), j_miller(n, x));
                assert!(
                    (s - m).abs() < 1e-14 * s.abs().max(1e-3),
                    "n={n} x={x}: {s} {m}"
                );
                x += 0.137;
            }
        }
    }

    #[test]
    fn j_normalisation_sum() {
        for &x in &[0.7, 2.4, 6.5, 13.0, 27.0] {
            let mut s = bessel_j(0, x).powi(2);
            for k in 1..80 {
                s += 2.0 * bessel_j(k, x).powi(2);
            }
            assert!((s - 1.0).abs() < 1e-13, "x={x}: {s}");
        }
    }

    #[test]
    fn series_and_integral_agree_for_k() {
        for n in 0..2 {
            let mut x = 0.3;
            while x < 2.6 {
                let (s, q) = (k_series(n, x), k_integral(n, x));
                assert!(rel(q, s) < 5e-14, "n={n} x={x}: {s} {q}");
                x += 0.11;
            }
        }
    }

    #[test]
    fn wronskian_ik() {
        // I_n K_{n+1} + I_{n+1} K_n = 1/x
        for &x in &[0.05, 0.4, 1.0, 1.9, 2.1, 3.7, 8.0, 15.0, 30.0] {
            for n in 0..2 {
                let w = bessel_i(n, x) * bessel_k(n + 1, x) + bessel_i(n + 1, x) * bessel_k(n, x);
                assert!(rel(w, 1.0 / x) < 1e-13, "x={x} n={n}: {w}");
            }
        }
    }

    #[test]
    fn k_recurrence_for_order_two() {
        let x = 0.9;
        let direct = bessel_k(2, x);
        let rec = bessel_k(0, x) + 2.0 / x * bessel_k(1, x);
        assert!(rel(direct, rec) < 1e-15);
    }
}
