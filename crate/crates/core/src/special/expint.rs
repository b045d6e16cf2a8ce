//! Exponential integrals Ei(x) (principal value) and E1(x).

use crate::constants::EULER_GAMMA;
use crate::error::{Error, Result};

/// Principal-value exponential integral Ei(x), x != 0.
pub fn ei(x: f64) -> Result<f64> {
    if x == 0.0 || !x.is_finite() {
        return Err(Error::DomainError(x));
    }
    if x < 0.0 {
        return Ok(-e1(-x)?);
    }
    if x <= 40.0 {
        let mut term = 1.0;
        let mut sum = 0.0;
        let mut k = 0.0;
        loop {
            k += 1.0;
            term *= x / k;
            let add = term / k;
            sum += add;
            if add < 1e-17 * sum {
                break;
            }
        }
        Ok(EULER_GAMMA + x.ln() + sum)
    } else {
        // asymptotic series, truncated at its smallest term
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut k = 0.0;
        loop {
            k += 1.0;
            let next = term * k / x;
            if next > term || next < 1e-17 {
                break;
            }
            term = next;
            sum += term;
        }
        Ok(x.exp() / x * sum)
    }
}

/// Exponential integral E1(x) for x > 0.
pub fn e1(x: f64) -> Result<f64> {
    if x <= 0.0 || !x.is_finite() {
        return Err(Error::DomainError(x));
    }
    if x <= 1.0 {
        let mut term = 1.0;
        let mut sum = 0.0;
        let mut k = 0.0;
        loop {
            k += 1.0;
            term *= -x / k;
            let add = term / k;
            sum += add;
            if add.abs() < 1e-17 * sum.abs().max(1e-300) {
                break;
            }
        }
        Ok(-EULER_GAMMA - x.ln() - sum)
    } else {
        // modified Lentz evaluation of the continued fraction
        let tiny = 1e-300;
        let mut b = x + 1.0;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..1000 {
            let an = -(i as f64) * (i as f64);
            b += 2.0;
            d = 1.0 / (an * d + b);
            c = b + an / c;
            let del = c * d;
            h *= del;
            if (del - 1.0).abs() < 1e-16 {
                return Ok(h * (-x).exp());
            }
        }
        Err(Error::NoConvergence { iterations: 1000 })
    }
}
