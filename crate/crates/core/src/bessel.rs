// SPDX-License-Identifier: Apache-2.0

//! Bessel functions of the first kind of integer order.
//!
//! Small arguments use the ascending power series. Larger arguments use
//! Miller's backward recurrence normalized by `J_0 + 2 sum J_2m = 1`.

use crate::error::{Error, Result};

pub const MAX_ORDER: usize = 64;
pub const MAX_ARGUMENT: f64 = 100.0;

const SERIES_LIMIT: f64 = 12.0;
const RESCALE: f64 = 1e250;

/// `J_k(x)` for `0 <= k <= 64`, `0 <= x <= 100`.
pub fn bessel_j(k: usize, x: f64) -> Result<f64> {
    if k > MAX_ORDER {
        return Err(Error::OutOfRange(format!("Bessel order {k} exceeds {MAX_ORDER}")));
    }
    if !(0.0..=MAX_ARGUMENT).contains(&x) {
        return Err(Error::OutOfRange(format!("Bessel argument {x} outside [0, {MAX_ARGUMENT}]")));
    }
    if x == 0.0 {
        return Ok(if k == 0 { 1.0 } else { 0.0 });
    }
    Ok(if x <= SERIES_LIMIT { ascending_series(k, x) } else { miller(k, x) })
}

fn ascending_series(k: usize, x: f64) -> f64 {
    let half = 0.5 * x;
    let q = half * half;
    let mut term = (1..=k).fold(1.0, |acc, j| acc * half / j as f64);
    let mut sum = term;
    let mut m = 0usize;
    loop {
        m += 1;
        term *= -q / (m as f64 * (m + k) as f64);
        sum += term;
        if m as f64 > half && term.abs() <= 1e-17 * sum.abs().max(1e-300) {
            break;
        }
        if m > 500 {
            break;
        }
    }
    sum
}

fn miller(k: usize, x: f64) -> f64 {
    let top = (k as f64).max(x);
    let mut start = (top + 20.0 + (40.0 * top).sqrt()) as usize;
    start += start % 2;

    let mut next = 0.0; // J_{n+1}
    let mut cur = 1e-30; // J_n
    let mut norm = 0.0;
    let mut wanted = 0.0;
    for n in (1..=start).rev() {
        let prev = 2.0 * n as f64 / x * cur - next;
        next = cur;
        cur = prev;
        // cur now holds J_{n-1}
        if n - 1 == k {
            wanted = cur;
        }
        if (n - 1) % 2 == 0 && n - 1 > 0 {
            norm += 2.0 * cur;
        }
        if cur.abs() > RESCALE {
            cur /= RESCALE;
            next /= RESCALE;
            norm /= RESCALE;
            wanted /= RESCALE;
        }
    }
    norm += cur;
    wanted / norm
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn values_at_origin() {
        assert_eq!(bessel_j(0, 0.0).unwrap(), 1.0);
        for k in 1..=MAX_ORDER {
            assert_eq!(bessel_j(k, 0.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn reference_values() {
        // 30-digit reference values.
        let cases = [
            (0, 1.0, 0.765_197_686_557_966_55),
            (1, 1.0, 0.440_050_585_744_933_52),
            (1, 3.0, 0.339_058_958_525_936_46),
            (3, 6.0, 0.114_768_384_820_775_3),
            (5, 6.0, 0.362_087_074_887_172_39),
            (0, 20.0, 0.167_024_664_340_583_15),
            (1, 20.0, 0.066_833_124_175_850_046),
            (0, 50.0, 0.055_812_327_669_251_815),
            (10, 50.0, -0.113_847_849_149_469_39),
            (50, 50.0, 0.121_409_021_897_615_06),
            (64, 100.0, 0.039_985_069_452_918_338),
        ];
        for (k, x, want) in cases {
            let got = bessel_j(k, x).unwrap();
            assert!((got - want).abs() < 1e-12, "J_{k}({x}) = {got}, want {want}");
        }
    }

    #[test]
    fn series_and_recurrence_agree_at_switch() {
        for k in [0, 1, 2, 5, 13, 30, 64] {
            for x in [11.0, 12.0, 13.0] {
                let a = ascending_series(k, x);
                let b = miller(k, x);
                assert!((a - b).abs() < 1e-11, "k={k} x={x}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn out_of_range() {
        assert!(bessel_j(65, 1.0).is_err());
        assert!(bessel_j(0, 100.5).is_err());
        assert!(bessel_j(0, -1.0).is_err());
    }
}
