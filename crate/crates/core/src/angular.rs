//! Angular-momentum algebra for integer spins.
//!
//! Wigner 3j symbols are evaluated with the Racah series in exact integer
//! arithmetic and rounded to `f64` once at the end, so large quantum numbers
//! (partial waves up to [`MAX_J`]) do not suffer from cancellation.
//! Condon–Shortley phases are used throughout.

use std::sync::OnceLock;

use num_bigint::{BigInt, Sign};
use num_complex::Complex64;
use num_traits::{One, ToPrimitive, Zero};

use crate::{Error, Result};

/// Largest angular momentum accepted by [`three_j`].
pub const MAX_J: u32 = 300;

const FACTORIAL_TABLE_LEN: usize = 3 * MAX_J as usize + 2;

fn factorials() -> &'static [BigInt] {
    static TABLE: OnceLock<Vec<BigInt>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut table = Vec::with_capacity(FACTORIAL_TABLE_LEN);
        let mut acc = BigInt::one();
        table.push(acc.clone());
        for n in 1..FACTORIAL_TABLE_LEN {
            acc *= n;
            table.push(acc.clone());
        }
        table
    })
}

fn fact(n: i64) -> &'static BigInt {
    &factorials()[n as usize]
}

/// `num / den` rounded to the nearest `f64`, for positive big integers of
/// arbitrary size.
fn ratio_to_f64(num: &BigInt, den: &BigInt) -> f64 {
    if num.is_zero() {
        return 0.0;
    }
    let shift = 80 + den.bits() as i64 - num.bits() as i64;
    let quotient = if shift >= 0 {
        (num << shift as usize) / den
    } else {
        num / (den << (-shift) as usize)
    };
    let mantissa = quotient.to_f64().unwrap_or(f64::INFINITY);
    scale_by_pow2(mantissa, -shift)
}

fn scale_by_pow2(mut x: f64, mut exp: i64) -> f64 {
    while exp > 1000 {
        x *= 2f64.powi(1000);
        exp -= 1000;
    }
    while exp < -1000 {
        x *= 2f64.powi(-1000);
        exp += 1000;
    }
    x * 2f64.powi(exp as i32)
}

fn triangle(j1: i64, j2: i64, j3: i64) -> bool {
    j3 >= (j1 - j2).abs() && j3 <= j1 + j2
}

/// Wigner 3j symbol `(j1 j2 j3; m1 m2 m3)` for integer arguments.
///
/// Returns zero whenever the selection rules (triangle condition, vanishing
/// projection sum, parity of `j1+j2+j3` for all-zero projections) forbid it.
pub fn three_j(j1: u32, j2: u32, j3: u32, m1: i32, m2: i32, m3: i32) -> Result<f64> {
    if j1.max(j2).max(j3) > MAX_J {
        return Err(Error::Domain(format!(
            "3j symbol with j = ({j1}, {j2}, {j3}) exceeds the supported maximum {MAX_J}"
        )));
    }
    let (j1, j2, j3) = (j1 as i64, j2 as i64, j3 as i64);
    let (m1, m2, m3) = (m1 as i64, m2 as i64, m3 as i64);
    if m1.abs() > j1 || m2.abs() > j2 || m3.abs() > j3 {
        return Err(Error::Domain(format!(
            "projection out of range in 3j ({j1} {j2} {j3}; {m1} {m2} {m3})"
        )));
    }
    if m1 + m2 + m3 != 0 || !triangle(j1, j2, j3) {
        return Ok(0.0);
    }
    if m1 == 0 && m2 == 0 && m3 == 0 && (j1 + j2 + j3) % 2 == 1 {
        return Ok(0.0);
    }

    let k_min = 0.max(j2 - j3 - m1).max(j1 - j3 + m2);
    let k_max = (j1 + j2 - j3).min(j1 - m1).min(j2 + m2);
    let big_j = j1 + j2 + j3;

    // Every denominator of the Racah series is a product of factorials whose
    // arguments add up to j1+j2+j3, so (j1+j2+j3)!/denominator is an integer.
    let mut series = BigInt::zero();
    for k in k_min..=k_max {
        let den = fact(k)
            * fact(j3 - j2 + k + m1)
            * fact(j3 - j1 + k - m2)
            * fact(j1 + j2 - j3 - k)
            * fact(j1 - k - m1)
            * fact(j2 - k + m2);
        let term = fact(big_j) / den;
        if k % 2 == 0 {
            series += term;
        } else {
            series -= term;
        }
    }
    if series.is_zero() {
        return Ok(0.0);
    }

    let triangle_num = fact(j1 + j2 - j3) * fact(j1 - j2 + j3) * fact(-j1 + j2 + j3);
    let projections = fact(j1 + m1)
        * fact(j1 - m1)
        * fact(j2 + m2)
        * fact(j2 - m2)
        * fact(j3 + m3)
        * fact(j3 - m3);
    let num = triangle_num * projections * (&series * &series);
    let den = fact(big_j + 1) * fact(big_j) * fact(big_j);
    let magnitude = ratio_to_f64(&num, &den).sqrt();

    let phase_negative = (j1 - j2 - m3).rem_euclid(2) == 1;
    let series_negative = series.sign() == Sign::Minus;
    Ok(if phase_negative ^ series_negative {
        -magnitude
    } else {
        magnitude
    })
}

/// `(j1 j2 j3; 0 0 0)`, the geometric factor of the partial-wave reduction.
pub fn three_j_zero(j1: u32, j2: u32, j3: u32) -> Result<f64> {
    three_j(j1, j2, j3, 0, 0, 0)
}

/// General Clebsch–Gordan coefficient `⟨j1 m1, j2 m2 | J M⟩`.
pub fn clebsch_gordan_general(j1: u32, m1: i32, j2: u32, m2: i32, j: u32, m: i32) -> Result<f64> {
    let phase = if (j1 as i64 - j2 as i64 + m as i64).rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    };
    Ok(phase * f64::from(2 * j + 1).sqrt() * three_j(j1, j2, j, m1, m2, -m)?)
}

/// `⟨S M | 1 m1, 1 m2⟩` for two spin-1 atoms coupled to total spin `S ≤ 2`.
pub fn clebsch_gordan(s: u32, m: i32, m1: i32, m2: i32) -> Result<f64> {
    if s > 2 || m.unsigned_abs() > s || m1.abs() > 1 || m2.abs() > 1 {
        return Err(Error::Domain(format!(
            "spin-1 coupling needs |m1|,|m2| ≤ 1 and |M| ≤ S ≤ 2, got S={s} M={m} m1={m1} m2={m2}"
        )));
    }
    if m != m1 + m2 {
        return Ok(0.0);
    }
    Ok(spin_one_table()[s as usize][(m + 2) as usize][(m1 + 1) as usize][(m2 + 1) as usize])
}

type SpinOneTable = [[[[f64; 3]; 3]; 5]; 3];

/// All `⟨S M|1 m1, 1 m2⟩`, indexed `[S][M+2][m1+1][m2+1]`.
pub(crate) fn spin_one_table() -> &'static SpinOneTable {
    static TABLE: OnceLock<SpinOneTable> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = [[[[0.0; 3]; 3]; 5]; 3];
        for s in 0..=2u32 {
            for m1 in -1..=1i32 {
                for m2 in -1..=1i32 {
                    let m = m1 + m2;
                    if m.unsigned_abs() > s {
                        continue;
                    }
                    t[s as usize][(m + 2) as usize][(m1 + 1) as usize][(m2 + 1) as usize] =
                        clebsch_gordan_general(1, m1, 1, m2, s, m)
                            .expect("spin-1 quantum numbers are in range");
                }
            }
        }
        t
    })
}

/// Reduced Wigner matrix element `d^j_{m' m}(θ)` from Wigner's finite sum.
///
/// Intended for the small spins of the collision complex (`j ≤ 10`).
pub fn wigner_small_d(j: u32, mp: i32, m: i32, theta: f64) -> Result<f64> {
    if j > 10 || mp.unsigned_abs() > j || m.unsigned_abs() > j {
        return Err(Error::Domain(format!(
            "d^{j}_{{{mp},{m}}} outside the supported range"
        )));
    }
    let f = |n: i64| -> f64 { (1..=n).map(|x| x as f64).product() };
    let (j, mp, m) = (j as i64, mp as i64, m as i64);
    let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    let norm = (f(j + mp) * f(j - mp) * f(j + m) * f(j - m)).sqrt();
    let s_min = 0.max(m - mp);
    let s_max = (j + m).min(j - mp);
    let mut total = 0.0;
    for k in s_min..=s_max {
        let sign = if (mp - m + k) % 2 == 0 { 1.0 } else { -1.0 };
        let den = f(j + m - k) * f(k) * f(mp - m + k) * f(j - mp - k);
        total += sign * norm / den
            * c.powi((2 * j + m - mp - 2 * k) as i32)
            * s.powi((mp - m + 2 * k) as i32);
    }
    Ok(total)
}

/// Wigner rotation matrix element `D^j_{m' m}(φ, θ, 0) = e^{-i m' φ} d^j_{m' m}(θ)`.
pub fn wigner_big_d(j: u32, mp: i32, m: i32, phi: f64, theta: f64) -> Result<Complex64> {
    let d = wigner_small_d(j, mp, m, theta)?;
    Ok(Complex64::from_polar(d, -(mp as f64) * phi))
}

/// Spin-1 reduced rotation matrix `d¹_{M' M}(θ)` for a rotation about the
/// laboratory Y axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedRotation {
    pub theta: f64,
    /// `entries[M'+1][M+1] = d¹_{M' M}(θ)`.
    pub entries: [[f64; 3]; 3],
}

impl ReducedRotation {
    pub fn get(&self, mp: i32, m: i32) -> f64 {
        self.entries[(mp + 1) as usize][(m + 1) as usize]
    }

    /// Rotates a spin-1 amplitude vector ordered `M = -1, 0, 1`.
    pub fn apply(&self, v: &[Complex64; 3]) -> [Complex64; 3] {
        let mut out = [Complex64::zero(); 3];
        for (row, o) in self.entries.iter().zip(out.iter_mut()) {
            *o = row.iter().zip(v).map(|(d, x)| x * d).sum();
        }
        out
    }

    pub fn compose(&self, other: &ReducedRotation) -> [[f64; 3]; 3] {
        let mut out = [[0.0; 3]; 3];
        for i in 0..3 {
            for k in 0..3 {
                out[i][k] = (0..3).map(|j| self.entries[i][j] * other.entries[j][k]).sum();
            }
        }
        out
    }
}

/// Closed-form spin-1 reduced Wigner matrix.
pub fn wigner_d1(theta: f64) -> ReducedRotation {
    let (c, s) = (theta.cos(), theta.sin());
    let r = s / std::f64::consts::SQRT_2;
    let p = (1.0 + c) / 2.0;
    let q = (1.0 - c) / 2.0;
    // rows M' = -1, 0, 1; columns M = -1, 0, 1
    ReducedRotation {
        theta,
        entries: [[p, r, q], [-r, c, r], [q, -r, p]],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    #[test]
    fn spin_one_coupling_matches_closed_forms() {
        assert!((clebsch_gordan(2, 2, 1, 1).unwrap() - 1.0).abs() < 1e-15);
        assert!((clebsch_gordan(1, 1, 1, 0).unwrap() - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((clebsch_gordan(0, 0, 0, 0).unwrap() + 1.0 / 3f64.sqrt()).abs() < 1e-15);
        assert!((clebsch_gordan(1, 1, 0, 1).unwrap() + FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((clebsch_gordan(2, 0, 0, 0).unwrap() - 2.0 / 6f64.sqrt()).abs() < 1e-15);
        assert_eq!(clebsch_gordan(2, 1, 1, 1).unwrap(), 0.0);
    }

    #[test]
    fn coupling_rejects_out_of_range() {
        assert!(clebsch_gordan(3, 0, 0, 0).is_err());
        assert!(clebsch_gordan(1, 2, 1, 1).is_err());
        assert!(clebsch_gordan(1, 0, 2, -2).is_err());
    }

    #[test]
    fn three_j_trivial_values() {
        assert_eq!(three_j(0, 0, 0, 0, 0, 0).unwrap(), 1.0);
        assert_eq!(three_j(1, 1, 1, 0, 0, 0).unwrap(), 0.0);
        assert_eq!(three_j(1, 1, 3, 0, 0, 0).unwrap(), 0.0);
        assert_eq!(three_j(2, 1, 1, 1, 1, -1).unwrap(), 0.0);
    }

    #[test]
    fn three_j_rejects_huge_or_invalid() {
        assert!(three_j(MAX_J + 1, 1, MAX_J, 0, 0, 0).is_err());
        assert!(three_j(1, 1, 1, 2, -1, -1).is_err());
    }

    #[test]
    fn three_j_large_j_is_finite_and_normalized() {
        // Σ_{j3} (2 j3 + 1) (j1 j2 j3; 0 0 0)² = 1
        let (j1, j2) = (170, 130);
        let total: f64 = (40..=300)
            .map(|j3| (2 * j3 + 1) as f64 * three_j_zero(j1, j2, j3).unwrap().powi(2))
            .sum();
        assert!((total - 1.0).abs() < 1e-12, "{total}");
    }

    #[test]
    fn d1_special_angles() {
        let id = wigner_d1(0.0);
        for i in 0..3 {
            for k in 0..3 {
                assert_eq!(id.entries[i][k], if i == k { 1.0 } else { 0.0 });
            }
        }
        assert!(wigner_d1(PI / 2.0).get(0, 0).abs() < 1e-15);
        assert!((wigner_d1(PI).get(1, -1) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn d1_agrees_with_general_formula() {
        for &theta in &[0.3, 1.1, 2.9, -0.7] {
            let d = wigner_d1(theta);
            for mp in -1..=1 {
                for m in -1..=1 {
                    let g = wigner_small_d(1, mp, m, theta).unwrap();
                    assert!((g - d.get(mp, m)).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn d2_is_orthogonal() {
        let theta = 0.83;
        for m in -2..=2 {
            for n in -2..=2 {
                let dot: f64 = (-2..=2)
                    .map(|k| wigner_small_d(2, k, m, theta).unwrap() * wigner_small_d(2, k, n, theta).unwrap())
                    .sum();
                assert!((dot - if m == n { 1.0 } else { 0.0 }).abs() < 1e-14);
            }
        }
    }
}
