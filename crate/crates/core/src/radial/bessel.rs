//! Riccati–Bessel functions `ĵ_J(x) = x j_J(x)` and `n̂_J(x) = -x y_J(x)`.
//!
//! With this sign choice `ĵ_J ~ sin(x - Jπ/2)` and `n̂_J ~ cos(x - Jπ/2)`
//! for large `x`, and `ĵ_{J+1} n̂_J - ĵ_J n̂_{J+1} = -1`.

/// `x ĵ_J(x)` via the power series, upward recurrence or Miller's downward
/// recurrence depending on which is stable.
pub fn riccati_j(j: u32, x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let jf = j as f64;
    if x * x < 2.0 * jf + 3.0 {
        return series_j(j, x);
    }
    if x > jf {
        let (mut f0, mut f1) = (x.sin(), x.sin() / x - x.cos());
        if j == 0 {
            return f0;
        }
        for l in 1..j {
            let f2 = (2 * l + 1) as f64 / x * f1 - f0;
            f0 = f1;
            f1 = f2;
        }
        return f1;
    }
    miller_j(j, x)
}

fn series_j(j: u32, x: f64) -> f64 {
    // x^{J+1}/(2J+1)!! Σ_k (-x²/2)^k / (k! (2J+3)(2J+5)…(2J+2k+1))
    let mut lead = x;
    for l in 1..=j {
        lead *= x / (2 * l + 1) as f64;
    }
    let y = -0.5 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..200 {
        term *= y / (k as f64 * (2 * j + 2 * k + 1) as f64);
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    lead * sum
}

fn miller_j(j: u32, x: f64) -> f64 {
    let start = j + 20 + (40.0 * (j as f64).sqrt()) as u32 + x as u32;
    let mut f_next = 0.0;
    let mut f = 1e-300;
    let mut at_j = 0.0;
    let mut l = start;
    loop {
        if l == j {
            at_j = f;
        }
        if l == 0 {
            break;
        }
        let f_prev = (2 * l + 1) as f64 / x * f - f_next;
        f_next = f;
        f = f_prev;
        l -= 1;
        if f.abs() > 1e250 {
            f *= 1e-250;
            f_next *= 1e-250;
            at_j *= 1e-250;
        }
    }
    // f = unnormalized f_0, f_next = unnormalized f_1
    let (s, c) = x.sin_cos();
    let exact1 = s / x - c;
    if s.abs() > exact1.abs() {
        at_j * s / f
    } else {
        at_j * exact1 / f_next
    }
}

/// `-x y_J(x)` by upward recurrence (always the growing direction).
pub fn riccati_n(j: u32, x: f64) -> f64 {
    let (s, c) = x.sin_cos();
    let (mut f0, mut f1) = (c, c / x + s);
    if j == 0 {
        return f0;
    }
    for l in 1..j {
        let f2 = (2 * l + 1) as f64 / x * f1 - f0;
        f0 = f1;
        f1 = f2;
    }
    f1
}
