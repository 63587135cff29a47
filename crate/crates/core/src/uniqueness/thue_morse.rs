/// Thue–Morse bit `k`: parity of the number of ones in binary `k`.
pub fn thue_morse_bit(k: u64) -> u8 {
    (k.count_ones() & 1) as u8
}

/// First `n` bits `0110 1001 1001 0110 …`.
pub fn thue_morse(n: usize) -> Vec<u8> {
    (0..n as u64).map(thue_morse_bit).collect()
}

/// `Σ_{n>=1} t_{n-1} x^{-(n-1)}` with the tail bounded by the geometric series.
/// Returns the truncated value and the bound on what was dropped.
pub fn thue_morse_series(x: f64, terms: usize) -> (f64, f64) {
    let inv = 1.0 / x;
    let mut pow = 1.0;
    let mut sum = 0.0;
    for k in 0..terms as u64 {
        sum += thue_morse_bit(k) as f64 * pow;
        pow *= inv;
    }
    (sum, pow / (1.0 - inv))
}

/// The root on `(G, 2)` of `Σ_{n>=1} t_{n-1} x^{-n+1} = 1`.
pub fn komornik_loreti() -> f64 {
    let g = (1.0 + 5f64.sqrt()) / 2.0;
    // enough terms that the dropped tail is below 1e-16 on the whole bracket
    let terms = (((1.0 - 1.0 / g) * 1e-16).ln() / (1.0 / g).ln()).ceil() as usize;
    let f = |x: f64| thue_morse_series(x, terms).0 - 1.0;
    let (mut lo, mut hi) = (g, 2.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    0.5 * (lo + hi)
}
