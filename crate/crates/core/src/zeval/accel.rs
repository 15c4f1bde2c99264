//! Sequence acceleration for slowly converging bracket sequences.

/// Levin u-transform of order `k` applied to `s[n-k..=n]` for every `n`
/// with enough history, giving one estimate per position (`None` where the
/// transform is undefined).
///
/// `beta` shifts the index in the remainder model; for samples at
/// `b_n = b_0 + nΔ` the natural choice is `b_0 / Δ`.
pub fn levin_u(s: &[f64], k: usize, beta: f64) -> Vec<Option<f64>> {
    let mut out = vec![None; s.len()];
    // uses s[n - k .. = n] and the differences s[m] - s[m-1], so n - k >= 1
    for (n, slot) in out.iter_mut().enumerate().skip(k + 1) {
        let first = n - k;
        let mut num = 0.0;
        let mut den = 0.0;
        let mut scale = 0.0;
        let mut defined = true;
        let mut binom = 1.0;
        for j in 0..=k {
            let m = first + j;
            let a = s[m] - s[m - 1];
            let idx = beta + m as f64;
            let omega = idx * a;
            if omega == 0.0 || !omega.is_finite() {
                defined = false;
                break;
            }
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            let weight = (idx / (beta + (first + k) as f64)).powi(k as i32 - 1);
            let c = sign * binom * weight / omega;
            num += c * s[m];
            den += c;
            scale += c.abs();
            binom = binom * (k - j) as f64 / (j + 1) as f64;
        }
        // a vanishing denominator means the remainder model does not fit,
        // e.g. linear divergence
        if defined && den.abs() > 1e-10 * scale {
            let v = num / den;
            if v.is_finite() {
                *slot = Some(v);
            }
        }
    }
    out
}

/// Repeated Aitken Δ² on the whole sequence, `passes` times.
pub fn iterated_aitken(s: &[f64], passes: usize) -> Vec<f64> {
    let mut cur = s.to_vec();
    for _ in 0..passes {
        if cur.len() < 3 {
            break;
        }
        cur = cur
            .windows(3)
            .map(|w| {
                let d1 = w[1] - w[0];
                let d2 = w[2] - w[1];
                let den = d2 - d1;
                if den == 0.0 {
                    w[2]
                } else {
                    w[2] - d2 * d2 / den
                }
            })
            .collect();
    }
    cur
}
