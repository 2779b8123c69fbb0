use crate::error::{Error, Result};

/// Largest `n_max` accepted for the weight-12 form.
pub const TAU_CAP: usize = 10_000;

/// Ramanujan `τ(n)` for `0 ≤ n ≤ n_max` (`τ(0) = 0`).
///
/// `Δ = q·J⁸` with `J = ∏(1 − qⁿ)³ = Σ_k (−1)^k (2k+1) q^{k(k+1)/2}`; the
/// eighth power is built by repeated multiplication with the sparse series,
/// `O(n_max^{3/2})` operations in total.
pub fn tau_table(n_max: usize) -> Result<Vec<i128>> {
    if n_max == 0 || n_max > TAU_CAP {
        return Err(Error::InvalidArgument(format!(
            "tau table size must lie in 1..={TAU_CAP}, got {n_max}"
        )));
    }
    let len = n_max; // coefficients of q^0 .. q^{n_max−1} in J⁸
    let mut sparse: Vec<(usize, i128)> = Vec::new();
    let mut k = 0usize;
    while k * (k + 1) / 2 < len {
        let sign = if k % 2 == 0 { 1 } else { -1 };
        sparse.push((k * (k + 1) / 2, sign * (2 * k as i128 + 1)));
        k += 1;
    }
    let mut acc = vec![0i128; len];
    for &(e, c) in &sparse {
        acc[e] = c;
    }
    for _ in 1..8 {
        let mut next = vec![0i128; len];
        for (i, &a) in acc.iter().enumerate() {
            if a == 0 {
                continue;
            }
            for &(e, c) in &sparse {
                if i + e >= len {
                    break;
                }
                next[i + e] += a * c;
            }
        }
        acc = next;
    }
    let mut tau = vec![0i128; n_max + 1];
    tau[1..].copy_from_slice(&acc);
    Ok(tau)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// `q ∏_{n ≤ M} (1 − qⁿ)^{24}` expanded by repeated dense multiplication.
    fn naive_delta(m: usize) -> Vec<i128> {
        let mut series = vec![0i128; m + 1];
        series[0] = 1;
        for n in 1..=m {
            for _ in 0..24 {
                for i in (n..=m).rev() {
                    series[i] -= series[i - n];
                }
            }
        }
        let mut tau = vec![0i128; m + 1];
        tau[1..].copy_from_slice(&series[..m]);
        tau
    }

    #[test]
    fn small_values_against_product_expansion() {
        let t = tau_table(60).unwrap();
        assert_eq!(t, naive_delta(60));
        assert_eq!(t[1], 1);
        assert_eq!(t[2], -24);
        assert_eq!(t[3], 252);
        assert_eq!(t[6], t[2] * t[3]);
    }

    #[test]
    fn hecke_relations_at_cap() {
        let t = tau_table(TAU_CAP).unwrap();
        assert_eq!(t[4], t[2] * t[2] - (1 << 11));
        for p in [2usize, 3, 97, 9973] {
            assert!((t[p] as f64).abs() <= 2.0 * (p as f64).powf(5.5));
        }
        assert_eq!(t[7 * 11 * 13], t[7] * t[11] * t[13]);
        assert_eq!(t[101 * 97], t[101] * t[97]);
        let p: i128 = 7;
        assert_eq!(t[343], t[7] * t[49] - p.pow(11) * t[7]);
        assert!(tau_table(TAU_CAP + 1).is_err());
    }
}
