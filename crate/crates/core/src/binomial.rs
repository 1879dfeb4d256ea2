//! Exact binomial coefficients from a Pascal table.

use std::sync::OnceLock;

/// Largest `n` served by the table. `C(128, 64)` still fits in a `u128`.
pub const MAX_N: usize = 128;

fn table() -> &'static Vec<Vec<u128>> {
    static TABLE: OnceLock<Vec<Vec<u128>>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut rows: Vec<Vec<u128>> = Vec::with_capacity(MAX_N + 1);
        for n in 0..=MAX_N {
            let mut row = vec![1u128; n + 1];
            for k in 1..n {
                row[k] = rows[n - 1][k - 1] + rows[n - 1][k];
            }
            rows.push(row);
        }
        rows
    })
}

/// `C(n, k)`, zero when `k > n`. Panics if `n > MAX_N`; degrees are
/// validated against [`MAX_N`] before reaching here.
pub fn binomial(n: u32, k: u32) -> u128 {
    if k > n {
        return 0;
    }
    table()[n as usize][k as usize]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_values() {
        assert_eq!(binomial(0, 0), 1);
        assert_eq!(binomial(4, 2), 6);
        assert_eq!(binomial(20, 10), 184_756);
        assert_eq!(binomial(3, 5), 0);
    }

    #[test]
    fn largest_entry_is_exact() {
        // C(128,64) = 2396...; check via the symmetric recurrence instead of a literal
        let n = MAX_N as u32;
        assert_eq!(binomial(n, 64), binomial(n - 1, 63) + binomial(n - 1, 64));
        assert_eq!(binomial(n, 1), 128);
    }
}
