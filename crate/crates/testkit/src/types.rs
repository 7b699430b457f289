//! Exact counting with machine integers, for alphabets and blocklengths
//! small enough that nothing overflows `u128`.

pub fn factorial(n: u64) -> u128 {
    (1..=n as u128).product()
}

pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut c: u128 = 1;
    for i in 0..k as u128 {
        c = c * (n as u128 - i) / (i + 1);
    }
    c
}

/// `n! / prod c_i!`.
pub fn multinomial(counts: &[u64]) -> u128 {
    let n: u64 = counts.iter().sum();
    counts.iter().fold(factorial(n), |acc, &c| acc / factorial(c))
}

/// Type-class sizes found by walking every sequence in `[k]^n`, keyed by
/// the count vector.
pub fn class_sizes_by_enumeration(k: usize, n: usize) -> std::collections::BTreeMap<Vec<u64>, u128> {
    let mut out = std::collections::BTreeMap::new();
    let total = k.pow(n as u32);
    for mut code in 0..total {
        let mut counts = vec![0u64; k];
        for _ in 0..n {
            counts[code % k] += 1;
            code /= k;
        }
        *out.entry(counts).or_insert(0) += 1;
    }
    out
}
