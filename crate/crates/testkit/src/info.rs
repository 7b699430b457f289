/// `-x log2 x`, 0 at 0.
pub fn plogp(x: f64) -> f64 {
    if x > 0.0 {
        -x * x.log2()
    } else {
        0.0
    }
}

pub fn entropy(p: &[f64]) -> f64 {
    p.iter().map(|&x| plogp(x)).sum()
}

/// Binary entropy.
pub fn h2(x: f64) -> f64 {
    plogp(x) + plogp(1.0 - x)
}

/// `D(p || q)` in bits; `+inf` when `p` leaves the support of `q`.
pub fn kl(p: &[f64], q: &[f64]) -> f64 {
    let mut d = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        if a <= 0.0 {
            continue;
        }
        if b <= 0.0 {
            return f64::INFINITY;
        }
        d += a * (a / b).log2();
    }
    d
}

pub fn tv(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// `H(Y | X)` of a row-major `|X| x |Y|` joint table.
pub fn conditional_entropy(joint: &[f64], x_size: usize) -> f64 {
    let y_size = joint.len() / x_size;
    let mut h = 0.0;
    for x in 0..x_size {
        let row = &joint[x * y_size..(x + 1) * y_size];
        let px: f64 = row.iter().sum();
        if px > 0.0 {
            h += row.iter().map(|&v| plogp(v / px)).sum::<f64>() * px;
        }
    }
    h
}
