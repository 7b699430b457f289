mod common;

use common::{ax, random_pmf, random_row};
use gwht_core::osrb::{aleph_exponent, empirical_osrb_tv, exhaustive_osrb_tv, zeta_exponent, BinningSpec};
use gwht_core::prob::{CondPmf, JointPmf, Pmf};
use gwht_core::rng::stream_rng;
use gwht_core::types::NType;
use gwht_core::DEFAULT_ENUMERATION_BUDGET;
use gwht_testkit::osrb::{aleph_binary, exhaustive_mean_tv, zeta_binary};
use rand::Rng;

fn bsc(eps: f64) -> [[f64; 2]; 2] {
    [[1.0 - eps, eps], [eps, 1.0 - eps]]
}

fn chan(rows: [[f64; 2]; 2]) -> CondPmf {
    CondPmf::new(vec![ax("X", 2)], vec![ax("Y1", 2)], rows.concat()).unwrap()
}

/// Two binary sources correlated through `X`, as a table on `(Y1, Y2, X)`.
fn two_source_table() -> Vec<f64> {
    let px = [0.6, 0.4];
    let (a, b) = (bsc(0.1), bsc(0.3));
    let mut w = vec![0.0; 8];
    for y1 in 0..2 {
        for y2 in 0..2 {
            for x in 0..2 {
                w[4 * y1 + 2 * y2 + x] = px[x] * a[x][y1] * b[x][y2];
            }
        }
    }
    w
}

#[test]
fn exhaustive_golden_case_matches_brute_force() {
    let w = two_source_table();
    let src = JointPmf::new(vec![ax("Y1", 2), ax("Y2", 2), ax("X", 2)], w.clone()).unwrap();
    let spec = BinningSpec::new(vec![0.5, 0.5], 2).unwrap();
    assert_eq!(spec.bin_counts(), vec![2, 2]);
    let core = exhaustive_osrb_tv(&spec, &src, DEFAULT_ENUMERATION_BUDGET).unwrap();
    let oracle = exhaustive_mean_tv(&w, &[2, 2], 2, 2, &[2, 2]);
    assert!((core - oracle).abs() < 1e-12, "{core} vs {oracle}");

    let mc = empirical_osrb_tv(&spec, &src, 20_000, 7, DEFAULT_ENUMERATION_BUDGET).unwrap();
    assert!((mc.mean_tv - oracle).abs() < 4.0 * mc.stderr, "{mc:?} vs {oracle}");
}

#[test]
fn single_source_exhaustive_matches_brute_force() {
    let px = [0.3, 0.7];
    let c = bsc(0.2);
    let w: Vec<f64> = (0..4).map(|k| px[k % 2] * c[k % 2][k / 2]).collect();
    let src = JointPmf::new(vec![ax("Y1", 2), ax("X", 2)], w.clone()).unwrap();
    for (n, rate) in [(1, 1.0), (2, 0.5), (3, 0.34)] {
        let spec = BinningSpec::new(vec![rate], n).unwrap();
        let m = spec.bin_counts()[0] as usize;
        let core = exhaustive_osrb_tv(&spec, &src, DEFAULT_ENUMERATION_BUDGET).unwrap();
        let oracle = exhaustive_mean_tv(&w, &[2], 2, n as usize, &[m]);
        assert!((core - oracle).abs() < 1e-12, "n = {n}: {core} vs {oracle}");
    }
}

#[test]
fn zeta_matches_grid() {
    for (px0, eps, rate, n) in [(0.5, 0.1, 0.0, 16), (0.5, 0.1, 0.25, 64), (0.3, 0.2, 0.1, 200), (0.7, 0.05, 0.0, 1000)] {
        let p_x = Pmf::new(ax("X", 2), vec![px0, 1.0 - px0]).unwrap();
        let spec = BinningSpec::new(vec![rate], n).unwrap();
        let core = zeta_exponent(&spec, &p_x, &chan(bsc(eps))).unwrap();
        let oracle = zeta_binary(px0, bsc(eps), rate, n, 33, 5);
        assert!((core.value - oracle).abs() < 0.02, "n = {n}: {} vs {oracle}", core.value);
        assert_eq!(core.negative, core.value < 0.0);
    }
}

#[test]
fn aleph_matches_grid() {
    let mut rng = stream_rng(41, 0);
    for n in [16u64, 100, 1000] {
        let xz = [random_row(&mut rng, 0.1, 0.9), random_row(&mut rng, 0.1, 0.9)];
        let yx = [random_row(&mut rng, 0.05, 0.95), random_row(&mut rng, 0.05, 0.95)];
        let rate = 0.1;
        let z_type = NType::new(ax("Z", 2), vec![n / 2, n - n / 2]).unwrap();
        let x_given_z = CondPmf::new(vec![ax("Z", 2)], vec![ax("X", 2)], xz.concat()).unwrap();
        let spec = BinningSpec::new(vec![rate], n).unwrap();
        let core = aleph_exponent(&spec, &z_type, &x_given_z, &chan(yx)).unwrap();
        let f = z_type.frequencies();
        let oracle = aleph_binary([f[0], f[1]], xz, yx, rate, n, 17, 5);
        assert!((core.value - oracle).abs() < 0.02, "n = {n}: {} vs {oracle}", core.value);
    }
}

#[test]
fn aleph_with_trivial_side_information_is_zeta() {
    let mut rng = stream_rng(42, 0);
    for _ in 0..10 {
        let kx = rng.random_range(2..=4);
        let px = random_pmf(&mut rng, kx, 0.05);
        let rows: Vec<f64> = (0..kx).flat_map(|_| random_pmf(&mut rng, 3, 0.02)).collect();
        let c = CondPmf::new(vec![ax("X", kx)], vec![ax("Y1", 3)], rows).unwrap();
        let n = 20;
        let spec = BinningSpec::new(vec![0.3], n).unwrap();
        let p_x = Pmf::new(ax("X", kx), px.clone()).unwrap();
        let zeta = zeta_exponent(&spec, &p_x, &c).unwrap();
        let z_type = NType::new(ax("Z", 1), vec![n]).unwrap();
        let x_given_z = CondPmf::new(vec![ax("Z", 1)], vec![ax("X", kx)], px).unwrap();
        let aleph = aleph_exponent(&spec, &z_type, &x_given_z, &c).unwrap();
        assert_eq!(aleph.value, zeta.value);
    }
}

#[test]
fn measured_exponent_respects_the_lower_bound() {
    let p_x = Pmf::new(ax("X", 2), vec![0.5, 0.5]).unwrap();
    let c = bsc(0.1);
    let w: Vec<f64> = (0..4).map(|k| 0.5 * c[k % 2][k / 2]).collect();
    let src = JointPmf::new(vec![ax("Y1", 2), ax("X", 2)], w).unwrap();
    let spec = BinningSpec::new(vec![0.25], 4).unwrap();
    let zeta = zeta_exponent(&spec, &p_x, &chan(c)).unwrap();
    let mc = empirical_osrb_tv(&spec, &src, 2000, 3, DEFAULT_ENUMERATION_BUDGET).unwrap();
    assert!(mc.mean_tv > 0.0 && mc.mean_tv <= 1.0);
    assert!(mc.exponent() >= zeta.value - 0.05, "{} vs {}", mc.exponent(), zeta.value);
}
