mod common;

use common::{random_copy_instance, to_core};
use gwht_core::exponents::{exponent_e0, exponent_e1, exponent_e2, theta_star};
use gwht_core::rng::stream_rng;
use gwht_testkit::exponents::{CopyInstance, GridSpec};

const E01_GRID: GridSpec = GridSpec { points: 65, zooms: 4 };
const E2_GRID: GridSpec = GridSpec { points: 49, zooms: 3 };

fn compare(inst: &CopyInstance, tol: f64) {
    let (hyp, chan, rates) = to_core(inst);
    // Both detectors see the same law, so the divergence oracles are shared.
    let (o0, d1, o2) = (inst.e0(E01_GRID), inst.e1_divergence(E01_GRID), inst.e2(E2_GRID));
    for j in [1, 2] {
        let e0 = exponent_e0(&hyp, &chan, j, None).unwrap();
        let e1 = exponent_e1(&hyp, &chan, &rates, j, None).unwrap();
        let e2 = exponent_e2(&hyp, &chan, &rates, j, None).unwrap();
        let o1 = d1 + inst.e1_rate_term(j);
        assert!((e0.value - o0).abs() < tol, "E0 {} vs oracle {o0} on {inst:?}", e0.value);
        assert!((e1.value - o1).abs() < tol, "E1 {} vs oracle {o1} on {inst:?}", e1.value);
        assert!((e2.value - o2).abs() < tol, "E2 {} vs oracle {o2} on {inst:?}", e2.value);
        let t = theta_star(&hyp, &chan, &rates, j, None).unwrap();
        assert_eq!(t.theta_star, e0.value.min(e1.value).min(e2.value));
    }
}

#[test]
fn flipped_side_information_matches_grid() {
    let inst = CopyInstance {
        px: [0.5, 0.5],
        z_null: [[0.85, 0.15], [0.15, 0.85]],
        z_alt: [[0.15, 0.85], [0.85, 0.15]],
        y_given_x: [[0.9, 0.1], [0.1, 0.9]],
        r: [0.4, 0.3, 0.3],
        rt: [0.1, 0.05, 0.05],
    };
    compare(&inst, 0.01);
}

#[test]
fn random_binary_instances_match_grid() {
    let mut rng = stream_rng(20, 0);
    for _ in 0..8 {
        compare(&random_copy_instance(&mut rng), 0.02);
    }
}
