use super::encoder::{encode_b_with, restricted_law, ChannelTable};
use super::*;
use crate::prob::{shannon, Alphabet, CondPmf, JointPmf};
use crate::rng::stream_rng;
use crate::types::Sequence;

fn ax(label: &str) -> Alphabet {
    Alphabet::new(label, 2).unwrap()
}

fn flip(a: usize, b: usize, eps: f64) -> f64 {
    if a == b {
        1.0 - eps
    } else {
        eps
    }
}

/// Uniform `X`, `Z_j = BSC(b_j)(X)`, `S_i = BSC(s)(X)`.
fn source(b: [f64; 2], s: f64) -> JointPmf {
    JointPmf::from_fn(vec![ax("X"), ax("Z1"), ax("Z2"), ax("S1"), ax("S2")], |v| {
        0.5 * flip(v[0], v[1], b[0]) * flip(v[0], v[2], b[1]) * flip(v[0], v[3], s) * flip(v[0], v[4], s)
    })
    .unwrap()
}

fn alt(b: [f64; 2]) -> JointPmf {
    JointPmf::from_fn(vec![ax("X"), ax("Z1"), ax("Z2")], |v| {
        0.5 * flip(v[0], v[1], b[0]) * flip(v[0], v[2], b[1])
    })
    .unwrap()
}

/// One noisy copy `Y = BSC(a)(X)` shared by all three outputs.
fn copy_channel(a: f64) -> CondPmf {
    CondPmf::from_fn(vec![ax("X")], vec![ax("Y0"), ax("Y1"), ax("Y2")], |x, y| {
        if y[0] == y[1] && y[1] == y[2] {
            flip(x[0], y[0], a)
        } else {
            0.0
        }
    })
    .unwrap()
}

/// Three conditionally independent copies.
fn product_channel(a: [f64; 3]) -> CondPmf {
    CondPmf::from_fn(vec![ax("X")], vec![ax("Y0"), ax("Y1"), ax("Y2")], |x, y| {
        (0..3).map(|i| flip(x[0], y[i], a[i])).product()
    })
    .unwrap()
}

fn config(chan: CondPmf, r: [f64; 3], rt: [f64; 3], n: u64) -> ProtocolConfig {
    ProtocolConfig {
        source: source([0.1, 0.1], 0.2),
        alt: alt([0.4, 0.4]),
        chan,
        rates: RateVector::new(r, rt).unwrap(),
        n,
        delta_prime: 0.3,
        seed: 11,
        mode: ProtocolMode::B,
        enumeration_budget: crate::DEFAULT_ENUMERATION_BUDGET,
    }
}

fn seq(bits: &[usize]) -> Sequence {
    Sequence::new(ax("X"), bits.to_vec()).unwrap()
}

#[test]
fn zero_rate_gives_one_bucket() {
    let cfg = config(copy_channel(0.1), [0.0; 3], [0.0; 3], 4);
    let bins = sample_binning(&cfg).unwrap();
    assert_eq!(bins.m_bins(), [1, 1, 1]);
    assert_eq!(bins.mf_bucket(0, 0, 0).len(), 16);
}

#[test]
fn buckets_partition_the_sequences() {
    let cfg = config(product_channel([0.1, 0.2, 0.3]), [0.5, 0.3, 0.4], [0.2, 0.1, 0.3], 4);
    let bins = sample_binning(&cfg).unwrap();
    for i in 0..3 {
        assert_eq!(bins.m_bucket_sizes(i).iter().sum::<usize>(), 16);
        let mut all = Vec::new();
        for m in 0..bins.m_bins()[i] {
            for f in 0..bins.f_bins()[i] {
                all.extend_from_slice(bins.mf_bucket(i, m, f));
            }
        }
        all.sort_unstable();
        assert_eq!(all, (0..16).collect::<Vec<u32>>());
    }
}

#[test]
fn two_bin_bucket_sizes_are_binomial() {
    let mut cfg = config(copy_channel(0.1), [0.25, 0.0, 0.0], [0.0; 3], 4);
    // Tail cells pooled so every expected count is at least 5.
    let mut observed = [0u64; 9];
    for r in 0..1000u64 {
        cfg.seed = r;
        let bins = sample_binning(&cfg).unwrap();
        assert_eq!(bins.m_bins()[0], 2);
        let size = bins.m_bucket_sizes(0)[0];
        observed[size.clamp(4, 12) - 4] += 1;
    }
    let pmf: Vec<f64> = (0..=16u64)
        .map(|k| (0..k).fold(1.0, |c, i| c * (16 - i) as f64 / (i + 1) as f64) / 65536.0)
        .collect();
    let mut expected = [0.0; 9];
    for (k, p) in pmf.iter().enumerate() {
        expected[k.clamp(4, 12) - 4] += 1000.0 * p;
    }
    let chi2: f64 = observed
        .iter()
        .zip(&expected)
        .map(|(&o, &e)| (o as f64 - e).powi(2) / e)
        .sum();
    // Upper 0.001 quantile of chi-square with 8 degrees of freedom.
    assert!(chi2 < 26.124, "chi2 = {chi2}");
}

#[test]
fn single_f_bin_means_plain_channel() {
    let cfg = config(product_channel([0.1, 0.2, 0.3]), [0.5; 3], [0.0; 3], 2);
    let bins = sample_binning(&cfg).unwrap();
    let table = ChannelTable::new(&cfg.chan);
    let x = [0usize, 1];
    let law = restricted_law(&table, &bins, &x, [0; 3]);
    let total: f64 = law.iter().map(|l| l.1).sum();
    assert!((total - 1.0).abs() < 1e-12);
    for (r, p) in law {
        let mut direct = 1.0;
        for i in 0..3 {
            let (y_first, y_second) = (r[i] / 2, r[i] % 2);
            direct *= flip(x[0], y_first, [0.1, 0.2, 0.3][i]) * flip(x[1], y_second, [0.1, 0.2, 0.3][i]);
        }
        assert!((p - direct).abs() < 1e-12);
    }
}

#[test]
fn deterministic_channel_forces_output() {
    let chan = CondPmf::deterministic(vec![ax("X")], vec![ax("Y0"), ax("Y1"), ax("Y2")], |x| x * 7).unwrap();
    let cfg = config(chan, [0.5; 3], [0.5, 0.5, 0.5], 2);
    let bins = sample_binning(&cfg).unwrap();
    let x = seq(&[1, 0]);
    // y_i = x for every i, rank 2.
    let forced = 2usize;
    let mut rng = stream_rng(1, 1);
    for f0 in 0..bins.f_bins()[0] {
        for f1 in 0..bins.f_bins()[1] {
            for f2 in 0..bins.f_bins()[2] {
                let f = [f0, f1, f2];
                let inside = (0..3).all(|i| bins.f_index(i, forced) == f[i]);
                match encode_protocol_b(&cfg, &bins, &x, f, &mut rng) {
                    Ok((e, _)) => {
                        assert!(inside);
                        assert_eq!(e.y_ranks, [forced; 3]);
                    }
                    Err(abort) => {
                        assert!(!inside);
                        assert_eq!(abort.f, f);
                    }
                }
            }
        }
    }
}

fn restricted_frequencies_match(chan: CondPmf) {
    let cfg = config(chan, [0.5; 3], [0.5, 0.5, 0.5], 2);
    let bins = sample_binning(&cfg).unwrap();
    let table = ChannelTable::new(&cfg.chan);
    let x = [1usize, 0];
    let f = (0..8u32)
        .map(|k| [k >> 2 & 1, k >> 1 & 1, k & 1])
        .find(|f| !restricted_law(&table, &bins, &x, *f).is_empty())
        .expect("some f bucket is reachable");
    let law = restricted_law(&table, &bins, &x, f);
    let draws = 10_000;
    let mut rng = stream_rng(5, 0);
    let mut counts = vec![0u64; law.len()];
    for _ in 0..draws {
        let e = encode_b_with(&table, &bins, &x, f, &mut rng).unwrap();
        let k = law.iter().position(|l| l.0 == e.y_ranks).expect("draw lies in the restricted support");
        counts[k] += 1;
        assert!((0..3).all(|i| bins.f_index(i, e.y_ranks[i]) == f[i]));
    }
    let tv: f64 = 0.5
        * law
            .iter()
            .zip(&counts)
            .map(|(l, &c)| (c as f64 / draws as f64 - l.1).abs())
            .sum::<f64>();
    assert!(tv < 0.03, "tv = {tv}");
}

#[test]
fn restricted_sampling_matches_enumeration_product_channel() {
    restricted_frequencies_match(product_channel([0.1, 0.25, 0.4]));
}

#[test]
fn restricted_sampling_matches_enumeration_correlated_channel() {
    let chan = CondPmf::from_fn(vec![ax("X")], vec![ax("Y0"), ax("Y1"), ax("Y2")], |x, y| {
        let agree = y.iter().filter(|&&v| v == x[0]).count();
        [0.05, 0.1, 0.25, 0.6][agree] / [1.0, 3.0, 3.0, 1.0][agree]
    })
    .unwrap();
    restricted_frequencies_match(chan);
}

#[test]
fn untypical_type_rejects() {
    let cfg = config(copy_channel(0.1), [0.3; 3], [0.1, 0.0, 0.0], 4);
    let bins = sample_binning(&cfg).unwrap();
    let x = seq(&[0, 0, 0, 0]);
    let z = Sequence::new(ax("Z1"), vec![0, 0, 0, 0]).unwrap();
    let t = super::encoder::type_index(&cfg, &x, &[0, 0, 0]);
    for m0 in 0..bins.m_bins()[0] {
        for m1 in 0..bins.m_bins()[1] {
            let out = detect_outcome(&cfg, &bins, 1, &z, m0, m1, 0, 0, &t).unwrap();
            assert_eq!(out.decision, 1);
            assert!(!out.type_typical);
        }
    }
}

#[test]
fn true_pair_is_a_witness() {
    let mut cfg = config(copy_channel(0.1), [0.3; 3], [0.1, 0.0, 0.0], 10);
    cfg.delta_prime = 0.2;
    let bins = sample_binning(&cfg).unwrap();
    // x has half ones; y = x except one flip; z = x except one flip.
    let xs = [0, 1, 0, 1, 0, 1, 0, 1, 0, 1];
    let mut ys = xs;
    ys[0] = 1;
    let mut zs = xs;
    zs[3] = 0;
    let x = seq(&xs);
    let y = Sequence::new(ax("Y0"), ys.to_vec()).unwrap();
    let z = Sequence::new(ax("Z1"), zs.to_vec()).unwrap();
    let r = y.rank();
    let t = super::encoder::type_index(&cfg, &x, &[r; 3]);
    let out = detect_outcome(
        &cfg,
        &bins,
        1,
        &z,
        bins.m_index(0, r),
        bins.m_index(1, r),
        bins.f_index(0, r),
        bins.f_index(1, r),
        &t,
    )
    .unwrap();
    assert_eq!(out.decision, 0);
    assert!(out.witness.is_some());
}

#[test]
fn planted_non_sender_witness_is_accepted() {
    let mut cfg = config(copy_channel(0.1), [0.5; 3], [0.0; 3], 6);
    cfg.delta_prime = 0.2;
    let n = 6usize;
    let domain = 64;
    // The sent pair (all zeros) and the planted pair share a bucket; the
    // planted pair is typical with z while the sent one is not.
    let z_bits = [1, 0, 1, 0, 1, 0];
    let planted = Sequence::new(ax("Y0"), z_bits.to_vec()).unwrap().rank();
    let sent = 0usize;
    let mut m_map = vec![1u32; domain];
    m_map[sent] = 0;
    m_map[planted] = 0;
    let bins = BinningRealization::from_maps(
        n as u64,
        [2, 2, 2],
        [2, 2, 2],
        [1, 1, 1],
        [m_map.clone(), m_map.clone(), m_map],
        [vec![0; domain], vec![0; domain], vec![0; domain]],
    )
    .unwrap();
    // A typical (x, y) type so only the witness search decides.
    let x = seq(&[1, 0, 1, 0, 1, 0]);
    let t = super::encoder::type_index(&cfg, &x, &[planted; 3]);
    let z = Sequence::new(ax("Z1"), z_bits.to_vec()).unwrap();
    let out = detect_outcome(&cfg, &bins, 1, &z, 0, 0, 0, 0, &t).unwrap();
    assert_eq!(out.decision, 0);
    assert_eq!(out.witness, Some((planted as u32, planted as u32)));
    assert_ne!(out.witness, Some((sent as u32, sent as u32)));
}

#[test]
fn estimates_are_reproducible_across_thread_counts() {
    let cfg = config(copy_channel(0.1), [0.4; 3], [0.1, 0.1, 0.1], 6);
    let bins = sample_binning(&cfg).unwrap();
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| estimate_errors(&cfg, &bins, 400).unwrap())
    };
    let a = run(1);
    let b = run(4);
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    let t1 = simulate_transcripts(&cfg, &bins, 0, 20).unwrap();
    let t2 = simulate_transcripts(&cfg, &bins, 0, 20).unwrap();
    assert_eq!(t1, t2);
}

#[test]
fn transcripts_agree_with_bins() {
    let cfg = config(product_channel([0.1, 0.2, 0.3]), [0.4; 3], [0.2, 0.1, 0.1], 5);
    let bins = sample_binning(&cfg).unwrap();
    for tr in simulate_transcripts(&cfg, &bins, 0, 50).unwrap() {
        for (i, y) in [&tr.y0, &tr.y1, &tr.y2].into_iter().enumerate() {
            assert_eq!(bins.m_index(i, y.rank()), tr.m[i]);
            assert_eq!(bins.f_index(i, y.rank()), tr.f[i]);
        }
        assert_eq!(tr.type_index.n(), 5);
        assert!(tr.s1.is_some());
    }
}

#[test]
fn identical_hypotheses_are_indistinguishable() {
    let mut cfg = config(copy_channel(0.1), [0.4; 3], [0.1, 0.0, 0.0], 8);
    cfg.alt = alt([0.1, 0.1]);
    let bins = sample_binning(&cfg).unwrap();
    let r = estimate_errors(&cfg, &bins, 4000).unwrap();
    for j in 0..2 {
        let gap = (r.beta[j] - (1.0 - r.alpha[j])).abs();
        assert!(gap < 4.0 * (r.alpha_stderr[j] + r.beta_stderr[j]) + 1e-9, "{r:?}");
    }
}

#[test]
fn coarse_bins_let_the_alternative_through() {
    let mut cfg = config(product_channel([0.3, 0.3, 0.3]), [0.0; 3], [0.0; 3], 8);
    cfg.delta_prime = 0.25;
    let bins = sample_binning(&cfg).unwrap();
    let r = estimate_errors(&cfg, &bins, 2000).unwrap();
    // With one bucket, a witness typical with any z almost always exists.
    for j in 0..2 {
        let type_ok = 1.0 - r.alpha[j];
        assert!(r.beta[j] > 0.9 * type_ok, "{r:?}");
    }
}

#[test]
fn independent_attribute_keeps_full_entropy() {
    let mut cfg = config(copy_channel(0.1), [0.4; 3], [0.1, 0.0, 0.0], 3);
    cfg.source = JointPmf::from_fn(vec![ax("X"), ax("Z1"), ax("Z2"), ax("S1"), ax("S2")], |v| {
        0.5 * flip(v[0], v[1], 0.1) * flip(v[0], v[2], 0.1) * [0.3, 0.7][v[3]] * [0.6, 0.4][v[4]]
    })
    .unwrap();
    let bins = sample_binning(&cfg).unwrap();
    for (i, h) in [(1, shannon(&[0.3, 0.7])), (2, shannon(&[0.6, 0.4]))] {
        for mode in [ProtocolMode::A, ProtocolMode::B] {
            cfg.mode = mode;
            let r = estimate_equivocation(&cfg, &bins, i, EquivocationMode::Exact, 0).unwrap();
            assert!((r.value - h).abs() < 1e-9, "{r:?}");
        }
    }
}

#[test]
fn revealed_attribute_has_zero_equivocation() {
    let chan = CondPmf::deterministic(vec![ax("X")], vec![ax("Y0"), ax("Y1"), ax("Y2")], |x| x * 7).unwrap();
    let mut cfg = config(chan, [1.0, 0.0, 0.0], [0.0; 3], 3);
    cfg.source = source([0.1, 0.1], 0.0);
    let domain = 8;
    let bins = BinningRealization::from_maps(
        3,
        [2, 2, 2],
        [8, 1, 1],
        [1, 1, 1],
        [(0..domain as u32).collect(), vec![0; domain], vec![0; domain]],
        [vec![0; domain], vec![0; domain], vec![0; domain]],
    )
    .unwrap();
    let r = estimate_equivocation(&cfg, &bins, 1, EquivocationMode::Exact, 0).unwrap();
    assert!(r.value.abs() < 1e-9, "{r:?}");
}

#[test]
fn plugin_equivocation_is_sandwiched_and_near_exact() {
    let cfg = config(copy_channel(0.1), [0.3; 3], [0.1, 0.0, 0.0], 3);
    let bins = sample_binning(&cfg).unwrap();
    let exact = estimate_equivocation(&cfg, &bins, 1, EquivocationMode::Exact, 0).unwrap();
    let plug = estimate_equivocation(&cfg, &bins, 1, EquivocationMode::Plugin, 40_000).unwrap();
    assert!(exact.value >= 0.0 && exact.value <= exact.h_s + 1e-9);
    assert!(plug.value >= 0.0 && plug.value <= plug.h_s + 1e-9);
    assert!((exact.value - plug.value).abs() < 0.05, "{exact:?} {plug:?}");
}

#[test]
fn exact_equivocation_respects_budget() {
    let mut cfg = config(copy_channel(0.1), [0.3; 3], [0.1, 0.0, 0.0], 4);
    let bins = sample_binning(&cfg).unwrap();
    cfg.enumeration_budget = 100;
    let err = estimate_equivocation(&cfg, &bins, 1, EquivocationMode::Exact, 0).unwrap_err();
    assert!(matches!(err, crate::Error::Budget { .. }));
}

#[test]
fn modes_coincide_without_randomization() {
    let cfg = config(product_channel([0.1, 0.2, 0.3]), [1.0; 3], [0.0; 3], 3);
    let bins = sample_binning(&cfg).unwrap();
    assert!(mode_distance(&cfg, &bins).unwrap().abs() < 1e-12);
}

#[test]
fn modes_differ_with_randomization() {
    let cfg = config(product_channel([0.1, 0.2, 0.3]), [1.0; 3], [0.5; 3], 3);
    let bins = sample_binning(&cfg).unwrap();
    let tv = mode_distance(&cfg, &bins).unwrap();
    assert!(tv > 1e-3 && tv < 1.0, "{tv}");
    // A deterministic channel leaves one reachable bucket per x.
    let cfg = config(copy_channel(0.0), [1.0; 3], [0.5; 3], 3);
    let bins = sample_binning(&cfg).unwrap();
    assert!(mode_distance(&cfg, &bins).unwrap().abs() < 1e-12);
}
