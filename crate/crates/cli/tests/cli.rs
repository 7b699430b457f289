use std::path::{Path, PathBuf};
use std::process::Command as Proc;

use gwht_cli::records::{self, ExponentRecord, Format, OsrbRecord, RegionRecord};
use gwht_cli::{parse_experiment, run, Command, IssueCode, Overrides, Records};
use gwht_testkit::exponents::{CopyInstance, GridSpec};
use serde::Deserialize;

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn reference() -> String {
    std::fs::read_to_string(root().join("configs/reference.toml")).unwrap()
}

fn ov(needs_seed: bool) -> Overrides {
    Overrides { needs_seed, ..Overrides::default() }
}

fn issues(src: &str) -> Vec<(IssueCode, String, Option<usize>)> {
    match parse_experiment(src, ov(true)) {
        Ok(_) => Vec::new(),
        Err(v) => v.into_iter().map(|i| (i.code, i.field, i.line)).collect(),
    }
}

fn line_containing(src: &str, needle: &str) -> usize {
    src.lines().position(|l| l.contains(needle)).unwrap() + 1
}

#[test]
fn reference_document_is_valid() {
    let exp = parse_experiment(&reference(), ov(true)).unwrap();
    assert_eq!(exp.points.len(), 3);
    assert_eq!(exp.trials, 10000);
    assert_eq!(exp.base.seed, 2024);
}

#[test]
fn unnormalized_table_is_reported_with_its_line() {
    let src = reference().replace("0.54, 0.0, 0.0, 0.06,", "0.52, 0.0, 0.0, 0.06,");
    let found = issues(&src);
    let line = line_containing(&src, "alternative = [");
    assert!(
        found.iter().any(|(c, f, l)| *c == IssueCode::Normalization && f == "laws.alternative" && *l == Some(line)),
        "{found:?}"
    );
}

#[test]
fn marginal_mismatch_is_reported() {
    // Moves mass between x = 0 and x = 1 in the alternative only.
    let src = reference()
        .replace("0.54, 0.0, 0.0, 0.06,", "0.5, 0.0, 0.0, 0.06,")
        .replace("0.2, 0.0, 0.0, 0.2,", "0.24, 0.0, 0.0, 0.2,");
    let found = issues(&src);
    assert!(found.iter().any(|(c, ..)| *c == IssueCode::MarginalMismatch), "{found:?}");
}

#[test]
fn negative_rate_is_a_range_issue() {
    let src = reference().replace("r = [1.5, 1.5, 1.5]", "r = [1.5, -0.5, 1.5]");
    let found = issues(&src);
    let line = line_containing(&src, "r = [1.5, -0.5");
    assert!(
        found.iter().any(|(c, f, l)| *c == IssueCode::Range && f == "rates.r" && *l == Some(line)),
        "{found:?}"
    );
}

#[test]
fn wrong_table_length_is_a_shape_issue() {
    let src = reference().replace("0.54, 0.0, 0.0, 0.06,", "0.54, 0.0, 0.06,");
    let found = issues(&src);
    assert!(found.iter().any(|(c, f, _)| *c == IssueCode::Shape && f == "laws.alternative"), "{found:?}");
}

#[test]
fn missing_seed_only_matters_for_random_commands() {
    let src = reference().replace("seed = 2024\n", "");
    let found = issues(&src);
    assert!(found.iter().any(|(c, f, _)| *c == IssueCode::MissingField && f == "seed"), "{found:?}");
    assert!(parse_experiment(&src, ov(false)).is_ok());
}

#[test]
fn syntax_errors_carry_a_line() {
    let src = reference().replace("n = 8\n", "n = = 8\n");
    let found = issues(&src);
    assert_eq!(found.len(), 1, "{found:?}");
    assert_eq!(found[0].0, IssueCode::Parse);
    assert_eq!(found[0].2, Some(line_containing(&src, "n = = 8")));
}

#[test]
fn unknown_keys_are_rejected() {
    let src = reference().replace("[rates]\n", "[rates]\nbogus = 1\n");
    let found = issues(&src);
    assert!(found.iter().any(|(c, ..)| *c == IssueCode::Parse), "{found:?}");
}

#[test]
fn several_problems_are_reported_together() {
    let src = reference()
        .replace("r = [1.5, 1.5, 1.5]", "r = [1.5, -0.5, 1.5]")
        .replace("rt = [0.0, 0.0, 0.0]", "rt = [0.0, 0.0]");
    let codes: Vec<IssueCode> = issues(&src).into_iter().map(|i| i.0).collect();
    assert!(codes.contains(&IssueCode::Range) && codes.contains(&IssueCode::Shape), "{codes:?}");
}

fn exponent_row(v: f64) -> ExponentRecord {
    ExponentRecord {
        n: None,
        r0: 1.0,
        r1: 0.5,
        r2: 0.25,
        rt0: 0.0,
        rt1: 0.1,
        rt2: 0.2,
        detector: 1,
        e0: 0.1234567890123,
        e1: v,
        e2: 1e-300,
        theta_star: 1e-300,
        attained_by: "e2".into(),
        e1_divergence: f64::INFINITY,
        e2_divergence: 0.0,
    }
}

#[test]
fn records_round_trip_through_both_formats() {
    let rows = vec![exponent_row(f64::INFINITY), ExponentRecord { n: Some(12), ..exponent_row(-0.75) }];
    for format in [Format::Json, Format::Csv] {
        let text = records::to_string(&rows, format).unwrap();
        let back: Vec<ExponentRecord> = records::from_str(&text, format).unwrap();
        assert_eq!(back, rows, "{format:?}");
    }
    let osrb = vec![OsrbRecord {
        n: 4,
        rates: "0.25;0.5".into(),
        bins: "2;4".into(),
        trials: 10,
        mean_tv: 0.3,
        stderr: 0.01,
        measured_exponent: f64::INFINITY,
        measured_exponent_stderr: 0.0,
        zeta: -1.0,
        zeta_negative: true,
        aleph: None,
        exhaustive_tv: Some(0.29),
        bound_holds: true,
    }];
    for format in [Format::Json, Format::Csv] {
        let text = records::to_string(&osrb, format).unwrap();
        assert_eq!(records::from_str::<OsrbRecord>(&text, format).unwrap(), osrb);
    }
}

#[test]
fn files_are_written_in_the_format_of_their_extension() {
    let exp = parse_experiment(&reference(), ov(false)).unwrap();
    let out = run(Command::Region, &exp, gwht_core::DEFAULT_ENUMERATION_BUDGET).unwrap();
    let dir = tempfile::tempdir().unwrap();
    for name in ["region.json", "region.csv"] {
        let path = dir.path().join(name);
        out.write(&path).unwrap();
        let back: Vec<RegionRecord> = records::read_file(&path).unwrap();
        assert_eq!(Records::Region(back), out);
    }
    assert!(out.write(&dir.path().join("region.txt")).is_err());
}

#[test]
fn zero_rates_violate_the_region() {
    let src = reference().replace("r = [1.5, 1.5, 1.5]", "r = [0.0, 0.0, 0.0]");
    let exp = parse_experiment(&src, ov(false)).unwrap();
    let Records::Region(rows) = run(Command::Region, &exp, gwht_core::DEFAULT_ENUMERATION_BUDGET).unwrap() else {
        panic!("wrong record kind");
    };
    let bad: Vec<&RegionRecord> = rows.iter().filter(|r| !r.satisfied).collect();
    assert!(!bad.is_empty());
    // Every inequality is strict, so a zero margin is a violation.
    assert!(bad.iter().all(|r| r.margin <= 0.0));
    assert!(bad.iter().any(|r| r.margin < 0.0));
    assert!(rows.iter().filter(|r| r.satisfied).all(|r| r.margin > 0.0));
}

#[test]
fn reference_rates_satisfy_the_region() {
    let exp = parse_experiment(&reference(), ov(false)).unwrap();
    let Records::Region(rows) = run(Command::Region, &exp, gwht_core::DEFAULT_ENUMERATION_BUDGET).unwrap() else {
        panic!("wrong record kind");
    };
    assert!(rows.iter().all(|r| r.satisfied), "{rows:?}");
}

#[derive(Deserialize)]
struct Golden {
    tolerance: f64,
    detectors: Vec<GoldenRow>,
}

#[derive(Deserialize)]
struct GoldenRow {
    detector: u8,
    e0: f64,
    e1: f64,
    e2: f64,
    theta_star: f64,
    attained_by: String,
}

fn golden() -> Golden {
    serde_json::from_str(&std::fs::read_to_string(root().join("configs/reference.golden.json")).unwrap()).unwrap()
}

#[test]
fn exponents_match_the_golden_file() {
    let g = golden();
    let exp = parse_experiment(&reference(), ov(false)).unwrap();
    let Records::Exponents(rows) = run(Command::Exponents, &exp, gwht_core::DEFAULT_ENUMERATION_BUDGET).unwrap() else {
        panic!("wrong record kind");
    };
    // Asymptotic exponents do not depend on the sweep's blocklengths.
    assert_eq!(rows.len(), 2);
    for (row, want) in rows.iter().zip(&g.detectors) {
        assert_eq!(row.detector, want.detector);
        assert_eq!(row.attained_by, want.attained_by);
        for (got, want) in [(row.e0, want.e0), (row.e1, want.e1), (row.e2, want.e2), (row.theta_star, want.theta_star)] {
            assert!((got - want).abs() <= g.tolerance, "{got} vs {want}");
        }
    }
}

#[test]
fn golden_file_agrees_with_the_grid_oracle() {
    let inst = CopyInstance {
        px: [0.6, 0.4],
        z_null: [[0.7, 0.3], [0.45, 0.55]],
        z_alt: [[0.9, 0.1], [0.5, 0.5]],
        y_given_x: [[0.98, 0.02], [0.02, 0.98]],
        r: [1.5; 3],
        rt: [0.0; 3],
    };
    let grid = GridSpec { points: 65, zooms: 4 };
    let (e0, d1, e2) = (inst.e0(grid), inst.e1_divergence(grid), inst.e2(GridSpec { points: 49, zooms: 3 }));
    for want in golden().detectors {
        let e1 = d1 + inst.e1_rate_term(want.detector as usize);
        let theta = e0.min(e1).min(e2);
        for (oracle, stored) in [(e0, want.e0), (e1, want.e1), (e2, want.e2), (theta, want.theta_star)] {
            assert!((oracle - stored).abs() < 1e-3, "{oracle} vs {stored}");
        }
    }
}

fn gwht(args: &[&str]) -> std::process::Output {
    Proc::new(env!("CARGO_BIN_EXE_gwht")).args(args).output().unwrap()
}

#[test]
fn simulate_output_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = root().join("configs/reference.toml");
    let mut outputs = Vec::new();
    for (i, threads) in ["1", "3"].iter().enumerate() {
        let out = dir.path().join(format!("sim{i}.csv"));
        let res = gwht(&[
            "simulate",
            "--config",
            cfg.to_str().unwrap(),
            "--trials",
            "300",
            "--threads",
            threads,
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
        outputs.push(std::fs::read(&out).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn invalid_documents_exit_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, reference().replace("r = [1.5, 1.5, 1.5]", "r = [1.5, -1.0, 1.5]")).unwrap();
    let res = gwht(&["region", "--config", path.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));
    let err = String::from_utf8_lossy(&res.stderr);
    assert!(err.contains("RANGE rates.r"), "{err}");
}

#[test]
fn seed_override_replaces_the_document_seed() {
    let src = reference().replace("seed = 2024\n", "");
    let exp = parse_experiment(&src, Overrides { seed: Some(9), trials: Some(5), needs_seed: true }).unwrap();
    assert_eq!(exp.base.seed, 9);
    assert_eq!(exp.trials, 5);
}
