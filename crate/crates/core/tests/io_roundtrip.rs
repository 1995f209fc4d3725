mod common;

use std::fmt::Write;

use common::{random_spd, rng};
use moa_cg::cg::{cg_init, SolveOptions, SolveReport};
use moa_cg::io::{
    format_real, load_matrix, load_vector, parse_csv_report, render_report, write_report,
    ReportFormat,
};
use proptest::prelude::*;

fn finite() -> impl Strategy<Value = f64> {
    prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO
}

proptest! {
    #[test]
    fn csv_report_is_bit_exact(
        solution in prop::collection::vec(finite(), 1..8),
        history in prop::collection::vec(finite(), 0..8),
    ) {
        let report = SolveReport { solution, iterations: 3, converged: false, residual_history: history };
        let text = render_report(&report, ReportFormat::Csv).unwrap();
        let (s, h) = parse_csv_report(&text).unwrap();
        prop_assert_eq!(s.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
                        report.solution.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
        prop_assert_eq!(h.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
                        report.residual_history.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
    }

    #[test]
    fn json_report_is_bit_exact(solution in prop::collection::vec(finite(), 1..8)) {
        let report = SolveReport { solution, iterations: 1, converged: true, residual_history: vec![1.5] };
        let text = render_report(&report, ReportFormat::Json).unwrap();
        let back: SolveReport = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back, report);
    }

    #[test]
    fn vector_file_is_bit_exact(values in prop::collection::vec(finite(), 1..16)) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("v.txt");
        let text: String = values.iter().map(|v| format_real(*v) + "\n").collect();
        std::fs::write(&path, text).unwrap();
        let loaded = load_vector(&path).unwrap();
        prop_assert_eq!(loaded.vector.data(), &values[..]);
    }
}

#[test]
fn symmetric_matrix_market_passes_symmetry_check() {
    let mut r = rng(41);
    let dir = tempfile::tempdir().unwrap();
    for n in [1, 3, 10] {
        let a = random_spd(&mut r, n);
        let mut coord = format!(
            "%%MatrixMarket matrix coordinate real symmetric\n% lower\n{n} {n} {}\n",
            n * (n + 1) / 2
        );
        let mut array = format!("%%MatrixMarket matrix array real symmetric\n{n} {n}\n");
        for j in 0..n {
            for i in j..n {
                let _ = writeln!(coord, "{} {} {}", i + 1, j + 1, format_real(a[i * n + j]));
                let _ = writeln!(array, "{}", format_real(a[i * n + j]));
            }
        }
        for (name, text) in [("c.mtx", coord), ("a.mtx", array)] {
            let path = dir.path().join(name);
            std::fs::write(&path, text).unwrap();
            let m = load_matrix(&path).unwrap();
            assert_eq!(m.data(), &a[..], "{name}");
            cg_init(m.data(), &vec![1.0; n], &SolveOptions::default()).unwrap();
        }
    }
}

#[test]
fn report_file_written_and_reread() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.json");
    let report = SolveReport {
        solution: vec![1.0 / 11.0, 7.0 / 11.0],
        iterations: 2,
        converged: true,
        residual_history: vec![8.54, 0.8, 1e-17],
    };
    write_report(&report, &path, ReportFormat::Json).unwrap();
    let back: SolveReport = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(back, report);
}

#[test]
fn missing_file_is_an_error() {
    let err = load_matrix("/nonexistent/a.mtx").unwrap_err();
    assert!(err.to_string().contains("/nonexistent/a.mtx"));
}
