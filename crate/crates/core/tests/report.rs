//! Report files: determinism, schemas and aggregate consistency.

use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;

use lpactive::experiments::{
    emit_report, run_crossover, run_ratio_sweep, ExperimentConfig, ExperimentReport, ProblemSource,
    CROSSOVER_ROW_HEADER, RATIO_AGGREGATE_HEADER, RATIO_ROW_HEADER,
};
use lpactive::generate::{InstanceKind, SizeRange};

fn scratch(tag: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("lpactive-report-{tag}-{}", std::process::id()));
    let _ = fs::remove_dir_all(&d);
    d
}

fn config(kind: InstanceKind, count: usize) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(ProblemSource::Generated {
        kind,
        count,
        seed: 40,
        sizes: SizeRange::with_m(10, 30),
    });
    cfg.grid = vec![0, 2, 5, 8, 12, 16];
    cfg
}

fn read(path: &std::path::Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records().map(|rec| rec.unwrap().iter().map(str::to_string).collect()).collect()
}

#[test]
fn ratio_report_is_reproducible_and_consistent() {
    let cfg = config(InstanceKind::DegenerateSolution, 6);
    let (d1, d2) = (scratch("r1"), scratch("r2"));
    let f1 = emit_report(&ExperimentReport::Ratios(run_ratio_sweep(&cfg).unwrap()), &d1).unwrap();
    let f2 = emit_report(&ExperimentReport::Ratios(run_ratio_sweep(&cfg).unwrap()), &d2).unwrap();
    assert_eq!(f1.len(), f2.len());
    for (a, b) in f1.iter().zip(&f2) {
        assert_eq!(fs::read(a).unwrap(), fs::read(b).unwrap(), "{}", a.display());
    }
    let names: Vec<String> = f1.iter().map(|p| p.file_name().unwrap().to_string_lossy().into_owned()).collect();
    for want in ["rows.csv", "aggregates.csv", "failures.csv", "correct.svg", "false.svg", "missed.svg", "relres.svg"] {
        assert!(names.iter().any(|n| n == want), "missing {want}");
    }

    let header = csv::Reader::from_path(d1.join("rows.csv")).unwrap().headers().unwrap().clone();
    assert_eq!(header.iter().collect::<Vec<_>>(), RATIO_ROW_HEADER);
    let header = csv::Reader::from_path(d1.join("aggregates.csv")).unwrap().headers().unwrap().clone();
    assert_eq!(header.iter().collect::<Vec<_>>(), RATIO_AGGREGATE_HEADER);

    // Means recomputed from rows.csv match aggregates.csv.
    let mut sums: BTreeMap<(String, String, String), (f64, usize)> = BTreeMap::new();
    for r in read(&d1.join("rows.csv")) {
        if r[9] == "true" {
            let e = sums.entry((r[1].clone(), r[2].clone(), r[3].clone())).or_default();
            e.0 += r[7].parse::<f64>().unwrap();
            e.1 += 1;
        }
    }
    let aggs = read(&d1.join("aggregates.csv"));
    assert_eq!(aggs.len(), 4 * cfg.grid.len());
    for a in aggs {
        let (sum, count) = sums[&(a[0].clone(), a[1].clone(), a[2].clone())];
        assert_eq!(count.to_string(), a[3]);
        let mean: f64 = a[7].parse().unwrap();
        assert!((sum / count as f64 - mean).abs() <= 1e-12);
        if a[2] == "0" {
            assert_eq!(mean, 0.0);
        }
    }
    for d in [d1, d2] {
        fs::remove_dir_all(d).unwrap();
    }
}

#[test]
fn crossover_report_rows_and_bar_order() {
    let mut cfg = config(InstanceKind::FeasiblePoint, 8);
    cfg.mu_cap = 1e-3;
    let rep = run_crossover(&cfg).unwrap();
    assert!(rep.failures.is_empty(), "{:?}", rep.failures);
    for r in &rep.rows {
        assert!(r.mu_perturbed < 1e-3);
        if r.simplex_perturbed == r.simplex_unperturbed {
            assert_eq!(r.rl, Some(0.0));
        }
    }
    let d = scratch("x");
    emit_report(&ExperimentReport::Crossover(rep.clone()), &d).unwrap();
    let header = csv::Reader::from_path(d.join("rows.csv")).unwrap().headers().unwrap().clone();
    assert_eq!(header.iter().collect::<Vec<_>>(), CROSSOVER_ROW_HEADER);
    assert_eq!(read(&d.join("rows.csv")).len(), 8);

    let mut heights: Vec<f64> = rep.bar_heights().into_iter().map(|b| b.1).collect();
    heights.sort_by(|a, b| b.total_cmp(a));
    let svg = fs::read_to_string(d.join("rl_profile.svg")).unwrap();
    assert!(svg.starts_with("<?xml") && svg.contains("<svg"));
    // Bars are drawn left to right, tallest first: their tops (y) never decrease.
    let ys: Vec<f64> = svg
        .lines()
        .filter(|l| l.starts_with("<rect x=") && l.contains("fill=\"#"))
        .map(|l| l.split("y=\"").nth(1).unwrap().split('"').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(ys.len(), heights.len());
    assert!(ys.windows(2).all(|w| w[0] <= w[1]));
    fs::remove_dir_all(d).unwrap();
}

#[test]
fn worked_example_late_iterations_are_exact() {
    let d = scratch("we");
    fs::create_dir_all(&d).unwrap();
    let mps = d.join("worked.mps");
    fs::write(
        &mps,
        "NAME WORKED\nROWS\n N COST\n E R1\nCOLUMNS\n X1 COST 1 R1 1\n X2 COST 2 R1 1\nRHS\n RHS R1 1\nENDATA\n",
    )
    .unwrap();
    let mut cfg = ExperimentConfig::new(ProblemSource::MpsFiles(vec![mps]));
    cfg.grid = vec![0, 10, 20];
    let rep = run_ratio_sweep(&cfg).unwrap();
    for row in &rep.rows {
        let q = row.ratios.unwrap();
        if row.point == 0 {
            assert_eq!((q.false_ratio, q.missed_ratio, q.correct_ratio), (0.0, 1.0, 0.0));
        } else {
            assert_eq!(q.correct_ratio, 1.0, "{row:?}");
        }
    }
    fs::remove_dir_all(d).unwrap();
}

#[test]
fn io_errors_carry_the_path() {
    let blocker = scratch("blk");
    fs::write(&blocker, "not a directory").unwrap();
    let rep = ExperimentReport::Crossover(lpactive::experiments::CrossoverReport { rows: vec![], failures: vec![] });
    let err = emit_report(&rep, blocker.join("sub")).unwrap_err();
    assert!(err.to_string().contains(&blocker.display().to_string()), "{err}");
    fs::remove_file(blocker).unwrap();
}
