use std::fs;

use serde_json::Value;
use vistrace::config::{PipelineConfig, RadiiGrid};
use vistrace::emit::{canonical_json, emit, Format};
use vistrace::generators::DomainSpec;
use vistrace::pipeline::{run_pipeline, StageStatus};
use vistrace::Error;

fn small() -> PipelineConfig {
    PipelineConfig {
        domain: DomainSpec::Disk { cells: 48 },
        ..PipelineConfig::default()
    }
}

fn stage_json(v: &Value, name: &str) -> String {
    serde_json::to_string(&v["stages"][name]).unwrap()
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let cfg = small();
    let a = canonical_json(&run_pipeline(&cfg).unwrap()).unwrap();
    let b = canonical_json(&run_pipeline(&cfg).unwrap()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn every_stage_succeeds_on_the_disk() {
    let rep = run_pipeline(&small()).unwrap();
    let s = &rep.stages;
    let statuses = [
        s.space.status,
        s.decomposition.status,
        s.lower_content.status,
        s.generations.status,
        s.frostman.status,
        s.john.status,
        s.content_bound.status,
        s.trace.status,
    ];
    assert!(
        statuses.iter().all(|&x| x == StageStatus::Ok),
        "{statuses:?}"
    );
    assert!(s.john.ok().unwrap().all_ok);
    assert!(s.frostman.ok().unwrap().telescoping_ok);
}

#[test]
fn failing_trace_leaves_earlier_stages_untouched() {
    let good = small();
    let bad = PipelineConfig {
        radii: RadiiGrid {
            trace_min_cells: 1e6,
            ..RadiiGrid::default()
        },
        ..small()
    };
    let a = serde_json::to_value(run_pipeline(&good).unwrap()).unwrap();
    let rb = run_pipeline(&bad).unwrap();
    assert_eq!(rb.stages.trace.status, StageStatus::Failed);
    assert_eq!(rb.stages.trace.error_tag.as_deref(), Some("invalid-input"));
    let b = serde_json::to_value(&rb).unwrap();
    for name in [
        "space",
        "decomposition",
        "lower_content",
        "generations",
        "frostman",
        "john",
        "content_bound",
    ] {
        assert_eq!(stage_json(&a, name), stage_json(&b, name), "stage {name}");
    }
}

#[test]
fn invalid_config_reports_all_problems() {
    let cfg = PipelineConfig {
        c: 0.5,
        eta: 0.75,
        depth: 0,
        ..small()
    };
    match run_pipeline(&cfg) {
        Err(Error::InvalidConfig(errs)) => assert_eq!(errs.len(), 3, "{errs:?}"),
        other => panic!("expected a config error, got {:?}", other.map(|_| ())),
    }
}

#[test]
fn strict_mode_rejects_coarse_eta() {
    let cfg = PipelineConfig {
        strict_mode: true,
        ..small()
    };
    assert!(matches!(run_pipeline(&cfg), Err(Error::InvalidConfig(_))));
}

#[test]
fn config_round_trips_through_toml_and_json() {
    let cfg = PipelineConfig {
        domain: DomainSpec::Comb {
            cells: 168,
            teeth: 4,
        },
        eta: 0.0625,
        ..PipelineConfig::default()
    };
    let toml_text = toml::to_string(&cfg).unwrap();
    assert_eq!(PipelineConfig::from_toml(&toml_text).unwrap(), cfg);
    let json_text = serde_json::to_string(&cfg).unwrap();
    assert_eq!(PipelineConfig::from_json(&json_text).unwrap(), cfg);
    assert!(PipelineConfig::from_toml("no_such_key = 1").is_err());
}

fn csv_rows(path: &std::path::Path) -> usize {
    csv::Reader::from_path(path).unwrap().records().count()
}

#[test]
fn emitted_tables_match_the_report() {
    let rep = run_pipeline(&small()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let files = emit(&rep, dir.path(), &Format::ALL).unwrap();
    assert!(files.iter().all(|f| f.exists()));

    let text = fs::read_to_string(dir.path().join("report.json")).unwrap();
    assert_eq!(text, canonical_json(&rep).unwrap());

    let tr = rep.stages.trace.ok().unwrap();
    let atoms: usize = tr
        .entries
        .iter()
        .filter_map(|e| e.report.as_ref())
        .map(|r| r.atoms.len())
        .sum();
    assert_eq!(csv_rows(&dir.path().join("trace_atoms.csv")), atoms);
    let reports = tr.entries.iter().filter(|e| e.report.is_some()).count();
    assert_eq!(csv_rows(&dir.path().join("trace_ratios.csv")), reports);
    assert_eq!(
        csv_rows(&dir.path().join("john_curves.csv")),
        rep.stages.john.ok().unwrap().curves.len()
    );
    assert_eq!(
        csv_rows(&dir.path().join("plot/points.csv")),
        rep.plot.points.len()
    );
    let gens: usize = rep.stages.generations.ok().unwrap().sizes.iter().sum();
    assert_eq!(rep.plot.points.len(), gens);
}

#[test]
fn non_finite_values_serialize_as_null() {
    let v: Value =
        serde_json::from_str(&canonical_json(&[1.0, f64::INFINITY, f64::NAN]).unwrap()).unwrap();
    assert_eq!(v, serde_json::json!([1.0, null, null]));
}
