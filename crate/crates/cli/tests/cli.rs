use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use plypart_cli::commands::{ValidationReport, SWEEP_HEADER};
use plypart_cli::format::{load_result, parse, to_json, ProjectFile, ResultFile, StayOutRecord};
use plypart_core::constraints::RowKind;
use plypart_core::cost::{nest, SubPlyPiece};
use plypart_core::search::Outcome;
use plypart_core::Point2;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn scratch(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join("cli-tests");
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn plypart(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_plypart")).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn partition(project: &Path, out: &Path) -> Output {
    plypart(&["partition", project.to_str().unwrap(), "--out", out.to_str().unwrap()])
}

fn write_project(name: &str, f: &ProjectFile) -> PathBuf {
    let p = scratch(name);
    std::fs::write(&p, to_json(f)).unwrap();
    p
}

fn read_project(path: &Path) -> ProjectFile {
    parse(&std::fs::read_to_string(path).unwrap(), "fixture").unwrap()
}

fn validate(result: &Path, project: &Path) -> (i32, Option<ValidationReport>) {
    let out = plypart(&["validate", result.to_str().unwrap(), project.to_str().unwrap()]);
    let report = parse(&String::from_utf8_lossy(&out.stdout), "stdout").ok();
    (code(&out), report)
}

#[test]
fn rectangle_partition_round_trips() {
    let out_path = scratch("rect.result.json");
    let out = partition(&fixture("rectangle.json"), &out_path);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = std::fs::read_to_string(&out_path).unwrap();
    let result = load_result(&out_path).unwrap();
    assert_eq!(result.plies[0].offsets, vec![0.0, 0.25, 0.5, 0.75]);
    assert_eq!(to_json(&result), text);
    let again: ResultFile = parse(&to_json(&result), "again").unwrap();
    assert_eq!(again, result);
    let (c, report) = validate(&out_path, &fixture("rectangle.json"));
    assert_eq!(c, 0);
    assert!(report.unwrap().is_clean());
}

#[test]
fn wing_partition_is_complete_and_clean() {
    let out_path = scratch("wing.result.json");
    let out = partition(&fixture("wing.json"), &out_path);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let result = load_result(&out_path).unwrap();
    assert_eq!(result.outcome, Outcome::Complete);
    assert!(result.validation.is_empty());
    assert_eq!(result.bundles.len(), 1);
    assert_eq!(result.bundles[0].len(), 8);
    assert_eq!(validate(&out_path, &fixture("wing.json")).0, 0);
}

#[test]
fn input_errors_exit_one_with_locations() {
    let mut f = read_project(&fixture("rectangle.json"));
    f.plies.clear();
    let p = write_project("empty.json", &f);
    let out = partition(&p, &scratch("empty.result.json"));
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("empty layup"));

    let text = std::fs::read_to_string(fixture("rectangle.json")).unwrap();
    let bad = scratch("bad-type.json");
    std::fs::write(&bad, text.replace("\"stack_index\": 0", "\"stack_index\": -1")).unwrap();
    let out = partition(&bad, &scratch("bad.result.json"));
    assert_eq!(code(&out), 1);
    let msg = stderr(&out);
    assert!(msg.contains("plies[0].stack_index") && msg.contains("line"), "{msg}");

    let out = plypart(&["partition", "/nonexistent/project.json"]);
    assert_eq!(code(&out), 1);
    let out = plypart(&["partition", fixture("rectangle.json").to_str().unwrap(), "--beam-width", "0"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn infeasible_stack_reports_the_failing_ply() {
    let mut f = read_project(&fixture("rectangle.json"));
    let ply = f.plies[0].clone();
    f.plies = (0..8)
        .map(|i| {
            let mut p = ply.clone();
            p.id = format!("s{i}");
            p.stack_index = i;
            p
        })
        .collect();
    f.config.tolerance = plypart_core::Tolerance::Explicit {
        plies: 8,
        max_overlaps: 1,
    };
    let p = write_project("stack8.json", &f);
    let out_path = scratch("stack8.result.json");
    let out = partition(&p, &out_path);
    assert_eq!(code(&out), 2);
    let msg = stderr(&out);
    assert!(msg.contains("infeasible: ply s") && msg.contains("window"), "{msg}");
    assert_eq!(load_result(&out_path).unwrap().outcome, Outcome::Infeasible);
}

#[test]
fn validate_flags_a_seam_moved_into_a_stayout() {
    let mut f = read_project(&fixture("rectangle.json"));
    f.stayouts = vec![StayOutRecord {
        vertices: vec![[0.3, 0.355], [0.34, 0.355], [0.34, 0.395], [0.3, 0.395]],
    }];
    let project = write_project("zone.json", &f);
    let out_path = scratch("zone.result.json");
    assert_eq!(code(&partition(&project, &out_path)), 0);
    let mut result = load_result(&out_path).unwrap();
    // Hand-made valid seams, then one moved into the zone's band.
    result.plies[0].offsets = vec![0.0, 0.15, 0.3, 0.45, 0.6, 0.75];
    std::fs::write(&out_path, to_json(&result)).unwrap();
    assert_eq!(validate(&out_path, &project).0, 0);
    result.plies[0].offsets[3] = 0.41;
    std::fs::write(&out_path, to_json(&result)).unwrap();
    let (c, report) = validate(&out_path, &project);
    assert_eq!(c, 2);
    let report = report.unwrap();
    assert_eq!(report.violations.len(), 1);
    assert!(matches!(report.violations[0].violation.kind, RowKind::StayOut { .. }));
    assert_eq!(report.stayout_oracle.len(), 1);
}

#[test]
fn validate_flags_a_forced_triple() {
    let mut f = read_project(&fixture("hexagon.json"));
    f.plies.truncate(3);
    f.config.spool_width = 1.5;
    f.config.tolerance = plypart_core::Tolerance::Explicit {
        plies: 3,
        max_overlaps: 2,
    };
    let project = write_project("triple.json", &f);
    let out_path = scratch("triple.result.json");
    assert_eq!(code(&partition(&project, &out_path)), 0);
    assert_eq!(validate(&out_path, &project).0, 0);
    // One seam per ply, all through the centre.
    let built = f.build("triple").unwrap();
    let mut result = load_result(&out_path).unwrap();
    for (seams, ply) in result.plies.iter_mut().zip(&built.plies) {
        seams.offsets = vec![0.0, ply.offset_of(Point2::new(0.0, 0.0))];
    }
    std::fs::write(&out_path, to_json(&result)).unwrap();
    let (c, report) = validate(&out_path, &project);
    assert_eq!(c, 2);
    let triples: Vec<_> = report
        .unwrap()
        .violations
        .into_iter()
        .filter(|v| matches!(v.violation.kind, RowKind::Triple { .. }))
        .collect();
    assert_eq!(triples.len(), 1);
    assert!(triples[0].violation.oracle_area.unwrap() > 0.0);
}

#[test]
fn validate_rejects_mismatched_plies() {
    let out_path = scratch("mismatch.result.json");
    assert_eq!(code(&partition(&fixture("rectangle.json"), &out_path)), 0);
    assert_eq!(validate(&out_path, &fixture("wing.json")).0, 1);
}

#[test]
fn sweep_rows_and_errors() {
    let out = plypart(&["sweep", fixture("sweep.json").to_str().unwrap(), "--steps", "2"]);
    assert_eq!(code(&out), 0);
    let csv = String::from_utf8(out.stdout).unwrap();
    assert_eq!(csv.lines().count(), 3);
    assert_eq!(csv.lines().next().unwrap(), SWEEP_HEADER);

    let out = plypart(&["sweep", fixture("hexagon.json").to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("cost_params"));

    let mut f = read_project(&fixture("sweep.json"));
    f.stayouts = vec![StayOutRecord {
        vertices: vec![[-1.0, -1.0], [2.0, -1.0], [2.0, 2.0], [-1.0, 2.0]],
    }];
    let p = write_project("blocked.json", &f);
    let out = plypart(&["sweep", p.to_str().unwrap(), "--steps", "3"]);
    assert_eq!(code(&out), 2);
    let csv = String::from_utf8(out.stdout).unwrap();
    assert_eq!(csv.lines().skip(1).filter(|l| l.ends_with(",infeasible")).count(), 3);
}

#[test]
fn render_modes() {
    let result = scratch("render.result.json");
    assert_eq!(code(&partition(&fixture("rectangle.json"), &result)), 0);
    let svg = scratch("render.svg");
    let r = result.to_str().unwrap();
    let s = svg.to_str().unwrap();
    assert_eq!(code(&plypart(&["render", r, "--out", s, "--mode", "seams"])), 0);
    let text = std::fs::read_to_string(&svg).unwrap();
    assert_eq!(text.matches(r#"class="seam""#).count(), 4);
    assert_eq!(text.matches(r#"class="overlap""#).count(), 3);

    assert_eq!(code(&plypart(&["render", r, "--out", s, "--mode", "bogus"])), 1);

    // Overlap view reports the validator's stacking depth.
    let wing = scratch("render-wing.result.json");
    assert_eq!(code(&partition(&fixture("wing.json"), &wing)), 0);
    assert_eq!(code(&plypart(&["render", wing.to_str().unwrap(), "--out", s, "--mode", "overlaps"])), 0);
    let text = std::fs::read_to_string(&svg).unwrap();
    let depth = validate(&wing, &fixture("wing.json")).1.unwrap().max_stacking_depth;
    assert!(text.contains(&format!("max stacking depth: {depth}")));

    // Identical full-width rectangles leave no trim.
    let mut res = load_result(&result).unwrap();
    let piece = SubPlyPiece {
        ply_id: "r".into(),
        index: 0,
        polygon: vec![Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(1.0, 0.3), Point2::new(0.0, 0.3)],
        fiber_angle: 0.0,
        width: 0.3,
        length: 1.0,
    };
    res.nest = Some(nest(&vec![piece; 4], 0.3).unwrap());
    std::fs::write(&result, to_json(&res)).unwrap();
    assert_eq!(code(&plypart(&["render", r, "--out", s, "--mode", "nest"])), 0);
    let text = std::fs::read_to_string(&svg).unwrap();
    assert!(text.contains(r#"data-trim-area="0.000000000""#), "{text}");
    assert_eq!(text.matches(r#"class="piece""#).count(), 4);
}

#[test]
fn bench_single_trial_and_thread_cap() {
    let out = plypart(&["bench", "--trials", "1", "--beam-width", "20"]);
    assert_eq!(code(&out), 0);
    let csv = String::from_utf8(out.stdout.clone()).unwrap();
    assert_eq!(csv.lines().count(), 2);
    assert!(stderr(&out).contains("equality rate"));

    let capped = Command::new(env!("CARGO_BIN_EXE_plypart"))
        .args(["bench", "--trials", "3", "--beam-width", "20", "--seed", "9"])
        .env("PLYPART_THREADS", "1")
        .output()
        .unwrap();
    let free = plypart(&["bench", "--trials", "3", "--beam-width", "20", "--seed", "9"]);
    assert_eq!(capped.stdout, free.stdout);

    let bad = Command::new(env!("CARGO_BIN_EXE_plypart"))
        .args(["bench", "--trials", "1"])
        .env("PLYPART_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(code(&bad), 1);
}
