use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use approx::assert_relative_eq;

use confdist::cli::parse_study_csv;
use confdist::combiner::{combine, CombinerSpec, Method};

fn confdist(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_confdist"))
        .args(args)
        .env_remove("CDF_GRID_POINTS")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = confdist(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn quantile_column(tsv: &str) -> Vec<f64> {
    tsv.lines()
        .skip(1)
        .take_while(|l| !l.is_empty())
        .map(|l| l.split('\t').nth(1).unwrap().parse().unwrap())
        .collect()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn combine_output_matches_library() {
    let dir = tempfile::tempdir().unwrap();
    let csv = write(
        dir.path(),
        "studies.csv",
        "study_id,theta_hat,se,n\na,0.6,0.629,45\nb,0.1,0.3,\nc,-0.2,0.5,30\n",
    );
    let out_dir = dir.path().join("out");
    ok(&["combine", "--studies", &csv, "--method", "de", "--out-dir", out_dir.to_str().unwrap()]);

    let cds: Vec<_> = parse_study_csv(Path::new(&csv))
        .unwrap()
        .iter()
        .map(|s| s.to_cd().unwrap())
        .collect();
    let h = combine(&cds, &CombinerSpec::new(Method::De)).unwrap();
    let q = quantile_column(&fs::read_to_string(out_dir.join("quantiles.tsv")).unwrap());
    assert_eq!(q.len(), 3);
    assert_relative_eq!(q[0], h.quantile(0.025).unwrap(), max_relative = 1e-10);
    assert_relative_eq!(q[1], h.median().unwrap(), max_relative = 1e-10);
    assert_relative_eq!(q[2], h.quantile(0.975).unwrap(), max_relative = 1e-10);

    let density = fs::read_to_string(out_dir.join("density.tsv")).unwrap();
    let mut lines = density.lines();
    assert_eq!(lines.next(), Some("theta\tcdf\tdensity"));
    assert_eq!(lines.count(), 801);
}

#[test]
fn odds_then_combine_equals_direct_tables() {
    let dir = tempfile::tempdir().unwrap();
    let tables = write(
        dir.path(),
        "tables.csv",
        "study_id,a,b,c,d\nk,9,12,7,17\nz,0,11,3,9\nm,4,10,8,6\n",
    );
    let summaries = dir.path().join("summaries.csv");
    let odds = ok(&["odds", "--tables", &tables, "--out", summaries.to_str().unwrap()]);
    let first: Vec<&str> = odds.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(first[0], "k");
    assert_eq!(format!("{:.3}", first[1].parse::<f64>().unwrap()), "0.600");
    assert_eq!(format!("{:.3}", first[2].parse::<f64>().unwrap()), "0.629");
    let via_file = ok(&["combine", "--studies", summaries.to_str().unwrap(), "--adaptive", "indicator"]);
    let direct = ok(&["combine", "--tables", &tables, "--adaptive", "indicator"]);
    let (a, b) = (quantile_column(&via_file), quantile_column(&direct));
    for (x, y) in a.iter().zip(&b) {
        assert_relative_eq!(x, y, max_relative = 1e-9);
    }
    assert!(direct.contains("study_id\tweight\nk\t1\n"));
}

#[test]
fn seeded_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let pts: String = (0..12)
        .map(|i| {
            let t = i as f64;
            format!("{},{}\n", (t * 1.7).sin() * 3.0, (t * 0.9).cos() * 2.0 + t * 0.1)
        })
        .collect();
    let points = write(dir.path(), "points.csv", &format!("x,y\n{pts}"));
    let runs: Vec<String> = (0..2)
        .map(|i| {
            let d = dir.path().join(format!("run{i}"));
            ok(&[
                "oja", "--points", &points, "--k", "2", "--b", "200", "--seed", "7", "--out-dir",
                d.to_str().unwrap(),
            ]);
            fs::read_to_string(d.join("density.tsv")).unwrap()
        })
        .collect();
    assert_eq!(runs[0], runs[1]);

    let sim = ["simulate", "--n1", "3", "--n2", "4", "--sigma1", "1", "--sigma2", "1.5", "--reps", "200", "--seed", "11"];
    assert_eq!(ok(&sim), ok(&sim));
}

#[test]
fn malformed_input_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let csv = write(dir.path(), "bad.csv", "study_id,theta_hat,se\na,0.1,0.2\nb,0.3,-1\n");
    let out = confdist(&["combine", "--studies", &csv]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 3"), "{err}");
}
