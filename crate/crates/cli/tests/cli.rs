use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_iga-dual");

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn data_rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(String::from).collect())
        .collect()
}

fn trailer_value(csv: &str, key: &str) -> f64 {
    let prefix = format!("# {key}=");
    csv.lines()
        .find_map(|l| l.strip_prefix(&prefix))
        .expect("trailer present")
        .parse()
        .unwrap()
}

const STATIC: &str = r#"
study = "static"
[model]
length = 1.0
ea = 1.0
mu = 1.0
[load]
sine_p0 = 1.0
[mesh]
p = 3
preset = "A"
refinement = 2
[scheme]
test_fn = "ad"
q = "max"
"#;

#[test]
fn static_output_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "s.toml", STATIC);
    let a = run(&["static", "--config", cfg.to_str().unwrap()]);
    let b = run(&["static", "--config", cfg.to_str().unwrap()]);
    assert!(a.status.success(), "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
    let out = stdout(&a);
    assert!(out.starts_with("# scheme=ad(q=3), p=3, q=3, dt=none"));
    assert_eq!(out.lines().nth(1), Some("x,u_h,u_ref,F_N_h,F_N_ref"));
    assert_eq!(data_rows(&out).len(), 101);
    assert!(stderr(&a).contains("wall-clock"));
}

#[test]
fn static_matches_reference() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "s.toml", STATIC);
    let out = stdout(&run(&["static", "--config", cfg.to_str().unwrap()]));
    for row in data_rows(&out) {
        let u: f64 = row[1].parse().unwrap();
        let r: f64 = row[2].parse().unwrap();
        assert!((u - r).abs() < 1e-4, "{row:?}");
    }
    assert!(trailer_value(&out, "l2_error_u") < 1e-4);
}

#[test]
fn zero_load_gives_zero_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "z.toml",
        &STATIC.replace("sine_p0 = 1.0", "sine_p0 = 0.0"),
    );
    let o = run(&["static", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    for row in data_rows(&stdout(&o)) {
        assert_eq!(row[1].parse::<f64>().unwrap(), 0.0);
        assert_eq!(row[3].parse::<f64>().unwrap(), 0.0);
    }
}

#[test]
fn linear_spectrum_has_interior_dof_count() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "sp.toml",
        "study = \"spectrum\"\n[model]\nlength = 1.0\nea = 1.0\nmu = 1.0\n[mesh]\np = 1\npreset = \"uniform\"\nelements = 10\n",
    );
    let o = run(&["spectrum", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert_eq!(
        out.lines().nth(1),
        Some("n,omega_h,omega_ref,ratio,outlier_flag")
    );
    let rows = data_rows(&out);
    assert_eq!(rows.len(), 9);
    let first: f64 = rows[0][3].parse().unwrap();
    assert!((1.0..1.01).contains(&first));
}

#[test]
fn static_convergence_slope_is_p_plus_one() {
    let dir = tempfile::tempdir().unwrap();
    let text = STATIC
        .replace("study = \"static\"", "study = \"convergence\"")
        .replace("refinement = 2", "refinements = [2, 4, 8, 16]");
    let cfg = write(dir.path(), "c.toml", &text);
    let o = run(&["convergence", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.lines().last().unwrap().starts_with("# slope="));
    let slope = trailer_value(&out, "slope");
    assert!((slope - 4.0).abs() < 0.3, "slope {slope}");
}

#[test]
fn unknown_key_is_named_and_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "u.toml",
        &STATIC.replace("refinement = 2", "refinment = 2"),
    );
    let o = run(&["static", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("refinment"), "{err}");
    assert!(err.contains("mesh"), "{err}");
}

#[test]
fn invalid_value_is_named_and_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "q.toml",
        &STATIC.replace("q = \"max\"", "q = 7"),
    );
    let o = run(&["static", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("scheme.q"), "{}", stderr(&o));
}

#[test]
fn missing_file_exits_4() {
    let o = run(&["static", "--config", "/nonexistent/dir/none.toml"]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn unwritable_output_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "s.toml", STATIC);
    let blocker = write(dir.path(), "file", "");
    let out = blocker.join("out.csv");
    let o = run(&[
        "static",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn unstable_step_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "t.toml",
        "study = \"transient\"\n[model]\nlength = 1.0\nea = 1.0\nmu = 1.0\n[mesh]\np = 2\npreset = \"uniform\"\nelements = 20\n\
         [integrator]\nmethod = \"cdm\"\ndt_rule = \"fixed\"\ndt = 0.1\nt_end = 100.0\ninitial = \"standing_wave\"\n",
    );
    let o = run(&["transient", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn bad_signal_header_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "sig.csv", "t,a\n0,0\n1,1\n");
    let cfg = write(
        dir.path(),
        "g.toml",
        "study = \"transient\"\n[model]\nlength = 1.0\nea = 1.0\nmu = 1.0\nright = \"free\"\n[mesh]\np = 2\npreset = \"uniform\"\nelements = 4\n\
         [integrator]\nt_end = 1.0\nforcing = \"ground\"\nsignal = \"sig.csv\"\n",
    );
    let o = run(&["transient", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("time,accel"), "{}", stderr(&o));
}

#[test]
fn ground_transient_reads_fixture_signal() {
    let dir = tempfile::tempdir().unwrap();
    let signal =
        Path::new(env!("CARGO_MANIFEST_DIR")).join("../../tests/fixtures/synthetic_burst.csv");
    let cfg = write(
        dir.path(),
        "g.toml",
        &format!(
            "study = \"transient\"\n[model]\nlength = 1.0\nea = 1.0\nmu = 1.0\nright = \"free\"\n[mesh]\np = 2\npreset = \"uniform\"\nelements = 8\n\
             [scheme]\ntest_fn = \"ad\"\nq = 1\nlumping = \"rowsum\"\n\
             [integrator]\nt_end = 5.0\nforcing = \"ground\"\nsignal = \"{}\"\nprobes = [0.5, 1.0]\nstride = 50\n",
            signal.display()
        ),
    );
    let o = run(&["transient", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert_eq!(out.lines().nth(1), Some("t,u_1,v_1,a_1,u_2,v_2,a_2"));
    assert!(out.lines().next().unwrap().contains("dt=1.25"));
    let rows = data_rows(&out);
    let last: f64 = rows.last().unwrap()[0].parse().unwrap();
    assert!((last - 5.0).abs() < 1e-12);
}

#[test]
fn sweep_writes_labelled_files_independent_of_jobs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "s.toml", STATIC);
    let run_sweep = |sub: &str, jobs: &str| {
        let out = dir.path().join(sub).join("r.csv");
        let o = run(&[
            "static",
            "--config",
            cfg.to_str().unwrap(),
            "--p",
            "2,3",
            "--scheme",
            "nurbs,ad",
            "--q",
            "1",
            "--jobs",
            jobs,
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        let mut names: Vec<_> = fs::read_dir(dir.path().join(sub))
            .unwrap()
            .map(|e| e.unwrap().file_name())
            .collect();
        names.sort();
        names
    };
    let serial = run_sweep("serial", "1");
    let parallel = run_sweep("parallel", "3");
    assert_eq!(serial.len(), 4, "{serial:?}");
    assert_eq!(serial, parallel);
    for name in &serial {
        let a = fs::read(dir.path().join("serial").join(name)).unwrap();
        let b = fs::read(dir.path().join("parallel").join(name)).unwrap();
        assert_eq!(a, b);
    }
    assert!(serial.iter().any(|n| n.to_str() == Some("r_p2_ad_q1.csv")));
}

#[test]
fn q_override_without_ad_scheme_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "s.toml",
        &STATIC.replace("test_fn = \"ad\"\nq = \"max\"", "test_fn = \"nurbs\""),
    );
    let o = run(&["static", "--config", cfg.to_str().unwrap(), "--q", "2"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--q"));
}

#[test]
fn shipped_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().and_then(|e| e.to_str()) == Some("toml") {
            iga_dual_cli::parse_config(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            n += 1;
        }
    }
    assert!(n >= 5);
}
