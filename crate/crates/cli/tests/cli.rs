use std::path::Path;
use std::process::{Command, Output};

fn nvrf(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nvrf"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

const CONFIG: &str = "\
# minimal complete configuration
protocol.kind = slope
protocol.beta = 1e4
noise.kappa = 0.5
noise.xi = 1
nv.rho = 8e23
nv.sigma = 1e5
optics.p_laser = 1 W
optics.i_sat = 1e9
optics.beam = parallel
cpw.w = 10 um
cpw.z = 50
cpw.l = 1 mm
loop.r = 10 um
loop.z = 50
grid.nx = 120
grid.nz = 120
";

#[test]
fn eval_prints_sensitivity_with_units() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.cfg"), CONFIG).unwrap();
    let o = nvrf(&["eval", "--config", "c.cfg"], dir.path());
    assert!(o.status.success(), "{o:?}");
    let s = stdout(&o);
    assert!(s.contains("eta = 1.74"), "{s}");
    assert!(s.contains("W/Hz"));
    assert!(s.contains("T/Hz^0.5"));
}

#[test]
fn eval_with_field_map_and_loop_beam() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = CONFIG.replace("optics.beam = parallel", "optics.beam = loop") + "probe.c1 = 0.05\nprobe.c2 = 0.05\n";
    std::fs::write(dir.path().join("c.cfg"), cfg).unwrap();
    let o = nvrf(&["eval", "--config", "c.cfg", "--field-map"], dir.path());
    // a region spanning a handful of nodes is rejected as under-resolved
    assert_eq!(o.status.code(), Some(2), "{o:?}");
    assert!(String::from_utf8_lossy(&o.stderr).contains("unmasked nodes"));
    std::fs::write(dir.path().join("d.cfg"), "probe.c1 = 0.85\nprobe.c2 = 0.9\noptics.beam = loop\n").unwrap();
    let o = nvrf(&["eval", "--preset", "paper_defaults", "--config", "d.cfg", "--field-map"], dir.path());
    assert!(o.status.success(), "{o:?}");
    assert!(stdout(&o).contains("beam loop"));
}

#[test]
fn bad_config_exits_with_one_and_names_the_key() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.cfg"), CONFIG.replace("noise.kappa = 0.5", "noise.kappa = 0.3")).unwrap();
    let o = nvrf(&["eval", "--config", "c.cfg"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("noise.kappa") && err.contains("line 4"), "{err}");

    std::fs::write(dir.path().join("m.cfg"), CONFIG.replace("cpw.l = 1 mm\n", "")).unwrap();
    let o = nvrf(&["eval", "--config", "m.cfg"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("cpw.l"));
}

#[test]
fn usage_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(nvrf(&["frobnicate"], dir.path()).status.code(), Some(1));
    assert_eq!(nvrf(&["eval"], dir.path()).status.code(), Some(1));
    assert_eq!(nvrf(&["eval", "--preset", "nope"], dir.path()).status.code(), Some(1));
    assert_eq!(nvrf(&["--help"], dir.path()).status.code(), Some(0));
}

#[test]
fn scaling_writes_exponent_csv() {
    let dir = tempfile::tempdir().unwrap();
    let o = nvrf(
        &["scaling", "--preset", "paper_defaults", "--geometry", "cpw", "--beam", "parallel", "--out", "res"],
        dir.path(),
    );
    assert!(o.status.success(), "{o:?}");
    let csv = std::fs::read_to_string(dir.path().join("res/exponents_parallel.csv")).unwrap();
    assert!(csv.starts_with("geometry,beam,regime,protocol,kappa_noise,predicted,fitted,residual,pass\n"));
    assert_eq!(csv.lines().count(), 9);
    assert!(csv.lines().skip(1).all(|l| l.ends_with(",true")));
    assert!(stdout(&o).contains("8/8 cells agree"));
}

#[test]
fn sweep_and_export_map_and_optimize() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.cfg"), CONFIG).unwrap();
    let o = nvrf(&["sweep", "--config", "c.cfg", "--geometry", "loop", "--lasers", "0.01,1", "--out", "o"], dir.path());
    assert!(o.status.success(), "{o:?}");
    let csv = std::fs::read_to_string(dir.path().join("o/sweep_loop_axial_slope.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 * 81);

    let o = nvrf(&["export-map", "--config", "c.cfg", "--returns", "--out", "o"], dir.path());
    assert!(o.status.success(), "{o:?}");
    let map = std::fs::read_to_string(dir.path().join("o/map_cpw.csv")).unwrap();
    assert!(map.starts_with("x,z,alpha,masked\n"));
    assert_eq!(map.lines().count(), 1 + 120 * 120);

    let o = nvrf(&["optimize", "--config", "c.cfg", "--returns", "--protocol", "variance", "--out", "o"], dir.path());
    assert!(o.status.success(), "{o:?}");
    assert!(stdout(&o).contains("optimum c1"));
    let trace = std::fs::read_to_string(dir.path().join("o/optimize_cpw_variance.csv")).unwrap();
    assert!(trace.starts_with("c1,c2,fom,zeta,volume\n"));
}

#[test]
fn coarse_grid_is_a_numerical_failure() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.cfg"), CONFIG.replace("grid.nx = 120", "grid.nx = 16")).unwrap();
    let o = nvrf(&["export-map", "--config", "c.cfg"], dir.path());
    // an over-coarse lattice is a configuration problem
    assert_eq!(o.status.code(), Some(1), "{o:?}");
}

#[test]
fn report_is_byte_identical_across_runs_and_threads() {
    let dir = tempfile::tempdir().unwrap();
    let run = |out: &str, threads: &str| {
        let o = nvrf(&["report", "--preset", "paper_defaults", "--out", out, "--threads", threads], dir.path());
        assert!(o.status.success(), "{o:?}");
        assert_eq!(stdout(&o).lines().filter(|l| l.starts_with("wrote")).count(), 8);
    };
    run("a", "1");
    run("b", "4");
    let names = ["report.json", "fig2c.csv", "fig2d.csv", "fig2e.csv", "fig2f.csv", "fig3b.csv", "fig3c.csv", "exponents.csv"];
    for n in names {
        let a = std::fs::read(dir.path().join("a").join(n)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(n)).unwrap();
        assert_eq!(a, b, "{n}");
    }
    let json = std::fs::read_to_string(dir.path().join("a/report.json")).unwrap();
    assert!(json.contains("\"schema\": 1"));
    assert!(json.contains("\"eta_slope\""));
    assert!(json.contains("\"tables_pass\": true"));
}
