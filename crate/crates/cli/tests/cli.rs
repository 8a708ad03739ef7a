use std::path::PathBuf;
use std::process::Command;

fn ebh() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ebh"))
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("ebh-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

const SMALL: &[&str] = &["--L", "4", "--N", "4", "--values", "0:2:3"];

#[test]
fn sweep_writes_csv() {
    let out = ebh()
        .arg("sweep")
        .args(SMALL)
        .args(["--axis", "J"])
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 4);
    assert_eq!(
        lines[0],
        "2J_over_U,E0,lambda,var_R,r_sep,mean_R,q_used,theta_signed,theta_rms,S_V,delta,residual"
    );
    // gap is off by default for the generic sweep
    assert!(lines[1..]
        .iter()
        .all(|l| l.split(',').nth(10) == Some("nan")));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = scratch("repro");
    let run = |name: &str, threads: &str| {
        let path = dir.join(name);
        let st = ebh()
            .env("RAYON_NUM_THREADS", threads)
            .arg("sweep")
            .args(SMALL)
            .args([
                "--axis",
                "ULR",
                "--J",
                "0.3",
                "--observables",
                "all",
                "--q",
                "min",
                "--seed",
                "5",
            ])
            .arg("--out")
            .arg(&path)
            .status()
            .unwrap();
        assert!(st.success());
        std::fs::read(path).unwrap()
    };
    let a = run("a.csv", "1");
    let b = run("b.csv", "1");
    let c = run("c.csv", "3");
    assert_eq!(a, b);
    assert_eq!(a, c);
    std::fs::remove_dir_all(dir).ok();
}

#[test]
fn json_output_and_config_file() {
    let dir = scratch("json");
    let cfg = dir.join("run.cfg");
    std::fs::write(
        &cfg,
        "L = 4\nN = 4\naxis = J\nvalues = 0.5,1.0\nformat = csv\n",
    )
    .unwrap();
    let out = ebh()
        .arg("sweep")
        .arg("--config")
        .arg(&cfg)
        .args(["--format", "json"])
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.trim_start().starts_with('['));
    assert_eq!(text.matches("\"2J_over_U\"").count(), 2);
    std::fs::remove_dir_all(dir).ok();
}

#[test]
fn fig3_writes_one_file_per_coupling() {
    let dir = scratch("fig3");
    let st = ebh()
        .arg("fig3")
        .args(["--L", "4", "--N", "4", "--values", "0.5,1.5"])
        .arg("--out")
        .arg(dir.join("fig3.csv"))
        .status()
        .unwrap();
    assert!(st.success());
    for tag in ["ULR0", "ULR0.1", "ULR0.2"] {
        let text = std::fs::read_to_string(dir.join(format!("fig3_{tag}.csv"))).unwrap();
        assert_eq!(text.lines().count(), 3);
    }
    std::fs::remove_dir_all(dir).ok();
}

#[test]
fn failures_exit_nonzero() {
    // odd L with the cavity term
    let out = ebh()
        .arg("sweep")
        .args([
            "--L",
            "3",
            "--N",
            "3",
            "--axis",
            "ULR",
            "--values",
            "0.5",
            "--observables",
            "witness",
        ])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("even number of sites"));

    // residual bound below machine precision
    let out = ebh()
        .arg("sweep")
        .args(SMALL)
        .args(["--axis", "J", "--tol", "1e-30"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("sweep failed at axis value"));

    let out = ebh().arg("sweep").args(["--L", "4"]).output().unwrap();
    assert!(!out.status.success());
}
