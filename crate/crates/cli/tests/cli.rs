//! End-to-end checks of the `hopm` binary: file round-trips, preset
//! constraint rejection, and the experiment pipeline.

use std::path::PathBuf;
use std::process::Command;

fn hopm() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hopm"))
}

fn tempdir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("hopm-cli-test-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn generate_certify_solve_roundtrip() {
    let dir = tempdir("roundtrip");
    let tensor = dir.join("inst.txt");
    let out = hopm()
        .args([
            "generate", "--n", "6", "--m", "3", "--r", "2", "--k", "3", "--p", "1.0", "--q", "0.0",
            "--seed", "5", "--out",
        ])
        .arg(&tensor)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let truth = dir.join("inst.truth");
    assert!(truth.exists());

    let out = hopm()
        .args(["certify", "--tensor"])
        .arg(&tensor)
        .args(["--truth"])
        .arg(&truth)
        .args(["--p", "1.0", "--q", "0.0"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(
        text.contains("certificate: PASS"),
        "certify output:\n{text}"
    );

    let out = hopm()
        .args(["solve", "--tensor"])
        .arg(&tensor)
        .args(["--truth"])
        .arg(&truth)
        .args(["--r", "2", "--k", "3", "--method", "exhaustive"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(
        text.contains("exact vs truth: true"),
        "solve output:\n{text}"
    );

    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn norms_reads_tensor_files() {
    let dir = tempdir("norms");
    let tensor = dir.join("t.txt");
    // 2x2x2 all-one tensor: spectral norm 2^{3/2}
    std::fs::write(&tensor, "3 2\n1 1 1 1 1 1 1 1\n").unwrap();
    let out = hopm()
        .args(["norms", "--tensor"])
        .arg(&tensor)
        .args(["--oracle"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(
        text.contains("2.828427124746190"),
        "expected 2^1.5 in output:\n{text}"
    );
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn norms_nuclear_bracket_meets_for_agreement_tensor() {
    let dir = tempdir("bracket");
    // Y* for clusters {0,1} and {2,3} at m=3: nuclear norm is exactly
    // r*k^{3/2} = 2*2sqrt(2), witnessed from both sides
    let n = 4usize;
    let assign = [0usize, 0, 1, 1];
    let mut values = Vec::new();
    for i in 0..n {
        for j in 0..n {
            for l in 0..n {
                let same = assign[i] == assign[j] && assign[j] == assign[l];
                values.push(if same { "1" } else { "0" });
            }
        }
    }
    let tensor = dir.join("ystar.txt");
    std::fs::write(&tensor, format!("3 {n}\n{}\n", values.join(" "))).unwrap();

    let scale = 2f64.powf(-1.5);
    let witness_values: Vec<String> = values
        .iter()
        .map(|v| {
            if *v == "1" {
                scale.to_string()
            } else {
                "0".into()
            }
        })
        .collect();
    let witness = dir.join("witness.txt");
    std::fs::write(&witness, format!("3 {n}\n{}\n", witness_values.join(" "))).unwrap();

    let s = std::f64::consts::FRAC_1_SQRT_2;
    let w = 2f64.powf(1.5);
    let atoms = dir.join("atoms.txt");
    std::fs::write(&atoms, format!("{w} {s} {s} 0 0\n{w} 0 0 {s} {s}\n")).unwrap();

    let out = hopm()
        .args(["norms", "--tensor"])
        .arg(&tensor)
        .args(["--atoms"])
        .arg(&atoms)
        .args(["--witness"])
        .arg(&witness)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("nuclear bracket"), "output:\n{text}");
    assert!(text.contains("exact"), "bracket should meet:\n{text}");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn preset_constraint_violations_are_rejected() {
    // densest fixes r = 1
    let out = hopm()
        .args([
            "generate",
            "--preset",
            "densest",
            "--n",
            "8",
            "--m",
            "3",
            "--r",
            "2",
            "--k",
            "4",
            "--p",
            "0.8",
            "--q",
            "0.2",
            "--out",
            "/dev/null",
        ])
        .output()
        .unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("densest preset fixes r = 1"), "stderr: {err}");

    // hsbm fixes n = r*k
    let out = hopm()
        .args([
            "generate",
            "--preset",
            "hsbm",
            "--n",
            "11",
            "--m",
            "3",
            "--r",
            "2",
            "--k",
            "5",
            "--p",
            "0.8",
            "--q",
            "0.2",
            "--out",
            "/dev/null",
        ])
        .output()
        .unwrap();
    assert!(!out.status.success());

    // hyperclique fixes p = 1 but accepts it explicitly
    let dir = tempdir("preset");
    let out = hopm()
        .args([
            "generate",
            "--preset",
            "hyperclique",
            "--n",
            "6",
            "--m",
            "3",
            "--r",
            "2",
            "--k",
            "3",
            "--p",
            "1.0",
            "--q",
            "0.3",
            "--out",
        ])
        .arg(dir.join("h.txt"))
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn experiment_pipeline_to_report() {
    let dir = tempdir("experiment");
    let csv = dir.join("grid.csv");
    let out = hopm()
        .args([
            "experiment",
            "run",
            "--n",
            "5",
            "--m",
            "3",
            "--r",
            "2",
            "--k",
            "2",
            "--p",
            "1.0",
            "--q",
            "0.0",
            "--trials",
            "3",
            "--tasks",
            "certify,solve",
            "--out",
        ])
        .arg(&csv)
        .args(["--seed", "3"])
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let body = std::fs::read_to_string(&csv).unwrap();
    assert!(body.starts_with("row_type,cell_id,trial,"));
    assert!(body.contains("aggregate,0,"));

    let out = hopm()
        .args(["experiment", "report", "--csv"])
        .arg(&csv)
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("no flags"), "report output:\n{text}");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn solve_budget_flag_is_enforced() {
    let dir = tempdir("budget");
    let tensor = dir.join("b.txt");
    let out = hopm()
        .args([
            "generate", "--n", "8", "--m", "3", "--r", "2", "--k", "4", "--p", "0.9", "--q", "0.1",
            "--out",
        ])
        .arg(&tensor)
        .output()
        .unwrap();
    assert!(out.status.success());
    let out = hopm()
        .args(["solve", "--tensor"])
        .arg(&tensor)
        .args([
            "--r",
            "2",
            "--k",
            "4",
            "--method",
            "exhaustive",
            "--budget",
            "10",
        ])
        .output()
        .unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("budget"), "stderr: {err}");
    std::fs::remove_dir_all(&dir).ok();
}
