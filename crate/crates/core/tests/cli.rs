use std::process::{Command, Output};

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cran-coexist"))
        .args(args)
        .output()
        .expect("binary runs")
}

#[test]
fn list_presets_succeeds() {
    let out = cli(&["list-presets"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 5);
}

#[test]
fn eval_succeeds_and_rejects_bad_values() {
    let out = cli(&["eval", "--m_cells", "8", "--samples", "100", "--q", "0.2"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8(out.stdout).unwrap().contains("noma_sic"));

    let out = cli(&["eval", "--eps_u", "2"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8(out.stderr).unwrap().contains("eps_u"));

    assert_eq!(cli(&["eval", "--bogus", "1"]).status.code(), Some(1));
    assert_eq!(
        cli(&["eval", "--config", "/nonexistent.toml"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(cli(&["--help"]).status.code(), Some(0));
}

#[test]
fn sweep_from_spec_file_writes_output() {
    let dir = std::env::temp_dir().join(format!("cran-coexist-it-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let spec = dir.join("spec.toml");
    std::fs::write(
        &spec,
        "name = \"mine\"\naxis = \"p_b_db\"\ngrid = [0, 5, 10]\nschemes = [\"oma\", \"noma_sic\"]\noutputs = [\"embb_rate\", \"feasible\"]\nsamples = 50\n\n[base]\nm_cells = 6\n",
    )
    .unwrap();
    let out_path = dir.join("out.json");
    let out = cli(&[
        "sweep",
        "--spec",
        spec.to_str().unwrap(),
        "--format",
        "json",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(&out_path).unwrap()).unwrap();
    assert_eq!(v["rows"].as_array().unwrap().len(), 3 * 2 * 2);
    assert_eq!(v["provenance"]["sweep"], "mine");

    std::fs::write(
        &spec,
        "name = \"bad\"\naxis = \"q\"\ngrid = []\nschemes = [\"oma\"]\n",
    )
    .unwrap();
    assert_eq!(
        cli(&["sweep", "--spec", spec.to_str().unwrap()])
            .status
            .code(),
        Some(1)
    );
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn seed_changes_monte_carlo_output() {
    let run = |seed: &str| {
        cli(&[
            "sweep",
            "--preset",
            "fig6",
            "--seed",
            seed,
            "--samples",
            "50",
            "--m_cells",
            "6",
        ])
        .stdout
    };
    assert_eq!(run("3"), run("3"));
    assert_ne!(run("3"), run("4"));
}
