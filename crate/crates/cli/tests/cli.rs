//! End-to-end runs of the `gmi` binary: generate -> estimate -> detequiv
//! pipeline, the simulators, and the exit-code contract.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gmi"))
}

fn workdir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join("gmi-cli-tests").join(name);
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_config(dir: &Path, trials: usize, t: usize, parallelism: usize) -> PathBuf {
    let path = dir.join("config.json");
    fs::write(
        &path,
        format!(
            r#"{{
  "scenario": {{"n": 4, "n0": 4, "m": 15, "t": {t}, "k": 8,
               "snr_db": 10.0, "sir_db": 0.0}},
  "trials": {trials},
  "master_seed": 77,
  "parallelism": {parallelism}
}}"#
        ),
    )
    .unwrap();
    path
}

fn check(output: &Output) {
    assert!(
        output.status.success(),
        "command failed: {}",
        String::from_utf8_lossy(&output.stderr)
    );
}

#[test]
fn generate_estimate_detequiv_pipeline() {
    let dir = workdir("pipeline");
    let config = write_config(&dir, 10, 3, 1);
    let channels = dir.join("channels");
    let obs = dir.join("obs");

    let out = bin()
        .args(["generate", "--config"])
        .arg(&config)
        .arg("--channels-out")
        .arg(&channels)
        .arg("--obs-out")
        .arg(&obs)
        .output()
        .unwrap();
    check(&out);
    assert!(channels.join("H_3.cmat").exists());
    assert!(channels.join("G_1.cmat").exists());
    assert!(obs.join("Y_2.cmat").exists());

    let est = dir.join("est.csv");
    let out = bin()
        .args(["estimate", "--channels"])
        .arg(&channels)
        .arg("--obs")
        .arg(&obs)
        .arg("--out")
        .arg(&est)
        .output()
        .unwrap();
    check(&out);
    let text = fs::read_to_string(&est).unwrap();
    let header = text.lines().next().unwrap();
    assert_eq!(
        header,
        "i_se,i_g,yhat_1,yhat_2,yhat_3,iters_1,iters_2,iters_3"
    );
    assert_eq!(text.lines().count(), 2);

    let de = dir.join("de.csv");
    let out = bin()
        .args(["detequiv", "--channels"])
        .arg(&channels)
        .args(["--y", "1.0", "--out"])
        .arg(&de)
        .output()
        .unwrap();
    check(&out);
    let text = fs::read_to_string(&de).unwrap();
    assert_eq!(text.lines().next().unwrap(), "t,kappa,v_t,y_star,theta_t");
    // 3 slot rows plus V/alpha/theta aggregates.
    assert_eq!(text.lines().count(), 7);
    assert!(text.lines().nth(4).unwrap().starts_with("V,"));
    assert!(text.lines().last().unwrap().starts_with("theta,"));
}

#[test]
fn estimate_works_without_g_files() {
    let dir = workdir("no-g");
    let config = write_config(&dir, 10, 2, 1);
    let channels = dir.join("channels");
    let obs = dir.join("obs");
    check(
        &bin()
            .args(["generate", "--config"])
            .arg(&config)
            .arg("--channels-out")
            .arg(&channels)
            .arg("--obs-out")
            .arg(&obs)
            .output()
            .unwrap(),
    );
    fs::remove_file(channels.join("G_1.cmat")).unwrap();
    fs::remove_file(channels.join("G_2.cmat")).unwrap();

    let est = dir.join("est.csv");
    check(
        &bin()
            .args(["estimate", "--channels"])
            .arg(&channels)
            .arg("--obs")
            .arg(&obs)
            .arg("--out")
            .arg(&est)
            .output()
            .unwrap(),
    );

    // detequiv, by contrast, needs the unobservable side.
    let out = bin()
        .args(["detequiv", "--channels"])
        .arg(&channels)
        .arg("--out")
        .arg(dir.join("de.csv"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn simulate_mse_sweep_and_reproducibility() {
    let dir = workdir("mse");
    let out_csv = dir.join("curve.csv");
    let mut first = None;
    for parallelism in [1, 8] {
        let config = write_config(&dir, 40, 2, parallelism);
        let out = bin()
            .args(["simulate-mse", "--sweep", "sir", "--values", "0:5:10"])
            .arg("--config")
            .arg(&config)
            .arg("--out")
            .arg(&out_csv)
            .output()
            .unwrap();
        check(&out);
        let bytes = fs::read(&out_csv).unwrap();
        let text = String::from_utf8(bytes.clone()).unwrap();
        assert_eq!(
            text.lines().next().unwrap(),
            "sweep,i_true,theta,mse_th_db,mse_g_db,mse_se_db"
        );
        assert_eq!(text.lines().count(), 4); // header + 3 sweep points
        match &first {
            None => first = Some(bytes),
            Some(prev) => assert_eq!(prev, &bytes, "worker count changed the CSV"),
        }
    }
}

#[test]
fn simulate_hist_emits_footer() {
    let dir = workdir("hist");
    let config = write_config(&dir, 60, 2, 2);
    let out_csv = dir.join("hist.csv");
    check(
        &bin()
            .args(["simulate-hist", "--config"])
            .arg(&config)
            .arg("--out")
            .arg(&out_csv)
            .output()
            .unwrap(),
    );
    let text = fs::read_to_string(&out_csv).unwrap();
    assert!(text.starts_with("bin_lo,bin_hi,density\n"));
    let footer = text.lines().last().unwrap();
    assert!(footer.starts_with("# ks=") && footer.ends_with("n=60"));
}

#[test]
fn validation_errors_exit_2() {
    let dir = workdir("bad-config");
    // M <= N violates the model constraints.
    let config = dir.join("config.json");
    fs::write(
        &config,
        r#"{"scenario": {"n": 4, "n0": 4, "m": 4, "t": 1, "k": 1,
                         "snr_db": 10.0, "sir_db": 0.0},
            "trials": 5, "master_seed": 1}"#,
    )
    .unwrap();
    let out = bin()
        .args(["simulate-hist", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(dir.join("h.csv"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));

    // Unparseable JSON also exits 2.
    fs::write(&config, "{not json").unwrap();
    let out = bin()
        .args(["simulate-hist", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(dir.join("h.csv"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));

    // Malformed sweep range.
    let config = write_config(&dir, 5, 1, 1);
    let out = bin()
        .args(["simulate-mse", "--sweep", "sir", "--values", "10:1:0"])
        .arg("--config")
        .arg(&config)
        .arg("--out")
        .arg(dir.join("c.csv"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn numerical_failures_exit_3() {
    // Observations with fewer effective samples than antennas make the
    // empirical covariance singular: a numerical failure, exit 3.
    let dir = workdir("singular");
    let config = write_config(&dir, 5, 1, 1);
    let channels = dir.join("channels");
    let obs = dir.join("obs");
    check(
        &bin()
            .args(["generate", "--config"])
            .arg(&config)
            .arg("--channels-out")
            .arg(&channels)
            .arg("--obs-out")
            .arg(&obs)
            .output()
            .unwrap(),
    );
    // Zero out the observations: Y Y^H is singular.
    let y = fs::read_to_string(obs.join("Y_1.cmat")).unwrap();
    let zeroed: String = {
        let mut lines: Vec<String> = vec![y.lines().next().unwrap().to_string()];
        for line in y.lines().skip(1) {
            let n = line.split_whitespace().count();
            lines.push(vec!["0.0e0+0.0e0i"; n].join(" "));
        }
        lines.join("\n") + "\n"
    };
    fs::write(obs.join("Y_1.cmat"), zeroed).unwrap();
    let out = bin()
        .args(["estimate", "--channels"])
        .arg(&channels)
        .arg("--obs")
        .arg(&obs)
        .arg("--out")
        .arg(dir.join("est.csv"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
}
