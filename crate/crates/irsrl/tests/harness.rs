use std::fs;
use std::path::Path;
use std::process::Command;

use irsrl::compare::{compare_variants, SweepAxis};
use irsrl::experiment::{checkpoint_path, run_experiment, RunOptions};
use irsrl::metrics::{parse_metrics, without_wall_clock};
use irsrl::plot::plot_curves;
use irsrl::{ExperimentConfig, Preset, Variant};

const BIN: &str = env!("CARGO_BIN_EXE_irsrl");

fn small(out: &Path) -> ExperimentConfig {
    ExperimentConfig {
        seeds: vec![0, 1],
        episodes: 3,
        irs_elements: 3,
        antennas: 2,
        window: 2,
        episode_len: 25,
        hidden: vec![16, 16],
        fourier_dim: 8,
        batch_size: 8,
        warmup_steps: 20,
        buffer_capacity: 10_000,
        out_dir: out.display().to_string(),
        ..ExperimentConfig::preset(Preset::Desk)
    }
}

fn write_config(dir: &Path, cfg: &ExperimentConfig) -> std::path::PathBuf {
    let path = dir.join("config.json");
    fs::write(&path, cfg.to_json()).unwrap();
    path
}

#[test]
fn two_seeds_three_episodes_give_six_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let cfg = write_config(dir.path(), &small(&out));
    let status = Command::new(BIN).args(["train", "--config"]).arg(&cfg).output().unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    let text = fs::read_to_string(out.join("metrics.csv")).unwrap();
    assert_eq!(text.lines().next().unwrap(), "seed,episode,mean_snr_db,critic_loss,actor_obj,sigma,wall_s");
    let rows = parse_metrics(&text).unwrap();
    assert_eq!(rows.len(), 6);
    assert!(rows.iter().all(|r| r.mean_snr_db.is_finite()));
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["episodes"], 3);
    assert!(manifest["artifact_version"].as_str().unwrap().starts_with("irsrl "));
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let cfg = ExperimentConfig {
            variant: Variant::Ff,
            ..small(&out)
        };
        let path = dir.path().join(format!("{name}.json"));
        fs::write(&path, cfg.to_json()).unwrap();
        let o = Command::new(BIN)
            .args(["train", "--seed", "7", "--config"])
            .arg(&path)
            .output()
            .unwrap();
        assert!(o.status.success());
        (
            without_wall_clock(&fs::read_to_string(out.join("metrics.csv")).unwrap()),
            fs::read(checkpoint_path(&out, 7)).unwrap(),
        )
    };
    let (m1, c1) = run("a");
    let (m2, c2) = run("b");
    assert_eq!(m1, m2);
    assert_eq!(c1, c2);
}

#[test]
fn divergence_keeps_rows_and_other_seeds() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig {
        variant: Variant::SnrState,
        ..small(dir.path())
    };
    let opts = RunOptions {
        inject_nan: vec![(0, 1)],
        ..RunOptions::default()
    };
    let s = run_experiment(&cfg, &opts).unwrap();
    let bad = &s.seeds[0];
    assert!(bad.diverged);
    assert_eq!(bad.status(), "diverged");
    // Episode 0 completed; episode 1 is kept with the marker.
    assert_eq!(bad.rows.len(), 2);
    assert!(bad.rows[1].critic_loss.is_nan() && bad.rows[1].actor_obj.is_nan());
    assert!(bad.rows[0].critic_loss.is_finite());
    let good = &s.seeds[1];
    assert!(!good.diverged);
    assert_eq!(good.rows.len(), 3);

    let text = fs::read_to_string(dir.path().join("metrics.csv")).unwrap();
    assert_eq!(parse_metrics(&text).unwrap().len(), 5);
    assert!(checkpoint_path(dir.path(), 0).exists());
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seeds"][0]["status"], "diverged");
    assert_eq!(manifest["seeds"][1]["status"], "completed");
}

#[test]
fn plot_output_is_well_formed_svg() {
    let dir = tempfile::tempdir().unwrap();
    let mut csv = String::from("seed,episode,mean_snr_db,critic_loss,actor_obj,sigma,wall_s\n");
    for e in 0..5 {
        csv += &format!("0,{e},1,0,0,0.1,0\n1,{e},3,0,0,0.1,0\n");
    }
    let a = dir.path().join("ff/metrics.csv");
    fs::create_dir_all(a.parent().unwrap()).unwrap();
    fs::write(&a, &csv).unwrap();
    let out = dir.path().join("curves.svg");
    plot_curves(&[a.as_path()], &out).unwrap();
    let svg = fs::read_to_string(&out).unwrap();
    let doc = roxmltree::Document::parse(&svg).unwrap();
    assert_eq!(doc.root_element().tag_name().name(), "svg");
    let mean = doc
        .descendants()
        .find(|n| n.attribute("class") == Some("mean"))
        .unwrap();
    // Constant 1 and 3 dB: the mean sits at 2 dB, midway inside the band,
    // so every mean point has the same y.
    let ys: Vec<&str> = mean
        .attribute("points")
        .unwrap()
        .split(' ')
        .map(|p| p.split(',').nth(1).unwrap())
        .collect();
    assert!(ys.windows(2).all(|w| w[0] == w[1]));
    assert!(svg.contains(">ff<"));

    // Same input, same bytes.
    let out2 = dir.path().join("again.svg");
    plot_curves(&[a.as_path()], &out2).unwrap();
    assert_eq!(svg, fs::read_to_string(&out2).unwrap());
}

#[test]
fn cli_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let code = |args: &[&str]| Command::new(BIN).args(args).output().unwrap().status.code();

    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"gamma": 1.5}"#).unwrap();
    let o = Command::new(BIN).args(["train", "--config"]).arg(&bad).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("gamma"));

    let unknown = dir.path().join("unknown.json");
    fs::write(&unknown, r#"{"gama": 0.5}"#).unwrap();
    assert_eq!(code(&["train", "--config", unknown.to_str().unwrap()]), Some(2));
    assert_eq!(code(&["train", "--config", "/nonexistent/config.json"]), Some(2));
    assert_eq!(code(&["compare", "--config", bad.to_str().unwrap(), "--sweep", "window"]), Some(2));

    let oracle = dir.path().join("oracle.json");
    fs::write(&oracle, r#"{"preset": "desk", "irs_elements": 3, "antennas": 2}"#).unwrap();
    let o = Command::new(BIN)
        .args(["oracle-check", "--instances", "50", "--config"])
        .arg(&oracle)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8_lossy(&o.stdout);
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 4, "{text}");

    let garbage = dir.path().join("garbage.csv");
    fs::write(&garbage, "not,a,metrics,file\n").unwrap();
    let svg = dir.path().join("x.svg");
    assert_eq!(
        code(&["plot", "--in", garbage.to_str().unwrap(), "--out", svg.to_str().unwrap()]),
        Some(3)
    );
    assert!(!svg.exists());
}

#[test]
fn single_setting_sweep_matches_plain_run() {
    let dir = tempfile::tempdir().unwrap();
    let base = ExperimentConfig {
        seeds: vec![3],
        ..small(&dir.path().join("sweep"))
    };
    let cmp = compare_variants(&base, SweepAxis::Window, Some(&[2]), &RunOptions::default()).unwrap();
    assert_eq!(cmp.rows.len(), 1);
    let plain = run_experiment(
        &ExperimentConfig {
            out_dir: dir.path().join("plain").display().to_string(),
            ..base.clone()
        },
        &RunOptions::default(),
    )
    .unwrap();
    assert_eq!(cmp.rows[0].final_snr_db, plain.final_snr_db());
    let summary = fs::read_to_string(dir.path().join("sweep/summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 2);
    assert!(summary.lines().nth(1).unwrap().starts_with("W=2,"));
    roxmltree::Document::parse(&fs::read_to_string(dir.path().join("sweep/window.svg")).unwrap()).unwrap();
    assert!(dir.path().join("sweep/W=2/metrics.csv").exists());
}

#[test]
fn paper_preset_from_empty_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("empty.json");
    fs::write(&path, "{}").unwrap();
    let cfg = irsrl::load_config(&path).unwrap();
    assert_eq!(cfg, ExperimentConfig::preset(Preset::Paper));
    assert_eq!((cfg.irs_elements, cfg.antennas, cfg.window), (20, 5, 5));
}
