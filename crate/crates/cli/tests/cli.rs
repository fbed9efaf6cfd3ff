use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use rsq::qpe::{all_ones, hopping_probability, Evolution, QpeEngine};
use rsq::spectral::build_ising_hamiltonian;
use rsq::StateVector;
use serde_json::Value;

fn rsq(args: &[&str], env_seed: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_rsq"));
    cmd.args(args).env_remove("RSQ_SEED");
    if let Some(s) = env_seed {
        cmd.env("RSQ_SEED", s);
    }
    cmd.output().expect("binary runs")
}

fn ok(args: &[&str]) {
    let out = rsq(args, None);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn dir_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn spectrum_gap_slope_tracks_barrier() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("s");
    ok(&["--out", dir_str(&out), "spectrum"]);
    let s = json(&out.join("summary.json"));
    let slope = s["log_gap_slope"].as_f64().unwrap();
    assert!((slope + 1.0).abs() < 0.1, "{slope}");
    assert!(s["e0"].as_f64().unwrap().abs() < 1e-6);
    let gaps = fs::read_to_string(out.join("gaps.csv")).unwrap();
    assert_eq!(gaps.lines().count(), 8);
    let m = json(&out.join("manifest.json"));
    let files: Vec<&str> = m["files"]
        .as_array()
        .unwrap()
        .iter()
        .map(|f| f.as_str().unwrap())
        .collect();
    let mut on_disk: Vec<String> = fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    on_disk.sort();
    let mut listed: Vec<String> = files.iter().map(|s| s.to_string()).collect();
    listed.sort();
    assert_eq!(listed, on_disk);
    assert_eq!(m["version"], "v0.1.0");
    assert_eq!(m["config"]["grid"]["n_qubits"], 7);
}

#[test]
fn harmonic_spectrum_has_zero_ground_energy() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("h.toml");
    // the box must hold the ground-state tails, exp(-x²/4T) at x = L/2
    fs::write(
        &cfg,
        "[potential]\nkind = \"harmonic\"\nk = 1.0\n[grid]\nn_qubits = 7\nbox_length = 6.0\n",
    )
    .unwrap();
    let out = tmp.path().join("o");
    ok(&["--config", dir_str(&cfg), "--out", dir_str(&out), "spectrum"]);
    let s = json(&out.join("summary.json"));
    assert!(s["e0"].as_f64().unwrap().abs() < 1e-6);
    assert!(s["barrier"].is_null());
}

#[test]
fn malformed_config_exits_2_without_output() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");
    for text in [
        "temperature = [",
        "bogus = 1",
        "[vqe]\ndepth = 0",
        "[potential]\nkind = \"polynomial\"\ncoeffs = []",
    ] {
        let cfg = tmp.path().join("bad.toml");
        fs::write(&cfg, text).unwrap();
        for cmd in ["rate", "vqe"] {
            let r = rsq(&["--config", dir_str(&cfg), "--out", dir_str(&out), cmd], None);
            assert_eq!(
                r.status.code(),
                Some(2),
                "{text}: {}",
                String::from_utf8_lossy(&r.stderr)
            );
            assert!(!out.exists());
        }
    }
    let r = rsq(&["--out", dir_str(&out), "rate"], Some("not-a-number"));
    assert_eq!(r.status.code(), Some(2));
    let r = rsq(
        &[
            "--out",
            dir_str(&out),
            "qpe-hop",
            "--model",
            "realspace4",
            "--trotter-steps",
            "3",
        ],
        None,
    );
    assert_eq!(r.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn rate_matches_gap_at_eight_qubits() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("r");
    ok(&["--out", dir_str(&out), "rate", "--n", "8"]);
    let r = json(&out.join("rate.json"));
    let ratio = r["E0_susy"].as_f64().unwrap() / r["delta_H"].as_f64().unwrap();
    assert!((0.95..=1.05).contains(&ratio), "{ratio}");
    assert!((r["kramers"].as_f64().unwrap() - 6.07e-3).abs() < 1e-4);
    assert_eq!(r["susy_over_gap"].as_f64().unwrap(), ratio);
}

#[test]
fn current_peaks_at_the_barrier() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("c");
    ok(&["--out", dir_str(&out), "current"]);
    let c = json(&out.join("current.json"));
    assert_eq!(c["argmax_x"].as_f64(), c["barrier_x"].as_f64());
    let rows = fs::read_to_string(out.join("current.csv")).unwrap();
    assert_eq!(rows.lines().count(), 129);
}

#[test]
fn qpe_hop_models() {
    let tmp = tempfile::tempdir().unwrap();
    let hop = |args: &[&str]| {
        let out = tmp.path().join("q");
        let mut full = vec!["--out", dir_str(&out), "qpe-hop"];
        full.extend_from_slice(args);
        ok(&full);
        json(&out.join("qpe.json"))["hopping_probability"].as_f64().unwrap()
    };
    let p = hop(&["--model", "ising", "--ns", "2", "--t", "1"]);
    assert!((0.45..=0.55).contains(&p), "{p}");
    let p = hop(&["--model", "realspace4", "--neps", "4"]);
    assert!((0.40..=0.60).contains(&p), "{p}");
    let p = hop(&[
        "--model",
        "effective",
        "--n",
        "5",
        "--box-length",
        "4",
        "--neps",
        "18",
        "--shots",
        "2000",
    ]);
    assert!((0.45..=0.55).contains(&p), "{p}");

    // the command reports exactly what the library computes
    let p = hop(&["--model", "ising", "--ns", "3", "--t", "1", "--seed", "4"]);
    let engine = QpeEngine::new(
        &build_ising_hamiltonian(3, 1.0, 0.1).unwrap(),
        10,
        Some(1.0),
        true,
        Evolution::Exact,
    )
    .unwrap();
    let outcome = engine.run(&StateVector::zero(3), 4096, 4).unwrap();
    assert_eq!(p, hopping_probability(&outcome, &[all_ones(3)]).unwrap());
}

#[test]
fn vqe_sweep_writes_monotone_energies() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("v");
    ok(&[
        "--out",
        dir_str(&out),
        "vqe",
        "--n",
        "3",
        "--depth",
        "2",
        "--restarts",
        "2",
        "--exact",
    ]);
    let v = json(&out.join("vqe.json"));
    let depths = v["depths"].as_array().unwrap();
    assert_eq!(depths.len(), 2);
    let e: Vec<f64> = depths.iter().map(|d| d["best_energy"].as_f64().unwrap()).collect();
    assert!(e[1] <= e[0] + 1e-12);
    assert!(out.join("state.csv").exists());

    let shots = tmp.path().join("vs");
    ok(&[
        "--out",
        dir_str(&shots),
        "vqe",
        "--n",
        "3",
        "--depth",
        "1",
        "--restarts",
        "1",
        "--shots",
        "500",
    ]);
    assert_eq!(json(&shots.join("vqe.json"))["shots"], 500);
}

#[test]
fn sample_compare_reports_speedup() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("s");
    ok(&[
        "--out",
        dir_str(&out),
        "sample",
        "--mode",
        "compare",
        "--n",
        "5",
        "--epochs",
        "500",
        "--seed",
        "2",
    ]);
    let r = json(&out.join("report.json"));
    assert_eq!(r["step_budget"], 500 * 1001);
    let f = r["hybrid"]["global_hop_frequency"].as_f64().unwrap();
    assert!((0.4..=0.6).contains(&f), "{f}");
    let hybrid_hops = r["hybrid"]["hops"].as_u64().unwrap();
    let langevin_hops = r["langevin"]["hops"].as_u64().unwrap();
    assert!(
        hybrid_hops >= 10 * langevin_hops.max(1),
        "{hybrid_hops} vs {langevin_hops}"
    );
    for name in ["langevin_trajectory.csv", "hybrid_histogram.csv", "manifest.json"] {
        assert!(out.join(name).exists(), "{name}");
    }
}

#[test]
fn mh_langevin_matches_boltzmann() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("h.toml");
    fs::write(
        &cfg,
        "temperature = 0.25\n[potential]\nkind = \"harmonic\"\nk = 1.0\n[grid]\nn_qubits = 6\nbox_length = 8.0\n",
    )
    .unwrap();
    let out = tmp.path().join("o");
    ok(&[
        "--config",
        dir_str(&cfg),
        "--out",
        dir_str(&out),
        "sample",
        "--mh",
        "--dt",
        "0.05",
        "--steps",
        "1000000",
    ]);
    let r = json(&out.join("report.json"));
    assert!(r["tv_distance"].as_f64().unwrap() < 0.03);
    assert!(r["acceptance_rate"].as_f64().unwrap() > 0.9);
}

#[test]
fn reruns_are_byte_identical_and_seed_precedence_holds() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("c.toml");
    fs::write(&cfg, "seed = 5\n[sampler]\nmode = \"hybrid\"\nepochs = 20\nlocal_steps = 100\n[grid]\nn_qubits = 5\nbox_length = 4.0\n").unwrap();
    let run = |name: &str, extra: &[&str], env: Option<&str>| {
        let out = tmp.path().join(name);
        let mut args = vec!["--config", dir_str(&cfg), "--out", dir_str(&out)];
        args.extend_from_slice(extra);
        let r = rsq(&args, env);
        assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
        let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(&out)
            .unwrap()
            .map(|e| {
                let e = e.unwrap();
                (e.file_name().into_string().unwrap(), fs::read(e.path()).unwrap())
            })
            .collect();
        files.sort();
        files
    };
    let a = run("a", &["sample"], None);
    let b = run("b", &["--threads", "1", "sample"], None);
    assert_eq!(a, b);
    let seed_of = |files: &[(String, Vec<u8>)]| {
        let m = &files.iter().find(|(n, _)| n == "manifest.json").unwrap().1;
        serde_json::from_slice::<Value>(m).unwrap()["seed"].as_u64().unwrap()
    };
    assert_eq!(seed_of(&a), 5);
    let flagged = run("c", &["sample", "--seed", "6"], None);
    assert_eq!(seed_of(&flagged), 6);
    assert_ne!(flagged, a);
    let env = run("d", &["sample", "--seed", "6"], Some("7"));
    assert_eq!(seed_of(&env), 7);

    let q1 = run("q1", &["qpe-hop", "--ns", "2"], None);
    let q2 = run("q2", &["qpe-hop", "--ns", "2"], None);
    assert_eq!(q1, q2);
}
