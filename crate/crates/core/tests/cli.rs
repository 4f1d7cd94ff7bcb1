use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn mtkernel(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mtkernel"))
        .args(args)
        .output()
        .expect("run mtkernel")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn keys_sorted(v: &Value) -> bool {
    match v {
        Value::Object(m) => {
            let keys: Vec<&String> = m.keys().collect();
            keys.windows(2).all(|w| w[0] < w[1]) && m.values().all(keys_sorted)
        }
        Value::Array(a) => a.iter().all(keys_sorted),
        _ => true,
    }
}

#[test]
fn lebesgue_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let pts = dir.path().join("p.csv");
    fs::write(&pts, "0.2\n0.5\n0.7\n").unwrap();
    let out = dir.path().join("bm.json");
    let o = mtkernel(&[
        "lebesgue", "--kernel", "brownian_motion", "--points", pts.to_str().unwrap(),
        "--grid", "uniform:0.01,0.99,99", "--output", out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = json(&out);
    assert!(keys_sorted(&r));
    assert_eq!(r["satisfies_strict"], true);
    assert_eq!(r["sup_is_lower_bound"], true);
    assert_eq!(r["values"].as_array().unwrap().len(), 99);

    // The exponential counterexample violates the strict condition: exit 2,
    // report still written.
    let cfg = dir.path().join("exp.json");
    fs::write(
        &cfg,
        r#"{"kernel":"exponential:r=1.0","points":[[0,0],[0.5,0],[0,0.5]],"grid":[[0.5,0.5],[0.25,0.25]]}"#,
    )
    .unwrap();
    let out2 = dir.path().join("exp_report.json");
    let o = mtkernel(&["lebesgue", "--config", cfg.to_str().unwrap(), "--output", out2.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let r = json(&out2);
    assert!((r["sup_value"].as_f64().unwrap() - 1.580_940_7).abs() < 1e-6);
    assert_eq!(r["argmax"], 0);

    // Boundary point for a Brownian kernel: error, exit 1.
    fs::write(&pts, "0.0\n0.5\n").unwrap();
    let o = mtkernel(&["lebesgue", "--kernel", "brownian_motion", "--points", pts.to_str().unwrap(), "--grid", "uniform:0.1,0.9,3"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("error"));
}

#[test]
fn malformed_inputs_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("f.csv");
    let t = dir.path().join("t.csv");
    fs::write(&f, "0.1,0.2\n0.3,abc\n").unwrap();
    fs::write(&t, "1\n2\n").unwrap();
    let ds = format!("csv:{},{}", f.display(), t.display());
    let out = dir.path().join("o");
    let o = mtkernel(&["fit", "--dataset", &ds, "--output", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("row 2") && err.contains("column 2"), "{err}");

    fs::write(&f, "").unwrap();
    let o = mtkernel(&["fit", "--dataset", &ds, "--output", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));

    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, r#"{"kernal":"gaussian:gamma=1"}"#).unwrap();
    let o = mtkernel(&["fit", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));

    let o = mtkernel(&["fit", "--dataset", "synth:h=0.5", "--lambda", "-1", "--output", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let o = mtkernel(&["nonsense"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn synth_fit_predict_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let o = mtkernel(&["synth", "--dataset", "synth:h=0.25,noise=none", "--output", data.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let features = fs::read_to_string(data.join("features.csv")).unwrap();
    assert_eq!(features.lines().count(), 81);

    let ds = format!("csv:{},{}", data.join("features.csv").display(), data.join("targets.csv").display());
    let fit = dir.path().join("fit");
    let o = mtkernel(&[
        "fit", "--dataset", &ds, "--coupling", "synth", "--lambda", "0.001", "--lambda", "0.1",
        "--output", fit.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let m = json(&fit.join("metrics.json"));
    assert!(keys_sorted(&m));
    assert_eq!(m["selection_targets"], "observed_train");
    let fits = m["solvers"]["l1"]["fits"].as_array().unwrap();
    assert_eq!(fits.len(), 2);
    assert!(fits[0]["lambda"].as_f64() < fits[1]["lambda"].as_f64());
    assert_eq!(m["solvers"]["ridge"]["fits"][0]["sparsity"], 243);

    let coeffs = fs::read_to_string(fit.join("model_l1.csv")).unwrap();
    assert_eq!(coeffs.lines().next(), Some("block,task,value"));
    assert_eq!(coeffs.lines().count(), 1 + 243);

    let pred = dir.path().join("pred");
    let o = mtkernel(&[
        "predict", "--model", fit.join("model_ridge.json").to_str().unwrap(), "--dataset", &ds,
        "--output", pred.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let pm = json(&pred.join("metrics.json"));
    assert!(pm["mse"].as_f64().unwrap() < 1e-3);
    assert_eq!(fs::read_to_string(pred.join("predictions.csv")).unwrap().lines().count(), 81);

    let o = mtkernel(&["eval", "--model", fit.join("model_l1.json").to_str().unwrap(), "--dataset", &ds]);
    assert_eq!(o.status.code(), Some(0));
    let e: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(e["points"], 81);
    assert_eq!(e["task"], "regression");
}

#[test]
fn fit_is_deterministic_and_seed_sensitive() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, seed: &str| -> Vec<u8> {
        let out = dir.path().join(name);
        let o = mtkernel(&[
            "fit", "--dataset", "synth:h=0.25,noise=gaussian,var=0.01", "--seed", seed, "--coupling", "synth",
            "--lambda", "0.01", "--lambda", "1", "--output", out.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0));
        fs::read(out.join("metrics.json")).unwrap()
    };
    let a = run("a", "7");
    let b = run("b", "7");
    let c = run("c", "8");
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn synth_noise_none_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["a", "b"] {
        let o = mtkernel(&["synth", "--dataset", "synth:h=0.2,noise=none", "--output", dir.path().join(name).to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
    }
    for f in ["features.csv", "targets.csv"] {
        assert_eq!(
            fs::read(dir.path().join("a").join(f)).unwrap(),
            fs::read(dir.path().join("b").join(f)).unwrap()
        );
    }
}

#[test]
fn classification_listing() {
    use mtkernel::data::{write_idx_images, write_idx_labels};
    let dir = tempfile::tempdir().unwrap();
    // Two-pixel images: class determined by which pixel is lit.
    let mut images = Vec::new();
    let mut labels = Vec::new();
    for i in 0..12u8 {
        let l = [6u8, 8, 9][(i % 3) as usize];
        let mut img = vec![0u8; 4];
        img[(i % 3) as usize] = 200 + i;
        img[3] = i * 3;
        images.push(img);
        labels.push(l);
    }
    let ip = dir.path().join("img.idx");
    let lp = dir.path().join("lab.idx");
    write_idx_images(&ip, &images, 2, 2).unwrap();
    write_idx_labels(&lp, &labels).unwrap();
    let ds = format!("idx:{},{},keep=6;8;9", ip.display(), lp.display());
    let fit = dir.path().join("fit");
    let o = mtkernel(&[
        "fit", "--dataset", &ds, "--task", "classification", "--kernel", "exponential:r=2.0",
        "--output", fit.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let m = json(&fit.join("metrics.json"));
    assert_eq!(m["select"], "accuracy");
    assert_eq!(m["task"], "classification");

    let pred = dir.path().join("pred");
    let o = mtkernel(&[
        "predict", "--model", fit.join("model_l1.json").to_str().unwrap(), "--dataset", &ds,
        "--output", pred.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let listing = fs::read_to_string(pred.join("misclassified.csv")).unwrap();
    assert_eq!(listing.lines().next(), Some("number,true_label,predicted_label"));
    let pm = json(&pred.join("metrics.json"));
    assert_eq!(pm["misclassified"].as_array().unwrap().len(), listing.lines().count() - 1);
}

#[test]
fn admissibility_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("a.json");
    fs::write(
        &cfg,
        r#"{"kernel":"exponential:r=1.0","coupling":"identity:2","configurations":[[[0,0],[0.5,0]],[[0,0],[0,0]]],"grid":"uniform:-1,1,3;-1,1,3"}"#,
    )
    .unwrap();
    let o = mtkernel(&["admissibility", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(r["a1_ok"], serde_json::json!([true, false]));
    assert_eq!(r["a2_bound"], 1.0);
}
