use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use mixreg::io::{curve_points, read_xy_file, ModelFile};
use mixreg::{fit, FitSpec, KernelSpec, ModelKind};

fn mixreg(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mixreg")).current_dir(dir).args(args).output().unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = mixreg(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn demo_csv() -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/synthetic_hpi.csv")
}

#[test]
fn inject_appends_rows_at_the_end() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["simulate", "--scenario", "a", "--n", "40", "--seed", "2", "-o", "in.csv"]);
    ok(d, &["inject-outliers", "-i", "in.csv", "--pair", "0.6,2.5", "--count", "5", "-o", "out.csv"]);
    ok(d, &["inject-outliers", "-i", "in.csv", "--pair", "0,-1", "--count", "0", "-o", "same.csv"]);
    let input = fs::read_to_string(d.join("in.csv")).unwrap();
    let out = fs::read_to_string(d.join("out.csv")).unwrap();
    assert!(out.starts_with(&input));
    let tail: Vec<&str> = out[input.len()..].lines().collect();
    assert_eq!(tail, vec!["0.6,2.5"; 5]);
    assert_eq!(fs::read(d.join("same.csv")).unwrap(), input.as_bytes());
    let bad = mixreg(d, &["inject-outliers", "-i", "in.csv", "--pair", "0.6;2.5", "--count", "5", "-o", "x.csv"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn input_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("bad.csv"), "x,y\n0.1,1\n0.2,oops\n").unwrap();
    let out = mixreg(d, &["fit", "-i", "bad.csv", "--model", "cgmlr"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));
    assert_eq!(mixreg(d, &["curves", "--model-file", "missing.json"]).status.code(), Some(2));
    assert_eq!(mixreg(d, &["fit", "-i", "missing.csv", "--model", "cgmlr"]).status.code(), Some(2));
    fs::write(d.join("flat.csv"), "x,y\n".to_string() + &"1,2\n1,3\n".repeat(20)).unwrap();
    assert_eq!(mixreg(d, &["fit", "-i", "flat.csv", "--model", "spcgmr", "--h", "0.1"]).status.code(), Some(2));
    let t = Command::new(env!("CARGO_BIN_EXE_mixreg"))
        .current_dir(d)
        .env("MIXREG_THREADS", "zero")
        .args(["simulate", "--scenario", "a", "-o", "s.csv"])
        .output()
        .unwrap();
    assert_eq!(t.status.code(), Some(2));
    // a smooth model without a bandwidth
    ok(d, &["simulate", "--scenario", "a", "--n", "60", "-o", "s.csv"]);
    assert_eq!(mixreg(d, &["fit", "-i", "s.csv", "--model", "spgmr"]).status.code(), Some(2));
}

#[test]
fn selection_with_every_fit_failing_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["simulate", "--scenario", "a", "--n", "30", "-o", "s.csv"]);
    let out = mixreg(d, &["select", "-i", "s.csv", "--model", "spgmr", "--k-set", "7,8", "--h-set", "0.1"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn fit_outputs_and_curves() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let data = demo_csv();
    let data = data.to_str().unwrap();
    ok(d, &["fit", "-i", data, "--model", "spgmr", "--k", "2", "--h", "0.2", "--out-model", "g.json", "--out-class", "g.csv"]);
    ok(d, &["fit", "-i", data, "--model", "spcgmr", "--k", "2", "--h", "0.2", "--out-model", "c.json", "--out-class", "c.csv"]);
    let mut flagged = Vec::new();
    for f in ["g.csv", "c.csv"] {
        let text = fs::read_to_string(d.join(f)).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "x,y,label,gamma_1,gamma_2,lambda_at_label,outlier_flag");
        assert_eq!(lines.clone().count(), 156);
        flagged.push(lines.filter(|l| l.ends_with(",true")).count());
    }
    assert_eq!(flagged[0], 0);
    assert!(flagged[1] <= 3, "{flagged:?}");

    ok(d, &["fit", "-i", data, "--model", "npcgmr-ecm", "--k", "2", "--h", "0.2", "--grid-size", "25", "--out-model", "np.json", "--out-class", "np.csv"]);
    ok(d, &["curves", "--model-file", "np.json", "-o", "curves.csv"]);
    let model = ModelFile::load(&d.join("np.json")).unwrap();
    let text = fs::read_to_string(d.join("curves.csv")).unwrap();
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let rows: Vec<(f64, usize, String, f64)> = rdr.deserialize().map(|r| r.unwrap()).collect();
    assert!(rows.windows(2).all(|w| w[0].0 <= w[1].0));
    for q in ["mean", "pi", "var"] {
        let mut comps: Vec<usize> = rows.iter().filter(|r| r.2 == q).map(|r| r.1).collect();
        comps.sort();
        comps.dedup();
        assert_eq!(comps, vec![1, 2]);
    }
    let mixreg::ModelParams::Nonparametric(p) = &model.params else { panic!("nonparametric model expected") };
    for (g, &u) in p.grid.points().iter().enumerate() {
        let v = rows.iter().find(|r| r.0 == u && r.1 == 2 && r.2 == "mean").unwrap().3;
        assert_eq!(v, p.mean[1][g]);
    }
    let xs: std::collections::BTreeSet<u64> = rows.iter().map(|r| r.0.to_bits()).collect();
    assert!(xs.len() >= 400);
    assert_eq!(curve_points(&model, 400).unwrap().len(), rows.len());
}

#[test]
fn model_file_round_trip_is_exact() {
    let (data, _) = read_xy_file(&demo_csv()).unwrap();
    let kern = KernelSpec::gaussian(0.2).unwrap();
    for model in [ModelKind::Spcgmr, ModelKind::NpcgmrEm, ModelKind::Cgmlr] {
        let out = fit(&data, model, &FitSpec::new(2, kern)).unwrap();
        let file = ModelFile::from_fit(&out, &data, model.is_smooth().then_some(kern));
        let back = ModelFile::from_json(&file.to_json().unwrap()).unwrap();
        assert_eq!(back, file);
        for x in [-0.1, 0.3, 0.77, 1.4] {
            for k in 0..2 {
                assert_eq!(back.params.mean_at(k, x).to_bits(), out.params.mean_at(k, x).to_bits());
                assert_eq!(back.params.var_at(k, x).to_bits(), out.params.var_at(k, x).to_bits());
            }
        }
    }
}

#[test]
fn select_singleton_grid() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let data = demo_csv();
    let stdout = ok(d, &["select", "-i", data.to_str().unwrap(), "--model", "spcgmr", "--k-set", "2", "--h-set", "0.2", "-o", "sel.csv"]);
    assert_eq!(stdout.lines().count(), 3);
    let text = fs::read_to_string(d.join("sel.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "model,K,h,loglik,df,aic,bic,icl,chosen_aic,chosen_bic,chosen_icl");
    assert_eq!(lines.len(), 2);
    assert!(lines[1].starts_with("spcgmr,2,0.2,") && lines[1].ends_with("true,true,true"));
}

#[test]
fn bench_emits_one_column_per_model() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["bench", "--scenario", "exp1", "--n-set", "120", "--models", "npgmr,npcgmr-em,npcgmr-ecm", "--reps", "2", "--h", "0.1", "--grid-size", "20", "-o", "b.csv"]);
    let text = fs::read_to_string(d.join("b.csv")).unwrap();
    assert!(text.starts_with("scenario,n,metric,stat,npgmr,npcgmr-em,npcgmr-ecm\n"));
    assert_eq!(text.lines().count(), 1 + 6 + 2);
}
