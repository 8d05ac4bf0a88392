use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dunkl-lab"))
        .args(args)
        .output()
        .expect("spawn dunkl-lab")
}

fn lab(line: &str) -> Output {
    run(&line.split_whitespace().collect::<Vec<_>>())
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn csv_value(o: &Output) -> f64 {
    let text = stdout(o);
    let row = text.lines().nth(1).expect("data row");
    row.split(',').nth(1).unwrap().parse().unwrap()
}

#[test]
fn kernel_at_one_is_cosh() {
    let o = lab("eval kernel --d 1 --gamma 1 --x 1 --z 1");
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("kind,value,imag,error,order\n"));
    assert!((csv_value(&o) - 1f64.cosh()).abs() < 1e-10);
}

#[test]
fn vk_of_identity() {
    let o = lab("eval vk --d 1 --gamma 1 --g id --x 1");
    assert_eq!(o.status.code(), Some(0));
    assert!((csv_value(&o) - 1.0 / 3.0).abs() < 1e-11);
}

#[test]
fn dual_gaussian_at_origin_is_half() {
    let o = lab("eval tvk --gaussian --a 1 --d 1 --gamma 1 --y 0");
    assert_eq!(o.status.code(), Some(0));
    assert!((csv_value(&o) - 0.5).abs() < 1e-9);
}

#[test]
fn json_eval_record() {
    let o = lab("eval kernel --alphas 1,1.5 --x 0.5,-0.2 --z 1,1 --format json");
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["kind"], "kernel");
    assert!(v["value"].as_f64().unwrap() > 0.0);
}

#[test]
fn verify_constants_passes() {
    let o = lab("verify constants --group z2^2 --alphas 1,1");
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.starts_with("suite,check_id,identity,lhs,rhs,abs_err,rel_err,tol,pass\n"));
    assert!(text.lines().skip(1).all(|l| l.ends_with(",true")));
}

#[test]
fn verify_json_rows() {
    let o = lab("verify density --d 1 --gamma 1 --format json");
    assert_eq!(o.status.code(), Some(0));
    let rows: Vec<serde_json::Value> = serde_json::from_slice(&o.stdout).unwrap();
    assert!(rows.iter().any(|r| r["check_id"] == "normalization"));
    assert!(rows.iter().all(|r| r["pass"] == true));
}

#[test]
fn failing_row_exits_one() {
    // the shell maxima of a γ = 1/2 kernel decay like R^{-1/2}: 8^{-1/2} > 0.25
    let o = lab("verify decay --d 1 --gamma 0.5");
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains(",false"));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(lab("bogus").status.code(), Some(2));
    assert_eq!(lab("verify all").status.code(), Some(2));
    assert_eq!(lab("eval kernel --d 2 --gamma 1 --x 1 --z 1").status.code(), Some(2));
    assert_eq!(lab("verify duality --alphas 1,1,1").status.code(), Some(2));
}

#[test]
fn unreached_accuracy_exits_three() {
    let o = lab("eval vk --d 1 --gamma 1 --g exp(30) --x 1 --order 4 --max-order 8");
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn out_file_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let mut written = Vec::new();
    for i in 0..2 {
        let path = dir.path().join(format!("run{i}.csv"));
        let o = run(&[
            "verify",
            "translate",
            "--alphas",
            "1,1.5",
            "--seed",
            "42",
            "--out",
            path.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0));
        written.push(std::fs::read(&path).unwrap());
    }
    assert!(!written[0].is_empty());
    assert_eq!(written[0], written[1]);
    let other = lab("verify translate --alphas 1,1.5 --seed 43");
    assert_ne!(other.stdout, written[0]);
}
