//! Acceptance gate: one PASS/FAIL line per criterion.

mod common;

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use nalgebra::DVector;
use rand::Rng;

use common::{
    exact_dataset, geometric_reduce, random_coefficients, random_convex_qp, random_crisp_lmf_coefficients,
    random_inputs, random_proper_tt2, random_tt2, rng,
};
use tt2fr::eval::{rmse, ForecastReport};
use tt2fr::fuzzy::{It2TriFou, Tt2Number};
use tt2fr::hcut::reduce;
use tt2fr::qp::{brute_force_oracle, solve, QpStatus, SolverConfig};
use tt2fr::regression::{constraint_violation, fit_it2fr, fit_tt2fr, CoefficientSet, FitConfig, ObjectiveMode, RegressionDataset};

type Criterion = (&'static str, Option<Duration>, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn timed(limit: Option<Duration>, f: impl FnOnce() -> Outcome) -> Outcome {
    let start = Instant::now();
    let mut out = f();
    let took = start.elapsed();
    if let Some(limit) = limit {
        out.detail = format!("{}; runtime {:.2?} (limit {:?})", out.detail, took, limit);
        out.pass &= took < limit;
    } else {
        out.detail = format!("{}; runtime {:.2?}", out.detail, took);
    }
    out
}

fn criterion_1() -> Outcome {
    let mut r = rng(101);
    let mut worst_identity = 0.0_f64;
    let mut worst_collapse = 0.0_f64;
    for _ in 0..10_000 {
        let t = random_tt2(&mut r);
        let zero = reduce(&t, 0.0).unwrap().to_fou().to_array();
        for (a, b) in zero.iter().zip(t.fou.to_array()) {
            worst_identity = worst_identity.max((a - b).abs());
        }
        let one = reduce(&t, 1.0).unwrap();
        worst_collapse = worst_collapse.max((one.x1h - one.x2h).abs()).max((one.x3h - one.x4h).abs());
    }
    Outcome {
        pass: worst_identity <= 1e-12 && worst_collapse < 1e-12,
        detail: format!("max |reduce(t,0) - t| = {worst_identity:.1e}, max side width at h=1 = {worst_collapse:.1e}"),
    }
}

fn criterion_2() -> Outcome {
    let mut r = rng(102);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..1_000 {
        let t = random_tt2(&mut r);
        let a: f64 = r.gen_range(0.0..1.0);
        let b: f64 = r.gen_range(0.0..1.0);
        let (h, h2) = if a < b { (a, b) } else { (b, a) };
        let lo = reduce(&t, h).unwrap();
        let hi = reduce(&t, h2).unwrap();
        // positive entries are nesting violations
        let v = [lo.x2h - hi.x2h, hi.x4h - lo.x4h, hi.x1h - lo.x1h, lo.x3h - hi.x3h];
        worst = v.iter().copied().fold(worst, f64::max);
    }
    Outcome {
        pass: worst <= 1e-10,
        detail: format!("largest nesting violation {worst:.1e}"),
    }
}

fn criterion_3() -> Outcome {
    let mut r = rng(103);
    let mut worst = 0.0_f64;
    for _ in 0..1_000 {
        let t = random_proper_tt2(&mut r);
        let h = r.gen_range(0.0..=1.0);
        let got = reduce(&t, h).unwrap().to_fou().to_array();
        let want = geometric_reduce(&t, h);
        for k in 0..5 {
            worst = worst.max((got[k] - want[k]).abs());
        }
    }
    let t = Tt2Number::symmetric(It2TriFou::new(0.0, 1.0, 2.0, 3.0, 4.0).unwrap());
    let example = reduce(&t, 0.5).unwrap().to_fou().to_array();
    let expected = [0.4, 0.857142857, 2.0, 3.142857143, 3.6];
    let example_err = example
        .iter()
        .zip(expected)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Outcome {
        pass: worst <= 1e-9 && example_err <= 1e-9,
        detail: format!("max closed-form vs geometric gap {worst:.1e}; worked example {example:?} (err {example_err:.1e})"),
    }
}

fn criterion_4() -> Outcome {
    const RES: usize = 61;
    let step = 6.0 / (RES - 1) as f64;
    let mut r = rng(104);
    let cfg = SolverConfig::default();
    let mut worst_coord = 0.0_f64;
    let mut beyond = 0;
    let mut solver_not_worse = true;
    let mut worst_kkt = 0.0_f64;
    let mut all_solved = true;
    let mut deterministic = true;
    for case in 0..100 {
        let n = 2 + case % 2;
        let p = random_convex_qp(&mut r, n);
        let sol = solve(&p, &cfg);
        all_solved &= sol.status == QpStatus::OptimalConvex && p.max_violation(&DVector::from_vec(sol.point.clone())) <= 1e-8;
        worst_kkt = worst_kkt.max(sol.kkt_residual);
        let again = solve(&p, &cfg);
        deterministic &= serde_json::to_string(&sol).unwrap() == serde_json::to_string(&again).unwrap();
        let oracle = brute_force_oracle(&p, &vec![(-3.0, 3.0); n], RES).unwrap();
        let d = (0..n)
            .map(|k| (sol.point[k] - oracle.point[k]).abs() / step)
            .fold(0.0, f64::max);
        worst_coord = worst_coord.max(d);
        beyond += usize::from(d > 2.0);
        solver_not_worse &= sol.objective_value <= oracle.objective + 1e-9;
    }
    Outcome {
        pass: all_solved && worst_coord <= 2.0 && worst_kkt <= 1e-6 && deterministic,
        detail: format!(
            "all optimal+feasible {all_solved}; max distance to grid optimum {worst_coord:.2} steps \
             ({beyond}/100 beyond 2); solver objective <= grid objective in every case {solver_not_worse}; \
             max KKT {worst_kkt:.1e}; deterministic {deterministic}"
        ),
    }
}

fn peak_error(fit: &CoefficientSet, truth: &CoefficientSet) -> f64 {
    fit.peaks()
        .iter()
        .zip(truth.peaks())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

fn recovery(generator: fn(&mut rand_chacha::ChaCha8Rng, usize) -> CoefficientSet, seed: u64) -> (f64, f64, usize) {
    let mut r = rng(seed);
    let mut worst_peak = 0.0_f64;
    let mut worst_viol = 0.0_f64;
    let mut failures = 0;
    for _ in 0..3 {
        let truth = generator(&mut r, 2);
        let data = exact_dataset(&truth, random_inputs(&mut r, 30, 2));
        for h in [0.0, 0.4, 0.9] {
            for mode in [ObjectiveMode::TextConsistent, ObjectiveMode::PaperLiteral] {
                let cfg = FitConfig {
                    h,
                    objective_mode: mode,
                    ..FitConfig::default()
                };
                match fit_tt2fr(&data, &cfg) {
                    Ok(fit) => {
                        worst_peak = worst_peak.max(peak_error(&fit.coefficients, &truth));
                        let v = constraint_violation(&data.reduce(h).unwrap(), &fit.coefficients, h, cfg.necessity_sign)
                            .unwrap();
                        worst_viol = worst_viol.max(v);
                    }
                    Err(_) => failures += 1,
                }
            }
        }
    }
    (worst_peak, worst_viol, failures)
}

fn criterion_5() -> Outcome {
    let (peak, viol, failures) = recovery(random_coefficients, 105);
    let (crisp_peak, crisp_viol, crisp_failures) = recovery(random_crisp_lmf_coefficients, 105);
    Outcome {
        pass: peak < 1e-4 && viol <= 1e-8 && failures == 0,
        detail: format!(
            "general generators: max peak error {peak:.3e}, max violation {viol:.1e}, failed fits {failures}; \
             crisp-lower-membership generators: max peak error {crisp_peak:.1e}, max violation {crisp_viol:.1e}, failed fits {crisp_failures}"
        ),
    }
}

fn criterion_6() -> Outcome {
    let mut r = rng(106);
    let mut identical = 0;
    for _ in 0..20 {
        let truth = random_coefficients(&mut r, 2);
        let data = exact_dataset(&truth, random_inputs(&mut r, 15, 2));
        let h = r.gen_range(0.0..0.95);
        let cfg = FitConfig {
            h,
            ..FitConfig::default()
        };
        let direct = fit_tt2fr(&data, &cfg).map(|f| serde_json::to_vec(&f).unwrap()).map_err(|e| e.to_string());
        let staged = fit_it2fr(&data.reduce(h).unwrap(), &cfg)
            .map(|f| serde_json::to_vec(&f).unwrap())
            .map_err(|e| e.to_string());
        if direct.is_ok() && direct == staged {
            identical += 1;
        }
    }
    Outcome {
        pass: identical == 20,
        detail: format!("{identical}/20 datasets bit-identical"),
    }
}

fn criterion_7() -> Outcome {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    let series = data.join("sample_series.csv");
    let config = data.join("sample_config.toml");
    let dir = tempfile::tempdir().unwrap();
    let run = |args: &[&std::ffi::OsStr]| {
        Command::new(env!("CARGO_BIN_EXE_tt2fr"))
            .args(args)
            .output()
            .map(|o| o.status.success())
            .unwrap_or(false)
    };
    let fit_dir = dir.path().join("fit");
    let coeffs = fit_dir.join("coefficients.json");
    let fitted = run(&[
        "fit".as_ref(),
        "--input".as_ref(),
        series.as_os_str(),
        "--config".as_ref(),
        config.as_os_str(),
        "--h".as_ref(),
        "0.4".as_ref(),
        "--out-dir".as_ref(),
        fit_dir.as_os_str(),
    ]);
    let mut reports = Vec::new();
    let mut evaluated = fitted;
    for name in ["a", "b"] {
        let out = dir.path().join(name);
        evaluated &= run(&[
            "eval".as_ref(),
            "--input".as_ref(),
            series.as_os_str(),
            "--config".as_ref(),
            config.as_os_str(),
            "--h".as_ref(),
            "0.4".as_ref(),
            "--coefficients".as_ref(),
            coeffs.as_os_str(),
            "--out-dir".as_ref(),
            out.as_os_str(),
        ]);
        reports.push(std::fs::read(out.join("report.json")).unwrap_or_default());
    }
    if !evaluated {
        return Outcome {
            pass: false,
            detail: "fit or eval exited with an error".into(),
        };
    }
    let deterministic = reports[0] == reports[1];
    let report: ForecastReport = serde_json::from_slice(&reports[0]).unwrap();
    let csv = std::fs::read_to_string(dir.path().join("a").join("forecast.csv")).unwrap();
    let mut dates: Vec<&str> = csv.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    let rows = dates.len();
    dates.dedup();
    let one_per_date = rows == report.records.len() && dates.len() == rows;
    Outcome {
        pass: deterministic && report.train_rmse.is_finite() && one_per_date && report.h == Some(0.4),
        detail: format!(
            "byte-identical reports {deterministic}; train RMSE {:.3}, test RMSE {:.3}; {rows} forecast rows for {} dates",
            report.train_rmse,
            report.test_rmse,
            report.records.len()
        ),
    }
}

fn criterion_8() -> Outcome {
    let e = rmse(&[0.0, 0.0], &[3.0, 4.0]).unwrap();
    let a = [1.5, -2.0, 7.25];
    let z = rmse(&a, &a).unwrap();
    Outcome {
        pass: (e - 3.535533906).abs() <= 1e-9 && z == 0.0,
        detail: format!("rmse((0,0),(3,4)) = {e:.10}; rmse(a,a) = {z}"),
    }
}

fn criterion_9() -> Outcome {
    let inputs = vec![vec![1.0], vec![2.0], vec![3.0]];
    let outputs = [
        [0.5, 1.5, 2.0, 2.5, 3.5],
        [2.0, 3.0, 4.0, 5.0, 6.0],
        [3.5, 5.0, 6.0, 7.0, 8.5],
    ]
    .iter()
    .map(|v| Tt2Number::symmetric(It2TriFou::from_array(*v).unwrap()))
    .collect();
    let data = RegressionDataset::new(inputs, outputs).unwrap();
    let h = 0.4;
    let fit = |mode| {
        fit_tt2fr(
            &data,
            &FitConfig {
                h,
                objective_mode: mode,
                ..FitConfig::default()
            },
        )
        .unwrap()
    };
    let text = fit(ObjectiveMode::TextConsistent);
    let literal = fit(ObjectiveMode::PaperLiteral);
    let reduced = data.reduce(h).unwrap();
    let viol = [&text, &literal]
        .iter()
        .map(|f| constraint_violation(&reduced, &f.coefficients, h, Default::default()).unwrap())
        .fold(0.0, f64::max);
    let spreads = |c: &CoefficientSet| {
        let f = c.as_slice()[0];
        [f.a_up - f.a_low, f.c_low - f.a_up, f.c_up - f.c_low]
    };
    let (s1, s2) = (spreads(&text.coefficients), spreads(&literal.coefficients));
    let diff = s1.iter().zip(s2).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Outcome {
        pass: diff > 1e-3 && viol <= 1e-8,
        detail: format!(
            "text_consistent spreads {s1:.4?} vs paper_literal {s2:.4?} (max diff {diff:.3}); max violation {viol:.1e}"
        ),
    }
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("h-cut identity and collapse", Some(Duration::from_secs(1)), criterion_1),
        ("h-cut monotone nesting", None, criterion_2),
        ("closed form vs geometric oracle", None, criterion_3),
        ("QP correctness", Some(Duration::from_secs(10)), criterion_4),
        ("exact recovery", Some(Duration::from_secs(30)), criterion_5),
        ("reduction commutes with fitting", None, criterion_6),
        ("end-to-end pipeline", Some(Duration::from_secs(60)), criterion_7),
        ("RMSE unit correctness", None, criterion_8),
        ("objective modes differ", None, criterion_9),
    ];
    let mut failed = Vec::new();
    for (k, (name, limit, check)) in criteria.iter().enumerate() {
        let out = timed(*limit, check);
        let tag = if out.pass { "PASS" } else { "FAIL" };
        println!("criterion {}: {tag} {name}: {}", k + 1, out.detail);
        if !out.pass {
            failed.push(k + 1);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all criteria pass");
    } else {
        println!("acceptance: failing criteria {failed:?}");
        std::process::exit(1);
    }
}
