//! End-to-end acceptance campaign. Prints one line per criterion and exits
//! nonzero when any of them fails.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use cen_meta::analytic::{in_missing_prob, match_fixed_range, mean_in_requests, stp_file, stp_total};
use cen_meta::meta::{
    beta_meta, h_ij_closed, m1, m2, meta_total, MetaCurve, MomentSummary, META_GRID_POINTS,
};
use cen_meta::model::{db_to_linear, InScheme, NetworkConfig};
use cen_meta::montecarlo::{
    ccdf_sup_gap, empirical_summaries, interior_grid, run_campaign_multi, CampaignReport, MonteCarloConfig,
};
use cen_meta::optimizer::{coordinate_descent, Objective, OptimizationProblem};
use cen_meta::parallel::Execution;
use cen_meta::specfun::{
    beta_fn, gauss_2f1_neg, lt_toeplitz_exp_column, lt_toeplitz_inv_column, reg_inc_beta, reg_lower_gamma,
};

const CAMPAIGN_DB: [f64; 8] = [-10.0, -6.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0];
const STP_DB: [f64; 7] = [-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0];
const META_DB: [f64; 3] = [-6.0, 5.0, 20.0];
const FLAT_TOL: f64 = 1e-4;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

fn schemes() -> [(&'static str, NetworkConfig); 2] {
    let flex = NetworkConfig::default();
    let r_c = match_fixed_range(0.8, flex.lambda_bs, flex.xi).unwrap();
    let fixed = NetworkConfig { scheme: InScheme::Fixed { r_c }, ..flex.clone() };
    [("fixed", fixed), ("flexible", flex)]
}

struct Campaign {
    name: &'static str,
    cfg: NetworkConfig,
    report: CampaignReport,
}

impl Campaign {
    fn samples(&self, db: f64) -> &[f64] {
        let i = CAMPAIGN_DB.iter().position(|d| *d == db).expect("campaign threshold");
        &self.report.sets[i].samples
    }
}

fn criterion_1() -> Verdict {
    let r_c = match_fixed_range(0.8, 1e-4, 1.75).unwrap();
    verdict((r_c - 52.71).abs() <= 0.05, format!("R_c = {r_c:.4} m, target 52.71 ± 0.05"))
}

fn criterion_2() -> Verdict {
    let cfg = NetworkConfig::default();
    let eps = in_missing_prob(mean_in_requests(&cfg), 2);
    verdict((eps - 0.030).abs() <= 0.005, format!("epsilon = {eps:.5}, target 0.030 ± 0.005"))
}

fn criterion_3(campaigns: &[Campaign]) -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    for c in campaigns {
        let model = mean_in_requests(&c.cfg);
        let sim = c.report.interior_load_mean;
        let rel = (sim - model).abs() / model;
        pass &= rel <= 0.05;
        parts.push(format!("{}: sim {sim:.4} vs model {model:.4} ({:.1}%)", c.name, 100.0 * rel));
    }
    verdict(pass, parts.join("; "))
}

fn criterion_4(campaigns: &[Campaign]) -> Verdict {
    let mut pass = true;
    let mut worst = Vec::new();
    for c in campaigns {
        let (mut stp_gap, mut m1_gap, mut below) = (0.0f64, 0.0f64, None);
        for db in STP_DB {
            let tau = db_to_linear(db);
            let emp = empirical_summaries(c.samples(db), &[]).unwrap();
            let analytic = stp_file(tau, &c.cfg).unwrap();
            let bound = m1(tau, &c.cfg).unwrap();
            stp_gap = stp_gap.max((analytic - emp.stp).abs());
            m1_gap = m1_gap.max(bound - emp.stp);
            if bound < emp.stp - emp.ci95 && below.is_none() {
                below = Some(db);
            }
        }
        pass &= stp_gap <= 0.03 && m1_gap <= 0.05 && below.is_none();
        worst.push(format!(
            "{}: max |STP - MC| {stp_gap:.4}, max M1 - MC {m1_gap:.4}{}",
            c.name,
            below.map_or(String::new(), |db| format!(", M1 below CI at {db} dB"))
        ));
    }
    verdict(pass, worst.join("; "))
}

fn criterion_5(campaigns: &[Campaign]) -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    for c in campaigns {
        let mut worst = (0.0f64, 0.0);
        for db in STP_DB {
            let v = MomentSummary::compute(db_to_linear(db), &c.cfg).unwrap().variance();
            let emp = empirical_summaries(c.samples(db), &[]).unwrap();
            let gap = (v - emp.variance).abs();
            if gap > worst.0 {
                worst = (gap, db);
            }
        }
        pass &= worst.0 <= 0.01;
        parts.push(format!("{}: max |V - MC| {:.4} at {} dB", c.name, worst.0, worst.1));
    }
    verdict(pass, parts.join("; "))
}

fn criterion_6(campaigns: &[Campaign]) -> Verdict {
    let grid = interior_grid(100);
    let mut pass = true;
    let mut parts = Vec::new();
    for c in campaigns {
        for db in META_DB {
            let ms = MomentSummary::compute(db_to_linear(db), &c.cfg).unwrap();
            let (gap, at) = ccdf_sup_gap(c.samples(db), &grid, |x| beta_meta(&ms, x)).unwrap();
            pass &= gap <= 0.05;
            parts.push(format!("{} {db} dB: {gap:.4} at x={at:.2}", c.name));
        }
    }
    verdict(pass, parts.join("; "))
}

fn criterion_7() -> Verdict {
    let tau = db_to_linear(5.0);
    let mut pass = true;
    let mut parts = Vec::new();
    for ((name, cfg), target) in schemes().into_iter().zip([0.463, 0.431]) {
        let f = meta_total(0.9, tau, &cfg).unwrap();
        pass &= (f - target).abs() <= 0.05;
        parts.push(format!("{name}: {f:.4} vs {target}"));
    }
    verdict(pass, parts.join("; "))
}

fn with_range(cfg: &NetworkConfig, mu: f64, xi: f64) -> NetworkConfig {
    let scheme = match cfg.scheme {
        InScheme::Fixed { .. } => InScheme::Fixed { r_c: match_fixed_range(mu, cfg.lambda_bs, xi).unwrap() },
        InScheme::Flexible { .. } => InScheme::Flexible { mu },
    };
    NetworkConfig { xi, scheme, ..cfg.clone() }
}

/// Rises to an interior peak and falls after it.
fn is_unimodal(values: &[f64]) -> bool {
    let peak = values.iter().enumerate().fold(0, |b, (i, v)| if *v > values[b] { i } else { b });
    let rises = values[..=peak].windows(2).all(|w| w[1] >= w[0]);
    let falls = values[peak..].windows(2).all(|w| w[1] <= w[0]);
    rises && falls && peak > 0 && peak + 1 < values.len()
}

/// Nondecreasing until the increments drop below [`FLAT_TOL`], flat after.
fn rises_then_flat(values: &[f64]) -> bool {
    let steps: Vec<f64> = values.windows(2).map(|w| w[1] - w[0]).collect();
    let knee = steps.iter().position(|d| d.abs() <= FLAT_TOL).unwrap_or(steps.len());
    knee > 0
        && knee < steps.len()
        && steps[..knee].iter().all(|d| *d >= 0.0)
        && steps[knee..].iter().all(|d| d.abs() <= FLAT_TOL)
}

fn monotone(values: &[f64], increasing: bool) -> bool {
    values.windows(2).all(|w| if increasing { w[1] > w[0] } else { w[1] < w[0] })
}

fn criterion_8() -> Verdict {
    let mut failures = Vec::new();
    let stp = |tau_db: f64, cfg: &NetworkConfig| stp_total(db_to_linear(tau_db), cfg).unwrap();
    for (name, cfg) in schemes() {
        // ranges matched to the same mean load at every μ
        let curve: Vec<f64> = (0..=60).map(|k| stp(-6.0, &with_range(&cfg, 0.05 * k as f64, cfg.xi))).collect();
        if !is_unimodal(&curve) {
            failures.push(format!("{name} R_I not unimodal"));
        }
        for db in [-6.0, 20.0] {
            let curve: Vec<f64> = (0..cfg.m).map(|l| stp(db, &NetworkConfig { l, ..cfg.clone() })).collect();
            if !rises_then_flat(&curve) {
                failures.push(format!("{name} L at {db} dB: {curve:.4?}"));
            }
        }
        for (db, increasing) in [(-6.0, true), (20.0, false)] {
            let curve: Vec<f64> = (0..=6)
                .map(|k| stp(db, &NetworkConfig { xi: 1.0 + 0.25 * k as f64, ..cfg.clone() }))
                .collect();
            if !monotone(&curve, increasing) {
                failures.push(format!("{name} xi at {db} dB: {curve:.4?}"));
            }
        }
    }
    let cfg = NetworkConfig::default();
    let tau = db_to_linear(0.0);
    let mut last: Option<(f64, f64)> = None;
    for eta in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let problem = OptimizationProblem::with_defaults(Objective::Weighted { eta, x0: 0.9 }, tau, &cfg).unwrap();
        let best = coordinate_descent(&problem, &cfg, Execution::Parallel).unwrap().point.apply(&cfg);
        let now = (stp_total(tau, &best).unwrap(), meta_total(0.9, tau, &best).unwrap());
        if let Some(prev) = last {
            if now.0 < prev.0 - 1e-9 || now.1 > prev.1 + 1e-9 {
                failures.push(format!("eta {eta}: (p_s, F) {prev:.4?} -> {now:.4?}"));
            }
        }
        last = Some(now);
    }
    let pass = failures.is_empty();
    let detail = if pass { "R_I, L, xi and eta trends hold for both schemes".to_string() } else { failures.join("; ") };
    verdict(pass, detail)
}

type Dense = Vec<Vec<f64>>;

fn toeplitz(col: &[f64]) -> Dense {
    let n = col.len();
    (0..n).map(|i| (0..n).map(|j| if i >= j { col[i - j] } else { 0.0 }).collect()).collect()
}

fn matmul(a: &Dense, b: &Dense) -> Dense {
    let n = a.len();
    (0..n).map(|i| (0..n).map(|j| (0..n).map(|k| a[i][k] * b[k][j]).sum()).collect()).collect()
}

/// Scaling and squaring with a degree-24 Taylor polynomial.
fn dense_expm(a: &Dense) -> Dense {
    let n = a.len();
    let norm = (0..n).map(|j| (0..n).map(|i| a[i][j].abs()).sum::<f64>()).fold(0.0, f64::max);
    let squarings = norm.log2().ceil().max(0.0) as i32 + 1;
    let scale = 2f64.powi(-squarings);
    let a: Dense = a.iter().map(|r| r.iter().map(|v| v * scale).collect()).collect();
    let mut result: Dense = (0..n).map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect()).collect();
    let mut term = result.clone();
    for k in 1..=24 {
        term = matmul(&term, &a);
        for (row, acc) in term.iter_mut().zip(result.iter_mut()) {
            for (v, r) in row.iter_mut().zip(acc.iter_mut()) {
                *v /= k as f64;
                *r += *v;
            }
        }
    }
    for _ in 0..squarings {
        result = matmul(&result, &result);
    }
    result
}

fn max_rel_gap(got: &[f64], want: &[f64]) -> f64 {
    let scale = want.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    got.iter().zip(want).map(|(g, w)| (g - w).abs() / scale).fold(0.0, f64::max)
}

fn csv_rows(name: &str) -> Vec<Vec<f64>> {
    let path = format!("{}/../core/tests/data/{name}", env!("CARGO_MANIFEST_DIR"));
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path}: {e}"));
    text.lines()
        .skip(1)
        .map(|l| l.split(',').map(|s| s.parse().unwrap_or(f64::NAN)).collect())
        .collect()
}

fn criterion_9() -> Verdict {
    let mut failures = Vec::new();
    let mut n_configs = 0;
    for fixed in [true, false] {
        for range in [0.0, 0.8, 2.0] {
            for l in [0, 2, 7] {
                for xi in [1.0, 1.75, 2.5] {
                    let scheme = if fixed { InScheme::Fixed { r_c: 60.0 * range } } else { InScheme::Flexible { mu: range } };
                    let cfg = NetworkConfig { l, xi, scheme, ..NetworkConfig::default() };
                    n_configs += 1;
                    for db in [-10.0, 5.0, 20.0] {
                        let ms = MomentSummary::compute(db_to_linear(db), &cfg).unwrap();
                        if !(ms.m1 * ms.m1 <= ms.m2 + 1e-12 && ms.m2 <= ms.m1 + 1e-12) {
                            failures.push(format!("moment order {cfg:?} {db} dB"));
                        }
                        let curve = MetaCurve::from_moments(&ms, 1.0, META_GRID_POINTS).unwrap();
                        if (curve.integral() - ms.m1).abs() > 1e-3 {
                            failures.push(format!("mean recovery {cfg:?} {db} dB"));
                        }
                    }
                    let limits = [stp_file(0.0, &cfg), m1(0.0, &cfg), m2(0.0, &cfg)];
                    if limits.iter().any(|v| (v.as_ref().unwrap() - 1.0).abs() > 1e-12) {
                        failures.push(format!("tau=0 limits {cfg:?}"));
                    }
                }
            }
        }
    }
    for (lo, hi) in [(0.0, 1.5), (0.7, 3.0), (1.2, f64::INFINITY)] {
        for (x, y) in [(0.3, 2.0), (1.0, 1.0), (5.0, 0.05)] {
            for (i, j) in [(1, 3), (2, 2), (4, 7)] {
                let a = h_ij_closed((lo, hi), x, y, i, j, 4.0).unwrap();
                let b = h_ij_closed((lo, hi), y, x, j, i, 4.0).unwrap();
                if (a - b).abs() > 1e-10 * a.abs().max(1.0) {
                    failures.push(format!("H symmetry at {:?}", (lo, hi, x, y, i, j)));
                }
            }
        }
    }
    let q = [-2.5, 0.7, 1.3, 0.2, 0.9, 0.4, 1.1];
    let exp_col = lt_toeplitz_exp_column(&q, q.len()).unwrap();
    let dense: Vec<f64> = dense_expm(&toeplitz(&q)).iter().map(|r| r[0]).collect();
    if max_rel_gap(exp_col.entries(), &dense) > 1e-9 {
        failures.push("Toeplitz exp column".into());
    }
    let (diag, sub) = (1.7, [0.4, -1.2, 0.9, 0.3, -0.6]);
    let inv_col = lt_toeplitz_inv_column(diag, &sub, sub.len() + 1).unwrap();
    let mut w = vec![diag];
    w.extend(sub.iter().map(|v| -v));
    let w = toeplitz(&w);
    let mut x = vec![0.0; w.len()];
    for i in 0..w.len() {
        let acc: f64 = (0..i).map(|k| w[i][k] * x[k]).sum();
        x[i] = (f64::from(u8::from(i == 0)) - acc) / w[i][i];
    }
    if max_rel_gap(inv_col.entries(), &x) > 1e-9 {
        failures.push("Toeplitz inverse column".into());
    }
    let rel = |got: f64, want: f64| (got - want).abs() / want.abs().max(1.0);
    let mut worst = 0.0f64;
    for r in csv_rows("hyp2f1_grid.csv") {
        worst = worst.max(rel(gauss_2f1_neg(r[2], r[3], r[4], r[5]).unwrap(), r[6]));
    }
    let points = std::fs::read_to_string(format!("{}/../core/tests/data/specfun_points.csv", env!("CARGO_MANIFEST_DIR")))
        .unwrap();
    for line in points.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let a = |k: usize| f[k].parse::<f64>().unwrap();
        let got = match f[0] {
            "hyp2f1_neg" => gauss_2f1_neg(a(1), a(2), a(3), a(4)),
            "reg_inc_beta" => reg_inc_beta(a(1), a(2), a(3)),
            "reg_lower_gamma" => reg_lower_gamma(a(1), a(2)),
            "beta" => beta_fn(a(1), a(2)),
            other => panic!("unknown function {other}"),
        };
        worst = worst.max(rel(got.unwrap(), a(5)));
    }
    if worst > 1e-10 {
        failures.push(format!("special functions worst relative error {worst:.2e}"));
    }
    let pass = failures.is_empty();
    let detail = if pass {
        format!("{n_configs} configs, Toeplitz and special functions (worst {worst:.1e}) clean")
    } else {
        failures.join("; ")
    };
    verdict(pass, detail)
}

fn cli_output(args: &[&str], threads: &str, dir: &std::path::Path) -> Vec<u8> {
    let out = dir.join(format!("out_{threads}.csv"));
    let status = Command::new(env!("CARGO_BIN_EXE_cen-meta"))
        .args(args)
        .args(["--threads", threads, "--out"])
        .arg(&out)
        .output()
        .expect("run cen-meta");
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    let mut bytes = std::fs::read(&out).unwrap();
    if let Ok(side) = std::fs::read(out.with_extension("json")) {
        bytes.extend(side);
    }
    bytes
}

fn criterion_10() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let runs: [&[&str]; 2] = [
        &["simulate", "--tau-db", "5", "--topologies", "200", "--fading", "100", "--seed", "11"],
        &["sweep", "--var", "r_i", "--start", "0", "--stop", "2", "--step", "0.25", "--scheme", "both-matched",
          "--outputs", "stp,variance,meta_at_x0"],
    ];
    let mut same = Vec::new();
    for args in runs {
        let a = cli_output(args, "1", dir.path());
        let b = cli_output(args, "2", dir.path());
        let c = cli_output(args, "2", dir.path());
        same.push(a == b && b == c);
    }
    verdict(same.iter().all(|s| *s), format!("simulate identical: {}, sweep identical: {}", same[0], same[1]))
}

fn main() -> ExitCode {
    let mut results: Vec<(usize, Verdict, Duration)> = Vec::new();
    let mut timed = |n: usize, f: &mut dyn FnMut() -> Verdict| {
        let start = Instant::now();
        let v = f();
        let elapsed = start.elapsed();
        println!("criterion {n} [{}] ({:.1} s) {}", if v.pass { "PASS" } else { "FAIL" }, elapsed.as_secs_f64(), v.detail);
        results.push((n, v, elapsed));
    };
    timed(1, &mut criterion_1);
    timed(2, &mut criterion_2);

    let start = Instant::now();
    let taus: Vec<f64> = CAMPAIGN_DB.iter().map(|d| db_to_linear(*d)).collect();
    let campaigns: Vec<Campaign> = schemes()
        .into_iter()
        .map(|(name, cfg)| {
            let mc = MonteCarloConfig::for_network(&cfg, 2000, 500, 42);
            let report = run_campaign_multi(&cfg, &mc, &taus, Execution::Parallel).unwrap();
            Campaign { name, cfg, report }
        })
        .collect();
    let campaign_time = start.elapsed();
    println!("campaigns: 2 schemes x 2000 topologies x 500 fading draws in {:.1} s", campaign_time.as_secs_f64());
    timed(3, &mut || criterion_3(&campaigns));
    timed(4, &mut || criterion_4(&campaigns));
    timed(5, &mut || criterion_5(&campaigns));
    timed(6, &mut || criterion_6(&campaigns));
    timed(7, &mut criterion_7);
    timed(8, &mut criterion_8);
    timed(9, &mut criterion_9);
    timed(10, &mut criterion_10);

    let limits = [(1, 1.0), (2, 1.0), (9, 120.0)];
    let mut failed: Vec<usize> = Vec::new();
    for (n, v, elapsed) in &results {
        let over = limits.iter().any(|(k, s)| k == n && elapsed.as_secs_f64() > *s);
        if over {
            println!("criterion {n} exceeded its runtime budget");
        }
        if !v.pass || over {
            failed.push(*n);
        }
    }
    if campaign_time > Duration::from_secs(30 * 60) {
        println!("Monte Carlo campaigns exceeded the 30 min budget");
        failed.extend([3, 4]);
        failed.sort_unstable();
        failed.dedup();
    }
    println!("summary: {} of 10 criteria passed; failed: {failed:?}", 10 - failed.len());
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
