//! Acceptance run: one line per criterion, non-zero exit if any fails.
//!
//! Criteria run one after another so that wall-clock budgets are measured
//! without competing threads.

use std::fs;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use mflab::coupling::{chaos_experiment, ChaosConfig, ChaosMetric, RateTable};
use mflab::datagen::rng::counter_rng;
use mflab::datagen::{init_2l, init_3l, DataSource, DataSpec, InitSpec, Pool};
use mflab::dynamics::{
    hb_step, hb_unrolled, noisy_shb_step, shb_step, unrolled_coefficient, DataStream, Hyper, ShbState,
};
use mflab::harness::{execute, run, ExperimentConfig, Record};
use mflab::model::gradcheck::{check_scaled_gradient, scale_factors_2l, scale_factors_3l};
use mflab::model::{Activation, Loss, Network, Objective};
use mflab::transport::{w2_bruteforce, w2_exact, EmpiricalMeasure};
use rand::Rng;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

type Check = fn() -> Verdict;

fn main() -> ExitCode {
    let checks: [(&str, Option<u64>, Check); 13] = [
        ("gradient scaling", Some(10), gradient_scaling),
        ("unrolled heavy-ball identity", Some(10), unrolled_identity),
        ("noiseless reduction", None, noiseless_reduction),
        ("W2 oracle equivalence", None, w2_oracle),
        ("discretization order in eps", Some(120), discretization_order),
        ("SHB fluctuation order sqrt(eps)", Some(180), fluctuation_order),
        ("chaos in width", Some(300), chaos_in_width),
        ("two-layer dropout scaling", Some(600), dropout_scaling_2l),
        ("three-layer dropout", Some(600), dropout_3l),
        ("connectivity", None, connectivity),
        ("noisy boundedness", None, noisy_boundedness),
        ("triangle decomposition", None, triangle_decomposition),
        ("determinism", None, determinism),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, budget, check)) in checks.iter().enumerate() {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let v = check();
        let elapsed = start.elapsed();
        let in_time = budget.is_none_or(|b| elapsed <= Duration::from_secs(b));
        let pass = v.pass && in_time;
        let budget_note = budget.map_or(String::new(), |b| format!(", budget {b} s"));
        println!(
            "[{:>2}] {:<34} {}  {} ({:.1} s{budget_note})",
            i + 1,
            name,
            if pass { "PASS" } else { "FAIL" },
            v.detail,
            elapsed.as_secs_f64()
        );
        if !pass {
            failed += 1;
        }
    }
    println!("acceptance: {failed} failed");
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn logistic_tanh() -> Objective {
    Objective::two_layer(Activation::Tanh, Loss::Logistic)
}

fn unit_sphere(rng: &mut impl Rng, d: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-12);
    v.iter().map(|x| x / norm * (d as f64).sqrt()).collect()
}

fn gradient_scaling() -> Verdict {
    let mut worst2 = 0.0f64;
    let mut worst3 = 0.0f64;
    let obj3 = Objective::three_layer(Activation::Tanh, Activation::Tanh, Loss::Logistic);
    for seed in 0..50u64 {
        let mut rng = counter_rng(seed, 1);
        let y = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let w = init_2l(&InitSpec::default(), 8, 5, seed).unwrap();
        let x = unit_sphere(&mut rng, 5);
        let r = check_scaled_gradient(&w, &x, y, &logistic_tanh(), &scale_factors_2l(&w));
        worst2 = worst2.max(r.max_rel_error);
        let w = init_3l(&InitSpec::default(), 4, 3, 5, seed).unwrap();
        let r = check_scaled_gradient(&w, &x, y, &obj3, &scale_factors_3l(&w));
        worst3 = worst3.max(r.max_rel_error);
    }
    verdict(
        worst2 < 1e-5 && worst3 < 1e-4,
        format!("max rel error 2L {worst2:.2e} (< 1e-5), 3L {worst3:.2e} (< 1e-4); gaps under 1e-8 count as exact"),
    )
}

fn unrolled_identity() -> Verdict {
    let source = DataSource::new(&DataSpec {
        dim: 4,
        ..DataSpec::default()
    })
    .unwrap();
    let mut worst = 0.0f64;
    let mut coeff_ok = true;
    for seed in 0..20u64 {
        let mut rng = counter_rng(seed, 2);
        let gamma = rng.random_range(0.5..3.0);
        let eps = rng.random_range(0.05..0.9) / gamma;
        let h = Hyper::new(gamma, eps, 1.0, seed).unwrap();
        let pool = Pool::draw(&source, seed, 32).unwrap();
        let w0 = init_2l(&InitSpec::default(), 6, 4, seed).unwrap();
        let mut s = ShbState::new(w0.clone());
        for _ in 0..100 {
            hb_step(&mut s, &pool, &logistic_tanh(), &h).unwrap();
        }
        let u = hb_unrolled(&w0, &pool, &logistic_tanh(), &h, 100).unwrap();
        for (a, b) in u.as_slice().iter().zip(s.w.as_slice()) {
            worst = worst.max((a - b).abs());
        }
        // Geometric partial sums approach ε/γ from below; allow rounding only.
        coeff_ok &= (0..100).all(|l| unrolled_coefficient(&h, 100, l) <= eps / gamma * (1.0 + 1e-12));
    }
    verdict(
        worst <= 1e-10 && coeff_ok,
        format!("max |unrolled - iterated| {worst:.2e} (<= 1e-10), c <= eps/gamma: {coeff_ok}"),
    )
}

fn noiseless_reduction() -> Verdict {
    let source = DataSource::new(&DataSpec::default()).unwrap();
    let h = Hyper::new(2.0, 0.05, 50.0, 11).unwrap();
    let w0 = init_2l(&InitSpec::default(), 32, 10, 11).unwrap();
    let stream = DataStream::new(source, 11);
    let (mut a, mut b) = (ShbState::new(w0.clone()), ShbState::new(w0));
    let mut rng = counter_rng(5, 0);
    let mut identical = true;
    for k in 0..1000 {
        let z = stream.get(k);
        shb_step(&mut a, &z, &logistic_tanh(), &h).unwrap();
        noisy_shb_step(&mut b, &z, &logistic_tanh(), &h, &mut rng).unwrap();
        identical &=
            a.w.as_slice()
                .iter()
                .zip(b.w.as_slice())
                .all(|(x, y)| x.to_bits() == y.to_bits());
    }
    verdict(identical, "1000 steps, every coordinate bit-identical".to_string())
}

fn w2_oracle() -> Verdict {
    let mut rng = counter_rng(4, 4);
    let mut measure = |n: usize, d: usize| {
        EmpiricalMeasure::new(d, (0..n * d).map(|_| rng.random_range(-2.0..2.0)).collect()).unwrap()
    };
    let mut worst = 0.0f64;
    let mut draws = Vec::new();
    for i in 0..300 {
        let n = 1 + i % 6;
        let d = 1 + (i / 6) % 4;
        draws.push((measure(n, d), measure(n, d), measure(n, d)));
    }
    for (a, b, _) in &draws[..200] {
        worst = worst.max((w2_exact(a, b).unwrap() - w2_bruteforce(a, b).unwrap()).abs());
    }
    let mut axioms = true;
    for (a, b, c) in &draws[200..] {
        let ab = w2_exact(a, b).unwrap();
        axioms &= w2_exact(a, a).unwrap() <= 1e-9;
        axioms &= (ab - w2_exact(b, a).unwrap()).abs() <= 1e-9;
        axioms &= ab <= w2_exact(a, c).unwrap() + w2_exact(c, b).unwrap() + 1e-9;
    }
    verdict(
        worst <= 1e-9 && axioms,
        format!("200 instances max |exact - brute| {worst:.1e}; axioms on 100 triples: {axioms}"),
    )
}

fn chaos_base() -> ChaosConfig {
    ChaosConfig {
        data: DataSpec::default(),
        objective: logistic_tanh(),
        init: InitSpec::default(),
        gamma: 1.0,
        ..ChaosConfig::default()
    }
}

fn discretization_order() -> Verdict {
    // Inner step ε/64 at each step size.
    let run = |eps: f64| -> RateTable {
        chaos_experiment(&ChaosConfig {
            widths: vec![64],
            eps: vec![eps],
            seeds: (0..5).collect(),
            horizon: 2.0,
            pd_substeps: 64,
            pool_size: 1024,
            metrics: vec![ChaosMetric::PdHb],
            ..chaos_base()
        })
        .unwrap()
    };
    let coarse = run(0.04).median(ChaosMetric::PdHb, 64, 0.04).unwrap();
    let fine = run(0.02).median(ChaosMetric::PdHb, 64, 0.02).unwrap();
    let ratio = coarse / fine;
    verdict(
        (1.4..=2.8).contains(&ratio),
        format!("median D(PD,HB) ratio eps 0.04/0.02 = {ratio:.3} (target [1.4, 2.8])"),
    )
}

fn fluctuation_order() -> Verdict {
    let t = chaos_experiment(&ChaosConfig {
        widths: vec![256],
        eps: vec![0.02, 0.04],
        seeds: (0..20).collect(),
        horizon: 1.0,
        pool_size: 4096,
        metrics: vec![ChaosMetric::HbShb],
        ..chaos_base()
    })
    .unwrap();
    let ratio = t.median(ChaosMetric::HbShb, 256, 0.04).unwrap() / t.median(ChaosMetric::HbShb, 256, 0.02).unwrap();
    verdict(
        (1.1..=2.2).contains(&ratio),
        format!("median D(HB,SHB) ratio eps 0.04/0.02 = {ratio:.3} (target [1.1, 2.2])"),
    )
}

fn chaos_in_width() -> Verdict {
    let t = chaos_experiment(&ChaosConfig {
        widths: vec![64, 256, 1024],
        eps: vec![0.05],
        seeds: (0..5).collect(),
        horizon: 1.0,
        n_ref: Some(4096),
        pd_substeps: 4,
        pool_size: 1024,
        metrics: vec![ChaosMetric::ProxyPd],
        ..chaos_base()
    })
    .unwrap();
    let fit = t
        .fit(ChaosMetric::ProxyPd, "width")
        .and_then(|f| f.fit.clone())
        .unwrap();
    verdict(
        (-0.8..=-0.2).contains(&fit.slope) && fit.r2 >= 0.7,
        format!(
            "slope {:.3} (target [-0.8, -0.2]), R2 {:.3} (>= 0.7)",
            fit.slope, fit.r2
        ),
    )
}

fn config(text: &str) -> ExperimentConfig {
    ExperimentConfig::from_json(text).unwrap()
}

fn aggregate(records: &[Record], metric: &str) -> Vec<(usize, f64)> {
    records
        .iter()
        .filter(|r| r.metric == metric && r.seed.is_none())
        .map(|r| (r.width.unwrap(), r.value))
        .collect()
}

fn dropout_scaling_2l() -> Verdict {
    let out = execute(&config(
        r#"{"experiment": "dropout_scan", "widths": [100, 200, 400, 800, 1600], "seeds": [0, 1, 2, 3, 4],
            "hyper": {"gamma": 2.0, "eps": 0.05, "horizon": 100.0}, "dropout": {"subsets": 10}}"#,
    ))
    .unwrap();
    let Some(fit) = out.summary.fits.first().and_then(|f| f.fit.clone()) else {
        return verdict(false, format!("no fit produced: {:?}", out.error));
    };
    verdict(
        out.error.is_none() && (-0.85..=-0.2).contains(&fit.slope) && fit.r2 >= 0.8,
        format!(
            "2000 steps; slope of mean eps_D {:.3} (target [-0.85, -0.2]), R2 {:.3} (>= 0.8)",
            fit.slope, fit.r2
        ),
    )
}

fn dropout_3l() -> Verdict {
    let out = execute(&config(
        r#"{"experiment": "dropout_scan", "model": "three_layer", "widths": [50, 100, 200, 400],
            "seeds": [0, 1, 2, 3, 4], "hyper": {"gamma": 2.0, "eps": 0.05, "horizon": 100.0},
            "dropout": {"subsets": 10}}"#,
    ))
    .unwrap();
    let medians = aggregate(&out.records, "eps_d.median");
    let decreasing = medians.len() == 4 && medians.windows(2).all(|p| p[1].1 < p[0].1);
    let shown: Vec<String> = medians.iter().map(|(n, v)| format!("{n}:{v:.2e}")).collect();
    verdict(
        out.error.is_none() && decreasing,
        format!("median eps_D {} strictly decreasing: {decreasing}", shown.join(" ")),
    )
}

fn connectivity() -> Verdict {
    let cfg = config(CONNECT_CONFIG);
    let out = execute(&cfg).unwrap();
    let medians = aggregate(&out.records, "eps_c.median");
    let get = |n: usize| medians.iter().find(|m| m.0 == n).map(|m| m.1);
    let (Some(small), Some(large)) = (get(100), get(800)) else {
        return verdict(false, format!("missing medians: {:?}", out.error));
    };
    // Endpoint exactness and knot continuity on one trained pair.
    let pair = path_exactness();
    verdict(
        out.error.is_none() && large < small && pair.pass,
        format!("median eps_C n=100 {small:.3e}, n=800 {large:.3e}; {}", pair.detail),
    )
}

const CONNECT_CONFIG: &str = r#"{"experiment": "connect", "widths": [100, 800], "seeds": [0, 1, 2, 3, 4],
    "hyper": {"gamma": 2.0, "eps": 0.05, "horizon": 100.0}, "path": {"points_per_segment": 16}}"#;

fn path_exactness() -> Verdict {
    use mflab::landscape::build_path_2l;
    let w = init_2l(&InitSpec::default(), 100, 10, 1).unwrap();
    let w_prime = init_2l(&InitSpec::default(), 100, 10, 2).unwrap();
    let path = build_path_2l(&w, &w_prime, 1).unwrap();
    let steps = 64;
    let segs = path.segments().len();
    let exact_ends = path.point(0, 0, steps) == w && path.point(segs - 1, steps - 1, steps) == w_prime;
    let mut gap = 0.0f64;
    for s in 1..segs {
        let (a, b) = (path.point(s - 1, steps - 1, steps), path.point(s, 0, steps));
        for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
            gap = gap.max((x - y).abs());
        }
    }
    verdict(
        exact_ends && gap <= 1e-12,
        format!("endpoints exact: {exact_ends}, knot gap {gap:.1e}"),
    )
}

fn noisy_boundedness() -> Verdict {
    let out = execute(&config(
        r#"{"experiment": "noisy", "widths": [64], "seeds": [0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16, 17, 18, 19],
            "hyper": {"gamma": 1.0, "eps": 0.01, "horizon": 5.0, "lambda": 0.1, "beta_inv": 0.01},
            "pool_size": 512}"#,
    ))
    .unwrap();
    let sup = out
        .records
        .iter()
        .filter(|r| r.metric == "max_abs_w2")
        .fold(0.0f64, |m, r| m.max(r.value));
    let finite = out.records.iter().all(|r| r.value.is_finite());
    let snapshots = out.records.iter().filter(|r| r.metric == "max_abs_w2").count();
    verdict(
        out.error.is_none() && finite && sup <= 50.0 && snapshots == 20 * 501,
        format!("20 seeds x 500 steps, finite: {finite}, sup max |w2| {sup:.3} (<= 50)"),
    )
}

fn triangle_decomposition() -> Verdict {
    let out = execute(&config(
        r#"{"experiment": "couple", "widths": [16, 64], "seeds": [0, 1, 2],
            "hyper": {"gamma": 1.0, "eps": 0.05, "horizon": 1.0}, "pool_size": 512,
            "pd_substeps": 8, "chaos": {"eps_list": [0.05, 0.1], "n_ref": 256}}"#,
    ))
    .unwrap();
    let find = |r: &Record, m: &str| {
        out.records
            .iter()
            .find(|o| o.metric == m && o.width == r.width && o.eps == r.eps && o.seed == r.seed && o.time == r.time)
            .map(|o| o.value)
            .unwrap()
    };
    let mut checked = 0;
    let mut worst = f64::NEG_INFINITY;
    // At t = 0 all four distances vanish, so `worst` is at least 0.
    for r in out.records.iter().filter(|r| r.metric.starts_with("d_proxy_shb")) {
        let suffix = &r.metric["d_proxy_shb".len()..];
        let rhs = find(r, &format!("d_proxy_pd{suffix}"))
            + find(r, &format!("d_pd_hb{suffix}"))
            + find(r, &format!("d_hb_shb{suffix}"));
        worst = worst.max(r.value - rhs);
        checked += 1;
    }
    verdict(
        out.error.is_none() && checked > 0 && worst <= 1e-9,
        format!("{checked} (run, time) points, max lhs - rhs {worst:.2e} (<= 1e-9)"),
    )
}

fn determinism() -> Verdict {
    let configs = [
        r#"{"experiment": "train", "widths": [8], "seeds": [1, 2], "dynamics": "pd", "pd_substeps": 4,
            "hyper": {"gamma": 2.0, "eps": 0.05, "horizon": 1.0}, "pool_size": 256}"#,
        r#"{"experiment": "couple", "widths": [8, 16], "seeds": [1], "chaos": {"n_ref": 64}, "pd_substeps": 2,
            "hyper": {"gamma": 1.0, "eps": 0.05, "horizon": 0.5}, "pool_size": 256}"#,
        r#"{"experiment": "couple", "model": "three_layer", "widths": [4, 6], "seeds": [1], "pd_substeps": 2,
            "chaos": {"n_ref": 12}, "hyper": {"gamma": 1.0, "eps": 0.1, "horizon": 0.3}, "pool_size": 64}"#,
        r#"{"experiment": "chaos", "widths": [8, 16, 32], "seeds": [1, 2], "chaos": {"eps_list": [0.05, 0.1], "n_ref": 128},
            "pd_substeps": 2, "hyper": {"gamma": 1.0, "eps": 0.05, "horizon": 0.5}, "pool_size": 256}"#,
        r#"{"experiment": "dropout_scan", "widths": [10, 20, 40], "seeds": [1, 2],
            "hyper": {"gamma": 2.0, "eps": 0.05, "horizon": 2.0}, "pool_size": 256}"#,
        r#"{"experiment": "connect", "widths": [10], "seeds": [1], "batch_size": 4,
            "hyper": {"gamma": 2.0, "eps": 0.05, "horizon": 1.0}, "pool_size": 256}"#,
        r#"{"experiment": "noisy", "widths": [10], "seeds": [1, 2],
            "hyper": {"gamma": 1.0, "eps": 0.05, "horizon": 1.0, "lambda": 0.1, "beta_inv": 0.01}, "pool_size": 256}"#,
    ];
    let mut identical = 0;
    for text in configs {
        let cfg = config(text);
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        let (pa, pb) = (run(&cfg, a.path()).unwrap(), run(&cfg, b.path()).unwrap());
        if fs::read(&pa.csv).unwrap() == fs::read(&pb.csv).unwrap()
            && fs::read(&pa.summary).unwrap() == fs::read(&pb.summary).unwrap()
        {
            identical += 1;
        }
    }
    verdict(
        identical == configs.len(),
        format!(
            "{identical}/{} experiment configs byte-identical on rerun",
            configs.len()
        ),
    )
}
