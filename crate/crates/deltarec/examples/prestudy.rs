//! Pre-study for the acceptance bands: runs the pinned experiment
//! configurations (plus alternate seeds for sensitivity) and prints the
//! observed statistics next to the bands asserted in tests/acceptance.rs.
//!
//! Run with: cargo run --release -p deltarec --example prestudy [quick]

use deltarec::minima::MinimaSpec;
use deltarec::montecarlo::{run_experiment, trend_check, ExperimentConfig};
use deltarec::presets;
use deltarec::{DiscreteModel, RngState};

fn report_line(tag: &str, cfg: &ExperimentConfig) {
    let t0 = std::time::Instant::now();
    let report = run_experiment(cfg).expect("experiment runs");
    for s in &report.per_n {
        println!(
            "{tag} seed={} n={:<8} mean={:+.4} var={:.4} ks={:.4} comp={:.4}",
            cfg.master_seed, s.n, s.mean, s.variance, s.ks, s.compensator_mean
        );
    }
    if report.per_n.len() >= 3 {
        let trend = trend_check(&report).expect("grid spans decades");
        println!(
            "{tag} seed={} trend pass={} ks_pass={} var_pass={}",
            cfg.master_seed, trend.pass, trend.ks_pass, trend.variance_pass
        );
    }
    if let Some(countss) = report
        .per_n
        .iter()
        .map(|s| s.counts.as_ref())
        .collect::<Option<Vec<_>>>()
    {
        if countss.len() >= 2 {
            let last = countss[countss.len() - 1];
            let prev = countss[countss.len() - 2];
            let stable = last.iter().zip(prev).filter(|(a, b)| a == b).count();
            println!(
                "{tag} seed={} stabilized={:.4}",
                cfg.master_seed,
                stable as f64 / last.len() as f64
            );
        }
    }
    println!("{tag} seed={} elapsed={:.1}s", cfg.master_seed, t0.elapsed().as_secs_f64());
}

fn with_seed(mut cfg: ExperimentConfig, seed: u64) -> ExperimentConfig {
    cfg.master_seed = seed;
    cfg
}

fn main() {
    let quick = std::env::args().any(|a| a == "quick");
    let scale = |cfg: ExperimentConfig| -> ExperimentConfig {
        if quick {
            let mut c = cfg;
            c.reps = (c.reps / 10).max(100);
            c
        } else {
            cfg
        }
    };

    // #5/#11: geometric weak records, exact normalizers.
    let weak = scale(presets::build("example-5.1-weak").unwrap());
    report_line("A5.geo-weak", &weak);
    for seed in [77001u64, 77002] {
        report_line("A5.geo-weak.alt", &with_seed(weak.clone(), seed));
    }

    // #6: geometric positive delta.
    let pos = scale(presets::build("example-5.1-pos").unwrap());
    report_line("A6.geo-pos", &pos);
    report_line("A6.geo-pos.alt", &with_seed(pos.clone(), 78001));

    // #7: zeta both delta signs.
    let zeta_neg = scale(presets::build("example-5.3").unwrap());
    report_line("A7.zeta-neg", &zeta_neg);
    let mut zeta_pos = zeta_neg.clone();
    zeta_pos.delta = 1;
    zeta_pos.master_seed = 1014;
    report_line("A7.zeta-pos", &zeta_pos);

    // #8: Poisson negative delta, closed-form normalizers.
    let poi = scale(presets::build("example-5.4-neg").unwrap());
    report_line("A8.poisson-neg", &poi);
    report_line("A8.poisson-neg.alt", &with_seed(poi.clone(), 79001));

    // #9: finite-record regime.
    let fin = scale(presets::build("example-5.4-delta2").unwrap());
    report_line("A9.finite", &fin);
    report_line("A9.finite.alt", &with_seed(fin.clone(), 80001));

    // #12: negative binomial with the geometric constants.
    let nb = scale(presets::build("example-5.2").unwrap());
    report_line("A12.negbin", &nb);
    report_line("A12.negbin.alt", &with_seed(nb.clone(), 81001));

    // #10: Deheuvels ratio.
    let spec = MinimaSpec::survival(DiscreteModel::geometric(0.5).unwrap());
    let n = 1_000_000u64;
    let h = spec.h_log(n as f64);
    let runs = if quick { 20 } else { 100 };
    let mut ratios: Vec<f64> = (0..runs)
        .map(|rep| {
            let mut rng = RngState::for_stream(1010, rep);
            spec.simulate_partial_minima(n, &mut rng) / h
        })
        .collect();
    ratios.sort_by(|a, b| a.partial_cmp(b).unwrap());
    println!(
        "A10.minima H={h:.4} median={:.4} min={:.4} max={:.4}",
        ratios[ratios.len() / 2],
        ratios[0],
        ratios[ratios.len() - 1]
    );
}
