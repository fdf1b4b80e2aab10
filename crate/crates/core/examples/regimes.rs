//! Print lead-time diagnostics for the built-in simulator regimes.
//!
//! Usage: `cargo run --example regimes -- <endo|exo|sandy> [n_nodes] [json overrides]`

use std::sync::Arc;
use std::time::Instant;

use netsensor::geo::Gazetteer;
use netsensor::ingest::{default_epoch, FilterLevel};
use netsensor::leadtime::{lead_time_sweep, lead_time_trials};
use netsensor::pipeline::{null_population, prepare};
use netsensor::sampling::GeoCombo;
use netsensor::sentiment::composition;
use netsensor::simulator::{simulate, SimConfig};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let regime = args.get(1).map(String::as_str).unwrap_or("endo");
    let n: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(20_000);
    let mut cfg = match regime {
        "endo" => SimConfig::endogenous_dominant(n, 1),
        "exo" => SimConfig::exogenous_dominant(n, 1),
        _ => SimConfig::sandy_like(n, 1),
    };
    if let Some(over) = args.get(3) {
        let mut v = serde_json::to_value(&cfg).unwrap();
        let o: serde_json::Value = serde_json::from_str(over).unwrap();
        for (k, x) in o.as_object().unwrap() {
            v[k] = x.clone();
        }
        cfg = serde_json::from_value(v).unwrap();
    }
    let t = Instant::now();
    let out = simulate(&cfg, default_epoch()).unwrap();
    let aware = out.truth.iter().filter(|t| t.is_some()).count();
    println!(
        "simulated {} messages, {} aware of {} in {:?}",
        out.messages.len(),
        aware,
        n,
        t.elapsed()
    );
    let prep = prepare(
        &out.messages,
        &out.profiles,
        Arc::new(out.graph.clone()),
        &Gazetteer::default(),
        Some(&out.area),
        FilterLevel::Strict,
    );
    let pop = &prep.population;

    if regime == "sandy" {
        for combo in GeoCombo::ALL {
            let rows = lead_time_trials(pop, 500, 20, combo, 100).unwrap();
            let mut dts: Vec<f64> = rows.iter().map(|r| r.dt).collect();
            dts.sort_by(f64::total_cmp);
            let med = 0.5 * (dts[9] + dts[10]);
            let tc = rows.iter().map(|r| r.mean_tc).sum::<f64>() / 20.0;
            println!("{combo:8} median dt {med:8.3}  mean tc {tc:8.3}");
        }
        let pts: Vec<(f64, i8)> = prep
            .relevant
            .iter()
            .map(|m| (m.offset_h, m.precomputed_sentiment.unwrap().signum() as i8))
            .collect();
        let comp = composition(&pts, 6.0).unwrap();
        for (s, f) in comp.bin_start.iter().zip(&comp.fractions) {
            if let Some(f) = f {
                if f.negative > f.positive {
                    println!("negative bin {s}");
                }
            }
        }
        return;
    }

    let t = Instant::now();
    for size in [500, 1000, 2500, 5000] {
        let rows = lead_time_trials(pop, size, 100, GeoCombo::Any, 0).unwrap();
        let neg = rows.iter().filter(|r| r.dt < 0.0).count();
        let mean = rows.iter().map(|r| r.dt).sum::<f64>() / 100.0;
        println!("size {size}: dt<0 in {neg}/100, mean dt {mean:.3}");
    }
    println!("sign check {:?}", t.elapsed());

    let sizes = [500, 1000, 2500, 5000];
    let mut bad = 0;
    for rep in 0..20u64 {
        let rows = lead_time_sweep(pop, &sizes, 20, GeoCombo::Any, rep * 1000).unwrap();
        let inv = |f: &dyn Fn(usize) -> f64| (0..3).filter(|&i| f(i + 1) > f(i)).count();
        let a = inv(&|i| rows[i].dt.abs());
        let s = inv(&|i| rows[i].dt_sigma);
        if a > 1 || s > 1 {
            bad += 1;
        }
        if rep < 3 {
            println!(
                "rep {rep}: {:?}",
                rows.iter().map(|r| (r.dt, r.dt_sigma)).collect::<Vec<_>>()
            );
        }
    }
    println!("monotone violations {bad}/20");

    let mut wins = [0; 3];
    for i in 0..20u64 {
        let null = null_population(&prep, 5000 + i);
        let a = lead_time_sweep(pop, &[500, 1000, 2500], 10, GeoCombo::Any, i * 77).unwrap();
        let b = lead_time_sweep(&null, &[500, 1000, 2500], 10, GeoCombo::Any, i * 77).unwrap();
        for k in 0..3 {
            if b[k].dt.abs() >= a[k].dt.abs() {
                wins[k] += 1;
            }
        }
        if i < 2 {
            println!(
                "actual {:?} null {:?}",
                a.iter().map(|r| r.dt).collect::<Vec<_>>(),
                b.iter().map(|r| r.dt).collect::<Vec<_>>()
            );
        }
    }
    println!("null >= actual: {wins:?} of 20");
}
