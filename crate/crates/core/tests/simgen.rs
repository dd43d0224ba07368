use vread::dwell_stats::{fit_log_normal, histogram_ln_dwell_range};
use vread::evaluator::user_week_clicks;
use vread::simgen::{
    analytic_click_rate, analytic_light_user_fraction, generate, item_classes, ItemClass, SimConfig,
};

fn million() -> SimConfig {
    SimConfig {
        n_users: 5000,
        n_items: 200,
        seed: 21,
        level_impressions: [100, 140, 180, 200, 220, 260, 300],
        ..SimConfig::default()
    }
}

#[test]
fn click_rate_matches_quadrature() {
    let cfg = million();
    let out = generate(&cfg).unwrap();
    assert!(out.events.len() >= 1_000_000);
    let rate = out.events.iter().filter(|e| e.clicked).count() as f64 / out.events.len() as f64;
    let want = analytic_click_rate(&cfg).unwrap();
    assert!((rate - want).abs() < 0.01, "rate {rate} vs {want}");
}

#[test]
fn class_log_dwell_moments() {
    let cfg = SimConfig {
        dt_affinity: 0.0,
        ..million()
    };
    let out = generate(&cfg).unwrap();
    let classes = item_classes(&cfg);
    for (c, class) in cfg.classes.iter().enumerate() {
        let ln: Vec<f64> = out
            .events
            .iter()
            .filter(|e| e.clicked)
            .filter(|e| classes[e.item_id[1..].parse::<usize>().unwrap()] == c)
            .map(|e| e.dwell_time_s.ln())
            .collect();
        let mean = ln.iter().sum::<f64>() / ln.len() as f64;
        assert!((mean - class.ln_mean).abs() < 0.02, "{}: {mean}", class.name);
    }
}

#[test]
fn light_user_fraction_matches_binomial() {
    let cfg = SimConfig {
        n_users: 20_000,
        n_items: 50,
        latent_std: 0.0,
        click_bias: -2.0,
        level_impressions: [10, 20, 30, 45, 60, 80, 110],
        ..SimConfig::default()
    };
    let out = generate(&cfg).unwrap();
    let weekly = user_week_clicks(&out.events);
    let heavy = weekly.values().filter(|&&w| w >= 7).count();
    let light = (cfg.n_users - heavy) as f64 / cfg.n_users as f64;
    let want = analytic_light_user_fraction(&cfg).unwrap();
    assert!((light - want).abs() < 0.01, "light {light} vs {want}");
}

#[test]
fn short_reads_share_of_histogram() {
    // one class at the log-normal the thresholds were set from
    let cfg = SimConfig {
        dt_affinity: 0.0,
        classes: vec![ItemClass {
            name: "all".into(),
            share: 1.0,
            ln_mean: 4.003,
            ln_std: 1.295,
        }],
        ..million()
    };
    let out = generate(&cfg).unwrap();
    let stats = fit_log_normal(&out.events).unwrap();
    assert!((stats.x_l - 15.0).abs() < 0.5, "x_l {}", stats.x_l);
    // 0.2-wide bins with an edge at ln 15
    let edge = 15f64.ln();
    let bins = histogram_ln_dwell_range(&out.events, edge - 4.0, edge + 6.0, 50).unwrap();
    let total: u64 = bins.iter().map(|b| b.count).sum();
    let below = bins.iter().filter(|b| b.center < edge).map(|b| b.count).sum::<u64>() as f64 / total as f64;
    assert!((0.14..0.18).contains(&below), "{below}");
}
