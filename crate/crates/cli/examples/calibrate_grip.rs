//! Finds per-object grip forces that put the naive planner's failure rate
//! at a target, by bisection on the force.
//!
//! cargo run --release -p comgrasp-cli --example calibrate_grip -- [target] [trials]

use comgrasp::harness::{run_stability_campaign, CampaignConfig};
use comgrasp::sim::Planner;

fn naive_failure(base: &CampaignConfig, index: usize, grip: f64, trials: usize) -> f64 {
    let mut cfg = base.clone();
    let mut obj = cfg.objects[index].clone();
    obj.grip_force = grip;
    cfg.objects = vec![obj.clone()];
    let table = run_stability_campaign(&cfg, trials, &[Planner::Naive]).expect("campaign runs");
    1.0 - table.rate(&obj.id, Planner::Naive).unwrap_or(0.0)
}

fn main() {
    let mut args = std::env::args().skip(1);
    let target: f64 = args.next().map_or(0.375, |a| a.parse().expect("target fraction"));
    let trials: usize = args.next().map_or(1000, |a| a.parse().expect("trial count"));
    let base = CampaignConfig::preset(0xca11b);
    for i in 0..base.objects.len() {
        let (mut lo, mut hi) = (1.0_f64, 5000.0_f64);
        for _ in 0..30 {
            let mid = 0.5 * (lo + hi);
            if naive_failure(&base, i, mid, trials) > target {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 0.05 {
                break;
            }
        }
        let grip = (hi * 10.0).round() / 10.0;
        println!(
            "{} grip_force = {grip:.1} N  naive failure {:.3}",
            base.objects[i].id,
            naive_failure(&base, i, grip, trials)
        );
    }
}
