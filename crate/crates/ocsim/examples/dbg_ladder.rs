use ocsim::growth::*;

fn main() {
    let model = GateModel::new(2).unwrap();
    for sites in [20usize, 40, 60, 100] {
        let target = GrowthTarget::Ladder(sites);
        let trials = 400;
        let (rows, summary) = run_growth_trials(&target, &model, trials, 13, 2_000_000).unwrap();
        let stalled = rows.iter().filter(|r| r.stalled).count();
        let max_att = rows.iter().map(|r| r.site_attempts).max().unwrap();
        println!(
            "ladder:{sites}: attempts/site={:.3}+-{:.3} mean_attempts={:.1} max={} stalled={} alt8={:.3}+-{:.3}",
            summary.attempts_per_site.value, summary.attempts_per_site.std_error,
            summary.mean_site_attempts.value, max_att, stalled,
            alternating_successes_per_site(&rows).value, alternating_successes_per_site(&rows).std_error
        );
    }
}
