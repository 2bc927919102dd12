use valuepref::alsim::Context;
use valuepref::estimation::{self, Estimator, Method};
use valuepref::metrics;
use valuepref::synth::{self, SynthConfig};

fn mean_distance_to_truth(method: Method, seed: u64) -> f64 {
    let ds = synth::generate(&SynthConfig { seed, ..SynthConfig::default() }).unwrap();
    let ctx = Context::from_annotations(&ds, estimation::DEFAULT_VO_THRESHOLD).unwrap();
    let truth = ds.ground_truth.as_ref().unwrap();
    let est = Estimator::new(method);
    let total: f64 = ds
        .participants
        .iter()
        .zip(truth)
        .map(|(p, t)| {
            let r = est.estimate_participant(&ctx.vo, p).unwrap().ranking;
            metrics::kemeny_distance(&r, t).unwrap()
        })
        .sum();
    total / ds.participants.len() as f64
}

#[test]
fn comb_is_no_worse_than_choices_alone() {
    for seed in [0, 1, 2] {
        let c = mean_distance_to_truth(Method::C, seed);
        let comb = mean_distance_to_truth(Method::Comb, seed);
        eprintln!("seed {seed}: C {c:.3} comb {comb:.3}");
        assert!(comb <= c * 1.10, "seed {seed}: comb {comb:.3} vs C {c:.3}");
    }
}
