//! Times one neural-net fit on a synthetic training split.
use biasaudit::{dataset::SplitSpec, learners::fit, LearnerSpec, SynthConfig};
use std::time::Instant;

fn main() {
    let d = biasaudit::synth::generate(&SynthConfig::new(0.2, 0.45, 3)).unwrap();
    let (train, _) = biasaudit::dataset::split(&d, &SplitSpec::new(1)).unwrap();
    let t = Instant::now();
    let m = fit(&LearnerSpec::neural_net(1e-4), &train).unwrap();
    println!("n={} epochs={} {:.3}s", train.n(), m.epochs, t.elapsed().as_secs_f64());
}
