//! Shared fixtures for the benchmark targets.

use m3c::synth::SynthOutput;
use m3c::{synth_generate, SynthConfig};

/// The reference mixture setting: 3 classes x 8 graphs, 10 inliers,
/// 2 outliers, coordinate noise 0.03.
pub fn reference_instance(seed: u64) -> SynthOutput {
    synth_generate(&SynthConfig {
        n_classes: 3,
        graphs_per_class: vec![8],
        n_inliers: 10,
        n_outliers: 2,
        deform_sigma: 0.03,
        seed,
    })
    .expect("generation cannot fail for the reference setting")
}
