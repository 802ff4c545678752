//! Shared setup for the benchmark targets; see `benches/kernels.rs`.

use shadowflow::dynamics::ExtendedState;
use shadowflow::geometry::{MetricField, ScalarField, SymplecticStructure};

/// The standard bound-regime oscillator configuration used by benches.
pub fn oscillator_fixture() -> (MetricField, SymplecticStructure, ExtendedState, f64) {
    let metric = MetricField::conformal(ScalarField::harmonic(1));
    let s = SymplecticStructure::new(1).expect("one degree of freedom");
    let mu = 0.03125;
    let state = shadowflow::oscillator::oscillator_initial_state(mu, 1.0, 0.25, 1.0)
        .expect("reference initial data");
    (metric, s, state, mu)
}
