//! Shared fixtures for the kernel benchmarks.

use std::sync::Arc;

use mcflow_core::geometry::{bubble, BubbleParams};
use mcflow_core::spharm::{GridField, GridSpec};
use mcflow_core::SpherePoint;

/// A bubble state and its grid at the given band limit.
pub fn bubble_fixture(l_max: usize, lambda: f64) -> (Arc<GridSpec>, GridField) {
    let spec = GridSpec::build(l_max, 2.0).expect("grid");
    let u = bubble(
        &BubbleParams::new(SpherePoint::north(), lambda).expect("params"),
        &spec,
    );
    (spec, u)
}
