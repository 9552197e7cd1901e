//! The transported level set `e(x, t) = d₀(X_t⁻¹(x))` and its stretch factor.

use super::{DistanceFunction, FlowMap};
use crate::grid::{Grid, ScalarField};
use crate::{Result, Vec2};

/// Transported level set on a grid with `|∇e|` from centered differences.
#[derive(Debug, Clone)]
pub struct LevelSetField {
    pub e: ScalarField,
    pub gradient_norm: ScalarField,
    pub time: f64,
}

/// Evaluate `e = d₀ ∘ X⁻¹` at every node, where `map` runs from time 0 to
/// the requested time.
pub fn transported_level_set(d0: &dyn DistanceFunction, map: &FlowMap, grid: Grid) -> Result<LevelSetField> {
    let nodes = grid.nodes();
    let values = nodes
        .iter()
        .map(|p| Ok(d0.value(map.flow_backward(*p)?)))
        .collect::<Result<Vec<_>>>()?;
    let e = ScalarField { grid, values };
    let gradient_norm = e.gradient_norm();
    Ok(LevelSetField { e, gradient_norm, time: map.t1 })
}

/// `|∇e(x)| = |K^T ∇d₀(X⁻¹(x))|` with `K = D(X⁻¹)` from the variational
/// equation.
pub fn stretch_factor(d0: &dyn DistanceFunction, map: &FlowMap, x: Vec2) -> Result<f64> {
    let (y, k) = map.backward_with_jacobian(x)?;
    Ok((k.transpose() * d0.gradient(y)).norm())
}
