//! A metric, a unit field and the grid they are sampled on.

use std::sync::Arc;

use crate::chart::{ChartBox, Grid};
use crate::error::Result;
use crate::geometry::{sample_jets, FrenetOptions, GeometryField, MetricSource, PointJets, VectorSource};

#[derive(Clone)]
pub struct Problem {
    pub metric: Arc<dyn MetricSource>,
    pub field: Arc<dyn VectorSource>,
    pub grid: Grid,
    /// Sub-box used for residual norms.
    pub interior: ChartBox,
    pub frenet: FrenetOptions,
}

impl std::fmt::Debug for Problem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Problem")
            .field("grid", &self.grid)
            .field("interior", &self.interior)
            .finish()
    }
}

impl Problem {
    pub fn new(metric: Arc<dyn MetricSource>, field: Arc<dyn VectorSource>, grid: Grid) -> Self {
        let interior = grid.chart.clone();
        Problem {
            metric,
            field,
            grid,
            interior,
            frenet: FrenetOptions::default(),
        }
    }

    pub fn with_interior(mut self, interior: ChartBox) -> Self {
        self.interior = interior;
        self
    }

    pub fn with_grid(&self, grid: Grid) -> Self {
        Problem {
            grid,
            ..self.clone()
        }
    }

    pub fn orientation(&self) -> f64 {
        self.grid.chart.orientation
    }

    pub fn geometry(&self) -> Result<GeometryField> {
        GeometryField::compute(&self.grid, self.metric.as_ref(), self.field.as_ref(), &self.frenet)
    }

    pub fn jets(&self) -> Result<Vec<PointJets>> {
        sample_jets(&self.grid, self.metric.as_ref(), self.field.as_ref())
    }

    pub fn interior_mask(&self) -> Vec<bool> {
        self.grid.mask_in(&self.interior)
    }
}
