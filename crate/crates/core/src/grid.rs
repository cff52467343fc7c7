//! Uniform 1D grids, node-indexed scalar fields, and half-open node ranges.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GridError {
    #[error("grid needs at least 3 nodes, got {0}")]
    TooFewNodes(usize),
    #[error("domain length must be positive and finite, got {0}")]
    BadLength(f64),
    #[error("field has {found} values but the grid has {expected} nodes")]
    LengthMismatch { expected: usize, found: usize },
    #[error("non-finite value {value} at node {node}")]
    NonFinite { node: usize, value: f64 },
    #[error("empty node range [{start}, {end})")]
    EmptyRange { start: usize, end: usize },
    #[error("node range [{start}, {end}) leaves the grid ({n_nodes} nodes)")]
    RangeOutOfBounds { start: usize, end: usize, n_nodes: usize },
}

/// Uniform grid on `[0, length]` with `n_nodes` nodes and spacing `h = length / (n_nodes - 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    nodes: Vec<f64>,
    h: f64,
    length: f64,
}

impl Grid {
    pub fn uniform(n_nodes: usize, length: f64) -> Result<Self, GridError> {
        if n_nodes < 3 {
            return Err(GridError::TooFewNodes(n_nodes));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(GridError::BadLength(length));
        }
        let h = length / (n_nodes - 1) as f64;
        let mut nodes: Vec<f64> = (0..n_nodes).map(|i| i as f64 * h).collect();
        // Pin the right endpoint so the domain length is represented exactly.
        nodes[n_nodes - 1] = length;
        Ok(Self { nodes, h, length })
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn coord(&self, i: usize) -> f64 {
        self.nodes[i]
    }

    /// Index of the node nearest to coordinate `x`, clamped to the grid.
    pub fn nearest_node(&self, x: f64) -> usize {
        let i = (x / self.h).round();
        (i.max(0.0) as usize).min(self.n_nodes() - 1)
    }

    /// Trapezoid quadrature weight of node `i` (1/2 at the endpoints).
    pub fn trap_weight(&self, i: usize) -> f64 {
        if i == 0 || i == self.n_nodes() - 1 {
            0.5
        } else {
            1.0
        }
    }
}

/// Scalar field sampled at grid nodes. Values are finite by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: &Grid, values: Vec<f64>) -> Result<Self, GridError> {
        if values.len() != grid.n_nodes() {
            return Err(GridError::LengthMismatch {
                expected: grid.n_nodes(),
                found: values.len(),
            });
        }
        for (node, &value) in values.iter().enumerate() {
            if !value.is_finite() {
                return Err(GridError::NonFinite { node, value });
            }
        }
        Ok(Self { values })
    }

    pub fn from_fn(grid: &Grid, f: impl Fn(f64) -> f64) -> Result<Self, GridError> {
        Self::new(grid, grid.nodes().iter().map(|&x| f(x)).collect())
    }

    pub fn constant(grid: &Grid, value: f64) -> Result<Self, GridError> {
        Self::new(grid, vec![value; grid.n_nodes()])
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, i: usize) -> f64 {
        self.values[i]
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Trapezoid-rule L2 norm over the grid.
    pub fn l2_norm(&self, grid: &Grid) -> f64 {
        let mut acc = 0.0;
        for (i, &v) in self.values.iter().enumerate() {
            acc += grid.trap_weight(i) * v * v;
        }
        (acc * grid.h()).sqrt()
    }
}

/// Half-open range of node indices `[start, end)`, the grid-level encoding of a subinterval.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IndexRange {
    pub start: usize,
    pub end: usize,
}

impl IndexRange {
    pub fn new(start: usize, end: usize) -> Self {
        Self { start, end }
    }

    /// Snap a coordinate interval `(a, b)` to the nearest grid nodes.
    pub fn from_coords(grid: &Grid, a: f64, b: f64) -> Result<Self, GridError> {
        let start = grid.nearest_node(a);
        let end = grid.nearest_node(b) + 1;
        let r = Self { start, end };
        r.check(grid)?;
        Ok(r)
    }

    pub fn check(&self, grid: &Grid) -> Result<(), GridError> {
        if self.start >= self.end {
            return Err(GridError::EmptyRange {
                start: self.start,
                end: self.end,
            });
        }
        if self.end > grid.n_nodes() {
            return Err(GridError::RangeOutOfBounds {
                start: self.start,
                end: self.end,
                n_nodes: grid.n_nodes(),
            });
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.start >= self.end
    }

    pub fn contains(&self, i: usize) -> bool {
        i >= self.start && i < self.end
    }

    pub fn nodes(&self) -> impl Iterator<Item = usize> {
        self.start..self.end
    }

    pub fn is_subset_of(&self, outer: &IndexRange) -> bool {
        self.start >= outer.start && self.end <= outer.end
    }

    /// First node coordinate.
    pub fn left_coord(&self, grid: &Grid) -> f64 {
        grid.coord(self.start)
    }

    /// Last node coordinate.
    pub fn right_coord(&self, grid: &Grid) -> f64 {
        grid.coord(self.end - 1)
    }

    pub fn touches_left_boundary(&self) -> bool {
        self.start == 0
    }

    pub fn touches_right_boundary(&self, grid: &Grid) -> bool {
        self.end == grid.n_nodes()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_node_grid_has_expected_nodes() {
        let g = Grid::uniform(3, 1.0).unwrap();
        assert_eq!(g.nodes(), &[0.0, 0.5, 1.0]);
        assert_eq!(g.h(), 0.5);
    }

    #[test]
    fn hundred_interval_grid_spacing() {
        let g = Grid::uniform(101, 1.0).unwrap();
        assert_eq!(g.h(), 0.01);
        assert_eq!(g.coord(100), 1.0);
        assert!(g.nodes().windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn too_few_nodes_is_rejected() {
        assert_eq!(Grid::uniform(2, 1.0).unwrap_err(), GridError::TooFewNodes(2));
        assert!(matches!(
            Grid::uniform(5, 0.0).unwrap_err(),
            GridError::BadLength(_)
        ));
    }

    #[test]
    fn field_validates_length_and_finiteness() {
        let g = Grid::uniform(5, 1.0).unwrap();
        assert!(ScalarField::new(&g, vec![0.0; 4]).is_err());
        let e = ScalarField::new(&g, vec![0.0, f64::NAN, 0.0, 0.0, 0.0]).unwrap_err();
        assert!(matches!(e, GridError::NonFinite { node: 1, .. }));
    }

    #[test]
    fn range_snapping_rounds_to_nearest_node() {
        let g = Grid::uniform(101, 1.0).unwrap();
        let r = IndexRange::from_coords(&g, 0.6, 1.0).unwrap();
        assert_eq!((r.start, r.end), (60, 101));
        let o1 = IndexRange::from_coords(&g, 0.80, 0.84).unwrap();
        assert_eq!((o1.start, o1.end), (80, 85));
        assert!(o1.is_subset_of(&r));
    }

    #[test]
    fn trapezoid_l2_of_constant_is_sqrt_length() {
        let g = Grid::uniform(11, 2.0).unwrap();
        let f = ScalarField::constant(&g, 3.0).unwrap();
        let expected = 3.0 * 2.0_f64.sqrt();
        assert!((f.l2_norm(&g) - expected).abs() < 1e-12);
    }
}
