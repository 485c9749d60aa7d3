use std::sync::Arc;

use crate::error::{Error, Result};

/// Node layout on `[-r, 1]`.
///
/// The grid is uniform on `[-r, 0]` and on `[0, 1]` separately with (nearly)
/// equal spacing, so `t = 0` is always a node and the trivial extension of
/// the history is represented exactly. Within two cells of the proportional
/// split, the number of cells on `[0, 1]` is chosen with as many factors of
/// two as possible so that dyadic points such as `1/2` and `1/4` are nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    r: f64,
    nodes: Vec<f64>,
    zero: usize,
}

impl Grid {
    /// `n` nodes in total on `[-r, 1]`.
    pub fn new(r: f64, n: usize) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::InvalidInput(format!("delay r must be positive, got {r}")));
        }
        if n < 3 {
            return Err(Error::InvalidInput(format!("grid needs at least 3 nodes, got {n}")));
        }
        let cells = n - 1;
        let ideal = cells as f64 * r / (1.0 + r);
        let centre = ideal.round() as i64;
        let neg = (centre - 2..=centre + 2)
            .filter(|&k| k >= 1 && k < cells as i64)
            .map(|k| k as usize)
            .max_by(|&x, &y| {
                let tz = |k: usize| (cells - k).trailing_zeros();
                tz(x).cmp(&tz(y))
                    .then_with(|| (y as f64 - ideal).abs().total_cmp(&(x as f64 - ideal).abs()))
            })
            .unwrap_or(1);
        let pos = cells - neg;
        let mut nodes = Vec::with_capacity(n);
        for i in 0..neg {
            nodes.push(-r + i as f64 * (r / neg as f64));
        }
        for j in 0..pos {
            nodes.push(j as f64 / pos as f64);
        }
        nodes.push(1.0);
        Ok(Self { r, nodes, zero: neg })
    }

    /// Arbitrary strictly increasing nodes from `-r` to `1` containing `0`.
    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 3 {
            return Err(Error::InvalidInput("grid needs at least 3 nodes".into()));
        }
        if nodes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput("grid nodes must be strictly increasing".into()));
        }
        if *nodes.last().unwrap() != 1.0 || nodes[0] >= 0.0 {
            return Err(Error::InvalidInput("grid must run from -r < 0 to 1".into()));
        }
        let zero = nodes
            .iter()
            .position(|&x| x == 0.0)
            .ok_or_else(|| Error::InvalidInput("grid must contain t = 0".into()))?;
        Ok(Self {
            r: -nodes[0],
            nodes,
            zero,
        })
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Index of the node `t = 0`.
    pub fn zero_index(&self) -> usize {
        self.zero
    }

    /// Index `i` with `nodes[i] <= x < nodes[i+1]`, clamped to valid cells.
    pub fn cell(&self, x: f64) -> usize {
        let n = self.nodes.len();
        if x <= self.nodes[0] {
            return 0;
        }
        if x >= self.nodes[n - 1] {
            return n - 2;
        }
        self.nodes.partition_point(|&b| b <= x) - 1
    }
}

/// Samples of a continuous function on `[-r, 1]`, linearly interpolated.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidInput(format!(
                "{} values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn<F: Fn(f64) -> f64>(grid: Arc<Grid>, f: F) -> Self {
        let values = grid.nodes().iter().map(|&t| f(t)).collect();
        Self { grid, values }
    }

    pub fn zeros(grid: Arc<Grid>) -> Self {
        let values = vec![0.0; grid.len()];
        Self { grid, values }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn nodes(&self) -> &[f64] {
        self.grid.nodes()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn r(&self) -> f64 {
        self.grid.r()
    }

    pub fn eval(&self, x: f64) -> f64 {
        let i = self.grid.cell(x);
        let nodes = self.grid.nodes();
        let (x0, x1) = (nodes[i], nodes[i + 1]);
        let w = ((x - x0) / (x1 - x0)).clamp(0.0, 1.0);
        self.values[i] * (1.0 - w) + self.values[i + 1] * w
    }

    /// Max of `|u|` over the nodes lying in `[lo, hi]`.
    pub fn norm_on(&self, lo: f64, hi: f64) -> f64 {
        self.nodes()
            .iter()
            .zip(&self.values)
            .filter(|(t, _)| **t >= lo && **t <= hi)
            .fold(0.0, |m, (_, v)| m.max(v.abs()))
    }

    /// Max of `|u|` over all nodes.
    pub fn norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Min of `u` over `[lo, hi]`: nodes inside plus the interpolated
    /// endpoint values.
    pub fn min_on(&self, lo: f64, hi: f64) -> f64 {
        self.nodes()
            .iter()
            .zip(&self.values)
            .filter(|(t, _)| **t >= lo && **t <= hi)
            .map(|(_, v)| *v)
            .fold(self.eval(lo).min(self.eval(hi)), f64::min)
    }

    /// `self + scale * other` on the same grid.
    pub fn axpy(&self, scale: f64, other: &GridFunction) -> GridFunction {
        debug_assert_eq!(self.values.len(), other.values.len());
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + scale * b)
            .collect();
        GridFunction {
            grid: self.grid.clone(),
            values,
        }
    }

    /// Sup-norm distance at the nodes.
    pub fn distance(&self, other: &GridFunction) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}
