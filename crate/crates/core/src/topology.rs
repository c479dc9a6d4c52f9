//! Input and column geometry.
//!
//! Inputs and mini-columns both live on 2-D grids. Each column maps to a
//! center on the input grid and sees an axis-aligned box (Chebyshev ball) of
//! edge `hypercube_edge` around it, clipped at the grid border. Columns
//! compete with the columns whose grid position lies strictly within the
//! inhibition radius (Euclidean).

use crate::error::{check_index, HtmError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    input_width: usize,
    input_height: usize,
    column_width: usize,
    column_height: usize,
    hypercube_edge: f64,
    potential_fraction: f64,
    inhibition_radius: f64,
}

impl Topology {
    /// Builds a topology and derives the inhibition radius.
    ///
    /// When the input and column grids match, the radius equals the
    /// hypercube edge. Otherwise the edge is rescaled into column-grid units.
    pub fn new(
        input: (usize, usize),
        columns: (usize, usize),
        hypercube_edge: f64,
        potential_fraction: f64,
    ) -> Result<Self> {
        let (input_width, input_height) = input;
        let (column_width, column_height) = columns;
        if input_width == 0 || input_height == 0 {
            return Err(invalid("input grid", "must be non-empty"));
        }
        if column_width == 0 || column_height == 0 {
            return Err(invalid("column grid", "must be non-empty"));
        }
        if !(hypercube_edge >= 1.0) || !hypercube_edge.is_finite() {
            return Err(invalid("hypercube_edge", "must be finite and >= 1"));
        }
        if !(potential_fraction > 0.0 && potential_fraction <= 1.0) {
            return Err(invalid("potential_fraction", "must lie in (0, 1]"));
        }
        let scale = (column_width as f64 / input_width as f64)
            .max(column_height as f64 / input_height as f64);
        Ok(Self {
            input_width,
            input_height,
            column_width,
            column_height,
            hypercube_edge,
            potential_fraction,
            inhibition_radius: hypercube_edge * scale,
        })
    }

    /// Overrides the derived inhibition radius.
    ///
    /// Rejected when the grids match and `radius != hypercube_edge`.
    pub fn with_inhibition_radius(mut self, radius: f64) -> Result<Self> {
        if !(radius >= 0.0) {
            return Err(invalid("inhibition_radius", "must be >= 0"));
        }
        if self.same_grids() && radius != self.hypercube_edge {
            return Err(invalid(
                "inhibition_radius",
                "must equal hypercube_edge when input and column grids match",
            ));
        }
        self.inhibition_radius = radius;
        Ok(self)
    }

    pub fn same_grids(&self) -> bool {
        self.input_width == self.column_width && self.input_height == self.column_height
    }

    pub fn input_dims(&self) -> (usize, usize) {
        (self.input_width, self.input_height)
    }

    pub fn column_dims(&self) -> (usize, usize) {
        (self.column_width, self.column_height)
    }

    pub fn input_count(&self) -> usize {
        self.input_width * self.input_height
    }

    pub fn column_count(&self) -> usize {
        self.column_width * self.column_height
    }

    pub fn hypercube_edge(&self) -> f64 {
        self.hypercube_edge
    }

    pub fn potential_fraction(&self) -> f64 {
        self.potential_fraction
    }

    pub fn inhibition_radius(&self) -> f64 {
        self.inhibition_radius
    }

    /// Grid coordinates of column `i` (row-major).
    pub fn column_position(&self, i: usize) -> (f64, f64) {
        (
            (i % self.column_width) as f64,
            (i / self.column_width) as f64,
        )
    }

    /// Input-grid cell at the center of column `i`'s hypercube.
    pub fn hypercube_center(&self, i: usize) -> (usize, usize) {
        let cx = i % self.column_width;
        let cy = i / self.column_width;
        let x = ((cx as f64 + 0.5) * self.input_width as f64 / self.column_width as f64) as usize;
        let y = ((cy as f64 + 0.5) * self.input_height as f64 / self.column_height as f64) as usize;
        (x.min(self.input_width - 1), y.min(self.input_height - 1))
    }

    pub fn in_hypercube(&self, j: usize, i: usize) -> Result<bool> {
        check_index("input", j, self.input_count())?;
        check_index("column", i, self.column_count())?;
        Ok(self.contains(j, i))
    }

    fn contains(&self, j: usize, i: usize) -> bool {
        let (cx, cy) = self.hypercube_center(i);
        let (x, y) = (j % self.input_width, j / self.input_width);
        let half = self.hypercube_edge / 2.0;
        (x as f64 - cx as f64).abs() <= half && (y as f64 - cy as f64).abs() <= half
    }

    /// All inputs inside column `i`'s clipped hypercube, ascending.
    pub fn hypercube(&self, i: usize) -> Vec<usize> {
        let (cx, cy) = self.hypercube_center(i);
        let reach = (self.hypercube_edge / 2.0).floor() as usize;
        let x0 = cx.saturating_sub(reach);
        let x1 = (cx + reach).min(self.input_width - 1);
        let y0 = cy.saturating_sub(reach);
        let y1 = (cy + reach).min(self.input_height - 1);
        let mut out = Vec::with_capacity((x1 - x0 + 1) * (y1 - y0 + 1));
        for y in y0..=y1 {
            for x in x0..=x1 {
                out.push(y * self.input_width + x);
            }
        }
        out
    }

    /// Columns strictly within the inhibition radius of `i`, excluding `i`.
    pub fn neighborhood(&self, i: usize) -> Vec<usize> {
        let (xi, yi) = self.column_position(i);
        (0..self.column_count())
            .filter(|&j| {
                if j == i {
                    return false;
                }
                let (xj, yj) = self.column_position(j);
                ((xi - xj).powi(2) + (yi - yj).powi(2)).sqrt() < self.inhibition_radius
            })
            .collect()
    }

    pub fn neighborhoods(&self) -> Neighborhoods {
        Neighborhoods {
            lists: (0..self.column_count())
                .map(|i| self.neighborhood(i))
                .collect(),
        }
    }
}

fn invalid(key: &str, reason: &str) -> HtmError {
    HtmError::InvalidConfig {
        key: key.to_string(),
        reason: reason.to_string(),
    }
}

/// Per-column competitor lists `N(i)` (never containing `i` itself).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Neighborhoods {
    lists: Vec<Vec<usize>>,
}

impl Neighborhoods {
    /// Every column competes with every other column.
    pub fn global(n: usize) -> Self {
        Self {
            lists: (0..n)
                .map(|i| (0..n).filter(|&j| j != i).collect())
                .collect(),
        }
    }

    /// Builds from explicit lists; self-references and out-of-range entries
    /// are rejected, lists are sorted and deduplicated. Neighborhoods must
    /// be symmetric.
    pub fn from_lists(mut lists: Vec<Vec<usize>>) -> Result<Self> {
        let n = lists.len();
        for (i, list) in lists.iter_mut().enumerate() {
            list.sort_unstable();
            list.dedup();
            for &j in list.iter() {
                check_index("neighbor", j, n)?;
                if j == i {
                    return Err(invalid("neighborhood", "a column cannot neighbor itself"));
                }
            }
        }
        for (i, list) in lists.iter().enumerate() {
            for &j in list {
                if lists[j].binary_search(&i).is_err() {
                    return Err(invalid("neighborhood", "neighborhoods must be symmetric"));
                }
            }
        }
        Ok(Self { lists })
    }

    pub fn len(&self) -> usize {
        self.lists.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lists.is_empty()
    }

    pub fn of(&self, i: usize) -> &[usize] {
        &self.lists[i]
    }

    /// `N(i) ∪ {i}`, ascending.
    pub fn pool(&self, i: usize) -> Vec<usize> {
        let mut p = self.lists[i].clone();
        let at = p.partition_point(|&j| j < i);
        p.insert(at, i);
        p
    }
}
