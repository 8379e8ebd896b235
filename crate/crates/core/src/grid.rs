//! Uniform grid partition over a training subset.
//!
//! Every cell of the grid becomes one rule. A cell's confidence is the share
//! of records that fall inside it (interval ends are closed, so a record on a
//! shared boundary counts for every adjacent cell). Each record is then given
//! the confidence of the last cell it falls into, in row-major order.

use std::fmt::Write as _;

use log::warn;

use crate::error::{Error, Result};
use crate::fuzzy::{Consequent, GaussianMf, Rule, SugenoFis, Variant};

/// Width-to-sigma factor that makes neighbouring Gaussians cross at 0.5.
fn half_power_sigma(width: f64) -> f64 {
    width / (2.0 * (2.0 * std::f64::consts::LN_2).sqrt())
}

/// Interval index per dimension.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GridCell(pub Vec<usize>);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellStats {
    pub count: usize,
    pub confidence: f64,
}

impl CellStats {
    /// Confidence rounded to whole percent, as shown in reports.
    pub fn display_percent(&self) -> i64 {
        self.confidence.round() as i64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridPartition {
    /// `boundaries[d]` holds `n_d + 1` edges; a degenerate dimension holds `[v, v]`.
    boundaries: Vec<Vec<f64>>,
}

impl GridPartition {
    /// Equal-width intervals between the observed min and max of each dimension.
    pub fn build<P: AsRef<[f64]>>(points: &[P], mf_counts: &[usize]) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Data("cannot build a grid from zero records".into()));
        }
        if let Some(d) = mf_counts.iter().position(|&n| n == 0) {
            return Err(Error::Config(format!("mf count for dimension {d} must be >= 1")));
        }
        let dims = mf_counts.len();
        let mut boundaries = Vec::with_capacity(dims);
        for (d, &n) in mf_counts.iter().enumerate() {
            let mut min = f64::INFINITY;
            let mut max = f64::NEG_INFINITY;
            for p in points {
                let p = p.as_ref();
                if p.len() != dims {
                    return Err(Error::Data(format!(
                        "record has {} components, grid expects {dims}",
                        p.len()
                    )));
                }
                if !p[d].is_finite() {
                    return Err(Error::Data(format!("non-finite value in dimension {d}")));
                }
                min = min.min(p[d]);
                max = max.max(p[d]);
            }
            if max == min {
                if n > 1 {
                    warn!("dimension {d} is constant ({min}); using a single membership function");
                }
                boundaries.push(vec![min, max]);
                continue;
            }
            let step = (max - min) / n as f64;
            let mut edges: Vec<f64> = (0..n).map(|k| min + k as f64 * step).collect();
            edges.push(max);
            boundaries.push(edges);
        }
        Ok(Self { boundaries })
    }

    pub fn dims(&self) -> usize {
        self.boundaries.len()
    }

    pub fn boundaries(&self) -> &[Vec<f64>] {
        &self.boundaries
    }

    /// Number of intervals (= membership functions) per dimension.
    pub fn interval_counts(&self) -> Vec<usize> {
        self.boundaries.iter().map(|b| b.len() - 1).collect()
    }

    pub fn cell_count(&self) -> usize {
        self.interval_counts().iter().product()
    }

    pub fn is_degenerate(&self, dim: usize) -> bool {
        let b = &self.boundaries[dim];
        b[0] == b[b.len() - 1]
    }

    /// Closed interval `[lo, hi]` of one cell in one dimension.
    pub fn bounds(&self, dim: usize, interval: usize) -> (f64, f64) {
        (self.boundaries[dim][interval], self.boundaries[dim][interval + 1])
    }

    /// All cells in row-major order, first dimension most significant.
    pub fn cells(&self) -> Vec<GridCell> {
        let counts = self.interval_counts();
        let mut cells = Vec::with_capacity(self.cell_count());
        let mut index = vec![0usize; counts.len()];
        loop {
            cells.push(GridCell(index.clone()));
            let mut d = counts.len();
            loop {
                if d == 0 {
                    return cells;
                }
                d -= 1;
                index[d] += 1;
                if index[d] < counts[d] {
                    break;
                }
                index[d] = 0;
            }
        }
    }

    /// Row-major linear index of a cell.
    pub fn linear_index(&self, cell: &GridCell) -> usize {
        cell.0
            .iter()
            .zip(self.interval_counts())
            .fold(0, |acc, (&i, n)| acc * n + i)
    }

    fn intervals_containing(&self, dim: usize, x: f64) -> Vec<usize> {
        let b = &self.boundaries[dim];
        (0..b.len() - 1)
            .filter(|&k| b[k] <= x && x <= b[k + 1])
            .collect()
    }

    /// Every cell whose closed constraints hold in all dimensions, row-major.
    /// Empty when the point lies outside the partition's range.
    pub fn cells_containing(&self, point: &[f64]) -> Vec<GridCell> {
        assert_eq!(point.len(), self.dims(), "point dimension mismatch");
        let per_dim: Vec<Vec<usize>> = (0..self.dims())
            .map(|d| self.intervals_containing(d, point[d]))
            .collect();
        if per_dim.iter().any(Vec::is_empty) {
            return Vec::new();
        }
        let mut cells = vec![Vec::with_capacity(self.dims())];
        for options in &per_dim {
            cells = cells
                .into_iter()
                .flat_map(|prefix| {
                    options.iter().map(move |&k| {
                        let mut c = prefix.clone();
                        c.push(k);
                        c
                    })
                })
                .collect();
        }
        cells.into_iter().map(GridCell).collect()
    }
}

/// Count and confidence for every cell, stored in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct GridStats {
    cells: Vec<(GridCell, CellStats)>,
    denominator: usize,
}

impl GridStats {
    pub fn cells(&self) -> &[(GridCell, CellStats)] {
        &self.cells
    }

    pub fn denominator(&self) -> usize {
        self.denominator
    }

    pub fn get(&self, partition: &GridPartition, cell: &GridCell) -> CellStats {
        self.cells[partition.linear_index(cell)].1
    }

    pub fn counts(&self) -> Vec<usize> {
        self.cells.iter().map(|(_, s)| s.count).collect()
    }

    pub fn confidences(&self) -> Vec<f64> {
        self.cells.iter().map(|(_, s)| s.confidence).collect()
    }
}

/// Counts supporting records per cell. `denominator` is the record total that
/// confidences are relative to (the label subset size, or the whole dataset).
pub fn count_per_cell<P: AsRef<[f64]>>(
    partition: &GridPartition,
    points: &[P],
    denominator: usize,
) -> Result<GridStats> {
    if denominator == 0 || denominator < points.len() {
        return Err(Error::Usage(format!(
            "confidence denominator {denominator} smaller than {} records",
            points.len()
        )));
    }
    let mut counts = vec![0usize; partition.cell_count()];
    for p in points {
        for cell in partition.cells_containing(p.as_ref()) {
            counts[partition.linear_index(&cell)] += 1;
        }
    }
    let cells = partition
        .cells()
        .into_iter()
        .zip(counts)
        .map(|(cell, count)| {
            let confidence = count as f64 / denominator as f64 * 100.0;
            (cell, CellStats { count, confidence })
        })
        .collect();
    Ok(GridStats { cells, denominator })
}

/// Confidence of the last (row-major) cell the point falls into.
pub fn assign_target_confidence(partition: &GridPartition, stats: &GridStats, point: &[f64]) -> Result<f64> {
    let cells = partition.cells_containing(point);
    let last = cells
        .last()
        .ok_or_else(|| Error::Data(format!("record {point:?} lies outside the grid")))?;
    Ok(stats.get(partition, last).confidence)
}

pub fn assign_targets<P: AsRef<[f64]>>(
    partition: &GridPartition,
    stats: &GridStats,
    points: &[P],
) -> Result<Vec<f64>> {
    points
        .iter()
        .map(|p| assign_target_confidence(partition, stats, p.as_ref()))
        .collect()
}

/// One rule per cell. Fis consequents are the cell confidences, anfis
/// consequents start as all-zero linear functions.
pub fn generate_fis(
    partition: &GridPartition,
    stats: &GridStats,
    variant: Variant,
    dimension_names: &[&str],
) -> Result<SugenoFis> {
    if dimension_names.len() != partition.dims() {
        return Err(Error::ModelStructure(format!(
            "{} dimension names for a {}-dimensional grid",
            dimension_names.len(),
            partition.dims()
        )));
    }
    let mf_banks = (0..partition.dims())
        .map(|d| {
            if partition.is_degenerate(d) {
                return Ok(vec![GaussianMf::new(partition.boundaries[d][0], 1.0)?]);
            }
            partition.boundaries[d]
                .windows(2)
                .map(|w| GaussianMf::new(0.5 * (w[0] + w[1]), half_power_sigma(w[1] - w[0])))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let rules = stats
        .cells
        .iter()
        .map(|(cell, s)| Rule {
            antecedent: cell.0.clone(),
            consequent: match variant {
                Variant::Fis => Consequent::Constant(s.confidence),
                Variant::Anfis => Consequent::zero_linear(partition.dims()),
            },
        })
        .collect();
    SugenoFis::new(
        dimension_names.iter().map(|s| s.to_string()).collect(),
        mf_banks,
        rules,
        variant,
    )
}

/// Text table of the grid: interval indices, bounds, count and confidence per cell.
pub fn render_grid(partition: &GridPartition, stats: &GridStats, dimension_names: &[&str]) -> String {
    let mut out = String::new();
    let mut header: Vec<String> = dimension_names.iter().map(|n| format!("{n}_idx")).collect();
    for n in dimension_names {
        header.push(format!("{n}_lo"));
        header.push(format!("{n}_hi"));
    }
    header.push("count".into());
    header.push("confidence".into());
    let _ = writeln!(out, "{}", header.join("\t"));
    for (cell, s) in &stats.cells {
        let mut row: Vec<String> = cell.0.iter().map(|i| i.to_string()).collect();
        for (d, &k) in cell.0.iter().enumerate() {
            let (lo, hi) = partition.bounds(d, k);
            row.push(format!("{lo}"));
            row.push(format!("{hi}"));
        }
        row.push(s.count.to_string());
        row.push(format!("{:.6}", s.confidence));
        let _ = writeln!(out, "{}", row.join("\t"));
    }
    out
}
