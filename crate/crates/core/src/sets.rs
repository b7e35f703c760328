//! Compact plane sets sampled on square grids.
//!
//! A [`GridSet`] is the finite point cloud of its marked cell centers, so the
//! Hausdorff distance between two of them is exact. The continuum error is
//! the grid spacing `h`; comparisons against limits carry `h * sqrt(2)`.

use std::io::{self, BufRead, Read, Write};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SetError {
    #[error("resolution must be at least 2, got {0}")]
    Resolution(usize),
    #[error("half width must be positive and finite, got {0}")]
    HalfWidth(f64),
    #[error("radius {radius} must lie in (0, {half_width}]")]
    Radius { radius: f64, half_width: f64 },
    #[error("affine factor must be nonzero")]
    ZeroFactor,
    #[error("sets live on different frames")]
    FrameMismatch,
    #[error("set is empty")]
    Empty,
    #[error("mask has {got} cells, frame expects {expected}")]
    MaskSize { got: usize, expected: usize },
    #[error("malformed PGM: {0}")]
    Pgm(String),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Square window of `N x N` cell centers; row 0 is the top edge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub center: Complex64,
    pub half_width: f64,
    pub resolution: usize,
}

impl Frame {
    pub fn new(center: Complex64, half_width: f64, resolution: usize) -> Result<Self, SetError> {
        if resolution < 2 {
            return Err(SetError::Resolution(resolution));
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(SetError::HalfWidth(half_width));
        }
        Ok(Self {
            center,
            half_width,
            resolution,
        })
    }

    /// Frame centered at the origin.
    pub fn centered(half_width: f64, resolution: usize) -> Result<Self, SetError> {
        Self::new(Complex64::new(0.0, 0.0), half_width, resolution)
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.resolution as f64
    }

    /// Tolerance for claims about the continuum set behind a sampling.
    pub fn grid_tolerance(&self) -> f64 {
        self.spacing() * std::f64::consts::SQRT_2
    }

    pub fn cells(&self) -> usize {
        self.resolution * self.resolution
    }

    pub fn point(&self, row: usize, col: usize) -> Complex64 {
        let h = self.spacing();
        Complex64::new(
            self.center.re - self.half_width + (col as f64 + 0.5) * h,
            self.center.im + self.half_width - (row as f64 + 0.5) * h,
        )
    }

    pub fn point_at(&self, index: usize) -> Complex64 {
        self.point(index / self.resolution, index % self.resolution)
    }

    /// Cell containing `z`, if inside the window.
    pub fn locate(&self, z: Complex64) -> Option<(usize, usize)> {
        let h = self.spacing();
        let x = (z.re - (self.center.re - self.half_width)) / h;
        let y = ((self.center.im + self.half_width) - z.im) / h;
        let n = self.resolution as f64;
        if !(x >= 0.0 && x < n && y >= 0.0 && y < n) {
            return None;
        }
        Some((y as usize, x as usize))
    }

    /// Evaluates `f` at every cell center, rows in parallel, row-major output.
    pub fn map_cells<T, F>(&self, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(Complex64) -> T + Sync,
    {
        (0..self.cells())
            .into_par_iter()
            .map(|i| f(self.point_at(i)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSet {
    frame: Frame,
    mask: Vec<bool>,
}

impl GridSet {
    pub fn from_mask(frame: Frame, mask: Vec<bool>) -> Result<Self, SetError> {
        if mask.len() != frame.cells() {
            return Err(SetError::MaskSize {
                got: mask.len(),
                expected: frame.cells(),
            });
        }
        Ok(Self { frame, mask })
    }

    pub fn from_fn<F>(frame: Frame, f: F) -> Self
    where
        F: Fn(Complex64) -> bool + Sync,
    {
        Self {
            mask: frame.map_cells(f),
            frame,
        }
    }

    pub fn empty(frame: Frame) -> Self {
        Self {
            mask: vec![false; frame.cells()],
            frame,
        }
    }

    /// Marks the cells containing the given points; points outside the frame are dropped.
    pub fn from_points(frame: Frame, points: &[Complex64]) -> Self {
        let mut set = Self::empty(frame);
        for &z in points {
            if let Some((row, col)) = frame.locate(z) {
                set.mask[row * frame.resolution + col] = true;
            }
        }
        set
    }

    pub fn frame(&self) -> &Frame {
        &self.frame
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.mask[row * self.frame.resolution + col]
    }

    pub fn count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.mask.contains(&true)
    }

    pub fn points(&self) -> impl Iterator<Item = Complex64> + '_ {
        self.mask
            .iter()
            .enumerate()
            .filter(|(_, &m)| m)
            .map(|(i, _)| self.frame.point_at(i))
    }

    /// `[K]_r = (K ∩ D(r)) ∪ ∂D(r)`; the circle is the band of cells whose
    /// centers lie within `h/2` of `|z| = r`.
    pub fn truncate(&self, r: f64) -> Result<GridSet, SetError> {
        if !(r > 0.0 && r <= self.frame.half_width) {
            return Err(SetError::Radius {
                radius: r,
                half_width: self.frame.half_width,
            });
        }
        let half = self.frame.spacing() / 2.0;
        let mask = self
            .mask
            .par_iter()
            .enumerate()
            .map(|(i, &m)| {
                let modulus = self.frame.point_at(i).norm();
                (m && modulus <= r) || (modulus - r).abs() <= half
            })
            .collect();
        Ok(GridSet {
            frame: self.frame,
            mask,
        })
    }

    /// Samples `{a (z - b) : z in K}` on `target`: a target cell is marked when
    /// its preimage `y / a + b` falls in a marked source cell. Returns the
    /// number of target cells whose preimage left the source frame.
    pub fn affine_rescale(
        &self,
        a: Complex64,
        b: Complex64,
        target: Frame,
    ) -> Result<(GridSet, usize), SetError> {
        if a.norm() == 0.0 {
            return Err(SetError::ZeroFactor);
        }
        let sampled: Vec<Option<bool>> = target.map_cells(|y| {
            self.frame
                .locate(y / a + b)
                .map(|(row, col)| self.get(row, col))
        });
        let outside = sampled.iter().filter(|s| s.is_none()).count();
        if outside * 100 > target.cells() {
            log::warn!(
                "affine rescale: {outside} of {} target cells fall outside the source frame",
                target.cells()
            );
        }
        let mask = sampled.into_iter().map(|s| s.unwrap_or(false)).collect();
        Ok((
            GridSet {
                frame: target,
                mask,
            },
            outside,
        ))
    }

    pub fn write_pgm<W: Write>(&self, mut out: W) -> Result<(), SetError> {
        let n = self.frame.resolution;
        write!(out, "P5\n{n} {n}\n255\n")?;
        let bytes: Vec<u8> = self.mask.iter().map(|&m| if m { 0 } else { 255 }).collect();
        out.write_all(&bytes)?;
        Ok(())
    }

    /// Reads a binary PGM written by [`GridSet::write_pgm`]; pixels below 128 are marked.
    pub fn read_pgm<R: BufRead>(frame: Frame, mut input: R) -> Result<GridSet, SetError> {
        let mut fields = Vec::new();
        let mut line = String::new();
        while fields.len() < 4 {
            line.clear();
            if input.read_line(&mut line)? == 0 {
                return Err(SetError::Pgm("truncated header".into()));
            }
            let content = line.split('#').next().unwrap_or("");
            fields.extend(content.split_whitespace().map(str::to_owned));
        }
        if fields[0] != "P5" {
            return Err(SetError::Pgm(format!("magic {}", fields[0])));
        }
        let parse = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| SetError::Pgm(format!("bad number {s}")))
        };
        let (width, height, max) = (parse(&fields[1])?, parse(&fields[2])?, parse(&fields[3])?);
        if width != frame.resolution || height != frame.resolution {
            return Err(SetError::MaskSize {
                got: width * height,
                expected: frame.cells(),
            });
        }
        if max != 255 {
            return Err(SetError::Pgm(format!("maxval {max}")));
        }
        let mut bytes = vec![0u8; frame.cells()];
        input.read_exact(&mut bytes)?;
        GridSet::from_mask(frame, bytes.into_iter().map(|b| b < 128).collect())
    }

    /// One `re,im` record per marked cell, row-major.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), SetError> {
        let mut writer = csv::Writer::from_writer(out);
        writer.write_record(["re", "im"])?;
        for z in self.points() {
            writer.write_record([format!("{:.17e}", z.re), format!("{:.17e}", z.im)])?;
        }
        writer.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(frame: Frame, input: R) -> Result<GridSet, SetError> {
        let mut reader = csv::Reader::from_reader(input);
        let mut points = Vec::new();
        for record in reader.deserialize() {
            let (re, im): (f64, f64) = record?;
            points.push(Complex64::new(re, im));
        }
        Ok(GridSet::from_points(frame, &points))
    }
}

/// Squared Euclidean distance, in cell units, from every cell to the nearest marked cell.
///
/// Separable exact transform: a lower envelope of parabolas along columns,
/// then along rows. Each line is independent, so the parallel result equals
/// the serial one bit for bit.
pub fn squared_distance_transform(set: &GridSet) -> Vec<f64> {
    let n = set.frame.resolution;
    let seeds: Vec<f64> = set
        .mask
        .iter()
        .map(|&m| if m { 0.0 } else { f64::INFINITY })
        .collect();
    let mut columns = transpose(&seeds, n);
    columns.par_chunks_mut(n).for_each(envelope_1d);
    let mut rows = transpose(&columns, n);
    rows.par_chunks_mut(n).for_each(envelope_1d);
    rows
}

fn transpose(data: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; data.len()];
    out.par_chunks_mut(n).enumerate().for_each(|(col, line)| {
        for (row, slot) in line.iter_mut().enumerate() {
            *slot = data[row * n + col];
        }
    });
    out
}

/// In-place 1D transform `d[q] = min_p f[p] + (q - p)^2` over finite `f[p]`.
fn envelope_1d(line: &mut [f64]) {
    let f: Vec<f64> = line.to_vec();
    let sites: Vec<usize> = (0..f.len()).filter(|&p| f[p].is_finite()).collect();
    if sites.is_empty() {
        return;
    }
    let crossing = |p: usize, q: usize| {
        let (p, q) = (p as f64, q as f64);
        ((f[q as usize] + q * q) - (f[p as usize] + p * p)) / (2.0 * (q - p))
    };
    let mut hull: Vec<usize> = Vec::with_capacity(sites.len());
    let mut bounds: Vec<f64> = Vec::with_capacity(sites.len());
    for &q in &sites {
        while let Some(&top) = hull.last() {
            let s = crossing(top, q);
            if s <= *bounds.last().unwrap_or(&f64::NEG_INFINITY) {
                hull.pop();
                bounds.pop();
            } else {
                break;
            }
        }
        let start = hull
            .last()
            .map_or(f64::NEG_INFINITY, |&top| crossing(top, q));
        hull.push(q);
        bounds.push(start);
    }
    let mut k = 0;
    for (x, slot) in line.iter_mut().enumerate() {
        while k + 1 < hull.len() && bounds[k + 1] < x as f64 {
            k += 1;
        }
        let p = hull[k];
        let dx = x as f64 - p as f64;
        *slot = f[p] + dx * dx;
    }
}

fn one_sided(from: &GridSet, to_distances: &[f64]) -> f64 {
    from.mask
        .iter()
        .zip(to_distances)
        .filter(|(&m, _)| m)
        .map(|(_, &d2)| d2)
        .fold(0.0, f64::max)
}

/// Hausdorff distance between the marked cell centers of two sets on one frame.
pub fn hausdorff_distance(a: &GridSet, b: &GridSet) -> Result<f64, SetError> {
    if a.frame != b.frame {
        return Err(SetError::FrameMismatch);
    }
    if a.is_empty() || b.is_empty() {
        return Err(SetError::Empty);
    }
    let (to_a, to_b) = rayon::join(
        || squared_distance_transform(a),
        || squared_distance_transform(b),
    );
    let cells = one_sided(a, &to_b).max(one_sided(b, &to_a));
    Ok(cells.sqrt() * a.frame.spacing())
}
