//! Rescaling limits at Misiurewicz parameters and the comparison of the
//! rescaled Julia and Mandelbrot sets with the model set `phi^{-1}(J)`.
//!
//! With `n_k = l + k p` and `rho_k = 1 / (A0 lambda0^k)`,
//! `phi_k(w) = f^{n_k}(c0 + rho_k w)` converges to the linearizer at the
//! landing point. Around `c0` the Mandelbrot set looks like `J` after the
//! extra affine factor `Q`, where `1/Q = sum_{n>=0} 1/(f^n)'(c0)`.

use std::io::Write;
use std::ops::RangeInclusive;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::conical;
use crate::dynamics::{self, DynError, Membership, ReferenceOrbit, TrackedPoint, UnicriticalMap};
use crate::orbits::{misiurewicz_data, MisiurewiczData, OrbitError};
use crate::sets::{hausdorff_distance, Frame, GridSet, SetError};

pub const DEFAULT_CAP: usize = 4096;
pub const DEFAULT_TAIL_TOL: f64 = 1e-15;
pub const LAMBDA_HORIZON: usize = 10_000;
/// Window over which the term ratio of the series is measured.
pub const GROWTH_WINDOW: usize = 32;
/// `sup |phi_k - phi_{k+1}|` below which a depth counts as certified.
pub const STABILITY_TOL: f64 = 1e-8;
pub const MAX_MODEL_DEPTH: usize = 48;
/// Resolution of the coarse grid used for depth certification.
pub const STABILITY_RESOLUTION: usize = 64;
pub const DEFAULT_HORIZON: usize = 10_000;
pub const DEFAULT_SEPARATION: f64 = 1e-4;

#[derive(Debug, Error)]
pub enum SimilarityError {
    #[error(transparent)]
    Dynamics(#[from] DynError),
    #[error(transparent)]
    Orbit(#[from] OrbitError),
    #[error(transparent)]
    Sets(#[from] SetError),
    #[error("critical orbit escapes at iteration {iteration}")]
    Escaped { iteration: usize },
    #[error("derivatives along the critical orbit do not grow geometrically within {horizon} terms (ratio {ratio})")]
    NonGeometric { horizon: usize, ratio: f64 },
    #[error("rescaled map at depth {depth} overflows at w = {w}")]
    LimitOverflow { depth: usize, w: Complex64 },
    #[error("no depth up to {max_depth} is stable (last sup difference {stability:e})")]
    DepthNotCertified { max_depth: usize, stability: f64 },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("critical orbit returns within {distance:e} of c0")]
    NotSemiHyperbolic { distance: f64 },
    #[error("no derivative growth observed within {horizon} iterations")]
    GrowthNotObserved { horizon: usize },
}

/// `sum_{n>=0} 1/(f^n)'(c0)`, summed until the geometric tail bound
/// `|t_n| q / (1 - q)` drops below `tail_tol`, with `q` the largest term ratio
/// over the last [`GROWTH_WINDOW`] terms.
pub fn lambda_series(
    degree: u32,
    c0: Complex64,
    tail_tol: f64,
) -> Result<Complex64, SimilarityError> {
    let map = UnicriticalMap::new(degree, c0)?;
    let radius = map.escape_radius();
    let mut z = c0;
    let mut derivative = Complex64::new(1.0, 0.0);
    let mut sum = Complex64::new(0.0, 0.0);
    let mut sizes: Vec<f64> = Vec::new();
    let mut ratio = f64::INFINITY;
    for n in 0..LAMBDA_HORIZON {
        if derivative.norm() == 0.0 {
            return Err(SimilarityError::NonGeometric {
                horizon: n,
                ratio: 0.0,
            });
        }
        let term = 1.0 / derivative;
        sum += term;
        sizes.push(term.norm());
        if n >= GROWTH_WINDOW {
            ratio = sizes[n - GROWTH_WINDOW..]
                .windows(2)
                .map(|w| w[1] / w[0])
                .fold(0.0, f64::max);
            if ratio < 1.0 && term.norm() * ratio / (1.0 - ratio) < tail_tol {
                return Ok(sum);
            }
        }
        derivative *= map.derivative(z);
        z = map.apply(z);
        if z.norm() > radius {
            return Err(SimilarityError::Escaped { iteration: n + 1 });
        }
    }
    Err(SimilarityError::NonGeometric {
        horizon: LAMBDA_HORIZON,
        ratio,
    })
}

/// The same sum in closed form once the orbit has landed:
/// `sum_{n<l} t_n + (1/A0) * S_p * lambda0 / (lambda0 - 1)` with
/// `S_p = sum_{j<p} 1/(f^j)'(a0)`.
pub fn lambda_closed_form(data: &MisiurewiczData) -> Complex64 {
    let map = data.map();
    let one = Complex64::new(1.0, 0.0);
    let mut head = Complex64::new(0.0, 0.0);
    let mut derivative = one;
    for &z in &data.prefix {
        head += 1.0 / derivative;
        derivative *= map.derivative(z);
    }
    let mut cycle_sum = Complex64::new(0.0, 0.0);
    let mut along = one;
    for &z in &data.cycle {
        cycle_sum += 1.0 / along;
        along *= map.derivative(z);
    }
    let lambda0 = data.multiplier;
    head + cycle_sum * lambda0 / (lambda0 - one) / data.landing_derivative
}

/// The affine factor `Q = 1 / lambda` that aligns `M - c0` with `J - c0`.
pub fn similarity_constant(lambda: Complex64) -> Complex64 {
    1.0 / lambda
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RescalingEntry {
    pub n: usize,
    pub rho: Complex64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RescalingSequence {
    pub entries: Vec<RescalingEntry>,
}

impl RescalingSequence {
    /// `n_k = l + k p`, `rho_k = 1 / (A0 lambda0^k)`.
    pub fn misiurewicz(data: &MisiurewiczData, ks: RangeInclusive<usize>) -> Self {
        Self {
            entries: ks
                .map(|k| RescalingEntry {
                    n: data.rescaling_time(k),
                    rho: data.rescaling_factor(k),
                })
                .collect(),
        }
    }
}

/// `phi_k` sampled at the cell centers of a frame.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitGrid {
    pub frame: Frame,
    pub depth: usize,
    pub values: Vec<Complex64>,
    /// `sup |phi_depth - phi_{depth+1}|` over the frame.
    pub stability: f64,
    pub certified: bool,
}

fn limit_values(
    data: &MisiurewiczData,
    reference: &ReferenceOrbit,
    frame: &Frame,
    depth: usize,
) -> Result<Vec<Complex64>, SimilarityError> {
    let n = data.rescaling_time(depth);
    let rho = data.rescaling_factor(depth);
    let zero = Complex64::new(0.0, 0.0);
    let values = frame.map_cells(|w| {
        reference
            .perturb(
                TrackedPoint {
                    z: rho * w,
                    dz: rho,
                },
                (zero, zero),
                n,
            )
            .map(|p| p.z)
            .filter(|z| z.re.is_finite() && z.im.is_finite())
            .ok_or(w)
    });
    values
        .into_iter()
        .map(|v| v.map_err(|w| SimilarityError::LimitOverflow { depth, w }))
        .collect()
}

fn sup_difference(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Evaluates `phi_depth` on `frame` and measures its distance to `phi_{depth+1}`.
pub fn zalcman_limit_grid(
    data: &MisiurewiczData,
    frame: &Frame,
    depth: usize,
) -> Result<LimitGrid, SimilarityError> {
    let reference = data.reference_orbit();
    let values = limit_values(data, &reference, frame, depth)?;
    let next = limit_values(data, &reference, frame, depth + 1)?;
    let stability = sup_difference(&values, &next);
    let certified = stability < STABILITY_TOL;
    if !certified {
        log::warn!("depth {depth} not certified: sup |phi_k - phi_k+1| = {stability:e}");
    }
    Ok(LimitGrid {
        frame: *frame,
        depth,
        values,
        stability,
        certified,
    })
}

fn coarse(frame: &Frame) -> Frame {
    Frame {
        resolution: frame.resolution.min(STABILITY_RESOLUTION),
        ..*frame
    }
}

/// Smallest depth `>= start` whose limit grid is stable on a coarse copy of `frame`.
pub fn certified_depth(
    data: &MisiurewiczData,
    frame: &Frame,
    start: usize,
) -> Result<(usize, f64), SimilarityError> {
    let grid = coarse(frame);
    let reference = data.reference_orbit();
    let mut current = limit_values(data, &reference, &grid, start)?;
    let mut stability = f64::INFINITY;
    for depth in start..MAX_MODEL_DEPTH {
        let next = limit_values(data, &reference, &grid, depth + 1)?;
        stability = sup_difference(&current, &next);
        if stability < STABILITY_TOL {
            return Ok((depth, stability));
        }
        current = next;
    }
    Err(SimilarityError::DepthNotCertified {
        max_depth: MAX_MODEL_DEPTH,
        stability,
    })
}

/// Truncated set plus the number of cells that are bounded at `cap` but
/// escape before `2 cap` (marked, but on the resolution edge).
#[derive(Debug, Clone, PartialEq)]
pub struct RescaledSet {
    pub set: GridSet,
    pub flips: usize,
}

#[derive(Debug, Clone, Copy)]
enum Plane {
    Dynamical,
    Parameter,
}

/// Marks `w` when the orbit of `c0 + scale w` (dynamical plane) or the critical
/// orbit of `c0 + scale w` (parameter plane) stays bounded for `cap`
/// iterations, or escapes with distance estimate at most one cell.
fn rescaled_set(
    data: &MisiurewiczData,
    depth: usize,
    scale: Complex64,
    plane: Plane,
    frame: &Frame,
    r: f64,
    cap: usize,
) -> Result<RescaledSet, SimilarityError> {
    let reference = data.reference_orbit();
    let degree = data.degree;
    let steps = data.rescaling_time(depth).min(cap);
    let h = frame.spacing();
    let zero = Complex64::new(0.0, 0.0);
    let cells: Vec<(bool, bool)> = frame.map_cells(|w| {
        let delta = scale * w;
        let offset = match plane {
            Plane::Dynamical => (zero, zero),
            Plane::Parameter => (delta, scale),
        };
        let c = data.c0 + offset.0;
        let radius = dynamics::escape_radius(degree, c);
        let outcome = match reference.perturb_until(
            TrackedPoint {
                z: delta,
                dz: scale,
            },
            offset,
            steps,
            radius,
        ) {
            Some((n, point)) => dynamics::continue_escape(degree, c, offset.1, point, n, 2 * cap),
            None => return (false, false),
        };
        match outcome.membership {
            Membership::Bounded { .. } => (true, false),
            Membership::Escaped { iteration } if iteration > cap => (true, true),
            Membership::Escaped { .. } => {
                (outcome.distance_estimate.is_some_and(|d| d <= h), false)
            }
        }
    });
    let flips = cells.iter().filter(|(_, flip)| *flip).count();
    let mask = cells.into_iter().map(|(marked, _)| marked).collect();
    let set = GridSet::from_mask(*frame, mask)?.truncate(r)?;
    Ok(RescaledSet { set, flips })
}

/// `[rho_k^{-1} (J - c0)]_r`, equivalently `[phi_k^{-1}(J)]_r`.
pub fn julia_rescaled_set(
    data: &MisiurewiczData,
    k: usize,
    frame: &Frame,
    r: f64,
    cap: usize,
) -> Result<RescaledSet, SimilarityError> {
    rescaled_set(
        data,
        k,
        data.rescaling_factor(k),
        Plane::Dynamical,
        frame,
        r,
        cap,
    )
}

/// `[Q^{-1} rho_k^{-1} (M - c0)]_r`.
pub fn mandelbrot_rescaled_set(
    data: &MisiurewiczData,
    q: Complex64,
    k: usize,
    frame: &Frame,
    r: f64,
    cap: usize,
) -> Result<RescaledSet, SimilarityError> {
    rescaled_set(
        data,
        k,
        q * data.rescaling_factor(k),
        Plane::Parameter,
        frame,
        r,
        cap,
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSet {
    pub set: GridSet,
    pub depth: usize,
    pub stability: f64,
    pub certified: bool,
    pub flips: usize,
}

/// `[phi^{-1}(J)]_r` with `phi` replaced by `phi_depth`.
pub fn model_set(
    data: &MisiurewiczData,
    frame: &Frame,
    r: f64,
    depth: usize,
    cap: usize,
) -> Result<ModelSet, SimilarityError> {
    let grid = coarse(frame);
    let reference = data.reference_orbit();
    let stability = sup_difference(
        &limit_values(data, &reference, &grid, depth)?,
        &limit_values(data, &reference, &grid, depth + 1)?,
    );
    let certified = stability < STABILITY_TOL;
    if !certified {
        log::warn!("model depth {depth} not certified: {stability:e}");
    }
    let RescaledSet { set, flips } = julia_rescaled_set(data, depth, frame, r, cap)?;
    Ok(ModelSet {
        set,
        depth,
        stability,
        certified,
        flips,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityConfig {
    pub degree: u32,
    pub c0: Complex64,
    pub r: f64,
    pub resolution: usize,
    /// Defaults to `1.05 r`.
    pub half_width: Option<f64>,
    pub k_min: usize,
    pub k_max: usize,
    pub cap: usize,
    /// Depth of the model set; the smallest certified depth above `k_max` when absent.
    pub model_depth: Option<usize>,
    pub tail_tol: f64,
}

impl Default for SimilarityConfig {
    fn default() -> Self {
        Self {
            degree: 2,
            c0: Complex64::new(0.0, 1.0),
            r: 1.0,
            resolution: 512,
            half_width: None,
            k_min: 1,
            k_max: 6,
            cap: DEFAULT_CAP,
            model_depth: None,
            tail_tol: DEFAULT_TAIL_TOL,
        }
    }
}

impl SimilarityConfig {
    pub fn frame(&self) -> Result<Frame, SimilarityError> {
        Ok(Frame::centered(
            self.half_width.unwrap_or(1.05 * self.r),
            self.resolution,
        )?)
    }

    pub fn validate(&self) -> Result<(), SimilarityError> {
        let frame = self.frame()?;
        if !(self.r > 0.0 && self.r <= frame.half_width) {
            return Err(SimilarityError::Config(format!(
                "r = {} must lie in (0, {}]",
                self.r, frame.half_width
            )));
        }
        if self.k_min > self.k_max {
            return Err(SimilarityError::Config(format!(
                "empty k range {}..={}",
                self.k_min, self.k_max
            )));
        }
        if self.cap == 0 {
            return Err(SimilarityError::Config("cap must be positive".into()));
        }
        if self.tail_tol.is_nan() || self.tail_tol <= 0.0 {
            return Err(SimilarityError::Config(
                "tail tolerance must be positive".into(),
            ));
        }
        dynamics::check_degree(self.degree)?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityRow {
    pub k: usize,
    pub n_k: usize,
    pub rho: Complex64,
    pub julia: Option<RescaledSet>,
    pub mandelbrot: Option<RescaledSet>,
    /// `d_H` from the rescaled Julia set to the model set.
    pub d_julia: Option<f64>,
    pub d_mandelbrot: Option<f64>,
    /// `d_H` between the rescaled Julia and Mandelbrot sets.
    pub d_between: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityReport {
    pub data: MisiurewiczData,
    pub lambda: Complex64,
    pub q: Complex64,
    pub r: f64,
    pub frame: Frame,
    pub cap: usize,
    pub model: ModelSet,
    pub rows: Vec<SimilarityRow>,
    pub grid_tolerance: f64,
    /// Least-squares slope of `ln d_between` against `ln sqrt|rho_k|` over rows
    /// with `d_between > 3 h`.
    pub rate_slope: Option<f64>,
    pub rate_rows: usize,
}

/// One CSV record per row.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SimilarityRecord {
    pub k: usize,
    pub n_k: usize,
    pub rho_re: f64,
    pub rho_im: f64,
    pub d_julia: Option<f64>,
    pub d_mandelbrot: Option<f64>,
    pub d_between: Option<f64>,
    pub lambda_re: f64,
    pub lambda_im: f64,
    pub q_re: f64,
    pub q_im: f64,
    pub julia_flips: Option<usize>,
    pub mandelbrot_flips: Option<usize>,
    pub error: Option<String>,
}

impl SimilarityReport {
    pub fn records(&self) -> Vec<SimilarityRecord> {
        self.rows
            .iter()
            .map(|row| SimilarityRecord {
                k: row.k,
                n_k: row.n_k,
                rho_re: row.rho.re,
                rho_im: row.rho.im,
                d_julia: row.d_julia,
                d_mandelbrot: row.d_mandelbrot,
                d_between: row.d_between,
                lambda_re: self.lambda.re,
                lambda_im: self.lambda.im,
                q_re: self.q.re,
                q_im: self.q.im,
                julia_flips: row.julia.as_ref().map(|s| s.flips),
                mandelbrot_flips: row.mandelbrot.as_ref().map(|s| s.flips),
                error: row.error.clone(),
            })
            .collect()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut writer = csv::Writer::from_writer(out);
        for record in self.records() {
            writer.serialize(record)?;
        }
        writer.flush()?;
        Ok(())
    }
}

/// Least-squares slope of `y` against `x`.
pub fn fit_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

fn build_row(
    data: &MisiurewiczData,
    q: Complex64,
    k: usize,
    config: &SimilarityConfig,
    frame: &Frame,
    model: &GridSet,
) -> SimilarityRow {
    let mut row = SimilarityRow {
        k,
        n_k: data.rescaling_time(k),
        rho: data.rescaling_factor(k),
        julia: None,
        mandelbrot: None,
        d_julia: None,
        d_mandelbrot: None,
        d_between: None,
        error: None,
    };
    let outcome = (|| -> Result<(), SimilarityError> {
        let julia = julia_rescaled_set(data, k, frame, config.r, config.cap)?;
        row.d_julia = Some(hausdorff_distance(&julia.set, model)?);
        row.julia = Some(julia);
        let mandelbrot = mandelbrot_rescaled_set(data, q, k, frame, config.r, config.cap)?;
        row.d_mandelbrot = Some(hausdorff_distance(&mandelbrot.set, model)?);
        if let Some(julia) = &row.julia {
            row.d_between = Some(hausdorff_distance(&julia.set, &mandelbrot.set)?);
        }
        row.mandelbrot = Some(mandelbrot);
        Ok(())
    })();
    if let Err(e) = outcome {
        log::warn!("row k = {k}: {e}");
        row.error = Some(e.to_string());
    }
    row
}

/// Runs the full comparison for one Misiurewicz parameter.
pub fn similarity_report(config: &SimilarityConfig) -> Result<SimilarityReport, SimilarityError> {
    config.validate()?;
    let frame = config.frame()?;
    let data = misiurewicz_data(config.degree, config.c0)?;
    let lambda = lambda_series(config.degree, config.c0, config.tail_tol)?;
    let q = similarity_constant(lambda);
    let depth = match config.model_depth {
        Some(depth) => depth,
        None => certified_depth(&data, &frame, config.k_max + 1)?.0,
    };
    let model = model_set(&data, &frame, config.r, depth, config.cap)?;
    let rows: Vec<SimilarityRow> = (config.k_min..=config.k_max)
        .map(|k| build_row(&data, q, k, config, &frame, &model.set))
        .collect();
    let h = frame.spacing();
    let rate_points: Vec<(f64, f64)> = rows
        .iter()
        .filter_map(|row| {
            row.d_between
                .filter(|&d| d > 3.0 * h)
                .map(|d| (row.rho.norm().sqrt().ln(), d.ln()))
        })
        .collect();
    Ok(SimilarityReport {
        lambda,
        q,
        r: config.r,
        frame,
        cap: config.cap,
        grid_tolerance: frame.grid_tolerance(),
        rate_slope: fit_slope(&rate_points),
        rate_rows: rate_points.len(),
        model,
        rows,
        data,
    })
}

/// Rescaling times for a semi-hyperbolic `c0` without using Misiurewicz data.
///
/// `n_k` runs over the returns of the critical orbit to its first recurrent
/// point at which `|(f^n)'(c0)|` reaches a new maximum (see
/// [`conical::recurrent_maxima`]), and `rho_k = 1/(f^{n_k})'(c0)`.
pub fn self_similarity_sequence(
    degree: u32,
    c0: Complex64,
    horizon: usize,
) -> Result<RescalingSequence, SimilarityError> {
    let map = UnicriticalMap::new(degree, c0)?;
    let check = conical::semi_hyperbolic_test(&map, c0, horizon, DEFAULT_SEPARATION).map_err(
        |e| match e {
            conical::ConicalError::Escaped { iteration } => SimilarityError::Escaped { iteration },
            other => SimilarityError::Config(other.to_string()),
        },
    )?;
    if !check.semi_hyperbolic {
        return Err(SimilarityError::NotSemiHyperbolic {
            distance: check.closest_return,
        });
    }
    let radius = map.escape_radius();
    let mut points = Vec::with_capacity(horizon + 1);
    let mut derivatives = Vec::with_capacity(horizon + 1);
    let (mut z, mut derivative) = (c0, Complex64::new(1.0, 0.0));
    for n in 0..=horizon {
        points.push(z);
        derivatives.push(derivative);
        derivative *= map.derivative(z);
        z = map.apply(z);
        if z.norm() > radius {
            return Err(SimilarityError::Escaped { iteration: n + 1 });
        }
    }
    let entries: Vec<RescalingEntry> = conical::recurrent_maxima(&points, &derivatives)
        .into_iter()
        .map(|n| RescalingEntry {
            n,
            rho: 1.0 / derivatives[n],
        })
        .collect();
    if entries.len() < 2 {
        return Err(SimilarityError::GrowthNotObserved { horizon });
    }
    Ok(RescalingSequence { entries })
}
