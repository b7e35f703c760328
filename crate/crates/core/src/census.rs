//! Preperiodic and superattracting parameters.
//!
//! Indexing follows the critical value: `c` is in `Prep(k, l)` when
//! `f_c^{k+l}(c) = f_c^k(c)` with `(k, l)` minimal. `k = 0` are the
//! superattracting centers (the critical orbit is periodic); `k >= 1` with a
//! repelling landing cycle are the Misiurewicz parameters `Mi(k, l)`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{self, check_degree, DynError};

pub const NEWTON_STEP_TOL: f64 = 1e-13;
pub const NEWTON_MAX_STEPS: usize = 100;
pub const PREP_RESIDUAL_TOL: f64 = 1e-10;
pub const MINIMALITY_TOL: f64 = 1e-6;
pub const DEDUP_RADIUS: f64 = 1e-9;
/// Misiurewicz classification needs `|multiplier| > 1 + REPELLING_MARGIN`.
pub const REPELLING_MARGIN: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CensusError {
    #[error(transparent)]
    Dynamics(#[from] DynError),
    #[error("period must be at least 1")]
    InvalidPeriod,
    #[error("Newton iteration did not converge in {steps} steps (residual {residual:e})")]
    NoConvergence { steps: usize, residual: f64 },
    #[error("Newton iterate left the parameter disk at step {step}")]
    EscapedBasin { step: usize },
    #[error("Newton derivative vanished")]
    SingularStep,
    #[error("requested Prep({k}, {l}) but {c} satisfies Prep({actual_k}, {actual_l})")]
    NonMinimal {
        k: usize,
        l: usize,
        actual_k: usize,
        actual_l: usize,
        c: Complex64,
    },
    #[error("continuation stalled after {last_good} entries: {reason}")]
    ContinuationStalled {
        last_good: usize,
        reason: String,
        partial: Box<CensusReport>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrepParameter {
    pub c: Complex64,
    pub preperiod: usize,
    pub period: usize,
    pub misiurewicz: bool,
    /// `(f^l)'` along the landing cycle `f^k(c), ..., f^{k+l-1}(c)`.
    pub landing_multiplier: Complex64,
    /// `|f_c^{k+l}(c) - f_c^k(c)|` recomputed from scratch.
    pub residual: f64,
}

/// Critical-value orbit `c, f_c(c), ..., f_c^n(c)`.
fn critical_values(degree: u32, c: Complex64, n: usize) -> Result<Vec<Complex64>, DynError> {
    let guard = dynamics::overflow_guard(degree);
    let mut out = Vec::with_capacity(n + 1);
    let mut z = c;
    out.push(z);
    for step in 0..n {
        if z.norm() > guard {
            return Err(DynError::Overflow { step });
        }
        z = dynamics::power(z, degree) + c;
        out.push(z);
    }
    Ok(out)
}

/// `|f_c^{k+l}(c) - f_c^k(c)|`.
pub fn prep_residual(degree: u32, c: Complex64, k: usize, l: usize) -> Result<f64, DynError> {
    let orbit = critical_values(degree, c, k + l)?;
    Ok((orbit[k + l] - orbit[k]).norm())
}

fn divisors(n: usize) -> impl Iterator<Item = usize> {
    (1..=n).filter(move |&q| n.is_multiple_of(q))
}

/// Smallest `(k', l')` with `k' <= k`, `l' | l`, `(k', l') != (k, l)` that
/// already satisfies the relation at `c`.
fn lower_relation(
    degree: u32,
    c: Complex64,
    k: usize,
    l: usize,
) -> Result<Option<(usize, usize)>, DynError> {
    let orbit = critical_values(degree, c, k + l)?;
    for lp in divisors(l) {
        for kp in 0..=k {
            if (kp, lp) == (k, l) {
                continue;
            }
            if (orbit[kp + lp] - orbit[kp]).norm() < MINIMALITY_TOL {
                return Ok(Some((kp, lp)));
            }
        }
    }
    Ok(None)
}

fn newton_in_parameter<F>(
    degree: u32,
    seed: Complex64,
    mut value_and_slope: F,
) -> Result<Complex64, CensusError>
where
    F: FnMut(Complex64) -> Result<(Complex64, Complex64), DynError>,
{
    // The connectedness locus lies in |c| <= 2^{1/(d-1)} <= 2.
    let bound = 2.0 * dynamics::escape_radius(degree, Complex64::new(0.0, 0.0));
    let mut c = seed;
    let mut residual = f64::INFINITY;
    for step in 1..=NEWTON_MAX_STEPS {
        let (value, slope) = value_and_slope(c)?;
        residual = value.norm();
        if slope.norm() == 0.0 {
            return Err(CensusError::SingularStep);
        }
        let delta = value / slope;
        c -= delta;
        if !(c.re.is_finite() && c.im.is_finite()) || c.norm() > bound {
            return Err(CensusError::EscapedBasin { step });
        }
        if delta.norm() < NEWTON_STEP_TOL * c.norm().max(1.0) {
            return Ok(c);
        }
    }
    Err(CensusError::NoConvergence {
        steps: NEWTON_MAX_STEPS,
        residual,
    })
}

/// Newton in `c` on `f_c^{k+l}(c) - f_c^k(c)`.
///
/// For `k = 0` the relation reduces to `f_c^l(0)^d = 0`, a `d`-fold root; the
/// solver then works on the simple equation `f_c^{l-1}(c) = 0` instead, which
/// has the same solution set.
pub fn solve_prep(
    degree: u32,
    k: usize,
    l: usize,
    seed: Complex64,
) -> Result<PrepParameter, CensusError> {
    check_degree(degree)?;
    if l == 0 {
        return Err(CensusError::InvalidPeriod);
    }
    let c = if k == 0 {
        newton_in_parameter(degree, seed, |c| {
            let t = dynamics::param_orbit_with_derivative(degree, c, l - 1)?;
            Ok((t.value, t.derivative))
        })?
    } else {
        newton_in_parameter(degree, seed, |c| {
            let low = dynamics::param_orbit_with_derivative(degree, c, k)?;
            let high = dynamics::param_orbit_with_derivative(degree, c, k + l)?;
            Ok((high.value - low.value, high.derivative - low.derivative))
        })?
    };
    classify(degree, c, k, l)
}

/// Verifies the relation and its minimality at `c` and fills in the landing data.
pub fn classify(
    degree: u32,
    c: Complex64,
    k: usize,
    l: usize,
) -> Result<PrepParameter, CensusError> {
    let orbit = critical_values(degree, c, k + l)?;
    let residual = (orbit[k + l] - orbit[k]).norm();
    if residual >= PREP_RESIDUAL_TOL {
        return Err(CensusError::NoConvergence {
            steps: NEWTON_MAX_STEPS,
            residual,
        });
    }
    if let Some((actual_k, actual_l)) = lower_relation(degree, c, k, l)? {
        return Err(CensusError::NonMinimal {
            k,
            l,
            actual_k,
            actual_l,
            c,
        });
    }
    let d = f64::from(degree);
    let landing_multiplier = orbit[k..k + l]
        .iter()
        .fold(Complex64::new(1.0, 0.0), |acc, &z| {
            acc * d * dynamics::power(z, degree - 1)
        });
    Ok(PrepParameter {
        c,
        preperiod: k,
        period: l,
        misiurewicz: k >= 1 && landing_multiplier.norm() > 1.0 + REPELLING_MARGIN,
        landing_multiplier,
        residual,
    })
}

/// Axis-aligned rectangle in the parameter plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl Region {
    /// Square `[-2.1, 2.1]^2`, which contains every superattracting center
    /// for every degree.
    pub fn parameter_disk() -> Self {
        Self {
            re_min: -2.1,
            re_max: 2.1,
            im_min: -2.1,
            im_max: 2.1,
        }
    }

    pub fn contains(&self, c: Complex64) -> bool {
        c.re >= self.re_min && c.re <= self.re_max && c.im >= self.im_min && c.im <= self.im_max
    }
}

/// Total order used to merge results: by real part, then imaginary part.
pub fn canonical_order(a: &Complex64, b: &Complex64) -> std::cmp::Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}

/// All roots of `f_c^l(0) = 0` with minimal period `l` inside `region`,
/// found by Newton from a seed grid and merged deterministically.
pub fn find_superattracting_centers(
    degree: u32,
    l: usize,
    region: Region,
) -> Result<Vec<PrepParameter>, CensusError> {
    check_degree(degree)?;
    if l == 0 {
        return Err(CensusError::InvalidPeriod);
    }
    let expected = (degree as f64).powi(l as i32 - 1);
    let side = ((expected.sqrt() * 6.0).ceil() as usize).clamp(24, 1024);
    let seeds: Vec<Complex64> = (0..side * side)
        .map(|i| {
            let (row, col) = (i / side, i % side);
            let re =
                region.re_min + (region.re_max - region.re_min) * (col as f64 + 0.5) / side as f64;
            let im =
                region.im_min + (region.im_max - region.im_min) * (row as f64 + 0.5) / side as f64;
            Complex64::new(re, im)
        })
        .collect();
    let found: Vec<PrepParameter> = seeds
        .par_iter()
        .filter_map(|&seed| solve_prep(degree, 0, l, seed).ok())
        .filter(|p| region.contains(p.c))
        .collect();
    Ok(dedup(found))
}

fn dedup(found: Vec<PrepParameter>) -> Vec<PrepParameter> {
    let mut kept: Vec<PrepParameter> = Vec::new();
    for p in found {
        if kept.iter().all(|q| (q.c - p.c).norm() > DEDUP_RADIUS) {
            kept.push(p);
        }
    }
    kept.sort_by(|a, b| canonical_order(&a.c, &b.c));
    kept
}

/// Which family of parameters accumulates at the target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum SequenceMode {
    /// `Mi(k_j, l)` with `l` fixed and `k_j = first_preperiod + j - 1`.
    FixedPeriod {
        period: usize,
        first_preperiod: usize,
    },
    /// `Mi(k, l_j)` with `k` fixed and `l_j = first_period + j - 1`.
    FixedPreperiod {
        preperiod: usize,
        first_period: usize,
    },
    /// Superattracting centers `Prep(0, l_j)`, `l_j = first_period + j - 1`.
    Superattracting { first_period: usize },
}

impl SequenceMode {
    /// `(k_j, l_j)` for `j >= 1`.
    pub fn indices(&self, j: usize) -> (usize, usize) {
        match *self {
            SequenceMode::FixedPeriod {
                period,
                first_preperiod,
            } => (first_preperiod + j - 1, period),
            SequenceMode::FixedPreperiod {
                preperiod,
                first_period,
            } => (preperiod, first_period + j - 1),
            SequenceMode::Superattracting { first_period } => (0, first_period + j - 1),
        }
    }

    /// The index that grows along the sequence.
    pub fn varying_index(&self, p: &PrepParameter) -> usize {
        match self {
            SequenceMode::FixedPeriod { .. } => p.preperiod,
            _ => p.period,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            SequenceMode::FixedPeriod { .. } => "fixed_period",
            SequenceMode::FixedPreperiod { .. } => "fixed_preperiod",
            SequenceMode::Superattracting { .. } => "superattracting",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CensusEntry {
    pub index: usize,
    pub parameter: PrepParameter,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CensusReport {
    pub degree: u32,
    pub target: Complex64,
    pub mode: SequenceMode,
    pub entries: Vec<CensusEntry>,
}

const RING_SPOKES: usize = 8;

fn ring(center: Complex64, radius: f64) -> impl Iterator<Item = Complex64> {
    (0..RING_SPOKES).map(move |s| {
        let angle = std::f64::consts::TAU * (s as f64 + 0.5) / RING_SPOKES as f64;
        center + Complex64::from_polar(radius, angle)
    })
}

/// Parameters of increasing preperiod or period approaching `target`,
/// each solved by Newton from seeds continued off the previous solution.
///
/// The first seed of step `j + 1` is `t_j` moved halfway toward the target;
/// geometric extrapolation and rings around the target are tried as well,
/// and the valid solution closest to the target is kept.
pub fn thm1_sequence(
    degree: u32,
    target: Complex64,
    mode: SequenceMode,
    max_index: usize,
) -> Result<CensusReport, CensusError> {
    check_degree(degree)?;
    let mut report = CensusReport {
        degree,
        target,
        mode,
        entries: Vec::with_capacity(max_index),
    };
    for j in 1..=max_index {
        let (k, l) = mode.indices(j);
        if l == 0 {
            return Err(CensusError::InvalidPeriod);
        }
        let seeds = continuation_seeds(target, &report.entries);
        let best = seeds
            .iter()
            .filter_map(|&seed| solve_prep(degree, k, l, seed).ok())
            .filter(|p| match mode {
                SequenceMode::Superattracting { .. } => true,
                _ => p.misiurewicz,
            })
            .filter(|p| (p.c - target).norm() > DEDUP_RADIUS)
            .min_by(|a, b| {
                (a.c - target)
                    .norm()
                    .total_cmp(&(b.c - target).norm())
                    .then(canonical_order(&a.c, &b.c))
            });
        match best {
            Some(parameter) => report.entries.push(CensusEntry {
                index: j,
                distance: (parameter.c - target).norm(),
                parameter,
            }),
            None => {
                return Err(CensusError::ContinuationStalled {
                    last_good: j - 1,
                    reason: format!(
                        "no Prep({k}, {l}) solution found from {} seeds",
                        seeds.len()
                    ),
                    partial: Box::new(report),
                })
            }
        }
    }
    Ok(report)
}

fn continuation_seeds(target: Complex64, entries: &[CensusEntry]) -> Vec<Complex64> {
    let mut seeds = Vec::new();
    match entries {
        [] => {
            for radius in [0.5, 0.25, 0.125, 0.0625] {
                seeds.extend(ring(target, radius));
            }
        }
        [.., last] => {
            let prev = last.parameter.c;
            seeds.push(prev + (target - prev) * 0.5);
            if let [.., before, _] = entries {
                let older = before.parameter.c - target;
                if older.norm() > 0.0 {
                    let offset = prev - target;
                    seeds.push(target + offset * offset / older);
                }
            }
            seeds.push(prev);
            let gap = (prev - target).norm();
            for scale in [0.5, 0.25, 1.0] {
                seeds.extend(ring(target, gap * scale));
            }
        }
    }
    seeds
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn chebyshev_is_misiurewicz() {
        let p = solve_prep(2, 1, 1, c(-1.9, 0.0)).unwrap();
        assert!((p.c - c(-2.0, 0.0)).norm() < 1e-13);
        assert!(p.misiurewicz);
        assert!((p.landing_multiplier - c(4.0, 0.0)).norm() < 1e-11);
    }

    #[test]
    fn dendrite_is_misiurewicz() {
        let p = solve_prep(2, 1, 2, c(0.2, 1.1)).unwrap();
        assert!((p.c - c(0.0, 1.0)).norm() < 1e-13);
        assert!(p.misiurewicz);
        assert!((p.landing_multiplier - c(4.0, 4.0)).norm() < 1e-11);
    }

    #[test]
    fn basilica_center_is_not_misiurewicz() {
        let p = solve_prep(2, 0, 2, c(-0.9, 0.0)).unwrap();
        assert!((p.c - c(-1.0, 0.0)).norm() < 1e-13);
        assert!(!p.misiurewicz);
        assert_eq!((p.preperiod, p.period), (0, 2));
    }

    #[test]
    fn non_minimal_solution_reported() {
        // the relation for (2, 2) also holds at c = i, which is Prep(1, 2)
        let err = solve_prep(2, 2, 2, c(0.0, 1.0)).unwrap_err();
        assert!(matches!(
            err,
            CensusError::NonMinimal {
                actual_k: 1,
                actual_l: 2,
                ..
            }
        ));
        let err = solve_prep(2, 0, 2, c(0.05, 0.0)).unwrap_err();
        assert!(matches!(
            err,
            CensusError::NonMinimal {
                actual_k: 0,
                actual_l: 1,
                ..
            }
        ));
    }

    #[test]
    fn small_period_centers() {
        let one = find_superattracting_centers(2, 1, Region::parameter_disk()).unwrap();
        assert_eq!(one.len(), 1);
        assert!(one[0].c.norm() < 1e-12);
        let two = find_superattracting_centers(2, 2, Region::parameter_disk()).unwrap();
        assert_eq!(two.len(), 1);
        assert!((two[0].c - c(-1.0, 0.0)).norm() < 1e-12);
        let three = find_superattracting_centers(2, 3, Region::parameter_disk()).unwrap();
        assert_eq!(three.len(), 3);
        assert!((three[0].c - c(-1.754877666246693, 0.0)).norm() < 1e-9);
    }

    #[test]
    fn centers_respect_region() {
        let region = Region {
            re_min: -2.0,
            re_max: -1.5,
            im_min: -0.1,
            im_max: 0.1,
        };
        let three = find_superattracting_centers(2, 3, region).unwrap();
        assert_eq!(three.len(), 1);
    }

    #[test]
    fn invalid_period() {
        assert_eq!(
            solve_prep(2, 1, 0, c(0.0, 0.0)).unwrap_err(),
            CensusError::InvalidPeriod
        );
    }

    #[test]
    fn mode_indices() {
        let mode = SequenceMode::FixedPeriod {
            period: 2,
            first_preperiod: 2,
        };
        assert_eq!(mode.indices(1), (2, 2));
        assert_eq!(mode.indices(10), (11, 2));
        assert_eq!(
            SequenceMode::Superattracting { first_period: 2 }.indices(3),
            (0, 4)
        );
    }
}
