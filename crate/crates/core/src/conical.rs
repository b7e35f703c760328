//! Numerical evidence for conical Julia points and semi-hyperbolic parameters.
//!
//! The pullback tester follows a disk `B(f^n(z0), r)` back along the orbit,
//! bounding each pulled-back component by disks around the pulled centers.
//! Steps whose disk avoids the critical value are univalent and carry
//! certified bounds; the others multiply the degree by `d` and only carry a
//! crude enclosure.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{DynError, ReferenceOrbit, TrackedPoint, UnicriticalMap};
use crate::orbits::polar_samples;

/// Iterations used to decide that a point lies in the Julia set.
pub const JULIA_CHECK_CAP: usize = 2000;
pub const CONSISTENCY_TOL: f64 = 1e-8;
pub const LANDING_TOL: f64 = 1e-9;
pub const RECURRENCE_TOL: f64 = 1e-9;
pub const LM1_TOL: f64 = 1e-6;
pub const LM1_HORIZON: usize = 600;
pub const DEFAULT_RADII: [f64; 4] = [0.5, 1.0, 2.0, 4.0];
/// Expansion constants are fitted over this many iterates of each cluster point.
pub const EXPANSION_WINDOW: usize = 64;
pub const MAX_CLUSTERS: usize = 4096;
/// Past this derivative a computed orbit carries no information about the
/// true one (rounding is amplified beyond order one), so orbit checks and
/// rescaling sequences stop here.
pub const RESOLVABLE_DERIVATIVE: f64 = 1e13;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConicalError {
    #[error(transparent)]
    Dynamics(#[from] DynError),
    #[error("orbit escapes at iteration {iteration}")]
    Escaped { iteration: usize },
    #[error("point is not in the Julia set: log|(f^n)'| = {log_derivative} after {steps} steps")]
    NotInJulia { log_derivative: f64, steps: usize },
    #[error("radius must be positive and finite, got {0}")]
    InvalidRadius(f64),
    #[error("n_max must be at least 2")]
    InvalidHorizon,
    #[error("inverse branch lost the orbit at step {step} (error {error:e})")]
    BranchLost { step: usize, error: f64 },
    #[error("derivative does not grow along returns of the orbit within {horizon} iterations")]
    DerivativeNotGrowing { horizon: usize },
    #[error(
        "rescaled maps did not stabilize on radius {radius} (last disagreement {disagreement:e})"
    )]
    StabilizationFailed { radius: f64, disagreement: f64 },
}

/// Checks that `z0` has a bounded orbit with expanding derivative: the
/// orbit must stay bounded until `|(f^n)'(z0)|` passes
/// [`RESOLVABLE_DERIVATIVE`] (or for `cap` steps) and must not contract.
pub fn check_in_julia(map: &UnicriticalMap, z0: Complex64, cap: usize) -> Result<(), ConicalError> {
    let radius = map.escape_radius();
    let mut z = z0;
    let mut log_derivative = 0.0;
    for n in 0..cap {
        if log_derivative > RESOLVABLE_DERIVATIVE.ln() {
            return Ok(());
        }
        log_derivative += map.derivative(z).norm().ln();
        z = map.apply(z);
        if z.norm() > radius {
            return Err(ConicalError::Escaped { iteration: n + 1 });
        }
    }
    if log_derivative > 0.0 {
        Ok(())
    } else {
        Err(ConicalError::NotInJulia {
            log_derivative,
            steps: cap,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PullbackDisk {
    pub step: usize,
    pub center: Complex64,
    pub radius_lower: f64,
    pub radius_upper: f64,
    pub degree: u64,
    /// Every pullback step was univalent, so both radii are proven bounds.
    pub certified: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    ConicalCertified,
    ConicalHeuristic,
    NotDetected,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConicalVerdict {
    pub z0: Complex64,
    pub r: f64,
    pub d_bound: u64,
    pub n_max: usize,
    pub qualifying_steps: Vec<usize>,
    /// Pullback of `B(f^n(z0), r)` to a neighborhood of `z0`, for `n = 1..=n_max`.
    pub disks: Vec<PullbackDisk>,
    pub verdict: Verdict,
    pub certified: bool,
    /// Largest one-step residual `|f(w_{j-1}) - w_j|` of the inverse branch
    /// over all pullback walks. Re-iterating a center `n` steps at once would
    /// amplify rounding by `|(f^n)'|`, so the check is made step by step.
    pub consistency: f64,
    /// Largest `|center - z0|` over all pulled-back centers.
    pub center_drift: f64,
}

/// Preimage of `w` under `z^d + c` closest to `near`.
fn nearest_preimage(map: &UnicriticalMap, w: Complex64, near: Complex64) -> Complex64 {
    let d = map.degree();
    let root = (w - map.c()).powf(1.0 / f64::from(d));
    (0..d)
        .map(|j| {
            root * Complex64::from_polar(1.0, std::f64::consts::TAU * f64::from(j) / f64::from(d))
        })
        .min_by(|a, b| (a - near).norm().total_cmp(&(b - near).norm()))
        .expect("degree is at least 2")
}

fn pull_back(
    map: &UnicriticalMap,
    orbit: &[Complex64],
    n: usize,
    r: f64,
) -> Result<(PullbackDisk, f64), ConicalError> {
    let d = map.degree();
    let inv_d = 1.0 / f64::from(d);
    let mut center = orbit[n];
    let (mut lower, mut upper) = (r, r);
    let mut degree: u64 = 1;
    let mut certified = true;
    let mut residual: f64 = 0.0;
    for j in (1..=n).rev() {
        let u0 = (center - map.c()).norm();
        let previous = nearest_preimage(map, center, orbit[j - 1]);
        let error = (map.apply(previous) - center).norm();
        if error > CONSISTENCY_TOL * center.norm().max(1.0) {
            return Err(ConicalError::BranchLost { step: j, error });
        }
        residual = residual.max(error);
        if upper < u0 {
            // u -> u^{1/d} on B(u0, upper): the image lies within
            // |u0|^{1/d} - (|u0| - upper)^{1/d} of the image center
            upper = -u0.powf(inv_d) * ((-upper / u0).ln_1p() * inv_d).exp_m1();
            // growth theorem for the branch, univalent on B(u0, |u0|)
            let slope = 1.0 / (f64::from(d) * previous.powu(d - 1).norm());
            let x = lower / u0;
            lower = slope * lower / (1.0 + x).powi(2);
        } else {
            degree = degree.saturating_mul(u64::from(d));
            certified = false;
            upper = previous.norm() + (u0 + upper).powf(inv_d);
            lower = 0.0;
        }
        center = previous;
    }
    let disk = PullbackDisk {
        step: n,
        center,
        radius_lower: lower,
        radius_upper: upper,
        degree,
        certified,
    };
    Ok((disk, residual))
}

/// `z0, ..., z_{n_max}`. A numerically periodic `z0` (first return within
/// `1e-9`) is continued by repeating its cycle: the computed forward orbit of
/// a repelling cycle drifts off at rate `|multiplier|` and eventually escapes.
fn pullback_orbit(
    map: &UnicriticalMap,
    z0: Complex64,
    n_max: usize,
) -> Result<Vec<Complex64>, ConicalError> {
    let radius = map.escape_radius();
    let mut orbit = Vec::with_capacity(n_max + 1);
    let mut z = z0;
    for n in 0..=n_max {
        if z.norm() > radius {
            return Err(ConicalError::Escaped { iteration: n });
        }
        if n > 0 && (z - z0).norm() < RECURRENCE_TOL {
            let period = n;
            return Ok((0..=n_max).map(|m| orbit[m % period]).collect());
        }
        orbit.push(z);
        z = map.apply(z);
    }
    Ok(orbit)
}

/// Degree-bounded pullbacks of `B(f^n(z0), r)` for `n <= n_max`.
pub fn mm0_test(
    map: &UnicriticalMap,
    z0: Complex64,
    r: f64,
    d_bound: u64,
    n_max: usize,
) -> Result<ConicalVerdict, ConicalError> {
    if !(r.is_finite() && r > 0.0) {
        return Err(ConicalError::InvalidRadius(r));
    }
    if n_max < 2 {
        return Err(ConicalError::InvalidHorizon);
    }
    check_in_julia(map, z0, JULIA_CHECK_CAP)?;
    let orbit = pullback_orbit(map, z0, n_max)?;
    let walks = (1..=n_max)
        .into_par_iter()
        .map(|n| pull_back(map, &orbit, n, r))
        .collect::<Result<Vec<_>, _>>()?;
    let consistency = walks.iter().map(|w| w.1).fold(0.0, f64::max);
    let disks: Vec<PullbackDisk> = walks.into_iter().map(|w| w.0).collect();
    let center_drift = disks
        .iter()
        .map(|disk| (disk.center - z0).norm())
        .fold(0.0, f64::max);
    let qualifying_steps: Vec<usize> = disks
        .iter()
        .filter(|disk| disk.degree <= d_bound)
        .map(|disk| disk.step)
        .collect();
    let half = &disks[n_max / 2 - 1];
    let last = &disks[n_max - 1];
    let both = half.degree <= d_bound && last.degree <= d_bound;
    let certified = both && half.certified && last.certified && consistency < CONSISTENCY_TOL;
    let verdict = if certified && last.radius_upper < half.radius_upper {
        Verdict::ConicalCertified
    } else if both {
        Verdict::ConicalHeuristic
    } else {
        Verdict::NotDetected
    };
    Ok(ConicalVerdict {
        z0,
        r,
        d_bound,
        n_max,
        qualifying_steps,
        disks,
        verdict,
        certified: verdict == Verdict::ConicalCertified,
        consistency,
        center_drift,
    })
}

/// Return times to the first recurrent orbit point at which `|(f^n)'|` sets
/// a new maximum.
///
/// The anchor is the first `z_m` (`m >= 1`) that the orbit revisits within
/// `1e-9`; without an exact revisit it is the point of the closest return,
/// and returns are counted within four times that distance.
pub fn recurrent_maxima(points: &[Complex64], derivatives: &[Complex64]) -> Vec<usize> {
    let horizon = points.len().saturating_sub(1);
    let mut anchor = None;
    let mut closest = (f64::INFINITY, 1);
    'outer: for m in 1..=horizon / 2 {
        for n in m + 1..=horizon {
            let gap = (points[n] - points[m]).norm();
            if gap < RECURRENCE_TOL {
                anchor = Some((m, RECURRENCE_TOL));
                break 'outer;
            }
            if gap < closest.0 {
                closest = (gap, m);
            }
        }
    }
    let (m, tol) = anchor.unwrap_or((closest.1, 4.0 * closest.0));
    let Some(&x0) = points.get(m) else {
        return Vec::new();
    };
    let mut out = Vec::new();
    let mut best = 1.0;
    for n in m..=horizon {
        let size = derivatives[n].norm();
        if size > RESOLVABLE_DERIVATIVE || !size.is_finite() {
            break;
        }
        if (points[n] - x0).norm() <= tol && size > best {
            best = size;
            out.push(n);
        }
    }
    out
}

/// Orbit and derivatives `(f^n)'(z_0)` up to `horizon`, cut short once the
/// derivative is no longer resolvable.
fn orbit_and_derivatives(
    map: &UnicriticalMap,
    z0: Complex64,
    horizon: usize,
) -> Result<(Vec<Complex64>, Vec<Complex64>), ConicalError> {
    let radius = map.escape_radius();
    let mut points = Vec::with_capacity(horizon + 1);
    let mut derivatives = Vec::with_capacity(horizon + 1);
    let (mut z, mut derivative) = (z0, Complex64::new(1.0, 0.0));
    for n in 0..=horizon {
        points.push(z);
        derivatives.push(derivative);
        if derivative.norm() > RESOLVABLE_DERIVATIVE {
            break;
        }
        derivative *= map.derivative(z);
        z = map.apply(z);
        if z.norm() > radius {
            return Err(ConicalError::Escaped { iteration: n + 1 });
        }
    }
    Ok((points, derivatives))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadiusStability {
    pub radius: f64,
    /// Index into the rescaling sequence from which successive maps agree.
    pub depth: usize,
    pub n: usize,
    pub disagreement: f64,
    /// Agreement of the next pair, which should stay within twice the tolerance.
    pub next_disagreement: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lm1Report {
    pub z0: Complex64,
    pub times: Vec<usize>,
    pub radii: Vec<RadiusStability>,
    /// Full-plane convergence is not decidable at finite radius; this is evidence only.
    pub evidence: bool,
}

/// Evidence that `f^{n_k}(z0 + w / (f^{n_k})'(z0))` converges on growing disks.
pub fn lm1_test(
    map: &UnicriticalMap,
    z0: Complex64,
    radii: &[f64],
) -> Result<Lm1Report, ConicalError> {
    for &radius in radii {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(ConicalError::InvalidRadius(radius));
        }
    }
    check_in_julia(map, z0, JULIA_CHECK_CAP)?;
    let (points, derivatives) = orbit_and_derivatives(map, z0, LM1_HORIZON)?;
    let times = recurrent_maxima(&points, &derivatives);
    if times.len() < 3 {
        return Err(ConicalError::DerivativeNotGrowing {
            horizon: LM1_HORIZON,
        });
    }
    let reference = ReferenceOrbit::new(map.degree(), map.c(), points.clone(), Vec::new())?;
    let zero = Complex64::new(0.0, 0.0);
    let rescaled = |k: usize, w: Complex64| -> Option<Complex64> {
        let rho = 1.0 / derivatives[times[k]];
        reference
            .perturb(
                TrackedPoint {
                    z: rho * w,
                    dz: rho,
                },
                (zero, zero),
                times[k],
            )
            .map(|p| p.z)
            .filter(|z| z.re.is_finite() && z.im.is_finite())
    };
    let disagreement = |samples: &[Complex64], k: usize| -> f64 {
        samples
            .iter()
            .map(|&w| match (rescaled(k, w), rescaled(k + 1, w)) {
                (Some(a), Some(b)) => (a - b).norm() / b.norm().max(1.0),
                _ => f64::INFINITY,
            })
            .fold(0.0, f64::max)
    };
    let mut results = Vec::with_capacity(radii.len());
    for &radius in radii {
        let samples = polar_samples(radius, 6, 24);
        let mut last = f64::INFINITY;
        let mut found = None;
        for (k, &n) in times.iter().enumerate().take(times.len() - 2) {
            last = disagreement(&samples, k);
            if last < LM1_TOL {
                found = Some(RadiusStability {
                    radius,
                    depth: k,
                    n,
                    disagreement: last,
                    next_disagreement: disagreement(&samples, k + 1),
                });
                break;
            }
        }
        match found {
            Some(stability) => results.push(stability),
            None => {
                return Err(ConicalError::StabilizationFailed {
                    radius,
                    disagreement: last,
                })
            }
        }
    }
    Ok(Lm1Report {
        z0,
        evidence: results.iter().all(|s| s.next_disagreement <= 2.0 * LM1_TOL),
        times,
        radii: results,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperbolicityReport {
    pub c0: Complex64,
    /// Cluster representatives of the orbit after burn-in.
    pub omega_limit: Vec<Complex64>,
    /// First `n >= 1` with `f^n(c0)` within `1e-9` of a representative.
    pub landing_index: Option<usize>,
    pub kappa: f64,
    pub eta: f64,
    /// `kappa > 0` and `eta > 0` on every representative.
    pub expanding: bool,
    /// `min_{n>=1} |f^n(c0) - c0|` over the horizon.
    pub closest_return: f64,
    pub semi_hyperbolic: bool,
}

/// Clusters the orbit of `start` after `burn_in` and fits
/// `|(f^n)'(x)| >= kappa (1 + eta)^n` over the cluster representatives.
pub fn omega_limit_estimate(
    map: &UnicriticalMap,
    start: Complex64,
    burn_in: usize,
    horizon: usize,
    cluster_eps: f64,
) -> Result<HyperbolicityReport, ConicalError> {
    let horizon = horizon.max(burn_in + 1);
    let radius = map.escape_radius();
    let mut points = Vec::with_capacity(horizon + 1);
    let mut z = start;
    for n in 0..=horizon {
        points.push(z);
        z = map.apply(z);
        if z.norm() > radius {
            return Err(ConicalError::Escaped { iteration: n + 1 });
        }
    }
    let mut reps: Vec<Complex64> = Vec::new();
    for &z in &points[burn_in..] {
        if reps.len() < MAX_CLUSTERS && reps.iter().all(|x| (x - z).norm() > cluster_eps) {
            reps.push(z);
        }
    }
    let landing_index =
        (1..=horizon).find(|&n| reps.iter().any(|x| (points[n] - x).norm() <= LANDING_TOL));
    // log |(f^n)'(x)| for n = 1..=EXPANSION_WINDOW
    let growth: Vec<Vec<f64>> = reps
        .iter()
        .map(|&x| {
            let mut z = x;
            let mut total = 0.0;
            (0..EXPANSION_WINDOW)
                .map(|_| {
                    total += map.derivative(z).norm().ln();
                    z = map.apply(z);
                    total
                })
                .collect()
        })
        .collect();
    let rate = growth
        .iter()
        .map(|g| g[EXPANSION_WINDOW - 1] / EXPANSION_WINDOW as f64)
        .fold(f64::INFINITY, f64::min);
    let eta = rate.exp() - 1.0;
    let log_kappa = growth
        .iter()
        .flat_map(|g| {
            g.iter()
                .enumerate()
                .map(|(i, &lg)| lg - (i + 1) as f64 * rate)
        })
        .fold(0.0f64, f64::min);
    let kappa = log_kappa.exp();
    let expanding = eta > 0.0 && kappa > 0.0 && eta.is_finite();
    let closest_return = points[1..]
        .iter()
        .map(|z| (z - start).norm())
        .fold(f64::INFINITY, f64::min);
    Ok(HyperbolicityReport {
        c0: start,
        omega_limit: reps,
        landing_index,
        kappa,
        eta,
        expanding,
        closest_return,
        semi_hyperbolic: expanding && closest_return > crate::similarity::DEFAULT_SEPARATION,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeparationCheck {
    pub closest_return: f64,
    pub separation: f64,
    pub semi_hyperbolic: bool,
}

/// `min_{1 <= n <= horizon} |f^n(c0) - c0| > separation`.
pub fn semi_hyperbolic_test(
    map: &UnicriticalMap,
    c0: Complex64,
    horizon: usize,
    separation: f64,
) -> Result<SeparationCheck, ConicalError> {
    let radius = map.escape_radius();
    let mut z = c0;
    let mut closest = f64::INFINITY;
    for n in 1..=horizon {
        z = map.apply(z);
        if z.norm() > radius {
            return Err(ConicalError::Escaped { iteration: n });
        }
        closest = closest.min((z - c0).norm());
    }
    Ok(SeparationCheck {
        closest_return: closest,
        separation,
        semi_hyperbolic: closest > separation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn unit_circle_fixed_point() {
        let map = UnicriticalMap::quadratic(c(0.0, 0.0));
        let v = mm0_test(&map, c(1.0, 0.0), 0.5, 1, 60).unwrap();
        assert_eq!(v.verdict, Verdict::ConicalCertified);
        assert_eq!(v.qualifying_steps.len(), 60);
        assert!(v
            .disks
            .iter()
            .all(|d| d.certified && d.radius_lower <= d.radius_upper));
        assert!(v.consistency < 1e-8);
    }

    #[test]
    fn chebyshev_fixed_point() {
        let map = UnicriticalMap::quadratic(c(-2.0, 0.0));
        let v = mm0_test(&map, c(2.0, 0.0), 0.3, 1, 60).unwrap();
        assert_eq!(v.verdict, Verdict::ConicalCertified);
        assert!(v.disks[59].radius_upper < v.disks[29].radius_upper);
    }

    #[test]
    fn dendrite_cycle_point() {
        let map = UnicriticalMap::quadratic(c(0.0, 1.0));
        let v = mm0_test(&map, c(-1.0, 1.0), 0.3, 1, 60).unwrap();
        assert_eq!(v.verdict, Verdict::ConicalCertified);
    }

    #[test]
    fn large_disk_captures_critical_value() {
        // B(1, 1.5) contains c = 0, so the first pullback has degree 2
        let map = UnicriticalMap::quadratic(c(0.0, 0.0));
        let v = mm0_test(&map, c(1.0, 0.0), 1.5, 1, 10).unwrap();
        assert_eq!(v.verdict, Verdict::NotDetected);
        assert!(v.disks.iter().all(|d| d.degree >= 2 && !d.certified));
        // once uncertified, the crude enclosure keeps capturing c
        assert_eq!(v.disks[1].degree, 4);
        assert_eq!(v.qualifying_steps, Vec::<usize>::new());
    }

    #[test]
    fn interior_point_rejected() {
        let map = UnicriticalMap::quadratic(c(0.0, 0.0));
        assert!(matches!(
            mm0_test(&map, c(0.3, 0.0), 0.1, 1, 10),
            Err(ConicalError::NotInJulia { .. })
        ));
        assert!(matches!(
            mm0_test(&map, c(1.5, 0.0), 0.1, 1, 10),
            Err(ConicalError::Escaped { .. })
        ));
        assert!(matches!(
            lm1_test(&map, c(0.3, 0.0), &DEFAULT_RADII),
            Err(ConicalError::NotInJulia { .. })
        ));
    }

    #[test]
    fn lm1_exponential_limit() {
        let map = UnicriticalMap::quadratic(c(0.0, 0.0));
        let report = lm1_test(&map, c(1.0, 0.0), &[1.0, 2.0, 4.0, 8.0]).unwrap();
        assert!(report.evidence);
        // the limit is exp(w)
        let n = 60;
        let rho = 0.5f64.powi(n);
        let reference = ReferenceOrbit::new(
            2,
            c(0.0, 0.0),
            vec![c(1.0, 0.0); n as usize + 1],
            Vec::new(),
        )
        .unwrap();
        let w = c(0.7, -1.1);
        let value = reference
            .perturb(
                TrackedPoint {
                    z: w * rho,
                    dz: c(rho, 0.0),
                },
                (c(0.0, 0.0), c(0.0, 0.0)),
                n as usize,
            )
            .unwrap()
            .z;
        assert!((value - w.exp()).norm() < 1e-9);
    }

    #[test]
    fn lm1_dendrite_critical_value() {
        let map = UnicriticalMap::quadratic(c(0.0, 1.0));
        let report = lm1_test(&map, c(0.0, 1.0), &[0.5, 1.0, 2.0]).unwrap();
        assert!(report.evidence);
        assert_eq!(report.times[..3], [1, 3, 5]);
    }

    #[test]
    fn omega_limits() {
        let map = UnicriticalMap::quadratic(c(0.0, 1.0));
        let report = omega_limit_estimate(&map, c(0.0, 1.0), 10, 200, 1e-6).unwrap();
        assert_eq!(report.omega_limit.len(), 2);
        assert!(report
            .omega_limit
            .iter()
            .any(|x| (x - c(-1.0, 1.0)).norm() < 1e-12));
        assert!(report
            .omega_limit
            .iter()
            .any(|x| (x - c(0.0, -1.0)).norm() < 1e-12));
        assert_eq!(report.landing_index, Some(1));
        assert!(report.semi_hyperbolic);

        let map = UnicriticalMap::quadratic(c(-2.0, 0.0));
        let report = omega_limit_estimate(&map, c(-2.0, 0.0), 10, 200, 1e-6).unwrap();
        assert_eq!(report.omega_limit, vec![c(2.0, 0.0)]);
        assert_eq!(report.landing_index, Some(1));
        assert!((report.eta - 3.0).abs() < 1e-12 && (report.kappa - 1.0).abs() < 1e-12);

        let map = UnicriticalMap::quadratic(c(-1.0, 0.0));
        let report = omega_limit_estimate(&map, c(-1.0, 0.0), 10, 200, 1e-6).unwrap();
        assert_eq!(report.omega_limit.len(), 2);
        assert!(!report.expanding && !report.semi_hyperbolic);
    }

    #[test]
    fn separation_examples() {
        let check = |c0: Complex64| {
            semi_hyperbolic_test(&UnicriticalMap::quadratic(c0), c0, 10_000, 1e-3).unwrap()
        };
        let i = check(c(0.0, 1.0));
        assert!(i.semi_hyperbolic);
        assert!((i.closest_return - 1.0).abs() < 1e-12);
        assert!((check(c(-2.0, 0.0)).closest_return - 4.0).abs() < 1e-12);
        assert!(!check(c(-1.4011551890920505, 0.0)).semi_hyperbolic);
        assert!(semi_hyperbolic_test(
            &UnicriticalMap::quadratic(c(1.0, 0.0)),
            c(1.0, 0.0),
            100,
            1e-3
        )
        .is_err());
    }
}
