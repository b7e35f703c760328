//! Forward dynamics of the unicritical family `f_c(z) = z^d + c`.
//!
//! Everything here is a pure function of its inputs. Orbits that leave the
//! overflow guard are reported as [`DynError::Overflow`]; non-finite values
//! are never handed back to the caller.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Moduli above this are treated as escaped before the next power is taken.
pub const OVERFLOW_GUARD: f64 = 1e150;

/// Bailout used when a distance estimate is wanted. Large enough that
/// `|z| ln|z| / |z'|` is within a few percent of its limit.
pub const ESTIMATE_BAILOUT: f64 = 1e8;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum DynError {
    #[error("degree must be at least 2, got {0}")]
    InvalidDegree(u32),
    #[error("parameter is not finite: {0}")]
    NonFinite(Complex64),
    #[error("orbit exceeded the overflow guard at step {step}")]
    Overflow { step: usize },
}

/// The polynomial `z^d + c`. Its only finite critical point is 0 and the
/// critical value is `c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnicriticalMap {
    degree: u32,
    c: Complex64,
}

impl UnicriticalMap {
    pub fn new(degree: u32, c: Complex64) -> Result<Self, DynError> {
        check_degree(degree)?;
        if !(c.re.is_finite() && c.im.is_finite()) {
            return Err(DynError::NonFinite(c));
        }
        Ok(Self { degree, c })
    }

    /// `z^2 + c`.
    pub fn quadratic(c: Complex64) -> Self {
        Self::new(2, c).expect("finite quadratic parameter")
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn c(&self) -> Complex64 {
        self.c
    }

    #[inline]
    pub fn apply(&self, z: Complex64) -> Complex64 {
        power(z, self.degree) + self.c
    }

    #[inline]
    pub fn derivative(&self, z: Complex64) -> Complex64 {
        f64::from(self.degree) * power(z, self.degree - 1)
    }

    pub fn escape_radius(&self) -> f64 {
        escape_radius(self.degree, self.c)
    }
}

pub(crate) fn check_degree(degree: u32) -> Result<(), DynError> {
    if degree < 2 {
        Err(DynError::InvalidDegree(degree))
    } else {
        Ok(())
    }
}

/// `z^n` by repeated squaring; `n = 0` gives 1.
#[inline]
pub fn power(z: Complex64, n: u32) -> Complex64 {
    match n {
        0 => Complex64::new(1.0, 0.0),
        1 => z,
        2 => z * z,
        _ => z.powu(n),
    }
}

/// Returns `(z^d, d z^{d-1})`.
#[inline]
fn power_and_slope(z: Complex64, degree: u32) -> (Complex64, Complex64) {
    let lower = power(z, degree - 1);
    (lower * z, f64::from(degree) * lower)
}

/// Radius beyond which every orbit of `z^d + c` tends to infinity:
/// `max(|c|, 2, 2^{1/(d-1)})`.
pub fn escape_radius(degree: u32, c: Complex64) -> f64 {
    let root = 2f64.powf(1.0 / f64::from(degree.saturating_sub(1).max(1)));
    c.norm().max(2.0).max(root)
}

/// Overflow guard adjusted so that `guard^d` stays finite.
pub fn overflow_guard(degree: u32) -> f64 {
    OVERFLOW_GUARD.min(10f64.powf(300.0 / f64::from(degree)))
}

/// `f_c^n(z)`.
pub fn iterate(map: &UnicriticalMap, z: Complex64, n: usize) -> Result<Complex64, DynError> {
    let guard = overflow_guard(map.degree);
    let mut z = z;
    for step in 0..n {
        if z.norm() > guard {
            return Err(DynError::Overflow { step });
        }
        z = map.apply(z);
    }
    Ok(z)
}

/// Orbit `z_0, ..., z_n` together with the chain-rule product
/// `(f^n)'(z_0) = prod_{j<n} f'(z_j)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitTrace {
    pub points: Vec<Complex64>,
    pub derivative: Complex64,
    /// First index whose modulus exceeds the escape radius.
    pub escaped_at: Option<usize>,
}

pub fn orbit_with_derivative(
    map: &UnicriticalMap,
    z: Complex64,
    n: usize,
) -> Result<OrbitTrace, DynError> {
    let guard = overflow_guard(map.degree);
    let radius = map.escape_radius();
    let mut points = Vec::with_capacity(n + 1);
    let mut derivative = Complex64::new(1.0, 0.0);
    let mut escaped_at = None;
    let mut z = z;
    points.push(z);
    for step in 0..n {
        if escaped_at.is_none() && z.norm() > radius {
            escaped_at = Some(step);
        }
        if z.norm() > guard || derivative.norm() > OVERFLOW_GUARD {
            return Err(DynError::Overflow { step });
        }
        let (next, slope) = power_and_slope(z, map.degree);
        derivative *= slope;
        z = next + map.c;
        points.push(z);
    }
    if escaped_at.is_none() && z.norm() > radius {
        escaped_at = Some(n);
    }
    Ok(OrbitTrace {
        points,
        derivative,
        escaped_at,
    })
}

/// `f_c^n(c)` and its derivative with respect to `c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamTrace {
    pub value: Complex64,
    pub derivative: Complex64,
}

/// Forward-mode recurrence `z_{k+1} = z_k^d + c`, `z'_{k+1} = d z_k^{d-1} z'_k + 1`
/// started from `z_0 = c`, `z'_0 = 1`.
pub fn param_orbit_with_derivative(
    degree: u32,
    c: Complex64,
    n: usize,
) -> Result<ParamTrace, DynError> {
    check_degree(degree)?;
    let guard = overflow_guard(degree);
    let one = Complex64::new(1.0, 0.0);
    let mut z = c;
    let mut dz = one;
    for step in 0..n {
        if z.norm() > guard || dz.norm() > OVERFLOW_GUARD {
            return Err(DynError::Overflow { step });
        }
        let (next, slope) = power_and_slope(z, degree);
        dz = slope * dz + one;
        z = next + c;
    }
    Ok(ParamTrace {
        value: z,
        derivative: dz,
    })
}

/// Outcome of a bounded-orbit test. `Bounded` only means "not escaped within
/// `cap` iterations"; callers building sets treat it as membership at the
/// current resolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Membership {
    Escaped { iteration: usize },
    Bounded { cap: usize },
}

impl Membership {
    pub fn is_bounded(&self) -> bool {
        matches!(self, Membership::Bounded { .. })
    }
}

/// Escape test for the critical orbit `f_c^n(c)`, `0 <= n <= cap`.
pub fn mandelbrot_membership(degree: u32, c: Complex64, cap: usize) -> Membership {
    let radius = escape_radius(degree, c);
    let mut z = c;
    for n in 0..=cap {
        if z.norm() > radius {
            return Membership::Escaped { iteration: n };
        }
        if n < cap {
            z = power(z, degree) + c;
        }
    }
    Membership::Bounded { cap }
}

/// Escape test for `f_c^n(z)`, `0 <= n <= cap`.
pub fn julia_membership(map: &UnicriticalMap, z: Complex64, cap: usize) -> Membership {
    let radius = map.escape_radius();
    let mut z = z;
    for n in 0..=cap {
        if z.norm() > radius {
            return Membership::Escaped { iteration: n };
        }
        if n < cap {
            z = map.apply(z);
        }
    }
    Membership::Bounded { cap }
}

/// `f(0), f^2(0), ..., f^depth(0)`, cut after the first point beyond the
/// escape radius.
pub fn postcritical_orbit(map: &UnicriticalMap, depth: usize) -> Vec<Complex64> {
    let radius = map.escape_radius();
    let mut out = Vec::with_capacity(depth);
    let mut z = Complex64::new(0.0, 0.0);
    for _ in 0..depth {
        z = map.apply(z);
        out.push(z);
        if z.norm() > radius {
            break;
        }
    }
    out
}

/// Membership together with the Green's-function distance estimate
/// `|z_n| ln|z_n| / |dz_n|`, expressed in the coordinate `dz` is taken against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EscapeOutcome {
    pub membership: Membership,
    pub distance_estimate: Option<f64>,
}

/// Point of an orbit plus its derivative with respect to a sampling coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackedPoint {
    pub z: Complex64,
    pub dz: Complex64,
}

/// Continues the orbit of `state` (already at iteration index `start`) under
/// `z^d + c`, adding `dc` to the derivative each step (`dc = 0` in the
/// dynamical plane, `dc = dc/dw` in parameter space).
pub fn continue_escape(
    degree: u32,
    c: Complex64,
    dc: Complex64,
    state: TrackedPoint,
    start: usize,
    cap: usize,
) -> EscapeOutcome {
    let radius = escape_radius(degree, c);
    let TrackedPoint { mut z, mut dz } = state;
    let mut n = start;
    while n <= cap {
        if z.norm() > radius {
            let estimate = finish_estimate(degree, c, dc, z, dz);
            return EscapeOutcome {
                membership: Membership::Escaped { iteration: n },
                distance_estimate: estimate,
            };
        }
        if n == cap {
            break;
        }
        let (next, slope) = power_and_slope(z, degree);
        dz = slope * dz + dc;
        z = next + c;
        n += 1;
    }
    EscapeOutcome {
        membership: Membership::Bounded { cap },
        distance_estimate: None,
    }
}

fn finish_estimate(
    degree: u32,
    c: Complex64,
    dc: Complex64,
    mut z: Complex64,
    mut dz: Complex64,
) -> Option<f64> {
    let guard = overflow_guard(degree);
    // The escape radius is reached long before the bailout; a handful of
    // extra steps is enough.
    for _ in 0..64 {
        if z.norm() > ESTIMATE_BAILOUT {
            break;
        }
        let (next, slope) = power_and_slope(z, degree);
        dz = slope * dz + dc;
        z = next + c;
        if z.norm() > guard {
            return None;
        }
    }
    let modulus = z.norm();
    let slope = dz.norm();
    if slope == 0.0 || !slope.is_finite() {
        return None;
    }
    Some(modulus * modulus.ln() / slope)
}

/// Julia-set distance estimate at `z`, in dynamical-plane units.
pub fn julia_distance_estimate(map: &UnicriticalMap, z: Complex64, cap: usize) -> EscapeOutcome {
    continue_escape(
        map.degree,
        map.c,
        Complex64::new(0.0, 0.0),
        TrackedPoint {
            z,
            dz: Complex64::new(1.0, 0.0),
        },
        0,
        cap,
    )
}

/// Mandelbrot-set distance estimate at `c`, in parameter-plane units.
pub fn mandelbrot_distance_estimate(degree: u32, c: Complex64, cap: usize) -> EscapeOutcome {
    let one = Complex64::new(1.0, 0.0);
    continue_escape(degree, c, one, TrackedPoint { z: c, dz: one }, 0, cap)
}

/// Reference orbit `Z_0, Z_1, ...` of `z^d + c`, given as a finite prefix
/// followed by an optional cycle repeated forever.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceOrbit {
    degree: u32,
    c: Complex64,
    prefix: Vec<Complex64>,
    cycle: Vec<Complex64>,
}

impl ReferenceOrbit {
    pub fn new(
        degree: u32,
        c: Complex64,
        prefix: Vec<Complex64>,
        cycle: Vec<Complex64>,
    ) -> Result<Self, DynError> {
        check_degree(degree)?;
        Ok(Self {
            degree,
            c,
            prefix,
            cycle,
        })
    }

    /// Length of the known orbit, or `None` when it continues periodically.
    pub fn len(&self) -> Option<usize> {
        if self.cycle.is_empty() {
            Some(self.prefix.len())
        } else {
            None
        }
    }

    pub fn is_empty(&self) -> bool {
        self.prefix.is_empty() && self.cycle.is_empty()
    }

    pub fn c(&self) -> Complex64 {
        self.c
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    /// `Z_n`, if known.
    pub fn at(&self, n: usize) -> Option<Complex64> {
        if n < self.prefix.len() {
            Some(self.prefix[n])
        } else if self.cycle.is_empty() {
            None
        } else {
            Some(self.cycle[(n - self.prefix.len()) % self.cycle.len()])
        }
    }

    /// Follows `Z_0 + delta` for `steps` iterations of `z^d + (c + dc)`
    /// using the cancellation-free difference
    /// `(Z + delta)^d - Z^d = delta * sum_j (Z + delta)^j Z^{d-1-j}`.
    ///
    /// `state` carries `delta` and its derivative in the sampling coordinate;
    /// `param_offset` is `(c - c_ref, d(c - c_ref)/dw)`.
    pub fn perturb(
        &self,
        state: TrackedPoint,
        param_offset: (Complex64, Complex64),
        steps: usize,
    ) -> Option<TrackedPoint> {
        match self.perturb_until(state, param_offset, steps, f64::INFINITY)? {
            (n, point) if n == steps => Some(point),
            _ => None,
        }
    }

    /// As [`ReferenceOrbit::perturb`], but stops at the first index `n` whose
    /// full point `Z_n + delta_n` has modulus above `radius`. Returns that
    /// index (or `steps`) with the full point and its derivative.
    pub fn perturb_until(
        &self,
        state: TrackedPoint,
        param_offset: (Complex64, Complex64),
        steps: usize,
        radius: f64,
    ) -> Option<(usize, TrackedPoint)> {
        let (dc, dc_dw) = param_offset;
        let TrackedPoint {
            z: mut delta,
            dz: mut ddelta,
        } = state;
        for n in 0..steps {
            let base = self.at(n)?;
            let full = base + delta;
            if full.norm() > radius {
                return Some((
                    n,
                    TrackedPoint {
                        z: full,
                        dz: ddelta,
                    },
                ));
            }
            let mut sum = Complex64::new(0.0, 0.0);
            let mut full_pow = Complex64::new(1.0, 0.0);
            for j in 0..self.degree {
                sum += full_pow * power(base, self.degree - 1 - j);
                full_pow *= full;
            }
            let slope = f64::from(self.degree) * power(full, self.degree - 1);
            ddelta = slope * ddelta + dc_dw;
            delta = delta * sum + dc;
            if !(delta.re.is_finite() && delta.im.is_finite()) {
                return None;
            }
        }
        Some((
            steps,
            TrackedPoint {
                z: self.at(steps)? + delta,
                dz: ddelta,
            },
        ))
    }
}
