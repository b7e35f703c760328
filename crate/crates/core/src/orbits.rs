//! Periodic points, multipliers and Poincaré linearizers.
//!
//! A [`PoincareChart`] evaluates the entire function `phi` with
//! `phi(lambda w) = f^p(phi(w))`, `phi(0) = a`, `phi'(0) = 1` at a repelling
//! point `a` of period `p`. Evaluation is `f^{kp}(S(w / lambda^k))` where `S` is
//! the Koenigs power series of `phi` truncated at [`SERIES_ORDER`]; with the
//! linear truncation this is the classical limit `f^{kp}(a + w / lambda^k)`.
//! The higher-order start keeps `k` small, so rounding is not amplified by
//! `|lambda|^k` past what the certificate tolerance allows.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{self, DynError, ReferenceOrbit, TrackedPoint, UnicriticalMap};

pub const NEWTON_STEP_TOL: f64 = 1e-13;
pub const NEWTON_MAX_STEPS: usize = 64;
pub const RESIDUAL_TOL: f64 = 1e-12;
pub const MINIMALITY_TOL: f64 = 1e-9;
pub const INDIFFERENT_BAND: f64 = 1e-6;
pub const SUPERATTRACTING_TOL: f64 = 1e-9;
pub const CHART_TOL: f64 = 1e-10;
pub const SERIES_ORDER: usize = 16;
pub const MAX_CHART_ITERATIONS: usize = 1 << 20;
pub const LANDING_HORIZON: usize = 200;
pub const REVISIT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OrbitError {
    #[error(transparent)]
    Dynamics(#[from] DynError),
    #[error("period must be at least 1")]
    InvalidPeriod,
    #[error("Newton iteration did not converge in {steps} steps (residual {residual:e})")]
    NoConvergence { steps: usize, residual: f64 },
    #[error("Newton iterate left the filled-in region at step {step}")]
    EscapedBasin { step: usize },
    #[error("Newton derivative vanished")]
    SingularStep,
    #[error("requested period {requested} but the point has period {actual}")]
    NonMinimalPeriod { requested: usize, actual: usize },
    #[error("cycle is not repelling (multiplier {multiplier})")]
    NotRepelling { multiplier: Complex64 },
    #[error("chart depth could not be certified (best disagreement {disagreement:e})")]
    ChartNotCertified { disagreement: f64 },
    #[error("|w| = {modulus} exceeds chart radius {radius}")]
    OutsideDomain { modulus: f64, radius: f64 },
    #[error("chart depth insufficient at this point (disagreement {disagreement:e})")]
    DepthInsufficient { disagreement: f64 },
    #[error("critical orbit is periodic with period {period}: not preperiodic (superattracting)")]
    PeriodicCriticalOrbit { period: usize },
    #[error("critical orbit is not preperiodic within {horizon} iterations")]
    NoLanding { horizon: usize },
    #[error("critical orbit escapes at iteration {iteration}")]
    CriticalOrbitEscapes { iteration: usize },
    #[error("landing derivative vanishes: critical point collides with the orbit")]
    DegenerateLanding,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CycleKind {
    Repelling,
    Attracting,
    Superattracting,
    Indifferent,
}

impl CycleKind {
    pub fn classify(multiplier: Complex64) -> Self {
        let modulus = multiplier.norm();
        if modulus < SUPERATTRACTING_TOL {
            CycleKind::Superattracting
        } else if (modulus - 1.0).abs() < INDIFFERENT_BAND {
            CycleKind::Indifferent
        } else if modulus > 1.0 {
            CycleKind::Repelling
        } else {
            CycleKind::Attracting
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodicOrbit {
    pub point: Complex64,
    pub period: usize,
    pub multiplier: Complex64,
    pub kind: CycleKind,
    /// `|f^p(point) - point|` at the returned point.
    pub residual: f64,
}

impl PeriodicOrbit {
    /// All points of the cycle, starting at `point`.
    pub fn cycle(&self, map: &UnicriticalMap) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(self.period);
        let mut z = self.point;
        for _ in 0..self.period {
            out.push(z);
            z = map.apply(z);
        }
        out
    }
}

fn divisors_below(n: usize) -> impl Iterator<Item = usize> {
    (1..n).filter(move |&q| n.is_multiple_of(q))
}

/// Newton's method on `f^p(z) - z` from `seed`.
pub fn find_periodic(
    map: &UnicriticalMap,
    period: usize,
    seed: Complex64,
) -> Result<PeriodicOrbit, OrbitError> {
    if period == 0 {
        return Err(OrbitError::InvalidPeriod);
    }
    let radius = map.escape_radius();
    let one = Complex64::new(1.0, 0.0);
    let mut z = seed;
    let mut converged = false;
    let mut steps = 0;
    while steps < NEWTON_MAX_STEPS {
        let trace = dynamics::orbit_with_derivative(map, z, period)?;
        let value = trace.points[period] - z;
        let slope = trace.derivative - one;
        if slope.norm() == 0.0 {
            return Err(OrbitError::SingularStep);
        }
        let step = value / slope;
        z -= step;
        steps += 1;
        if !(z.re.is_finite() && z.im.is_finite()) || z.norm() > 2.0 * radius {
            return Err(OrbitError::EscapedBasin { step: steps });
        }
        if step.norm() < NEWTON_STEP_TOL * z.norm().max(1.0) {
            converged = true;
            break;
        }
    }
    let trace = dynamics::orbit_with_derivative(map, z, period)?;
    let residual = (trace.points[period] - z).norm();
    let multiplier = trace.derivative;
    // Attainable residual grows with the conditioning of f^p near the cycle.
    let allowed = RESIDUAL_TOL * multiplier.norm().max(1.0);
    if !converged || residual >= allowed {
        return Err(OrbitError::NoConvergence { steps, residual });
    }
    for q in divisors_below(period) {
        let back = dynamics::iterate(map, z, q)?;
        if (back - z).norm() < MINIMALITY_TOL {
            return Err(OrbitError::NonMinimalPeriod {
                requested: period,
                actual: q,
            });
        }
    }
    Ok(PeriodicOrbit {
        point: z,
        period,
        multiplier,
        kind: CycleKind::classify(multiplier),
        residual,
    })
}

// Truncated power series helpers; index = degree of the monomial.

fn series_mul(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let order = a.len().min(b.len());
    let mut out = vec![Complex64::new(0.0, 0.0); order];
    for (i, &x) in a.iter().enumerate().take(order) {
        if x == Complex64::new(0.0, 0.0) {
            continue;
        }
        for (j, &y) in b.iter().enumerate().take(order - i) {
            out[i + j] += x * y;
        }
    }
    out
}

fn series_pow(a: &[Complex64], n: u32) -> Vec<Complex64> {
    let mut result = vec![Complex64::new(0.0, 0.0); a.len()];
    result[0] = Complex64::new(1.0, 0.0);
    let mut base = a.to_vec();
    let mut n = n;
    while n > 0 {
        if n & 1 == 1 {
            result = series_mul(&result, &base);
        }
        n >>= 1;
        if n > 0 {
            base = series_mul(&base, &base);
        }
    }
    result
}

/// Coefficients `b_0 = a, b_1 = 1, b_2, ...` of the linearizer at a repelling
/// cycle point, from `phi(lambda u) = f^p(phi(u))` solved order by order.
fn koenigs_coefficients(
    map: &UnicriticalMap,
    orbit: &PeriodicOrbit,
    order: usize,
) -> Vec<Complex64> {
    let zero = Complex64::new(0.0, 0.0);
    let len = order + 1;
    let mut coeffs = vec![zero; len];
    coeffs[0] = orbit.point;
    coeffs[1] = Complex64::new(1.0, 0.0);
    let lambda = orbit.multiplier;
    for j in 2..len {
        let mut s: Vec<Complex64> = coeffs[..=j].to_vec();
        s[j] = zero;
        for _ in 0..orbit.period {
            s = series_pow(&s, map.degree());
            s[0] += map.c();
        }
        coeffs[j] = s[j] / (lambda.powu(j as u32) - lambda);
    }
    coeffs
}

/// Certified Poincaré linearizer at a repelling periodic point.
#[derive(Debug, Clone, PartialEq)]
pub struct PoincareChart {
    map: UnicriticalMap,
    base: PeriodicOrbit,
    depth: usize,
    domain_radius: f64,
    coefficients: Vec<Complex64>,
    reference: ReferenceOrbit,
    /// Largest depth-`k` vs depth-`k+1` disagreement seen while certifying.
    certificate: f64,
}

impl PoincareChart {
    /// Picks the smallest depth `k >= 1` whose values agree with depth `k + 1`
    /// within [`CHART_TOL`] on a polar sample of `|w| <= domain_radius`.
    pub fn build(
        map: &UnicriticalMap,
        base: PeriodicOrbit,
        domain_radius: f64,
    ) -> Result<Self, OrbitError> {
        if base.kind != CycleKind::Repelling {
            return Err(OrbitError::NotRepelling {
                multiplier: base.multiplier,
            });
        }
        let coefficients = koenigs_coefficients(map, &base, SERIES_ORDER);
        let reference = ReferenceOrbit::new(map.degree(), map.c(), vec![], base.cycle(map))?;
        let mut chart = Self {
            map: *map,
            base,
            depth: 1,
            domain_radius,
            coefficients,
            reference,
            certificate: f64::INFINITY,
        };
        let samples = polar_samples(domain_radius, 6, 24);
        let mut best = f64::INFINITY;
        while chart.depth * base.period <= MAX_CHART_ITERATIONS {
            let mut worst = 0f64;
            for &w in &samples {
                let here = chart.eval_at_depth(w, chart.depth);
                let next = chart.eval_at_depth(w, chart.depth + 1);
                let gap = match (here, next) {
                    (Some(a), Some(b)) => (a - b).norm(),
                    _ => f64::INFINITY,
                };
                worst = worst.max(gap);
            }
            best = best.min(worst);
            if worst < CHART_TOL {
                chart.certificate = worst;
                return Ok(chart);
            }
            // Once the series start is exact to rounding, deeper charts only
            // amplify rounding; give up after a few non-improving depths.
            if chart.depth > 8 && worst > 4.0 * best {
                break;
            }
            chart.depth += 1;
        }
        Err(OrbitError::ChartNotCertified { disagreement: best })
    }

    /// Convenience: solve the cycle from `seed` and build its chart.
    pub fn at_cycle(
        map: &UnicriticalMap,
        period: usize,
        seed: Complex64,
        domain_radius: f64,
    ) -> Result<Self, OrbitError> {
        let base = find_periodic(map, period, seed)?;
        Self::build(map, base, domain_radius)
    }

    pub fn base(&self) -> &PeriodicOrbit {
        &self.base
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn domain_radius(&self) -> f64 {
        self.domain_radius
    }

    pub fn certificate(&self) -> f64 {
        self.certificate
    }

    pub fn map(&self) -> &UnicriticalMap {
        &self.map
    }

    /// Koenigs coefficients `b_0, b_1, ...` of the linearizer.
    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }

    fn eval_at_depth(&self, w: Complex64, depth: usize) -> Option<Complex64> {
        let u = w / self.base.multiplier.powu(depth as u32);
        // Horner on the series without its constant term.
        let mut offset = Complex64::new(0.0, 0.0);
        for &b in self.coefficients[1..].iter().rev() {
            offset = (offset + b) * u;
        }
        let steps = depth * self.base.period;
        self.reference
            .perturb(
                TrackedPoint {
                    z: offset,
                    dz: Complex64::new(0.0, 0.0),
                },
                (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)),
                steps,
            )
            .map(|p| p.z)
    }
}

/// `phi(w)` at the chart's certified depth.
pub fn poincare_eval(chart: &PoincareChart, w: Complex64) -> Result<Complex64, OrbitError> {
    let modulus = w.norm();
    if modulus > chart.domain_radius * (1.0 + 1e-12) {
        return Err(OrbitError::OutsideDomain {
            modulus,
            radius: chart.domain_radius,
        });
    }
    let here = chart.eval_at_depth(w, chart.depth);
    let next = chart.eval_at_depth(w, chart.depth + 1);
    match (here, next) {
        (Some(a), Some(b)) => {
            let disagreement = (a - b).norm();
            if disagreement > CHART_TOL {
                Err(OrbitError::DepthInsufficient { disagreement })
            } else {
                Ok(a)
            }
        }
        _ => Err(OrbitError::DepthInsufficient {
            disagreement: f64::INFINITY,
        }),
    }
}

pub(crate) fn polar_samples(radius: f64, rings: usize, spokes: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0)];
    for ring in 1..=rings {
        let r = radius * ring as f64 / rings as f64;
        for spoke in 0..spokes {
            let angle = std::f64::consts::TAU * spoke as f64 / spokes as f64;
            out.push(Complex64::from_polar(r, angle));
        }
    }
    out
}

/// Constants of a Misiurewicz parameter: `f^l(c0) = a0` lies on a repelling
/// cycle of period `p`, `A0 = (f^l)'(c0)`, `lambda0 = (f^p)'(a0)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MisiurewiczData {
    pub degree: u32,
    pub c0: Complex64,
    /// Arrival time `l >= 1`.
    pub preperiod: usize,
    pub period: usize,
    /// `a0 = f^l(c0)`, refined as an exact cycle point.
    pub landing_point: Complex64,
    /// `A0 = (f^l)'(c0)`.
    pub landing_derivative: Complex64,
    /// `lambda0 = (f^p)'(a0)`.
    pub multiplier: Complex64,
    /// `c0, f(c0), ..., f^{l-1}(c0)`.
    pub prefix: Vec<Complex64>,
    /// `a0, f(a0), ..., f^{p-1}(a0)`.
    pub cycle: Vec<Complex64>,
}

impl MisiurewiczData {
    pub fn map(&self) -> UnicriticalMap {
        UnicriticalMap::new(self.degree, self.c0).expect("validated on construction")
    }

    /// Critical-value orbit with the landing made exact: the prefix followed by
    /// the refined cycle.
    pub fn reference_orbit(&self) -> ReferenceOrbit {
        ReferenceOrbit::new(
            self.degree,
            self.c0,
            self.prefix.clone(),
            self.cycle.clone(),
        )
        .expect("validated on construction")
    }

    /// `n_k = l + k p`.
    pub fn rescaling_time(&self, k: usize) -> usize {
        self.preperiod + k * self.period
    }

    /// `rho_k = 1 / (A0 lambda0^k)`.
    pub fn rescaling_factor(&self, k: usize) -> Complex64 {
        1.0 / (self.landing_derivative * self.multiplier.powu(k as u32))
    }

    /// The linearizer at `a0`, whose restriction this parameter's rescaling
    /// limit equals.
    pub fn poincare_chart(&self, domain_radius: f64) -> Result<PoincareChart, OrbitError> {
        let map = self.map();
        let base = PeriodicOrbit {
            point: self.landing_point,
            period: self.period,
            multiplier: self.multiplier,
            kind: CycleKind::classify(self.multiplier),
            residual: 0.0,
        };
        PoincareChart::build(&map, base, domain_radius)
    }
}

pub fn misiurewicz_data(degree: u32, c0: Complex64) -> Result<MisiurewiczData, OrbitError> {
    let map = UnicriticalMap::new(degree, c0)?;
    let radius = map.escape_radius();
    let mut points = vec![c0];
    let mut revisit = None;
    'scan: for m in 1..=LANDING_HORIZON {
        let z = map.apply(points[m - 1]);
        if z.norm() > radius {
            return Err(OrbitError::CriticalOrbitEscapes { iteration: m });
        }
        points.push(z);
        if let Some(j) = points[..m]
            .iter()
            .position(|p| (z - p).norm() < REVISIT_TOL)
        {
            revisit = Some((j, m - j));
            break 'scan;
        }
    }
    let (mut preperiod, period) = revisit.ok_or(OrbitError::NoLanding {
        horizon: LANDING_HORIZON,
    })?;
    while preperiod > 0
        && (points[preperiod - 1] - points[preperiod - 1 + period]).norm() < REVISIT_TOL
    {
        preperiod -= 1;
    }
    if preperiod == 0 {
        return Err(OrbitError::PeriodicCriticalOrbit { period });
    }

    let cycle_orbit = find_periodic(&map, period, points[preperiod])?;
    if cycle_orbit.kind != CycleKind::Repelling {
        return Err(OrbitError::NotRepelling {
            multiplier: cycle_orbit.multiplier,
        });
    }
    let landing_derivative = points[..preperiod]
        .iter()
        .fold(Complex64::new(1.0, 0.0), |acc, &z| acc * map.derivative(z));
    if landing_derivative.norm() < 1e-12 {
        return Err(OrbitError::DegenerateLanding);
    }
    Ok(MisiurewiczData {
        degree,
        c0,
        preperiod,
        period,
        landing_point: cycle_orbit.point,
        landing_derivative,
        multiplier: cycle_orbit.multiplier,
        prefix: points[..preperiod].to_vec(),
        cycle: cycle_orbit.cycle(&map),
    })
}
