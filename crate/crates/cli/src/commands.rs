use anyhow::anyhow;
use serde::Serialize;
use zalcman::census::{
    find_superattracting_centers, thm1_sequence, CensusError, CensusReport, SequenceMode,
};
use zalcman::conical::{
    lm1_test, mm0_test, semi_hyperbolic_test, Lm1Report, SeparationCheck, Verdict,
};
use zalcman::dynamics::{
    julia_distance_estimate, mandelbrot_distance_estimate, EscapeOutcome, UnicriticalMap,
};
use zalcman::orbits::{misiurewicz_data, poincare_eval, PoincareChart};
use zalcman::sets::{Frame, GridSet};
use zalcman::similarity::similarity_report;
use zalcman::Complex64;

use crate::config::*;
use crate::output::{comparison_panel, OutDir};
use crate::Failure;

fn compute(err: impl Into<anyhow::Error>) -> Failure {
    Failure::Compute(err.into())
}

fn map(degree: u32, c: Complex64) -> Result<UnicriticalMap, Failure> {
    UnicriticalMap::new(degree, c).map_err(|e| Failure::Config(e.into()))
}

/// Boundary band: escaping cells whose distance estimate is within one cell,
/// plus bounded cells with an escaping 4-neighbour.
fn boundary_band(frame: &Frame, outcomes: &[EscapeOutcome]) -> Vec<bool> {
    let n = frame.resolution;
    let h = frame.spacing();
    let bounded: Vec<bool> = outcomes.iter().map(|o| o.membership.is_bounded()).collect();
    (0..n * n)
        .map(|i| {
            let (row, col) = (i / n, i % n);
            if bounded[i] {
                let neighbours = [
                    (row > 0).then(|| i - n),
                    (row + 1 < n).then(|| i + n),
                    (col > 0).then(|| i - 1),
                    (col + 1 < n).then(|| i + 1),
                ];
                neighbours.into_iter().flatten().any(|j| !bounded[j])
            } else {
                outcomes[i].distance_estimate.is_some_and(|de| de <= h)
            }
        })
        .collect()
}

pub fn render(kind: SetKind, job: &RenderConfig, out: &OutDir) -> Result<(), Failure> {
    let center = job.center.expect("resolved");
    let frame = Frame::new(center, job.half_width.expect("resolved"), job.resolution)
        .map_err(|e| Failure::Config(e.into()))?;
    let outcomes = match kind {
        SetKind::Julia => {
            let map = map(job.degree, job.c)?;
            frame.map_cells(|z| julia_distance_estimate(&map, z, job.cap))
        }
        SetKind::Mandelbrot => {
            frame.map_cells(|c| mandelbrot_distance_estimate(job.degree, c, job.cap))
        }
    };
    let mask = match job.style.expect("resolved") {
        Style::Filled => outcomes.iter().map(|o| o.membership.is_bounded()).collect(),
        Style::Boundary => boundary_band(&frame, &outcomes),
    };
    let set = GridSet::from_mask(frame, mask).map_err(compute)?;
    log::info!("{} of {} cells marked", set.count(), frame.cells());
    out.mask("render", &set).map_err(compute)?;
    out.points_csv("render.csv", &set).map_err(compute)?;
    Ok(())
}

#[derive(Serialize)]
struct SimilaritySummary {
    c0: Complex64,
    preperiod: usize,
    period: usize,
    landing_point: Complex64,
    landing_derivative: Complex64,
    multiplier: Complex64,
    lambda: Complex64,
    q: Complex64,
    r: f64,
    frame: Frame,
    grid_tolerance: f64,
    cap: usize,
    model_depth: usize,
    model_stability: f64,
    model_certified: bool,
    model_flips: usize,
    rate_slope: Option<f64>,
    rate_rows: usize,
}

pub fn similarity(job: &SimilarityJob, out: &OutDir) -> Result<(), Failure> {
    misiurewicz_data(job.degree, job.c0)
        .map_err(|e| Failure::Compute(anyhow!("c0 = {} is not Misiurewicz: {e}", job.c0)))?;
    let report = similarity_report(&job.library_config()).map_err(compute)?;
    let mut csv = Vec::new();
    report.write_csv(&mut csv).map_err(compute)?;
    std::fs::write(out.path("similarity.csv"), csv).map_err(compute)?;
    let data = &report.data;
    out.json(
        "summary.json",
        &SimilaritySummary {
            c0: data.c0,
            preperiod: data.preperiod,
            period: data.period,
            landing_point: data.landing_point,
            landing_derivative: data.landing_derivative,
            multiplier: data.multiplier,
            lambda: report.lambda,
            q: report.q,
            r: report.r,
            frame: report.frame,
            grid_tolerance: report.grid_tolerance,
            cap: report.cap,
            model_depth: report.model.depth,
            model_stability: report.model.stability,
            model_certified: report.model.certified,
            model_flips: report.model.flips,
            rate_slope: report.rate_slope,
            rate_rows: report.rate_rows,
        },
    )
    .map_err(compute)?;
    out.mask("model", &report.model.set).map_err(compute)?;
    for row in &report.rows {
        match (&row.julia, &row.mandelbrot, &row.error) {
            (Some(julia), Some(mandelbrot), _) => {
                log::info!(
                    "k = {}: d_J = {:?}, d_M = {:?}, d_JM = {:?}",
                    row.k,
                    row.d_julia,
                    row.d_mandelbrot,
                    row.d_between
                );
                if job.panels {
                    let panel = comparison_panel(&mandelbrot.set, &julia.set);
                    out.rgb(&format!("panels/k{:02}", row.k), &panel)
                        .map_err(compute)?;
                }
            }
            (_, _, error) => log::warn!("k = {}: {}", row.k, error.as_deref().unwrap_or("no sets")),
        }
    }
    Ok(())
}

const CENSUS_HEADER: [&str; 9] = [
    "j",
    "k",
    "l",
    "re",
    "im",
    "residual",
    "distance",
    "misiurewicz",
    "multiplier_abs",
];

#[derive(Serialize)]
struct CensusRecord {
    j: usize,
    k: usize,
    l: usize,
    re: f64,
    im: f64,
    residual: f64,
    distance: Option<f64>,
    misiurewicz: bool,
    multiplier_abs: f64,
}

fn census_records(report: &CensusReport) -> Vec<CensusRecord> {
    report
        .entries
        .iter()
        .map(|e| CensusRecord {
            j: e.index,
            k: e.parameter.preperiod,
            l: e.parameter.period,
            re: e.parameter.c.re,
            im: e.parameter.c.im,
            residual: e.parameter.residual,
            distance: Some(e.distance),
            misiurewicz: e.parameter.misiurewicz,
            multiplier_abs: e.parameter.landing_multiplier.norm(),
        })
        .collect()
}

pub fn census(job: &CensusJob, out: &OutDir) -> Result<(), Failure> {
    let mode = match job.mode {
        CensusMode::Centers => {
            let centers = find_superattracting_centers(job.degree, job.period, job.region)
                .map_err(compute)?;
            log::info!("{} centers of period {}", centers.len(), job.period);
            let records = centers.iter().enumerate().map(|(i, p)| CensusRecord {
                j: i + 1,
                k: p.preperiod,
                l: p.period,
                re: p.c.re,
                im: p.c.im,
                residual: p.residual,
                distance: None,
                misiurewicz: p.misiurewicz,
                multiplier_abs: p.landing_multiplier.norm(),
            });
            return out
                .csv_with_header("census.csv", &CENSUS_HEADER, records)
                .map_err(compute);
        }
        CensusMode::FixedPeriod => SequenceMode::FixedPeriod {
            period: job.period,
            first_preperiod: job.first,
        },
        CensusMode::FixedPreperiod => SequenceMode::FixedPreperiod {
            preperiod: job.preperiod,
            first_period: job.first,
        },
        CensusMode::Superattracting => SequenceMode::Superattracting {
            first_period: job.first,
        },
    };
    match thm1_sequence(job.degree, job.target, mode, job.max_index) {
        Ok(report) => out
            .csv_with_header("census.csv", &CENSUS_HEADER, census_records(&report))
            .map_err(compute),
        Err(CensusError::ContinuationStalled {
            last_good,
            reason,
            partial,
        }) => {
            out.csv_with_header("census.csv", &CENSUS_HEADER, census_records(&partial))
                .map_err(compute)?;
            Err(compute(anyhow!(
                "continuation stalled after {last_good} entries: {reason} (partial census.csv written)"
            )))
        }
        Err(e) => Err(compute(e)),
    }
}

#[derive(Serialize)]
struct Mm0Record {
    r: f64,
    d_bound: u64,
    n_max: usize,
    verdict: Verdict,
    certified: bool,
    qualifying_count: usize,
    radius_upper_half: f64,
    radius_upper_end: f64,
    consistency: f64,
    center_drift: f64,
}

#[derive(Serialize)]
struct DiskRecord {
    step: usize,
    center_re: f64,
    center_im: f64,
    radius_lower: f64,
    radius_upper: f64,
    degree: u64,
    certified: bool,
}

#[derive(Serialize)]
struct ConicalRecord {
    degree: u32,
    c: Complex64,
    z0: Complex64,
    mm0: Option<Mm0Record>,
    lm1: Option<Lm1Report>,
    separation: Option<SeparationCheck>,
}

pub fn conical(job: &ConicalJob, out: &OutDir) -> Result<(), Failure> {
    let map = map(job.degree, job.c)?;
    let mut record = ConicalRecord {
        degree: job.degree,
        c: job.c,
        z0: job.z0,
        mm0: None,
        lm1: None,
        separation: None,
    };
    for test in &job.tests {
        match test {
            ConicalTest::Mm0 => {
                let verdict =
                    mm0_test(&map, job.z0, job.r, job.d_bound, job.n_max).map_err(compute)?;
                let disks = &verdict.disks;
                out.csv(
                    "conical_disks.csv",
                    disks.iter().map(|d| DiskRecord {
                        step: d.step,
                        center_re: d.center.re,
                        center_im: d.center.im,
                        radius_lower: d.radius_lower,
                        radius_upper: d.radius_upper,
                        degree: d.degree,
                        certified: d.certified,
                    }),
                )
                .map_err(compute)?;
                record.mm0 = Some(Mm0Record {
                    r: verdict.r,
                    d_bound: verdict.d_bound,
                    n_max: verdict.n_max,
                    verdict: verdict.verdict,
                    certified: verdict.certified,
                    qualifying_count: verdict.qualifying_steps.len(),
                    radius_upper_half: disks[verdict.n_max / 2 - 1].radius_upper,
                    radius_upper_end: disks[verdict.n_max - 1].radius_upper,
                    consistency: verdict.consistency,
                    center_drift: verdict.center_drift,
                });
            }
            ConicalTest::Lm1 => {
                record.lm1 = Some(lm1_test(&map, job.z0, &job.radii).map_err(compute)?)
            }
            ConicalTest::Separation => {
                record.separation = Some(
                    semi_hyperbolic_test(&map, job.c, job.horizon, job.separation)
                        .map_err(compute)?,
                )
            }
        }
    }
    out.json("conical.json", &record).map_err(compute)
}

#[derive(Serialize)]
struct ChartSummary {
    point: Complex64,
    period: usize,
    multiplier: Complex64,
    depth: usize,
    domain_radius: f64,
    certificate: f64,
    coefficients: Vec<Complex64>,
}

#[derive(Serialize)]
struct ChartSample {
    w_re: f64,
    w_im: f64,
    phi_re: f64,
    phi_im: f64,
}

pub fn poincare(job: &PoincareJob, out: &OutDir) -> Result<(), Failure> {
    let map = map(job.degree, job.c)?;
    let chart = PoincareChart::at_cycle(&map, job.period, job.seed, job.radius).map_err(compute)?;
    let mut samples = vec![Complex64::new(0.0, 0.0)];
    for ring in 1..=job.rings {
        let modulus = job.radius * ring as f64 / job.rings as f64;
        samples.extend((0..job.spokes).map(|s| {
            Complex64::from_polar(
                modulus,
                std::f64::consts::TAU * s as f64 / job.spokes as f64,
            )
        }));
    }
    let values = samples
        .iter()
        .map(|&w| poincare_eval(&chart, w).map(|phi| (w, phi)))
        .collect::<Result<Vec<_>, _>>()
        .map_err(compute)?;
    out.csv(
        "poincare.csv",
        values.iter().map(|(w, phi)| ChartSample {
            w_re: w.re,
            w_im: w.im,
            phi_re: phi.re,
            phi_im: phi.im,
        }),
    )
    .map_err(compute)?;
    let base = chart.base();
    out.json(
        "poincare.json",
        &ChartSummary {
            point: base.point,
            period: base.period,
            multiplier: base.multiplier,
            depth: chart.depth(),
            domain_radius: chart.domain_radius(),
            certificate: chart.certificate(),
            coefficients: chart.coefficients().to_vec(),
        },
    )
    .map_err(compute)
}
