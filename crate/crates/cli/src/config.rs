//! Job configurations. Each command reads an optional JSON file, then applies
//! flag overrides, then validates everything before any computation starts.

use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use zalcman::census::Region;
use zalcman::conical::DEFAULT_RADII;
use zalcman::similarity::{
    SimilarityConfig, DEFAULT_CAP, DEFAULT_HORIZON, DEFAULT_SEPARATION, DEFAULT_TAIL_TOL,
};
use zalcman::Complex64;

/// Parses `i`, `-2`, `0.2+1.1i`, `-0.5-i`, `3e-2i` and the like.
pub fn parse_complex(text: &str) -> Result<Complex64, String> {
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    if s.is_empty() {
        return Err("empty complex number".into());
    }
    let Some(body) = s.strip_suffix(['i', 'j']) else {
        return real(&s).map(|re| Complex64::new(re, 0.0));
    };
    // split at the last sign that is not part of an exponent
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&p| matches!(bytes[p], b'+' | b'-') && !matches!(bytes[p - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(p) => (real(&body[..p])?, imaginary(&body[p..])?),
        None => (0.0, imaginary(body)?),
    };
    Ok(Complex64::new(re, im))
}

fn real(s: &str) -> Result<f64, String> {
    s.parse::<f64>()
        .map_err(|_| format!("cannot parse {s:?} as a number"))
}

fn imaginary(s: &str) -> Result<f64, String> {
    match s {
        "" | "+" => Ok(1.0),
        "-" => Ok(-1.0),
        _ => real(s),
    }
}

/// Serde adapter: writes `[re, im]`, reads `[re, im]`, `{"re":..,"im":..}` or a string.
pub mod complex {
    use super::*;
    use serde::{Deserializer, Serializer};

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Pair([f64; 2]),
        Fields { re: f64, im: f64 },
        Real(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(z: &Complex64, s: S) -> Result<S::Ok, S::Error> {
        [z.re, z.im].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Complex64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Pair([re, im]) | Repr::Fields { re, im } => Ok(Complex64::new(re, im)),
            Repr::Real(re) => Ok(Complex64::new(re, 0.0)),
            Repr::Text(text) => parse_complex(&text).map_err(serde::de::Error::custom),
        }
    }

    pub mod option {
        use super::*;

        pub fn serialize<S: Serializer>(z: &Option<Complex64>, s: S) -> Result<S::Ok, S::Error> {
            z.map(|z| [z.re, z.im]).serialize(s)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Complex64>, D::Error> {
            #[derive(Deserialize)]
            struct Wrap(#[serde(with = "super")] Complex64);
            Ok(Option::<Wrap>::deserialize(d)?.map(|w| w.0))
        }
    }
}

pub fn load<T: for<'de> Deserialize<'de> + Default>(path: Option<&Path>) -> Result<T> {
    match path {
        None => Ok(T::default()),
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
        }
    }
}

fn check_degree(degree: u32) -> Result<()> {
    if !(2..=64).contains(&degree) {
        bail!("degree must be in 2..=64, got {degree}");
    }
    Ok(())
}

fn check_frame(half_width: f64, resolution: usize) -> Result<()> {
    if resolution < 2 {
        bail!("resolution must be at least 2, got {resolution}");
    }
    if !(half_width.is_finite() && half_width > 0.0) {
        bail!("half_width must be positive and finite, got {half_width}");
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SetKind {
    Julia,
    Mandelbrot,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Style {
    /// Cells within one cell of the boundary.
    Boundary,
    /// Cells whose orbit stays bounded for `cap` iterations.
    Filled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RenderConfig {
    pub degree: u32,
    /// Julia parameter; ignored for the Mandelbrot set.
    #[serde(with = "complex")]
    pub c: Complex64,
    /// Defaults to 0 for Julia sets and -0.5 for the Mandelbrot set.
    #[serde(with = "complex::option")]
    pub center: Option<Complex64>,
    /// Defaults to 2 for Julia sets and 1.6 for the Mandelbrot set.
    pub half_width: Option<f64>,
    pub resolution: usize,
    pub cap: usize,
    /// Defaults to boundary for Julia sets and filled for the Mandelbrot set.
    pub style: Option<Style>,
}

impl Default for RenderConfig {
    fn default() -> Self {
        Self {
            degree: 2,
            c: Complex64::new(0.0, 0.0),
            center: None,
            half_width: None,
            resolution: 512,
            cap: 1000,
            style: None,
        }
    }
}

impl RenderConfig {
    /// Fills in the kind-dependent defaults.
    pub fn resolve(mut self, kind: SetKind) -> Self {
        let (center, half_width, style) = match kind {
            SetKind::Julia => (Complex64::new(0.0, 0.0), 2.0, Style::Boundary),
            SetKind::Mandelbrot => (Complex64::new(-0.5, 0.0), 1.6, Style::Filled),
        };
        self.center.get_or_insert(center);
        self.half_width.get_or_insert(half_width);
        self.style.get_or_insert(style);
        self
    }

    pub fn validate(&self) -> Result<()> {
        check_degree(self.degree)?;
        check_frame(self.half_width.unwrap_or(1.0), self.resolution)?;
        if self.cap == 0 {
            bail!("cap must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimilarityJob {
    pub degree: u32,
    #[serde(with = "complex")]
    pub c0: Complex64,
    pub r: f64,
    pub resolution: usize,
    pub half_width: Option<f64>,
    pub k_min: usize,
    pub k_max: usize,
    pub cap: usize,
    pub model_depth: Option<usize>,
    pub tail_tol: f64,
    /// Write one comparison panel per k.
    pub panels: bool,
}

impl Default for SimilarityJob {
    fn default() -> Self {
        let base = SimilarityConfig::default();
        Self {
            degree: base.degree,
            c0: base.c0,
            r: base.r,
            resolution: base.resolution,
            half_width: base.half_width,
            k_min: base.k_min,
            k_max: base.k_max,
            cap: DEFAULT_CAP,
            model_depth: base.model_depth,
            tail_tol: DEFAULT_TAIL_TOL,
            panels: true,
        }
    }
}

impl SimilarityJob {
    pub fn library_config(&self) -> SimilarityConfig {
        SimilarityConfig {
            degree: self.degree,
            c0: self.c0,
            r: self.r,
            resolution: self.resolution,
            half_width: self.half_width,
            k_min: self.k_min,
            k_max: self.k_max,
            cap: self.cap,
            model_depth: self.model_depth,
            tail_tol: self.tail_tol,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_degree(self.degree)?;
        self.library_config().validate()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum CensusMode {
    /// `Mi(k_j, period)` with `k_j = first, first + 1, ...`
    FixedPeriod,
    /// `Mi(preperiod, l_j)` with `l_j = first, first + 1, ...`
    FixedPreperiod,
    /// Centers of period `first, first + 1, ...` approaching the target.
    Superattracting,
    /// Every center of exact period `period` in the region.
    Centers,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CensusJob {
    pub degree: u32,
    pub mode: CensusMode,
    #[serde(with = "complex")]
    pub target: Complex64,
    pub period: usize,
    pub preperiod: usize,
    pub first: usize,
    pub max_index: usize,
    pub region: Region,
}

impl Default for CensusJob {
    fn default() -> Self {
        Self {
            degree: 2,
            mode: CensusMode::FixedPeriod,
            target: Complex64::new(0.0, 1.0),
            period: 2,
            preperiod: 1,
            first: 2,
            max_index: 10,
            region: Region::parameter_disk(),
        }
    }
}

impl CensusJob {
    pub fn validate(&self) -> Result<()> {
        check_degree(self.degree)?;
        if self.max_index == 0 {
            bail!("max_index must be at least 1");
        }
        match self.mode {
            CensusMode::FixedPeriod | CensusMode::Centers if self.period == 0 => {
                bail!("period must be at least 1")
            }
            CensusMode::FixedPreperiod | CensusMode::Superattracting if self.first == 0 => {
                bail!("first period must be at least 1")
            }
            _ => {}
        }
        let r = &self.region;
        if !(r.re_min < r.re_max && r.im_min < r.im_max) {
            bail!("region is empty");
        }
        if !(self.target.re.is_finite() && self.target.im.is_finite()) {
            bail!("target must be finite");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ConicalTest {
    Mm0,
    Lm1,
    Separation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConicalJob {
    pub degree: u32,
    #[serde(with = "complex")]
    pub c: Complex64,
    #[serde(with = "complex")]
    pub z0: Complex64,
    pub tests: Vec<ConicalTest>,
    pub r: f64,
    pub d_bound: u64,
    pub n_max: usize,
    pub radii: Vec<f64>,
    pub horizon: usize,
    pub separation: f64,
}

impl Default for ConicalJob {
    fn default() -> Self {
        Self {
            degree: 2,
            c: Complex64::new(0.0, 0.0),
            z0: Complex64::new(1.0, 0.0),
            tests: vec![ConicalTest::Mm0, ConicalTest::Lm1],
            r: 0.5,
            d_bound: 1,
            n_max: 60,
            radii: DEFAULT_RADII.to_vec(),
            horizon: DEFAULT_HORIZON,
            separation: DEFAULT_SEPARATION,
        }
    }
}

impl ConicalJob {
    pub fn validate(&self) -> Result<()> {
        check_degree(self.degree)?;
        if self.tests.is_empty() {
            bail!("no tests requested");
        }
        if !(self.r.is_finite() && self.r > 0.0) {
            bail!("r must be positive and finite, got {}", self.r);
        }
        if self.d_bound == 0 {
            bail!("d_bound must be at least 1");
        }
        if self.n_max < 2 {
            bail!("n_max must be at least 2");
        }
        if self.radii.is_empty() || self.radii.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            bail!("radii must be a nonempty list of positive numbers");
        }
        if self.horizon == 0 || self.separation.is_nan() || self.separation <= 0.0 {
            bail!("horizon and separation must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PoincareJob {
    pub degree: u32,
    #[serde(with = "complex")]
    pub c: Complex64,
    pub period: usize,
    /// Newton seed for the repelling periodic point.
    #[serde(with = "complex")]
    pub seed: Complex64,
    pub radius: f64,
    pub rings: usize,
    pub spokes: usize,
}

impl Default for PoincareJob {
    fn default() -> Self {
        Self {
            degree: 2,
            c: Complex64::new(-2.0, 0.0),
            period: 1,
            seed: Complex64::new(2.0, 0.0),
            radius: 1.0,
            rings: 8,
            spokes: 32,
        }
    }
}

impl PoincareJob {
    pub fn validate(&self) -> Result<()> {
        check_degree(self.degree)?;
        if self.period == 0 {
            bail!("period must be at least 1");
        }
        if !(self.radius.is_finite() && self.radius > 0.0) {
            bail!("radius must be positive and finite, got {}", self.radius);
        }
        if self.rings == 0 || self.spokes == 0 {
            bail!("rings and spokes must be positive");
        }
        Ok(())
    }
}
