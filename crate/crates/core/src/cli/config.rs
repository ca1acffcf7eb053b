use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::ambient::ModelConstant;
use crate::catalog::{self, CatalogEntry, CylinderBase, Tolerances};
use crate::chart::{AffineReparam, Chart, Domain, Grid};
use crate::error::{GeomError, Result};
use crate::profile::{closed_form_profile, ProfileFunction};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Text,
    /// Pretty-printed JSON.
    Structured,
}

/// A chart assembled from catalog constructors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ChartSpec {
    Catalog { name: String },
    Slice { c: i32, n: usize, t0: f64 },
    Cylinder { c: i32, n: usize, base: CylinderBase },
    Clifford { p: usize, q: usize, r: f64, s: f64 },
    HyperbolicProduct { k: usize, n: usize, r: f64 },
    RotationalHorosphere { b: f64, n: usize },
    Rotational { n: usize, profile: ProfileSpec },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProfileSpec {
    Affine { slope: f64 },
    ClosedForm { c1: f64, c2: f64, c3: f64 },
    Cubic { k: f64 },
}

impl ProfileSpec {
    pub fn build(&self) -> Result<ProfileFunction> {
        match *self {
            ProfileSpec::Affine { slope } => ProfileFunction::affine(slope, -1.0, 1.0),
            ProfileSpec::ClosedForm { c1, c2, c3 } => closed_form_profile(c1, c2, c3),
            ProfileSpec::Cubic { k } => Ok(ProfileFunction::cubic(k, -1.0, 1.0)),
        }
    }
}

/// `v -> chart(matrix v + offset)` on `[-half_width, half_width]^n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AffineSpec {
    pub matrix: Vec<Vec<f64>>,
    pub offset: Vec<f64>,
    pub half_width: f64,
}

/// Contents of a `--config` file; command-line flags take precedence.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub entry: Option<String>,
    pub chart: Option<ChartSpec>,
    pub affine: Option<AffineSpec>,
    pub profile: Option<ProfileSpec>,
    pub grid: Option<String>,
    pub t_range: Option<String>,
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    pub out: Option<PathBuf>,
    pub csv: Option<PathBuf>,
    pub format: Option<Format>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| GeomError::Io(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| GeomError::Config(format!("{}: {e}", path.display())))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum GridSpec {
    Uniform(usize),
    PerAxis(Vec<usize>),
    Explicit(Vec<(f64, f64, usize)>),
}

impl GridSpec {
    /// `N`, `N1xN2x...` or `lo:hi:N,lo:hi:N,...`.
    pub fn parse(s: &str) -> Result<Self> {
        let bad = || GeomError::Config(format!("bad grid spec `{s}`"));
        let count = |t: &str| -> Result<usize> {
            let k: usize = t.trim().parse().map_err(|_| bad())?;
            if k < 2 {
                return Err(GeomError::Config(format!("grid counts must be >= 2, got {k}")));
            }
            Ok(k)
        };
        if s.contains(':') {
            s.split(',')
                .map(|axis| {
                    let (lo, hi, k) = parse_range(axis).map_err(|_| bad())?;
                    Ok((lo, hi, count(&k.to_string())?))
                })
                .collect::<Result<Vec<_>>>()
                .map(GridSpec::Explicit)
        } else if s.contains('x') {
            s.split('x').map(count).collect::<Result<Vec<_>>>().map(GridSpec::PerAxis)
        } else {
            count(s).map(GridSpec::Uniform)
        }
    }

    pub fn resolve(&self, chart: &dyn Chart) -> Result<Grid> {
        let n = chart.n();
        let grid = match self {
            GridSpec::Uniform(k) => chart.domain().analysis_grid(&vec![*k; n])?,
            GridSpec::PerAxis(ks) => {
                if ks.len() != n {
                    return Err(GeomError::Config(format!(
                        "grid has {} axes, chart `{}` has {n}",
                        ks.len(),
                        chart.name()
                    )));
                }
                chart.domain().analysis_grid(ks)?
            }
            GridSpec::Explicit(axes) => {
                if axes.len() != n {
                    return Err(GeomError::Config(format!(
                        "grid has {} axes, chart `{}` has {n}",
                        axes.len(),
                        chart.name()
                    )));
                }
                let lo: Vec<f64> = axes.iter().map(|a| a.0).collect();
                let hi: Vec<f64> = axes.iter().map(|a| a.1).collect();
                if !chart.domain().contains(&lo) || !chart.domain().contains(&hi) {
                    return Err(GeomError::Config(format!(
                        "grid box leaves the domain of `{}`",
                        chart.name()
                    )));
                }
                Grid::new(lo, hi, axes.iter().map(|a| a.2).collect())?
            }
        };
        Ok(grid)
    }
}

/// `A:B:N`.
pub fn parse_range(s: &str) -> Result<(f64, f64, usize)> {
    let bad = || GeomError::Config(format!("bad range `{s}`, expected A:B:N"));
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let k: usize = parts[2].trim().parse().map_err(|_| bad())?;
    if !(lo <= hi) || k < 2 {
        return Err(bad());
    }
    Ok((lo, hi, k))
}

/// Named thresholds with their defaults.
pub fn default_tolerances() -> BTreeMap<String, f64> {
    let c = Tolerances::default();
    [
        ("unit", c.unit),
        ("invariant", c.invariant),
        ("inclusion", c.inclusion),
        ("structure", c.structure),
        ("t_direction", c.t_direction),
        ("curvature", c.curvature),
        ("nu", c.nu),
        ("surface_identity", c.surface_identity),
        ("transport", 1e-5),
        ("metric", 1e-8),
        ("frame_eigen", 1e-8),
        ("frame_gram", 1e-10),
        ("projector", 1e-8),
        ("cross_cluster", 1e-9),
        ("t_alignment", 1e-7),
        ("ode", 1e-9),
        ("tnorm", 1e-8),
        ("cpc_curvature", 1e-7),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect()
}

/// Everything a command needs, after merging file and flags.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: String,
    pub entry: Option<String>,
    pub chart: Option<ChartSpec>,
    pub affine: Option<AffineSpec>,
    pub profile: Option<ProfileSpec>,
    pub grid: Option<GridSpec>,
    pub t_range: Option<(f64, f64, usize)>,
    pub tolerances: BTreeMap<String, f64>,
    pub out: Option<PathBuf>,
    pub csv: Option<PathBuf>,
    pub format: Format,
}

/// A chart to analyze, with catalog expectations when it has them.
pub struct Subject {
    pub chart: Arc<dyn Chart>,
    pub entry: Option<CatalogEntry>,
}

impl RunConfig {
    pub fn new(command: &str, file: ConfigFile) -> Result<Self> {
        let mut tolerances = default_tolerances();
        for (k, v) in file.tolerances {
            set_tolerance(&mut tolerances, &k, v)?;
        }
        Ok(Self {
            command: command.to_string(),
            entry: file.entry,
            chart: file.chart,
            affine: file.affine,
            profile: file.profile,
            grid: file.grid.as_deref().map(GridSpec::parse).transpose()?,
            t_range: file.t_range.as_deref().map(parse_range).transpose()?,
            tolerances,
            out: file.out,
            csv: file.csv,
            format: file.format.unwrap_or_default(),
        })
    }

    pub fn tol(&self, name: &str) -> f64 {
        self.tolerances[name]
    }

    pub fn catalog_tolerances(&self) -> Tolerances {
        Tolerances {
            unit: self.tol("unit"),
            invariant: self.tol("invariant"),
            inclusion: self.tol("inclusion"),
            structure: self.tol("structure"),
            t_direction: self.tol("t_direction"),
            curvature: self.tol("curvature"),
            nu: self.tol("nu"),
            surface_identity: self.tol("surface_identity"),
        }
    }

    pub fn subject(&self) -> Result<Subject> {
        let mut subject = match (&self.entry, &self.chart) {
            (Some(_), Some(_)) => {
                return Err(GeomError::Config("give either an entry or a chart, not both".into()))
            }
            (None, None) => return Err(GeomError::Config("no entry or chart given".into())),
            (Some(name), None) => match catalog::find(name) {
                Ok(e) => Subject {
                    chart: e.chart.clone(),
                    entry: Some(e),
                },
                Err(_) => Subject {
                    chart: catalog::find_chart(name)?,
                    entry: None,
                },
            },
            (None, Some(spec)) => build_chart(spec)?,
        };
        if let Some(a) = &self.affine {
            let n = subject.chart.n();
            if a.matrix.len() != n || a.matrix.iter().any(|r| r.len() != n) {
                return Err(GeomError::Config(format!("affine matrix must be {n}x{n}")));
            }
            let m = DMatrix::from_fn(n, n, |i, j| a.matrix[i][j]);
            let chart: Arc<dyn Chart> = Arc::new(AffineReparam::new(
                subject.chart.clone(),
                m,
                a.offset.clone(),
                Domain::cube(n, a.half_width),
            )?);
            // reparametrization leaves every expected invariant unchanged
            if let Some(e) = subject.entry.as_mut() {
                e.chart = chart.clone();
            }
            subject.chart = chart;
        }
        Ok(subject)
    }

    pub fn grid_for(&self, chart: &dyn Chart) -> Result<Grid> {
        match &self.grid {
            Some(g) => g.resolve(chart),
            None => {
                let k = match chart.n() {
                    0..=2 => 7,
                    3 => 5,
                    _ => 3,
                };
                chart.domain().analysis_grid(&vec![k; chart.n()])
            }
        }
    }
}

pub fn set_tolerance(map: &mut BTreeMap<String, f64>, name: &str, value: f64) -> Result<()> {
    if !map.contains_key(name) {
        return Err(GeomError::Config(format!(
            "unknown tolerance `{name}`; known: {}",
            map.keys().cloned().collect::<Vec<_>>().join(", ")
        )));
    }
    if !(value > 0.0) || !value.is_finite() {
        return Err(GeomError::Config(format!("tolerance `{name}` must be positive, got {value}")));
    }
    map.insert(name.to_string(), value);
    Ok(())
}

fn model(c: i32) -> Result<ModelConstant> {
    ModelConstant::new(c).map_err(|e| GeomError::Config(e.to_string()))
}

fn build_chart(spec: &ChartSpec) -> Result<Subject> {
    let entry = |e: CatalogEntry| Subject {
        chart: e.chart.clone(),
        entry: Some(e),
    };
    Ok(match spec {
        ChartSpec::Catalog { name } => entry(catalog::find(name)?),
        ChartSpec::Slice { c, n, t0 } => entry(catalog::slice(model(*c)?, *n, *t0)?),
        ChartSpec::Cylinder { c, n, base } => entry(catalog::cylinder(model(*c)?, *n, *base)?),
        ChartSpec::Clifford { p, q, r, s } => entry(catalog::clifford_product(*p, *q, *r, *s)?),
        ChartSpec::HyperbolicProduct { k, n, r } => entry(catalog::hyperbolic_product(*k, *n, *r)?),
        ChartSpec::RotationalHorosphere { b, n } => entry(catalog::rotational_horosphere(*b, *n)?),
        ChartSpec::Rotational { n, profile } => Subject {
            chart: Arc::new(catalog::rotational(&profile.build()?, *n, format!("rotational({profile:?},n={n})"))?),
            entry: None,
        },
    })
}
