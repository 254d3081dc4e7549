//! Config-file sections, flag groups and their merge.
//!
//! Every group is both a clap argument group and a TOML table. A value given
//! on the command line replaces the one from the file.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use tcat::ctmrg_engine::CtmrgControls;
use tcat::lattice_exact::TorusSpec;
use tcat::noise_models::{DistributionConfig, RotationAxis};
use tcat::phase_scan::CouplingPath;
use tcat::{Couplings, Error, Result};

/// Field-wise "flags win" merge.
pub trait Merge {
    fn merge(self, file: Self) -> Self;
}

macro_rules! merge_fields {
    ($ty:ty { $($f:ident),* $(,)? }) => {
        impl Merge for $ty {
            fn merge(self, file: Self) -> Self {
                Self { $($f: self.$f.or(file.$f)),* }
            }
        }
    };
}

/// `a:b:n` (n evenly spaced points), `x,y,z`, or one number.
#[derive(Clone, Debug, PartialEq)]
pub enum GridSpec {
    Range { start: f64, stop: f64, n: usize },
    List(Vec<f64>),
}

impl GridSpec {
    pub fn points(&self) -> Vec<f64> {
        match self {
            GridSpec::Range { start, stop, n } => tcat::phase_scan::linspace(*start, *stop, *n),
            GridSpec::List(v) => v.clone(),
        }
    }
}

impl FromStr for GridSpec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let num = |t: &str| t.trim().parse::<f64>().map_err(|_| format!("bad number '{t}' in grid '{s}'"));
        let parts: Vec<&str> = s.split(':').collect();
        match parts.len() {
            1 => Ok(GridSpec::List(s.split(',').map(num).collect::<std::result::Result<_, _>>()?)),
            3 => {
                let n = parts[2].trim().parse::<usize>().map_err(|_| format!("bad count in grid '{s}'"))?;
                if n == 0 {
                    return Err(format!("grid '{s}' has no points"));
                }
                Ok(GridSpec::Range { start: num(parts[0])?, stop: num(parts[1])?, n })
            }
            _ => Err(format!("grid '{s}' is neither a:b:n nor a comma list")),
        }
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GridSpec::Range { start, stop, n } => write!(f, "{start:?}:{stop:?}:{n}"),
            GridSpec::List(v) => {
                let parts: Vec<String> = v.iter().map(|x| format!("{x:?}")).collect();
                write!(f, "{}", parts.join(","))
            }
        }
    }
}

impl Serialize for GridSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for GridSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Text(String),
            Number(f64),
            List(Vec<f64>),
        }
        match Raw::deserialize(d)? {
            Raw::Text(s) => s.parse().map_err(serde::de::Error::custom),
            Raw::Number(x) => Ok(GridSpec::List(vec![x])),
            Raw::List(v) => Ok(GridSpec::List(v)),
        }
    }
}

/// `LXxLY`, e.g. `3x4`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TorusArg(pub usize, pub usize);

impl FromStr for TorusArg {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let (a, b) = s.split_once(['x', 'X']).ok_or_else(|| format!("torus '{s}' is not LXxLY"))?;
        let p = |t: &str| t.trim().parse::<usize>().map_err(|_| format!("bad torus size '{t}'"));
        Ok(TorusArg(p(a)?, p(b)?))
    }
}

impl Serialize for TorusArg {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format!("{}x{}", self.0, self.1))
    }
}

impl<'de> Deserialize<'de> for TorusArg {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

/// Comma-separated bond dimensions.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Ladder(pub Vec<usize>);

impl FromStr for Ladder {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        s.split(',')
            .map(|t| t.trim().parse::<usize>().map_err(|_| format!("bad bond dimension '{t}'")))
            .collect::<std::result::Result<_, _>>()
            .map(Ladder)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseKind {
    Rotation,
    Ampdamp,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AxisName {
    X,
    Y,
    Z,
}

#[derive(Args, Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AxisArgs {
    /// Named axis; excludes --theta/--phi.
    #[arg(long, value_enum)]
    pub axis: Option<AxisName>,
    /// Polar angle from the y axis.
    #[arg(long, allow_hyphen_values = true)]
    pub theta: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub phi: Option<f64>,
}
merge_fields!(AxisArgs { axis, theta, phi });

impl AxisArgs {
    pub fn resolve(&self) -> Result<RotationAxis<f64>> {
        match (self.axis, self.theta, self.phi) {
            (Some(_), Some(_), _) | (Some(_), _, Some(_)) => {
                Err(Error::Validation("give either --axis or --theta/--phi".into()))
            }
            (Some(AxisName::X), None, None) => Ok(RotationAxis::x()),
            (Some(AxisName::Y), None, None) => Ok(RotationAxis::y()),
            (Some(AxisName::Z), None, None) => Ok(RotationAxis::z()),
            (None, Some(t), Some(p)) => RotationAxis::new(t, p),
            (None, Some(t), None) => RotationAxis::new(t, 0.0),
            _ => Err(Error::Validation("rotation axis missing (--axis or --theta/--phi)".into())),
        }
    }
}

#[derive(Args, Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseArgs {
    #[arg(long, value_enum)]
    pub noise: Option<NoiseKind>,
    /// Rotation-noise R in [0, 1].
    #[arg(long = "R", visible_alias = "r")]
    #[serde(rename = "R")]
    pub r: Option<f64>,
    /// Damping probability in [0, 1].
    #[arg(long)]
    pub gamma: Option<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub axis: AxisArgs,
}

impl Merge for NoiseArgs {
    fn merge(self, file: Self) -> Self {
        Self {
            noise: self.noise.or(file.noise),
            r: self.r.or(file.r),
            gamma: self.gamma.or(file.gamma),
            axis: self.axis.merge(file.axis),
        }
    }
}

impl NoiseArgs {
    fn kind(&self) -> Result<NoiseKind> {
        match (self.noise, self.r, self.gamma) {
            (Some(k), _, _) => Ok(k),
            (None, Some(_), None) => Ok(NoiseKind::Rotation),
            (None, None, Some(_)) => Ok(NoiseKind::Ampdamp),
            _ => Err(Error::Validation("specify --noise rotation|ampdamp".into())),
        }
    }

    pub fn couplings(&self) -> Result<Couplings> {
        match self.kind()? {
            NoiseKind::Rotation => {
                let r = self.r.ok_or_else(|| Error::Validation("--R is required for rotation noise".into()))?;
                tcat::coupling_map::rotation_couplings(r, &self.axis.resolve()?)
            }
            NoiseKind::Ampdamp => {
                let g = self.gamma.ok_or_else(|| Error::Validation("--gamma is required for amplitude damping".into()))?;
                tcat::coupling_map::amp_damp_couplings(g)
            }
        }
    }

    /// Whether this is rotation noise about the y axis.
    pub fn pure_y(&self) -> Result<Option<f64>> {
        if self.kind()? != NoiseKind::Rotation {
            return Ok(None);
        }
        let axis = self.axis.resolve()?;
        Ok((axis.theta == 0.0).then_some(self.r.unwrap_or(f64::NAN)))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DistKind {
    Delta,
    Uniform,
    VonMises,
    DoubleVonMises,
    Tabulated,
}

#[derive(Args, Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DistArgs {
    #[arg(long, value_enum)]
    pub dist: Option<DistKind>,
    #[arg(long, allow_hyphen_values = true)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub kappa: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub mean: Option<f64>,
    #[arg(long)]
    pub q: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub delta_phi: Option<f64>,
    /// CSV of `angle,density` rows.
    #[arg(long)]
    pub table: Option<PathBuf>,
}
merge_fields!(DistArgs { dist, eps, kappa, mean, q, delta_phi, table });

impl DistArgs {
    pub fn resolve(&self) -> Result<DistributionConfig> {
        let need = |v: Option<f64>, name: &str| v.ok_or_else(|| Error::Validation(format!("--{name} is required")));
        Ok(match self.dist.ok_or_else(|| Error::Validation("--dist is required".into()))? {
            DistKind::Delta => DistributionConfig::Delta { eps: self.eps.unwrap_or(0.0) },
            DistKind::Uniform => DistributionConfig::Uniform,
            DistKind::VonMises => {
                DistributionConfig::VonMises { kappa: need(self.kappa, "kappa")?, mean: self.mean.unwrap_or(0.0) }
            }
            DistKind::DoubleVonMises => DistributionConfig::DoubleVonMises {
                q: need(self.q, "q")?,
                kappa: need(self.kappa, "kappa")?,
                delta_phi: need(self.delta_phi, "delta-phi")?,
            },
            DistKind::Tabulated => DistributionConfig::Tabulated {
                path: self.table.clone().ok_or_else(|| Error::Validation("--table is required".into()))?,
            },
        })
    }
}

#[derive(Args, Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CtmrgArgs {
    /// Bond dimension.
    #[arg(long = "D", visible_alias = "d")]
    #[serde(rename = "D")]
    pub d: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
}
merge_fields!(CtmrgArgs { d, tol, max_iters });

impl CtmrgArgs {
    pub fn controls(&self, default_d: usize) -> Result<CtmrgControls> {
        let base = CtmrgControls::default();
        let c = CtmrgControls {
            d: self.d.unwrap_or(default_d),
            tol: self.tol.unwrap_or(base.tol),
            max_iters: self.max_iters.unwrap_or(base.max_iters),
        };
        c.validate()?;
        Ok(c)
    }
}

#[derive(Args, Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TorusArgs {
    /// Torus size, e.g. 3x4.
    #[arg(long)]
    pub torus: Option<TorusArg>,
}
merge_fields!(TorusArgs { torus });

impl TorusArgs {
    pub fn resolve(&self) -> Result<TorusSpec> {
        let TorusArg(lx, ly) = self.torus.ok_or_else(|| Error::Validation("--torus is required".into()))?;
        TorusSpec::new(lx, ly)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// Amplitude damping over a γ grid.
    AmpdampLine,
    /// One rotation axis over an R grid.
    Ray,
    /// Product grid over (R, θ, φ).
    Box,
}

#[derive(Args, Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepArgs {
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    #[arg(long = "R")]
    #[serde(rename = "R")]
    pub r: Option<GridSpec>,
    #[arg(long)]
    pub gamma: Option<GridSpec>,
    /// θ grid (box preset) or single θ (ray preset).
    #[arg(long, allow_hyphen_values = true)]
    pub theta: Option<GridSpec>,
    #[arg(long, allow_hyphen_values = true)]
    pub phi: Option<GridSpec>,
    #[arg(long, value_enum)]
    pub axis: Option<AxisName>,
}
merge_fields!(SweepArgs { preset, r, gamma, theta, phi, axis });

#[derive(Args, Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BisectArgs {
    #[arg(long, value_enum)]
    pub noise: Option<NoiseKind>,
    #[arg(long)]
    pub lo: Option<f64>,
    #[arg(long)]
    pub hi: Option<f64>,
    /// Final bracket width.
    #[arg(long)]
    pub bracket: Option<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub axis: AxisArgs,
}

impl Merge for BisectArgs {
    fn merge(self, file: Self) -> Self {
        Self {
            noise: self.noise.or(file.noise),
            lo: self.lo.or(file.lo),
            hi: self.hi.or(file.hi),
            bracket: self.bracket.or(file.bracket),
            axis: self.axis.merge(file.axis),
        }
    }
}

impl BisectArgs {
    pub fn path(&self) -> Result<CouplingPath> {
        match self.noise.ok_or_else(|| Error::Validation("--noise is required".into()))? {
            NoiseKind::Ampdamp => Ok(CouplingPath::AmpDamp),
            NoiseKind::Rotation => Ok(CouplingPath::rotation(&self.axis.resolve()?)),
        }
    }
}

#[derive(Args, Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StaggeredArgs {
    #[arg(long = "R")]
    #[serde(rename = "R")]
    pub r: Option<GridSpec>,
    #[arg(long)]
    pub lx: Option<usize>,
    #[arg(long)]
    pub ly: Option<usize>,
    #[arg(long)]
    pub epsilon: Option<f64>,
}
merge_fields!(StaggeredArgs { r, lx, ly, epsilon });

#[derive(Args, Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitArgs {
    /// CSV input instead of running CTMRG.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Bond dimensions, e.g. 10,16,24,32.
    #[arg(long)]
    pub ladder: Option<Ladder>,
    #[arg(long)]
    pub gamma_c: Option<f64>,
    /// γ values past γ_c.
    #[arg(long = "gammas")]
    pub gammas: Option<GridSpec>,
}
merge_fields!(FitArgs { input, ladder, gamma_c, gammas });

#[derive(Args, Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VonMisesArgs {
    /// Critical R of the axis; defaults to the Ising value 2 − √2.
    #[arg(long)]
    pub r_c: Option<f64>,
    #[arg(long)]
    pub kappa: Option<GridSpec>,
    #[command(flatten)]
    #[serde(flatten)]
    pub axis: AxisArgs,
}

impl Merge for VonMisesArgs {
    fn merge(self, file: Self) -> Self {
        Self { r_c: self.r_c.or(file.r_c), kappa: self.kappa.or(file.kappa), axis: self.axis.merge(file.axis) }
    }
}

/// Runner settings: flags, then environment, then file.
#[derive(Args, Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunArgs {
    /// Output directory (env TCAT_OUT_DIR).
    #[arg(long, global = true)]
    #[serde(skip)]
    pub out_dir: Option<PathBuf>,
    /// Worker threads for sweeps (env TCAT_WORKERS).
    #[arg(long, global = true)]
    #[serde(skip_serializing)]
    pub workers: Option<usize>,
    /// Pin linear algebra to one thread for byte-identical reruns.
    #[arg(long, global = true)]
    #[serde(default)]
    pub deterministic: bool,
    /// Stem of the output files.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub name: Option<String>,
}

impl RunArgs {
    pub fn merge(self, file: Self) -> Result<Self> {
        let env_dir = std::env::var_os(crate::OUT_DIR_VAR).map(PathBuf::from);
        let env_workers = match std::env::var(crate::WORKERS_VAR) {
            Ok(v) => Some(
                v.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::Validation(format!("{} = '{v}' is not a count", crate::WORKERS_VAR)))?,
            ),
            Err(_) => None,
        };
        let workers = self.workers.or(env_workers).or(file.workers);
        if workers == Some(0) {
            return Err(Error::Validation("worker count must be positive".into()));
        }
        Ok(Self {
            out_dir: self.out_dir.or(env_dir).or(file.out_dir),
            workers,
            deterministic: self.deterministic || file.deterministic,
            name: self.name.or(file.name),
        })
    }
}

/// Layout of the config file; every table is optional.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub run: Option<RunArgs>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseArgs>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dist: Option<DistArgs>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ctmrg: Option<CtmrgArgs>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub torus: Option<TorusArgs>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepArgs>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bisect: Option<BisectArgs>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub staggered: Option<StaggeredArgs>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit: Option<FitArgs>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub von_mises: Option<VonMisesArgs>,
}

impl ConfigFile {
    /// Reads TOML, or the `provenance.config` block of a JSON result file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Validation(format!("cannot read config {}: {e}", path.display())))?;
        let bad = |e: String| Error::Validation(format!("config {}: {e}", path.display()));
        if path.extension().is_some_and(|e| e == "json") {
            let v: serde_json::Value = serde_json::from_str(&text).map_err(|e| bad(e.to_string()))?;
            let block = v.get("provenance").and_then(|p| p.get("config")).cloned().unwrap_or(v);
            serde_json::from_value(block).map_err(|e| bad(e.to_string()))
        } else {
            toml::from_str(&text).map_err(|e| bad(e.to_string()))
        }
    }
}

/// Flags merged over an optional file section.
pub fn merged<T: Merge + Default + Clone>(flags: T, file: &Option<T>) -> T {
    flags.merge(file.clone().unwrap_or_default())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_forms() {
        assert_eq!("0:1:101".parse::<GridSpec>().unwrap().points().len(), 101);
        assert_eq!("0.1,0.2".parse::<GridSpec>().unwrap().points(), vec![0.1, 0.2]);
        assert_eq!("0.5".parse::<GridSpec>().unwrap().points(), vec![0.5]);
        assert!("0:1".parse::<GridSpec>().is_err());
        assert!("0:1:0".parse::<GridSpec>().is_err());
        let g: GridSpec = "0.25:0.75:3".parse().unwrap();
        assert_eq!(g.to_string().parse::<GridSpec>().unwrap(), g);
    }

    #[test]
    fn flags_win_over_file() {
        let flags = CtmrgArgs { d: Some(16), tol: None, max_iters: None };
        let file = CtmrgArgs { d: Some(8), tol: Some(1e-6), max_iters: None };
        let m = flags.merge(file);
        assert_eq!((m.d, m.tol), (Some(16), Some(1e-6)));
    }

    #[test]
    fn toml_sections_parse() {
        let cfg: ConfigFile = toml::from_str(
            "[noise]\nnoise = \"rotation\"\nR = 0.5\naxis = \"z\"\n[ctmrg]\nD = 12\n[sweep]\ngamma = \"0:1:11\"\n",
        )
        .unwrap();
        let at = cfg.noise.unwrap().couplings().unwrap();
        assert!((at.j1 - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(cfg.ctmrg.unwrap().d, Some(12));
        assert!(toml::from_str::<ConfigFile>("[noise]\nbogus = 1\n").is_err());
    }
}
