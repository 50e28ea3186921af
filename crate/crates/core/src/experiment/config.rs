use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qr::{Algorithm, MultiSketch, SingleSketch, SketchConfig, SketchMode};
use crate::sketch::{countsketch_size, gaussian_size, EmbeddingParams};
use crate::zoo::{Family, MatrixSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Accuracy,
    Timing,
    Robustness,
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "accuracy" => Ok(Self::Accuracy),
            "timing" => Ok(Self::Timing),
            "robustness" => Ok(Self::Robustness),
            _ => Err(Error::Config(format!("unknown experiment kind `{s}`"))),
        }
    }
}

/// What a sweep value replaces.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepAxis {
    /// The family parameter (`sigma`, `a`, `beta`, target `kappa`).
    Param,
    M,
    N,
    /// CountSketch size.
    S1,
    /// Gaussian size, for both the single and the multi sketch.
    S2,
    /// CountSketch failure probability; `s1` follows from the sizing rule.
    P1,
    /// Gaussian failure probability, for both the single and the multi sketch.
    P2,
}

impl SweepAxis {
    pub fn id(self) -> &'static str {
        match self {
            SweepAxis::Param => "param",
            SweepAxis::M => "m",
            SweepAxis::N => "n",
            SweepAxis::S1 => "s1",
            SweepAxis::S2 => "s2",
            SweepAxis::P1 => "p1",
            SweepAxis::P2 => "p2",
        }
    }

    fn is_integral(self) -> bool {
        matches!(self, SweepAxis::M | SweepAxis::N | SweepAxis::S1 | SweepAxis::S2)
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let all = [
            SweepAxis::Param,
            SweepAxis::M,
            SweepAxis::N,
            SweepAxis::S1,
            SweepAxis::S2,
            SweepAxis::P1,
            SweepAxis::P2,
        ];
        let key = s.trim().to_ascii_lowercase();
        all.into_iter()
            .find(|a| a.id() == key)
            .ok_or_else(|| Error::Config(format!("unknown sweep axis `{s}`")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    #[serde(default = "default_axis")]
    pub axis: SweepAxis,
    pub values: Vec<f64>,
}

fn default_axis() -> SweepAxis {
    SweepAxis::Param
}

/// Sketch parameters before sizing. Explicit sizes win over the sizing rules.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SketchSettings {
    pub mode: SketchMode,
    pub eps: f64,
    pub p: f64,
    pub eps1: f64,
    pub p1: f64,
    pub eps2: f64,
    pub p2: f64,
    pub eta: f64,
    pub s: Option<usize>,
    pub s1: Option<usize>,
    pub s2: Option<usize>,
}

impl Default for SketchSettings {
    fn default() -> Self {
        Self {
            mode: SketchMode::Multi,
            eps: 0.5,
            p: 0.6,
            eps1: 0.5,
            p1: 0.6,
            eps2: 0.5,
            p2: 0.4,
            eta: 1.0,
            s: None,
            s1: None,
            s2: None,
        }
    }
}

impl SketchSettings {
    /// Sized configuration for `n` columns.
    pub fn resolve(&self, n: usize, seed: u64) -> Result<SketchConfig> {
        let single = EmbeddingParams::with_eta(self.eps, self.p, n, self.eta)?;
        let first = EmbeddingParams::with_eta(self.eps1, self.p1, n, self.eta)?;
        let second = EmbeddingParams::with_eta(self.eps2, self.p2, n, self.eta)?;
        Ok(SketchConfig {
            mode: self.mode,
            single: SingleSketch {
                epsilon: self.eps,
                p: self.p,
                s: self.s.unwrap_or_else(|| gaussian_size(&single)),
            },
            multi: MultiSketch {
                epsilon1: self.eps1,
                p1: self.p1,
                s1: self.s1.unwrap_or_else(|| countsketch_size(&first)),
                epsilon2: self.eps2,
                p2: self.p2,
                s2: self.s2.unwrap_or_else(|| gaussian_size(&second)),
            },
            seed,
        })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSettings {
    pub csv: Option<PathBuf>,
    pub markdown: Option<PathBuf>,
    pub json: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimingSettings {
    pub warmup_runs: usize,
    pub measured_runs: usize,
}

impl Default for TimingSettings {
    fn default() -> Self {
        Self {
            warmup_runs: 1,
            measured_runs: 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: String,
    #[serde(default = "default_kind")]
    pub kind: ExperimentKind,
    pub algorithms: Vec<Algorithm>,
    pub matrix: MatrixSpec,
    pub sweep: Sweep,
    #[serde(default)]
    pub sketch: SketchSettings,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default)]
    pub outputs: OutputSettings,
    #[serde(default)]
    pub timing: TimingSettings,
    /// Worker threads for trial-level parallelism; `None` uses all cores.
    #[serde(default)]
    pub threads: Option<usize>,
}

fn default_kind() -> ExperimentKind {
    ExperimentKind::Accuracy
}

fn default_trials() -> usize {
    1
}

/// One resolved sweep point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepPoint {
    pub index: usize,
    pub value: f64,
    pub matrix: MatrixSpec,
    pub sketch: SketchSettings,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.algorithms.is_empty() {
            return Err(Error::Config("at least one algorithm is required".into()));
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be >= 1".into()));
        }
        if self.sweep.values.is_empty() {
            return Err(Error::Config("sweep must contain at least one value".into()));
        }
        if self.kind == ExperimentKind::Timing && self.timing.measured_runs < 3 {
            return Err(Error::Config("timing needs measured_runs >= 3".into()));
        }
        if self.threads == Some(0) {
            return Err(Error::Config("threads must be >= 1".into()));
        }
        for point in self.points()? {
            point.matrix.validate()?;
            point.sketch.resolve(point.matrix.n, 0)?;
        }
        Ok(())
    }

    /// Sweep points with the swept value substituted.
    pub fn points(&self) -> Result<Vec<SweepPoint>> {
        let axis = self.sweep.axis;
        self.sweep
            .values
            .iter()
            .enumerate()
            .map(|(index, &value)| {
                if axis.is_integral() && !(value >= 1.0 && value.fract() == 0.0) {
                    return Err(Error::Config(format!(
                        "sweep over {} needs positive integers (got {value})",
                        axis.id()
                    )));
                }
                let mut matrix = self.matrix;
                let mut sketch = self.sketch;
                let count = value as usize;
                match axis {
                    SweepAxis::Param => matrix.param = value,
                    SweepAxis::M => matrix.m = count,
                    SweepAxis::N => matrix.n = count,
                    SweepAxis::S1 => sketch.s1 = Some(count),
                    SweepAxis::S2 => {
                        sketch.s2 = Some(count);
                        sketch.s = Some(count);
                    }
                    SweepAxis::P1 => {
                        sketch.p1 = value;
                        sketch.s1 = None;
                    }
                    SweepAxis::P2 => {
                        sketch.p2 = value;
                        sketch.p = value;
                        sketch.s2 = None;
                        sketch.s = None;
                    }
                }
                Ok(SweepPoint {
                    index,
                    value,
                    matrix,
                    sketch,
                })
            })
            .collect()
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }
}

/// Command-line style overrides applied on top of a file or preset.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub algorithms: Option<Vec<Algorithm>>,
    pub family: Option<Family>,
    pub m: Option<usize>,
    pub n: Option<usize>,
    pub param: Option<f64>,
    pub sweep: Option<(SweepAxis, Vec<f64>)>,
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    pub eps1: Option<f64>,
    pub p1: Option<f64>,
    pub eps2: Option<f64>,
    pub p2: Option<f64>,
    pub s1: Option<usize>,
    pub s2: Option<usize>,
    pub kind: Option<ExperimentKind>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut ExperimentConfig) {
        if let Some(a) = &self.algorithms {
            cfg.algorithms = a.clone();
        }
        if let Some(f) = self.family {
            cfg.matrix.family = f;
        }
        if let Some(m) = self.m {
            cfg.matrix.m = m;
        }
        if let Some(n) = self.n {
            cfg.matrix.n = n;
        }
        if let Some(p) = self.param {
            cfg.matrix.param = p;
            if self.sweep.is_none() {
                cfg.sweep = Sweep {
                    axis: SweepAxis::Param,
                    values: vec![p],
                };
            }
        }
        if let Some((axis, values)) = &self.sweep {
            cfg.sweep = Sweep {
                axis: *axis,
                values: values.clone(),
            };
        }
        if let Some(t) = self.trials {
            cfg.trials = t;
        }
        if let Some(s) = self.seed {
            cfg.base_seed = s;
        }
        let sk = &mut cfg.sketch;
        if let Some(v) = self.eps1 {
            sk.eps1 = v;
        }
        if let Some(v) = self.p1 {
            sk.p1 = v;
            sk.s1 = None;
        }
        if let Some(v) = self.eps2 {
            sk.eps2 = v;
            sk.eps = v;
        }
        if let Some(v) = self.p2 {
            sk.p2 = v;
            sk.p = v;
            sk.s2 = None;
            sk.s = None;
        }
        if let Some(v) = self.s1 {
            sk.s1 = Some(v);
        }
        if let Some(v) = self.s2 {
            sk.s2 = Some(v);
            sk.s = Some(v);
        }
        if let Some(k) = self.kind {
            cfg.kind = k;
        }
    }
}

pub const PRESET_NAMES: [&str; 18] = [
    "table6",
    "table6-desk",
    "table8",
    "table8-desk",
    "table10",
    "table10-desk",
    "table12",
    "table12-desk",
    "table13",
    "table13-desk",
    "table14",
    "table14-desk",
    "table15",
    "table15-desk",
    "table16",
    "table16-desk",
    "table18",
    "table18-desk",
];

fn base(name: &str, kind: ExperimentKind, algs: &[Algorithm], matrix: MatrixSpec, sweep: Sweep) -> ExperimentConfig {
    ExperimentConfig {
        name: name.to_string(),
        kind,
        algorithms: algs.to_vec(),
        matrix,
        sweep,
        sketch: SketchSettings::default(),
        trials: if kind == ExperimentKind::Timing { 1 } else { 100 },
        base_seed: 2024,
        outputs: OutputSettings::default(),
        timing: TimingSettings::default(),
        threads: None,
    }
}

fn sweep(axis: SweepAxis, values: &[f64]) -> Sweep {
    Sweep {
        axis,
        values: values.to_vec(),
    }
}

/// Built-in configurations mirroring the published experiments. The
/// `-desk` variants divide `m`, and any explicit `m` or `s1` sweep values,
/// by 10.
pub fn preset(name: &str) -> Result<ExperimentConfig> {
    use Algorithm::*;
    use ExperimentKind::*;
    let (stem, desk) = match name.strip_suffix("-desk") {
        Some(stem) => (stem, true),
        None => (name, false),
    };
    let mut cfg = match stem {
        "table6" => base(
            name,
            Accuracy,
            &[ShiftedCholeskyQr3, Slhc3, Sslhc3],
            MatrixSpec::new(Family::SvdConditioned, 20000, 50, 1e-10, 0),
            sweep(SweepAxis::Param, &[1e-10, 1e-12, 1e-14, 1e-16]),
        ),
        "table8" => base(
            name,
            Accuracy,
            &[Luc2, Slhc3, Sslhc3],
            MatrixSpec::new(Family::LowerTriStack, 20000, 50, -0.7, 0),
            sweep(SweepAxis::Param, &[-0.7, -0.8, -0.9, -1.0]),
        ),
        "table10" => base(
            name,
            Accuracy,
            &[Rhc, Slhc3, Sslhc3],
            MatrixSpec::new(Family::Arrowhead, 20000, 50, 1e-15, 0),
            sweep(SweepAxis::Param, &[1e-15, 1e-20, 1e-25, 1e-30]),
        ),
        "table12" | "table13" | "table14" | "table15" => {
            let algs: &[Algorithm] = match stem {
                "table12" | "table13" => &[ShiftedCholeskyQr3, Luc2, Rhc, Slhc3, Sslhc3],
                "table14" => &[Slhc3, Sslhc3],
                _ => &[Sslhc3],
            };
            let sw = match stem {
                "table12" => sweep(SweepAxis::M, &[30000.0, 40000.0, 50000.0, 60000.0]),
                "table13" => sweep(SweepAxis::N, &[5.0, 10.0, 20.0, 50.0]),
                "table14" => sweep(SweepAxis::S2, &[20.0, 50.0, 100.0, 200.0]),
                _ => sweep(SweepAxis::S1, &[2800.0, 5000.0, 10000.0, 15000.0]),
            };
            let mut cfg = base(
                name,
                Timing,
                algs,
                MatrixSpec::new(Family::SvdConditioned, 20000, 20, 1e-12, 0),
                sw,
            );
            cfg.sketch.s1 = Some(2800);
            // the Gaussian must have at least n rows, so the n sweep keeps the sizing rule
            if stem != "table13" {
                cfg.sketch.s2 = Some(20);
                cfg.sketch.s = Some(20);
            }
            cfg
        }
        "table16" | "table18" => {
            let (algs, sw): (&[Algorithm], Sweep) = if stem == "table16" {
                (&[Sslhc3], sweep(SweepAxis::P1, &[0.3, 0.4, 0.5, 0.6]))
            } else {
                (&[Slhc3, Sslhc3], sweep(SweepAxis::P2, &[0.1, 0.2, 0.3, 0.4]))
            };
            let mut cfg = base(
                name,
                Robustness,
                algs,
                MatrixSpec::new(Family::SparseRandom, 20000, 20, 1e12, 0),
                sw,
            );
            if stem == "table16" {
                cfg.sketch.s2 = Some(20);
            }
            cfg
        }
        _ => {
            return Err(Error::Config(format!(
                "unknown preset `{name}` (known: {})",
                PRESET_NAMES.join(", ")
            )))
        }
    };
    if desk {
        cfg.matrix.m /= 10;
        if let Some(s1) = cfg.sketch.s1.as_mut() {
            *s1 /= 10;
        }
        if matches!(cfg.sweep.axis, SweepAxis::M | SweepAxis::S1) {
            for v in &mut cfg.sweep.values {
                *v /= 10.0;
            }
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_presets_validate() {
        for name in PRESET_NAMES {
            let cfg = preset(name).unwrap();
            assert_eq!(cfg.name, name);
            if name.ends_with("-desk") {
                assert!(cfg.points().unwrap().iter().all(|p| p.matrix.m <= 6000));
            }
        }
        assert!(preset("table99").is_err());
    }

    #[test]
    fn table6_desk_shape() {
        let cfg = preset("table6-desk").unwrap();
        assert_eq!((cfg.matrix.m, cfg.matrix.n, cfg.matrix.blocks), (2000, 50, 10));
        let sk = cfg.sketch.resolve(50, 1).unwrap();
        assert_eq!(sk.single.s, 50);
        assert_eq!(sk.multi.s1, 17000);
    }

    #[test]
    fn p_sweeps_resize_sketches() {
        let cfg = preset("table18").unwrap();
        let sizes: Vec<usize> = cfg
            .points()
            .unwrap()
            .iter()
            .map(|p| p.sketch.resolve(20, 0).unwrap().multi.s2)
            .collect();
        assert_eq!(sizes, vec![28, 20, 20, 20]);
        let cfg = preset("table16").unwrap();
        let s1: Vec<usize> = cfg
            .points()
            .unwrap()
            .iter()
            .map(|p| p.sketch.resolve(20, 0).unwrap().multi.s1)
            .collect();
        assert_eq!(s1, vec![5600, 4200, 3360, 2800]);
    }

    #[test]
    fn toml_round_trip_and_overrides() {
        let cfg = preset("table8-desk").unwrap();
        let text = cfg.to_toml_string().unwrap();
        let mut back = ExperimentConfig::from_toml_str(&text).unwrap();
        assert_eq!(back, cfg);
        Overrides {
            algorithms: Some(vec![Algorithm::Slhc3]),
            trials: Some(3),
            seed: Some(9),
            p2: Some(0.2),
            ..Default::default()
        }
        .apply(&mut back);
        assert_eq!(back.algorithms, vec![Algorithm::Slhc3]);
        assert_eq!((back.trials, back.base_seed, back.sketch.p), (3, 9, 0.2));
    }

    #[test]
    fn minimal_toml() {
        let text = r#"
            algorithms = ["sslhc3", "luc2"]
            trials = 2
            [matrix]
            family = "arrowhead"
            m = 300
            n = 10
            param = 1e-8
            [sweep]
            values = [1e-8, 1e-12]
        "#;
        let cfg = ExperimentConfig::from_toml_str(text).unwrap();
        assert_eq!(cfg.kind, ExperimentKind::Accuracy);
        assert_eq!(cfg.sweep.axis, SweepAxis::Param);
        assert_eq!(cfg.timing.measured_runs, 3);
    }

    #[test]
    fn invalid_configs() {
        let mut cfg = preset("table6-desk").unwrap();
        cfg.trials = 0;
        assert!(cfg.validate().is_err());
        let mut cfg = preset("table12-desk").unwrap();
        cfg.timing.measured_runs = 2;
        assert!(cfg.validate().is_err());
        let mut cfg = preset("table12-desk").unwrap();
        cfg.sweep.values = vec![1.5];
        assert!(cfg.validate().is_err());
        assert!(ExperimentConfig::from_toml_str("algorithms = [\"nope\"]").is_err());
    }
}
