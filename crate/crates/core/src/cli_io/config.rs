//! The TOML run configuration.

use std::collections::BTreeMap;
use std::fmt;
use std::marker::PhantomData;
use std::path::PathBuf;

use serde::de::{self, MapAccess, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::calibration::CalibrationProtocol;
use crate::designs::{build_design_with, DesignAnchors, DesignName, DesignParams, PsogDesign};
use crate::error::{Error, Result};
use crate::experiments::{full_specs, AxisSpec, ScanpathConfig, ShiftExperimentConfig, SweepGrid};
use crate::eye_render::{CameraConfig, EyeModelConfig, LightingConfig};
use crate::scene::Scene;
use crate::sensing::SignalChain;

use super::toml_error_line;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneSection {
    pub eye: EyeModelConfig,
    pub camera: CameraConfig,
    pub lighting: LightingConfig,
    pub sensing: SignalChain,
}

impl SceneSection {
    pub fn build(&self) -> Result<Scene> {
        Scene::new(self.eye.clone(), self.camera.clone(), self.lighting.clone())?
            .with_chain(self.sensing.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignSection {
    pub name: DesignName,
    /// Named parameters; the horizontal channel's set for split designs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<BTreeMap<String, f64>>,
    /// Vertical-channel parameters of D1/D3/D4, used by shift runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vertical_params: Option<BTreeMap<String, f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<BTreeMap<String, AxisSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anchors: Option<DesignAnchors>,
}

impl DesignSection {
    fn named(name: DesignName) -> Self {
        Self {
            name,
            params: None,
            vertical_params: None,
            sweep: None,
            anchors: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Single,
    Sweep,
    Tradeoff,
    Shift,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Single => "single",
            Mode::Sweep => "sweep",
            Mode::Tradeoff => "tradeoff",
            Mode::Shift => "shift",
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    /// Required unless the caller (e.g. a CLI subcommand) supplies it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
    #[serde(default)]
    pub shift: ShiftExperimentConfig,
}

impl ExperimentSection {
    fn of_mode(mode: Mode) -> Self {
        Self {
            mode: Some(mode),
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Svg,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub directory: PathBuf,
    pub formats: Vec<Format>,
    #[serde(serialize_with = "ser_seed", deserialize_with = "de_seed")]
    pub seed: u64,
    /// Wall-clock times in the manifest; off keeps bundles byte-reproducible.
    pub record_timestamps: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            directory: PathBuf::from("results"),
            formats: vec![Format::Csv, Format::Svg],
            seed: 0,
            record_timestamps: false,
        }
    }
}

impl OutputSection {
    pub fn wants(&self, format: Format) -> bool {
        self.formats.contains(&format)
    }
}

/// A complete, validated run description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub scene: SceneSection,
    #[serde(deserialize_with = "name_or_table")]
    pub design: DesignSection,
    #[serde(default)]
    pub calibration: CalibrationProtocol,
    #[serde(default)]
    pub scanpath: ScanpathConfig,
    #[serde(default, deserialize_with = "name_or_table")]
    pub experiment: ExperimentSection,
    #[serde(default)]
    pub output: OutputSection,
}

/// Sections that accept a bare name as shorthand (`design = "D1"`).
trait Shorthand: Sized {
    fn from_name(name: &str) -> std::result::Result<Self, String>;
}

impl Shorthand for DesignSection {
    fn from_name(name: &str) -> std::result::Result<Self, String> {
        name.parse::<DesignName>()
            .map(Self::named)
            .map_err(|e| e.to_string())
    }
}

impl Shorthand for ExperimentSection {
    fn from_name(name: &str) -> std::result::Result<Self, String> {
        Mode::deserialize(de::value::StrDeserializer::<de::value::Error>::new(name))
            .map(Self::of_mode)
            .map_err(|e| e.to_string())
    }
}

fn name_or_table<'de, D, T>(d: D) -> std::result::Result<T, D::Error>
where
    D: Deserializer<'de>,
    T: Deserialize<'de> + Shorthand,
{
    struct V<T>(PhantomData<T>);
    impl<'de, T: Deserialize<'de> + Shorthand> Visitor<'de> for V<T> {
        type Value = T;
        fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
            f.write_str("a name or a table")
        }
        fn visit_str<E: de::Error>(self, s: &str) -> std::result::Result<T, E> {
            T::from_name(s).map_err(E::custom)
        }
        fn visit_map<A: MapAccess<'de>>(self, map: A) -> std::result::Result<T, A::Error> {
            T::deserialize(de::value::MapAccessDeserializer::new(map))
        }
    }
    d.deserialize_any(V(PhantomData))
}

// Seeds above i64::MAX are written as strings for TOML readers limited to
// signed integers; both forms are accepted on input.
fn ser_seed<S: Serializer>(seed: &u64, s: S) -> std::result::Result<S::Ok, S::Error> {
    match i64::try_from(*seed) {
        Ok(v) => s.serialize_i64(v),
        Err(_) => s.serialize_str(&seed.to_string()),
    }
}

fn de_seed<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<u64, D::Error> {
    struct V;
    impl<'v> Visitor<'v> for V {
        type Value = u64;
        fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
            f.write_str("an unsigned 64-bit integer")
        }
        fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<u64, E> {
            u64::try_from(v).map_err(|_| E::custom("seed must be >= 0"))
        }
        fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<u64, E> {
            Ok(v)
        }
        fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<u64, E> {
            v.parse()
                .map_err(|_| E::custom(format!("seed `{v}` is not an unsigned 64-bit integer")))
        }
    }
    d.deserialize_any(V)
}

fn params_from_map(
    name: DesignName,
    key: &str,
    map: &BTreeMap<String, f64>,
) -> Result<DesignParams> {
    let names = name.parameter_names();
    if let Some(unknown) = map.keys().find(|k| !names.contains(&k.as_str())) {
        return Err(Error::config(
            format!("{key}.{unknown}"),
            format!(
                "unknown parameter for {name} (expected {})",
                names.join(", ")
            ),
        ));
    }
    let values = names
        .iter()
        .map(|n| {
            map.get(*n).copied().ok_or_else(|| {
                Error::config(
                    format!("{key}.{n}"),
                    format!("missing parameter for {name}"),
                )
            })
        })
        .collect::<Result<Vec<f64>>>()?;
    let params = DesignParams::from_values(name, &values)?;
    params
        .validate()
        .map_err(|e| prefix_error(e, &format!("{key}.")))?;
    Ok(params)
}

fn params_to_map(params: &DesignParams) -> BTreeMap<String, f64> {
    params
        .name()
        .parameter_names()
        .iter()
        .map(|n| n.to_string())
        .zip(params.values())
        .collect()
}

/// Re-roots a section-local validation key under its config path.
fn prefix_error(e: Error, prefix: &str) -> Error {
    match e {
        Error::Config { key, message } if !key.starts_with(prefix) => {
            Error::config(format!("{prefix}{key}"), message)
        }
        other => other,
    }
}

fn rooted(e: Error) -> Error {
    let Error::Config { key, message } = e else {
        return e;
    };
    const ROOTS: [(&str, &str); 9] = [
        ("eye.", "scene.eye."),
        ("camera.", "scene.camera."),
        ("lighting.", "scene.lighting."),
        ("photodiode.", "scene.sensing.photodiode."),
        ("sensing.", "scene.sensing."),
        ("anchors.", "design.anchors."),
        ("dilation.", "scanpath.dilation."),
        ("shift.", "experiment.shift."),
        ("area.", "design.area."),
    ];
    for (from, to) in ROOTS {
        if let Some(rest) = key.strip_prefix(from) {
            return Error::config(format!("{to}{rest}"), message);
        }
    }
    Error::Config { key, message }
}

impl RunConfig {
    /// Minimal config for `design` in `mode`, everything else defaulted.
    pub fn new(design: DesignName, mode: Mode) -> Self {
        let mut cfg = Self {
            scene: SceneSection::default(),
            design: DesignSection::named(design),
            calibration: CalibrationProtocol::default(),
            scanpath: ScanpathConfig::default(),
            experiment: ExperimentSection::of_mode(mode),
            output: OutputSection::default(),
        };
        if matches!(mode, Mode::Sweep | Mode::Tradeoff) {
            cfg.design.sweep = Some(full_specs(design));
        }
        cfg.normalize();
        cfg
    }

    /// Fills every optional field with its effective value.
    fn normalize(&mut self) {
        let name = self.design.name;
        let explicit = self.design.params.is_some();
        if self.design.params.is_none() {
            self.design.params = Some(params_to_map(&DesignParams::default_for(name)));
        }
        if name.has_separate_channels() && self.design.vertical_params.is_none() {
            self.design.vertical_params = if explicit {
                self.design.params.clone()
            } else {
                Some(params_to_map(&DesignParams::default_vertical_for(name)))
            };
        }
        if self.design.anchors.is_none() {
            self.design.anchors = Some(DesignAnchors::for_model(&self.scene.eye));
        }
        self.output.formats.sort();
        self.output.formats.dedup();
    }

    pub fn mode(&self) -> Mode {
        self.experiment.mode.expect("validated config has a mode")
    }

    pub fn validate(&self) -> Result<()> {
        let Some(mode) = self.experiment.mode else {
            return Err(Error::config(
                "experiment.mode",
                "required (single, sweep, tradeoff or shift)",
            ));
        };
        self.scene.eye.validate().map_err(rooted)?;
        self.scene.camera.validate().map_err(rooted)?;
        self.scene.lighting.validate().map_err(rooted)?;
        self.scene.sensing.validate().map_err(rooted)?;
        self.calibration.validate()?;
        self.scanpath.validate().map_err(rooted)?;
        self.experiment.shift.validate().map_err(rooted)?;
        if self.scene.camera.is_shifted() {
            return Err(Error::config(
                "scene.camera.shift_x",
                "the base scene must be unshifted; shifts are set by the shift experiment",
            ));
        }
        if let Some(a) = &self.design.anchors {
            a.validate().map_err(rooted)?;
        }
        self.params()?;
        self.vertical_params()?;
        if self.design.vertical_params.is_some() && !self.design.name.has_separate_channels() {
            return Err(Error::config(
                "design.vertical_params",
                format!("{} shares its sensors between channels", self.design.name),
            ));
        }
        match mode {
            Mode::Sweep | Mode::Tradeoff => {
                self.sweep_grid()?;
            }
            Mode::Single | Mode::Shift => {}
        }
        self.design_from(&self.params()?)?;
        Ok(())
    }

    pub fn params(&self) -> Result<DesignParams> {
        match &self.design.params {
            Some(map) => params_from_map(self.design.name, "design.params", map),
            None => Ok(DesignParams::default_for(self.design.name)),
        }
    }

    /// Vertical-channel parameters; equal to [`RunConfig::params`] for D2.
    pub fn vertical_params(&self) -> Result<DesignParams> {
        match &self.design.vertical_params {
            Some(map) => params_from_map(self.design.name, "design.vertical_params", map),
            None => self.params(),
        }
    }

    pub fn anchors(&self) -> DesignAnchors {
        self.design
            .anchors
            .clone()
            .unwrap_or_else(|| DesignAnchors::for_model(&self.scene.eye))
    }

    pub fn design_from(&self, params: &DesignParams) -> Result<PsogDesign> {
        build_design_with(self.design.name, params, &self.anchors()).map_err(rooted)
    }

    /// Design used by single runs: the configured parameter set.
    pub fn design(&self) -> Result<PsogDesign> {
        self.design_from(&self.params()?)
    }

    /// Design used by shift runs: horizontal sensors from `params`, vertical
    /// sensors from `vertical_params`.
    pub fn shift_design(&self) -> Result<PsogDesign> {
        let h = self.design_from(&self.params()?)?;
        let v = self.design_from(&self.vertical_params()?)?;
        PsogDesign::compose(&h, &v)
    }

    pub fn sweep_grid(&self) -> Result<SweepGrid> {
        let Some(specs) = &self.design.sweep else {
            return Err(Error::config(
                "design.sweep",
                format!("required for mode `{}`", self.mode()),
            ));
        };
        SweepGrid::from_specs(self.design.name, specs, &self.params()?)
    }

    /// Canonical TOML text: normalised, every default spelled out.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serializes")
    }

    /// Canonical text with run-location fields removed; this is what the
    /// manifest hashes, so moving the output directory keeps the hash.
    pub fn portable_toml(&self) -> String {
        let mut c = self.clone();
        c.output.directory = OutputSection::default().directory;
        c.to_toml()
    }
}

/// Parses, normalises and validates a run configuration.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    parse_config_with(text, None)
}

/// As [`parse_config`], with `mode` replacing whatever the text names.
pub fn parse_config_with(text: &str, mode: Option<Mode>) -> Result<RunConfig> {
    let mut cfg: RunConfig = toml::from_str(text).map_err(|e| Error::ConfigParse {
        line: toml_error_line(text, &e),
        message: e.message().to_string(),
    })?;
    if mode.is_some() {
        cfg.experiment.mode = mode;
    }
    cfg.normalize();
    cfg.validate()?;
    Ok(cfg)
}
