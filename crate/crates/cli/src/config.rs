//! `key = value` pipeline configuration, overridden by command-line flags.

use std::path::Path;

use xrsynth_core::drr::DrrParams;
use xrsynth_core::enhance::EnhanceParams;
use xrsynth_core::lungseg::{Connectivity, SegParams};
use xrsynth_core::metrics::DEFAULT_REPLICATES;
use xrsynth_core::targets::NoduleFilter;

use crate::Failure;

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub drr: DrrParams,
    pub seg: SegParams,
    pub filter: NoduleFilter,
    pub enhance: EnhanceParams,
    pub weights: Vec<f64>,
    pub workers: Option<usize>,
    pub seed: Option<u64>,
    pub replicates: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            drr: DrrParams::default(),
            seg: SegParams::default(),
            filter: NoduleFilter::default(),
            enhance: EnhanceParams::default(),
            weights: Vec::new(),
            workers: None,
            seed: None,
            replicates: DEFAULT_REPLICATES,
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, Failure> {
    value
        .parse()
        .map_err(|_| Failure::usage(format!("config key `{key}`: cannot parse `{value}`")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool, Failure> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Failure::usage(format!("config key `{key}`: expected a boolean, got `{value}`"))),
    }
}

pub fn parse_pair(value: &str) -> Result<(usize, usize), String> {
    let parts: Vec<&str> = value.split([',', 'x', ' ']).filter(|s| !s.is_empty()).collect();
    match parts.as_slice() {
        [a, b] => Ok((
            a.parse().map_err(|_| format!("bad integer `{a}`"))?,
            b.parse().map_err(|_| format!("bad integer `{b}`"))?,
        )),
        _ => Err(format!("expected two integers, got `{value}`")),
    }
}

pub fn parse_dims(value: &str) -> Result<[usize; 3], String> {
    let parts: Vec<usize> = value
        .split([',', 'x', ' '])
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|_| format!("bad integer `{s}`")))
        .collect::<Result<_, _>>()?;
    parts.try_into().map_err(|_| format!("expected three integers, got `{value}`"))
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Failure::from(xrsynth_core::Error::MalformedHeader {
                path: path.to_path_buf(),
                reason: e.to_string(),
            })
        })?;
        let mut cfg = PipelineConfig::default();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Failure::usage(format!("{}:{}: expected `key = value`", path.display(), lineno + 1))
            })?;
            cfg.set(key.trim(), value.trim())?;
        }
        Ok(cfg)
    }

    fn set(&mut self, key: &str, value: &str) -> Result<(), Failure> {
        match key {
            "mu_water" => self.drr.mu_water = parse(key, value)?,
            "beta" => self.drr.beta = parse(key, value)?,
            "hu_threshold" => self.seg.hu_threshold = parse(key, value)?,
            "connectivity" => {
                self.seg.connectivity = value.parse::<Connectivity>().map_err(Failure::from)?
            }
            "max_components" => self.seg.max_components = parse(key, value)?,
            "exclude_border_components" => self.seg.exclude_border_components = parse_bool(key, value)?,
            "min_median_texture" => self.filter.min_median_texture = parse(key, value)?,
            "min_median_subtlety" => self.filter.min_median_subtlety = parse(key, value)?,
            "min_radiologists" => self.filter.min_radiologists = parse(key, value)?,
            "w" => {
                self.weights = value
                    .split(',')
                    .map(|v| parse(key, v.trim()))
                    .collect::<Result<_, _>>()?
            }
            "clahe_window" => {
                self.enhance.clahe_window =
                    parse_pair(value).map_err(|e| Failure::usage(format!("config key `{key}`: {e}")))?
            }
            "clahe_clip" => self.enhance.clahe_clip = parse(key, value)?,
            "lung_mean" => self.enhance.lung_mean = parse(key, value)?,
            "lung_std" => self.enhance.lung_std = parse(key, value)?,
            "preprocess" => self.enhance.preprocess = parse_bool(key, value)?,
            "workers" => self.workers = Some(parse(key, value)?),
            "seed" => self.seed = Some(parse(key, value)?),
            "replicates" => self.replicates = parse(key, value)?,
            _ => return Err(Failure::usage(format!("unknown config key `{key}`"))),
        }
        Ok(())
    }
}
