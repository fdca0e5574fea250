//! Channel-family files and the inline `bsc:θ1,θ2,…` shorthand.

use std::path::Path;

use anyhow::{bail, Context, Result};
use erasure_core::{ChannelFamily, Dmc};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    BscGrid,
    DmcSet,
}

/// On-disk schema. `thetas` goes with `bsc_grid`, `channels` with `dmc_set`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyFile {
    #[serde(rename = "type")]
    pub kind: Kind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thetas: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channels: Option<Vec<Vec<Vec<f64>>>>,
    pub px: Vec<f64>,
}

impl FamilyFile {
    pub fn build(&self) -> Result<ChannelFamily> {
        let family = match self.kind {
            Kind::BscGrid => {
                if self.channels.is_some() {
                    bail!("field `channels` is not allowed for type bsc_grid");
                }
                let thetas = self
                    .thetas
                    .as_ref()
                    .context("type bsc_grid needs field `thetas`")?;
                ChannelFamily::bsc_grid(thetas, self.px.clone()).context("field `thetas`")?
            }
            Kind::DmcSet => {
                if self.thetas.is_some() {
                    bail!("field `thetas` is not allowed for type dmc_set");
                }
                let mats = self
                    .channels
                    .as_ref()
                    .context("type dmc_set needs field `channels`")?;
                let channels = mats
                    .iter()
                    .enumerate()
                    .map(|(i, m)| matrix(m).with_context(|| format!("channels[{i}]")))
                    .collect::<Result<Vec<_>>>()?;
                ChannelFamily::dmc_set(channels, self.px.clone())?
            }
        };
        for &i in &family.clamped {
            eprintln!(
                "warning: thetas[{i}] = {} clamped to {}",
                self.thetas.as_ref().map_or(f64::NAN, |t| t[i]),
                family.thetas[i]
            );
        }
        Ok(family)
    }
}

fn matrix(rows: &[Vec<f64>]) -> Result<Dmc> {
    let ny = rows.first().map_or(0, Vec::len);
    if let Some(x) = rows.iter().position(|r| r.len() != ny) {
        bail!("row {x} has {} entries, row 0 has {ny}", rows[x].len());
    }
    Ok(Dmc::new(rows.len(), ny, rows.concat())?)
}

pub fn parse_str(text: &str) -> Result<ChannelFamily> {
    let file: FamilyFile = serde_json::from_str(text)?;
    file.build()
}

pub fn load(path: &Path) -> Result<ChannelFamily> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    parse_str(&text).with_context(|| format!("family file {}", path.display()))
}

/// `bsc:0.1,0.15` is a uniform-input BSC grid; anything else is a path.
pub fn resolve(spec: &str) -> Result<ChannelFamily> {
    match spec.strip_prefix("bsc:") {
        Some(list) => {
            let thetas = list
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse::<f64>()
                        .with_context(|| format!("bad crossover probability {s:?}"))
                })
                .collect::<Result<Vec<_>>>()?;
            let file = FamilyFile {
                kind: Kind::BscGrid,
                thetas: Some(thetas),
                channels: None,
                px: vec![0.5, 0.5],
            };
            file.build()
        }
        None => load(Path::new(spec)),
    }
}
