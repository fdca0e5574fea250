//! Finite channel families `{W_θ : θ ∈ Θ}` with a shared input composition.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::info_math::Dmc;
use crate::known_exponents::{check_px, e1_bsc, e1_general, ExponentQuery};

/// Crossover probabilities are kept inside `[CLAMP, 1 − CLAMP]` since `log θ` and `β(θ)`
/// diverge at the endpoints.
pub const CLAMP: f64 = 1e-4;

/// Members whose exponent is at most this are dropped from the competitive problems.
pub const ZERO_EXPONENT: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    BscGrid,
    DmcSet,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelFamily {
    pub kind: FamilyKind,
    /// Crossover probabilities after clamping (empty for `DmcSet`).
    pub thetas: Vec<f64>,
    pub channels: Vec<Dmc>,
    pub px: Vec<f64>,
    /// Indices whose crossover probability was moved into `[CLAMP, 1 − CLAMP]`.
    pub clamped: Vec<usize>,
}

impl ChannelFamily {
    pub fn bsc_grid(thetas: &[f64], px: Vec<f64>) -> Result<Self> {
        if thetas.is_empty() {
            return Err(Error::Family("empty family".into()));
        }
        check_px(&px, 2)?;
        let mut clamped = Vec::new();
        let mut out = Vec::with_capacity(thetas.len());
        for (i, &th) in thetas.iter().enumerate() {
            if !(0.0..=1.0).contains(&th) {
                return Err(Error::Family(format!(
                    "theta[{i}] = {th} is outside [0, 1]"
                )));
            }
            let c = th.clamp(CLAMP, 1.0 - CLAMP);
            if c != th {
                clamped.push(i);
            }
            out.push(c);
        }
        let channels = out
            .iter()
            .map(|&t| Dmc::bsc(t))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            kind: FamilyKind::BscGrid,
            thetas: out,
            channels,
            px,
            clamped,
        })
    }

    pub fn dmc_set(channels: Vec<Dmc>, px: Vec<f64>) -> Result<Self> {
        let first = channels
            .first()
            .ok_or_else(|| Error::Family("empty family".into()))?;
        let (nx, ny) = (first.nx, first.ny);
        if let Some(i) = channels.iter().position(|c| c.nx != nx || c.ny != ny) {
            return Err(Error::Family(format!(
                "channel {i} has a different alphabet"
            )));
        }
        check_px(&px, nx)?;
        Ok(Self {
            kind: FamilyKind::DmcSet,
            thetas: Vec::new(),
            channels,
            px,
            clamped: Vec::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.channels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.channels.is_empty()
    }

    pub fn nx(&self) -> usize {
        self.channels[0].nx
    }

    pub fn ny(&self) -> usize {
        self.channels[0].ny
    }

    /// A BSC grid with uniform inputs, where the scalar reductions apply.
    pub fn is_uniform_bsc(&self) -> bool {
        self.kind == FamilyKind::BscGrid && self.px.iter().all(|&p| (p - 0.5).abs() < 1e-12)
    }

    /// Label of member `i` for reports: its crossover probability, or its index.
    pub fn label(&self, i: usize) -> f64 {
        match self.kind {
            FamilyKind::BscGrid => self.thetas[i],
            FamilyKind::DmcSet => i as f64,
        }
    }

    /// Sub-family of the given members.
    pub fn subset(&self, idx: &[usize]) -> Self {
        Self {
            kind: self.kind,
            thetas: if self.thetas.is_empty() {
                Vec::new()
            } else {
                idx.iter().map(|&i| self.thetas[i]).collect()
            },
            channels: idx.iter().map(|&i| self.channels[i].clone()).collect(),
            px: self.px.clone(),
            clamped: Vec::new(),
        }
    }

    /// Known-channel exponent `E₁(R, T, θ)` of every member.
    pub fn exponents(&self, r: f64, t: f64) -> Result<ExponentTable> {
        let uniform_bsc = self.is_uniform_bsc();
        let e1 = (0..self.len())
            .into_par_iter()
            .map(|i| {
                if uniform_bsc {
                    e1_bsc(r, t, self.thetas[i]).map(|e| e.e1)
                } else {
                    let q = ExponentQuery::new(r, t, self.channels[i].clone(), self.px.clone())?;
                    e1_general(&q).map(|e| e.e1)
                }
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok(ExponentTable::new(r, t, e1))
    }
}

/// Per-member exponents at one `(R, T)`.
///
/// A member with `E₁ = 0` places no demand on a universal decoder, so such members are
/// left out of `active` unless every member has a zero exponent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentTable {
    pub r: f64,
    pub t: f64,
    pub e1: Vec<f64>,
    pub active: Vec<usize>,
    pub dropped: Vec<usize>,
}

impl ExponentTable {
    pub fn new(r: f64, t: f64, e1: Vec<f64>) -> Self {
        let (mut active, mut dropped): (Vec<usize>, Vec<usize>) =
            (0..e1.len()).partition(|&i| e1[i] > ZERO_EXPONENT);
        if active.is_empty() {
            active = dropped;
            dropped = Vec::new();
        }
        Self {
            r,
            t,
            e1,
            active,
            dropped,
        }
    }

    /// Some active member has an infinite exponent.
    pub fn has_infinite(&self) -> bool {
        self.active.iter().any(|&i| self.e1[i].is_infinite())
    }
}
