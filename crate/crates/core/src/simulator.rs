//! Short-blocklength simulation of fixed-composition random codes under Forney's
//! erasure/list decoder and the universal decoder built from
//! `f(x, y) = max_θ exp{n[ξE₁(θ) + T]} W_θ(y|x)`.
//!
//! Both decoders pass message `m` when `score_m − log Σ_{m′≠m} exp(score_m′) ≥ nT`, with ties
//! counted as a pass. All likelihoods stay in the log domain.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::{ChannelFamily, ExponentTable};
use crate::info_math::Dmc;

/// Largest output space enumerated by the exhaustive method.
pub const MAX_EXHAUSTIVE_OUTPUTS: usize = 1 << 22;

/// Monte-Carlo trials per independently seeded block.
const BLOCK: u64 = 1024;

/// Two-sided 95% normal quantile used by the Wilson intervals.
const Z95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecoderMode {
    Forney,
    Universal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    MonteCarlo,
    Exhaustive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub n: usize,
    pub r: f64,
    pub t: f64,
    /// The channel that actually carries the codewords.
    pub channel: Dmc,
    /// Family and fraction of the universal metric; unused by Forney's decoder.
    pub family: Option<ChannelFamily>,
    pub xi: f64,
    /// Code composition; `n·px(x)` must be an integer for every `x`.
    pub px: Vec<f64>,
    /// Monte-Carlo trials, or sampled codebooks averaged by the exhaustive method.
    pub trials: u64,
    pub seed: u64,
    pub mode: DecoderMode,
    pub method: Method,
    /// Use this codebook instead of sampling one.
    pub codebook: Option<Vec<Vec<u8>>>,
}

impl SimConfig {
    /// Forney decoding of a BSC with a balanced composition, sampled by Monte-Carlo.
    pub fn bsc(n: usize, r: f64, t: f64, theta: f64, trials: u64, seed: u64) -> Result<Self> {
        Ok(Self {
            n,
            r,
            t,
            channel: Dmc::bsc(theta)?,
            family: None,
            xi: 0.0,
            px: vec![0.5, 0.5],
            trials,
            seed,
            mode: DecoderMode::Forney,
            method: Method::MonteCarlo,
            codebook: None,
        })
    }

    /// Number of codewords, `⌈e^{nR}⌉`. A relative slack of `1e-12` keeps exact integers
    /// such as `e^{n log 2}` from rounding up.
    pub fn codewords(&self) -> usize {
        let v = (self.n as f64 * self.r).exp();
        (v * (1.0 - 1e-12)).ceil() as usize
    }

    /// `log M / n`, the rate actually simulated.
    pub fn effective_rate(&self) -> f64 {
        (self.codewords() as f64).ln() / self.n as f64
    }

    /// Symbol counts of the composition.
    fn counts(&self) -> Result<Vec<usize>> {
        composition_counts(self.n, &self.px)
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 || self.n > 64 {
            return Err(Error::Domain {
                name: "n",
                value: self.n as f64,
                expected: "1..=64",
            });
        }
        if !self.r.is_finite() || self.r < 0.0 || self.codewords() < 2 {
            return Err(Error::Domain {
                name: "r",
                value: self.r,
                expected: "a rate giving at least two codewords",
            });
        }
        if !self.t.is_finite() {
            return Err(Error::Domain {
                name: "t",
                value: self.t,
                expected: "finite",
            });
        }
        if self.trials == 0 {
            return Err(Error::Domain {
                name: "trials",
                value: 0.0,
                expected: "at least 1",
            });
        }
        if self.px.len() != self.channel.nx {
            return Err(Error::Shape(
                "composition length differs from the input alphabet".into(),
            ));
        }
        self.counts()?;
        if let Some(cb) = &self.codebook {
            let m = self.codewords();
            if cb.len() != m || cb.iter().any(|w| w.len() != self.n) {
                return Err(Error::Shape(format!(
                    "codebook must hold {m} words of length {}",
                    self.n
                )));
            }
            if cb.iter().flatten().any(|&x| x as usize >= self.channel.nx) {
                return Err(Error::Shape(
                    "codeword symbol outside the input alphabet".into(),
                ));
            }
        }
        if self.mode == DecoderMode::Universal {
            let fam = self
                .family
                .as_ref()
                .ok_or_else(|| Error::Family("universal mode needs a family".into()))?;
            if fam.nx() != self.channel.nx || fam.ny() != self.channel.ny {
                return Err(Error::Shape("family and channel alphabets differ".into()));
            }
        }
        if self.method == Method::Exhaustive {
            let outputs = (self.channel.ny as f64).powi(self.n as i32);
            if outputs > MAX_EXHAUSTIVE_OUTPUTS as f64 {
                return Err(Error::Scale(format!(
                    "{} outputs exceed the exhaustive limit of {MAX_EXHAUSTIVE_OUTPUTS}",
                    outputs
                )));
            }
        }
        Ok(())
    }
}

/// An estimate with its 95% interval. Exhaustive runs report a zero-width interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub lo: f64,
    pub hi: f64,
}

impl Estimate {
    fn exact(value: f64) -> Self {
        Self {
            value,
            lo: value,
            hi: value,
        }
    }

    /// Wilson score interval for `k` successes in `n` trials.
    pub fn wilson(k: u64, n: u64) -> Self {
        let nf = n as f64;
        let p = k as f64 / nf;
        let z2 = Z95 * Z95;
        let den = 1.0 + z2 / nf;
        let centre = (p + z2 / (2.0 * nf)) / den;
        let half = Z95 * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / den;
        Self {
            value: p,
            lo: if k == 0 {
                0.0
            } else {
                (centre - half).max(0.0)
            },
            hi: if k == n {
                1.0
            } else {
                (centre + half).min(1.0)
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub n: usize,
    pub trials: u64,
    pub seed: u64,
    pub codewords: usize,
    pub effective_rate: f64,
    /// Transmitted message not in the decoder output.
    pub p_e1: Estimate,
    /// Some wrong message in the decoder output.
    pub p_e2: Estimate,
    /// Empty decoder output.
    pub p_erasure: Estimate,
    /// Expected number of wrong messages in the output.
    pub avg_list_size: f64,
    /// `p_e2 + e^{−nT} p_e1`.
    pub gamma_hat: f64,
    /// Exhaustive universal runs only.
    pub a1_hat: Option<f64>,
    pub a2_hat: Option<f64>,
}

/// The decoder output: every message whose ratio passes the threshold. Empty means erasure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decision {
    pub messages: Vec<usize>,
}

impl Decision {
    pub fn is_erasure(&self) -> bool {
        self.messages.is_empty()
    }
}

fn composition_counts(n: usize, px: &[f64]) -> Result<Vec<usize>> {
    let counts: Vec<usize> = px
        .iter()
        .map(|&p| (p * n as f64).round() as usize)
        .collect();
    let integral = px
        .iter()
        .zip(&counts)
        .all(|(&p, &c)| (p * n as f64 - c as f64).abs() < 1e-9);
    if !integral || counts.iter().sum::<usize>() != n {
        return Err(Error::Distribution(format!(
            "composition {px:?} is not a type of length {n}"
        )));
    }
    Ok(counts)
}

/// `count` independent uniform draws from the type class with the given symbol counts.
pub fn sample_type_class(counts: &[usize], count: usize, rng: &mut impl Rng) -> Vec<Vec<u8>> {
    let base: Vec<u8> = counts
        .iter()
        .enumerate()
        .flat_map(|(x, &c)| std::iter::repeat(x as u8).take(c))
        .collect();
    (0..count)
        .map(|_| {
            let mut w = base.clone();
            w.shuffle(rng);
            w
        })
        .collect()
}

/// A random fixed-composition codebook of `⌈e^{nR}⌉` words.
pub fn sample_codebook(cfg: &SimConfig, rng: &mut impl Rng) -> Result<Vec<Vec<u8>>> {
    let counts = cfg.counts()?;
    Ok(sample_type_class(&counts, cfg.codewords(), rng))
}

/// Messages passing `s_m − log Σ_{m′≠m} e^{s_m′} ≥ nT`.
fn decide(scores: &[f64], nt: f64) -> Decision {
    let mut buf = DecideBuf::default();
    let mut passed = vec![false; scores.len()];
    decide_into(scores, nt, &mut buf, &mut passed);
    Decision {
        messages: (0..scores.len()).filter(|&i| passed[i]).collect(),
    }
}

#[derive(Default)]
struct DecideBuf {
    e: Vec<f64>,
    pre: Vec<f64>,
}

/// Allocation-free core of [`decide`]; returns the number of passing messages.
fn decide_into(scores: &[f64], nt: f64, buf: &mut DecideBuf, passed: &mut [bool]) -> usize {
    let m = scores.len();
    let top = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        passed.fill(false);
        return 0;
    }
    buf.e.clear();
    buf.e.extend(scores.iter().map(|s| (s - top).exp()));
    // Prefix sums of the shifted exponentials; suffix sums are accumulated on the way back.
    buf.pre.clear();
    buf.pre.push(0.0);
    for i in 0..m {
        let v = buf.pre[i] + buf.e[i];
        buf.pre.push(v);
    }
    let mut count = 0;
    let mut suf = 0.0;
    for i in (0..m).rev() {
        let s = scores[i];
        let others = buf.pre[i] + suf;
        suf += buf.e[i];
        let pass = if s == f64::NEG_INFINITY {
            false
        } else if others > 1e-280 {
            s - (top + others.ln()) >= nt
        } else {
            // The competitors underflowed against this (maximal) score: recompute exactly.
            let den = scores
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .fold(f64::NEG_INFINITY, |acc, (_, &v)| lae(acc, v));
            den == f64::NEG_INFINITY || s - den >= nt
        };
        passed[i] = pass;
        count += usize::from(pass);
    }
    count
}

fn lae(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + ((a - m).exp() + (b - m).exp()).ln()
}

fn log_likelihood(lw: &[f64], ny: usize, x: &[u8], y: &[u8]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(&a, &b)| lw[a as usize * ny + b as usize])
        .sum()
}

/// Forney's decision for output `y`.
pub fn forney_decode(y: &[u8], codebook: &[Vec<u8>], channel: &Dmc, t: f64) -> Decision {
    let lw = channel.log_matrix();
    let scores: Vec<f64> = codebook
        .iter()
        .map(|x| log_likelihood(&lw, channel.ny, x, y))
        .collect();
    decide(&scores, y.len() as f64 * t)
}

/// The members entering the universal metric with their offsets `n[ξE₁(θ) + T]`.
fn components(
    family: &ChannelFamily,
    table: &ExponentTable,
    xi: f64,
    n: usize,
) -> Result<Vec<(f64, Vec<f64>)>> {
    if table.e1.len() != family.len() {
        return Err(Error::Family(
            "exponent table does not match the family".into(),
        ));
    }
    if table.has_infinite() {
        return Err(Error::Unsupported(
            "universal metric with an infinite exponent".into(),
        ));
    }
    Ok(table
        .active
        .iter()
        .map(|&i| {
            let off = n as f64 * (xi * table.e1[i] + table.t);
            (off, family.channels[i].log_matrix())
        })
        .collect())
}

/// `log f(x, y) = max_θ { n[ξE₁(θ) + T] + log W_θ(y|x) }` over the active members.
pub fn universal_metric(
    x: &[u8],
    y: &[u8],
    family: &ChannelFamily,
    table: &ExponentTable,
    xi: f64,
) -> Result<f64> {
    let ny = family.ny();
    let comps = components(family, table, xi, x.len())?;
    Ok(comps
        .iter()
        .map(|(off, lw)| off + log_likelihood(lw, ny, x, y))
        .fold(f64::NEG_INFINITY, f64::max))
}

/// The universal decision for output `y`.
pub fn universal_decode(
    y: &[u8],
    codebook: &[Vec<u8>],
    family: &ChannelFamily,
    table: &ExponentTable,
    xi: f64,
) -> Result<Decision> {
    let scorer = Scorer::universal(family, table, xi, y.len())?;
    let scores: Vec<f64> = codebook.iter().map(|x| scorer.relative(x, y)).collect();
    Ok(decide(&scores, y.len() as f64 * table.t))
}

/// Crossover probability of a binary symmetric channel.
fn bsc_theta(w: &Dmc) -> Option<f64> {
    (w.nx == 2 && w.ny == 2 && w.at(0, 1) == w.at(1, 0) && w.at(0, 0) == w.at(1, 1))
        .then(|| w.at(0, 1))
}

/// Decoding scores as a maximum of offset log-likelihoods. Scores used for decisions are
/// taken relative to the largest offset: the shift cancels in the ratio, and a single
/// component then reproduces Forney's scores bit for bit.
struct Scorer {
    ny: usize,
    comps: Vec<(f64, Vec<f64>)>,
    shift: f64,
    /// Per-distance relative and literal scores when every component is a BSC.
    by_distance: Option<(Vec<f64>, Vec<f64>)>,
}

impl Scorer {
    fn new(ny: usize, comps: Vec<(f64, Vec<f64>)>, thetas: Option<Vec<f64>>, n: usize) -> Self {
        let shift = comps.iter().map(|c| c.0).fold(f64::NEG_INFINITY, f64::max);
        let by_distance = thetas.map(|th| {
            let rel: Vec<f64> = (0..=n)
                .map(|d| {
                    comps
                        .iter()
                        .zip(&th)
                        .map(|((off, _), &t)| (off - shift) + bsc_ll(t, d, n))
                        .fold(f64::NEG_INFINITY, f64::max)
                })
                .collect();
            let lit: Vec<f64> = (0..=n)
                .map(|d| {
                    comps
                        .iter()
                        .zip(&th)
                        .map(|((off, _), &t)| off + bsc_ll(t, d, n))
                        .fold(f64::NEG_INFINITY, f64::max)
                })
                .collect();
            (rel, lit)
        });
        Self {
            ny,
            comps,
            shift,
            by_distance,
        }
    }

    fn forney(channel: &Dmc, n: usize) -> Self {
        let th = bsc_theta(channel).map(|t| vec![t]);
        Self::new(channel.ny, vec![(0.0, channel.log_matrix())], th, n)
    }

    fn universal(family: &ChannelFamily, table: &ExponentTable, xi: f64, n: usize) -> Result<Self> {
        let comps = components(family, table, xi, n)?;
        let th: Option<Vec<f64>> = table
            .active
            .iter()
            .map(|&i| bsc_theta(&family.channels[i]))
            .collect();
        Ok(Self::new(family.ny(), comps, th, n))
    }

    fn relative(&self, x: &[u8], y: &[u8]) -> f64 {
        self.comps
            .iter()
            .map(|(off, lw)| (off - self.shift) + log_likelihood(lw, self.ny, x, y))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    fn literal(&self, x: &[u8], y: &[u8]) -> f64 {
        self.comps
            .iter()
            .map(|(off, lw)| off + log_likelihood(lw, self.ny, x, y))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// `log W(y|x)` of a BSC at Hamming distance `d` over `n` symbols.
fn bsc_ll(theta: f64, d: usize, n: usize) -> f64 {
    let a = if d == 0 { 0.0 } else { d as f64 * theta.ln() };
    let b = if d == n {
        0.0
    } else {
        (n - d) as f64 * (1.0 - theta).ln()
    };
    a + b
}

fn scorer_for(cfg: &SimConfig) -> Result<(Scorer, Option<ExponentTable>)> {
    match cfg.mode {
        DecoderMode::Forney => Ok((Scorer::forney(&cfg.channel, cfg.n), None)),
        DecoderMode::Universal => {
            let fam = cfg.family.as_ref().expect("validated");
            let table = fam.exponents(cfg.r, cfg.t)?;
            Ok((Scorer::universal(fam, &table, cfg.xi, cfg.n)?, Some(table)))
        }
    }
}

/// Event tallies; probabilities in the exhaustive method, counts in Monte-Carlo.
#[derive(Debug, Clone, Copy, Default)]
struct Tally {
    e1: f64,
    e2: f64,
    erasure: f64,
    wrong: f64,
    a1: f64,
    a2: f64,
}

impl Tally {
    fn add(mut self, o: Tally) -> Tally {
        self.e1 += o.e1;
        self.e2 += o.e2;
        self.erasure += o.erasure;
        self.wrong += o.wrong;
        self.a1 += o.a1;
        self.a2 += o.a2;
        self
    }

    fn record(&mut self, d: &Decision, sent: usize, weight: f64) {
        let hit = d.messages.contains(&sent);
        let wrong = d.messages.len() - usize::from(hit);
        if !hit {
            self.e1 += weight;
        }
        if wrong > 0 {
            self.e2 += weight;
        }
        if d.is_erasure() {
            self.erasure += weight;
        }
        self.wrong += weight * wrong as f64;
    }
}

fn sample_output(w: &Dmc, x: &[u8], rng: &mut impl Rng) -> Vec<u8> {
    x.iter()
        .map(|&a| {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            for y in 0..w.ny {
                acc += w.at(a as usize, y);
                if u < acc {
                    return y as u8;
                }
            }
            (w.ny - 1) as u8
        })
        .collect()
}

fn block_rng(seed: u64, block: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(block);
    rng
}

fn monte_carlo(cfg: &SimConfig, scorer: &Scorer) -> Result<Tally> {
    let counts = cfg.counts()?;
    let m = cfg.codewords();
    let nt = cfg.n as f64 * cfg.t;
    let blocks = cfg.trials.div_ceil(BLOCK);
    let parts: Vec<Tally> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = block_rng(cfg.seed, b);
            let mut tally = Tally::default();
            let len = BLOCK.min(cfg.trials - b * BLOCK);
            for _ in 0..len {
                let fresh;
                let code = match &cfg.codebook {
                    Some(c) => c,
                    None => {
                        fresh = sample_type_class(&counts, m, &mut rng);
                        &fresh
                    }
                };
                let sent = rng.random_range(0..m);
                let y = sample_output(&cfg.channel, &code[sent], &mut rng);
                let scores: Vec<f64> = code.iter().map(|x| scorer.relative(x, &y)).collect();
                tally.record(&decide(&scores, nt), sent, 1.0);
            }
            tally
        })
        .collect();
    Ok(parts.into_iter().fold(Tally::default(), Tally::add))
}

/// Exact tallies for one codebook, summing over every output sequence.
fn exhaustive_codebook(cfg: &SimConfig, scorer: &Scorer, code: &[Vec<u8>], a_terms: bool) -> Tally {
    let (n, ny, m) = (cfg.n, cfg.channel.ny, code.len());
    let nt = n as f64 * cfg.t;
    let mf = m as f64;
    let mut tally = Tally::default();
    let true_lw = cfg.channel.log_matrix();
    let true_bsc = bsc_theta(&cfg.channel);
    let fast = match (&scorer.by_distance, true_bsc) {
        (Some((rel, lit)), Some(th)) if ny == 2 => {
            let prob: Vec<f64> = (0..=n).map(|d| bsc_ll(th, d, n).exp() / mf).collect();
            let flit: Vec<f64> = lit.iter().map(|v| v.exp()).collect();
            Some((rel, flit, prob))
        }
        _ => None,
    };
    let packed: Vec<u64> = code
        .iter()
        .map(|w| {
            w.iter()
                .enumerate()
                .fold(0u64, |acc, (i, &b)| acc | (u64::from(b & 1) << i))
        })
        .collect();
    let mut scores = vec![0.0; m];
    let mut lit = vec![0.0; m];
    let mut prob = vec![0.0; m];
    let mut passed = vec![false; m];
    let mut buf = DecideBuf::default();
    let mut y = vec![0u8; n];
    for idx in 0..ny.pow(n as u32) {
        match &fast {
            Some((rel, flit, pd)) => {
                for k in 0..m {
                    let d = (packed[k] ^ idx as u64).count_ones() as usize;
                    scores[k] = rel[d];
                    lit[k] = flit[d];
                    prob[k] = pd[d];
                }
            }
            None => {
                let mut v = idx;
                for s in y.iter_mut() {
                    *s = (v % ny) as u8;
                    v /= ny;
                }
                for k in 0..m {
                    scores[k] = scorer.relative(&code[k], &y);
                    if a_terms {
                        lit[k] = scorer.literal(&code[k], &y).exp();
                    }
                    prob[k] = log_likelihood(&true_lw, ny, &code[k], &y).exp() / mf;
                }
            }
        }
        let count = decide_into(&scores, nt, &mut buf, &mut passed);
        let lit_sum: f64 = if a_terms { lit.iter().sum() } else { 0.0 };
        for sent in 0..m {
            let p = prob[sent];
            let hit = passed[sent];
            let wrong = count - usize::from(hit);
            if !hit {
                tally.e1 += p;
            }
            if wrong > 0 {
                tally.e2 += p;
            }
            if count == 0 {
                tally.erasure += p;
            }
            tally.wrong += p * wrong as f64;
            if a_terms {
                if hit {
                    tally.a2 += (lit_sum - lit[sent]) / mf;
                } else {
                    tally.a1 += lit[sent] / mf;
                }
            }
        }
    }
    tally.a1 *= (-nt).exp();
    tally
}

fn exhaustive(cfg: &SimConfig, scorer: &Scorer, a_terms: bool) -> Result<(Tally, u64)> {
    if let Some(code) = &cfg.codebook {
        return Ok((exhaustive_codebook(cfg, scorer, code, a_terms), 1));
    }
    let counts = cfg.counts()?;
    let m = cfg.codewords();
    let parts: Vec<Tally> = (0..cfg.trials)
        .into_par_iter()
        .map(|b| {
            let mut rng = block_rng(cfg.seed, b);
            let code = sample_type_class(&counts, m, &mut rng);
            exhaustive_codebook(cfg, scorer, &code, a_terms)
        })
        .collect();
    Ok((
        parts.into_iter().fold(Tally::default(), Tally::add),
        cfg.trials,
    ))
}

/// Estimate `Pr{ℰ₁}`, `Pr{ℰ₂}`, the erasure probability, the list size and `Γ`.
///
/// Monte-Carlo draws a fresh codebook, message and channel output per trial; block `b` of
/// 1024 trials uses ChaCha8 seeded with `seed` on stream `b`, so results do not depend on
/// the thread count. The exhaustive method averages exact sums over `trials` sampled
/// codebooks (or the fixed one) and, in universal mode, also fills `A₁` and `A₂`.
pub fn estimate(cfg: &SimConfig) -> Result<SimReport> {
    cfg.validate()?;
    let (scorer, _) = scorer_for(cfg)?;
    let m = cfg.codewords();
    let nt = cfg.n as f64 * cfg.t;
    let (p_e1, p_e2, p_erasure, avg, a, trials) = match cfg.method {
        Method::MonteCarlo => {
            let t = monte_carlo(cfg, &scorer)?;
            let k = cfg.trials;
            (
                Estimate::wilson(t.e1 as u64, k),
                Estimate::wilson(t.e2 as u64, k),
                Estimate::wilson(t.erasure as u64, k),
                t.wrong / k as f64,
                None,
                k,
            )
        }
        Method::Exhaustive => {
            let universal = cfg.mode == DecoderMode::Universal;
            let (t, k) = exhaustive(cfg, &scorer, universal)?;
            let kf = k as f64;
            (
                Estimate::exact(t.e1 / kf),
                Estimate::exact(t.e2 / kf),
                Estimate::exact(t.erasure / kf),
                t.wrong / kf,
                universal.then(|| (t.a1 / kf, t.a2 / kf)),
                k,
            )
        }
    };
    Ok(SimReport {
        n: cfg.n,
        trials,
        seed: cfg.seed,
        codewords: m,
        effective_rate: cfg.effective_rate(),
        gamma_hat: gamma(p_e1.value, p_e2.value, nt),
        p_e1,
        p_e2,
        p_erasure,
        avg_list_size: avg,
        a1_hat: a.map(|v| v.0),
        a2_hat: a.map(|v| v.1),
    })
}

/// `Γ = p_e2 + e^{−nT} p_e1`.
pub fn gamma(p_e1: f64, p_e2: f64, nt: f64) -> f64 {
    p_e2 + (-nt).exp() * p_e1
}

/// `(A₁, A₂)` of the universal decoder by exhaustive summation over outputs, averaged over
/// sampled codebooks.
pub fn estimate_a_terms(cfg: &SimConfig) -> Result<(f64, f64)> {
    if cfg.mode != DecoderMode::Universal || cfg.method != Method::Exhaustive {
        return Err(Error::Unsupported(
            "A terms need the universal decoder and the exhaustive method".into(),
        ));
    }
    let rep = estimate(cfg)?;
    Ok((
        rep.a1_hat.expect("universal exhaustive"),
        rep.a2_hat.expect("universal exhaustive"),
    ))
}

/// Least-squares slope of `−log p` against `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub stderr: f64,
    /// Blocklengths left out because their estimate was zero.
    pub excluded: Vec<usize>,
}

/// Fit `−log p(n) ≈ a + slope·n`. Needs at least four points, two of them nonzero.
pub fn slope_fit(points: &[(usize, f64)]) -> Result<SlopeFit> {
    if points.len() < 4 {
        return Err(Error::Domain {
            name: "points",
            value: points.len() as f64,
            expected: "at least 4 blocklengths",
        });
    }
    let excluded: Vec<usize> = points
        .iter()
        .filter(|p| !(p.1 > 0.0))
        .map(|p| p.0)
        .collect();
    let used: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.1 > 0.0)
        .map(|&(n, p)| (n as f64, -p.ln()))
        .collect();
    if used.len() < 2 {
        return Err(Error::Domain {
            name: "points",
            value: used.len() as f64,
            expected: "at least 2 nonzero estimates",
        });
    }
    let k = used.len() as f64;
    let mx = used.iter().map(|p| p.0).sum::<f64>() / k;
    let my = used.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = used.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = used.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let stderr = if used.len() > 2 {
        let rss: f64 = used
            .iter()
            .map(|p| (p.1 - my - slope * (p.0 - mx)).powi(2))
            .sum();
        (rss / (k - 2.0) / sxx).sqrt()
    } else {
        f64::NAN
    };
    Ok(SlopeFit {
        slope,
        stderr,
        excluded,
    })
}

/// Fitted `(ê₁, ê₂)` from reports over a blocklength grid.
pub fn fit_exponents(reports: &[SimReport]) -> Result<(SlopeFit, SlopeFit)> {
    let e1: Vec<_> = reports.iter().map(|r| (r.n, r.p_e1.value)).collect();
    let e2: Vec<_> = reports.iter().map(|r| (r.n, r.p_e2.value)).collect();
    Ok((slope_fit(&e1)?, slope_fit(&e2)?))
}
