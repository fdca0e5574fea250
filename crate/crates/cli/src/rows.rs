//! Output records. Field order is the CSV column order.

use erasure_core::SimReport;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentRow {
    pub r: f64,
    pub t: f64,
    /// Crossover probability for BSC grids, member index otherwise.
    pub theta: f64,
    pub e1: f64,
    pub e2: f64,
    pub branch: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XiStarRow {
    pub r: f64,
    pub t: f64,
    pub xi_star: f64,
    pub active_condition: String,
    pub argmax_theta: f64,
    pub slack_a: f64,
    pub slack_b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XiLowerRow {
    pub r: f64,
    pub t: f64,
    pub xi_lower: f64,
    pub theta_star: f64,
    pub theta_dprime_star: f64,
    pub s_star: f64,
    pub rho_star: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapRow {
    pub r: f64,
    pub t: f64,
    pub xi: f64,
    pub constrained_value: f64,
    pub theta_star: f64,
    pub theta_dprime_star: f64,
    pub s_star: f64,
    pub rho_star: f64,
    pub relaxed_value: f64,
    pub relaxed_theta_star: f64,
    pub relaxed_theta_prime_star: f64,
    pub relaxed_theta_dprime_star: f64,
    pub relaxed_s: f64,
    pub relaxed_rho: f64,
    pub constraint_active: bool,
    /// Largest fraction each problem admits; empty unless `--thresholds`.
    pub xi_constrained: Option<f64>,
    pub xi_relaxed: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateRow {
    pub n: usize,
    pub trials: u64,
    pub p_e1: f64,
    pub p_e1_lo: f64,
    pub p_e1_hi: f64,
    pub p_e2: f64,
    pub p_e2_lo: f64,
    pub p_e2_hi: f64,
    pub p_erasure: f64,
    pub avg_list_size: f64,
    pub gamma_hat: f64,
}

impl From<&SimReport> for SimulateRow {
    fn from(r: &SimReport) -> Self {
        Self {
            n: r.n,
            trials: r.trials,
            p_e1: r.p_e1.value,
            p_e1_lo: r.p_e1.lo,
            p_e1_hi: r.p_e1.hi,
            p_e2: r.p_e2.value,
            p_e2_lo: r.p_e2.lo,
            p_e2_hi: r.p_e2.hi,
            p_erasure: r.p_erasure.value,
            avg_list_size: r.avg_list_size,
            gamma_hat: r.gamma_hat,
        }
    }
}

/// Rounded to the three decimals the worked examples are quoted at.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExampleRow {
    pub r: f64,
    pub t: f64,
    pub xi_lower: f64,
    pub xi_star: f64,
}

pub fn round3(v: f64) -> f64 {
    (v * 1e3).round() / 1e3
}
