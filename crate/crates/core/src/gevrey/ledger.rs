use std::fmt::Write as _;

use super::{charge, estimate_radius_envelope, m_prime, m_sigma, n_prime, n_sigma};
use crate::dkg::{DkgState, KgMass};

pub const LEDGER_SCHEMA_VERSION: u32 = 1;

/// Wave-field norms recorded per sample, depending on the Klein–Gordon mass.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WaveNorms {
    Massive { n_sigma: f64 },
    Massless { phi_l2: f64, n_prime: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct LedgerRow {
    pub t: f64,
    pub charge: f64,
    pub m_sigma: f64,
    pub m_sigma_minus: f64,
    pub m_sigma_plus: f64,
    pub m_prime: f64,
    pub waves: WaveNorms,
    /// Decay-rate estimate of the combined spectrum; NaN when no fit exists.
    pub sigma_hat: f64,
    pub sigma_hat_residual: f64,
}

impl LedgerRow {
    pub fn measure(state: &DkgState, sigma: f64) -> Self {
        let m = m_sigma(&state.spinors, sigma);
        let waves = match state.masses.kg {
            KgMass::One => WaveNorms::Massive { n_sigma: n_sigma(&state.waves, sigma) },
            KgMass::Zero => {
                let (phi_l2, n_prime) = n_prime(state, sigma);
                WaveNorms::Massless { phi_l2, n_prime }
            }
        };
        let fields = [&state.spinors.plus, &state.spinors.minus, &state.waves.plus, &state.waves.minus];
        let (sigma_hat, sigma_hat_residual) = match estimate_radius_envelope(&fields) {
            Ok(fit) => (fit.sigma, fit.residual),
            Err(_) => (f64::NAN, f64::NAN),
        };
        Self {
            t: state.t,
            charge: charge(&state.spinors),
            m_sigma: m.total,
            m_sigma_minus: m.minus,
            m_sigma_plus: m.plus,
            m_prime: m_prime(&state.spinors, sigma),
            waves,
            sigma_hat,
            sigma_hat_residual,
        }
    }
}

/// Time series of norms at a fixed radius `σ`.
#[derive(Clone, Debug, Default, PartialEq, serde::Serialize)]
pub struct NormLedger {
    pub sigma: f64,
    pub rows: Vec<LedgerRow>,
}

impl NormLedger {
    pub fn new(sigma: f64) -> Self {
        Self { sigma, rows: Vec::new() }
    }

    pub fn record(&mut self, state: &DkgState) {
        self.rows.push(LedgerRow::measure(state, self.sigma));
    }

    /// Largest `|charge(t)/charge(t₀) - 1|` over the rows.
    pub fn max_charge_drift(&self) -> f64 {
        let Some(first) = self.rows.first() else { return 0.0 };
        if first.charge == 0.0 {
            return self.rows.iter().map(|r| r.charge).fold(0.0, f64::max);
        }
        self.rows.iter().map(|r| (r.charge / first.charge - 1.0).abs()).fold(0.0, f64::max)
    }

    /// CSV text with a `# schema_version=…` comment line, then the header.
    /// Massive ledgers carry `N_sigma`, massless ones `phi_L2,N_prime`.
    pub fn to_csv(&self) -> String {
        let massless = matches!(self.rows.first().map(|r| r.waves), Some(WaveNorms::Massless { .. }));
        let mut out = format!("# schema_version={LEDGER_SCHEMA_VERSION}\n# sigma={}\n", self.sigma);
        out.push_str("t,charge,M_sigma,M_sigma_minus,M_sigma_plus,M_prime,");
        out.push_str(if massless { "phi_L2,N_prime" } else { "N_sigma" });
        out.push_str(",sigma_hat,sigma_hat_residual\n");
        for r in &self.rows {
            let _ = write!(
                out,
                "{},{},{},{},{},{},",
                r.t, r.charge, r.m_sigma, r.m_sigma_minus, r.m_sigma_plus, r.m_prime
            );
            let _ = match r.waves {
                WaveNorms::Massive { n_sigma } => write!(out, "{n_sigma}"),
                WaveNorms::Massless { phi_l2, n_prime } => write!(out, "{phi_l2},{n_prime}"),
            };
            let _ = writeln!(out, ",{},{}", r.sigma_hat, r.sigma_hat_residual);
        }
        out
    }
}
