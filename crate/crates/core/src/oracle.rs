//! Deterministic master-equation reference: fixed-step RK4 on the density
//! matrix, used to cross-check the trajectory ensemble.

use crate::channel::{validate_density, ErrorChannel, Lindbladian};
use crate::code::{build_code, StabilizerCode};
use crate::control::driving_hamiltonian;
use crate::error::{Error, Result};
use crate::linalg::{max_norm, real, CMatrix, ONE};
use crate::trajectory::{projector, LogicalState, SimConfig};

/// Allowed `|tr rho - 1|` before the integration is declared unstable.
const TRACE_DRIFT_LIMIT: f64 = 1e-6;

/// Density matrices at the requested times.
#[derive(Debug, Clone)]
pub struct OracleSeries {
    pub times: Vec<f64>,
    pub states: Vec<CMatrix>,
}

/// Inverse of the fastest rate in the problem: summed `tr(E^dag E)` plus
/// the Frobenius norm of `H`.
fn characteristic_time(channels: &[ErrorChannel], h: &CMatrix) -> f64 {
    let rate: f64 = channels
        .iter()
        .map(|c| (c.operator.adjoint() * c.operator).trace().re)
        .sum::<f64>()
        + h.norm();
    if rate > 0.0 {
        1.0 / rate
    } else {
        f64::INFINITY
    }
}

fn rk4_step(l: &Lindbladian, rho: &CMatrix, h: f64) -> CMatrix {
    let half = real(0.5 * h);
    let k1 = l.apply(rho);
    let k2 = l.apply(&(rho + &k1 * half));
    let k3 = l.apply(&(rho + &k2 * half));
    let k4 = l.apply(&(rho + &k3 * real(h)));
    let next = rho + (k1 + (k2 + k3) * real(2.0) + k4) * real(h / 6.0);
    (&next + next.adjoint()) * real(0.5)
}

/// Integrates the master equation from `rho0`, returning the state at each
/// of `times` (ascending, >= 0). The internal step is
/// `min(dt, 1e-3 * characteristic time)`, shrunk to divide each interval.
pub fn integrate_master_equation(
    rho0: &CMatrix,
    channels: &[ErrorChannel],
    h: &CMatrix,
    n: usize,
    dt: f64,
    times: &[f64],
) -> Result<Vec<CMatrix>> {
    validate_density(rho0, n)?;
    let lindbladian = Lindbladian::new(channels, h, n)?;
    let max_step = dt.min(1e-3 * characteristic_time(channels, h));

    let mut rho = rho0.clone();
    let mut t = 0.0;
    let mut out = Vec::with_capacity(times.len());
    for &target in times {
        if target < t {
            return Err(Error::InvalidConfig(
                "oracle times must be ascending".into(),
            ));
        }
        let interval = target - t;
        if interval > 0.0 && max_step.is_finite() {
            let substeps = (interval / max_step).ceil().max(1.0) as usize;
            let h_step = interval / substeps as f64;
            for _ in 0..substeps {
                rho = rk4_step(&lindbladian, &rho, h_step);
            }
        }
        t = target;
        let drift = (rho.trace() - ONE).norm();
        if drift > TRACE_DRIFT_LIMIT || !max_norm(&rho).is_finite() {
            return Err(Error::OracleUnstable { drift });
        }
        out.push(rho.clone());
    }
    Ok(out)
}

/// Feedback-free reference evolution of the configured initial codespace
/// state at the configuration's sample times. The driving Hamiltonian is
/// included when `cfg.driving` is set.
pub fn master_equation_oracle(cfg: &SimConfig) -> Result<OracleSeries> {
    cfg.validate()?;
    let code = match &cfg.code {
        Some(gens) => StabilizerCode::from_generators(cfg.n, gens.clone())?,
        None => build_code(&cfg.channels, cfg.n)?,
    };
    let dim = code.dim();
    let h = if cfg.driving {
        driving_hamiltonian(&cfg.channels, &code)?
    } else {
        CMatrix::zeros(dim, dim)
    };
    let psi0 =
        match &cfg.initial_state {
            LogicalState::Index(i) => code.codespace.get(*i).cloned().ok_or_else(|| {
                Error::InvalidConfig(format!("initial_state index {i} out of range"))
            })?,
            LogicalState::Coefficients(c) => code.logical_state(c)?,
        };
    let times = cfg.sample_times();
    let states =
        integrate_master_equation(&projector(&psi0), &cfg.channels, &h, cfg.n, cfg.dt, &times)?;
    Ok(OracleSeries { times, states })
}
