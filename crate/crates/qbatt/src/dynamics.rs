//! Deterministic time evolution of the master equation: fixed-step
//! fourth-order Runge-Kutta on the vectorized density matrix, with
//! steady-state convergence detection.
//!
//! This is the fallback solver and an independent check on kernel
//! extraction. Step sizes are validated against a cheap spectral-radius
//! bound (the row-sum norm of the Liouvillian).

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::{trace, unvectorize, vectorize, CMatrix, CVector};
use crate::metrics::{metrics_for, BatteryMetrics};
use crate::model::{Liouvillian, SystemParams};
use crate::steady::{SteadyMethod, SteadyReport};

/// Fraction of the inverse spectral-radius bound admitted as a step.
const STABILITY_FRACTION: f64 = 0.05;
/// Cap on stored snapshots; recording is thinned above this.
const MAX_RECORDS: usize = 2048;

/// Time series produced by [`evolve`]: snapshot times, (possibly thinned)
/// states, and battery metrics at each snapshot. `observables` is empty
/// unless filled by [`evolve_with_metrics`].
#[derive(Debug, Clone)]
pub struct EvolutionRecord {
    pub times: Vec<f64>,
    pub states: Vec<CMatrix>,
    pub observables: Vec<BatteryMetrics>,
}

impl EvolutionRecord {
    pub fn final_state(&self) -> &CMatrix {
        self.states.last().expect("evolution records the initial state")
    }
}

/// Row-sum (infinity-norm) upper bound on the Liouvillian spectral radius.
pub fn spectral_radius_bound(l: &CMatrix) -> f64 {
    let n = l.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        let mut s = 0.0;
        for j in 0..n {
            s += l[(i, j)].norm();
        }
        worst = worst.max(s);
    }
    worst
}

/// Largest admissible RK4 step for this Liouvillian.
pub fn max_step(l: &CMatrix) -> f64 {
    let bound = spectral_radius_bound(l);
    if bound == 0.0 {
        f64::INFINITY
    } else {
        STABILITY_FRACTION / bound
    }
}

/// Default step 0.01 / max(Γ_C, Γ_B(1+2n), g, f), additionally clipped to
/// the stability bound of the concrete Liouvillian.
pub fn default_dt(params: &SystemParams, l: &CMatrix) -> f64 {
    let n = params.occupation();
    let fastest = params
        .gamma_c
        .max(params.gamma_b * (1.0 + 2.0 * n))
        .max(params.g)
        .max(params.feedback_f().abs())
        .max(f64::MIN_POSITIVE);
    (0.01 / fastest).min(0.8 * max_step(l))
}

/// Classical RK4 on vec(ρ) from `rho0` to `t_max`, recording thinned
/// snapshots.
pub fn evolve(
    liou: &Liouvillian,
    rho0: &CMatrix,
    dt: f64,
    t_max: f64,
) -> Result<EvolutionRecord> {
    let steps = steps_for(dt, t_max);
    let stride = (steps / MAX_RECORDS).max(1);
    let mut record = EvolutionRecord {
        times: Vec::new(),
        states: Vec::new(),
        observables: Vec::new(),
    };
    run_rk4(&liou.matrix, liou.dim(), rho0, dt, steps, |step, rho| {
        if step % stride == 0 || step == steps {
            record.times.push(step as f64 * dt);
            record.states.push(rho.clone());
        }
        true
    })?;
    Ok(record)
}

/// As [`evolve`], also computing battery metrics at each snapshot.
pub fn evolve_with_metrics(
    liou: &Liouvillian,
    params: &SystemParams,
    rho0: &CMatrix,
    dt: f64,
    t_max: f64,
) -> Result<EvolutionRecord> {
    let mut record = evolve(liou, rho0, dt, t_max)?;
    record.observables = record
        .states
        .iter()
        .map(|rho| metrics_for(rho, &liou.basis, params))
        .collect::<Result<Vec<_>>>()?;
    Ok(record)
}

/// Evolve until ‖dρ/dt‖_F ≤ `tol` (1e-10 when `None`), failing with
/// [`Error::NotConverged`] at `t_cap`.
pub fn evolve_to_steady(
    liou: &Liouvillian,
    params: &SystemParams,
    rho0: &CMatrix,
    dt: f64,
    tol: Option<f64>,
    t_cap: f64,
) -> Result<SteadyReport> {
    let tol = tol.unwrap_or(1e-10);
    let steps = steps_for(dt, t_cap);
    let mut converged_at: Option<CMatrix> = None;
    let mut last_residual = f64::INFINITY;
    run_rk4_with_rhs(&liou.matrix, liou.dim(), rho0, dt, steps, |_, rho, rhs_norm| {
        last_residual = rhs_norm;
        if rhs_norm <= tol {
            converged_at = Some(rho.clone());
            false
        } else {
            true
        }
    })?;
    match converged_at {
        Some(rho) => {
            let tr = trace(&rho);
            let rho = rho.mapv(|z| z / tr);
            let v = vectorize(&rho);
            let residual = liou
                .matrix
                .dot(&v)
                .iter()
                .map(|z| z.norm_sqr())
                .sum::<f64>()
                .sqrt();
            Ok(SteadyReport {
                rho_inf: rho,
                method: SteadyMethod::NumericEvolution,
                residual,
                params: params.clone(),
                basis: liou.basis,
            })
        }
        None => Err(Error::NotConverged {
            t_cap,
            residual: last_residual,
        }),
    }
}

fn steps_for(dt: f64, t_max: f64) -> usize {
    ((t_max / dt).round() as usize).max(1)
}

/// RK4 driver; the callback sees the state after every step (and the
/// initial state as step 0) and may stop the run by returning `false`.
pub fn run_rk4<F>(
    l: &CMatrix,
    d: usize,
    rho0: &CMatrix,
    dt: f64,
    steps: usize,
    mut on_step: F,
) -> Result<CMatrix>
where
    F: FnMut(usize, &CMatrix) -> bool,
{
    run_rk4_with_rhs(l, d, rho0, dt, steps, |step, rho, _| on_step(step, rho))
}

fn run_rk4_with_rhs<F>(
    l: &CMatrix,
    d: usize,
    rho0: &CMatrix,
    dt: f64,
    steps: usize,
    mut on_step: F,
) -> Result<CMatrix>
where
    F: FnMut(usize, &CMatrix, f64) -> bool,
{
    if rho0.nrows() != d || l.nrows() != d * d {
        return Err(Error::DimensionMismatch {
            expected: d * d,
            got: l.nrows(),
        });
    }
    let limit = max_step(l);
    if dt > limit {
        return Err(Error::StepTooLarge { dt, max_dt: limit });
    }

    let half = C64::new(dt / 2.0, 0.0);
    let sixth = C64::new(dt / 6.0, 0.0);
    let two = C64::new(2.0, 0.0);

    // The k1 of each step doubles as the residual of the state it leaves
    // behind, keeping the cost at four matrix-vector products per step.
    let mut v: CVector = vectorize(rho0);
    let mut k1 = l.dot(&v);
    let rhs_norm = k1.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if !on_step(0, rho0, rhs_norm) {
        return Ok(rho0.clone());
    }
    for step in 1..=steps {
        let k2 = l.dot(&(&v + &(&k1 * half)));
        let k3 = l.dot(&(&v + &(&k2 * half)));
        let k4 = l.dot(&(&v + &(&k3 * C64::new(dt, 0.0))));
        v = &v + &((&k1 + &(&k2 * two) + &(&k3 * two) + &k4) * sixth);

        k1 = l.dot(&v);
        let rhs_norm = k1.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let rho = unvectorize(&v, d);
        if !on_step(step, &rho, rhs_norm) {
            return Ok(rho);
        }
    }
    Ok(unvectorize(&v, d))
}
