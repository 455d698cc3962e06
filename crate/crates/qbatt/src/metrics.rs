//! Energetic observables: stored energy, ergotropy via passive-state
//! construction, charging efficiency, and the per-particle densities used
//! for multiparticle batteries.
//!
//! Ergotropy pairs the eigenvalues of the battery state (descending) with
//! the eigenvalues of the battery Hamiltonian (ascending, degeneracies
//! included). A Dicke-reduced state is scored against the full 2^N battery
//! spectrum with binomial degeneracies: its missing eigenvalues are zeros,
//! which contribute nothing, so only the placement of the N+1 nonzero
//! weights among the lowest levels matters.

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hilbert::{BasisKind, BasisSpec};
use crate::linalg::{dagger, hermitian_eigen, hermiticity_deviation, trace, CMatrix};
use crate::model::SystemParams;

/// Steady-state performance numbers for one battery; energies are absolute
/// (divide by ω0 for the dimensionless figures).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BatteryMetrics {
    pub stored_energy: f64,
    pub ergotropy: f64,
    pub efficiency_r: f64,
    /// Stored energy per particle, 𝒲.
    pub energy_density: f64,
    pub avg_ergotropy: f64,
}

/// Whether multiparticle ergotropy minimizes over all unitaries of the full
/// 2^N battery space (the default) or only over the symmetric sector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectrumScope {
    FullSpace,
    SymmetricSector,
}

/// Tr[H_B ρ_B] − Tr[H_B ρ_B(0)].
pub fn stored_energy(rho_b: &CMatrix, h_b: &CMatrix, rho_b0: &CMatrix) -> Result<f64> {
    let d = rho_b.nrows();
    if h_b.nrows() != d || rho_b0.nrows() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: h_b.nrows().max(rho_b0.nrows()),
        });
    }
    Ok((trace(&h_b.dot(rho_b)) - trace(&h_b.dot(rho_b0))).re)
}

/// Maximum unitarily extractable energy of `rho_b` under `h_b`.
pub fn ergotropy(rho_b: &CMatrix, h_b: &CMatrix) -> Result<f64> {
    let eps = hermitian_eigen(h_b)?.eigenvalues;
    ergotropy_with_levels(rho_b, h_b, &eps)
}

/// Ergotropy of `rho_b` where `h_b` gives the active energy and `levels`
/// (sorted ascending, length at least dim ρ) is the spectrum used for the
/// passive-state construction. Passing the full-space spectrum of a larger
/// system scores a sector-reduced state against all unitaries of that
/// system.
pub fn ergotropy_with_levels(rho_b: &CMatrix, h_b: &CMatrix, levels: &[f64]) -> Result<f64> {
    let d = rho_b.nrows();
    if h_b.nrows() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: h_b.nrows(),
        });
    }
    if levels.len() < d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: levels.len(),
        });
    }
    debug_assert!(
        levels.windows(2).all(|w| w[0] <= w[1]),
        "levels must be ascending"
    );
    let populations = density_eigenvalues(rho_b)?;
    let active = trace(&h_b.dot(rho_b)).re;

    // Descending populations against ascending energies.
    let mut r = populations;
    r.sort_by(|a, b| b.total_cmp(a));
    let passive: f64 = r.iter().zip(levels).map(|(p, e)| p * e).sum();
    Ok((active - passive).max(0.0))
}

/// Validated, clamped, renormalized eigenvalues of a density matrix.
fn density_eigenvalues(rho: &CMatrix) -> Result<Vec<f64>> {
    let tr = trace(rho);
    if (tr - C64::ONE).norm() > 1e-8 {
        return Err(Error::NotDensityMatrix(format!(
            "trace = {:.12} + {:.3e}i",
            tr.re, tr.im
        )));
    }
    if hermiticity_deviation(rho) > 1e-8 {
        return Err(Error::NotDensityMatrix("not Hermitian".into()));
    }
    // Symmetrize round-off before diagonalizing.
    let herm = (rho + &dagger(rho)) * C64::new(0.5, 0.0);
    let mut vals = hermitian_eigen(&herm)?.eigenvalues;
    if let Some(&min) = vals.first() {
        if min < -1e-8 {
            return Err(Error::NotDensityMatrix(format!(
                "negative eigenvalue {min:.3e}"
            )));
        }
    }
    for v in vals.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    let sum: f64 = vals.iter().sum();
    if sum > 0.0 {
        for v in vals.iter_mut() {
            *v /= sum;
        }
    }
    Ok(vals)
}

/// R = ℰ/E_B.
pub fn efficiency(stored: f64, erg: f64) -> Result<f64> {
    if stored <= 0.0 {
        return Err(Error::ZeroStoredEnergy);
    }
    Ok(erg / stored)
}

/// Trace out the charger (the first, two-dimensional tensor factor).
pub fn partial_trace_charger(rho: &CMatrix) -> Result<CMatrix> {
    let dim = rho.nrows();
    if dim % 2 != 0 {
        return Err(Error::DimensionMismatch {
            expected: dim + dim % 2,
            got: dim,
        });
    }
    let m = dim / 2;
    Ok(CMatrix::from_shape_fn((m, m), |(i, j)| {
        rho[(i, j)] + rho[(m + i, m + j)]
    }))
}

/// Ascending battery spectrum of N qubits (levels ω0·(k − N/2) with
/// binomial multiplicity C(N, k)), truncated to the first `len` entries.
pub fn battery_levels_full(n: usize, omega0: f64, len: usize) -> Vec<f64> {
    let mut levels = Vec::with_capacity(len);
    let mut binom = 1u128;
    for k in 0..=n {
        for _ in 0..binom.min(len as u128) {
            if levels.len() == len {
                return levels;
            }
            levels.push(omega0 * (k as f64 - n as f64 / 2.0));
        }
        binom = binom * (n - k) as u128 / (k + 1) as u128;
    }
    levels
}

/// Dicke-space battery Hamiltonian ω0·S_z as a diagonal matrix.
pub fn dicke_hamiltonian(n: usize, omega0: f64) -> CMatrix {
    CMatrix::from_shape_fn((n + 1, n + 1), |(i, j)| {
        if i == j {
            C64::new(omega0 * (i as f64 - n as f64 / 2.0), 0.0)
        } else {
            C64::ZERO
        }
    })
}

/// Metrics of a charger ⊗ Dicke state, with the default full-space passive
/// construction.
pub fn multiparticle_metrics(rho: &CMatrix, params: &SystemParams) -> Result<BatteryMetrics> {
    multiparticle_metrics_scoped(rho, params, SpectrumScope::FullSpace)
}

pub fn multiparticle_metrics_scoped(
    rho: &CMatrix,
    params: &SystemParams,
    scope: SpectrumScope,
) -> Result<BatteryMetrics> {
    let n = params.n_particles;
    let dim = 2 * (n + 1);
    if rho.nrows() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: rho.nrows(),
        });
    }
    let rho_b = partial_trace_charger(rho)?;
    let h_b = dicke_hamiltonian(n, params.omega0);

    let sz: f64 = (0..=n)
        .map(|k| (k as f64 - n as f64 / 2.0) * rho_b[(k, k)].re)
        .sum();
    let density = params.omega0 * (sz / n as f64 + 0.5);
    let stored = n as f64 * density;

    let erg_total = match scope {
        SpectrumScope::FullSpace => {
            let levels = battery_levels_full(n, params.omega0, n + 1);
            ergotropy_with_levels(&rho_b, &h_b, &levels)?
        }
        SpectrumScope::SymmetricSector => ergotropy(&rho_b, &h_b)?,
    };
    let avg = erg_total / n as f64;
    let r = if stored > 0.0 { erg_total / stored } else { 0.0 };

    Ok(BatteryMetrics {
        stored_energy: stored,
        ergotropy: erg_total,
        efficiency_r: r,
        energy_density: density,
        avg_ergotropy: avg,
    })
}

/// Metrics of a 4×4 state in the two-qubit global basis (single cell).
pub fn single_cell_metrics(rho: &CMatrix, params: &SystemParams) -> Result<BatteryMetrics> {
    if rho.nrows() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            got: rho.nrows(),
        });
    }
    let rho_b = partial_trace_charger(rho)?;
    let w0 = params.omega0;
    let h_b = CMatrix::from_shape_fn((2, 2), |(i, j)| {
        if i == 0 && j == 0 {
            C64::new(w0, 0.0)
        } else {
            C64::ZERO
        }
    });
    // Ground-state initial condition: E_B reduces to Tr[H_B ρ_B].
    let stored = trace(&h_b.dot(&rho_b)).re;
    let erg = ergotropy(&rho_b, &h_b)?;
    let r = if stored > 0.0 { erg / stored } else { 0.0 };
    Ok(BatteryMetrics {
        stored_energy: stored,
        ergotropy: erg,
        efficiency_r: r,
        energy_density: stored,
        avg_ergotropy: erg,
    })
}

/// Basis-dispatching metrics evaluation for a full system state.
pub fn metrics_for(rho: &CMatrix, basis: &BasisSpec, params: &SystemParams) -> Result<BatteryMetrics> {
    match basis.kind {
        BasisKind::TwoQubitGlobal => single_cell_metrics(rho, params),
        BasisKind::DickeReduced(_) => multiparticle_metrics(rho, params),
        BasisKind::FullProduct(n) => {
            let rho_b = partial_trace_full_battery(rho, n)?;
            let w0 = params.omega0;
            // H_B = ω0 Σ_i σ_i⁺σ_i⁻: counts excitations (e = bit 0).
            let dim = 1 << n;
            let h_b = CMatrix::from_shape_fn((dim, dim), |(i, j)| {
                if i == j {
                    let excit = n - (i.count_ones() as usize);
                    C64::new(w0 * excit as f64, 0.0)
                } else {
                    C64::ZERO
                }
            });
            let stored = trace(&h_b.dot(&rho_b)).re;
            let erg = ergotropy(&rho_b, &h_b)?;
            let nf = n as f64;
            let r_eff = if stored > 0.0 { erg / stored } else { 0.0 };
            Ok(BatteryMetrics {
                stored_energy: stored,
                ergotropy: erg,
                efficiency_r: r_eff,
                energy_density: stored / nf,
                avg_ergotropy: erg / nf,
            })
        }
    }
}

/// Trace the charger out of a charger ⊗ N-qubit product state.
fn partial_trace_full_battery(rho: &CMatrix, n: usize) -> Result<CMatrix> {
    let dim = 1 << (n + 1);
    if rho.nrows() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: rho.nrows(),
        });
    }
    partial_trace_charger(rho)
}
