//! Stochastic homodyne-detection trajectories with direct feedback.
//!
//! Each step draws a Wiener increment, applies the diffusive measurement
//! update for the monitored charger decay channel (measurement operator
//! √(ηΓ_C)σ_C⁻ along the x quadrature) on top of the no-feedback Lindblad
//! drift, forms the photocurrent record r·dt = ⟨σ_C^x⟩dt + dw/√(ηΓ_C), and
//! then applies the feedback rotation exp(i f r dt σ_C^y) — measure first,
//! act second. The feedback master equation is never used here; that the
//! ensemble mean reproduces it is a test, not an input.
//!
//! Randomness comes from per-trajectory ChaCha8 streams (stream index =
//! trajectory index, seeded from the config seed), so results are
//! bit-reproducible and independent of scheduling.

use ndarray::Array2;
use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hilbert::BasisKind;
use crate::linalg::{hermitian_eigen, CMatrix};
use crate::model::{build_liouvillian, SystemParams};

/// Trajectories processed per deterministic reduction chunk; fixed so that
/// ensemble sums are independent of the thread count.
const ENSEMBLE_CHUNK: usize = 32;

#[derive(Debug, Clone)]
pub struct TrajectoryConfig {
    pub params: SystemParams,
    pub dt: f64,
    pub steps: usize,
    pub ensemble_size: usize,
    pub seed: u64,
    /// Populations and photocurrent are recorded every `record_stride`
    /// steps (plus the final step).
    pub record_stride: usize,
    /// Feedback delay; only the Markovian limit τ = 0 is supported.
    pub tau: f64,
}

impl TrajectoryConfig {
    pub fn new(
        params: SystemParams,
        dt: f64,
        steps: usize,
        ensemble_size: usize,
        seed: u64,
    ) -> Self {
        let record_stride = (steps / 1000).max(1);
        Self {
            params,
            dt,
            steps,
            ensemble_size,
            seed,
            record_stride,
            tau: 0.0,
        }
    }

    fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if !(self.dt > 0.0) {
            return Err(Error::DomainError("dt must be positive".into()));
        }
        if self.ensemble_size < 1 {
            return Err(Error::DomainError("ensemble_size must be >= 1".into()));
        }
        if self.tau != 0.0 {
            return Err(Error::DomainError(
                "only the Markovian limit tau = 0 is supported".into(),
            ));
        }
        if self.record_stride == 0 {
            return Err(Error::DomainError("record_stride must be >= 1".into()));
        }
        Ok(())
    }
}

/// One realization: photocurrent samples and population pairs at the
/// recorded steps, plus the final conditioned state.
#[derive(Debug, Clone)]
pub struct TrajectoryRecord {
    pub times: Vec<f64>,
    pub photocurrent: Vec<f64>,
    /// (charger excited population, battery excited fraction) per record.
    pub populations: Vec<(f64, f64)>,
    pub final_state: CMatrix,
}

/// Per-step ensemble means and standard errors.
#[derive(Debug, Clone)]
pub struct EnsembleStats {
    pub times: Vec<f64>,
    pub mean_charger: Vec<f64>,
    pub se_charger: Vec<f64>,
    pub mean_battery: Vec<f64>,
    pub se_battery: Vec<f64>,
    pub mean_photocurrent: Vec<f64>,
}

/// Precomputed operators for the stepper, acting on the column-major
/// vectorized state.
struct TrajectoryEngine {
    d: usize,
    half: usize,
    /// No-feedback Liouvillian (δ = 0), flat row-major n×n.
    l_det: Vec<C64>,
    dt: f64,
    /// √(ηΓ_C).
    innov: f64,
    /// Feedback strength f = δΓ_C.
    feedback: f64,
    /// Battery-excitation weight of each battery basis index.
    battery_weight: Vec<f64>,
}

impl TrajectoryEngine {
    fn new(params: &SystemParams, dt: f64) -> Result<Self> {
        let basis = params.default_basis();
        let no_feedback = params.clone().with_delta(0.0);
        let liou = build_liouvillian(&no_feedback, &basis)?;
        let d = basis.dimension;
        let n = d * d;
        let mut l_det = vec![C64::ZERO; n * n];
        for i in 0..n {
            for j in 0..n {
                l_det[i * n + j] = liou.matrix[(i, j)];
            }
        }
        let half = d / 2;
        let battery_weight = match basis.kind {
            BasisKind::TwoQubitGlobal => vec![1.0, 0.0],
            BasisKind::DickeReduced(nb) => (0..=nb).map(|k| k as f64 / nb as f64).collect(),
            BasisKind::FullProduct(_) => {
                return Err(Error::Config(
                    "trajectories run in the two-qubit or Dicke representation".into(),
                ))
            }
        };
        Ok(Self {
            d,
            half,
            l_det,
            dt,
            innov: (params.eta * params.gamma_c).sqrt(),
            feedback: params.feedback_f(),
            battery_weight,
        })
    }

    #[inline]
    fn idx(&self, row: usize, col: usize) -> usize {
        col * self.d + row
    }

    /// ⟨σ_C^x⟩ of the current state.
    fn charger_x(&self, v: &[C64]) -> f64 {
        let m = self.half;
        let mut acc = 0.0;
        for k in 0..m {
            acc += v[self.idx(k, m + k)].re + v[self.idx(m + k, k)].re;
        }
        acc
    }

    /// One Euler–Maruyama step with Wiener increment `dw`; returns the
    /// photocurrent sample r for this step.
    fn step(&self, v: &mut Vec<C64>, scratch: &mut Vec<C64>, dw: f64) -> f64 {
        let d = self.d;
        let n = d * d;
        let m = self.half;
        let x_exp = self.charger_x(v);

        // Deterministic drift plus measurement innovation:
        // v' = v + dt·L v + √(ηΓ_C)·dw·(σ⁻ρ + ρσ⁺ − ⟨σx⟩ρ).
        scratch.clear();
        scratch.resize(n, C64::ZERO);
        let dt_c = C64::new(self.dt, 0.0);
        for (i, out) in scratch.iter_mut().enumerate() {
            let row = &self.l_det[i * n..(i + 1) * n];
            let mut acc = C64::ZERO;
            for (l_ij, v_j) in row.iter().zip(v.iter()) {
                acc += *l_ij * *v_j;
            }
            *out = acc * dt_c;
        }
        let g_c = C64::new(self.innov * dw, 0.0);
        let xc = C64::new(x_exp, 0.0);
        for col in 0..d {
            for row in 0..d {
                let i = self.idx(row, col);
                // (σ_C⁻ρ) shifts the e-row block down; (ρσ_C⁺) the column.
                let mut inn = -xc * v[i];
                if row >= m {
                    inn += v[self.idx(row - m, col)];
                }
                if col >= m {
                    inn += v[self.idx(row, col - m)];
                }
                scratch[i] += g_c * inn;
            }
        }
        for i in 0..n {
            v[i] += scratch[i];
        }

        // Measurement record and feedback rotation exp(iθσ_C^y), which acts
        // on the charger as the real rotation [[cosθ, sinθ], [−sinθ, cosθ]].
        let r_dt = x_exp * self.dt + dw / self.innov;
        if self.feedback != 0.0 {
            let theta = self.feedback * r_dt;
            let (s, c) = theta.sin_cos();
            let (cc, sc) = (C64::new(c, 0.0), C64::new(s, 0.0));
            for col in 0..d {
                for k in 0..m {
                    let top = self.idx(k, col);
                    let bot = self.idx(m + k, col);
                    let a = v[top];
                    let b = v[bot];
                    v[top] = cc * a + sc * b;
                    v[bot] = cc * b - sc * a;
                }
            }
            for row in 0..d {
                for k in 0..m {
                    let left = self.idx(row, k);
                    let right = self.idx(row, m + k);
                    let a = v[left];
                    let b = v[right];
                    v[left] = cc * a + sc * b;
                    v[right] = cc * b - sc * a;
                }
            }
        }

        // Renormalize the trace drift of the nonlinear update.
        let mut tr = C64::ZERO;
        for j in 0..d {
            tr += v[self.idx(j, j)];
        }
        let inv = C64::ONE / tr;
        for z in v.iter_mut() {
            *z *= inv;
        }
        r_dt / self.dt
    }

    /// Ground state (charger and battery both unexcited).
    fn ground_state(&self) -> Vec<C64> {
        let mut v = vec![C64::ZERO; self.d * self.d];
        let g_index = match self.battery_weight.len() {
            2 => 3,         // |gg⟩ in the two-qubit global ordering
            _ => self.half, // charger-g block, m = −N/2
        };
        v[self.idx(g_index, g_index)] = C64::ONE;
        v
    }

    fn charger_excited(&self, v: &[C64]) -> f64 {
        (0..self.half).map(|k| v[self.idx(k, k)].re).sum()
    }

    fn battery_excited(&self, v: &[C64]) -> f64 {
        let m = self.half;
        let mut acc = 0.0;
        for c in 0..2 {
            for k in 0..m {
                acc += self.battery_weight[k] * v[self.idx(c * m + k, c * m + k)].re;
            }
        }
        acc
    }

    fn to_matrix(&self, v: &[C64]) -> CMatrix {
        let d = self.d;
        Array2::from_shape_fn((d, d), |(i, j)| v[self.idx(i, j)])
    }
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Run one conditioned trajectory (stream 0 of the configured seed).
pub fn run_trajectory(cfg: &TrajectoryConfig) -> Result<TrajectoryRecord> {
    run_trajectory_stream(cfg, 0)
}

/// Run the trajectory with a specific sub-stream index; `ensemble_average`
/// uses streams 0..ensemble_size.
pub fn run_trajectory_stream(cfg: &TrajectoryConfig, stream: u64) -> Result<TrajectoryRecord> {
    cfg.validate()?;
    let engine = TrajectoryEngine::new(&cfg.params, cfg.dt)?;
    let mut rng = stream_rng(cfg.seed, stream);
    let sqrt_dt = cfg.dt.sqrt();

    let mut v = engine.ground_state();
    let mut scratch = Vec::new();
    let mut record = TrajectoryRecord {
        times: Vec::new(),
        photocurrent: Vec::new(),
        populations: Vec::new(),
        final_state: Array2::zeros((engine.d, engine.d)),
    };
    for step in 1..=cfg.steps {
        let dw: f64 =
            <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng) * sqrt_dt;
        let r = engine.step(&mut v, &mut scratch, dw);
        if step % cfg.record_stride == 0 || step == cfg.steps {
            record.times.push(step as f64 * cfg.dt);
            record.photocurrent.push(r);
            record
                .populations
                .push((engine.charger_excited(&v), engine.battery_excited(&v)));
            check_physical(&engine, &v)?;
        }
    }
    record.final_state = engine.to_matrix(&v);
    Ok(record)
}

fn check_physical(engine: &TrajectoryEngine, v: &[C64]) -> Result<()> {
    let rho = engine.to_matrix(v);
    let herm = (&rho + &crate::linalg::dagger(&rho)) * C64::new(0.5, 0.0);
    let eig = hermitian_eigen(&herm)?;
    let min_eig = eig.eigenvalues.first().copied().unwrap_or(0.0);
    // An Euler–Maruyama step dips below zero by up to ~½ηΓ_C·dw² even at a
    // sound step size, so the guard floor scales with the per-step noise
    // quantum ηΓ_C·dt and tightens to 1e-4 as dt → 0.
    let floor = 1e-4f64.max(30.0 * engine.innov * engine.innov * engine.dt);
    if min_eig < -floor {
        return Err(Error::NonPhysicalState { min_eig });
    }
    Ok(())
}

/// Ensemble mean and standard error of the recorded populations, with
/// sub-seeds derived from the config seed by trajectory index. The
/// reduction is chunked deterministically, so results do not depend on the
/// rayon thread count.
pub fn ensemble_average(cfg: &TrajectoryConfig) -> Result<EnsembleStats> {
    cfg.validate()?;
    if cfg.ensemble_size < 2 {
        return Err(Error::DomainError(
            "ensemble_average needs ensemble_size >= 2".into(),
        ));
    }
    let m = cfg.ensemble_size;
    let chunks: Vec<(usize, usize)> = (0..m)
        .step_by(ENSEMBLE_CHUNK)
        .map(|start| (start, (start + ENSEMBLE_CHUNK).min(m)))
        .collect();

    struct Partial {
        sum_c: Vec<f64>,
        sq_c: Vec<f64>,
        sum_b: Vec<f64>,
        sq_b: Vec<f64>,
        sum_r: Vec<f64>,
        times: Vec<f64>,
    }

    let partials: Vec<Result<Partial>> = chunks
        .par_iter()
        .map(|&(start, end)| {
            let mut acc: Option<Partial> = None;
            for k in start..end {
                let rec = run_trajectory_stream(cfg, k as u64)?;
                let p = acc.get_or_insert_with(|| Partial {
                    sum_c: vec![0.0; rec.times.len()],
                    sq_c: vec![0.0; rec.times.len()],
                    sum_b: vec![0.0; rec.times.len()],
                    sq_b: vec![0.0; rec.times.len()],
                    sum_r: vec![0.0; rec.times.len()],
                    times: rec.times.clone(),
                });
                for (i, &(pc, pb)) in rec.populations.iter().enumerate() {
                    p.sum_c[i] += pc;
                    p.sq_c[i] += pc * pc;
                    p.sum_b[i] += pb;
                    p.sq_b[i] += pb * pb;
                    p.sum_r[i] += rec.photocurrent[i];
                }
            }
            Ok(acc.expect("chunks are non-empty"))
        })
        .collect();

    let mut total: Option<Partial> = None;
    for part in partials {
        let part = part?;
        match &mut total {
            None => total = Some(part),
            Some(t) => {
                for i in 0..t.times.len() {
                    t.sum_c[i] += part.sum_c[i];
                    t.sq_c[i] += part.sq_c[i];
                    t.sum_b[i] += part.sum_b[i];
                    t.sq_b[i] += part.sq_b[i];
                    t.sum_r[i] += part.sum_r[i];
                }
            }
        }
    }
    let t = total.expect("ensemble_size >= 2");
    let mf = m as f64;
    let se = |sum: f64, sq: f64| -> f64 {
        let mean = sum / mf;
        let var = ((sq - mf * mean * mean) / (mf - 1.0)).max(0.0);
        (var / mf).sqrt()
    };
    Ok(EnsembleStats {
        times: t.times.clone(),
        mean_charger: t.sum_c.iter().map(|s| s / mf).collect(),
        se_charger: t
            .sum_c
            .iter()
            .zip(&t.sq_c)
            .map(|(&s, &q)| se(s, q))
            .collect(),
        mean_battery: t.sum_b.iter().map(|s| s / mf).collect(),
        se_battery: t
            .sum_b
            .iter()
            .zip(&t.sq_b)
            .map(|(&s, &q)| se(s, q))
            .collect(),
        mean_photocurrent: t.sum_r.iter().map(|s| s / mf).collect(),
    })
}
