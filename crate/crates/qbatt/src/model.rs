//! Model construction: physical parameters, thermal occupations, and the
//! feedback master equation as either a direct right-hand-side evaluation or
//! a Liouvillian superoperator.
//!
//! The master equation combines the charger–battery exchange Hamiltonian,
//! the homodyne-feedback drive on the charger, the feedback measurement
//! noise, charger spontaneous emission, and battery dissipation with
//! reservoir-dependent rates: γ↓ = Γ_B(1+n_b), γ↑ = Γ_B n_b for a bosonic
//! reservoir and γ↓ = Γ_B(1−n_f), γ↑ = Γ_B n_f for a fermionic one. The
//! multiparticle variant replaces the battery operators by collective spin
//! operators and adds the intra-battery exchange coupling J.
//!
//! Superoperators act on column-major vectorized density matrices; the
//! construction is pinned by an equivalence test against the direct
//! right-hand-side evaluation rather than trusted.

use ndarray::Array2;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{
    collective_ops, embed, pairwise_exchange, qubit_op, BasisKind, BasisSpec, QubitOp,
};
use crate::linalg::{dagger, identity, kron, unvectorize, vectorize, CMatrix};

/// Largest battery size for which the brute-force full product space may be
/// built; it exists as an oracle for the Dicke reduction.
pub const FULL_PRODUCT_MAX_N: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReservoirKind {
    Bosonic,
    Fermionic,
}

/// Thermal state of the battery reservoir, given either as a dimensionless
/// temperature or directly as a mean occupation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Thermal {
    Temperature(f64),
    Occupation(f64),
}

/// Mean excitation number of a thermal reservoir at dimensionless
/// temperature `t`; exactly 0 at `t = 0`.
pub fn occupation(kind: ReservoirKind, t: f64) -> f64 {
    debug_assert!(t >= 0.0, "temperature must be non-negative");
    if t == 0.0 {
        return 0.0;
    }
    match kind {
        ReservoirKind::Bosonic => 1.0 / (1.0 / t).exp_m1(),
        ReservoirKind::Fermionic => 1.0 / ((1.0 / t).exp() + 1.0),
    }
}

/// Full physical parameter record. All energies and rates are in absolute
/// units (ω0 = 1 by default); δ = f/Γ_C is the primary feedback parameter
/// and the feedback strength f = δ·Γ_C is derived.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub omega0: f64,
    /// Charger–battery coupling g.
    pub g: f64,
    /// Intra-battery exchange coupling J (multiparticle only).
    pub j: f64,
    /// Charger spontaneous-emission rate Γ_C.
    pub gamma_c: f64,
    /// Battery dissipation rate Γ_B.
    pub gamma_b: f64,
    /// Feedback ratio δ = f/Γ_C.
    pub delta: f64,
    /// Total measurement efficiency η ∈ (0, 1].
    pub eta: f64,
    pub reservoir: ReservoirKind,
    pub thermal: Thermal,
    /// Battery particle count N.
    pub n_particles: usize,
}

impl Default for SystemParams {
    fn default() -> Self {
        Self {
            omega0: 1.0,
            g: 0.01,
            j: 0.0,
            gamma_c: 0.02,
            gamma_b: 0.001,
            delta: 1.0,
            eta: 1.0,
            reservoir: ReservoirKind::Bosonic,
            thermal: Thermal::Temperature(0.0),
            n_particles: 1,
        }
    }
}

impl SystemParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.g >= 0.0 && self.gamma_c >= 0.0 && self.gamma_b >= 0.0) {
            return Err(Error::DomainError("rates must be non-negative".into()));
        }
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(Error::DomainError("eta must lie in (0, 1]".into()));
        }
        if let Thermal::Temperature(t) = self.thermal {
            if t < 0.0 {
                return Err(Error::DomainError("temperature must be >= 0".into()));
            }
        }
        if let Thermal::Occupation(n) = self.thermal {
            if n < 0.0 {
                return Err(Error::DomainError("occupation must be >= 0".into()));
            }
        }
        if self.n_particles == 0 {
            return Err(Error::DomainError("N must be >= 1".into()));
        }
        Ok(())
    }

    /// Feedback strength f = δ·Γ_C.
    pub fn feedback_f(&self) -> f64 {
        self.delta * self.gamma_c
    }

    /// Mean reservoir occupation n_b or n_f.
    pub fn occupation(&self) -> f64 {
        match self.thermal {
            Thermal::Temperature(t) => occupation(self.reservoir, t),
            Thermal::Occupation(n) => n,
        }
    }

    /// Battery dissipation rates (γ↓, γ↑) for the configured reservoir.
    pub fn battery_rates(&self) -> (f64, f64) {
        let n = self.occupation();
        match self.reservoir {
            ReservoirKind::Bosonic => (self.gamma_b * (1.0 + n), self.gamma_b * n),
            ReservoirKind::Fermionic => (self.gamma_b * (1.0 - n), self.gamma_b * n),
        }
    }

    /// Natural basis for these parameters: the Appendix-style two-qubit
    /// basis for N = 1, the Dicke-reduced space otherwise.
    pub fn default_basis(&self) -> BasisSpec {
        if self.n_particles == 1 {
            BasisSpec::two_qubit_global()
        } else {
            BasisSpec::dicke_reduced(self.n_particles)
        }
    }

    // Chainable setters used heavily by sweeps and tests.
    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }
    pub fn with_gamma_c_over_g(mut self, r: f64) -> Self {
        self.gamma_c = r * self.g;
        self
    }
    pub fn with_gamma_b_over_g(mut self, r: f64) -> Self {
        self.gamma_b = r * self.g;
        self
    }
    pub fn with_j_over_g(mut self, r: f64) -> Self {
        self.j = r * self.g;
        self
    }
    pub fn with_eta(mut self, eta: f64) -> Self {
        self.eta = eta;
        self
    }
    pub fn with_particles(mut self, n: usize) -> Self {
        self.n_particles = n;
        self
    }
    pub fn with_reservoir(mut self, kind: ReservoirKind) -> Self {
        self.reservoir = kind;
        self
    }
    pub fn with_temperature(mut self, t: f64) -> Self {
        self.thermal = Thermal::Temperature(t);
        self
    }
    pub fn with_occupation(mut self, n: f64) -> Self {
        self.thermal = Thermal::Occupation(n);
        self
    }
}

/// The operators entering the master equation in a concrete basis.
struct ModelOps {
    h: CMatrix,
    charger_minus: CMatrix,
    charger_plus: CMatrix,
    charger_y: CMatrix,
    battery_minus: CMatrix,
    battery_plus: CMatrix,
}

fn model_ops(params: &SystemParams, basis: &BasisSpec) -> Result<ModelOps> {
    let n = params.n_particles;
    let gc = C64::new(params.g, 0.0);
    match basis.kind {
        BasisKind::TwoQubitGlobal => {
            if n != 1 {
                return Err(Error::DimensionMismatch { expected: 1, got: n });
            }
            let i2 = identity(2);
            let cm = kron(&qubit_op(QubitOp::Sm), &i2);
            let cp = kron(&qubit_op(QubitOp::Sp), &i2);
            let cy = kron(&qubit_op(QubitOp::Sy), &i2);
            let bm = kron(&i2, &qubit_op(QubitOp::Sm));
            let bp = kron(&i2, &qubit_op(QubitOp::Sp));
            let h = (cp.dot(&bm) + cm.dot(&bp)) * gc;
            Ok(ModelOps {
                h,
                charger_minus: cm,
                charger_plus: cp,
                charger_y: cy,
                battery_minus: bm,
                battery_plus: bp,
            })
        }
        BasisKind::DickeReduced(nb) => {
            if nb != n {
                return Err(Error::DimensionMismatch { expected: n, got: nb });
            }
            let ib = identity(n + 1);
            let i2 = identity(2);
            let ops = collective_ops(n);
            let cm = kron(&qubit_op(QubitOp::Sm), &ib);
            let cp = kron(&qubit_op(QubitOp::Sp), &ib);
            let cy = kron(&qubit_op(QubitOp::Sy), &ib);
            let bm = kron(&i2, &ops.sm);
            let bp = kron(&i2, &ops.sp);
            let mut h = (cp.dot(&bm) + cm.dot(&bp)) * gc;
            if params.j != 0.0 && n >= 2 {
                let ex = pairwise_exchange(n, BasisKind::DickeReduced(n))?;
                h = h + kron(&i2, &ex) * C64::new(params.j, 0.0);
            }
            Ok(ModelOps {
                h,
                charger_minus: cm,
                charger_plus: cp,
                charger_y: cy,
                battery_minus: bm,
                battery_plus: bp,
            })
        }
        BasisKind::FullProduct(nb) => {
            if nb != n {
                return Err(Error::DimensionMismatch { expected: n, got: nb });
            }
            if n > FULL_PRODUCT_MAX_N {
                return Err(Error::DimensionGuard {
                    n,
                    max: FULL_PRODUCT_MAX_N,
                });
            }
            let g_sites = vec![params.g; n];
            let n_pairs = n * (n - 1) / 2;
            let j_pairs = vec![params.j; n_pairs];
            let h = full_interaction_hamiltonian(n, &g_sites, &j_pairs)?;
            let cm = embed(&qubit_op(QubitOp::Sm), 0, basis)?;
            let cp = embed(&qubit_op(QubitOp::Sp), 0, basis)?;
            let cy = embed(&qubit_op(QubitOp::Sy), 0, basis)?;
            let dim = basis.dimension;
            let mut bm: CMatrix = Array2::zeros((dim, dim));
            for i in 1..=n {
                bm = bm + embed(&qubit_op(QubitOp::Sm), i, basis)?;
            }
            let bp = dagger(&bm);
            Ok(ModelOps {
                h,
                charger_minus: cm,
                charger_plus: cp,
                charger_y: cy,
                battery_minus: bm,
                battery_plus: bp,
            })
        }
    }
}

/// Interaction Hamiltonian on the charger ⊗ N-qubit product space with
/// per-site charger couplings `g_sites[i]` and per-pair exchange couplings
/// `j_pairs` in lexicographic (i < j) order. Heterogeneous couplings are
/// representable here but carry no validation data; the homogeneous case is
/// what the rest of the crate exercises.
pub fn full_interaction_hamiltonian(
    n: usize,
    g_sites: &[f64],
    j_pairs: &[f64],
) -> Result<CMatrix> {
    if g_sites.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: g_sites.len(),
        });
    }
    let n_pairs = n * (n - 1) / 2;
    if j_pairs.len() != n_pairs {
        return Err(Error::DimensionMismatch {
            expected: n_pairs,
            got: j_pairs.len(),
        });
    }
    let basis = BasisSpec::full_product(n);
    let dim = basis.dimension;
    let sp = qubit_op(QubitOp::Sp);
    let sm = qubit_op(QubitOp::Sm);
    let cp = embed(&sp, 0, &basis)?;
    let mut h: CMatrix = Array2::zeros((dim, dim));
    for i in 1..=n {
        let bi_m = embed(&sm, i, &basis)?;
        let term = cp.dot(&bi_m);
        h = h + (&term + &dagger(&term)) * C64::new(g_sites[i - 1], 0.0);
    }
    let mut pair = 0;
    for i in 1..=n {
        for jdx in i + 1..=n {
            if j_pairs[pair] != 0.0 {
                let term = embed(&sp, i, &basis)?.dot(&embed(&sm, jdx, &basis)?);
                h = h + (&term + &dagger(&term)) * C64::new(j_pairs[pair], 0.0);
            }
            pair += 1;
        }
    }
    Ok(h)
}

/// Direct evaluation of dρ/dt for the feedback master equation.
pub fn lindblad_rhs(params: &SystemParams, rho: &CMatrix) -> Result<CMatrix> {
    let basis = basis_for_dimension(params, rho.nrows())?;
    lindblad_rhs_in(params, rho, &basis)
}

/// As [`lindblad_rhs`], with the basis stated explicitly.
pub fn lindblad_rhs_in(
    params: &SystemParams,
    rho: &CMatrix,
    basis: &BasisSpec,
) -> Result<CMatrix> {
    if rho.nrows() != basis.dimension || rho.ncols() != basis.dimension {
        return Err(Error::DimensionMismatch {
            expected: basis.dimension,
            got: rho.nrows(),
        });
    }
    let ops = model_ops(params, basis)?;
    let f = params.feedback_f();
    // Expressing the feedback noise rate through δ keeps Γ_C = 0 regular.
    let noise_rate = params.delta * params.delta * params.gamma_c / params.eta;
    let (gamma_down, gamma_up) = params.battery_rates();

    let mut out = commutator_rhs(&ops.h, rho);
    if f != 0.0 {
        // i f [σ_C^y, σ_C⁻ρ + ρσ_C⁺]
        let inner = ops.charger_minus.dot(rho) + rho.dot(&ops.charger_plus);
        let comm = ops.charger_y.dot(&inner) - inner.dot(&ops.charger_y);
        out = out + comm * C64::new(0.0, f);
    }
    add_dissipator_rhs(&mut out, &ops.charger_y, noise_rate, rho);
    add_dissipator_rhs(&mut out, &ops.charger_minus, params.gamma_c, rho);
    add_dissipator_rhs(&mut out, &ops.battery_minus, gamma_down, rho);
    add_dissipator_rhs(&mut out, &ops.battery_plus, gamma_up, rho);
    Ok(out)
}

fn commutator_rhs(h: &CMatrix, rho: &CMatrix) -> CMatrix {
    (h.dot(rho) - rho.dot(h)) * C64::new(0.0, -1.0)
}

fn add_dissipator_rhs(out: &mut CMatrix, c: &CMatrix, rate: f64, rho: &CMatrix) {
    if rate == 0.0 {
        return;
    }
    let cd = dagger(c);
    let num = cd.dot(c);
    let jump = c.dot(rho).dot(&cd);
    let anti = num.dot(rho) + rho.dot(&num);
    *out = &*out + (jump - anti * C64::new(0.5, 0.0)) * C64::new(rate, 0.0);
}

fn basis_for_dimension(params: &SystemParams, dim: usize) -> Result<BasisSpec> {
    let n = params.n_particles;
    if n == 1 && dim == 4 {
        return Ok(BasisSpec::two_qubit_global());
    }
    if dim == 2 * (n + 1) {
        return Ok(BasisSpec::dicke_reduced(n));
    }
    if dim == (1 << (n + 1)) {
        return Ok(BasisSpec::full_product(n));
    }
    Err(Error::DimensionMismatch {
        expected: 2 * (n + 1),
        got: dim,
    })
}

/// Liouvillian superoperator acting on column-major vectorized density
/// matrices; immutable once built.
#[derive(Debug, Clone)]
pub struct Liouvillian {
    pub matrix: CMatrix,
    pub basis: BasisSpec,
}

impl Liouvillian {
    /// Hilbert-space dimension d (the matrix is d² × d²).
    pub fn dim(&self) -> usize {
        self.basis.dimension
    }

    /// Apply to a density matrix: unvec(L · vec(ρ)).
    pub fn apply(&self, rho: &CMatrix) -> CMatrix {
        let v = vectorize(rho);
        unvectorize(&self.matrix.dot(&v), self.dim())
    }
}

/// Build the Liouvillian for the feedback master equation in the given
/// basis. FullProduct bases are guarded to N ≤ 6.
pub fn build_liouvillian(params: &SystemParams, basis: &BasisSpec) -> Result<Liouvillian> {
    params.validate()?;
    let ops = model_ops(params, basis)?;
    let d = basis.dimension;
    let id = identity(d);
    let f = params.feedback_f();
    let noise_rate = params.delta * params.delta * params.gamma_c / params.eta;
    let (gamma_down, gamma_up) = params.battery_rates();

    // −i(I⊗H − Hᵀ⊗I)
    let mut l = (kron(&id, &ops.h) - kron(&ops.h.t().to_owned(), &id)) * C64::new(0.0, -1.0);

    if f != 0.0 {
        // i f [ I⊗(Yσ⁻) + σ⁺ᵀ⊗Y − Yᵀ⊗σ⁻ − (σ⁺Y)ᵀ⊗I ]
        let y = &ops.charger_y;
        let y_sm = y.dot(&ops.charger_minus);
        let sp_y = ops.charger_plus.dot(y);
        let fb = kron(&id, &y_sm) + kron(&ops.charger_plus.t().to_owned(), y)
            - kron(&y.t().to_owned(), &ops.charger_minus)
            - kron(&sp_y.t().to_owned(), &id);
        l = l + fb * C64::new(0.0, f);
    }
    add_dissipator_super(&mut l, &ops.charger_y, noise_rate, &id);
    add_dissipator_super(&mut l, &ops.charger_minus, params.gamma_c, &id);
    add_dissipator_super(&mut l, &ops.battery_minus, gamma_down, &id);
    add_dissipator_super(&mut l, &ops.battery_plus, gamma_up, &id);

    Ok(Liouvillian {
        matrix: l,
        basis: *basis,
    })
}

fn add_dissipator_super(l: &mut CMatrix, c: &CMatrix, rate: f64, id: &CMatrix) {
    if rate == 0.0 {
        return;
    }
    let cd = dagger(c);
    let num = cd.dot(c);
    let half = C64::new(0.5, 0.0);
    let term = kron(&c.mapv(|z| z.conj()), c)
        - kron(id, &num) * half
        - kron(&num.t().to_owned(), id) * half;
    *l = &*l + term * C64::new(rate, 0.0);
}
