//! Physical operator constructors: single-qubit Pauli/ladder operators,
//! site-embedded operators on the charger ⊗ N-qubit product space, and
//! collective (Dicke) spin operators on the symmetric multiplet.
//!
//! Qubit basis ordering puts |e⟩ at index 0 and |g⟩ at index 1, so the
//! two-qubit product basis is |1⟩=|ee⟩, |2⟩=|eg⟩, |3⟩=|ge⟩, |4⟩=|gg⟩.
//! The Dicke basis |j=N/2, m⟩ is ordered by ascending m, which places the
//! collective ground state |g…g⟩ at index 0.

use ndarray::Array2;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{identity, kron, CMatrix};

/// Which representation a model is built in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BasisKind {
    /// Charger ⊗ single battery qubit, dimension 4, Appendix-style ordering.
    TwoQubitGlobal,
    /// Charger ⊗ N individual battery qubits, dimension 2^(N+1).
    FullProduct(usize),
    /// Charger ⊗ symmetric spin-N/2 multiplet, dimension 2(N+1).
    DickeReduced(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BasisSpec {
    pub kind: BasisKind,
    pub dimension: usize,
}

impl BasisSpec {
    pub fn two_qubit_global() -> Self {
        Self {
            kind: BasisKind::TwoQubitGlobal,
            dimension: 4,
        }
    }

    pub fn full_product(n: usize) -> Self {
        Self {
            kind: BasisKind::FullProduct(n),
            dimension: 1 << (n + 1),
        }
    }

    pub fn dicke_reduced(n: usize) -> Self {
        Self {
            kind: BasisKind::DickeReduced(n),
            dimension: 2 * (n + 1),
        }
    }

    /// Number of battery particles this basis describes.
    pub fn particles(&self) -> usize {
        match self.kind {
            BasisKind::TwoQubitGlobal => 1,
            BasisKind::FullProduct(n) | BasisKind::DickeReduced(n) => n,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QubitOp {
    Sx,
    Sy,
    Sz,
    Sp,
    Sm,
    Id,
}

/// 2×2 qubit operator with |e⟩ = index 0, |g⟩ = index 1, σ⁺ = |e⟩⟨g|.
pub fn qubit_op(name: QubitOp) -> CMatrix {
    let z = C64::ZERO;
    let one = C64::ONE;
    let i = C64::I;
    let m = match name {
        QubitOp::Sx => [[z, one], [one, z]],
        QubitOp::Sy => [[z, -i], [i, z]],
        QubitOp::Sz => [[one, z], [z, -one]],
        QubitOp::Sp => [[z, one], [z, z]],
        QubitOp::Sm => [[z, z], [one, z]],
        QubitOp::Id => [[one, z], [z, one]],
    };
    Array2::from_shape_fn((2, 2), |(r, c)| m[r][c])
}

/// Embed a 2×2 operator at `site` of the charger ⊗ N-qubit product space
/// (site 0 is the charger, sites 1..=N the battery qubits).
pub fn embed(op: &CMatrix, site: usize, basis: &BasisSpec) -> Result<CMatrix> {
    let n = match basis.kind {
        BasisKind::FullProduct(n) => n,
        _ => {
            return Err(Error::Config(
                "embed requires a FullProduct basis".into(),
            ))
        }
    };
    if site > n {
        return Err(Error::SiteOutOfRange {
            site,
            sites: n + 1,
        });
    }
    let left = identity(1 << site);
    let right = identity(1 << (n - site));
    Ok(kron(&kron(&left, op), &right))
}

/// Collective spin operators on the (N+1)-dimensional Dicke multiplet
/// |j=N/2, m⟩ with m ascending from -N/2.
pub struct CollectiveOps {
    pub sp: CMatrix,
    pub sm: CMatrix,
    pub sz: CMatrix,
}

pub fn collective_ops(n: usize) -> CollectiveOps {
    assert!(n >= 1, "collective operators need at least one particle");
    let dim = n + 1;
    let j = n as f64 / 2.0;
    let mut sp: CMatrix = Array2::zeros((dim, dim));
    let mut sz: CMatrix = Array2::zeros((dim, dim));
    for k in 0..dim {
        let m = k as f64 - j;
        sz[(k, k)] = C64::new(m, 0.0);
        if k + 1 < dim {
            // S⁺|j,m⟩ = √(j(j+1) − m(m+1)) |j,m+1⟩
            let amp = (j * (j + 1.0) - m * (m + 1.0)).sqrt();
            sp[(k + 1, k)] = C64::new(amp, 0.0);
        }
    }
    let sm = crate::linalg::dagger(&sp);
    CollectiveOps { sp, sm, sz }
}

/// Intra-battery exchange Σ_{i<j} (σ_i⁺σ_j⁻ + σ_i⁻σ_j⁺) on the battery
/// space alone: dimension 2^n for `FullProduct`, or its Dicke-reduced
/// equivalent S⁺S⁻ − (S_z + n/2) on the (n+1)-dimensional multiplet.
pub fn pairwise_exchange(n: usize, kind: BasisKind) -> Result<CMatrix> {
    if n < 2 && matches!(kind, BasisKind::FullProduct(_)) {
        // No pairs; zero matrix on the 2^n space.
        return Ok(Array2::zeros((1 << n, 1 << n)));
    }
    match kind {
        BasisKind::FullProduct(_) => {
            let sp = qubit_op(QubitOp::Sp);
            let sm = qubit_op(QubitOp::Sm);
            let dim = 1 << n;
            let mut total: CMatrix = Array2::zeros((dim, dim));
            for i in 0..n {
                for j in i + 1..n {
                    let a = battery_site_op(&sp, i, n).dot(&battery_site_op(&sm, j, n));
                    total = total + &a + &crate::linalg::dagger(&a);
                }
            }
            Ok(total)
        }
        BasisKind::DickeReduced(_) => {
            let dim = n + 1;
            if n < 2 {
                return Ok(Array2::zeros((dim, dim)));
            }
            let ops = collective_ops(n);
            let spsm = ops.sp.dot(&ops.sm);
            let shift = &ops.sz + &(identity(dim) * C64::new(n as f64 / 2.0, 0.0));
            Ok(spsm - shift)
        }
        BasisKind::TwoQubitGlobal => Err(Error::Config(
            "pairwise exchange is a battery-space operator; use FullProduct or DickeReduced".into(),
        )),
    }
}

/// Embed a 2×2 operator at battery site `i` (0-based) of an n-qubit
/// battery-only product space.
pub fn battery_site_op(op: &CMatrix, i: usize, n: usize) -> CMatrix {
    let left = identity(1 << i);
    let right = identity(1 << (n - i - 1));
    kron(&kron(&left, op), &right)
}

/// Isometry from the (n+1)-dimensional Dicke multiplet into the 2^n battery
/// product space; column k is the normalized symmetric state with k
/// excitations (m = k − n/2). Used for symmetric-subspace cross-checks.
pub fn symmetric_isometry(n: usize) -> CMatrix {
    let full = 1usize << n;
    let mut v: CMatrix = Array2::zeros((full, n + 1));
    let mut counts = vec![0usize; n + 1];
    for idx in 0..full {
        // Qubit basis has |e⟩ = 0, so an excitation is a zero bit.
        let excitations = n - (idx.count_ones() as usize);
        counts[excitations] += 1;
    }
    for idx in 0..full {
        let k = n - (idx.count_ones() as usize);
        v[(idx, k)] = C64::new(1.0 / (counts[k] as f64).sqrt(), 0.0);
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{dagger, fro_norm, max_abs};
    use approx::assert_abs_diff_eq;
    use ndarray::Array1;

    #[test]
    fn ladder_operators_act_as_expected() {
        let sp = qubit_op(QubitOp::Sp);
        let g = Array1::from(vec![C64::ZERO, C64::ONE]);
        let e = sp.dot(&g);
        assert_eq!(e[0], C64::ONE);
        assert_eq!(e[1], C64::ZERO);

        // σ⁺σ⁻ is the excited-state projector.
        let proj = sp.dot(&qubit_op(QubitOp::Sm));
        assert_eq!(proj[(0, 0)], C64::ONE);
        assert_eq!(proj[(1, 1)], C64::ZERO);
    }

    #[test]
    fn sigma_y_is_hermitian_with_unit_spectrum() {
        let sy = qubit_op(QubitOp::Sy);
        let eig = crate::linalg::hermitian_eigen(&sy).unwrap();
        assert_abs_diff_eq!(eig.eigenvalues[0], -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(eig.eigenvalues[1], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn embed_places_operator_at_site() {
        let basis = BasisSpec::full_product(1);
        let sz = qubit_op(QubitOp::Sz);
        let embedded = embed(&sz, 0, &basis).unwrap();
        assert_eq!(embedded, kron(&sz, &identity(2)));

        // Projector trace × identity factors.
        let n = 3;
        let basis = BasisSpec::full_product(n);
        let proj = qubit_op(QubitOp::Sp).dot(&qubit_op(QubitOp::Sm));
        for site in 0..=n {
            let m = embed(&proj, site, &basis).unwrap();
            assert_abs_diff_eq!(
                crate::linalg::trace(&m).re,
                (1 << n) as f64,
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn embed_rejects_out_of_range_site() {
        let basis = BasisSpec::full_product(2);
        let sz = qubit_op(QubitOp::Sz);
        assert!(matches!(
            embed(&sz, 3, &basis),
            Err(Error::SiteOutOfRange { .. })
        ));
    }

    #[test]
    fn embedded_operators_on_distinct_sites_commute() {
        let basis = BasisSpec::full_product(2);
        let a = embed(&qubit_op(QubitOp::Sp), 1, &basis).unwrap();
        let b = embed(&qubit_op(QubitOp::Sm), 2, &basis).unwrap();
        let comm = a.dot(&b) - b.dot(&a);
        assert_abs_diff_eq!(max_abs(&comm), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn embed_preserves_hermiticity() {
        let basis = BasisSpec::full_product(3);
        for op in [QubitOp::Sx, QubitOp::Sy, QubitOp::Sz] {
            let m = embed(&qubit_op(op), 2, &basis).unwrap();
            assert!(crate::linalg::hermiticity_deviation(&m) <= 1e-14);
        }
    }

    #[test]
    fn collective_ops_single_particle_match_qubit_ops() {
        // n = 1 Dicke basis orders |g⟩ before |e⟩, the reverse of qubit_op.
        let ops = collective_ops(1);
        assert_eq!(ops.sp[(1, 0)], C64::ONE);
        assert_eq!(ops.sz[(0, 0)], C64::new(-0.5, 0.0));
        assert_eq!(ops.sz[(1, 1)], C64::new(0.5, 0.0));
    }

    #[test]
    fn collective_sz_spectrum() {
        let ops = collective_ops(2);
        let diag: Vec<f64> = ops.sz.diag().iter().map(|z| z.re).collect();
        assert_eq!(diag, vec![-1.0, 0.0, 1.0]);
    }

    #[test]
    fn collective_commutator_identity() {
        // [S⁺, S⁻] = 2 S_z for n = 3.
        let ops = collective_ops(3);
        let comm = ops.sp.dot(&ops.sm) - ops.sm.dot(&ops.sp);
        let expected = &ops.sz * C64::new(2.0, 0.0);
        assert_abs_diff_eq!(fro_norm(&(&comm - &expected)), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn pairwise_exchange_swaps_two_qubits() {
        let ex = pairwise_exchange(2, BasisKind::FullProduct(2)).unwrap();
        // |eg⟩ = index 1 → |ge⟩ = index 2 in the 4-dim battery space.
        let mut eg = Array1::from(vec![C64::ZERO; 4]);
        eg[1] = C64::ONE;
        let out = ex.dot(&eg);
        assert_eq!(out[2], C64::ONE);
        assert_eq!(out[1], C64::ZERO);
    }

    #[test]
    fn pairwise_exchange_dicke_single_particle_is_zero() {
        let ex = pairwise_exchange(1, BasisKind::DickeReduced(1)).unwrap();
        assert_abs_diff_eq!(max_abs(&ex), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn pairwise_exchange_matches_symmetric_sector_lift() {
        // Full-space exchange operator equals the symmetric lift of
        // S⁺S⁻ − S_z − n/2 on all Dicke states, n = 3.
        let n = 3;
        let full = pairwise_exchange(n, BasisKind::FullProduct(n)).unwrap();
        let dicke = pairwise_exchange(n, BasisKind::DickeReduced(n)).unwrap();
        let v = symmetric_isometry(n);
        let projected = dagger(&v).dot(&full).dot(&v);
        assert!(fro_norm(&(&projected - &dicke)) <= 1e-12);
    }

    #[test]
    fn collective_operators_match_projected_site_sums() {
        // For every n ≤ 4, projecting the full-space sum operator onto the
        // symmetric subspace reproduces the Dicke-reduced matrix.
        for n in 1..=4 {
            let v = symmetric_isometry(n);
            let ops = collective_ops(n);
            let dim = 1 << n;

            let mut sp_full: CMatrix = Array2::zeros((dim, dim));
            let mut sz_full: CMatrix = Array2::zeros((dim, dim));
            for i in 0..n {
                sp_full = sp_full + battery_site_op(&qubit_op(QubitOp::Sp), i, n);
                sz_full = sz_full
                    + battery_site_op(&qubit_op(QubitOp::Sz), i, n)
                        .mapv(|z| z * 0.5);
            }
            let sm_full = dagger(&sp_full);

            for (full, reduced) in [
                (&sp_full, &ops.sp),
                (&sm_full, &ops.sm),
                (&sz_full, &ops.sz),
            ] {
                let projected = dagger(&v).dot(full).dot(&v);
                assert!(
                    fro_norm(&(&projected - reduced)) <= 1e-12,
                    "mismatch at n = {n}"
                );
                // The sector is invariant: O V = V O_reduced.
                let lifted = full.dot(&v) - v.dot(reduced);
                assert!(fro_norm(&lifted) <= 1e-12, "sector leak at n = {n}");
            }
        }
    }

    #[test]
    fn basis_dimensions() {
        assert_eq!(BasisSpec::two_qubit_global().dimension, 4);
        assert_eq!(BasisSpec::full_product(3).dimension, 16);
        assert_eq!(BasisSpec::dicke_reduced(3).dimension, 8);
    }
}
