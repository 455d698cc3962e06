//! Dense complex linear algebra: Kronecker products, Hermitian
//! eigendecomposition, null-space extraction, and an LU solver.
//!
//! Everything operates on `ndarray::Array2<Complex64>` in double precision.
//! The eigensolver is a cyclic Jacobi iteration for Hermitian matrices, which
//! is accurate and simple at the dimensions used here (<= a few hundred).

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

pub type CMatrix = Array2<C64>;
pub type CVector = Array1<C64>;

/// Maximum number of full Jacobi sweeps before giving up.
pub const JACOBI_MAX_SWEEPS: usize = 100;
/// Convergence threshold on the off-diagonal Frobenius norm, relative to ‖m‖.
pub const JACOBI_OFFDIAG_TOL: f64 = 1e-13;
/// Default relative singular-value cutoff for [`kernel`].
pub const KERNEL_DEFAULT_TOL: f64 = 1e-9;

pub fn identity(n: usize) -> CMatrix {
    Array2::eye(n)
}

/// Conjugate transpose.
pub fn dagger(m: &CMatrix) -> CMatrix {
    m.t().mapv(|z| z.conj())
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0f64, |acc, z| acc.max(z.norm()))
}

pub fn fro_norm(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn trace(m: &CMatrix) -> C64 {
    m.diag().sum()
}

/// Largest deviation from Hermiticity, max_{ij} |M[i][j] - conj(M[j][i])|.
pub fn hermiticity_deviation(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut dev = 0.0f64;
    for i in 0..n {
        for j in i..n {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

/// Kronecker product; `result[(i·rb+k, j·cb+l)] = a[(i,j)]·b[(k,l)]`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    ndarray::linalg::kron(a, b)
}

/// Column-major vectorization: `vectorize(m)[j·d + i] = m[(i, j)]`.
pub fn vectorize(m: &CMatrix) -> CVector {
    let d = m.nrows();
    Array1::from_shape_fn(d * m.ncols(), |k| m[(k % d, k / d)])
}

/// Inverse of [`vectorize`] for a square `d × d` matrix.
pub fn unvectorize(v: &CVector, d: usize) -> CMatrix {
    Array2::from_shape_fn((d, d), |(i, j)| v[j * d + i])
}

/// Result of a Hermitian eigendecomposition: `m = V Λ V†` with real
/// eigenvalues sorted ascending and orthonormal eigenvector columns.
#[derive(Debug, Clone)]
pub struct EigenResult {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMatrix,
}

/// Cyclic Jacobi eigendecomposition of a Hermitian matrix.
///
/// The input must be Hermitian to `1e-10·max|m|`; sweeps stop once the
/// off-diagonal Frobenius norm drops below `1e-13·‖m‖`.
pub fn hermitian_eigen(m: &CMatrix) -> Result<EigenResult> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: m.ncols(),
        });
    }
    let scale = max_abs(m);
    let herm_tol = 1e-10 * scale.max(f64::MIN_POSITIVE);
    let dev = hermiticity_deviation(m);
    if dev > herm_tol {
        return Err(Error::NotHermitian {
            deviation: dev,
            tolerance: herm_tol,
        });
    }

    // Flat row-major working copies of the matrix and the eigenvector
    // accumulator.
    let mut a: Vec<C64> = m.iter().cloned().collect();
    let mut v: Vec<C64> = vec![C64::ZERO; n * n];
    for i in 0..n {
        v[i * n + i] = C64::ONE;
    }

    let fro = fro_norm(m);
    let threshold = JACOBI_OFFDIAG_TOL * fro;

    let mut converged = n <= 1 || offdiag_norm(&a, n) <= threshold;
    let mut sweeps = 0;
    while !converged && sweeps < JACOBI_MAX_SWEEPS {
        for p in 0..n - 1 {
            for q in p + 1..n {
                jacobi_rotate(&mut a, &mut v, n, p, q);
            }
        }
        sweeps += 1;
        converged = offdiag_norm(&a, n) <= threshold;
    }
    if !converged {
        return Err(Error::NoConvergence {
            sweeps,
            offdiag: offdiag_norm(&a, n),
        });
    }

    // Sort eigenvalues ascending, permuting eigenvector columns to match.
    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| a[i * n + i].re).collect();
    order.sort_by(|&i, &j| diag[i].total_cmp(&diag[j]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| diag[i]).collect();
    let eigenvectors = Array2::from_shape_fn((n, n), |(r, c)| v[r * n + order[c]]);

    Ok(EigenResult {
        eigenvalues,
        eigenvectors,
    })
}

fn offdiag_norm(a: &[C64], n: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[i * n + j].norm_sqr();
            }
        }
    }
    s.sqrt()
}

/// One complex Jacobi rotation zeroing the (p, q) entry of the Hermitian
/// matrix `a`, accumulated into `v`.
fn jacobi_rotate(a: &mut [C64], v: &mut [C64], n: usize, p: usize, q: usize) {
    let apq = a[p * n + q];
    let abs_apq = apq.norm();
    if abs_apq == 0.0 {
        return;
    }
    let app = a[p * n + p].re;
    let aqq = a[q * n + q].re;

    // Phase that makes the 2x2 block real symmetric, then a standard real
    // rotation angle.
    let w = apq / abs_apq; // e^{i·arg(apq)}
    let tau = (aqq - app) / (2.0 * abs_apq);
    let t = if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;

    // G = [[c, s·w̄? ]] — combined unitary: columns (p, q) mix with
    // G[p][p] = c, G[p][q] = s, G[q][p] = -s·w̄, G[q][q] = c·w̄.
    let gpp = C64::new(c, 0.0);
    let gpq = C64::new(s, 0.0);
    let gqp = -s * w.conj();
    let gqq = c * w.conj();

    // A <- G† A G. Columns first (A·G), then rows (G†·A).
    for r in 0..n {
        let arp = a[r * n + p];
        let arq = a[r * n + q];
        a[r * n + p] = arp * gpp + arq * gqp;
        a[r * n + q] = arp * gpq + arq * gqq;
    }
    for col in 0..n {
        let apc = a[p * n + col];
        let aqc = a[q * n + col];
        a[p * n + col] = gpp.conj() * apc + gqp.conj() * aqc;
        a[q * n + col] = gpq.conj() * apc + gqq.conj() * aqc;
    }
    // Clean up round-off on the entries the rotation is meant to fix.
    a[p * n + q] = C64::ZERO;
    a[q * n + p] = C64::ZERO;
    a[p * n + p] = C64::new(a[p * n + p].re, 0.0);
    a[q * n + q] = C64::new(a[q * n + q].re, 0.0);

    // V <- V G.
    for r in 0..n {
        let vrp = v[r * n + p];
        let vrq = v[r * n + q];
        v[r * n + p] = vrp * gpp + vrq * gqp;
        v[r * n + q] = vrp * gpq + vrq * gqq;
    }
}

/// Orthonormal basis of the numerical null space of a square matrix:
/// right singular vectors whose singular values are at most `tol·σ_max`;
/// every returned `v` satisfies `‖m v‖ ≤ 10·tol·σ_max·‖v‖`.
///
/// Computed from the Hermitian eigendecomposition of `m†m`. The Gram
/// eigenvalues of exact null vectors carry round-off of order ε·σ_max², so
/// candidates are taken with a noise-aware eigenvalue cutoff and then
/// accepted on their directly computed residual ‖m v‖. Returns an empty
/// list when the kernel is trivial.
pub fn kernel(m: &CMatrix, tol: f64) -> Result<Vec<CVector>> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: m.ncols(),
        });
    }
    let gram = dagger(m).dot(m);
    let eig = hermitian_eigen(&gram)?;
    let lambda_max = eig.eigenvalues.last().map(|&l| l.max(0.0)).unwrap_or(0.0);
    let sigma_max = lambda_max.sqrt();
    let candidate_cutoff = (10.0 * tol * sigma_max).powi(2).max(1e-12 * lambda_max);
    let accept = 10.0 * tol * sigma_max;
    let mut basis = Vec::new();
    for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda.max(0.0) <= candidate_cutoff {
            let v = eig.eigenvectors.column(k).to_owned();
            let residual = m.dot(&v).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if residual <= accept {
                basis.push(v);
            }
        }
    }
    Ok(basis)
}

/// LU factorization with partial pivoting of a square complex matrix.
#[derive(Debug, Clone)]
pub struct LuFactor {
    n: usize,
    lu: Vec<C64>,
    perm: Vec<usize>,
    /// Smallest |pivot| encountered; near-zero values flag rank deficiency.
    pub min_pivot: f64,
    pub max_pivot: f64,
}

impl LuFactor {
    pub fn new(m: &CMatrix) -> Result<Self> {
        let n = m.nrows();
        if m.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: m.ncols(),
            });
        }
        let mut lu: Vec<C64> = m.iter().cloned().collect();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut min_pivot = f64::INFINITY;
        let mut max_pivot = 0.0f64;

        for k in 0..n {
            let mut pivot_row = k;
            let mut pivot_val = lu[k * n + k].norm();
            for r in k + 1..n {
                let v = lu[r * n + k].norm();
                if v > pivot_val {
                    pivot_val = v;
                    pivot_row = r;
                }
            }
            if pivot_row != k {
                for c in 0..n {
                    lu.swap(k * n + c, pivot_row * n + c);
                }
                perm.swap(k, pivot_row);
            }
            min_pivot = min_pivot.min(pivot_val);
            max_pivot = max_pivot.max(pivot_val);
            if pivot_val == 0.0 {
                continue; // exactly singular; leave the zero column
            }
            let pivot = lu[k * n + k];
            for r in k + 1..n {
                let factor = lu[r * n + k] / pivot;
                lu[r * n + k] = factor;
                if factor != C64::ZERO {
                    for c in k + 1..n {
                        let l_kc = lu[k * n + c];
                        lu[r * n + c] -= factor * l_kc;
                    }
                }
            }
        }
        Ok(Self {
            n,
            lu,
            perm,
            min_pivot,
            max_pivot,
        })
    }

    /// Solve `A x = b` for the factored matrix.
    pub fn solve(&self, b: &[C64]) -> Vec<C64> {
        let n = self.n;
        assert_eq!(b.len(), n, "rhs length mismatch");
        let mut x: Vec<C64> = self.perm.iter().map(|&p| b[p]).collect();
        // Forward substitution (unit lower triangle).
        for i in 1..n {
            let mut acc = x[i];
            for j in 0..i {
                acc -= self.lu[i * n + j] * x[j];
            }
            x[i] = acc;
        }
        // Back substitution.
        for i in (0..n).rev() {
            let mut acc = x[i];
            for j in i + 1..n {
                acc -= self.lu[i * n + j] * x[j];
            }
            let diag = self.lu[i * n + i];
            x[i] = if diag == C64::ZERO { C64::ZERO } else { acc / diag };
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;
    use rand_chacha::ChaCha8Rng;
    use rand::{Rng, SeedableRng};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn random_hermitian(n: usize, rng: &mut ChaCha8Rng) -> CMatrix {
        let mut m = Array2::from_shape_fn((n, n), |_| {
            c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        let md = dagger(&m);
        m = (&m + &md) * c(0.5, 0.0);
        m
    }

    #[test]
    fn kron_identity_cases() {
        let i2 = identity(2);
        assert_eq!(kron(&i2, &i2), identity(4));

        let sz = array![[c(1.0, 0.0), C64::ZERO], [C64::ZERO, c(-1.0, 0.0)]];
        let k = kron(&sz, &i2);
        let diag: Vec<f64> = k.diag().iter().map(|z| z.re).collect();
        assert_eq!(diag, vec![1.0, 1.0, -1.0, -1.0]);
    }

    #[test]
    fn kron_ladder_product_maps_ge_to_eg() {
        // σ+ ⊗ σ- applied to |g e⟩ gives |e g⟩ (|e⟩ is index 0).
        let sp = array![[C64::ZERO, c(1.0, 0.0)], [C64::ZERO, C64::ZERO]];
        let sm = array![[C64::ZERO, C64::ZERO], [c(1.0, 0.0), C64::ZERO]];
        let op = kron(&sp, &sm);
        // |ge⟩ = index 2, |eg⟩ = index 1 in the 4-dim product basis.
        let mut expected = Array2::zeros((4, 4));
        expected[(1, 2)] = c(1.0, 0.0);
        assert_eq!(op, expected);
    }

    #[test]
    fn eigen_pauli_x_spectrum() {
        let sx = array![[C64::ZERO, c(1.0, 0.0)], [c(1.0, 0.0), C64::ZERO]];
        let eig = hermitian_eigen(&sx).unwrap();
        assert_abs_diff_eq!(eig.eigenvalues[0], -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(eig.eigenvalues[1], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn eigen_diagonal_is_sorted() {
        let m = array![
            [c(3.0, 0.0), C64::ZERO, C64::ZERO],
            [C64::ZERO, c(1.0, 0.0), C64::ZERO],
            [C64::ZERO, C64::ZERO, c(2.0, 0.0)]
        ];
        let eig = hermitian_eigen(&m).unwrap();
        assert_eq!(eig.eigenvalues, vec![1.0, 2.0, 3.0]);
        // Permuted standard basis vectors.
        assert_abs_diff_eq!(eig.eigenvectors[(1, 0)].norm(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(eig.eigenvectors[(2, 1)].norm(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(eig.eigenvectors[(0, 2)].norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn eigen_reconstructs_random_hermitian() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..5 {
            let m = random_hermitian(8, &mut rng);
            let eig = hermitian_eigen(&m).unwrap();
            let v = &eig.eigenvectors;
            let lam = Array2::from_diag(&Array1::from_iter(
                eig.eigenvalues.iter().map(|&l| c(l, 0.0)),
            ));
            let rebuilt = v.dot(&lam).dot(&dagger(v));
            let err = fro_norm(&(&rebuilt - &m));
            assert!(err <= 1e-10 * fro_norm(&m), "residual {err:.3e}");
            // Orthonormality.
            let vv = dagger(v).dot(v);
            let dev = fro_norm(&(&vv - &identity(8)));
            assert!(dev <= 1e-10, "V†V deviation {dev:.3e}");
        }
    }

    #[test]
    fn eigen_trace_identities() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in [2usize, 5, 9] {
            let m = random_hermitian(n, &mut rng);
            let eig = hermitian_eigen(&m).unwrap();
            let tol = 1e-10 * fro_norm(&m).max(1.0);
            let sum: f64 = eig.eigenvalues.iter().sum();
            assert_abs_diff_eq!(sum, trace(&m).re, epsilon = tol);
            let sum_sq: f64 = eig.eigenvalues.iter().map(|l| l * l).sum();
            assert_abs_diff_eq!(sum_sq, trace(&m.dot(&m)).re, epsilon = tol);
        }
    }

    #[test]
    fn eigen_rejects_non_hermitian() {
        let m = array![[c(1.0, 0.0), c(1.0, 0.0)], [C64::ZERO, c(1.0, 0.0)]];
        assert!(matches!(
            hermitian_eigen(&m),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn kernel_of_zero_and_identity() {
        let z: CMatrix = Array2::zeros((3, 3));
        assert_eq!(kernel(&z, KERNEL_DEFAULT_TOL).unwrap().len(), 3);
        assert!(kernel(&identity(4), KERNEL_DEFAULT_TOL).unwrap().is_empty());
    }

    #[test]
    fn kernel_of_decaying_qubit_liouvillian() {
        // Pure decay at rate Γ: L = Γ[ σ̄⁻⊗σ⁻ − ½ I⊗σ⁺σ⁻ − ½ (σ⁺σ⁻)ᵀ⊗I ]
        // in the column-major stacking convention. Kernel = vec(|g⟩⟨g|).
        let gamma = 0.37;
        let sp = array![[C64::ZERO, c(1.0, 0.0)], [C64::ZERO, C64::ZERO]];
        let sm = array![[C64::ZERO, C64::ZERO], [c(1.0, 0.0), C64::ZERO]];
        let num = sp.dot(&sm);
        let i2 = identity(2);
        let l = (kron(&sm.mapv(|z| z.conj()), &sm)
            - kron(&i2, &num) * c(0.5, 0.0)
            - kron(&num.t().to_owned(), &i2) * c(0.5, 0.0))
            * c(gamma, 0.0);
        let basis = kernel(&l, KERNEL_DEFAULT_TOL).unwrap();
        assert_eq!(basis.len(), 1);
        let v = &basis[0];
        // vec(|g⟩⟨g|): entry (1,1) -> flat index 3.
        let phase = v[3] / v[3].norm();
        for (k, expected) in [(0usize, 0.0), (1, 0.0), (2, 0.0), (3, 1.0)] {
            assert_abs_diff_eq!((v[k] / phase).re, expected, epsilon = 1e-10);
            assert_abs_diff_eq!((v[k] / phase).im, 0.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn kernel_rank_sums_on_rank_deficient_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for n in [4usize, 6] {
            for rank in 1..n {
                // Build an n×n matrix of known rank from random outer products.
                let mut m: CMatrix = Array2::zeros((n, n));
                for _ in 0..rank {
                    let u = Array1::from_shape_fn(n, |_| {
                        c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
                    });
                    let v = Array1::from_shape_fn(n, |_| {
                        c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
                    });
                    for i in 0..n {
                        for j in 0..n {
                            m[(i, j)] += u[i] * v[j].conj();
                        }
                    }
                }
                let null_dim = kernel(&m, KERNEL_DEFAULT_TOL).unwrap().len();
                assert_eq!(null_dim + rank, n, "rank {rank}, n {n}");
            }
        }
    }

    #[test]
    fn kernel_vectors_annihilate() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let n = 6;
        let mut m: CMatrix = Array2::zeros((n, n));
        for _ in 0..3 {
            let u = Array1::from_shape_fn(n, |_| {
                c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
            });
            let v = Array1::from_shape_fn(n, |_| {
                c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
            });
            for i in 0..n {
                for j in 0..n {
                    m[(i, j)] += u[i] * v[j].conj();
                }
            }
        }
        let tol = KERNEL_DEFAULT_TOL;
        let gram = dagger(&m).dot(&m);
        let sigma_max = hermitian_eigen(&gram)
            .unwrap()
            .eigenvalues
            .last()
            .unwrap()
            .max(0.0)
            .sqrt();
        for v in kernel(&m, tol).unwrap() {
            let mv = m.dot(&v);
            let norm_mv = mv.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            let norm_v = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            assert!(norm_mv <= 10.0 * tol * sigma_max * norm_v);
        }
    }

    #[test]
    fn lu_solves_random_system() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let n = 12;
        let m = Array2::from_shape_fn((n, n), |_| {
            c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        let b: Vec<C64> = (0..n)
            .map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let lu = LuFactor::new(&m).unwrap();
        let x = lu.solve(&b);
        for i in 0..n {
            let mut acc = C64::ZERO;
            for j in 0..n {
                acc += m[(i, j)] * x[j];
            }
            assert_abs_diff_eq!(acc.re, b[i].re, epsilon = 1e-9);
            assert_abs_diff_eq!(acc.im, b[i].im, epsilon = 1e-9);
        }
    }

    #[test]
    fn vectorize_roundtrip_and_stacking() {
        let m = array![
            [c(1.0, 0.0), c(3.0, 1.0)],
            [c(2.0, -1.0), c(4.0, 0.0)]
        ];
        let v = vectorize(&m);
        // Column-major: columns stacked in order.
        assert_eq!(v[0], m[(0, 0)]);
        assert_eq!(v[1], m[(1, 0)]);
        assert_eq!(v[2], m[(0, 1)]);
        assert_eq!(v[3], m[(1, 1)]);
        assert_eq!(unvectorize(&v, 2), m);
    }
}
