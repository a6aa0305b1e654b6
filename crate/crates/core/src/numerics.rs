//! Dense complex linear algebra used by the decomposition.
//!
//! Everything operates on [`ComplexMatrix`], a square `nalgebra` matrix of
//! `Complex<f64>`. The factorizations are thin wrappers that add the
//! reconstruction checks, sorting conventions and unitarity guarantees the
//! synthesis relies on.

use nalgebra::{Complex, DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type ComplexMatrix = DMatrix<C64>;

/// Unitarity tolerance per unit of dimension.
pub const UNITARY_TOL: f64 = 1e-10;
/// Reconstruction tolerance per unit of dimension.
pub const RECON_TOL: f64 = 1e-9;

const SVD_MAX_ITER: usize = 10_000;
const SCHUR_MAX_ITER: usize = 10_000;

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub fn cis(theta: f64) -> C64 {
    C64::from_polar(1.0, theta)
}

pub fn identity(dim: usize) -> ComplexMatrix {
    ComplexMatrix::identity(dim, dim)
}

pub fn diag(entries: &[C64]) -> ComplexMatrix {
    ComplexMatrix::from_diagonal(&DVector::from_column_slice(entries))
}

pub fn from_rows(rows: &[&[C64]]) -> ComplexMatrix {
    let n = rows.len();
    ComplexMatrix::from_fn(n, n, |i, j| rows[i][j])
}

/// Kronecker product with `a` acting on the more significant qubits.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

/// Block-diagonal matrix `diag(a, b)`.
pub fn block_diag(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (na, nb) = (a.nrows(), b.nrows());
    let mut out = ComplexMatrix::zeros(na + nb, na + nb);
    out.view_mut((0, 0), (na, na)).copy_from(a);
    out.view_mut((na, na), (nb, nb)).copy_from(b);
    out
}

pub fn frobenius(m: &ComplexMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `‖M†M − I‖_F`.
pub fn unitarity_defect(m: &ComplexMatrix) -> f64 {
    frobenius(&(m.adjoint() * m - identity(m.nrows())))
}

pub fn is_unitary(m: &ComplexMatrix, tol_per_dim: f64) -> bool {
    m.is_square() && unitarity_defect(m) <= tol_per_dim * m.nrows() as f64
}

/// Frobenius distance between `a` and `b` after choosing the global phase of
/// `b` that minimizes it.
pub fn phase_aligned_residual(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    let overlap: C64 = b.iter().zip(a.iter()).map(|(x, y)| x.conj() * y).sum();
    let phase = if overlap.norm() > 0.0 { overlap / overlap.norm() } else { c(1.0, 0.0) };
    frobenius(&(a - b * phase))
}

/// Seeds of the fixed rotations used when a factorization has to be redone.
const RETRY_SEEDS: [u64; 4] = [0x5eed_0001, 0x5eed_0002, 0x5eed_0003, 0x5eed_0004];

/// `(left, singular, right)`.
pub type Svd = (ComplexMatrix, Vec<f64>, ComplexMatrix);

/// Singular value decomposition `m = left · diag(singular) · right†`, with
/// singular values sorted in descending order.
///
/// The solver occasionally returns an inaccurate factorization without
/// reporting it; the result is therefore checked, and on failure the SVD of
/// `P·m` for a fixed random unitary `P` is used instead.
pub fn svd(m: &ComplexMatrix) -> Result<Svd> {
    if !m.is_square() {
        return Err(Error::precondition("svd", "matrix is not square"));
    }
    let n = m.nrows();
    let tol = 1e-12 * n as f64 * frobenius(m).max(1.0);
    let mut best: Option<(f64, Svd)> = None;
    for attempt in 0..=RETRY_SEEDS.len() {
        let rot = (attempt > 0).then(|| haar_unitary_dim(n, RETRY_SEEDS[attempt - 1]));
        let input = rot.as_ref().map_or_else(|| m.clone(), |p| p * m);
        let Some((mut left, singular, right)) = svd_once(input) else { continue };
        if let Some(p) = &rot {
            left = p.adjoint() * left;
        }
        let sig = diag(&singular.iter().map(|&x| c(x, 0.0)).collect::<Vec<_>>());
        let resid = frobenius(&(&left * sig * right.adjoint() - m));
        let defect = unitarity_defect(&left).max(unitarity_defect(&right));
        let err = resid.max(defect);
        if err <= tol {
            return Ok((left, singular, right));
        }
        if best.as_ref().is_none_or(|(e, _)| err < *e) {
            best = Some((err, (left, singular, right)));
        }
    }
    match best {
        Some((err, out)) if err <= 1e-9 * n as f64 => Ok(out),
        Some((err, _)) => Err(Error::numerical("svd", format!("reconstruction residual {err:e}"))),
        None => Err(Error::numerical("svd", "no convergence within the iteration cap")),
    }
}

fn svd_once(m: ComplexMatrix) -> Option<(ComplexMatrix, Vec<f64>, ComplexMatrix)> {
    let n = m.nrows();
    let dec = m.try_svd(true, true, f64::EPSILON, SVD_MAX_ITER)?;
    let (u, v_t, s) = (dec.u?, dec.v_t?, dec.singular_values);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| s[b].total_cmp(&s[a]).then(a.cmp(&b)));
    let left = ComplexMatrix::from_fn(n, n, |i, j| u[(i, order[j])]);
    let right = ComplexMatrix::from_fn(n, n, |i, j| v_t[(order[j], i)].conj());
    let singular = order.iter().map(|&k| s[k].max(0.0)).collect();
    Some((left, singular, right))
}

/// Eigendecomposition of a unitary matrix, `m = vecs · diag(vals) · vecs†`.
///
/// Eigenpairs are ordered by eigenvalue phase in `(−π, π]`, ties kept in
/// the order the solver produced them.
pub fn eig_unitary(m: &ComplexMatrix) -> Result<(Vec<C64>, ComplexMatrix)> {
    let n = m.nrows();
    if !m.is_square() || unitarity_defect(m) > 1e-8 * n as f64 {
        return Err(Error::precondition("eig_unitary", "input is not unitary within 1e-8"));
    }
    let tol = 1e-12 * n as f64;
    let mut best: Option<(f64, ComplexMatrix)> = None;
    for attempt in 0..=RETRY_SEEDS.len() {
        // Similarity by a fixed random unitary when the direct solve is poor.
        let rot = (attempt > 0).then(|| haar_unitary_dim(n, RETRY_SEEDS[attempt - 1]));
        let input = rot.as_ref().map_or_else(|| m.clone(), |p| p * m * p.adjoint());
        let Some(schur) = input.try_schur(f64::EPSILON, SCHUR_MAX_ITER) else { continue };
        // Normal input makes T diagonal; QR re-orthonormalizes the Schur vectors.
        let mut q = schur.unpack().0.qr().q();
        if let Some(p) = &rot {
            q = p.adjoint() * q;
        }
        let err = off_diagonal_norm(&(q.adjoint() * m * &q));
        if err <= tol {
            best = Some((err, q));
            break;
        }
        if best.as_ref().is_none_or(|(e, _)| err < *e) {
            best = Some((err, q));
        }
    }
    let (_, q) = best.ok_or_else(|| Error::numerical("eig_unitary", "Schur iteration did not converge"))?;
    let vals: Vec<C64> = (0..n)
        .map(|k| {
            let col = q.column(k);
            let lam = (col.adjoint() * m * col)[(0, 0)];
            lam / lam.norm()
        })
        .collect();

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| vals[a].arg().total_cmp(&vals[b].arg()).then(a.cmp(&b)));
    let vecs = ComplexMatrix::from_fn(n, n, |i, j| q[(i, order[j])]);
    let vals: Vec<C64> = order.iter().map(|&k| vals[k]).collect();

    let recon = &vecs * diag(&vals) * vecs.adjoint();
    let resid = frobenius(&(recon - m));
    if resid > RECON_TOL * n as f64 {
        return Err(Error::numerical("eig_unitary", format!("reconstruction residual {resid:e}")));
    }
    Ok((vals, vecs))
}

fn off_diagonal_norm(t: &ComplexMatrix) -> f64 {
    let mut acc = 0.0;
    for j in 0..t.ncols() {
        for i in 0..t.nrows() {
            if i != j {
                acc += t[(i, j)].norm_sqr();
            }
        }
    }
    acc.sqrt()
}

/// One Newton–Schulz step towards the nearest unitary, `m·(3I − m†m)/2`.
/// Squares the unitarity defect, so it is meant for nearly unitary input.
pub fn reunitarize(m: &ComplexMatrix) -> ComplexMatrix {
    let n = m.nrows();
    let g = m.adjoint() * m;
    m * (identity(n) * c(3.0, 0.0) - g) * c(0.5, 0.0)
}

/// Left polar decomposition `m = psd · uni`.
///
/// The unitary factor is assembled from the SVD, so it stays exactly
/// unitary even when `m` is singular.
pub fn polar_left(m: &ComplexMatrix) -> Result<(ComplexMatrix, ComplexMatrix)> {
    let (u, s, v) = svd(m)?;
    let sig = diag(&s.iter().map(|&x| c(x, 0.0)).collect::<Vec<_>>());
    let psd = &u * sig * u.adjoint();
    let psd = (&psd + psd.adjoint()) * c(0.5, 0.0);
    Ok((psd, u * v.adjoint()))
}

/// Haar-distributed random unitary on `n_qubits`, reproducible for a seed.
pub fn haar_random_unitary(n_qubits: usize, seed: u64) -> Result<ComplexMatrix> {
    if !(1..=14).contains(&n_qubits) {
        return Err(Error::Argument(format!("n_qubits must be in 1..=14, got {n_qubits}")));
    }
    Ok(haar_unitary_dim(1usize << n_qubits, seed))
}

fn haar_unitary_dim(dim: usize, seed: u64) -> ComplexMatrix {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let mut g = ComplexMatrix::zeros(dim, dim);
    for j in 0..dim {
        for i in 0..dim {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            g[(i, j)] = c(re * scale, im * scale);
        }
    }
    let qr = g.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..dim {
        let rjj = r[(j, j)];
        let ph = if rjj.norm() > 0.0 { rjj / rjj.norm() } else { c(1.0, 0.0) };
        for i in 0..dim {
            q[(i, j)] *= ph;
        }
    }
    q
}

/// On-disk unitary: `{"n_qubits": n, "matrix": [[[re, im], ...], ...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UnitaryFile {
    pub n_qubits: usize,
    pub matrix: Vec<Vec<[f64; 2]>>,
}

impl UnitaryFile {
    pub fn from_matrix(m: &ComplexMatrix) -> Result<Self> {
        let dim = m.nrows();
        if !dim.is_power_of_two() || !m.is_square() {
            return Err(Error::Argument(format!("dimension {dim} is not a power of two")));
        }
        let matrix = (0..dim)
            .map(|i| (0..dim).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
            .collect();
        Ok(UnitaryFile { n_qubits: dim.trailing_zeros() as usize, matrix })
    }

    pub fn to_matrix(&self) -> Result<ComplexMatrix> {
        let dim = 1usize
            .checked_shl(self.n_qubits as u32)
            .filter(|_| self.n_qubits <= 14)
            .ok_or_else(|| Error::Format(format!("n_qubits {} out of range", self.n_qubits)))?;
        if self.matrix.len() != dim || self.matrix.iter().any(|r| r.len() != dim) {
            return Err(Error::Format(format!("matrix must be {dim}x{dim} for n_qubits {}", self.n_qubits)));
        }
        Ok(ComplexMatrix::from_fn(dim, dim, |i, j| {
            let [re, im] = self.matrix[i][j];
            c(re, im)
        }))
    }
}

pub fn read_unitary_json(text: &str) -> Result<ComplexMatrix> {
    let f: UnitaryFile = serde_json::from_str(text)
        .map_err(|e| Error::Format(format!("unitary JSON, line {}: {e}", e.line())))?;
    f.to_matrix()
}

pub fn write_unitary_json(m: &ComplexMatrix) -> Result<String> {
    let f = UnitaryFile::from_matrix(m)?;
    serde_json::to_string(&f).map_err(|e| Error::Format(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: &ComplexMatrix, b: &ComplexMatrix, tol: f64) {
        let r = frobenius(&(a - b));
        assert!(r <= tol, "residual {r:e} > {tol:e}");
    }

    fn svd_recon(m: &ComplexMatrix) -> ComplexMatrix {
        let (u, s, v) = svd(m).unwrap();
        let sig = diag(&s.iter().map(|&x| c(x, 0.0)).collect::<Vec<_>>());
        u * sig * v.adjoint()
    }

    #[test]
    fn svd_of_identity_and_diagonal() {
        let (_, s, _) = svd(&identity(2)).unwrap();
        assert_eq!(s, vec![1.0, 1.0]);
        let m = diag(&[c(0.0, 0.0), c(2.0, 0.0)]);
        let (_, s, _) = svd(&m).unwrap();
        assert!((s[0] - 2.0).abs() < 1e-14 && s[1].abs() < 1e-14);
        assert_close(&svd_recon(&m), &m, 1e-12);
    }

    #[test]
    fn svd_of_unitary_has_unit_singular_values() {
        let u = haar_random_unitary(2, 11).unwrap();
        let (l, s, r) = svd(&u).unwrap();
        assert!(s.iter().all(|x| (x - 1.0).abs() < 1e-10));
        assert!(is_unitary(&l, UNITARY_TOL) && is_unitary(&r, UNITARY_TOL));
        assert_close(&svd_recon(&u), &u, 1e-10 * 4.0);
    }

    #[test]
    fn svd_rejects_non_square() {
        let m = ComplexMatrix::zeros(2, 3);
        assert!(matches!(svd(&m), Err(Error::Precondition { .. })));
    }

    #[test]
    fn eig_of_simple_inputs() {
        let (vals, _) = eig_unitary(&identity(4)).unwrap();
        assert!(vals.iter().all(|v| (v - c(1.0, 0.0)).norm() < 1e-12));
        let (vals, vecs) = eig_unitary(&diag(&[c(0.0, 1.0), c(0.0, -1.0)])).unwrap();
        assert!((vals[0] - c(0.0, -1.0)).norm() < 1e-12);
        assert!((vals[1] - c(0.0, 1.0)).norm() < 1e-12);
        assert!(is_unitary(&vecs, UNITARY_TOL));
    }

    #[test]
    fn eig_reconstructs_random_unitary() {
        for seed in 0..5 {
            let u = haar_random_unitary(3, seed).unwrap();
            let (vals, vecs) = eig_unitary(&u).unwrap();
            assert!(vals.iter().all(|v| (v.norm() - 1.0).abs() < 1e-9));
            assert_close(&(&vecs * diag(&vals) * vecs.adjoint()), &u, 1e-9 * 8.0);
        }
    }

    #[test]
    fn eig_handles_degenerate_spectrum() {
        let v = haar_random_unitary(3, 5).unwrap();
        let d = diag(&[c(1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(-1.0, 0.0), c(-1.0, 0.0), cis(0.3), cis(0.3), cis(0.3)]);
        let m = &v * d * v.adjoint();
        let (vals, vecs) = eig_unitary(&m).unwrap();
        assert!(is_unitary(&vecs, 1e-9));
        assert_close(&(&vecs * diag(&vals) * vecs.adjoint()), &m, 1e-9 * 8.0);
    }

    #[test]
    fn eig_rejects_non_unitary() {
        let m = diag(&[c(2.0, 0.0), c(1.0, 0.0)]);
        assert!(matches!(eig_unitary(&m), Err(Error::Precondition { .. })));
    }

    #[test]
    fn polar_simple_cases() {
        let (p, u) = polar_left(&identity(2)).unwrap();
        assert_close(&p, &identity(2), 1e-12);
        assert_close(&u, &identity(2), 1e-12);
        let m = diag(&[c(2.0, 0.0), c(3.0, 0.0)]);
        let (p, u) = polar_left(&m).unwrap();
        assert_close(&p, &m, 1e-12);
        assert_close(&u, &identity(2), 1e-12);
    }

    #[test]
    fn polar_of_singular_matrix_keeps_unitary_factor() {
        let mut m = haar_random_unitary(2, 3).unwrap();
        m.row_mut(2).fill(c(0.0, 0.0));
        let (p, u) = polar_left(&m).unwrap();
        assert!(is_unitary(&u, UNITARY_TOL));
        assert_close(&(&p * &u), &m, 1e-9 * 4.0);
        assert_close(&p, &p.adjoint(), 1e-12);
    }

    #[test]
    fn haar_is_deterministic_unitary_and_seed_sensitive() {
        let a = haar_random_unitary(1, 7).unwrap();
        assert_eq!(a, haar_random_unitary(1, 7).unwrap());
        let u = haar_random_unitary(3, 99).unwrap();
        assert!(unitarity_defect(&u) <= 1e-10 * 8.0);
        assert_ne!(haar_random_unitary(2, 1).unwrap(), haar_random_unitary(2, 2).unwrap());
        assert!(haar_random_unitary(0, 1).is_err());
        assert!(haar_random_unitary(15, 1).is_err());
    }

    #[test]
    fn unitary_json_round_trip() {
        let u = haar_random_unitary(2, 4).unwrap();
        let text = write_unitary_json(&u).unwrap();
        assert_eq!(read_unitary_json(&text).unwrap(), u);
        assert!(read_unitary_json("{\"n_qubits\": 1, \"matrix\": [[[1,0]]]}").is_err());
        assert!(read_unitary_json("not json").is_err());
    }
}
