//! Block-ZXZ decomposition of an `m`-qubit unitary into multiplexers, and
//! the recursive synthesis pipeline built on it.

pub mod synth;
pub mod two_qubit;

use crate::circuit::Gate;
use crate::error::{Error, Result};
use crate::numerics::{c, cis, eig_unitary, frobenius, identity, is_unitary, polar_left, reunitarize, svd, ComplexMatrix, C64};

/// Blocks of `U = diag(A1, A2)·(H⊗I)·diag(I, B)·(H⊗I)·diag(I, C)`.
#[derive(Debug, Clone)]
pub struct BlockZxz {
    pub a1: ComplexMatrix,
    pub a2: ComplexMatrix,
    pub b: ComplexMatrix,
    pub c: ComplexMatrix,
}

impl BlockZxz {
    /// Dense product of the factors, with the Hadamards normalized.
    pub fn matrix(&self) -> ComplexMatrix {
        let h = self.a1.nrows();
        let id = identity(h);
        let hh = crate::numerics::kron(&crate::circuit::hadamard(), &id);
        crate::numerics::block_diag(&self.a1, &self.a2)
            * &hh
            * crate::numerics::block_diag(&id, &self.b)
            * &hh
            * crate::numerics::block_diag(&id, &self.c)
    }
}

fn quadrants(u: &ComplexMatrix) -> [ComplexMatrix; 4] {
    let h = u.nrows() / 2;
    [
        u.view((0, 0), (h, h)).into_owned(),
        u.view((0, h), (h, h)).into_owned(),
        u.view((h, 0), (h, h)).into_owned(),
        u.view((h, h), (h, h)).into_owned(),
    ]
}

/// Splits a `2^m × 2^m` unitary (`m ≥ 1`) into block-ZXZ factors.
pub fn block_zxz_split(u: &ComplexMatrix) -> Result<BlockZxz> {
    let dim = u.nrows();
    if dim < 2 || !dim.is_power_of_two() || u.ncols() != dim {
        return Err(Error::precondition("block_zxz_split", format!("expects a square power-of-two matrix, got {}x{}", dim, u.ncols())));
    }
    let [x, y, z, w] = quadrants(u);
    let (vx, _, wx) = svd(&x)?;
    let (_, q) = polar_left(&(vx.adjoint() * &y))?;
    let cmat = wx * q * c(0.0, -1.0);
    let cd = cmat.adjoint();
    let a1 = &x + &y * &cd;
    let a2 = &z + &w * &cd;
    let b = a1.adjoint() * &x * c(2.0, 0.0) - identity(dim / 2);
    let out = BlockZxz { a1: reunitarize(&a1), a2: reunitarize(&a2), b: reunitarize(&b), c: reunitarize(&cmat) };
    let resid = frobenius(&(out.matrix() - u));
    if resid > 1e-9 * dim as f64 {
        return Err(Error::numerical("block_zxz_split", format!("reconstruction residual {resid:e} at dimension {dim}")));
    }
    Ok(out)
}

/// `diag(u1, u2)`, a unitary controlled by its top line `select` (a
/// position in the placement).
#[derive(Debug, Clone)]
pub struct Multiplexer {
    pub u1: ComplexMatrix,
    pub u2: ComplexMatrix,
    pub select: usize,
}

impl Multiplexer {
    pub fn new(u1: ComplexMatrix, u2: ComplexMatrix, select: usize) -> Result<Self> {
        if u1.shape() != u2.shape() || !u1.is_square() {
            return Err(Error::precondition("multiplexer", "blocks must be square and of equal size"));
        }
        if !is_unitary(&u1, 1e-8) || !is_unitary(&u2, 1e-8) {
            return Err(Error::precondition("multiplexer", "blocks must be unitary"));
        }
        Ok(Multiplexer { u1, u2, select })
    }

    pub fn matrix(&self) -> ComplexMatrix {
        crate::numerics::block_diag(&self.u1, &self.u2)
    }
}

/// `diag(U1, U2) = (I⊗V)·UC(α)·(I⊗W)`, where the UC gate is a multiplexed
/// `Rz` on the select (top) line controlled by the remaining lines.
#[derive(Debug, Clone)]
pub struct Demux {
    pub v: ComplexMatrix,
    pub w: ComplexMatrix,
    pub alpha: Vec<f64>,
}

/// Splits a multiplexer into `V`, the UC angles and `W`.
pub fn demultiplex(mux: &Multiplexer) -> Result<Demux> {
    let (u1, u2) = (&mux.u1, &mux.u2);
    let (lambda, v) = eig_unitary(&(u1 * u2.adjoint()))?;
    let d: Vec<C64> = lambda.iter().map(|l| cis(l.arg() / 2.0)).collect();
    let alpha = lambda.iter().map(|l| -l.arg()).collect();
    let mut w = v.adjoint() * u2;
    for (r, dr) in d.iter().enumerate() {
        for col in 0..w.ncols() {
            w[(r, col)] *= dr;
        }
    }
    let out = Demux { v: reunitarize(&v), w: reunitarize(&w), alpha };
    let dim = u1.nrows();
    let d1 = crate::numerics::diag(&d);
    let r1 = frobenius(&(&out.v * &d1 * &out.w - u1));
    let r2 = frobenius(&(&out.v * d1.adjoint() * &out.w - u2));
    if r1.max(r2) > 1e-9 * dim as f64 {
        return Err(Error::numerical("demultiplex", format!("reconstruction residual {:e} at dimension {dim}", r1.max(r2))));
    }
    Ok(out)
}

/// `Z` applied to the given lines of a `2^k`-dimensional space (line 0 is
/// the most significant bit), as a sign vector.
pub fn z_signs(k: usize, lines: &[usize]) -> Vec<f64> {
    let mask = lines.iter().fold(0usize, |m, &l| m | (1 << (k - 1 - l)));
    (0..1usize << k).map(|j| if (j & mask).count_ones() % 2 == 1 { -1.0 } else { 1.0 }).collect()
}

/// The central multiplexer `diag(W_A·V_C, Z_A·W_A·B·V_C·Z_C)`, where `Z_A`
/// and `Z_C` are `Z` on `lines_a` and `lines_c` of the lower register.
pub fn merge_central(
    v_c: &ComplexMatrix,
    b: &ComplexMatrix,
    w_a: &ComplexMatrix,
    lines_c: &[usize],
    lines_a: &[usize],
) -> (ComplexMatrix, ComplexMatrix) {
    let k = v_c.nrows().trailing_zeros() as usize;
    let top = w_a * v_c;
    let mut bottom = w_a * b * v_c;
    let za = z_signs(k, lines_a);
    let zc = z_signs(k, lines_c);
    for r in 0..bottom.nrows() {
        for col in 0..bottom.ncols() {
            bottom[(r, col)] *= za[r] * zc[col];
        }
    }
    (top, bottom)
}

/// Rewrites `H(t)` followed by `CNOT(c→t)` as `CZ(c,t)` followed by `H(t)`,
/// and `CNOT(c→t)` followed by `H(t)` as `H(t)` followed by `CZ(c,t)`.
pub fn hadamard_cz_migrate(fragment: &[Gate]) -> Vec<Gate> {
    let mut out = Vec::with_capacity(fragment.len());
    let mut i = 0;
    while i < fragment.len() {
        match (fragment[i], fragment.get(i + 1).copied()) {
            (Gate::H(t), Some(Gate::Cnot(ctl, tg))) if tg == t => {
                out.extend([Gate::Cz(ctl, t), Gate::H(t)]);
                i += 2;
            }
            (Gate::Cnot(ctl, tg), Some(Gate::H(t))) if tg == t => {
                out.extend([Gate::H(t), Gate::Cz(ctl, t)]);
                i += 2;
            }
            (g, _) => {
                out.push(g);
                i += 1;
            }
        }
    }
    out
}
