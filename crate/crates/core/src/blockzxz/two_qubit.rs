//! One- and two-qubit decompositions: ZYZ angles, the canonical (KAK)
//! parameterization, the 3-CNOT exact form and the 2-CNOT form up to a
//! diagonal.
//!
//! Circuits returned here act on local qubits 0 (most significant) and 1.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
use std::sync::OnceLock;

use nalgebra::{DMatrix, Matrix4, SymmetricEigen, Vector4};

use crate::circuit::{circuit_to_unitary, rx, rz, Circuit, Gate};
use crate::error::{Error, Result};
use crate::numerics::{c, cis, diag, frobenius, identity, kron, phase_aligned_residual, ComplexMatrix, C64};

/// `(α, β, γ, φ)` with `e^{iφ}·RZ(α)·RY(β)·RZ(γ) = u`, `β ∈ [0, π]`.
pub fn zyz(u: &ComplexMatrix) -> (f64, f64, f64, f64) {
    let det = u[(0, 0)] * u[(1, 1)] - u[(0, 1)] * u[(1, 0)];
    let phase = det.arg() / 2.0;
    let v = u * cis(-phase);
    let (v00, v10, v11) = (v[(0, 0)], v[(1, 0)], v[(1, 1)]);
    let beta = 2.0 * v10.norm().atan2(v00.norm());
    let sum = 2.0 * v11.arg();
    let dif = 2.0 * v10.arg();
    let (alpha, gamma) = if v10.norm() == 0.0 {
        (sum, 0.0)
    } else if v11.norm() == 0.0 {
        (dif, 0.0)
    } else {
        ((sum + dif) / 2.0, (sum - dif) / 2.0)
    };
    (alpha, beta, gamma, phase)
}

/// A U1Q gate on `q` implementing the 2×2 unitary `u`.
pub fn u1q_gate(q: usize, u: &ComplexMatrix) -> Gate {
    let (alpha, beta, gamma, phase) = zyz(u);
    Gate::U1q { q, alpha, beta, gamma, phase }
}

fn magic() -> &'static ComplexMatrix {
    static M: OnceLock<ComplexMatrix> = OnceLock::new();
    M.get_or_init(|| {
        let (o, z, i) = (c(1.0, 0.0), c(0.0, 0.0), c(0.0, 1.0));
        crate::numerics::from_rows(&[&[o, z, z, i], &[z, i, o, z], &[z, i, -o, z], &[o, z, z, -i]])
            * c(std::f64::consts::FRAC_1_SQRT_2, 0.0)
    })
}

fn paulis() -> [ComplexMatrix; 3] {
    let (o, z, i) = (c(1.0, 0.0), c(0.0, 0.0), c(0.0, 1.0));
    let x = crate::numerics::from_rows(&[&[z, o], &[o, z]]);
    let y = crate::numerics::from_rows(&[&[z, -i], &[i, z]]);
    let zz = crate::numerics::from_rows(&[&[o, z], &[z, -o]]);
    [x, y, zz]
}

/// Diagonals of `M†·(P⊗P)·M` for `P = X, Y, Z`, with the all-ones column
/// prepended, as the rows of the linear system for the canonical angles.
fn angle_system() -> &'static Matrix4<f64> {
    static A: OnceLock<Matrix4<f64>> = OnceLock::new();
    A.get_or_init(|| {
        let m = magic();
        let p = paulis();
        let d: Vec<ComplexMatrix> = p.iter().map(|q| m.adjoint() * kron(q, q) * m).collect();
        Matrix4::from_fn(|k, j| if j == 0 { 1.0 } else { d[j - 1][(k, k)].re })
    })
}

/// `exp(i(a·XX + b·YY + c·ZZ))`.
pub fn canonical_gate(a: f64, b: f64, cc: f64) -> ComplexMatrix {
    let sys = angle_system();
    let m = magic();
    let d: Vec<C64> = (0..4).map(|k| cis(a * sys[(k, 1)] + b * sys[(k, 2)] + cc * sys[(k, 3)])).collect();
    m * diag(&d) * m.adjoint()
}

/// Splits a 4×4 tensor product into its 2×2 factors.
fn kron_factor(k: &ComplexMatrix) -> Result<(ComplexMatrix, ComplexMatrix)> {
    let block = |p: usize, q: usize| k.view((2 * p, 2 * q), (2, 2)).into_owned();
    let (mut bp, mut bq, mut best) = (0, 0, -1.0);
    for p in 0..2 {
        for q in 0..2 {
            let n = frobenius(&block(p, q));
            if n > best {
                (bp, bq, best) = (p, q, n);
            }
        }
    }
    let blk = block(bp, bq);
    let det = blk[(0, 0)] * blk[(1, 1)] - blk[(0, 1)] * blk[(1, 0)];
    let b = blk / det.sqrt();
    let a = ComplexMatrix::from_fn(2, 2, |r, s| (b.adjoint() * block(r, s)).trace() / c(2.0, 0.0));
    let resid = frobenius(&(kron(&a, &b) - k));
    if resid > 1e-9 {
        return Err(Error::numerical("kron_factor", format!("not a tensor product, residual {resid:e}")));
    }
    Ok((a, b))
}

/// `u = e^{iφ}·(a1⊗b1)·exp(i(a·XX + b·YY + c·ZZ))·(a2⊗b2)`.
#[derive(Debug, Clone)]
pub struct Kak {
    pub phase: f64,
    pub a1: ComplexMatrix,
    pub b1: ComplexMatrix,
    pub coords: [f64; 3],
    pub a2: ComplexMatrix,
    pub b2: ComplexMatrix,
}

impl Kak {
    pub fn matrix(&self) -> ComplexMatrix {
        let [a, b, cc] = self.coords;
        kron(&self.a1, &self.b1) * canonical_gate(a, b, cc) * kron(&self.a2, &self.b2) * cis(self.phase)
    }
}

/// Canonical decomposition through the magic basis. Coordinates are not
/// reduced to a Weyl chamber.
pub fn kak(u: &ComplexMatrix) -> Result<Kak> {
    if u.shape() != (4, 4) {
        return Err(Error::precondition("kak", "expects a 4x4 matrix"));
    }
    let m = magic();
    let up = m.adjoint() * u * m;
    let s = up.transpose() * &up;
    let re = DMatrix::from_fn(4, 4, |i, j| s[(i, j)].re);
    let im = DMatrix::from_fn(4, 4, |i, j| s[(i, j)].im);

    // Real and imaginary parts commute; a generic combination separates
    // all eigenspaces of both.
    const MIX: [f64; 5] = [0.618_034, 1.379_1, -0.353_7, 2.467_3, 0.123_457];
    let mut best: Option<(f64, DMatrix<f64>, ComplexMatrix)> = None;
    for &r in &MIX {
        let comb = &re + &im * r;
        let comb = (&comb + comb.transpose()) * 0.5;
        let p = SymmetricEigen::new(comb).eigenvectors;
        let pc = p.map(|x| c(x, 0.0));
        let dd = pc.transpose() * &s * &pc;
        let off = (0..4).flat_map(|i| (0..4).map(move |j| (i, j))).filter(|(i, j)| i != j).map(|(i, j)| dd[(i, j)].norm_sqr()).sum::<f64>().sqrt();
        if best.as_ref().is_none_or(|(b, _, _)| off < *b) {
            best = Some((off, p, dd));
        }
        if off < 1e-12 {
            break;
        }
    }
    let (off, p, dd) = best.expect("at least one mixing coefficient");
    if off > 1e-7 {
        return Err(Error::numerical("kak", format!("could not diagonalize the symmetric factor, off-diagonal {off:e}")));
    }

    let mut o2 = p.transpose();
    if o2.determinant() < 0.0 {
        o2.row_mut(0).neg_mut();
    }
    let mut dvals: Vec<C64> = (0..4).map(|k| dd[(k, k)].sqrt()).collect();
    let o2c = o2.map(|x| c(x, 0.0));
    let o1c = |dv: &[C64]| &up * o2c.transpose() * diag(&dv.iter().map(|z| z.inv()).collect::<Vec<_>>());
    let mut o1 = o1c(&dvals);
    let det_o1: f64 = DMatrix::from_fn(4, 4, |i, j| o1[(i, j)].re).determinant();
    if det_o1 < 0.0 {
        dvals[0] = -dvals[0];
        o1 = o1c(&dvals);
    }
    let imag: f64 = o1.iter().map(|z| z.im * z.im).sum::<f64>().sqrt();
    if imag > 1e-8 {
        return Err(Error::numerical("kak", format!("orthogonal factor has imaginary part {imag:e}")));
    }
    let o1 = o1.map(|z| c(z.re, 0.0));

    let k1 = m * o1 * m.adjoint();
    let k2 = m * o2c * m.adjoint();
    let (a1, b1) = kron_factor(&k1)?;
    let (a2, b2) = kron_factor(&k2)?;

    let rhs = Vector4::from_fn(|k, _| dvals[k].arg());
    let sol = angle_system()
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::numerical("kak", "singular angle system"))?;
    let out = Kak { phase: sol[0], a1, b1, coords: [sol[1], sol[2], sol[3]], a2, b2 };
    let resid = frobenius(&(out.matrix() - u));
    if resid > 1e-9 {
        return Err(Error::numerical("kak", format!("reconstruction residual {resid:e}")));
    }
    Ok(out)
}

fn s_gate() -> ComplexMatrix {
    diag(&[c(1.0, 0.0), c(0.0, 1.0)])
}

fn check(circ: &Circuit, u: &ComplexMatrix, op: &'static str) -> Result<()> {
    let got = circuit_to_unitary(circ, None)?;
    let resid = frobenius(&(got - u));
    if resid > 1e-9 {
        return Err(Error::numerical(op, format!("residual {resid:e}")));
    }
    Ok(())
}

/// Exact decomposition with three CNOTs:
/// `(1q⊗1q)·CNOT·(Rz⊗Ry)·CNOT·(I⊗Ry)·CNOT·(1q⊗1q)`.
pub fn two_qubit_exact(u: &ComplexMatrix) -> Result<Circuit> {
    let k = kak(u)?;
    let [a, b, cc] = k.coords;
    // exp(i(a·XX + b·YY + c·ZZ)) = e^{iπ/4}·(S†⊗I)·core(p, q, r)·(I⊗S).
    let p = FRAC_PI_2 - 2.0 * cc;
    let q = FRAC_PI_2 - 2.0 * a;
    let r = 2.0 * b - FRAC_PI_2;
    let s = s_gate();
    let mut circ = Circuit::new(2);
    circ.push(u1q_gate(0, &k.a2));
    circ.push(u1q_gate(1, &(&s * &k.b2)));
    circ.extend([Gate::Cnot(1, 0), Gate::Rz(0, p), Gate::Ry(1, q), Gate::Cnot(0, 1), Gate::Ry(1, r), Gate::Cnot(1, 0)]);
    circ.push(u1q_gate(0, &(&k.a1 * s.adjoint())));
    circ.push(u1q_gate(1, &k.b1));
    circ.global_phase = k.phase + FRAC_PI_4;
    check(&circ, u, "two_qubit_exact")?;
    Ok(circ)
}

/// Diagonal `Δ` that makes `Δ·u` realizable with two CNOTs.
fn real_trace_diagonal(u: &ComplexMatrix) -> [C64; 4] {
    let det = u.determinant();
    let m = u * cis(-det.arg() / 4.0);
    let e = |i: usize, j: usize| m[(i, j)];
    let a1 = -e(1, 3) * e(2, 0) + e(1, 2) * e(2, 1) + e(1, 1) * e(2, 2) - e(1, 0) * e(2, 3);
    let a2 = e(0, 3) * e(3, 0) - e(0, 2) * e(3, 1) - e(0, 1) * e(3, 2) + e(0, 0) * e(3, 3);
    let psi = (a1.im + a2.im).atan2(a1.re - a2.re);
    [c(1.0, 0.0), c(1.0, 0.0), cis(-psi), cis(psi)]
}

/// Two-CNOT circuit for `u` when one canonical coordinate is a multiple of
/// `π/2`.
fn two_cnot(u: &ComplexMatrix) -> Result<Option<Circuit>> {
    let k = kak(u)?;
    let near = |x: f64| {
        let r = (x / FRAC_PI_2).round();
        ((x - r * FRAC_PI_2).abs(), r as i64)
    };
    let (slot, (dev, mult)) = (0..3)
        .map(|i| (i, near(k.coords[i])))
        .min_by(|x, y| x.1 .0.total_cmp(&y.1 .0))
        .expect("three coordinates");
    if dev > 1e-9 {
        return Ok(None);
    }
    let paul = paulis();
    let mut coords = k.coords;
    coords[slot] = 0.0;
    // exp(i·mult·π/2·P⊗P) = i^{mult mod 2}·(−1)^{⌊mult/2⌋}·(P⊗P)^{mult mod 2}.
    let mut right = kron(&k.a2, &k.b2);
    let phase = k.phase + FRAC_PI_2 * mult as f64;
    if mult.rem_euclid(2) == 1 {
        right = kron(&paul[slot], &paul[slot]) * right;
    }
    // Move the vanishing coordinate onto the YY slot.
    let g = match slot {
        0 => rz(FRAC_PI_2),
        2 => rx(FRAC_PI_2),
        _ => identity(2),
    };
    if slot != 1 {
        coords.swap(slot, 1);
    }
    let gg = kron(&g, &g);
    // canonical(original) = gg† · canonical(moved) · gg.
    let left = kron(&k.a1, &k.b1) * gg.adjoint();
    let right = &gg * right;
    let (s, t) = (-2.0 * coords[0], -2.0 * coords[2]);
    let (la, lb) = kron_factor(&left)?;
    let (ra, rb) = kron_factor(&right)?;
    let mut circ = Circuit::new(2);
    circ.push(u1q_gate(0, &ra));
    circ.push(u1q_gate(1, &rb));
    circ.extend([Gate::Cnot(0, 1), Gate::Rx(0, s), Gate::Rz(1, t), Gate::Cnot(0, 1)]);
    circ.push(u1q_gate(0, &la));
    circ.push(u1q_gate(1, &lb));
    circ.global_phase = phase;
    if phase_aligned_residual(&circuit_to_unitary(&circ, None)?, u) > 1e-9 {
        return Ok(None);
    }
    // Fix the global phase exactly against the target.
    let got = circuit_to_unitary(&circ, None)?;
    let overlap: C64 = got.iter().zip(u.iter()).map(|(x, y)| x.conj() * y).sum();
    circ.global_phase += overlap.arg();
    Ok(Some(circ))
}

/// Two-CNOT circuit and diagonal `Δ` with `Δ†·circuit = u`. Falls back to
/// the exact 3-CNOT form with `Δ = I` if the 2-CNOT form cannot be built.
pub fn two_qubit_up_to_diagonal(u: &ComplexMatrix) -> Result<(Circuit, [C64; 4])> {
    let d = real_trace_diagonal(u);
    let du = diag(&d) * u;
    if let Some(circ) = two_cnot(&du)? {
        check(&circ, &du, "two_qubit_up_to_diagonal")?;
        return Ok((circ, d));
    }
    Ok((two_qubit_exact(u)?, [c(1.0, 0.0); 4]))
}

/// Absorbs the diagonal left over by the previous two-qubit block into the
/// next one: returns `next·Δ†`.
pub fn migrate_diagonal(next: &ComplexMatrix, delta: &[C64; 4]) -> ComplexMatrix {
    let mut out = next.clone();
    for (col, d) in delta.iter().enumerate() {
        let dc = d.conj();
        out.column_mut(col).iter_mut().for_each(|z| *z *= dc);
    }
    out
}
