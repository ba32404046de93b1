use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::derivatives::{energy_gradient, lloyd_jacobian_from, mass_jacobian, Linearization};
use super::CalculusError;
use crate::energy::Problem;
use crate::geometry::GeneratorSet;
use crate::lloyd::{fixed_point_residual, LloydConfig, LloydMode, LloydState};

/// Spectral summary of a symmetric matrix restricted to the complement of
/// the weight-shift direction `(0; 𝟙)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenSummary {
    pub min_nontrivial: f64,
    pub max: f64,
    /// Non-trivial eigenvalues, ascending.
    pub eigenvalues: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixedPointHessian {
    /// `3N × 3N`, rows and columns ordered `(x₁, y₁, …, x_N, y_N, w₁, …, w_N)`.
    pub matrix: DMatrix<f64>,
    /// `‖H − Hᵀ‖_max / ‖H‖_max`.
    pub asymmetry: f64,
    /// `‖H (0; 𝟙)‖_∞`.
    pub shift_residual: f64,
    pub summary: EigenSummary,
}

/// Unit vector `(0; 𝟙)/√N` in `ℝ^{3N}`.
fn shift_direction(n: usize) -> DVector<f64> {
    let mut u = DVector::zeros(3 * n);
    u.rows_mut(2 * n, n).fill(1.0 / (n as f64).sqrt());
    u
}

/// Orthonormal basis (as columns) of the complement of unit vector `u`, from
/// the Householder reflection taking `u` to the last coordinate axis.
fn complement_basis(u: &DVector<f64>) -> DMatrix<f64> {
    let d = u.len();
    let mut v = u.clone();
    v[d - 1] -= 1.0;
    let vv = v.dot(&v);
    let mut h = DMatrix::identity(d, d);
    if vv > 0.0 {
        h -= &v * v.transpose() * (2.0 / vv);
    }
    h.columns(0, d - 1).into_owned()
}

/// Eigenvalues of the symmetric part of `m` on the complement of the shift direction.
pub fn eigen_summary(m: &DMatrix<f64>) -> EigenSummary {
    let n = m.nrows() / 3;
    let sym = (m + m.transpose()) * 0.5;
    let q = complement_basis(&shift_direction(n));
    let reduced = q.transpose() * sym * &q;
    let mut eigenvalues: Vec<f64> = SymmetricEigen::new(reduced)
        .eigenvalues
        .iter()
        .copied()
        .collect();
    eigenvalues.sort_by(f64::total_cmp);
    EigenSummary {
        min_nontrivial: eigenvalues.first().copied().unwrap_or(f64::NAN),
        max: eigenvalues.last().copied().unwrap_or(f64::NAN),
        eigenvalues,
    }
}

/// Hessian of the energy at a fixed point of the Lloyd maps:
/// `[[2M̂, ∇_X m], [0, ∇_w m]] · (I − J)` with `J` the Lloyd Jacobian.
pub fn hessian_at_fixed_point(
    problem: &Problem,
    gens: &GeneratorSet,
    config: &LloydConfig,
) -> Result<FixedPointHessian, CalculusError> {
    let state = LloydState::new(problem, gens.clone())?;
    let generalized = LloydConfig {
        mode: LloydMode::Generalized,
        ..config.clone()
    };
    let (dx, dw) = fixed_point_residual(problem, &state, &generalized)?;
    if !(dx < 10.0 * config.tol_position && dw < 10.0 * config.tol_weight) {
        return Err(CalculusError::NotAFixedPoint {
            position_residual: dx,
            weight_residual: dw,
        });
    }
    let lin = Linearization::from_state(problem, &state)?;
    Ok(hessian_product(&lin))
}

/// The fixed-point product formula evaluated without checking residuals.
pub fn hessian_product(lin: &Linearization) -> FixedPointHessian {
    let n = lin.len();
    let jac = mass_jacobian(lin);
    let lj = lloyd_jacobian_from(lin, &jac);
    let mut left = DMatrix::zeros(3 * n, 3 * n);
    for i in 0..n {
        left[(2 * i, 2 * i)] = 2.0 * lin.masses[i];
        left[(2 * i + 1, 2 * i + 1)] = 2.0 * lin.masses[i];
    }
    left.view_mut((0, 2 * n), (2 * n, n))
        .copy_from(&jac.d_m_d_x);
    left.view_mut((2 * n, 2 * n), (n, n))
        .copy_from(&jac.d_m_d_w);
    let right = DMatrix::identity(3 * n, 3 * n) - lj.full();
    let matrix = left * right;

    let scale = matrix.amax().max(f64::MIN_POSITIVE);
    let asymmetry = (&matrix - matrix.transpose()).amax() / scale;
    let shift_residual = (&matrix * shift_direction(n)).amax() * (n as f64).sqrt();
    FixedPointHessian {
        summary: eigen_summary(&matrix),
        matrix,
        asymmetry,
        shift_residual,
    }
}

/// The Lloyd step written as a preconditioned gradient step,
/// `z_{n+1} = z_n − B ∇E(z_n) + (0; c𝟙)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DescentForm {
    /// `P⁻¹`: columns are `e_i − e_{i+1}` for `i < N` and `𝟙`.
    pub basis: DMatrix<f64>,
    /// `Π P ∇_w m P⁻¹ Πᵀ`, `(N−1) × (N−1)`.
    pub reduced: DMatrix<f64>,
    /// `3N × 3N`.
    pub preconditioner: DMatrix<f64>,
    /// `c`, the mean of the weight-part mismatch.
    pub shift: f64,
    /// `‖z_{n+1} − (z_n − B∇E + (0; c𝟙))‖_∞ / max(‖z_{n+1}‖_∞, ‖z_n‖_∞)`.
    pub residual: f64,
    /// Smallest eigenvalue of the symmetric part of `B` (diagnostic only).
    pub preconditioner_min_eigenvalue: f64,
}

/// Builds the preconditioner `B` at `before` and checks it reproduces the
/// Lloyd update `after = (ξ, ω)(before)`.
pub fn descent_form(
    problem: &Problem,
    before: &GeneratorSet,
    after: &GeneratorSet,
) -> Result<DescentForm, CalculusError> {
    let n = before.len();
    if after.len() != n {
        return Err(CalculusError::SizeMismatch {
            expected: n,
            found: after.len(),
        });
    }
    let lin = Linearization::new(problem, before)?;
    let jac = mass_jacobian(&lin);
    let grad = energy_gradient(&lin, &jac);

    let mut basis = DMatrix::zeros(n, n);
    for i in 0..n.saturating_sub(1) {
        basis[(i, i)] = 1.0;
        basis[(i + 1, i)] = -1.0;
    }
    basis.column_mut(n - 1).fill(1.0);
    let basis_inv = basis
        .clone()
        .try_inverse()
        .expect("difference basis is invertible");
    let full = &basis_inv * &jac.d_m_d_w * &basis;
    let reduced = full.view((0, 0), (n - 1, n - 1)).into_owned();
    let reduced_inv = if n > 1 {
        let lu = reduced.clone().lu();
        let inv = lu.try_inverse().ok_or(CalculusError::SingularA)?;
        let cond = reduced.amax() * inv.amax();
        if !cond.is_finite() || cond > 1e14 {
            return Err(CalculusError::SingularA);
        }
        inv
    } else {
        DMatrix::zeros(0, 0)
    };
    // Q = P⁻¹ Πᵀ A⁻¹ Π P
    let mut embedded = DMatrix::zeros(n, n);
    embedded
        .view_mut((0, 0), (n - 1, n - 1))
        .copy_from(&reduced_inv);
    let q = &basis * embedded * &basis_inv;

    let mut b = DMatrix::zeros(3 * n, 3 * n);
    let inv_mass = DMatrix::from_fn(2 * n, 2 * n, |r, c| {
        if r == c {
            0.5 / lin.masses[r / 2]
        } else {
            0.0
        }
    });
    b.view_mut((0, 0), (2 * n, 2 * n)).copy_from(&inv_mass);
    b.view_mut((0, 2 * n), (2 * n, n))
        .copy_from(&(-(&inv_mass * &jac.d_m_d_x * &q)));
    b.view_mut((2 * n, 2 * n), (n, n)).copy_from(&q);

    let z0 = DVector::from_vec(before.to_flat());
    let z1 = DVector::from_vec(after.to_flat());
    let predicted = &z0 - &b * grad.flat();
    let mismatch = &z1 - &predicted;
    let shift = mismatch.rows(2 * n, n).mean();
    let mut corrected = predicted;
    corrected.rows_mut(2 * n, n).add_scalar_mut(shift);
    let scale = z1.amax().max(z0.amax()).max(f64::MIN_POSITIVE);
    let residual = (&z1 - corrected).amax() / scale;

    let sym = (&b + b.transpose()) * 0.5;
    let preconditioner_min_eigenvalue = SymmetricEigen::new(sym)
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    Ok(DescentForm {
        basis,
        reduced,
        preconditioner: b,
        shift,
        residual,
        preconditioner_min_eigenvalue,
    })
}
