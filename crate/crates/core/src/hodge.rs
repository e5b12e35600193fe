//! Gradient, curl and harmonic parts of edge flows.
//!
//! Every projection is a least-squares fit solved column by column with LSMR:
//! the gradient part of `f` is `B1^T x*` with `x* = argmin ||B1^T x - f||`,
//! the curl part of a gradient-free `f` is `B2 y*` with
//! `y* = argmin ||B2 y - f||`, and whatever is left is harmonic.

use crate::complex::{CellComplex, TwoCell};
use crate::flows::FlowMatrix;
use crate::lsmr::{lsmr, AppendedColumn, LinearOperator, SolverConfig, SolverError};
use crate::sparse::SparseMatrix;

/// Splits every column of `flows` into `(fit, residual)` against the column
/// space of `op`.
fn fit_columns(
    op: &impl LinearOperator,
    flows: &FlowMatrix,
    cfg: &SolverConfig,
) -> Result<(FlowMatrix, FlowMatrix), SolverError> {
    if op.nrows() != flows.edge_count() {
        return Err(SolverError::Dimension {
            expected: op.nrows(),
            got: flows.edge_count(),
        });
    }
    let mut fit = FlowMatrix::zeros(flows.edge_count(), flows.sample_count());
    let mut residual = flows.clone();
    for j in 0..flows.sample_count() {
        let sol = lsmr(op, flows.column(j), cfg)?;
        let col = fit.column_mut(j);
        op.apply_add(&sol.x, col);
        for (r, f) in residual.column_mut(j).iter_mut().zip(col.iter()) {
            *r -= f;
        }
    }
    Ok((fit, residual))
}

/// `F - grad(F)`: removes the component in the image of `B1^T`.
pub fn project_gradient_out(
    b1: &SparseMatrix,
    flows: &FlowMatrix,
    cfg: &SolverConfig,
) -> Result<FlowMatrix, SolverError> {
    Ok(fit_columns(&b1.transpose(), flows, cfg)?.1)
}

/// `F - curl(F)` for gradient-free `F`, i.e. the harmonic part.
pub fn project_harmonic(
    b2: &SparseMatrix,
    gradient_free_flows: &FlowMatrix,
    cfg: &SolverConfig,
) -> Result<FlowMatrix, SolverError> {
    if b2.rows() != gradient_free_flows.edge_count() {
        return Err(SolverError::Dimension {
            expected: b2.rows(),
            got: gradient_free_flows.edge_count(),
        });
    }
    if b2.cols() == 0 {
        return Ok(gradient_free_flows.clone());
    }
    Ok(fit_columns(b2, gradient_free_flows, cfg)?.1)
}

/// `||harm(F)||_F` for the cells of `complex`.
pub fn loss(
    complex: &CellComplex,
    gradient_free_flows: &FlowMatrix,
    cfg: &SolverConfig,
) -> Result<f64, SolverError> {
    let b2 = complex.boundary_matrices().b2;
    Ok(project_harmonic(&b2, gradient_free_flows, cfg)?.frobenius_norm())
}

/// Loss after adding `candidate` to the cells behind `b2`, given the current
/// harmonic `residual`. The residual is orthogonal to `im(B2)`, so fitting it
/// against `[B2 | c]` removes exactly the extra curl the candidate explains.
pub fn loss_delta(
    b2: &SparseMatrix,
    residual: &FlowMatrix,
    candidate: &TwoCell,
    cfg: &SolverConfig,
) -> Result<f64, SolverError> {
    let column: Vec<(usize, i8)> = candidate.boundary().to_vec();
    let op = AppendedColumn {
        base: b2,
        column: &column,
    };
    Ok(fit_columns(&op, residual, cfg)?.1.frobenius_norm())
}

/// The full three-way split of a flow matrix.
#[derive(Debug, Clone)]
pub struct Decomposition {
    pub gradient: FlowMatrix,
    pub curl: FlowMatrix,
    pub harmonic: FlowMatrix,
}

pub fn decompose(
    b1: &SparseMatrix,
    b2: &SparseMatrix,
    flows: &FlowMatrix,
    cfg: &SolverConfig,
) -> Result<Decomposition, SolverError> {
    let (gradient, gradient_free) = fit_columns(&b1.transpose(), flows, cfg)?;
    let (curl, harmonic) = if b2.cols() == 0 {
        (
            FlowMatrix::zeros(flows.edge_count(), flows.sample_count()),
            gradient_free,
        )
    } else {
        fit_columns(b2, &gradient_free, cfg)?
    };
    Ok(Decomposition {
        gradient,
        curl,
        harmonic,
    })
}
