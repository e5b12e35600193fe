//! LSMR iterative least squares (Fong & Saunders, 2011).
//!
//! Minimizes `||A x - b||_2` given only products with `A` and `A^T`. Started
//! from `x = 0` it converges to the minimum-norm solution, so rank-deficient
//! operators are fine.

use thiserror::Error;

use crate::sparse::SparseMatrix;

/// A matrix known only through its action on vectors.
pub trait LinearOperator {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;
    /// `y += A x`
    fn apply_add(&self, x: &[f64], y: &mut [f64]);
    /// `x += A^T y`
    fn apply_transpose_add(&self, y: &[f64], x: &mut [f64]);
}

impl LinearOperator for SparseMatrix {
    fn nrows(&self) -> usize {
        self.rows()
    }
    fn ncols(&self) -> usize {
        self.cols()
    }
    fn apply_add(&self, x: &[f64], y: &mut [f64]) {
        self.mul_add(x, y)
    }
    fn apply_transpose_add(&self, y: &[f64], x: &mut [f64]) {
        self.mul_transpose_add(y, x)
    }
}

/// A sparse matrix with one extra sparse column appended, without copying
/// the base matrix.
pub struct AppendedColumn<'a> {
    pub base: &'a SparseMatrix,
    pub column: &'a [(usize, i8)],
}

impl LinearOperator for AppendedColumn<'_> {
    fn nrows(&self) -> usize {
        self.base.rows()
    }
    fn ncols(&self) -> usize {
        self.base.cols() + 1
    }
    fn apply_add(&self, x: &[f64], y: &mut [f64]) {
        let n = self.base.cols();
        self.base.mul_add(&x[..n], y);
        for &(i, v) in self.column {
            y[i] += v as f64 * x[n];
        }
    }
    fn apply_transpose_add(&self, y: &[f64], x: &mut [f64]) {
        let n = self.base.cols();
        self.base.mul_transpose_add(y, &mut x[..n]);
        x[n] += self.column.iter().map(|&(i, v)| v as f64 * y[i]).sum::<f64>();
    }
}

/// Stopping tolerances. `max_iterations = None` means `10 * (rows + cols)`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SolverConfig {
    pub atol: f64,
    pub btol: f64,
    pub max_iterations: Option<usize>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            atol: 1e-8,
            btol: 1e-8,
            max_iterations: None,
        }
    }
}

impl SolverConfig {
    pub fn with_tolerance(tol: f64) -> Self {
        Self {
            atol: tol,
            btol: tol,
            max_iterations: None,
        }
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        if !(self.atol > 0.0 && self.btol > 0.0) || self.max_iterations == Some(0) {
            return Err(SolverError::InvalidConfig);
        }
        Ok(())
    }

    fn iteration_limit(&self, op: &impl LinearOperator) -> usize {
        self.max_iterations
            .unwrap_or(10 * (op.nrows() + op.ncols()))
            .max(1)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("solver tolerances must be positive and the iteration limit at least 1")]
    InvalidConfig,
    #[error("dimension mismatch: operator has {expected} rows, right-hand side has {got}")]
    Dimension { expected: usize, got: usize },
    #[error("LSMR did not converge within {iterations} iterations (residual {residual:.3e})")]
    NotConverged { iterations: usize, residual: f64 },
}

/// Why the iteration stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// `x = 0` already solves the problem.
    Trivial,
    /// `A x = b` to within `btol`/`atol`.
    Consistent,
    /// Least-squares optimality `||A^T r||` small relative to `||A|| ||r||`.
    LeastSquares,
    /// As above, hitting machine precision instead of the tolerances.
    MachinePrecision,
}

#[derive(Debug, Clone)]
pub struct LsmrSolution {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub residual_norm: f64,
    pub termination: Termination,
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Stable Givens rotation: returns `(c, s, r)` with `[c s; -s c] [a; b] = [r; 0]`.
fn sym_ortho(a: f64, b: f64) -> (f64, f64, f64) {
    if b == 0.0 {
        (sign(a), 0.0, a.abs())
    } else if a == 0.0 {
        (0.0, sign(b), b.abs())
    } else if b.abs() > a.abs() {
        let tau = a / b;
        let s = sign(b) / (1.0 + tau * tau).sqrt();
        let c = s * tau;
        (c, s, b / s)
    } else {
        let tau = b / a;
        let c = sign(a) / (1.0 + tau * tau).sqrt();
        let s = c * tau;
        (c, s, a / c)
    }
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn scale(v: &mut [f64], s: f64) {
    v.iter_mut().for_each(|x| *x *= s);
}

/// Solves `min ||A x - b||` for a single right-hand side.
pub fn lsmr(
    op: &impl LinearOperator,
    b: &[f64],
    cfg: &SolverConfig,
) -> Result<LsmrSolution, SolverError> {
    cfg.validate()?;
    let (m, n) = (op.nrows(), op.ncols());
    if b.len() != m {
        return Err(SolverError::Dimension {
            expected: m,
            got: b.len(),
        });
    }
    let max_iter = cfg.iteration_limit(op);
    let (atol, btol) = (cfg.atol, cfg.btol);

    let mut x = vec![0.0; n];
    let mut u = b.to_vec();
    let normb = norm2(&u);
    let mut beta = normb;
    let mut v = vec![0.0; n];
    let mut alpha = 0.0;
    if beta > 0.0 {
        scale(&mut u, 1.0 / beta);
        op.apply_transpose_add(&u, &mut v);
        alpha = norm2(&v);
    }
    if alpha > 0.0 {
        scale(&mut v, 1.0 / alpha);
    }
    if alpha * beta == 0.0 {
        return Ok(LsmrSolution {
            x,
            iterations: 0,
            residual_norm: beta,
            termination: Termination::Trivial,
        });
    }

    let mut zetabar = alpha * beta;
    let mut alphabar = alpha;
    let mut rho = 1.0;
    let mut rhobar = 1.0;
    let mut cbar = 1.0;
    let mut sbar = 0.0;

    let mut h = v.clone();
    let mut hbar = vec![0.0; n];

    // residual norm estimation
    let mut betadd = beta;
    let mut betad = 0.0;
    let mut rhodold = 1.0;
    let mut tautildeold = 0.0;
    let mut thetatilde = 0.0;
    let mut zeta = 0.0;
    let mut d = 0.0;

    let mut norm_a2 = alpha * alpha;
    let mut tmp_u = vec![0.0; m];
    let mut tmp_v = vec![0.0; n];

    let mut itn = 0;
    loop {
        itn += 1;

        // u = A v - alpha u
        tmp_u.iter_mut().for_each(|t| *t = 0.0);
        op.apply_add(&v, &mut tmp_u);
        for (ui, ti) in u.iter_mut().zip(&tmp_u) {
            *ui = ti - alpha * *ui;
        }
        beta = norm2(&u);
        if beta > 0.0 {
            scale(&mut u, 1.0 / beta);
            // v = A^T u - beta v
            tmp_v.iter_mut().for_each(|t| *t = 0.0);
            op.apply_transpose_add(&u, &mut tmp_v);
            for (vi, ti) in v.iter_mut().zip(&tmp_v) {
                *vi = ti - beta * *vi;
            }
            alpha = norm2(&v);
            if alpha > 0.0 {
                scale(&mut v, 1.0 / alpha);
            }
        }

        // undamped problem: the first rotation is the identity
        let (chat, shat, alphahat) = sym_ortho(alphabar, 0.0);

        let rhoold = rho;
        let (c, s, rho_new) = sym_ortho(alphahat, beta);
        rho = rho_new;
        let thetanew = s * alpha;
        alphabar = c * alpha;

        let rhobarold = rhobar;
        let zetaold = zeta;
        let thetabar = sbar * rho;
        let (cb, sb, rb) = sym_ortho(cbar * rho, thetanew);
        cbar = cb;
        sbar = sb;
        rhobar = rb;
        zeta = cbar * zetabar;
        zetabar = -sbar * zetabar;

        let hbar_coef = thetabar * rho / (rhoold * rhobarold);
        let x_coef = zeta / (rho * rhobar);
        let h_coef = thetanew / rho;
        for i in 0..n {
            hbar[i] = h[i] - hbar_coef * hbar[i];
            x[i] += x_coef * hbar[i];
            h[i] = v[i] - h_coef * h[i];
        }

        let betaacute = chat * betadd;
        let betacheck = -shat * betadd;
        let betahat = c * betaacute;
        betadd = -s * betaacute;

        let thetatildeold = thetatilde;
        let (ctildeold, stildeold, rhotildeold) = sym_ortho(rhodold, thetabar);
        thetatilde = stildeold * rhobar;
        rhodold = ctildeold * rhobar;
        betad = -stildeold * betad + ctildeold * betahat;

        tautildeold = (zetaold - thetatildeold * tautildeold) / rhotildeold;
        let taud = (zeta - thetatilde * tautildeold) / rhodold;
        d += betacheck * betacheck;
        let normr = (d + (betad - taud).powi(2) + betadd * betadd).sqrt();

        norm_a2 += beta * beta;
        let norm_a = norm_a2.sqrt();
        norm_a2 += alpha * alpha;

        let normar = zetabar.abs();
        let normx = norm2(&x);

        let test1 = normr / normb;
        let test2 = if norm_a * normr != 0.0 {
            normar / (norm_a * normr)
        } else {
            f64::INFINITY
        };
        let t1 = test1 / (1.0 + norm_a * normx / normb);
        let rtol = btol + atol * norm_a * normx / normb;

        let termination = if test1 <= rtol {
            Some(Termination::Consistent)
        } else if test2 <= atol {
            Some(Termination::LeastSquares)
        } else if 1.0 + t1 <= 1.0 || 1.0 + test2 <= 1.0 {
            Some(Termination::MachinePrecision)
        } else {
            None
        };
        if let Some(termination) = termination {
            return Ok(LsmrSolution {
                x,
                iterations: itn,
                residual_norm: normr,
                termination,
            });
        }
        if itn >= max_iter {
            return Err(SolverError::NotConverged {
                iterations: itn,
                residual: normr,
            });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_square_system() {
        // [[1,1],[−1,1]] x = [3, 1] -> x = [1, 2]
        let a = SparseMatrix::from_columns(2, vec![vec![(0, 1), (1, -1)], vec![(0, 1), (1, 1)]]);
        let sol = lsmr(&a, &[3.0, 1.0], &SolverConfig::with_tolerance(1e-12)).unwrap();
        assert!((sol.x[0] - 1.0).abs() < 1e-10);
        assert!((sol.x[1] - 2.0).abs() < 1e-10);
    }

    #[test]
    fn least_squares_overdetermined() {
        // single column of ones: best fit is the mean
        let a = SparseMatrix::from_columns(3, vec![vec![(0, 1), (1, 1), (2, 1)]]);
        let sol = lsmr(&a, &[1.0, 2.0, 6.0], &SolverConfig::default()).unwrap();
        assert!((sol.x[0] - 3.0).abs() < 1e-10);
        assert!((sol.residual_norm - 14f64.sqrt()).abs() < 1e-8);
    }

    #[test]
    fn rank_deficient_gives_min_norm() {
        let a = SparseMatrix::from_columns(2, vec![vec![(0, 1)], vec![(0, 1)]]);
        let sol = lsmr(&a, &[2.0, 5.0], &SolverConfig::with_tolerance(1e-12)).unwrap();
        assert!((sol.x[0] - 1.0).abs() < 1e-10);
        assert!((sol.x[1] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn zero_rhs_and_empty_operator() {
        let a = SparseMatrix::from_columns(2, vec![vec![(0, 1)]]);
        let sol = lsmr(&a, &[0.0, 0.0], &SolverConfig::default()).unwrap();
        assert_eq!(sol.termination, Termination::Trivial);
        let empty = SparseMatrix::empty(3);
        let sol = lsmr(&empty, &[1.0, 2.0, 2.0], &SolverConfig::default()).unwrap();
        assert!(sol.x.is_empty());
        assert_eq!(sol.residual_norm, 3.0);
    }

    #[test]
    fn reports_non_convergence_and_bad_input() {
        let a = SparseMatrix::from_columns(
            4,
            (0..4).map(|j| (0..4).map(move |i| (i, if i <= j { 1 } else { -1 }))),
        );
        let cfg = SolverConfig {
            atol: 1e-14,
            btol: 1e-14,
            max_iterations: Some(1),
        };
        assert!(matches!(
            lsmr(&a, &[1.0, -2.0, 3.0, 0.5], &cfg),
            Err(SolverError::NotConverged { .. })
        ));
        assert!(matches!(
            lsmr(&a, &[1.0], &SolverConfig::default()),
            Err(SolverError::Dimension { .. })
        ));
        let bad = SolverConfig {
            atol: 0.0,
            ..SolverConfig::default()
        };
        assert_eq!(lsmr(&a, &[0.0; 4], &bad).unwrap_err(), SolverError::InvalidConfig);
    }

    #[test]
    fn appended_column_matches_materialized() {
        let base = SparseMatrix::from_columns(3, vec![vec![(0, 1), (1, -1)]]);
        let extra = [(1usize, 1i8), (2, 1)];
        let mut full = base.clone();
        full.push_column(extra.iter().copied());
        let op = AppendedColumn {
            base: &base,
            column: &extra,
        };
        let x = [0.5, -2.0];
        let (mut y1, mut y2) = (vec![0.0; 3], vec![0.0; 3]);
        op.apply_add(&x, &mut y1);
        full.mul_add(&x, &mut y2);
        assert_eq!(y1, y2);
        let y = [1.0, 2.0, 3.0];
        let (mut x1, mut x2) = (vec![0.0; 2], vec![0.0; 2]);
        op.apply_transpose_add(&y, &mut x1);
        full.mul_transpose_add(&y, &mut x2);
        assert_eq!(x1, x2);
    }
}
