//! Dense convex quadratic programming with KKT certificates.
//!
//! Solves  min ½xᵀQx + cᵀx  subject to  A_eq x = b_eq,  A_in x ≤ b_in  and
//! box bounds, for symmetric positive-semidefinite Q of modest size (a few
//! hundred variables at most). The solver is a primal-dual interior-point
//! method with Mehrotra predictor-corrector steps and dense LU factorization
//! of the reduced KKT system; primal infeasibility is reported with a
//! Farkas-type certificate when one can be extracted from the diverging
//! dual iterates.

use nalgebra::{DMatrix, DVector};

/// `min ½xᵀQx + cᵀx` over `A_eq x = b_eq`, `A_in x ≤ b_in`, `lower ≤ x ≤ upper`.
///
/// Bounds use `±INFINITY` for absent sides and are folded into inequality
/// rows at solve time. Builder methods panic on dimension mismatch.
#[derive(Clone, Debug)]
pub struct QpProblem {
    q: DMatrix<f64>,
    c: DVector<f64>,
    a_eq: DMatrix<f64>,
    b_eq: DVector<f64>,
    a_in: DMatrix<f64>,
    b_in: DVector<f64>,
    lower: DVector<f64>,
    upper: DVector<f64>,
}

#[derive(Clone, Copy, Debug)]
pub struct KktResiduals {
    /// ‖Qx + c + A_eqᵀy + A_inᵀz‖∞ over the assembled constraint system.
    pub stationarity: f64,
    /// max(‖A_eq x − b_eq‖∞, largest inequality violation).
    pub feasibility: f64,
    /// Mean product of slacks and inequality multipliers — the duality gap
    /// per inequality row.
    pub complementarity: f64,
}

#[derive(Clone, Debug)]
pub struct QpSolution {
    pub x: DVector<f64>,
    /// Multipliers for the equality rows.
    pub eq_multipliers: DVector<f64>,
    /// Multipliers (≥ 0) for the assembled inequality rows: the explicit
    /// `A_in` rows first, then lower-bound rows, then upper-bound rows.
    pub in_multipliers: DVector<f64>,
    pub objective: f64,
    pub residuals: KktResiduals,
    pub iterations: usize,
}

/// Evidence that no point satisfies the constraint system: a ray (y, z) with
/// z ≥ 0, A_eqᵀy + A_inᵀz ≈ 0 and b_eqᵀy + b_inᵀz < 0.
#[derive(Clone, Debug)]
pub struct InfeasibilityCertificate {
    pub eq_ray: DVector<f64>,
    pub in_ray: DVector<f64>,
    /// ‖A_eqᵀy + A_inᵀz‖∞ for the normalized ray (≈ 0).
    pub combination_residual: f64,
    /// b_eqᵀy + b_inᵀz for the normalized ray (< 0 certifies emptiness).
    pub support_gap: f64,
}

#[derive(Clone, Debug, thiserror::Error)]
pub enum QpError {
    #[error("constraint system is infeasible{}", match .certificate {
        Some(c) => format!(" (Farkas ray: combination residual {:.2e}, support gap {:.2e})",
                           c.combination_residual, c.support_gap),
        None => " (feasibility could not be restored)".to_string(),
    })]
    Infeasible {
        certificate: Option<InfeasibilityCertificate>,
    },
    #[error("interior-point iteration limit reached without meeting the tolerance")]
    MaxIterations,
    #[error("quadratic term is not positive semidefinite (smallest eigenvalue {min_eigenvalue:.3e})")]
    NotPSD { min_eigenvalue: f64 },
}

impl QpProblem {
    /// Unconstrained problem; constraints are attached with the builders.
    pub fn new(q: DMatrix<f64>, c: DVector<f64>) -> Self {
        assert!(q.is_square(), "Q must be square");
        assert_eq!(q.nrows(), c.len(), "Q and c dimension mismatch");
        let n = c.len();
        Self {
            q,
            c,
            a_eq: DMatrix::zeros(0, n),
            b_eq: DVector::zeros(0),
            a_in: DMatrix::zeros(0, n),
            b_in: DVector::zeros(0),
            lower: DVector::from_element(n, f64::NEG_INFINITY),
            upper: DVector::from_element(n, f64::INFINITY),
        }
    }

    pub fn with_equalities(mut self, a_eq: DMatrix<f64>, b_eq: DVector<f64>) -> Self {
        assert_eq!(a_eq.ncols(), self.dim(), "A_eq column count mismatch");
        assert_eq!(a_eq.nrows(), b_eq.len(), "A_eq/b_eq row mismatch");
        self.a_eq = a_eq;
        self.b_eq = b_eq;
        self
    }

    pub fn with_inequalities(mut self, a_in: DMatrix<f64>, b_in: DVector<f64>) -> Self {
        assert_eq!(a_in.ncols(), self.dim(), "A_in column count mismatch");
        assert_eq!(a_in.nrows(), b_in.len(), "A_in/b_in row mismatch");
        self.a_in = a_in;
        self.b_in = b_in;
        self
    }

    /// Box bounds; use `±INFINITY` for absent sides.
    pub fn with_box(mut self, lower: &[f64], upper: &[f64]) -> Self {
        assert_eq!(lower.len(), self.dim(), "lower bound length mismatch");
        assert_eq!(upper.len(), self.dim(), "upper bound length mismatch");
        self.lower = DVector::from_column_slice(lower);
        self.upper = DVector::from_column_slice(upper);
        self
    }

    pub fn dim(&self) -> usize {
        self.c.len()
    }

    pub fn objective(&self, x: &DVector<f64>) -> f64 {
        0.5 * (x.transpose() * &self.q * x)[(0, 0)] + self.c.dot(x)
    }

    /// All inequality rows including bounds, in the multiplier ordering
    /// documented on [`QpSolution::in_multipliers`].
    fn assembled_inequalities(&self) -> (DMatrix<f64>, DVector<f64>) {
        let n = self.dim();
        let mut rows: Vec<(DVector<f64>, f64)> = Vec::new();
        for i in 0..self.a_in.nrows() {
            rows.push((self.a_in.row(i).transpose(), self.b_in[i]));
        }
        for j in 0..n {
            if self.lower[j].is_finite() {
                let mut r = DVector::zeros(n);
                r[j] = -1.0;
                rows.push((r, -self.lower[j]));
            }
        }
        for j in 0..n {
            if self.upper[j].is_finite() {
                let mut r = DVector::zeros(n);
                r[j] = 1.0;
                rows.push((r, self.upper[j]));
            }
        }
        let m = rows.len();
        let mut g = DMatrix::zeros(m, n);
        let mut h = DVector::zeros(m);
        for (i, (r, b)) in rows.into_iter().enumerate() {
            g.row_mut(i).copy_from(&r.transpose());
            h[i] = b;
        }
        (g, h)
    }

    /// Plain-text dump of the assembled data: one `name rows cols` header per
    /// block (`Q`, `c`, `A_eq`, `b_eq`, `A_in`, `b_in`), then the entries
    /// row-major, whitespace-separated, one row per line.
    pub fn dump(&self) -> String {
        fn mat(out: &mut String, name: &str, m: &DMatrix<f64>) {
            out.push_str(&format!("{} {} {}\n", name, m.nrows(), m.ncols()));
            for i in 0..m.nrows() {
                let row: Vec<String> = (0..m.ncols()).map(|j| format!("{}", m[(i, j)])).collect();
                out.push_str(&row.join(" "));
                out.push('\n');
            }
        }
        let (g, h) = self.assembled_inequalities();
        let mut out = String::new();
        mat(&mut out, "Q", &self.q);
        mat(&mut out, "c", &DMatrix::from_column_slice(self.c.len(), 1, self.c.as_slice()));
        mat(&mut out, "A_eq", &self.a_eq);
        mat(
            &mut out,
            "b_eq",
            &DMatrix::from_column_slice(self.b_eq.len(), 1, self.b_eq.as_slice()),
        );
        mat(&mut out, "A_in", &g);
        mat(&mut out, "b_in", &DMatrix::from_column_slice(h.len(), 1, h.as_slice()));
        out
    }

    /// Verifies symmetry and positive semidefiniteness; eigenvalues in
    /// [−10⁻⁸, 0) are clamped to zero (assembly round-off), anything more
    /// negative is rejected.
    fn repaired_q(&self) -> Result<DMatrix<f64>, QpError> {
        let n = self.dim();
        if n == 0 {
            return Ok(self.q.clone());
        }
        let sym = (&self.q + self.q.transpose()) * 0.5;
        let eig = sym.clone().symmetric_eigen();
        let min_eigenvalue = eig.eigenvalues.min();
        if min_eigenvalue < -1e-8 {
            return Err(QpError::NotPSD { min_eigenvalue });
        }
        if min_eigenvalue >= 0.0 {
            return Ok(sym);
        }
        let clamped = eig.eigenvalues.map(|v| v.max(0.0));
        Ok(&eig.eigenvectors * DMatrix::from_diagonal(&clamped) * eig.eigenvectors.transpose())
    }
}

/// Largest α ∈ (0, 1] with v + α·dv ≥ (1−τ)·v kept strictly positive.
fn max_step(v: &DVector<f64>, dv: &DVector<f64>, tau: f64) -> f64 {
    let mut alpha = 1.0f64;
    for i in 0..v.len() {
        if dv[i] < 0.0 {
            alpha = alpha.min(-tau * v[i] / dv[i]);
        }
    }
    alpha.min(1.0)
}

fn inf_norm(v: &DVector<f64>) -> f64 {
    if v.is_empty() { 0.0 } else { v.amax() }
}

/// Interior-point solve to KKT tolerance `tol`, measured relative to the
/// magnitude of the problem data (default choice elsewhere in the crate:
/// 10⁻⁸).
pub fn qp_solve(problem: &QpProblem, tol: f64) -> Result<QpSolution, QpError> {
    assert!(tol > 0.0 && tol.is_finite(), "tolerance must be positive");
    let q = problem.repaired_q()?;
    let n = problem.dim();
    let (g, h) = problem.assembled_inequalities();
    let a = &problem.a_eq;
    let b = &problem.b_eq;
    let me = a.nrows();
    let mi = g.nrows();

    if mi == 0 {
        return solve_equality_constrained(problem, &q, tol);
    }

    const MAX_ITER: usize = 200;
    const REG: f64 = 1e-10;

    // Stopping levels scaled by the data so that cost coefficients of a few
    // hundred do not silently turn `tol` into machine precision.
    let q_max = q.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let data_scale = 1.0 + q_max.max(inf_norm(&problem.c));
    let rhs_scale = 1.0 + inf_norm(b).max(inf_norm(&h));
    let stat_tol = tol * data_scale;
    let feas_tol = tol * rhs_scale;
    let comp_tol = tol * data_scale;
    // Driving the barrier far below the complementarity target only blows up
    // the z/s ratios and with them the KKT conditioning; stop centering there.
    let mu_floor = 0.01 * comp_tol;

    let mut x = DVector::<f64>::zeros(n);
    let mut y = DVector::<f64>::zeros(me);
    let mut s = DVector::<f64>::from_fn(mi, |i, _| h[i].abs().max(1.0));
    let mut z = DVector::<f64>::from_element(mi, 1.0);
    // Consecutive iterations spent at a converged primal-dual point whose
    // step length has collapsed (see the stalled-vertex acceptance below).
    let mut stalled: usize = 0;

    for iter in 0..=MAX_ITER {
        let r_dual = &q * &x + &problem.c + a.transpose() * &y + g.transpose() * &z;
        let r_eq = a * &x - b;
        let r_in = &g * &x + &s - &h;
        let mu = s.dot(&z) / mi as f64;

        let residuals = KktResiduals {
            stationarity: inf_norm(&r_dual),
            feasibility: inf_norm(&r_eq).max(inf_norm(&r_in)),
            complementarity: mu,
        };
        if std::env::var_os("UZAWA_QP_TRACE").is_some() {
            eprintln!(
                "iter {iter:>3}: mu {mu:.3e} stat {:.3e} feas {:.3e} comp {:.3e}",
                residuals.stationarity, residuals.feasibility, residuals.complementarity
            );
        }
        // At degenerate vertices where strict complementarity fails, the
        // barrier parameter can pin well above the target while stationarity
        // and feasibility are long solved and the step length has collapsed.
        // Accept such an iterate instead of spinning to the iteration limit:
        // the duality gap it certifies is still orders of magnitude below the
        // data scale, and no further progress is available to the linear
        // algebra.
        let point_converged =
            residuals.stationarity <= stat_tol && residuals.feasibility <= feas_tol;
        if point_converged
            && (residuals.complementarity <= comp_tol
                || (stalled >= 12 && residuals.complementarity <= 1e3 * comp_tol))
        {
            let eq_multipliers = y;
            let in_multipliers = z;
            let objective = problem.objective(&x);
            return Ok(QpSolution {
                x,
                eq_multipliers,
                in_multipliers,
                objective,
                residuals,
                iterations: iter,
            });
        }

        // Diverging duals with stalled complementarity signal primal
        // infeasibility; try to extract a Farkas ray.
        let dual_scale = inf_norm(&y).max(inf_norm(&z));
        if dual_scale > 1e8
            || (mu <= 10.0 * mu_floor && residuals.feasibility > feas_tol.max(1e-7))
        {
            if let Some(cert) = farkas_certificate(a, b, &g, &h, &y, &z) {
                return Err(QpError::Infeasible {
                    certificate: Some(cert),
                });
            }
        }
        if iter == MAX_ITER {
            break;
        }

        // Reduced KKT matrix [Q + GᵀDG + δI, A_eqᵀ; A_eq, −δI] with D = z/s.
        // Capping D keeps the factorization meaningful once some constraints
        // are essentially active (z/s otherwise runs past 10²⁰ and the
        // computed steps are pure rounding noise); the dz recovery below uses
        // the same capped ratios so the step still solves a consistent system.
        let d = z.component_div(&s).map(|v| v.min(1e14));
        let mut kkt = DMatrix::<f64>::zeros(n + me, n + me);
        let gt_d_g = g.transpose() * DMatrix::from_diagonal(&d) * &g;
        kkt.view_mut((0, 0), (n, n)).copy_from(&(&q + gt_d_g));
        for i in 0..n {
            kkt[(i, i)] += REG;
        }
        if me > 0 {
            kkt.view_mut((0, n), (n, me)).copy_from(&a.transpose());
            kkt.view_mut((n, 0), (me, n)).copy_from(a);
            for i in 0..me {
                kkt[(n + i, n + i)] = -REG;
            }
        }
        let lu = kkt.clone().lu();

        let solve_step = |r_comp: &DVector<f64>| -> Option<(DVector<f64>, DVector<f64>, DVector<f64>, DVector<f64>)> {
            let mut rhs = DVector::<f64>::zeros(n + me);
            let correction =
                g.transpose() * (r_comp.component_div(&s) - d.component_mul(&r_in));
            rhs.rows_mut(0, n).copy_from(&(-&r_dual + correction));
            if me > 0 {
                rhs.rows_mut(n, me).copy_from(&(-&r_eq));
            }
            let mut sol = lu.solve(&rhs)?;
            // One iterative-refinement pass; near an active face the reduced
            // system is stiff enough that the raw solve loses several digits.
            let residual = &rhs - &kkt * &sol;
            if let Some(correction) = lu.solve(&residual) {
                sol += correction;
            }
            let dx = sol.rows(0, n).into_owned();
            let dy = sol.rows(n, me).into_owned();
            let ds = -&r_in - &g * &dx;
            let dz = -r_comp.component_div(&s) - d.component_mul(&ds);
            Some((dx, dy, ds, dz))
        };

        // Predictor (affine) pass.
        let r_comp_aff = s.component_mul(&z);
        let Some((dx_a, _dy_a, ds_a, dz_a)) = solve_step(&r_comp_aff) else {
            return Err(QpError::MaxIterations);
        };
        let alpha_p_aff = max_step(&s, &ds_a, 1.0);
        let alpha_d_aff = max_step(&z, &dz_a, 1.0);
        let mu_aff = (&s + alpha_p_aff * &ds_a).dot(&(&z + alpha_d_aff * &dz_a)) / mi as f64;
        let sigma = (mu_aff / mu).powi(3).clamp(0.0, 1.0);

        // Corrector pass. The target barrier never drops below `mu_floor`:
        // complementarity only has to reach `comp_tol`, and overshooting by
        // twenty orders of magnitude destroys the z/s scaling instead.
        let r_comp = s.component_mul(&z) + ds_a.component_mul(&dz_a)
            - DVector::from_element(mi, (sigma * mu).max(mu_floor));
        let Some((dx, dy, ds, dz)) = solve_step(&r_comp) else {
            return Err(QpError::MaxIterations);
        };
        let _ = dx_a;

        // One common step length for both blocks: Q couples x into the dual
        // residual, so stepping the primal and dual by different fractions
        // breaks the Newton cancellation and the dual residual see-saws.
        let tau = (1.0 - mu).clamp(0.99, 0.999);
        let alpha_p = max_step(&s, &ds, tau);
        let alpha_d = max_step(&z, &dz, tau);
        let alpha = alpha_p.min(alpha_d);

        // A primal block with feasibility still unmet is the infeasible
        // pattern: the duals want to run off along a Farkas ray. Let them, so
        // the divergence check above can certify the infeasibility.
        if alpha < 1e-6 && alpha_d > 1e3 * alpha && residuals.feasibility > feas_tol.max(1e-7) {
            y += alpha_d * dy;
            z += alpha_d * dz;
            continue;
        }

        // Near a degenerate face the second-order correction can point almost
        // straight into the boundary even though the affine direction does
        // not; when it truncates the step to nothing, fall back to a plain
        // centering step, which pulls the stray products back toward the mean.
        let (dx, dy, ds, dz, alpha) = if alpha < 1e-2 {
            let r_center = s.component_mul(&z) - DVector::from_element(mi, mu);
            match solve_step(&r_center) {
                Some((cx, cy, cs, cz)) => {
                    let ca = max_step(&s, &cs, tau).min(max_step(&z, &cz, tau));
                    if ca > alpha {
                        (cx, cy, cs, cz, ca)
                    } else {
                        (dx, dy, ds, dz, alpha)
                    }
                }
                None => (dx, dy, ds, dz, alpha),
            }
        } else {
            (dx, dy, ds, dz, alpha)
        };

        if std::env::var_os("UZAWA_QP_TRACE").is_some() {
            eprintln!("          sigma {sigma:.3e} alpha {alpha:.3e}");
        }
        stalled = if point_converged && alpha < 1e-3 {
            stalled + 1
        } else {
            0
        };
        x += alpha * dx;
        s += alpha * ds;
        y += alpha * dy;
        z += alpha * dz;
    }

    if let Some(cert) = farkas_certificate(a, b, &g, &h, &y, &z) {
        return Err(QpError::Infeasible {
            certificate: Some(cert),
        });
    }
    Err(QpError::MaxIterations)
}

/// Direct KKT solve when there are no inequality rows.
fn solve_equality_constrained(
    problem: &QpProblem,
    q: &DMatrix<f64>,
    tol: f64,
) -> Result<QpSolution, QpError> {
    const REG: f64 = 1e-12;
    let n = problem.dim();
    let a = &problem.a_eq;
    let me = a.nrows();
    let mut kkt = DMatrix::<f64>::zeros(n + me, n + me);
    kkt.view_mut((0, 0), (n, n)).copy_from(q);
    for i in 0..n {
        kkt[(i, i)] += REG;
    }
    if me > 0 {
        kkt.view_mut((0, n), (n, me)).copy_from(&a.transpose());
        kkt.view_mut((n, 0), (me, n)).copy_from(a);
        for i in 0..me {
            kkt[(n + i, n + i)] = -REG;
        }
    }
    let mut rhs = DVector::<f64>::zeros(n + me);
    rhs.rows_mut(0, n).copy_from(&(-&problem.c));
    if me > 0 {
        rhs.rows_mut(n, me).copy_from(&problem.b_eq);
    }
    let lu = kkt.clone().lu();
    let mut sol = lu.solve(&rhs).ok_or(QpError::MaxIterations)?;
    // One iterative-refinement pass against the unregularized system.
    let mut pure = kkt;
    for i in 0..n {
        pure[(i, i)] -= REG;
    }
    for i in 0..me {
        pure[(n + i, n + i)] += REG;
    }
    let residual = &rhs - &pure * &sol;
    if let Some(correction) = pure.clone().lu().solve(&residual) {
        sol += correction;
    }
    let x = sol.rows(0, n).into_owned();
    let y = sol.rows(n, me).into_owned();
    let r_dual = q * &x + &problem.c + a.transpose() * &y;
    let r_eq = a * &x - &problem.b_eq;
    let residuals = KktResiduals {
        stationarity: inf_norm(&r_dual),
        feasibility: inf_norm(&r_eq),
        complementarity: 0.0,
    };
    if residuals.stationarity > tol {
        return Err(QpError::MaxIterations);
    }
    if residuals.feasibility > tol {
        return Err(QpError::Infeasible { certificate: None });
    }
    let objective = problem.objective(&x);
    Ok(QpSolution {
        x,
        eq_multipliers: y,
        in_multipliers: DVector::zeros(0),
        objective,
        residuals,
        iterations: 1,
    })
}

/// Validates the normalized dual iterate as a Farkas ray; `None` when it does
/// not actually certify emptiness.
fn farkas_certificate(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    g: &DMatrix<f64>,
    h: &DVector<f64>,
    y: &DVector<f64>,
    z: &DVector<f64>,
) -> Option<InfeasibilityCertificate> {
    let scale = inf_norm(y).max(inf_norm(z));
    if scale <= 0.0 || !scale.is_finite() {
        return None;
    }
    let eq_ray = y / scale;
    let in_ray = z.map(|v| (v / scale).max(0.0));
    let combination = a.transpose() * &eq_ray + g.transpose() * &in_ray;
    let combination_residual = inf_norm(&combination);
    let support_gap = b.dot(&eq_ray) + h.dot(&in_ray);
    if combination_residual <= 1e-6 && support_gap <= -1e-6 {
        Some(InfeasibilityCertificate {
            eq_ray,
            in_ray,
            combination_residual,
            support_gap,
        })
    } else {
        None
    }
}

/// Brute-force reference solver: solves the KKT system of every active subset
/// of inequality rows and keeps the feasible candidate with the smallest
/// objective. Exponential in the number of inequality rows — a testing aid
/// for problems with at most a handful of constraints.
pub fn qp_solve_by_enumeration(problem: &QpProblem, tol: f64) -> Result<QpSolution, QpError> {
    let q = problem.repaired_q()?;
    let n = problem.dim();
    let (g, h) = problem.assembled_inequalities();
    let a = &problem.a_eq;
    let me = a.nrows();
    let mi = g.nrows();
    assert!(mi <= 16, "enumeration reference is for tiny problems");

    let mut best: Option<(f64, DVector<f64>, Vec<usize>, DVector<f64>, DVector<f64>)> = None;
    for mask in 0..(1u32 << mi) {
        let active: Vec<usize> = (0..mi).filter(|i| mask & (1 << i) != 0).collect();
        let na = active.len();
        let dim = n + me + na;
        let mut kkt = DMatrix::<f64>::zeros(dim, dim);
        kkt.view_mut((0, 0), (n, n)).copy_from(&q);
        if me > 0 {
            kkt.view_mut((0, n), (n, me)).copy_from(&a.transpose());
            kkt.view_mut((n, 0), (me, n)).copy_from(a);
        }
        for (row, &i) in active.iter().enumerate() {
            let gi = g.row(i);
            kkt.view_mut((0, n + me + row), (n, 1))
                .copy_from(&gi.transpose());
            kkt.view_mut((n + me + row, 0), (1, n)).copy_from(&gi);
        }
        let mut rhs = DVector::<f64>::zeros(dim);
        rhs.rows_mut(0, n).copy_from(&(-&problem.c));
        if me > 0 {
            rhs.rows_mut(n, me).copy_from(&problem.b_eq);
        }
        for (row, &i) in active.iter().enumerate() {
            rhs[n + me + row] = h[i];
        }
        let Some(sol) = kkt.full_piv_lu().solve(&rhs) else {
            continue;
        };
        let x = sol.rows(0, n).into_owned();
        let feasible = (0..mi).all(|i| g.row(i).transpose().dot(&x) <= h[i] + 1e-8);
        if !feasible {
            continue;
        }
        let objective = problem.objective(&x);
        if best.as_ref().is_none_or(|(f, ..)| objective < *f) {
            let y = sol.rows(n, me).into_owned();
            let zw = sol.rows(n + me, na).into_owned();
            best = Some((objective, x, active, y, zw));
        }
    }

    let (objective, x, active, y, zw) = best.ok_or(QpError::Infeasible { certificate: None })?;
    let mut z = DVector::<f64>::zeros(mi);
    for (row, &i) in active.iter().enumerate() {
        z[i] = zw[row];
    }
    let r_dual = &q * &x + &problem.c + a.transpose() * &y + g.transpose() * &z;
    let slack = &h - &g * &x;
    let residuals = KktResiduals {
        stationarity: inf_norm(&r_dual),
        feasibility: inf_norm(&(a * &x - &problem.b_eq)).max(slack.min().min(0.0).abs()),
        complementarity: if mi == 0 {
            0.0
        } else {
            slack.component_mul(&z).sum() / mi as f64
        },
    };
    let _ = tol;
    Ok(QpSolution {
        x,
        eq_multipliers: y,
        in_multipliers: z,
        objective,
        residuals,
        iterations: 1 << mi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    const TOL: f64 = 1e-8;

    #[test]
    fn unconstrained_parabola() {
        // min (x−3)² = x² − 6x + 9 (constant dropped).
        let p = QpProblem::new(
            DMatrix::from_row_slice(1, 1, &[2.0]),
            DVector::from_vec(vec![-6.0]),
        );
        let sol = qp_solve(&p, TOL).unwrap();
        assert_abs_diff_eq!(sol.x[0], 3.0, epsilon = 1e-8);
        assert_abs_diff_eq!(sol.objective, -9.0, epsilon = 1e-8);
    }

    #[test]
    fn active_bound_has_multiplier_two() {
        // min x² s.t. x ≥ 1: stationarity 2x − z = 0 at the active bound.
        let p = QpProblem::new(
            DMatrix::from_row_slice(1, 1, &[2.0]),
            DVector::zeros(1),
        )
        .with_inequalities(
            DMatrix::from_row_slice(1, 1, &[-1.0]),
            DVector::from_vec(vec![-1.0]),
        );
        let sol = qp_solve(&p, TOL).unwrap();
        assert_abs_diff_eq!(sol.x[0], 1.0, epsilon = 1e-7);
        assert_abs_diff_eq!(sol.in_multipliers[0], 2.0, epsilon = 1e-6);
        assert!(sol.residuals.stationarity <= TOL);
        assert!(sol.residuals.feasibility <= TOL);
        assert!(sol.residuals.complementarity <= TOL);
    }

    #[test]
    fn contradictory_bounds_are_certified_infeasible() {
        // x ≤ 0 and x ≥ 1.
        let p = QpProblem::new(
            DMatrix::from_row_slice(1, 1, &[2.0]),
            DVector::zeros(1),
        )
        .with_inequalities(
            DMatrix::from_row_slice(2, 1, &[1.0, -1.0]),
            DVector::from_vec(vec![0.0, -1.0]),
        );
        match qp_solve(&p, TOL) {
            Err(QpError::Infeasible {
                certificate: Some(cert),
            }) => {
                assert!(cert.combination_residual <= 1e-6);
                assert!(cert.support_gap <= -1e-6);
                assert!(cert.in_ray.iter().all(|&v| v >= 0.0));
            }
            other => panic!("expected certified infeasibility, got {other:?}"),
        }
    }

    #[test]
    fn equality_constrained_direct_solve() {
        // min ½‖x‖² s.t. x₁ + x₂ = 2  →  x = (1,1), y = −1.
        let p = QpProblem::new(DMatrix::identity(2, 2), DVector::zeros(2)).with_equalities(
            DMatrix::from_row_slice(1, 2, &[1.0, 1.0]),
            DVector::from_vec(vec![2.0]),
        );
        let sol = qp_solve(&p, TOL).unwrap();
        assert_abs_diff_eq!(sol.x[0], 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(sol.x[1], 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(sol.eq_multipliers[0], -1.0, epsilon = 1e-9);
    }

    #[test]
    fn inconsistent_equalities_report_infeasible() {
        // x = 0 and x = 1 simultaneously.
        let p = QpProblem::new(
            DMatrix::from_row_slice(1, 1, &[2.0]),
            DVector::zeros(1),
        )
        .with_equalities(
            DMatrix::from_row_slice(2, 1, &[1.0, 1.0]),
            DVector::from_vec(vec![0.0, 1.0]),
        );
        assert!(matches!(
            qp_solve(&p, TOL),
            Err(QpError::Infeasible { .. })
        ));
    }

    #[test]
    fn box_bounds_fold_into_rows() {
        // min (x+2)² on [0, 5] → x = 0 with lower-bound multiplier 4.
        let p = QpProblem::new(
            DMatrix::from_row_slice(1, 1, &[2.0]),
            DVector::from_vec(vec![4.0]),
        )
        .with_box(&[0.0], &[5.0]);
        let sol = qp_solve(&p, TOL).unwrap();
        assert_abs_diff_eq!(sol.x[0], 0.0, epsilon = 1e-7);
        assert_eq!(sol.in_multipliers.len(), 2);
        assert_abs_diff_eq!(sol.in_multipliers[0], 4.0, epsilon = 1e-6);
    }

    #[test]
    fn singular_q_with_linear_term_and_bounds() {
        // min x₁² + x₂ with x₂ ∈ [0,1]: curvature only through the bound rows.
        let p = QpProblem::new(
            DMatrix::from_partial_diagonal(2, 2, &[2.0, 0.0]),
            DVector::from_vec(vec![0.0, 1.0]),
        )
        .with_box(&[f64::NEG_INFINITY, 0.0], &[f64::INFINITY, 1.0]);
        let sol = qp_solve(&p, TOL).unwrap();
        assert_abs_diff_eq!(sol.x[0], 0.0, epsilon = 1e-7);
        assert_abs_diff_eq!(sol.x[1], 0.0, epsilon = 1e-7);
    }

    #[test]
    fn negative_curvature_is_rejected() {
        let p = QpProblem::new(
            DMatrix::from_row_slice(1, 1, &[-1.0]),
            DVector::zeros(1),
        );
        assert!(matches!(
            qp_solve(&p, TOL),
            Err(QpError::NotPSD { min_eigenvalue }) if min_eigenvalue < -1e-8
        ));
    }

    #[test]
    fn round_off_negative_eigenvalue_is_repaired() {
        let p = QpProblem::new(
            DMatrix::from_partial_diagonal(2, 2, &[2.0, -1e-9]),
            DVector::from_vec(vec![-4.0, 0.0]),
        )
        .with_box(&[-1.0, -1.0], &[1.0, 1.0]);
        let sol = qp_solve(&p, TOL).unwrap();
        assert_abs_diff_eq!(sol.x[0], 1.0, epsilon = 1e-7);
    }

    fn random_pd_qp(rng: &mut ChaCha12Rng, n: usize, mi: usize, with_eq: bool) -> QpProblem {
        let r = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let q = &r * r.transpose() + DMatrix::identity(n, n) * 0.5;
        let c = DVector::from_fn(n, |_, _| rng.random_range(-2.0..2.0));
        // A feasible anchor point guarantees a nonempty interior.
        let anchor = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        let g = DMatrix::from_fn(mi, n, |_, _| rng.random_range(-1.0..1.0));
        let h = &g * &anchor + DVector::from_fn(mi, |_, _| rng.random_range(0.1..1.5));
        let mut p = QpProblem::new(q, c).with_inequalities(g, h);
        if with_eq {
            let a = DMatrix::from_fn(1, n, |_, _| rng.random_range(-1.0..1.0));
            let b = &a * &anchor;
            p = p.with_equalities(a, DVector::from_vec(vec![b[0]]));
        }
        p
    }

    #[test]
    fn matches_active_set_enumeration_on_random_instances() {
        let mut rng = ChaCha12Rng::seed_from_u64(42);
        for trial in 0..60 {
            let n = 2 + (trial % 3);
            let mi = 1 + (trial % 4);
            let p = random_pd_qp(&mut rng, n, mi, trial % 2 == 0);
            let ipm = qp_solve(&p, TOL).unwrap();
            let reference = qp_solve_by_enumeration(&p, TOL).unwrap();
            for i in 0..n {
                assert_abs_diff_eq!(ipm.x[i], reference.x[i], epsilon = 1e-6);
            }
            assert_abs_diff_eq!(ipm.objective, reference.objective, epsilon = 1e-6);
        }
    }

    #[test]
    fn lagrangian_dual_value_matches_objective() {
        // For PD Q the dual value at the returned multipliers is
        // −½ wᵀQ⁻¹w − yᵀb − zᵀh with w = c + A_eqᵀy + A_inᵀz.
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        for _ in 0..20 {
            let p = random_pd_qp(&mut rng, 3, 3, true);
            let sol = qp_solve(&p, TOL).unwrap();
            let (g, h) = p.assembled_inequalities();
            let w = &p.c + p.a_eq.transpose() * &sol.eq_multipliers
                + g.transpose() * &sol.in_multipliers;
            let qinv_w = p.q.clone().lu().solve(&w).unwrap();
            let dual = -0.5 * w.dot(&qinv_w)
                - sol.eq_multipliers.dot(&p.b_eq)
                - sol.in_multipliers.dot(&h);
            assert_abs_diff_eq!(dual, sol.objective, epsilon = 1e-6);
        }
    }

    #[test]
    fn scaling_objective_scales_multipliers_not_argmin() {
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        let p = random_pd_qp(&mut rng, 3, 3, false);
        let scale = 7.3;
        let scaled = QpProblem::new(&p.q * scale, &p.c * scale)
            .with_inequalities(p.a_in.clone(), p.b_in.clone());
        let sol = qp_solve(&p, TOL).unwrap();
        let sol_scaled = qp_solve(&scaled, TOL).unwrap();
        for i in 0..3 {
            assert_abs_diff_eq!(sol.x[i], sol_scaled.x[i], epsilon = 1e-6);
        }
        for i in 0..sol.in_multipliers.len() {
            assert_abs_diff_eq!(
                sol.in_multipliers[i] * scale,
                sol_scaled.in_multipliers[i],
                epsilon = 1e-5
            );
        }
    }

    #[test]
    fn dump_lists_every_block() {
        let p = QpProblem::new(DMatrix::identity(2, 2), DVector::zeros(2)).with_box(
            &[0.0, f64::NEG_INFINITY],
            &[1.0, f64::INFINITY],
        );
        let dump = p.dump();
        for name in ["Q 2 2", "c 2 1", "A_eq 0 2", "A_in 2 2"] {
            assert!(dump.contains(name), "missing block header {name}: {dump}");
        }
    }
}
