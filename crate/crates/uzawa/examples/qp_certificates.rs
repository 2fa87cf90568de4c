//! The dense convex QP solver: KKT multipliers on a feasible problem and a
//! Farkas infeasibility certificate on an unsatisfiable one.
//!
//! ```text
//! cargo run --example qp_certificates
//! ```

use nalgebra::{DMatrix, DVector};
use uzawa::{qp_solve, QpError, QpProblem};

fn main() -> anyhow::Result<()> {
    // minimize x² + y² subject to x + y = 1, x ≤ 0.3.
    let q = DMatrix::from_diagonal_element(2, 2, 2.0);
    let c = DVector::zeros(2);
    let problem = QpProblem::new(q.clone(), c.clone())
        .with_equalities(
            DMatrix::from_row_slice(1, 2, &[1.0, 1.0]),
            DVector::from_element(1, 1.0),
        )
        .with_inequalities(
            DMatrix::from_row_slice(1, 2, &[1.0, 0.0]),
            DVector::from_element(1, 0.3),
        );
    let solution = qp_solve(&problem, 1e-8)?;
    println!("constrained minimum: x = {:.4}, y = {:.4}", solution.x[0], solution.x[1]);
    println!("objective:           {:.4}", solution.objective);
    println!("equality multiplier: {:.4}", solution.eq_multipliers[0]);
    println!(
        "cap multiplier:      {:.4} (positive: the cap x ≤ 0.3 binds)",
        solution.in_multipliers[0]
    );
    println!(
        "KKT residuals: stationarity {:.1e}, feasibility {:.1e}",
        solution.residuals.stationarity, solution.residuals.feasibility
    );

    // The same objective over an empty set: x + y = 1 with x, y ≤ 0.2.
    let infeasible = QpProblem::new(q, c)
        .with_equalities(
            DMatrix::from_row_slice(1, 2, &[1.0, 1.0]),
            DVector::from_element(1, 1.0),
        )
        .with_box(&[f64::NEG_INFINITY; 2], &[0.2; 2]);
    match qp_solve(&infeasible, 1e-8) {
        Err(QpError::Infeasible {
            certificate: Some(ray),
        }) => {
            println!("\nno feasible point; Farkas certificate:");
            println!("  equality ray      {:?}", ray.eq_ray.as_slice());
            println!("  inequality ray    {:?}", ray.in_ray.as_slice());
            println!(
                "  A-combination residual {:.2e} (≈ 0), support gap {:.2e} (< 0)",
                ray.combination_residual, ray.support_gap
            );
        }
        other => anyhow::bail!("expected an infeasibility certificate, got {other:?}"),
    }
    Ok(())
}
