//! Slot-wise unit commitment with co-optimized frequency response.
//!
//! The system side of the coordination problem: `uc_cost` prices a fixed
//! fleet profile (the production-cost function F₀) and `aggregate_response`
//! solves the same program with the fleet profile freed and priced, i.e. the
//! aggregate best response to a price signal. Every constraint couples
//! variables of one half-hour slot only, so the day decomposes into one
//! small QP per slot.
//!
//! Grid-side quantities (production, response, demand, loss size) are in MWh
//! per slot; the fleet profile stays in mean W per device and enters through
//! the single conversion factor [`UcInstance::fleet_weight`].

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{watts_to_mwh, TclError};
use crate::qp::{qp_solve, InfeasibilityCertificate, QpError, QpProblem, QpSolution};
use crate::signal::{PriceSignal, Signal};

/// Absolute KKT tolerance for the slot QPs.
const QP_TOL: f64 = 1e-8;

/// One generation technology, treated as a continuously committable fleet.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Technology {
    pub name: String,
    /// No-load cost c₁, charged per MWh of committed capacity [£/MWh].
    pub no_load_cost: f64,
    /// Linear production cost c₂ [£/MWh].
    pub linear_cost: f64,
    /// Quadratic production cost c₃ [£/MWh²].
    pub quadratic_cost: f64,
    /// Production limit per slot [MWh]; one entry per slot.
    pub capacity: Vec<f64>,
    /// Fraction r of committed capacity usable as response headroom.
    pub headroom_fraction: f64,
    /// Slope s linking deliverable response to backed-off dispatch.
    pub fr_slope: f64,
    /// Inertia constant h [s].
    pub inertia: f64,
}

impl Technology {
    /// Technology with a flat (slot-independent) capacity profile.
    #[allow(clippy::too_many_arguments)]
    pub fn flat(
        name: &str,
        no_load_cost: f64,
        linear_cost: f64,
        quadratic_cost: f64,
        capacity: f64,
        slots: usize,
        headroom_fraction: f64,
        fr_slope: f64,
        inertia: f64,
    ) -> Self {
        Self {
            name: name.to_string(),
            no_load_cost,
            linear_cost,
            quadratic_cost,
            capacity: vec![capacity; slots],
            headroom_fraction,
            fr_slope,
            inertia,
        }
    }
}

/// Linear surrogate for the bilinear nadir-adequacy requirement
/// `threshold ≤ Ĥ·R̂` (total inertia × total response), expanded to first
/// order around a nominal operating point. Disabled by default because the
/// exact requirement is nonconvex.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NadirLinearization {
    /// Inertia level Ĥ₀ the product is linearized at [MWh·s].
    pub nominal_inertia: f64,
    /// Response level R̂₀ the product is linearized at [MWh].
    pub nominal_response: f64,
    /// Required product level [MWh²·s].
    pub threshold: f64,
}

/// Day-ahead commitment problem: technologies, inflexible demand, and the
/// frequency-security data for a single secured loss.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct UcInstance {
    pub technologies: Vec<Technology>,
    /// Inflexible demand per slot [MWh].
    pub demand: Vec<f64>,
    /// Number of devices behind the aggregate profile.
    pub population: usize,
    /// Secured generation loss ΔG_L [MWh per slot]; 0 disables the
    /// frequency-security rows entirely.
    pub loss_size: f64,
    /// Load damping Λ [1/Hz].
    pub damping: f64,
    /// Nominal frequency f₀ [Hz].
    pub f0: f64,
    /// Inertia constant of the lost unit h_L [s].
    pub loss_inertia: f64,
    /// Response delivery time t_d [s].
    pub delivery_time: f64,
    /// Instant t_ref at which the post-loss frequency excursion is checked [s].
    pub rocof_time: f64,
    /// Quasi-steady-state frequency limit Δf_qss [Hz].
    pub qss_limit: f64,
    /// Frequency limit Δf_ref during the rate-of-change window [Hz].
    pub rocof_limit: f64,
    /// Minimum dispatch fraction μ of committed response headroom.
    pub min_dispatch: f64,
    /// Upper bound on mean per-device consumption and response [W].
    pub p_on_max: f64,
    /// Slot length [s].
    pub slot_seconds: f64,
    /// Optional linearized nadir-adequacy row.
    pub nadir: Option<NadirLinearization>,
}

impl UcInstance {
    /// Microgrid-scale desk instance: four technologies, 48 half-hour slots,
    /// a double-peaked demand day and a varying wind profile. Sized so a
    /// fleet of a few hundred 180 W devices is a visible share (~10–15%) of
    /// system demand.
    pub fn desk(population: usize) -> Self {
        let slots = 48;
        let tau = std::f64::consts::TAU;
        let demand: Vec<f64> = (0..slots)
            .map(|l| {
                let h = (l as f64 + 0.5) * 0.5; // mid-slot hour of day
                0.33 + 0.06 * (tau * (h - 18.0) / 24.0).cos()
                    + 0.025 * (tau * (h - 8.5) / 12.0).cos()
            })
            .collect();
        let wind: Vec<f64> = (0..slots)
            .map(|l| {
                let h = (l as f64 + 0.5) * 0.5;
                0.15 + 0.09 * (tau * (h - 2.5) / 24.0).cos()
            })
            .collect();
        let technologies = vec![
            Technology::flat("nuclear", 1.0, 8.0, 4.0, 0.3, slots, 0.0, 0.0, 5.0),
            Technology::flat("ccgt", 2.0, 25.0, 15.0, 0.3, slots, 0.35, 0.4, 4.0),
            Technology::flat("ocgt", 0.5, 60.0, 40.0, 0.2, slots, 0.5, 0.6, 4.0),
            Technology {
                name: "wind".to_string(),
                no_load_cost: 0.2,
                linear_cost: 1.0,
                quadratic_cost: 2.0,
                capacity: wind,
                headroom_fraction: 0.0,
                fr_slope: 0.0,
                inertia: 0.5,
            },
        ];
        Self {
            technologies,
            demand,
            population,
            loss_size: 0.05,
            damping: 0.01,
            f0: 50.0,
            loss_inertia: 4.0,
            delivery_time: 10.0,
            rocof_time: 0.5,
            qss_limit: 0.5,
            rocof_limit: 0.8,
            min_dispatch: 0.3,
            p_on_max: 180.0,
            slot_seconds: 1800.0,
            nadir: None,
        }
    }

    pub fn slots(&self) -> usize {
        self.demand.len()
    }

    /// MWh drawn per slot by the whole fleet per W of mean device power.
    pub fn fleet_weight(&self) -> f64 {
        self.population as f64 * watts_to_mwh(1.0, self.slot_seconds)
    }

    pub fn validate(&self) -> Result<(), TclError> {
        let fail = |msg: String| Err(TclError::Invalid(msg));
        if self.technologies.is_empty() {
            return fail("at least one technology is required".into());
        }
        if self.demand.is_empty() {
            return fail("at least one slot is required".into());
        }
        if self.demand.iter().any(|d| !d.is_finite() || *d < 0.0) {
            return fail("demand must be finite and nonnegative".into());
        }
        for tech in &self.technologies {
            if tech.capacity.len() != self.slots() {
                return fail(format!(
                    "technology {} has {} capacity entries for {} slots",
                    tech.name,
                    tech.capacity.len(),
                    self.slots()
                ));
            }
            if tech.capacity.iter().any(|c| !c.is_finite() || *c < 0.0) {
                return fail(format!("technology {} has an invalid capacity", tech.name));
            }
            if tech.no_load_cost < 0.0 || tech.linear_cost < 0.0 || tech.quadratic_cost < 0.0 {
                return fail(format!("technology {} has a negative cost", tech.name));
            }
            if !(0.0..=1.0).contains(&tech.headroom_fraction) {
                return fail(format!(
                    "technology {} headroom fraction must lie in [0, 1]",
                    tech.name
                ));
            }
            if tech.fr_slope < 0.0 || tech.inertia < 0.0 {
                return fail(format!(
                    "technology {} slope and inertia must be nonnegative",
                    tech.name
                ));
            }
        }
        if self.population == 0 {
            return fail("population must be positive".into());
        }
        if !(self.loss_size >= 0.0) || !(self.damping >= 0.0) {
            return fail("loss size and damping must be nonnegative".into());
        }
        if !(self.f0 > 0.0) || !(self.slot_seconds > 0.0) || !(self.p_on_max > 0.0) {
            return fail("f0, slot length and p_on_max must be positive".into());
        }
        if self.loss_size > 0.0 && !(self.delivery_time > 0.0 && self.rocof_time > 0.0) {
            return fail("response timing constants must be positive when a loss is secured".into());
        }
        if self.loss_inertia < 0.0 || self.qss_limit < 0.0 || self.rocof_limit < 0.0 {
            return fail("frequency limits and loss inertia must be nonnegative".into());
        }
        if !(0.0..=1.0).contains(&self.min_dispatch) {
            return fail("minimum dispatch fraction must lie in [0, 1]".into());
        }
        Ok(())
    }
}

/// Committed fraction, production and booked response per technology for one
/// slot (production/response in MWh per slot).
#[derive(Clone, Debug)]
pub struct SlotDispatch {
    pub commitment: Vec<f64>,
    pub production: Vec<f64>,
    pub response: Vec<f64>,
}

/// Full-day dispatch with the minimized production cost [£].
#[derive(Clone, Debug)]
pub struct Dispatch {
    pub slots: Vec<SlotDispatch>,
    pub cost: f64,
}

/// Whether the fleet columns are data (cost evaluation) or decision
/// variables with price rewards (best response).
enum FleetColumns {
    Fixed { u: f64, r: f64 },
    Free { energy_price: f64, response_price: f64 },
}

/// Builds one slot's QP together with the names of every assembled
/// inequality row (explicit rows, then lower-bound rows, then upper-bound
/// rows — the ordering of the solver's multiplier vector and Farkas ray).
fn build_slot_qp(
    uc: &UcInstance,
    slot: usize,
    fleet: &FleetColumns,
) -> (QpProblem, Vec<String>) {
    let z = uc.technologies.len();
    let free = matches!(fleet, FleetColumns::Free { .. });
    let dim = 3 * z + if free { 2 } else { 0 };
    let w = uc.fleet_weight();
    let demand = uc.demand[slot];
    let h_ix = |j: usize| j;
    let g_ix = |j: usize| z + j;
    let r_ix = |j: usize| 2 * z + j;
    let u_ix = 3 * z;
    let rt_ix = 3 * z + 1;

    let mut q = DMatrix::zeros(dim, dim);
    let mut c = DVector::zeros(dim);
    for (j, tech) in uc.technologies.iter().enumerate() {
        q[(g_ix(j), g_ix(j))] = 2.0 * tech.quadratic_cost;
        c[h_ix(j)] = tech.no_load_cost * tech.capacity[slot];
        c[g_ix(j)] = tech.linear_cost;
    }
    if let FleetColumns::Free {
        energy_price,
        response_price,
    } = fleet
    {
        c[u_ix] = -w * energy_price;
        c[rt_ix] = -w * response_price;
    }

    // Energy balance: Σ_j G_j = demand + fleet draw.
    let mut a_eq = DMatrix::zeros(1, dim);
    let mut b_eq = DVector::zeros(1);
    for j in 0..z {
        a_eq[(0, g_ix(j))] = 1.0;
    }
    match fleet {
        FleetColumns::Fixed { u, .. } => b_eq[0] = demand + w * u,
        FleetColumns::Free { .. } => {
            a_eq[(0, u_ix)] = -w;
            b_eq[0] = demand;
        }
    }

    let mut rows: Vec<(Vec<f64>, f64, String)> = Vec::new();
    let mut push = |coeffs: &[(usize, f64)], rhs: f64, name: String| {
        let mut row = vec![0.0; dim];
        for &(i, v) in coeffs {
            row[i] += v;
        }
        rows.push((row, rhs, name));
    };

    for (j, tech) in uc.technologies.iter().enumerate() {
        let cap = tech.capacity[slot];
        push(
            &[(g_ix(j), 1.0), (h_ix(j), -cap)],
            0.0,
            format!("production[{}]", tech.name),
        );
        push(
            &[(r_ix(j), 1.0), (h_ix(j), -tech.headroom_fraction * cap)],
            0.0,
            format!("headroom[{}]", tech.name),
        );
        push(
            &[
                (r_ix(j), 1.0),
                (g_ix(j), tech.fr_slope),
                (h_ix(j), -tech.fr_slope * cap),
            ],
            0.0,
            format!("slope[{}]", tech.name),
        );
        let min_coef = uc.min_dispatch * tech.headroom_fraction * cap;
        if min_coef > 0.0 {
            push(
                &[(h_ix(j), min_coef), (g_ix(j), -1.0)],
                0.0,
                format!("min-dispatch[{}]", tech.name),
            );
        }
    }

    if uc.loss_size > 0.0 {
        // Post-loss quasi-steady state: booked response plus load damping
        // covers the loss. Damping acts on the surviving load, i.e. demand
        // plus fleet draw net of delivered fleet response.
        let damp = uc.damping * uc.qss_limit;
        let mut coeffs: Vec<(usize, f64)> = (0..z).map(|j| (r_ix(j), -1.0)).collect();
        let mut rhs = -uc.loss_size + damp * demand;
        match fleet {
            FleetColumns::Fixed { u, r } => rhs += damp * w * (u - r) + w * r,
            FleetColumns::Free { .. } => {
                coeffs.push((u_ix, -damp * w));
                coeffs.push((rt_ix, w * (damp - 1.0)));
            }
        }
        push(&coeffs, rhs, "qss".to_string());

        // Frequency excursion at the end of the rate-of-change window,
        // limited by committed inertia (net of the lost unit's) plus the
        // ramping response.
        let kappa = 4.0 * uc.rocof_limit * uc.delivery_time / uc.f0;
        let t2 = uc.rocof_time * uc.rocof_time;
        let mut coeffs: Vec<(usize, f64)> = Vec::new();
        for (j, tech) in uc.technologies.iter().enumerate() {
            coeffs.push((h_ix(j), -kappa * tech.inertia * tech.capacity[slot]));
            coeffs.push((r_ix(j), -t2));
        }
        let mut rhs = -2.0 * uc.loss_size * uc.rocof_time * uc.delivery_time
            - kappa * uc.loss_inertia * uc.loss_size;
        match fleet {
            FleetColumns::Fixed { r, .. } => rhs += t2 * w * r,
            FleetColumns::Free { .. } => coeffs.push((rt_ix, -t2 * w)),
        }
        push(&coeffs, rhs, "rocof".to_string());
    }

    if let Some(nadir) = &uc.nadir {
        // R̂₀·Ĥ + Ĥ₀·R̂ ≥ threshold + Ĥ₀·R̂₀, the tangent-plane relaxation of
        // threshold ≤ Ĥ·R̂ at (Ĥ₀, R̂₀), with Ĥ = (Σ h_j H_j G^max_j −
        // h_L·ΔG_L)/f₀ and R̂ the total booked response.
        let mut coeffs: Vec<(usize, f64)> = Vec::new();
        for (j, tech) in uc.technologies.iter().enumerate() {
            coeffs.push((
                h_ix(j),
                -nadir.nominal_response * tech.inertia * tech.capacity[slot] / uc.f0,
            ));
            coeffs.push((r_ix(j), -nadir.nominal_inertia));
        }
        let mut rhs = -(nadir.threshold
            + nadir.nominal_inertia * nadir.nominal_response
            + nadir.nominal_response * uc.loss_inertia * uc.loss_size / uc.f0);
        match fleet {
            FleetColumns::Fixed { r, .. } => rhs += nadir.nominal_inertia * w * r,
            FleetColumns::Free { .. } => coeffs.push((rt_ix, -nadir.nominal_inertia * w)),
        }
        push(&coeffs, rhs, "nadir".to_string());
    }

    if free {
        push(
            &[(rt_ix, 1.0), (u_ix, -1.0)],
            0.0,
            "response within consumption".to_string(),
        );
    }

    let mut a_in = DMatrix::zeros(rows.len(), dim);
    let mut b_in = DVector::zeros(rows.len());
    let mut names = Vec::with_capacity(rows.len() + 2 * dim);
    for (i, (row, rhs, name)) in rows.into_iter().enumerate() {
        a_in.row_mut(i).copy_from_slice(&row);
        b_in[i] = rhs;
        names.push(name);
    }

    let lower: Vec<f64> = vec![0.0; dim];
    let mut upper: Vec<f64> = vec![f64::INFINITY; dim];
    for j in 0..z {
        upper[h_ix(j)] = 1.0;
    }
    if free {
        upper[u_ix] = uc.p_on_max;
        upper[rt_ix] = uc.p_on_max;
    }
    let mut var_names: Vec<String> = Vec::with_capacity(dim);
    for kind in ["H", "G", "R"] {
        for tech in &uc.technologies {
            var_names.push(format!("{kind}[{}]", tech.name));
        }
    }
    if free {
        var_names.push("U".to_string());
        var_names.push("R_fleet".to_string());
    }
    for (v, lo) in var_names.iter().zip(&lower) {
        if lo.is_finite() {
            names.push(format!("{v} lower bound"));
        }
    }
    for (v, up) in var_names.iter().zip(&upper) {
        if up.is_finite() {
            names.push(format!("{v} upper bound"));
        }
    }

    let problem = QpProblem::new(q, c)
        .with_equalities(a_eq, b_eq)
        .with_inequalities(a_in, b_in)
        .with_box(&lower, &upper);
    (problem, names)
}

/// Names the constraint rows that a Farkas ray weights most heavily.
fn binding_report(certificate: Option<&InfeasibilityCertificate>, names: &[String]) -> String {
    let Some(cert) = certificate else {
        return "no separating certificate was recovered".to_string();
    };
    let mut weighted: Vec<(f64, String)> = Vec::new();
    if let Some(y) = cert.eq_ray.iter().next() {
        weighted.push((y.abs(), "balance".to_string()));
    }
    for (name, zr) in names.iter().zip(cert.in_ray.iter()) {
        weighted.push((zr.abs(), name.clone()));
    }
    weighted.sort_by(|a, b| b.0.total_cmp(&a.0));
    let peak = weighted.first().map(|(v, _)| *v).unwrap_or(0.0);
    if peak <= 0.0 {
        return "certificate carries no weight".to_string();
    }
    let picked: Vec<String> = weighted
        .into_iter()
        .take_while(|(v, _)| *v >= 0.05 * peak)
        .take(6)
        .map(|(v, name)| format!("{name} (weight {v:.2e})"))
        .collect();
    picked.join(", ")
}

fn solve_slot(
    problem: &QpProblem,
    names: &[String],
    slot: usize,
) -> Result<QpSolution, TclError> {
    match qp_solve(problem, QP_TOL) {
        Ok(solution) => Ok(solution),
        Err(QpError::Infeasible { certificate }) => Err(TclError::Infeasible {
            slot,
            report: binding_report(certificate.as_ref(), names),
            source: QpError::Infeasible { certificate },
        }),
        Err(source) => Err(TclError::Dispatch { slot, source }),
    }
}

fn check_signal_shape(uc: &UcInstance, signal: &Signal) -> Result<(), TclError> {
    if signal.shape().channels() != 2 {
        return Err(TclError::Invalid(format!(
            "expected a 2-channel (consumption, response) signal, got {} channels",
            signal.shape().channels()
        )));
    }
    if signal.shape().slots() != uc.slots() {
        return Err(TclError::PriceSlotMismatch {
            got: signal.shape().slots(),
            want: uc.slots(),
        });
    }
    Ok(())
}

fn extract_dispatch(x: &DVector<f64>, z: usize) -> SlotDispatch {
    SlotDispatch {
        commitment: (0..z).map(|j| x[j].clamp(0.0, 1.0)).collect(),
        production: (z..2 * z).map(|j| x[j].max(0.0)).collect(),
        response: (2 * z..3 * z).map(|j| x[j].max(0.0)).collect(),
    }
}

/// Minimized production cost of serving the inflexible demand plus a fixed
/// fleet profile (consumption channel 0, booked response channel 1, both in
/// mean W per device).
pub fn uc_cost(uc: &UcInstance, profile: &Signal) -> Result<Dispatch, TclError> {
    uc.validate()?;
    check_signal_shape(uc, profile)?;
    if !profile.is_finite() {
        return Err(TclError::Invalid("fleet profile contains non-finite values".into()));
    }
    let slack = 1e-6 * (1.0 + uc.p_on_max);
    for l in 0..uc.slots() {
        let u = profile.get(0, l);
        let r = profile.get(1, l);
        if u < -slack || u > uc.p_on_max + slack || r < -slack || r > u + slack {
            return Err(TclError::Invalid(format!(
                "fleet profile out of bounds in slot {l}: consumption {u}, response {r}"
            )));
        }
    }

    let z = uc.technologies.len();
    let mut slots = Vec::with_capacity(uc.slots());
    let mut cost = 0.0;
    for l in 0..uc.slots() {
        let fixed = FleetColumns::Fixed {
            u: profile.get(0, l),
            r: profile.get(1, l).clamp(0.0, profile.get(0, l).max(0.0)),
        };
        let (problem, names) = build_slot_qp(uc, l, &fixed);
        let solution = solve_slot(&problem, &names, l)?;
        cost += solution.objective;
        slots.push(extract_dispatch(&solution.x, z));
    }
    Ok(Dispatch { slots, cost })
}

/// Joint slot solves with the fleet columns freed: returns the profile that
/// minimizes production cost minus the fleet's price revenue, and the
/// minimized value itself.
fn aggregate_solve(uc: &UcInstance, lambda: &PriceSignal) -> Result<(Signal, f64), TclError> {
    uc.validate()?;
    check_signal_shape(uc, lambda)?;
    if !lambda.is_finite() {
        return Err(TclError::Invalid("price signal contains non-finite values".into()));
    }
    let z = uc.technologies.len();
    let mut profile = Signal::zeros(lambda.shape());
    let mut objective = 0.0;
    for l in 0..uc.slots() {
        let free = FleetColumns::Free {
            energy_price: lambda.get(0, l),
            response_price: lambda.get(1, l),
        };
        let (problem, names) = build_slot_qp(uc, l, &free);
        let solution = solve_slot(&problem, &names, l).inspect_err(|_| {
            if std::env::var_os("UZAWA_QP_DUMP").is_some() {
                eprintln!(
                    "slot {l} failed with prices ({:?}, {:?})",
                    lambda.get(0, l),
                    lambda.get(1, l)
                );
            }
        })?;
        objective += solution.objective;
        let u = solution.x[3 * z].clamp(0.0, uc.p_on_max);
        let r = solution.x[3 * z + 1].clamp(0.0, u);
        profile.set(0, l, u);
        profile.set(1, l, r);
    }
    Ok((profile, objective))
}

/// Fleet profile minimizing production cost minus the fleet revenue
/// n·Σ_ℓ (λ_u(ℓ)·U(ℓ) + λ_r(ℓ)·R(ℓ))·Δh — the aggregate best response to a
/// price signal (both channels in the same orientation as the fleet pays).
pub fn aggregate_response(uc: &UcInstance, lambda: &PriceSignal) -> Result<Signal, TclError> {
    Ok(aggregate_solve(uc, lambda)?.0)
}


#[cfg(test)]
mod scratch {
    use super::*;

    #[test]
    fn failing_slot_33() {
        let uc = UcInstance::desk(300);
        let fleet = FleetColumns::Free {
            energy_price: 24.814229,
            response_price: -2.417902,
        };
        let (problem, _names) = build_slot_qp(&uc, 33, &fleet);
        match crate::qp::qp_solve(&problem, 1e-8) {
            Ok(s) => eprintln!("solved in {} iterations, U = {:.6}", s.iterations, s.x[3 * uc.technologies.len()]),
            Err(e) => eprintln!("failed: {e}"),
        }
    }

    #[test]
    fn failing_slot_6() {
        let uc = UcInstance::desk(400);
        let fleet = FleetColumns::Free {
            energy_price: 0.0,
            response_price: 0.0,
        };
        let (problem, _names) = build_slot_qp(&uc, 6, &fleet);
        match crate::qp::qp_solve(&problem, 1e-8) {
            Ok(s) => eprintln!("solved in {} iterations, U = {:.6}", s.iterations, s.x[3 * uc.technologies.len()]),
            Err(e) => eprintln!("failed: {e}"),
        }
    }

    #[test]
    fn failing_slot_42() {
        let uc = UcInstance::desk(300);
        let fleet = FleetColumns::Free {
            energy_price: 10.80251696000448,
            response_price: -10.316013324486985,
        };
        let (problem, _names) = build_slot_qp(&uc, 42, &fleet);
        match crate::qp::qp_solve(&problem, 1e-8) {
            Ok(s) => eprintln!("solved in {} iterations, U = {:.6}", s.iterations, s.x[3 * uc.technologies.len()]),
            Err(e) => eprintln!("failed: {e}"),
        }
    }
}
