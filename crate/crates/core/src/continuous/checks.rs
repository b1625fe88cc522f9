use super::{
    check_f_relatedness, distance, integrate, norm, ContinuousError, ContinuousSystem, IntegrateOptions,
    Result, SmoothMap, Termination, Trajectory,
};
use crate::report::{format_vec, CheckReport};

#[derive(Debug, Clone, PartialEq)]
pub struct PreservationReport {
    pub report: CheckReport,
    /// Time interval actually compared.
    pub span: (f64, f64),
    /// Set when either solution ended before the requested span.
    pub truncated: bool,
}

/// Compares `f ∘ φ_{X,x0}` with `φ_{Y,f(x0)}` on the union of both step grids.
///
/// Relatedness of `f` is verified first at the grid points of `φ_X`; a
/// failure there is reported as a precondition error.
pub fn check_solution_preservation(
    f: &SmoothMap,
    src: &ContinuousSystem,
    dst: &ContinuousSystem,
    x0: &[f64],
    t_end: f64,
    tol: f64,
    opts: &IntegrateOptions,
) -> Result<PreservationReport> {
    let phi_x = integrate(src, x0, t_end, opts)?;
    let y0 = f.apply(x0)?;
    let phi_y = integrate(dst, &y0, t_end, opts)?;

    let (lo, hi) = if t_end > 0.0 {
        (0.0, phi_x.last_time().min(phi_y.last_time()))
    } else {
        (phi_x.first_time().max(phi_y.first_time()), 0.0)
    };
    let truncated = phi_x.termination != Termination::ReachedSpan || phi_y.termination != Termination::ReachedSpan;

    let along: Vec<Vec<f64>> = phi_x
        .times
        .iter()
        .zip(&phi_x.states)
        .filter(|(t, _)| (lo..=hi).contains(*t))
        .map(|(_, x)| x.clone())
        .collect();
    let related = check_f_relatedness(f, src, dst, &along, tol)?;
    if !related.passed() {
        return Err(ContinuousError::Precondition(format!(
            "f-relatedness fails along the source trajectory: {related}"
        )));
    }

    let mut grid: Vec<f64> = phi_x
        .times
        .iter()
        .chain(&phi_y.times)
        .copied()
        .filter(|t| (lo..=hi).contains(t))
        .collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();

    let mut worst = 0.0f64;
    let mut witness = None;
    for &t in &grid {
        let (Some(xt), Some(yt)) = (phi_x.state_at(t), phi_y.state_at(t)) else {
            continue;
        };
        let fx = f.apply(&xt)?;
        let r = distance(&fx, &yt);
        if r > worst || r.is_nan() {
            worst = r;
            witness = Some(format!("t = {t}: f(φ_X(t)) = {}, φ_Y(t) = {}", format_vec(&fx), format_vec(&yt)));
        }
    }
    Ok(PreservationReport {
        report: CheckReport::numeric(worst, tol, grid.len(), witness),
        span: (lo, hi),
        truncated,
    })
}

/// Checks that `t ↦ φ_{X,x0}(t)` closes up after `period`, i.e. factors through
/// the circle of circumference `period` with its unit-speed field.
pub fn check_periodic_orbit(
    sys: &ContinuousSystem,
    x0: &[f64],
    period: f64,
    tol: f64,
    opts: &IntegrateOptions,
) -> Result<CheckReport> {
    if period.is_nan() || period <= 0.0 || period.is_infinite() {
        return Err(ContinuousError::InvalidSpan(period));
    }
    let traj = integrate(sys, x0, period, opts)?;
    if traj.termination != Termination::ReachedSpan {
        return Err(ContinuousError::Truncated { at: traj.t_hi, requested: period, termination: traj.termination });
    }
    let end = traj.final_state();
    let closure = distance(end, x0);
    let witness = format!("φ({period}) = {}, x0 = {}", format_vec(end), format_vec(x0));
    Ok(CheckReport::numeric(closure, tol, traj.len(), Some(witness)))
}

/// Relatedness of a computed solution viewed as a map from `(interval, d/dt)`:
/// at each interior grid point, a fourth-order central difference of the
/// dense output is compared with `X(φ(t))`.
///
/// The residual is the largest defect relative to the local tolerance
/// `atol + rtol·‖φ(t)‖`, checked against `factor`.
pub fn solution_defect(
    sys: &ContinuousSystem,
    traj: &Trajectory,
    opts: &IntegrateOptions,
    factor: f64,
) -> Result<CheckReport> {
    let mut worst = 0.0f64;
    let mut witness = None;
    let mut samples = 0;
    for k in 1..traj.len().saturating_sub(1) {
        let t = traj.times[k];
        let x = &traj.states[k];
        let local = opts.atol + opts.rtol * norm(x);
        let step = (t - traj.times[k - 1]).min(traj.times[k + 1] - t);
        let h = (1e-4 * step).max(4.0 * f64::EPSILON * norm(x).max(1.0) / local).min(0.25 * step);
        let at = |s: f64| traj.state_at(s).expect("stencil lies inside the trajectory");
        let (m2, m1, p1, p2) = (at(t - 2.0 * h), at(t - h), at(t + h), at(t + 2.0 * h));
        let fd: Vec<f64> = (0..m2.len())
            .map(|i| (m2[i] - 8.0 * m1[i] + 8.0 * p1[i] - p2[i]) / (12.0 * h))
            .collect();
        let v = sys.eval(x, t)?;
        let r = distance(&fd, &v) / local;
        samples += 1;
        if r > worst {
            worst = r;
            witness = Some(format!("t = {t}: φ'(t) ≈ {}, X(φ(t)) = {}", format_vec(&fd), format_vec(&v)));
        }
    }
    Ok(CheckReport::numeric(worst, factor, samples, witness))
}
