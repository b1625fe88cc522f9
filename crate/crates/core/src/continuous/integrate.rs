//! Adaptive Dormand–Prince 5(4) integration with cubic Hermite dense output,
//! blow-up detection and domain-exit bisection.

use std::io::{self, Write};

use serde::Serialize;

use super::{norm, ContinuousError, ContinuousSystem, Result};
use crate::report::format_vec;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrateOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Integration stops with [`Termination::BlowUp`] once `‖x‖` exceeds this.
    pub escape_threshold: f64,
    /// Time resolution of the domain-exit bisection.
    pub exit_tolerance: f64,
    pub max_steps: usize,
    pub initial_step: Option<f64>,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        IntegrateOptions {
            rtol: 1e-9,
            atol: 1e-12,
            escape_threshold: 1e8,
            exit_tolerance: 1e-9,
            max_steps: 1_000_000,
            initial_step: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    ReachedSpan,
    BlowUp,
    LeftDomain,
}

/// Accepted steps of a solution curve.
///
/// `times` is strictly increasing, also for backward integration. `t_lo` and
/// `t_hi` are the reported endpoints of the computed interval: for a
/// domain exit the endpoint is the bisected crossing time, which lies just
/// beyond the last stored sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub derivatives: Vec<Vec<f64>>,
    pub t_lo: f64,
    pub t_hi: f64,
    pub termination: Termination,
}

impl Trajectory {
    pub fn dimension(&self) -> usize {
        self.states.first().map_or(0, Vec::len)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn first_time(&self) -> f64 {
        self.times[0]
    }

    pub fn last_time(&self) -> f64 {
        *self.times.last().expect("trajectory has at least the initial point")
    }

    pub fn final_state(&self) -> &[f64] {
        self.states.last().expect("trajectory has at least the initial point")
    }

    /// Dense output on `[first_time, last_time]`.
    pub fn state_at(&self, t: f64) -> Option<Vec<f64>> {
        if self.times.is_empty() || t < self.first_time() || t > self.last_time() {
            return None;
        }
        let k = match self.times.binary_search_by(|s| s.partial_cmp(&t).expect("finite times")) {
            Ok(k) => return Some(self.states[k].clone()),
            Err(k) => k,
        };
        let (i, j) = (k - 1, k);
        Some(hermite(
            self.times[i],
            &self.states[i],
            &self.derivatives[i],
            self.times[j],
            &self.states[j],
            &self.derivatives[j],
            t,
        ))
    }

    /// CSV with header `t,x1,...,xn`, one row per accepted step, 17
    /// significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        let n = self.dimension();
        let header: Vec<String> = std::iter::once("t".to_string())
            .chain((1..=n).map(|i| format!("x{i}")))
            .collect();
        writeln!(w, "{}", header.join(","))?;
        for (t, x) in self.times.iter().zip(&self.states) {
            write!(w, "{t:.16e}")?;
            for v in x {
                write!(w, ",{v:.16e}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

fn hermite(t0: f64, y0: &[f64], f0: &[f64], t1: f64, y1: &[f64], f1: &[f64], t: f64) -> Vec<f64> {
    let h = t1 - t0;
    let s = (t - t0) / h;
    let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
    let h10 = s * (1.0 - s) * (1.0 - s);
    let h01 = s * s * (3.0 - 2.0 * s);
    let h11 = s * s * (s - 1.0);
    (0..y0.len())
        .map(|i| h00 * y0[i] + h10 * h * f0[i] + h01 * y1[i] + h11 * h * f1[i])
        .collect()
}

fn hermite_derivative(t0: f64, y0: &[f64], f0: &[f64], t1: f64, y1: &[f64], f1: &[f64], t: f64) -> Vec<f64> {
    let h = t1 - t0;
    let s = (t - t0) / h;
    let d00 = 6.0 * s * (s - 1.0) / h;
    let d10 = (1.0 - s) * (1.0 - 3.0 * s);
    let d01 = -d00;
    let d11 = s * (3.0 * s - 2.0);
    (0..y0.len())
        .map(|i| d00 * y0[i] + d10 * f0[i] + d01 * y1[i] + d11 * f1[i])
        .collect()
}

// Dormand–Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// Fifth-order weights minus embedded fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 5.0;

/// Right-hand side in the reparametrised time `s = dir · t`, so that every
/// integration runs forward in `s`.
struct Rhs<'a> {
    sys: &'a ContinuousSystem,
    dir: f64,
}

impl Rhs<'_> {
    fn eval(&self, s: f64, y: &[f64]) -> Option<Vec<f64>> {
        let v = self.sys.eval(y, self.dir * s).ok()?;
        Some(v.into_iter().map(|vi| self.dir * vi).collect())
    }
}

fn error_norm(y: &[f64], y_new: &[f64], err: &[f64], opts: &IntegrateOptions) -> f64 {
    let n = y.len().max(1) as f64;
    let sum: f64 = (0..y.len())
        .map(|i| {
            let scale = opts.atol + opts.rtol * y[i].abs().max(y_new[i].abs());
            (err[i] / scale).powi(2)
        })
        .sum();
    (sum / n).sqrt()
}

fn initial_step(rhs: &Rhs<'_>, y0: &[f64], f0: &[f64], span: f64, opts: &IntegrateOptions) -> f64 {
    let scaled = |v: &[f64]| {
        let n = v.len().max(1) as f64;
        (v.iter()
            .zip(y0)
            .map(|(vi, yi)| (vi / (opts.atol + opts.rtol * yi.abs())).powi(2))
            .sum::<f64>()
            / n)
            .sqrt()
    };
    let d0 = scaled(y0);
    let d1 = scaled(f0);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let h0 = h0.min(span);
    let y1: Vec<f64> = y0.iter().zip(f0).map(|(y, f)| y + h0 * f).collect();
    let d2 = match rhs.eval(h0, &y1) {
        Some(f1) => {
            let diff: Vec<f64> = f1.iter().zip(f0).map(|(a, b)| a - b).collect();
            scaled(&diff) / h0
        }
        None => return h0 * 1e-3,
    };
    let dmax = d1.max(d2);
    let h1 = if dmax <= 1e-15 { (h0 * 1e-3).max(1e-6) } else { (0.01 / dmax).powf(1.0 / 5.0) };
    (100.0 * h0).min(h1).min(span)
}

struct Step {
    y_new: Vec<f64>,
    f_new: Vec<f64>,
    err: f64,
}

fn try_step(rhs: &Rhs<'_>, s: f64, y: &[f64], f: &[f64], h: f64, opts: &IntegrateOptions) -> Option<Step> {
    let n = y.len();
    let mut k: Vec<Vec<f64>> = Vec::with_capacity(7);
    k.push(f.to_vec());
    for stage in 1..7 {
        let yi: Vec<f64> = (0..n)
            .map(|i| y[i] + h * (0..stage).map(|j| A[stage][j] * k[j][i]).sum::<f64>())
            .collect();
        if yi.iter().any(|v| !v.is_finite()) {
            return None;
        }
        k.push(rhs.eval(s + C[stage] * h, &yi)?);
    }
    // The last stage is evaluated at the fifth-order solution (FSAL).
    let y_new: Vec<f64> = (0..n)
        .map(|i| y[i] + h * (0..6).map(|j| A[6][j] * k[j][i]).sum::<f64>())
        .collect();
    let err_vec: Vec<f64> = (0..n).map(|i| h * (0..7).map(|j| E[j] * k[j][i]).sum::<f64>()).collect();
    let err = error_norm(y, &y_new, &err_vec, opts);
    if !err.is_finite() {
        return None;
    }
    Some(Step { y_new, f_new: k.pop().expect("seven stages"), err })
}

fn exits(sys: &ContinuousSystem, from: &[f64], to: &[f64], opts: &IntegrateOptions) -> bool {
    !sys.domain().in_box(to) || sys.domain().segment_hits_puncture(from, to, opts.exit_tolerance)
}

/// Integrates `ẋ = X(x)` from `x0` at `t = 0` to `t_end` (which may be
/// negative for backward integration).
pub fn integrate(sys: &ContinuousSystem, x0: &[f64], t_end: f64, opts: &IntegrateOptions) -> Result<Trajectory> {
    if !t_end.is_finite() || t_end == 0.0 {
        return Err(ContinuousError::InvalidSpan(t_end));
    }
    sys.require_inside(x0)?;
    let dir = t_end.signum();
    let span = t_end.abs();
    let rhs = Rhs { sys, dir };

    let f0: Vec<f64> = sys.eval(x0, 0.0)?.into_iter().map(|v| dir * v).collect();

    let mut s_list = vec![0.0];
    let mut ys = vec![x0.to_vec()];
    let mut fs = vec![f0.clone()];
    let (mut s, mut y, mut f) = (0.0f64, x0.to_vec(), f0);
    let mut h = opts.initial_step.unwrap_or_else(|| initial_step(&rhs, &y, &f, span, opts));
    let mut end_s = span;
    let mut termination = Termination::ReachedSpan;
    let mut steps = 0usize;
    let mut last_rejected = false;

    while span - s > 1e-14 * span.max(1.0) {
        steps += 1;
        if steps > opts.max_steps {
            return Err(ContinuousError::MaxSteps { at: dir * s });
        }
        h = h.min(span - s);
        if h <= 16.0 * f64::EPSILON * s.abs().max(1.0) {
            return Err(ContinuousError::StepSizeUnderflow { at: dir * s });
        }
        let Some(step) = try_step(&rhs, s, &y, &f, h, opts) else {
            h *= 0.25;
            last_rejected = true;
            continue;
        };
        let factor = if step.err == 0.0 {
            MAX_FACTOR
        } else {
            (SAFETY * step.err.powf(-0.2)).clamp(MIN_FACTOR, MAX_FACTOR)
        };
        if step.err > 1.0 {
            h *= factor;
            last_rejected = true;
            continue;
        }

        let s_new = if h == span - s { span } else { s + h };
        if exits(sys, &y, &step.y_new, opts) {
            // Bisect the crossing on the step's Hermite interpolant.
            let (mut inside, mut outside) = (s, s_new);
            while outside - inside > opts.exit_tolerance {
                let mid = 0.5 * (inside + outside);
                let ym = hermite(s, &y, &f, s_new, &step.y_new, &step.f_new, mid);
                if exits(sys, &y, &ym, opts) {
                    outside = mid;
                } else {
                    inside = mid;
                }
            }
            if inside > s {
                s_list.push(inside);
                ys.push(hermite(s, &y, &f, s_new, &step.y_new, &step.f_new, inside));
                fs.push(hermite_derivative(s, &y, &f, s_new, &step.y_new, &step.f_new, inside));
            }
            end_s = 0.5 * (inside + outside);
            termination = Termination::LeftDomain;
            break;
        }

        s = s_new;
        y = step.y_new;
        f = step.f_new;
        s_list.push(s);
        ys.push(y.clone());
        fs.push(f.clone());
        if norm(&y) > opts.escape_threshold {
            end_s = s;
            termination = Termination::BlowUp;
            break;
        }
        h *= if last_rejected { factor.min(1.0) } else { factor };
        last_rejected = false;
    }
    if termination == Termination::ReachedSpan {
        end_s = span;
    }

    let mut times: Vec<f64> = s_list.iter().map(|s| dir * s).collect();
    let mut derivatives: Vec<Vec<f64>> = fs
        .into_iter()
        .map(|v| v.into_iter().map(|vi| dir * vi).collect())
        .collect();
    let (t_lo, t_hi) = if dir > 0.0 {
        (0.0, end_s)
    } else {
        times.reverse();
        ys.reverse();
        derivatives.reverse();
        (-end_s, 0.0)
    };
    Ok(Trajectory { times, states: ys, derivatives, t_lo, t_hi, termination })
}

impl std::fmt::Display for Trajectory {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} samples on [{}, {}], {:?}, final state {}",
            self.len(),
            self.t_lo,
            self.t_hi,
            self.termination,
            format_vec(self.final_state())
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::continuous::Domain;
    use crate::expr::VectorExpr;

    fn opts() -> IntegrateOptions {
        IntegrateOptions::default()
    }

    #[test]
    fn time_system_is_exact() {
        let traj = integrate(&ContinuousSystem::time(), &[0.0], 5.0, &opts()).unwrap();
        assert_eq!(traj.termination, Termination::ReachedSpan);
        assert_eq!(traj.last_time(), 5.0);
        assert!((traj.final_state()[0] - 5.0).abs() < 1e-9);
    }

    #[test]
    fn exponential_growth() {
        let sys = ContinuousSystem::parse(&["x1"]).unwrap();
        let traj = integrate(&sys, &[1.0], 1.0, &opts()).unwrap();
        assert!((traj.final_state()[0] - std::f64::consts::E).abs() < 1e-6);
    }

    #[test]
    fn quadratic_blows_up_near_one() {
        let sys = ContinuousSystem::parse(&["x1^2"]).unwrap();
        let traj = integrate(&sys, &[1.0], 5.0, &opts()).unwrap();
        assert_eq!(traj.termination, Termination::BlowUp);
        assert!((0.99..=1.01).contains(&traj.t_hi), "t_hi = {}", traj.t_hi);
        assert!(norm(traj.final_state()) > 1e8);
        assert!(traj.states.iter().all(|x| x.iter().all(|v| v.is_finite())));
    }

    #[test]
    fn backward_integration_has_increasing_times() {
        let sys = ContinuousSystem::parse(&["x1"]).unwrap();
        let traj = integrate(&sys, &[1.0], -1.0, &opts()).unwrap();
        assert!(traj.times.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(traj.t_lo, -1.0);
        assert_eq!(traj.t_hi, 0.0);
        assert!((traj.states[0][0] - (-1f64).exp()).abs() < 1e-9);
        assert_eq!(traj.final_state(), &[1.0]);
    }

    #[test]
    fn leaves_box_domain() {
        let sys = ContinuousSystem::new(
            Domain::new(vec![-1.0], vec![2.0]).unwrap(),
            VectorExpr::parse(&["1"], 1).unwrap(),
        )
        .unwrap();
        let traj = integrate(&sys, &[0.5], 10.0, &opts()).unwrap();
        assert_eq!(traj.termination, Termination::LeftDomain);
        assert!((traj.t_hi - 1.5).abs() < 1e-8);
        assert!(sys.domain().contains(traj.final_state()));
    }

    #[test]
    fn rejects_bad_inputs() {
        let sys = ContinuousSystem::time();
        assert!(matches!(integrate(&sys, &[0.0], 0.0, &opts()), Err(ContinuousError::InvalidSpan(_))));
        let half = ContinuousSystem::new(
            Domain::new(vec![0.0], vec![f64::INFINITY]).unwrap(),
            VectorExpr::parse(&["1"], 1).unwrap(),
        )
        .unwrap();
        assert!(matches!(integrate(&half, &[-1.0], 1.0, &opts()), Err(ContinuousError::OutsideDomain(_))));
    }

    #[test]
    fn dense_output_interpolates() {
        let sys = ContinuousSystem::parse(&["x2", "-x1"]).unwrap();
        let traj = integrate(&sys, &[1.0, 0.0], 3.0, &opts()).unwrap();
        for k in 0..=30 {
            let t = 0.1 * k as f64;
            let x = traj.state_at(t).unwrap();
            assert!((x[0] - t.cos()).abs() < 1e-7 && (x[1] + t.sin()).abs() < 1e-7, "t = {t}");
        }
        assert!(traj.state_at(3.5).is_none());
    }

    #[test]
    fn csv_has_header_and_full_precision() {
        let traj = integrate(&ContinuousSystem::time(), &[0.0], 5.0, &opts()).unwrap();
        let mut buf = Vec::new();
        traj.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("t,x1"));
        let last = text.lines().last().unwrap();
        let fields: Vec<f64> = last.split(',').map(|v| v.parse().unwrap()).collect();
        assert_eq!(fields[0], 5.0);
        assert!((fields[1] - 5.0).abs() < 1e-12, "{last}");
        assert_eq!(last.split(',').nth(1).unwrap().split('e').next().unwrap().len(), 18);
    }

    #[test]
    fn undefined_field_is_reported() {
        let sys = ContinuousSystem::parse(&["log(x1 - 5)"]).unwrap();
        assert!(matches!(integrate(&sys, &[0.0], 1.0, &opts()), Err(ContinuousError::Expr(_))));
    }
}
