use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use super::spec_file::{build_discrete_map, build_partial_map, build_smooth_map};
use super::{
    parse_cli_state, CliError, Common, Entry, MapInput, ReportFile, SectionBase, SpecFile, Status, EXIT_OK,
    EXIT_TERMINATED,
};
use crate::category::{check_morphism as check_candidate, verify_initiality_discrete, MorphismCandidate, PointedSystem, State, SystemSpec, INITIALITY_CAP};
use crate::continuous::{
    check_equilibrium_morphism, check_periodic_orbit, check_solution_preservation, default_samples, find_equilibria,
    integrate, solution_defect, ContinuousError, ContinuousSystem, SmoothMap, Termination, DEFAULT_SAMPLE_WINDOW,
};
use crate::discrete::{self, DiscreteMap, DiscreteSystem};
use crate::expr::VectorExpr;
use crate::germ::{compose_partial, maximal_solution_domain, Endpoint, GermedSystem, OpenSet1D, PartialMap};
use crate::report::{format_vec, CheckReport};
use crate::tau::{check_section, ContinuousTau, DiscreteTau, GermedTau};

const SECTION_TOL: f64 = 1e-12;
const LAW_TOL: f64 = 1e-12;
const LAW_TRIALS: usize = 20;
const LAW_POINTS: usize = 100;
const DEFECT_FACTOR: f64 = 10.0;
const DEFAULT_HORIZON: usize = 6;
const DEFAULT_SPAN: f64 = 1.0;

fn emit(path: Option<&Path>, bytes: &[u8], out: &mut dyn Write) -> Result<(), CliError> {
    let io = |p: &Path, e: std::io::Error| CliError::Io { path: p.display().to_string(), message: e.to_string() };
    match path {
        Some(p) => std::fs::write(p, bytes).map_err(|e| io(p, e)),
        None => out.write_all(bytes).map_err(|e| io(Path::new("<stdout>"), e)),
    }
}

fn termination_name(t: Termination) -> &'static str {
    match t {
        Termination::ReachedSpan => "reached-span",
        Termination::BlowUp => "blow-up",
        Termination::LeftDomain => "left-domain",
    }
}

fn continuous_of(system: &SystemSpec) -> Option<&ContinuousSystem> {
    match system {
        SystemSpec::Continuous(s) => Some(s),
        SystemSpec::Germed(g) => Some(g.system()),
        SystemSpec::Discrete(_) => None,
    }
}

fn start_state(file: &SpecFile, x0: Option<&str>) -> Result<Option<State>, CliError> {
    match x0 {
        Some(text) => parse_cli_state(&file.system, text).map(Some),
        None => Ok(file.basepoint.clone()),
    }
}

pub(super) fn solve(
    spec: &Path,
    x0: Option<&str>,
    common: &Common,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32, CliError> {
    let file = SpecFile::load(spec)?;
    let start = start_state(&file, x0)?
        .ok_or_else(|| CliError::Usage("no initial state: pass --x0 or set `basepoint`".into()))?;
    match (&file.system, &start) {
        (SystemSpec::Discrete(sys), State::Element(c0)) => {
            let horizon = common.horizon.ok_or_else(|| CliError::Usage("discrete systems need --horizon".into()))?;
            let orbit = discrete::solve(sys, c0, horizon).map_err(|e| CliError::Usage(e.to_string()))?;
            emit(common.output.as_deref(), format!("{}\n", orbit.points.join(" ")).as_bytes(), out)?;
            Ok(EXIT_OK)
        }
        (system, State::Vector(x)) => {
            let sys = continuous_of(system).ok_or_else(|| CliError::Usage("state does not match the system".into()))?;
            let span = common.span.ok_or_else(|| CliError::Usage("continuous systems need --span".into()))?;
            let traj = match integrate(sys, x, span, &common.integrate_options()) {
                Ok(t) => t,
                Err(e @ (ContinuousError::StepSizeUnderflow { .. } | ContinuousError::MaxSteps { .. })) => {
                    let _ = writeln!(err, "error: {e}");
                    return Ok(EXIT_TERMINATED);
                }
                Err(e) => return Err(CliError::Usage(e.to_string())),
            };
            let mut csv = Vec::new();
            traj.write_csv(&mut csv).expect("writing to memory cannot fail");
            emit(common.output.as_deref(), &csv, out)?;
            if traj.termination != Termination::ReachedSpan {
                let at = if span > 0.0 { traj.t_hi } else { traj.t_lo };
                let _ = writeln!(err, "{} at t = {at}", termination_name(traj.termination));
                return Ok(EXIT_TERMINATED);
            }
            Ok(EXIT_OK)
        }
        _ => Err(CliError::Usage("state does not match the system".into())),
    }
}

pub(super) struct MorphismArgs<'a> {
    pub source: &'a Path,
    pub target: &'a Path,
    pub map: &'a [String],
    pub map_file: Option<&'a Path>,
    pub preserve: Option<&'a [String]>,
}

fn build_candidate(input: &MapInput, src: &SystemSpec, dst: &SystemSpec) -> Result<MorphismCandidate, CliError> {
    match (src, dst) {
        (SystemSpec::Discrete(s), SystemSpec::Discrete(d)) => Ok(MorphismCandidate::Discrete {
            map: build_discrete_map(input, s, d)?,
            source: s.clone(),
            target: d.clone(),
        }),
        (SystemSpec::Continuous(s), SystemSpec::Continuous(d)) => {
            let map = build_smooth_map(input, s.dimension())?;
            if map.target_dim() != d.dimension() {
                return Err(CliError::Spec(format!(
                    "map has {} components but the target has dimension {}",
                    map.target_dim(),
                    d.dimension()
                )));
            }
            Ok(MorphismCandidate::Smooth { map, source: s.clone(), target: d.clone() })
        }
        (SystemSpec::Germed(s), SystemSpec::Germed(d)) => Ok(MorphismCandidate::Partial {
            map: build_partial_map(input, s, d)?,
            source: s.clone(),
            target: d.clone(),
        }),
        _ => Err(CliError::Usage(format!("cannot relate a {} system to a {} system", src.kind(), dst.kind()))),
    }
}

fn write_report(report: &ReportFile, common: &Common, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, CliError> {
    for c in &report.checks {
        let body = match (&c.report, &c.error) {
            (Some(r), _) => r.to_string(),
            (None, Some(e)) if c.status == Status::Error => format!("error: {e}"),
            (None, Some(e)) => format!("FAIL {e}"),
            (None, None) => c.details.as_ref().map(|d| d.to_string()).unwrap_or_default(),
        };
        let _ = writeln!(err, "{} [{}]: {body}", c.name, c.subject);
    }
    let mut text = serde_json::to_string_pretty(report).expect("report serializes");
    text.push('\n');
    emit(common.output.as_deref(), text.as_bytes(), out)?;
    Ok(report.exit_code())
}

fn new_report(command: &str, arguments: Vec<String>, common: &Common, checks: Vec<Entry>) -> ReportFile {
    ReportFile {
        tool: "dynsys",
        version: env!("CARGO_PKG_VERSION"),
        command: command.into(),
        arguments,
        config: common.clone(),
        checks,
    }
}

pub(super) fn check_morphism(
    args: &MorphismArgs<'_>,
    common: &Common,
    echo: Vec<String>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32, CliError> {
    let src = SpecFile::load(args.source)?;
    let dst = SpecFile::load(args.target)?;
    let input = match args.map_file {
        Some(p) => MapInput::load(p)?,
        None if args.map.is_empty() => return Err(CliError::Usage("provide --map or --map-file".into())),
        None => MapInput::from_args(args.map, &src.system)?,
    };
    let candidate = build_candidate(&input, &src.system, &dst.system)?;
    let subject = format!("{} -> {}", args.source.display(), args.target.display());
    let opts = common.integrate_options();

    let mut samples = src.system.samples(common.samples);
    let mut preservation = None;
    if let Some([x0, t]) = args.preserve {
        let start = parse_cli_state(&src.system, x0)?;
        match (&candidate, &start) {
            (MorphismCandidate::Discrete { map, source, target }, State::Element(c0)) => {
                let horizon: usize = t.parse().map_err(|_| CliError::Usage(format!("`{t}` is not a horizon")))?;
                preservation = Some(discrete_preservation(map, source, target, c0, horizon, &subject)?);
            }
            (_, State::Vector(x)) => {
                let span: f64 = t.parse().map_err(|_| CliError::Usage(format!("`{t}` is not a time")))?;
                let (f, sys_x, sys_y) = smooth_parts(&candidate).expect("continuous candidate");
                if let Ok(traj) = integrate(sys_x, x, span, &opts) {
                    samples.extend(traj.states.into_iter().map(State::Vector));
                }
                let entry = match check_solution_preservation(&f, sys_x, sys_y, x, span, common.preserve_tol, &opts) {
                    Ok(p) => Entry::check("solution-preservation", &subject, p.report)
                        .with_details(json!({ "span": [p.span.0, p.span.1], "truncated": p.truncated })),
                    Err(ContinuousError::Precondition(m)) => Entry {
                        status: Status::Fail,
                        ..Entry::error("solution-preservation", &subject, m)
                    },
                    Err(e) => Entry::error("solution-preservation", &subject, e),
                };
                preservation = Some(entry);
            }
            _ => return Err(CliError::Usage("initial state does not match the system".into())),
        }
    }

    let mut checks = vec![Entry::from_result("relatedness", &subject, check_candidate(&candidate, &samples, common.tol))];
    checks.extend(preservation);
    write_report(&new_report("check-morphism", echo, common, checks), common, out, err)
}

fn smooth_parts(m: &MorphismCandidate) -> Option<(SmoothMap, &ContinuousSystem, &ContinuousSystem)> {
    match m {
        MorphismCandidate::Smooth { map, source, target } => Some((map.clone(), source, target)),
        MorphismCandidate::Partial { map, source, target } => {
            let v = VectorExpr::new(vec![map.map().clone()], 1).ok()?;
            Some((SmoothMap::new(v), source.system(), target.system()))
        }
        MorphismCandidate::Discrete { .. } => None,
    }
}

/// `α(orbit of c0)` against the orbit of `α(c0)`, exactly.
fn discrete_preservation(
    alpha: &DiscreteMap,
    src: &DiscreteSystem,
    dst: &DiscreteSystem,
    c0: &str,
    horizon: usize,
    subject: &str,
) -> Result<Entry, CliError> {
    let usage = |e: discrete::DiscreteError| CliError::Usage(e.to_string());
    let start = src.index_of(c0).map_err(usage)?;
    if alpha.source_len() != src.len() || alpha.target_len() != dst.len() {
        return Err(CliError::Spec("map does not fit the two carriers".into()));
    }
    let pushed: Vec<usize> = src.orbit_indices(start, horizon).into_iter().map(|i| alpha.apply(i)).collect();
    let image = dst.orbit_indices(alpha.apply(start), horizon);
    let mut violations = 0;
    let mut witness = None;
    for (n, (a, b)) in pushed.iter().zip(&image).enumerate() {
        if a != b {
            violations += 1;
            witness.get_or_insert_with(|| format!("n = {n}: α(φ(n)) = {}, ψ(n) = {}", dst.name(*a), dst.name(*b)));
        }
    }
    Ok(Entry::check("solution-preservation", subject, CheckReport::exact(image.len(), violations, witness)))
}

pub(super) fn laws(
    specs: &[std::path::PathBuf],
    x0: Option<&str>,
    period: Option<(f64, f64)>,
    common: &Common,
    echo: Vec<String>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(common.seed);
    let mut checks = Vec::new();
    for path in specs {
        let file = SpecFile::load(path)?;
        let subject = path.display().to_string();
        let start = start_state(&file, x0)?;
        match &file.system {
            SystemSpec::Discrete(sys) => discrete_laws(sys, &file, start.as_ref(), common, &subject, &mut rng, &mut checks),
            SystemSpec::Continuous(sys) => {
                continuous_laws(sys, &file, start.as_ref(), period, common, &subject, &mut rng, &mut checks)
            }
            SystemSpec::Germed(g) => {
                germed_laws(g, &file, start.as_ref(), period, common, &subject, &mut rng, &mut checks)
            }
        }
    }
    write_report(&new_report("laws", echo, common, checks), common, out, err)
}

fn identity_morphism(system: &SystemSpec, samples: &[State], common: &Common, subject: &str) -> Entry {
    let id = MorphismCandidate::identity(system);
    Entry::from_result("identity-morphism", subject, check_candidate(&id, samples, common.tol))
}

fn discrete_laws(
    sys: &DiscreteSystem,
    file: &SpecFile,
    start: Option<&State>,
    common: &Common,
    subject: &str,
    rng: &mut ChaCha8Rng,
    checks: &mut Vec<Entry>,
) {
    let n = sys.len();
    let mut tau = DiscreteTau::system(sys);
    if let Some(SectionBase::Table(t)) = &file.section_base {
        tau.section.base = t.clone();
    }
    let points: Vec<usize> = (0..n).collect();
    checks.push(Entry::from_result("section-law", subject, check_section(&tau, &points, 0.0)));
    checks.push(identity_morphism(&file.system, &[], common, subject));

    let mut random_map = || {
        DiscreteMap::from_indices((0..n).map(|_| rng.random_range(0..n)).collect(), n).expect("indices in range")
    };
    let id = DiscreteMap::identity(n);
    let (mut id_bad, mut assoc_bad) = (0, 0);
    let (mut id_witness, mut assoc_witness) = (None, None);
    for _ in 0..LAW_TRIALS {
        let (f, g, h) = (random_map(), random_map(), random_map());
        let compose = |a: &DiscreteMap, b: &DiscreteMap| a.after(b).expect("same carrier");
        if compose(&f, &id) != f || compose(&id, &f) != f {
            id_bad += 1;
            id_witness.get_or_insert_with(|| format!("f = {:?}", f.table()));
        }
        if compose(&h, &compose(&g, &f)) != compose(&compose(&h, &g), &f) {
            assoc_bad += 1;
            assoc_witness.get_or_insert_with(|| format!("f = {:?}, g = {:?}, h = {:?}", f.table(), g.table(), h.table()));
        }
    }
    checks.push(Entry::check("identity-law", subject, CheckReport::exact(LAW_TRIALS, id_bad, id_witness)));
    checks.push(Entry::check("associativity", subject, CheckReport::exact(LAW_TRIALS, assoc_bad, assoc_witness)));

    let horizon = common.horizon.unwrap_or(DEFAULT_HORIZON);
    let basepoints: Vec<String> = match start {
        Some(State::Element(e)) => vec![e.clone()],
        _ => sys.elements().to_vec(),
    };
    for c0 in basepoints {
        let name = format!("{subject} @ {c0}");
        let pointed = PointedSystem::new(file.system.clone(), State::Element(c0.clone())).expect("element of the carrier");
        let entry = match verify_initiality_discrete(horizon, &pointed, INITIALITY_CAP) {
            Ok(r) => {
                let orbit = discrete::iterate(sys, &c0, horizon).expect("element of the carrier").points;
                let matches = r.morphism.as_ref() == Some(&orbit);
                let mut e = Entry::check("initiality", &name, r.report).with_details(json!({
                    "horizon": horizon,
                    "count": r.count,
                    "enumerated": r.enumerated,
                    "morphism": r.morphism,
                    "matches_orbit": matches,
                }));
                if !matches {
                    e.status = Status::Fail;
                }
                e
            }
            Err(e) => Entry::error("initiality", &name, e),
        };
        checks.push(entry);
    }
}

fn linear_map(rng: &mut ChaCha8Rng, n: usize) -> SmoothMap {
    let rows: Vec<String> = (0..n)
        .map(|_| {
            (1..=n)
                .map(|j| format!("({:.3})*x{j}", rng.random_range(-2.0..2.0)))
                .collect::<Vec<_>>()
                .join(" + ")
        })
        .collect();
    SmoothMap::parse(&rows, n).expect("generated expressions parse")
}

/// Largest distance and where it occurs.
type Gap = (f64, Option<String>);

fn max_gap(a: &SmoothMap, b: &SmoothMap, points: &[Vec<f64>]) -> Result<Gap, ContinuousError> {
    let mut worst = 0.0f64;
    let mut witness = None;
    for p in points {
        let (u, v) = (a.apply(p)?, b.apply(p)?);
        let r = u.iter().zip(&v).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        if r > worst || r.is_nan() {
            worst = r;
            witness = Some(format!("p = {}: {} vs {}", format_vec(p), format_vec(&u), format_vec(&v)));
        }
    }
    Ok((worst, witness))
}

fn smooth_composition_laws(n: usize, rng: &mut ChaCha8Rng, subject: &str, checks: &mut Vec<Entry>) {
    let points: Vec<Vec<f64>> = (0..LAW_POINTS)
        .map(|_| (0..n).map(|_| rng.random_range(-DEFAULT_SAMPLE_WINDOW..DEFAULT_SAMPLE_WINDOW)).collect())
        .collect();
    let id = SmoothMap::identity(n);
    let mut id_worst = (0.0f64, None);
    let mut assoc_worst = (0.0f64, None);
    for _ in 0..LAW_TRIALS {
        let (f, g, h) = (linear_map(rng, n), linear_map(rng, n), linear_map(rng, n));
        let step = || -> Result<(Gap, Gap), ContinuousError> {
            let left = max_gap(&f.after(&id)?, &f, &points)?;
            let right = max_gap(&id.after(&f)?, &f, &points)?;
            let ident = if right.0 > left.0 { right } else { left };
            let assoc = max_gap(&h.after(&g.after(&f)?)?, &h.after(&g)?.after(&f)?, &points)?;
            Ok((ident, assoc))
        };
        match step() {
            Ok((ident, assoc)) => {
                if ident.0 > id_worst.0 || ident.0.is_nan() {
                    id_worst = ident;
                }
                if assoc.0 > assoc_worst.0 || assoc.0.is_nan() {
                    assoc_worst = assoc;
                }
            }
            Err(e) => {
                checks.push(Entry::error("associativity", subject, e));
                return;
            }
        }
    }
    let samples = LAW_TRIALS * LAW_POINTS;
    checks.push(Entry::check("identity-law", subject, CheckReport::numeric(id_worst.0, LAW_TOL, samples, id_worst.1)));
    checks.push(Entry::check(
        "associativity",
        subject,
        CheckReport::numeric(assoc_worst.0, LAW_TOL, samples, assoc_worst.1),
    ));
}

fn equilibrium_resolution(n: usize) -> Option<usize> {
    match n {
        1 => Some(64),
        2 => Some(32),
        3 => Some(10),
        _ => None,
    }
}

#[allow(clippy::too_many_arguments)]
fn continuous_laws(
    sys: &ContinuousSystem,
    file: &SpecFile,
    start: Option<&State>,
    period: Option<(f64, f64)>,
    common: &Common,
    subject: &str,
    rng: &mut ChaCha8Rng,
    checks: &mut Vec<Entry>,
) {
    let opts = common.integrate_options();
    let samples = default_samples(sys.domain(), common.samples);
    let mut tau = ContinuousTau::system(sys);
    if let Some(SectionBase::Expressions(base)) = &file.section_base {
        tau.section.base = base.clone();
    }
    checks.push(Entry::from_result("section-law", subject, check_section(&tau, &samples, SECTION_TOL)));
    let states: Vec<State> = samples.iter().cloned().map(State::Vector).collect();
    checks.push(identity_morphism(&file.system, &states, common, subject));
    smooth_composition_laws(sys.dimension(), rng, subject, checks);

    if let Some(res) = equilibrium_resolution(sys.dimension()) {
        let (lo, hi) = sys.domain().sampling_box(DEFAULT_SAMPLE_WINDOW);
        match find_equilibria(sys, &lo, &hi, res, common.tol) {
            Ok(found) => {
                for x_e in found.into_iter().filter(|x| sys.domain().contains(x)) {
                    let name = format!("{subject} @ {}", format_vec(&x_e));
                    checks.push(Entry::from_result("equilibrium", &name, check_equilibrium_morphism(sys, &x_e, common.tol)));
                    let drift = integrate(sys, &x_e, common.span.unwrap_or(DEFAULT_SPAN), &opts).map(|traj| {
                        let worst = traj
                            .states
                            .iter()
                            .map(|x| x.iter().zip(&x_e).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt())
                            .fold(0.0, f64::max);
                        CheckReport::numeric(worst, common.preserve_tol, traj.len(), Some(format!("drift {worst:e}")))
                    });
                    checks.push(Entry::from_result("equilibrium-solution", &name, drift));
                }
            }
            Err(e) => checks.push(Entry::error("equilibria", subject, e)),
        }
    }

    if let Some(State::Vector(x)) = start {
        let name = format!("{subject} @ {}", format_vec(x));
        let defect = integrate(sys, x, common.span.unwrap_or(DEFAULT_SPAN), &opts).and_then(|traj| {
            let details = json!({
                "t_lo": traj.t_lo,
                "t_hi": traj.t_hi,
                "termination": termination_name(traj.termination),
            });
            solution_defect(sys, &traj, &opts, DEFECT_FACTOR).map(|r| (r, details))
        });
        checks.push(match defect {
            Ok((r, details)) => Entry::check("solution-defect", &name, r).with_details(details),
            Err(e) => Entry::error("solution-defect", &name, e),
        });
        if let Some((p, tol)) = period {
            checks.push(Entry::from_result("periodic-orbit", &name, check_periodic_orbit(sys, x, p, tol, &opts)));
        }
    }
}

fn random_affine(rng: &mut ChaCha8Rng) -> PartialMap {
    let lo = rng.random_range(-5.0..0.0f64);
    let hi = rng.random_range(0.5..5.0f64);
    let a = rng.random_range(0.5..2.0f64) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    let b = rng.random_range(-2.0..2.0f64);
    PartialMap::parse(OpenSet1D::interval(lo, hi), &format!("({a:.3})*x1 + ({b:.3})"), OpenSet1D::real_line())
        .expect("affine maps are defined everywhere")
}

fn partial_gap(a: &PartialMap, b: &PartialMap) -> Option<String> {
    if a.domain() != b.domain() {
        return Some(format!("domains {} and {}", a.domain(), b.domain()));
    }
    for c in a.domain().components() {
        for k in 0..LAW_POINTS {
            let x = c.lo + (c.hi - c.lo) * (k as f64 + 0.5) / LAW_POINTS as f64;
            match (a.apply(x), b.apply(x)) {
                (Ok(u), Ok(v)) if (u - v).abs() <= LAW_TOL => {}
                (u, v) => return Some(format!("x = {x}: {u:?} vs {v:?}")),
            }
        }
    }
    None
}

#[allow(clippy::too_many_arguments)]
fn germed_laws(
    g: &GermedSystem,
    file: &SpecFile,
    start: Option<&State>,
    period: Option<(f64, f64)>,
    common: &Common,
    subject: &str,
    rng: &mut ChaCha8Rng,
    checks: &mut Vec<Entry>,
) {
    let sys = g.system();
    let samples = default_samples(sys.domain(), common.samples);
    let mut tau = GermedTau::system(g);
    if let Some(SectionBase::Expressions(base)) = &file.section_base {
        tau.section.base = base.components()[0].clone();
    }
    let points: Vec<f64> = samples.iter().map(|x| x[0]).collect();
    checks.push(Entry::from_result("section-law", subject, check_section(&tau, &points, SECTION_TOL)));
    let states: Vec<State> = samples.iter().cloned().map(State::Vector).collect();
    checks.push(identity_morphism(&file.system, &states, common, subject));

    let (mut id_bad, mut assoc_bad) = (0, 0);
    let (mut id_witness, mut assoc_witness) = (None, None);
    for _ in 0..LAW_TRIALS {
        let (f, gm, h) = (random_affine(rng), random_affine(rng), random_affine(rng));
        let outcome = (|| {
            let left = compose_partial(&PartialMap::identity(f.domain().clone()), &f)?;
            let right = compose_partial(&f, &PartialMap::identity(OpenSet1D::real_line()))?;
            let ident = partial_gap(&left, &f).or_else(|| partial_gap(&right, &f));
            let assoc = partial_gap(
                &compose_partial(&compose_partial(&f, &gm)?, &h)?,
                &compose_partial(&f, &compose_partial(&gm, &h)?)?,
            );
            Ok::<_, crate::germ::GermError>((ident, assoc))
        })();
        match outcome {
            Ok((ident, assoc)) => {
                if let Some(w) = ident {
                    id_bad += 1;
                    id_witness.get_or_insert(w);
                }
                if let Some(w) = assoc {
                    assoc_bad += 1;
                    assoc_witness.get_or_insert(w);
                }
            }
            Err(e) => {
                checks.push(Entry::error("associativity", subject, e));
                return;
            }
        }
    }
    checks.push(Entry::check("identity-law", subject, CheckReport::exact(LAW_TRIALS, id_bad, id_witness)));
    checks.push(Entry::check("associativity", subject, CheckReport::exact(LAW_TRIALS, assoc_bad, assoc_witness)));

    if let Some(State::Vector(x)) = start {
        let name = format!("{subject} @ {}", x[0]);
        let horizon = common.span.map(f64::abs).unwrap_or(10.0);
        let opts = common.integrate_options();
        checks.push(match maximal_solution_domain(g, x[0], horizon, &opts) {
            Ok(sol) => {
                let endpoint = |e: Endpoint| serde_json::to_value(e).expect("endpoint serializes");
                Entry {
                    name: "maximal-domain".into(),
                    subject: name.clone(),
                    status: Status::Pass,
                    report: None,
                    error: None,
                    details: Some(json!({
                        "interval": sol.interval.to_string(),
                        "lower": endpoint(sol.lower),
                        "upper": endpoint(sol.upper),
                    })),
                }
            }
            Err(e) => Entry::error("maximal-domain", &name, e),
        });
        if let Some((p, tol)) = period {
            checks.push(Entry::from_result("periodic-orbit", &name, check_periodic_orbit(sys, x, p, tol, &opts)));
        }
    }
}
