use crate::docs::{
    to_json_string, CoeffsDoc, CriticalPointDoc, FrameDoc, KuramotoDoc, ScanDoc,
    SimulateDoc, SimulationSummaryDoc, TensorsDoc, TraceDoc,
};
use modwave::config::ModelSpec;
use modwave::criticality::{
    find_double_critical, scan_surfaces, trace_curve, trace_eigenvalue_check, CriticalPoint,
    SliceProblem, Tolerances, Window,
};
use modwave::error::{Result, WaveError};
use modwave::mkdv::{invariants, periodized_sech, soliton, soliton_speed, MkdvRun, WaveField};
use modwave::models::{TwoPhaseModel, Vec2};
use modwave::reduction::{assemble, cross_checks, kuramoto_cubic, kuramoto_stationarity, paper_comparison};
use modwave::tensors::{bundle_with_route, DerivativeRoute};
use std::path::{Path, PathBuf};

pub fn parse_pair(s: &str, what: &str) -> Result<[f64; 2]> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err(WaveError::InvalidInput(format!(
            "{what} must be two comma-separated numbers (got '{s}')"
        )));
    }
    let a = parts[0]
        .trim()
        .parse()
        .map_err(|e| WaveError::InvalidInput(format!("{what}: {e}")))?;
    let b = parts[1]
        .trim()
        .parse()
        .map_err(|e| WaveError::InvalidInput(format!("{what}: {e}")))?;
    Ok([a, b])
}

pub fn write_output(text: &str, output: Option<&Path>) -> Result<()> {
    match output {
        None => {
            print!("{text}");
            Ok(())
        }
        Some(path) => std::fs::write(path, text).map_err(|e| {
            WaveError::InvalidInput(format!("cannot write {}: {e}", path.display()))
        }),
    }
}

fn route_of(s: Option<&str>) -> Result<Option<DerivativeRoute>> {
    s.map(DerivativeRoute::parse).transpose()
}

/// `k=v,k=v` pairs.
fn parse_assignments(s: &str) -> Result<Vec<(String, f64)>> {
    s.split(',')
        .map(|part| {
            let (k, v) = part.split_once('=').ok_or_else(|| {
                WaveError::InvalidInput(format!("expected name=value, got '{part}'"))
            })?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|e| WaveError::InvalidInput(format!("'{part}': {e}")))?;
            Ok((k.trim().to_string(), v))
        })
        .collect()
}

pub fn cmd_tensors(
    config: &Path,
    k: &str,
    omega: Option<&str>,
    order: u8,
    route: Option<&str>,
    output: Option<&Path>,
) -> Result<()> {
    let spec = ModelSpec::from_path(config)?;
    let model = spec.build_model()?;
    let k = parse_pair(k, "--k")?;
    let k = Vec2::new(k[0], k[1]);
    let omega = match omega {
        Some(s) => {
            let w = parse_pair(s, "--omega")?;
            Vec2::new(w[0], w[1])
        }
        None => {
            let state = spec.require_fixed_state(model.as_ref())?;
            model.invert(&state, &k)
        }
    };
    let pt = model.point(k, omega);
    let route = route_of(route)?.unwrap_or(DerivativeRoute::FiniteDifference);
    let bu = bundle_with_route(model.as_ref(), &pt, order, route)?;
    let doc = TensorsDoc::new(model.as_ref(), &pt, &bu);
    write_output(&to_json_string(&doc), output)
}

pub struct SliceSetup {
    pub spec: ModelSpec,
    pub proto: Box<dyn TwoPhaseModel>,
    pub fixed_state: Vec2,
    pub pin_index: usize,
    pub pin_value: f64,
    pub guess: [f64; 2],
}

pub fn slice_setup(
    config: &Path,
    pin: Option<&str>,
    guess: Option<&str>,
) -> Result<SliceSetup> {
    let spec = ModelSpec::from_path(config)?;
    let proto = spec.build_model()?;
    let fixed_state = spec.require_fixed_state(proto.as_ref())?;
    let names = proto.slice_names();

    let (pin_index, pin_value, mut guess_vals) = match (&spec.slice, pin) {
        (_, Some(p)) => {
            let pairs = parse_assignments(p)?;
            if pairs.len() != 1 {
                return Err(WaveError::InvalidInput("--pin takes one name=value".into()));
            }
            let idx = names.iter().position(|n| *n == pairs[0].0).ok_or_else(|| {
                WaveError::InvalidInput(format!("unknown slice parameter '{}'", pairs[0].0))
            })?;
            // guesses must come from --guess in this case
            (idx, pairs[0].1, None)
        }
        (Some(_), None) => {
            let (i, v, g) = spec.pin_and_guess(proto.as_ref())?;
            (i, v, Some(g))
        }
        (None, None) => {
            return Err(WaveError::InvalidInput(
                "no slice section in config and no --pin given".into(),
            ))
        }
    };
    if let Some(g) = guess {
        let pairs = parse_assignments(g)?;
        let free: Vec<usize> = (0..3).filter(|&i| i != pin_index).collect();
        let mut out = [f64::NAN; 2];
        for (name, value) in pairs {
            let idx = names.iter().position(|n| *n == name).ok_or_else(|| {
                WaveError::InvalidInput(format!("unknown slice parameter '{name}'"))
            })?;
            let slot = free.iter().position(|&i| i == idx).ok_or_else(|| {
                WaveError::InvalidInput(format!("'{name}' is pinned, not free"))
            })?;
            out[slot] = value;
        }
        if out.iter().any(|v| v.is_nan()) {
            return Err(WaveError::InvalidInput(
                "--guess must set both free slice parameters".into(),
            ));
        }
        guess_vals = Some(out);
    }
    let guess = guess_vals.ok_or_else(|| {
        WaveError::InvalidInput("a guess is required (config slice section or --guess)".into())
    })?;
    Ok(SliceSetup {
        spec,
        proto,
        fixed_state,
        pin_index,
        pin_value,
        guess,
    })
}

fn find_point<'a>(
    setup: &'a SliceSetup,
    route: Option<DerivativeRoute>,
) -> Result<(SliceProblem<'a>, CriticalPoint)> {
    let problem = SliceProblem::new(
        setup.proto.as_ref(),
        setup.fixed_state,
        route,
        Tolerances::default(),
    );
    let cp = find_double_critical(&problem, setup.pin_index, setup.pin_value, setup.guess)?;
    Ok((problem, cp))
}

/// Re-assemble a critical point from a previously written JSON document
/// (only `params_slice` is trusted; everything else is recomputed).
fn point_from_file(problem: &SliceProblem, path: &Path) -> Result<CriticalPoint> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| WaveError::InvalidInput(format!("cannot read {}: {e}", path.display())))?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| WaveError::InvalidInput(format!("{}: {e}", path.display())))?;
    let slice = value
        .get("params_slice")
        .or_else(|| value.get("point").and_then(|p| p.get("params_slice")))
        .and_then(|v| v.as_array())
        .filter(|a| a.len() == 3)
        .ok_or_else(|| {
            WaveError::InvalidInput(format!("{}: no params_slice field", path.display()))
        })?;
    let mut p = [0.0; 3];
    for (i, v) in slice.iter().enumerate() {
        p[i] = v.as_f64().ok_or_else(|| {
            WaveError::InvalidInput(format!("{}: params_slice not numeric", path.display()))
        })?;
    }
    problem.assemble(&p)
}

pub fn cmd_critical_find(
    config: &Path,
    pin: Option<&str>,
    guess: Option<&str>,
    route: Option<&str>,
    output: Option<&Path>,
) -> Result<()> {
    let setup = slice_setup(config, pin, guess)?;
    let (problem, cp) = find_point(&setup, route_of(route)?)?;
    let (model, pt) = problem.model_at(&cp.params_slice)?;
    let bu = bundle_with_route(model.as_ref(), &pt, 1, problem.route())?;
    let defect = trace_eigenvalue_check(&bu.dkb, &cp.zeta);
    let doc = CriticalPointDoc::new(model.as_ref(), &cp, defect);
    write_output(&to_json_string(&doc), output)
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_critical_trace(
    config: &Path,
    seed: Option<&Path>,
    steps: Option<usize>,
    max_step: Option<f64>,
    direction: Option<f64>,
    route: Option<&str>,
    format: &str,
    output: Option<&Path>,
) -> Result<()> {
    let setup = slice_setup(config, None, None)?;
    let problem = SliceProblem::new(
        setup.proto.as_ref(),
        setup.fixed_state,
        route_of(route)?,
        Tolerances::default(),
    );
    let seed_point = match seed {
        Some(path) => point_from_file(&problem, path)?,
        None => find_double_critical(&problem, setup.pin_index, setup.pin_value, setup.guess)?,
    };
    let trace_spec = setup.spec.trace;
    let steps = steps
        .or(trace_spec.map(|t| t.steps))
        .ok_or_else(|| WaveError::InvalidInput("--steps required (or trace section)".into()))?;
    let max_step = max_step
        .or(trace_spec.map(|t| t.max_step))
        .ok_or_else(|| WaveError::InvalidInput("--max-step required (or trace section)".into()))?;
    let direction = direction.or(trace_spec.map(|t| t.direction)).unwrap_or(1.0);
    let window = setup
        .spec
        .window(setup.proto.as_ref())?
        .ok_or_else(|| WaveError::InvalidInput("trace needs a window section".into()))?;
    let tr = trace_curve(&problem, &seed_point, steps, max_step, &window, direction)?;
    let doc = TraceDoc::new(setup.proto.as_ref(), &tr);
    match format {
        "json" => write_output(&to_json_string(&doc), output),
        "csv" => write_output(&doc.to_csv(), output),
        other => Err(WaveError::InvalidInput(format!(
            "unknown format '{other}' (expected json|csv)"
        ))),
    }
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_critical_scan(
    config: &Path,
    window_arg: Option<&str>,
    nodes: &str,
    threads: Option<usize>,
    route: Option<&str>,
    format: &str,
    output: Option<&Path>,
) -> Result<()> {
    let spec = ModelSpec::from_path(config)?;
    let proto = spec.build_model()?;
    let fixed_state = spec.require_fixed_state(proto.as_ref())?;
    let names = proto.slice_names();
    let window = match window_arg {
        Some(s) => {
            let mut lo = [f64::NAN; 3];
            let mut hi = [f64::NAN; 3];
            for part in s.split(',') {
                let (name, range) = part.split_once('=').ok_or_else(|| {
                    WaveError::InvalidInput(format!("window: expected name=lo:hi, got '{part}'"))
                })?;
                let (a, b) = range.split_once(':').ok_or_else(|| {
                    WaveError::InvalidInput(format!("window: expected lo:hi in '{part}'"))
                })?;
                let idx = names.iter().position(|n| *n == name.trim()).ok_or_else(|| {
                    WaveError::InvalidInput(format!("unknown slice parameter '{name}'"))
                })?;
                lo[idx] = a.trim().parse().map_err(|e| {
                    WaveError::InvalidInput(format!("window '{part}': {e}"))
                })?;
                hi[idx] = b.trim().parse().map_err(|e| {
                    WaveError::InvalidInput(format!("window '{part}': {e}"))
                })?;
            }
            if lo.iter().chain(hi.iter()).any(|v| v.is_nan()) {
                return Err(WaveError::InvalidInput(
                    "window must cover all three slice parameters".into(),
                ));
            }
            Window { lo, hi }
        }
        None => spec
            .window(proto.as_ref())?
            .ok_or_else(|| WaveError::InvalidInput("scan needs a window".into()))?,
    };
    let nodes_parts: Vec<usize> = nodes
        .split(',')
        .map(|p| p.trim().parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| WaveError::InvalidInput(format!("--nodes: {e}")))?;
    if nodes_parts.len() != 3 {
        return Err(WaveError::InvalidInput("--nodes takes three counts".into()));
    }
    let nodes = [nodes_parts[0], nodes_parts[1], nodes_parts[2]];
    let problem = SliceProblem::new(
        proto.as_ref(),
        fixed_state,
        route_of(route)?,
        Tolerances::default(),
    );
    let threads = threads.or_else(|| {
        std::env::var("MODWAVE_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    });
    let grid = match threads {
        Some(t) if t > 0 => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| WaveError::InvalidInput(format!("thread pool: {e}")))?
            .install(|| scan_surfaces(&problem, &window, nodes))?,
        _ => scan_surfaces(&problem, &window, nodes)?,
    };
    let doc = ScanDoc::new(proto.as_ref(), &grid);
    match format {
        "json" => write_output(&to_json_string(&doc), output),
        "csv" => write_output(&doc.to_csv(), output),
        other => Err(WaveError::InvalidInput(format!(
            "unknown format '{other}' (expected json|csv)"
        ))),
    }
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_coeffs(
    config: &Path,
    point: Option<&Path>,
    pin: Option<&str>,
    guess: Option<&str>,
    route: Option<&str>,
    simulate: Option<(f64, f64, usize)>, // (amplitude, domain length, grid size)
    output: Option<&Path>,
) -> Result<()> {
    let setup = slice_setup(config, pin, guess)?;
    let problem = SliceProblem::new(
        setup.proto.as_ref(),
        setup.fixed_state,
        route_of(route)?,
        Tolerances::default(),
    );
    let cp = match point {
        Some(path) => point_from_file(&problem, path)?,
        None => find_double_critical(&problem, setup.pin_index, setup.pin_value, setup.guess)?,
    };
    let (model, pt) = problem.model_at(&cp.params_slice)?;
    let bu = bundle_with_route(model.as_ref(), &pt, 3, problem.route())?;
    let rc = assemble(model.as_ref(), &cp, &bu)?;
    let checks = cross_checks(model.as_ref(), &cp, &rc)?;
    let comparison = paper_comparison(model.as_ref(), &cp, &bu, &rc)?;
    let defect = trace_eigenvalue_check(&bu.dkb, &cp.zeta);
    let point_doc = CriticalPointDoc::new(model.as_ref(), &cp, defect);
    let mut doc = CoeffsDoc::new(point_doc, &rc, &checks, &comparison);
    if let Some((amplitude, l, n)) = simulate {
        doc.simulation = Some(run_reduced_soliton(
            rc.a0_raw, rc.a1_raw, rc.a2_raw, amplitude, l, n,
        )?);
    }
    write_output(&to_json_string(&doc), output)
}

/// Propagate the sech soliton of the reduced (raw-gauge) equation over one
/// domain transit and report drift and shape error.
fn run_reduced_soliton(
    a0: f64,
    a1: f64,
    a2: f64,
    amplitude: f64,
    l: f64,
    n: usize,
) -> Result<SimulationSummaryDoc> {
    let field = soliton(a0, a1, a2, amplitude, l / 4.0, l, n)?;
    let c = soliton_speed(a0, a1, amplitude);
    let t_end = l / c.abs();
    let bound = MkdvRun::new(a0, a1, a2, 1.0, n)?.stability_bound(l / n as f64, amplitude.abs());
    let dt = 0.125 * bound;
    let mut run = MkdvRun::new(a0, a1, a2, dt, n)?;
    let (out, diags) = run.integrate(field, t_end)?;
    let b = (a1 * amplitude * amplitude / (6.0 * a2)).sqrt();
    let dx = out.dx();
    let mut shape = 0.0f64;
    for j in 0..n {
        let x = j as f64 * dx;
        let exact = periodized_sech(amplitude, b, l / 4.0 + c * t_end, l, x);
        shape = shape.max((out.values[j] - exact).abs());
    }
    let first = diags.first().unwrap();
    let last = diags.last().unwrap();
    Ok(SimulationSummaryDoc {
        l,
        n,
        dt,
        t_end,
        amplitude,
        shape_error: shape / amplitude.abs(),
        mass_drift: (last.mass - first.mass).abs(),
        momentum_drift: (last.momentum - first.momentum).abs() / first.momentum.abs().max(1e-300),
        energy_drift: (last.energy - first.energy).abs() / first.energy.abs().max(1e-300),
    })
}

pub fn cmd_kuramoto(
    config: &Path,
    point: Option<&Path>,
    pin: Option<&str>,
    guess: Option<&str>,
    route: Option<&str>,
    output: Option<&Path>,
) -> Result<()> {
    let setup = slice_setup(config, pin, guess)?;
    let problem = SliceProblem::new(
        setup.proto.as_ref(),
        setup.fixed_state,
        route_of(route)?,
        Tolerances::default(),
    );
    let cp = match point {
        Some(path) => point_from_file(&problem, path)?,
        None => find_double_critical(&problem, setup.pin_index, setup.pin_value, setup.guess)?,
    };
    let (model, pt) = problem.model_at(&cp.params_slice)?;
    let bu = bundle_with_route(model.as_ref(), &pt, 3, problem.route())?;
    let rc = assemble(model.as_ref(), &cp, &bu)?;
    let kur = kuramoto_cubic(model.as_ref(), &cp)?;
    let (first, second) = kuramoto_stationarity(model.as_ref(), &cp)?;
    let flux_scale = model.conservation(&pt.k, &pt.omega).1.norm().max(1.0);
    let doc = KuramotoDoc {
        model: model.name().to_string(),
        params: model.params_json(),
        params_slice: cp.params_slice,
        kuramoto_cubic: kur,
        two_a1_raw: 2.0 * rc.a1_raw,
        rel_mismatch: (kur - 2.0 * rc.a1_raw).abs() / (2.0 * rc.a1_raw).abs().max(1e-300),
        stationarity_first: first.norm() / flux_scale,
        stationarity_second: second.norm() / flux_scale,
    };
    write_output(&to_json_string(&doc), output)
}

pub struct SimulateArgsParsed {
    pub a0: f64,
    pub a1: f64,
    pub a2: f64,
    pub l: f64,
    pub n: usize,
    pub dt: Option<f64>,
    pub t_end: f64,
    pub ic: String,
    pub snap_every: usize,
    pub format: String,
    pub output: Option<PathBuf>,
}

fn load_ic(spec: &str, l: f64, n: usize, a0: f64, a1: f64, a2: f64) -> Result<WaveField> {
    if let Some(rest) = spec.strip_prefix("soliton:") {
        let parts = parse_pair(rest, "--ic soliton:A,X0")?;
        return soliton(a0, a1, a2, parts[0], parts[1], l, n);
    }
    if let Some(path) = spec.strip_prefix("file:") {
        let path = Path::new(path);
        let text = std::fs::read_to_string(path).map_err(|e| {
            WaveError::InvalidInput(format!("cannot read {}: {e}", path.display()))
        })?;
        let values: Vec<f64> = if path.extension().is_some_and(|e| e == "json") {
            let v: serde_json::Value = serde_json::from_str(&text)
                .map_err(|e| WaveError::InvalidInput(format!("{}: {e}", path.display())))?;
            let arr = v
                .get("q")
                .and_then(|q| q.as_array())
                .ok_or_else(|| {
                    WaveError::InvalidInput(format!("{}: expected a 'q' array", path.display()))
                })?;
            arr.iter()
                .map(|x| x.as_f64().ok_or_else(|| WaveError::InvalidInput("non-numeric q".into())))
                .collect::<Result<_>>()?
        } else {
            // CSV with X,q columns and a header line
            text.lines()
                .skip(1)
                .filter(|l| !l.trim().is_empty())
                .map(|line| {
                    line.split(',')
                        .nth(1)
                        .ok_or_else(|| WaveError::InvalidInput(format!("bad CSV line '{line}'")))?
                        .trim()
                        .parse::<f64>()
                        .map_err(|e| WaveError::InvalidInput(format!("'{line}': {e}")))
                })
                .collect::<Result<_>>()?
        };
        if values.len() != n {
            return Err(WaveError::InvalidInput(format!(
                "initial condition has {} samples but --N is {n}",
                values.len()
            )));
        }
        return WaveField::new(l, values, 0.0);
    }
    Err(WaveError::InvalidInput(format!(
        "unknown --ic '{spec}' (expected soliton:A,X0 or file:path)"
    )))
}

pub fn cmd_simulate(args: SimulateArgsParsed) -> Result<()> {
    let field = load_ic(&args.ic, args.l, args.n, args.a0, args.a1, args.a2)?;
    let bound = MkdvRun::new(args.a0, args.a1, args.a2, 1.0, args.n)?
        .stability_bound(args.l / args.n as f64, field.max_abs().max(1e-12));
    let dt = args.dt.unwrap_or(0.125 * bound);
    let mut run = MkdvRun::new(args.a0, args.a1, args.a2, dt, args.n)?;

    // frames recorded every snap_every steps (0 = endpoints only)
    let mut frames: Vec<FrameDoc> = vec![FrameDoc {
        time: field.time,
        q: field.values.clone(),
    }];
    let mut current = field;
    let mut diagnostics = vec![];
    if args.snap_every == 0 {
        let (out, diags) = run.integrate(current, args.t_end)?;
        diagnostics = diags;
        frames.push(FrameDoc {
            time: out.time,
            q: out.values.clone(),
        });
    } else {
        let steps_total = (args.t_end / dt).ceil() as usize;
        let mut step_count = 0usize;
        diagnostics.push(modwave::mkdv::DiagnosticsRow {
            time: current.time,
            mass: invariants(&current, (args.a0, args.a1, args.a2)).0,
            momentum: invariants(&current, (args.a0, args.a1, args.a2)).1,
            energy: invariants(&current, (args.a0, args.a1, args.a2)).2,
        });
        while step_count < steps_total {
            let chunk = args.snap_every.min(steps_total - step_count);
            let target = (current.time + chunk as f64 * dt).min(args.t_end);
            let (out, diags) = run.integrate(current, target)?;
            diagnostics.extend(diags.into_iter().skip(1));
            frames.push(FrameDoc {
                time: out.time,
                q: out.values.clone(),
            });
            current = out;
            step_count += chunk;
        }
    }

    match args.format.as_str() {
        "json" => {
            let doc = SimulateDoc {
                a0: args.a0,
                a1: args.a1,
                a2: args.a2,
                l: args.l,
                n: args.n,
                dt,
                t_end: args.t_end,
                ic: args.ic.clone(),
                snap_every: args.snap_every,
                frames,
                diagnostics,
            };
            write_output(&to_json_string(&doc), args.output.as_deref())
        }
        "csv" => {
            let dir = args.output.as_deref().ok_or_else(|| {
                WaveError::InvalidInput("--format csv needs --output <dir>".into())
            })?;
            std::fs::create_dir_all(dir).map_err(|e| {
                WaveError::InvalidInput(format!("cannot create {}: {e}", dir.display()))
            })?;
            let dx = args.l / args.n as f64;
            for (idx, frame) in frames.iter().enumerate() {
                let mut text = String::from("X,q\n");
                for (j, q) in frame.q.iter().enumerate() {
                    text.push_str(&format!("{},{}\n", j as f64 * dx, q));
                }
                std::fs::write(dir.join(format!("frame_{idx:06}.csv")), text).map_err(|e| {
                    WaveError::InvalidInput(format!("cannot write frame: {e}"))
                })?;
            }
            let mut diag = String::from("time,mass,momentum,energy\n");
            for row in &diagnostics {
                diag.push_str(&format!(
                    "{},{},{},{}\n",
                    row.time, row.mass, row.momentum, row.energy
                ));
            }
            std::fs::write(dir.join("diagnostics.csv"), diag)
                .map_err(|e| WaveError::InvalidInput(format!("cannot write diagnostics: {e}")))?;
            Ok(())
        }
        other => Err(WaveError::InvalidInput(format!(
            "unknown format '{other}' (expected json|csv)"
        ))),
    }
}
