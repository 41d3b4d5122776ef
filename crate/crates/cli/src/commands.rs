use std::fs;
use std::path::Path;

use rabi_core::analysis::{self, AnalysisError, Bounded, FitTemplate, FreeParam, LmOptions};
use rabi_core::csv::{format_g12, read_columns, write_columns};
use rabi_core::dynamics::{w_vacuum_reducible, InversionSignal, ModelRegistry, TimeGrid};
use rabi_core::oracle::{
    build_model, evolve_exact, verify_ccr, verify_constants_of_motion, verify_overlaps, verify_projectors, Check,
    Fault, InitialField, InitialState, OracleError, OracleSpec, Report,
};
use rabi_core::params::{FreqConvention, PhysicalParams};
use rabi_core::scenario::{preset, Scenario};
use rabi_core::weights::{thermal_weights, DEFAULT_TAIL_EPS};

use crate::config;
use crate::{CliError, FitArgs, OracleArgs, SimulateArgs, SpectrumArgs};

fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn signal_csv(signal: &InversionSignal, p_excited: bool) -> String {
    let (header, shift) = if p_excited { ("t_us,p_excited", 0.5) } else { ("t_us,w", 0.0) };
    write_columns(header, signal.times().into_iter().zip(signal.samples.iter().map(|w| w + shift)))
}

fn run(scenario: &Scenario) -> Result<InversionSignal, CliError> {
    scenario.run(&ModelRegistry::builtin()).map_err(|e| CliError::Config(e.to_string()))
}

pub fn simulate(args: &SimulateArgs) -> Result<(), CliError> {
    if let Some(name) = &args.preset {
        return simulate_preset(name, &args.out_dir, args.p_excited);
    }
    let mut flags = args.model.flags();
    flags.push((config::KEY_T_MAX, args.t_max_us.clone()));
    flags.push((config::KEY_DT, args.dt_us.clone()));
    let raw = config::merged(args.model.config.as_deref(), &flags)?;
    let signal = run(&config::scenario(&raw)?)?;
    emit(args.out.as_deref(), &signal_csv(&signal, args.p_excited))
}

fn simulate_preset(name: &str, dir: &Path, p_excited: bool) -> Result<(), CliError> {
    let preset = preset(name).ok_or_else(|| CliError::Config(format!("unknown preset `{name}`")))?;
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    if preset.curves.is_empty() {
        // photon-number distribution instead of a time signal
        let table = thermal_weights(0.05, DEFAULT_TAIL_EPS).map_err(|e| CliError::Config(e.to_string()))?;
        let path = dir.join(format!("{name}_thermal.csv"));
        let text = write_columns("n,probability", table.iter().map(|(n, p)| (n as f64, p)));
        emit(Some(&path), &text)?;
        println!("{}", path.display());
        return Ok(());
    }
    for curve in &preset.curves {
        let signal = run(&curve.scenario)?;
        let path = dir.join(format!("{name}_{}.csv", curve.name));
        emit(Some(&path), &signal_csv(&signal, p_excited))?;
        println!("{}", path.display());
    }
    Ok(())
}

fn parse_free(spec: &str, template: &FitTemplate<'_>) -> Result<Vec<(FreeParam, Bounded)>, CliError> {
    let bad = |item: &str| CliError::Config(format!("invalid entry `{item}` for key `free`"));
    let mut out: Vec<(FreeParam, Bounded)> = Vec::new();
    for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (name, rest) = item.split_once('=').map_or((item, None), |(n, r)| (n, Some(r)));
        let kind = FreeParam::parse(name.trim()).ok_or_else(|| bad(item))?;
        if out.iter().any(|(k, _)| *k == kind) {
            return Err(bad(item));
        }
        let (lower, upper) = kind.default_bounds();
        let mut b = Bounded { initial: template.current(kind), lower, upper };
        if let Some(rest) = rest {
            let nums: Vec<f64> = rest.split(':').map(|x| x.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|_| bad(item))?;
            match nums.as_slice() {
                [init] => b.initial = *init,
                [init, lo, hi] => b = Bounded { initial: *init, lower: *lo, upper: *hi },
                _ => return Err(bad(item)),
            }
        }
        out.push((kind, b));
    }
    if out.is_empty() {
        return Err(CliError::Config("key `free` lists no parameters".into()));
    }
    Ok(out)
}

fn analysis_error(e: AnalysisError) -> CliError {
    match e {
        AnalysisError::NoConvergence { .. } | AnalysisError::SingularJacobian => CliError::NoConvergence(e.to_string()),
        other => CliError::Config(other.to_string()),
    }
}

pub fn fit(args: &FitArgs) -> Result<(), CliError> {
    let data = read_columns(&read(&args.data)?)
        .map_err(|e| CliError::Config(format!("{}: {e}", args.data.display())))?;
    let raw = config::merged(args.model.config.as_deref(), &args.model.flags())?;
    let mut with_g = raw.clone();
    with_g.entry("g_khz".into()).or_insert_with(|| "47".into());
    let params = rabi_core::params::normalize(&with_g).map_err(|e| CliError::Config(e.to_string()))?;
    let model = ModelRegistry::builtin()
        .create(&config::model_name(&raw)?, &Default::default())
        .map_err(|e| CliError::Config(e.to_string()))?;
    let baseline = match config::baseline(&raw)? {
        rabi_core::dynamics::Baseline::Explicit(b) => Some(b),
        rabi_core::dynamics::Baseline::LongTimeMean => None,
    };
    let template = FitTemplate { model: model.as_ref(), params, state: config::field_state(&raw)?, baseline };
    let free = parse_free(&args.free, &template)?;
    let options = LmOptions { max_iterations: args.max_iterations, ..LmOptions::default() };
    let result = analysis::fit(&data, &template, &free, &options).map_err(analysis_error)?;

    println!("model {}, {} points, {} iterations, rss {}", model.name(), data.len(), result.iterations, format_g12(result.rss));
    for ((name, v), se) in result.names.iter().zip(&result.values).zip(&result.std_errors) {
        println!("  {name:<8} = {} ± {}", format_g12(*v), format_g12(*se));
    }
    let mut text = format!(
        "# rss = {}\n# iterations = {}\n# converged = {}\nparam,value,std_error\n",
        format_g12(result.rss),
        result.iterations,
        result.converged
    );
    for ((name, v), se) in result.names.iter().zip(&result.values).zip(&result.std_errors) {
        text.push_str(&format!("{name},{},{}\n", format_g12(*v), format_g12(*se)));
    }
    emit(args.out.as_deref(), &text)
}

fn fault(name: &str) -> Result<Fault, CliError> {
    match name {
        "ladder-normalization" => Ok(Fault::LadderNormalization),
        "swapped-hat-projector" => Ok(Fault::SwappedHatProjector),
        "flipped-atomic-sign" => Ok(Fault::FlippedAtomicSign),
        other => Err(CliError::Config(format!("invalid value `{other}` for key `negative_control`"))),
    }
}

fn oracle_error(e: OracleError) -> CliError {
    match e {
        OracleError::TruncationLeak { .. } => CliError::Leak(e.to_string()),
        other => CliError::Config(other.to_string()),
    }
}

pub fn oracle(args: &OracleArgs) -> Result<(), CliError> {
    let convention: FreqConvention = args
        .convention
        .parse()
        .map_err(|_| CliError::Config(format!("invalid value `{}` for key `convention`", args.convention)))?;
    let params = PhysicalParams::builder(args.g_khz)
        .delta_khz(args.delta_khz)
        .convention(convention)
        .n_osc(args.n_osc as u64)
        .vacuum(args.z, args.z_omega.unwrap_or(args.z))
        .build()
        .map_err(|e| CliError::Config(e.to_string()))?;
    let mut spec = OracleSpec::new(args.n_osc, args.modes, args.fock);
    if let Some(name) = &args.negative_control {
        spec = spec.with_fault(fault(name)?);
    }
    let model = build_model(&spec, &params).map_err(oracle_error)?;
    println!("oracle: N = {}, M = {}, F = {}, dim = {}", args.n_osc, args.modes, args.fock, model.dim());

    let mut report = Report::default();
    report.checks.extend(verify_ccr(&model).checks);
    report.checks.extend(verify_projectors(&model).checks);
    let constants = verify_constants_of_motion(&model);
    report.checks.extend(constants.report.checks);
    let z = (args.n_coh / params.z_max()).sqrt();
    report.checks.extend(verify_overlaps(&model, z).map_err(oracle_error)?.checks);

    let grid = TimeGrid::window(args.t_max_us, args.dt_us).map_err(|e| CliError::Config(e.to_string()))?;
    let closed = w_vacuum_reducible(&params, &grid).map_err(|e| CliError::Config(e.to_string()))?;
    let deviation = match evolve_exact(&model, &InitialState::excited(InitialField::Vacuum), &grid) {
        Ok(ev) => ev.signal.samples.iter().zip(&closed.samples).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max),
        Err(OracleError::FactorizationMismatch(d)) => d,
        Err(e) => return Err(oracle_error(e)),
    };
    report.checks.push(Check { name: "vacuum_closed_form".into(), deviation, tolerance: 1e-10 });

    print!("{report}");
    println!("norm(M - N) = {:.3e}", constants.m_minus_n);
    let failed = report.checks.iter().filter(|c| !c.passed()).count();
    if failed > 0 {
        return Err(CliError::Failed(format!("{failed} of {} checks", report.checks.len())));
    }
    Ok(())
}

pub fn spectrum(args: &SpectrumArgs) -> Result<(), CliError> {
    let rows = read_columns(&read(&args.input)?)
        .map_err(|e| CliError::Config(format!("{}: {e}", args.input.display())))?;
    if rows.len() < 2 {
        return Err(CliError::Config(format!("{}: need at least 2 samples", args.input.display())));
    }
    let t0 = rows[0].0;
    let dt = (rows[rows.len() - 1].0 - t0) / (rows.len() - 1) as f64;
    for (i, (t, _)) in rows.iter().enumerate() {
        if !(dt > 0.0) || (t - (t0 + i as f64 * dt)).abs() > 1e-6 * dt.abs().max(1e-300) {
            return Err(CliError::Config(format!("{}: grid is not uniform at row {}", args.input.display(), i + 1)));
        }
    }
    let samples: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let s = analysis::spectrum(t0, dt, &samples, args.symmetrize);
    let text = if args.peaks {
        write_columns("freq_khz,amplitude", s.peaks().into_iter().map(|p| (p.freq_khz, p.amplitude)))
    } else {
        write_columns("freq_khz,amplitude", s.freqs_khz.iter().copied().zip(s.amplitudes.iter().copied()))
    };
    emit(args.out.as_deref(), &text)
}
