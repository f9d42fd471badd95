use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use iga_dual::dynamics::DtRule;
use iga_dual_cli::config::{
    parse_ground_mass, validate, MeshChoice, QSpec, SchemeSpec, SignalSource, TestChoice,
};
use iga_dual_cli::{parse_config, run_scenario, CliError, CsvTable, Scenario, Study};

#[derive(Parser)]
#[command(
    name = "iga-dual",
    version,
    about = "Isogeometric truss studies with dual test functions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Static solution sampled along the bar.
    Static(RunArgs),
    /// Discrete natural frequencies against the analytic spectrum.
    Spectrum(RunArgs),
    /// L2 error of one mode shape over a refinement sequence.
    Modeshape(RunArgs),
    /// Explicit time integration with probe histories.
    Transient(RunArgs),
    /// Error over a refinement sequence with a fitted rate.
    Convergence(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Scenario file; repeat to run several.
    #[arg(long, required = true)]
    config: Vec<PathBuf>,
    /// Spline degree override; comma list sweeps.
    #[arg(long, value_delimiter = ',')]
    p: Vec<usize>,
    /// Dual bandwidth override (integer, min or max); comma list sweeps.
    #[arg(long, value_delimiter = ',')]
    q: Vec<QSpec>,
    /// Scheme override such as nurbs, ig, ad, ad+rowsum, ig+naive; comma list sweeps.
    #[arg(long, value_delimiter = ',')]
    scheme: Vec<String>,
    /// Element count override; comma list sweeps.
    #[arg(long, value_delimiter = ',')]
    elements: Vec<usize>,
    /// Output CSV path; sweeps append a scenario label to the file stem.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for sweeps.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Fixed time step override.
    #[arg(long)]
    dt: Option<f64>,
    /// Ground forcing mass override: scheme or consistent.
    #[arg(long)]
    ground_mass: Option<String>,
    /// Ground acceleration CSV override.
    #[arg(long)]
    signal: Option<PathBuf>,
}

struct Job {
    label: String,
    scenario: Scenario,
}

fn arg_error(flag: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("--{flag}: {msg}"))
}

fn apply_elements(s: &mut Scenario, n: usize) -> Result<(), CliError> {
    if n == 0 {
        return Err(arg_error("elements", "must be positive"));
    }
    let refinement_study = matches!(s.study, Study::Modeshape | Study::Convergence);
    match s.mesh.choice {
        MeshChoice::Uniform => s.mesh.elements = n,
        _ if refinement_study => {
            return Err(arg_error(
                "elements",
                "refinement studies on non-uniform meshes use mesh.refinements",
            ))
        }
        ref c => {
            let base = c.base_elements(s.mesh.elements);
            if !n.is_multiple_of(base) {
                return Err(arg_error(
                    "elements",
                    format!("{n} is not a multiple of the {base} base elements"),
                ));
            }
            s.mesh.refinement = n / base;
        }
    }
    Ok(())
}

fn apply_scheme(s: &mut Scenario, scheme: Option<&str>, q: Option<QSpec>) -> Result<(), CliError> {
    match (scheme, q) {
        (Some(name), q) => {
            let q = q.or(match s.scheme.test {
                TestChoice::Ad(q) => Some(q),
                _ => None,
            });
            let q = if name.split('+').next() == Some("ad") {
                q
            } else {
                None
            };
            s.scheme = SchemeSpec::parse(name, q).map_err(|e| arg_error("scheme", e))?;
        }
        (None, Some(q)) => match s.scheme.test {
            TestChoice::Ad(_) => s.scheme.test = TestChoice::Ad(q),
            _ => return Err(arg_error("q", "only applies to the ad scheme")),
        },
        (None, None) => {}
    }
    Ok(())
}

fn options<T: Clone>(v: &[T]) -> Vec<Option<T>> {
    if v.is_empty() {
        vec![None]
    } else {
        v.iter().cloned().map(Some).collect()
    }
}

fn sanitize(s: &str) -> String {
    s.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '.' || c == '-' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

fn expand_jobs(study: Study, args: &RunArgs) -> Result<Vec<Job>, CliError> {
    let ground_mass = args
        .ground_mass
        .as_deref()
        .map(parse_ground_mass)
        .transpose()
        .map_err(|e| arg_error("ground-mass", e))?;
    // q only multiplies ad schemes; other schemes appear once.
    let mut scheme_q: Vec<(Option<String>, Option<QSpec>)> = Vec::new();
    for scheme in options(&args.scheme) {
        let is_ad = scheme
            .as_deref()
            .is_none_or(|s| s.split('+').next() == Some("ad"));
        let qs = if is_ad || args.q.is_empty() {
            options(&args.q)
        } else {
            vec![None]
        };
        for q in qs {
            scheme_q.push((scheme.clone(), q));
        }
    }
    let mut jobs = Vec::new();
    for path in &args.config {
        let base = parse_config(path)?;
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        for p in options(&args.p) {
            for (scheme, q) in &scheme_q {
                for elements in options(&args.elements) {
                    let mut s = base.clone();
                    s.study = study;
                    let mut label = Vec::new();
                    if args.config.len() > 1 {
                        label.push(sanitize(&stem));
                    }
                    if let Some(p) = p {
                        s.mesh.p = p;
                        label.push(format!("p{p}"));
                    }
                    apply_scheme(&mut s, scheme.as_deref(), *q)?;
                    if let Some(name) = scheme {
                        label.push(sanitize(name));
                    }
                    if let Some(q) = q {
                        label.push(format!("q{q}"));
                    }
                    if let Some(n) = elements {
                        apply_elements(&mut s, n)?;
                        label.push(format!("e{n}"));
                    }
                    apply_integrator_overrides(&mut s, args, ground_mass)?;
                    validate(&s)?;
                    jobs.push(Job {
                        label: label.join("_"),
                        scenario: s,
                    });
                }
            }
        }
    }
    Ok(jobs)
}

fn apply_integrator_overrides(
    s: &mut Scenario,
    args: &RunArgs,
    ground_mass: Option<iga_dual::dynamics::GroundMass>,
) -> Result<(), CliError> {
    let any = args.dt.is_some() || ground_mass.is_some() || args.signal.is_some();
    if !any {
        return Ok(());
    }
    let Some(spec) = s.integrator.as_mut() else {
        return Err(CliError::Config(
            "integrator: --dt, --ground-mass and --signal need an [integrator] section".into(),
        ));
    };
    if let Some(dt) = args.dt {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(arg_error(
                "dt",
                format!("must be positive and finite, got {dt}"),
            ));
        }
        spec.dt_rule = DtRule::Fixed(dt);
    }
    if let Some(gm) = ground_mass {
        spec.ground_mass = gm;
    }
    if let Some(path) = &args.signal {
        spec.signal = Some(SignalSource::File(path.clone()));
    }
    Ok(())
}

fn output_path(job: &Job, out: Option<&Path>, n_jobs: usize) -> Option<PathBuf> {
    let path = out
        .map(Path::to_path_buf)
        .or_else(|| job.scenario.output.clone())?;
    if n_jobs == 1 || job.label.is_empty() {
        return Some(path);
    }
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{stem}_{}.{}", job.label, ext.to_string_lossy()),
        None => format!("{stem}_{}", job.label),
    };
    Some(path.with_file_name(name))
}

fn run_all(jobs: &[Job], threads: usize) -> Vec<Result<CsvTable, CliError>> {
    let slots: Vec<Mutex<Option<Result<CsvTable, CliError>>>> =
        jobs.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    std::thread::scope(|scope| {
        for _ in 0..threads.clamp(1, jobs.len().max(1)) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(job) = jobs.get(i) else { break };
                let start = Instant::now();
                let result = run_scenario(&job.scenario);
                let name = if job.label.is_empty() {
                    job.scenario.study.name()
                } else {
                    &job.label
                };
                eprintln!("{name}: {:.3} s", start.elapsed().as_secs_f64());
                *slots[i].lock().expect("result slot poisoned") = Some(result);
            });
        }
    });
    slots
        .into_iter()
        .map(|m| {
            m.into_inner()
                .expect("result slot poisoned")
                .expect("job not run")
        })
        .collect()
}

/// Writes to stdout; a closed pipe ends output silently.
fn print_stdout(text: &str) -> Result<(), CliError> {
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|()| out.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(CliError::Io {
            path: PathBuf::from("<stdout>"),
            source: e,
        }),
        _ => Ok(()),
    }
}

fn execute(study: Study, args: &RunArgs) -> Result<(), CliError> {
    let jobs = if args.jobs == 0 {
        Err(arg_error("jobs", "must be at least 1"))
    } else {
        expand_jobs(study, args)
    };
    let jobs = jobs.inspect_err(|e| eprintln!("error: {e}"))?;
    let results = run_all(&jobs, args.jobs);
    let mut first_error = None;
    for (job, result) in jobs.iter().zip(results) {
        let written =
            result.and_then(
                |table| match output_path(job, args.out.as_deref(), jobs.len()) {
                    Some(path) => table.write(&path),
                    None => print_stdout(&table.render()),
                },
            );
        if let Err(e) = written {
            eprintln!(
                "error: {}{e}",
                if job.label.is_empty() {
                    String::new()
                } else {
                    format!("[{}] ", job.label)
                }
            );
            first_error.get_or_insert(e);
        }
    }
    first_error.map_or(Ok(()), Err)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (study, args) = match &cli.command {
        Command::Static(a) => (Study::Static, a),
        Command::Spectrum(a) => (Study::Spectrum, a),
        Command::Modeshape(a) => (Study::Modeshape, a),
        Command::Transient(a) => (Study::Transient, a),
        Command::Convergence(a) => (Study::Convergence, a),
    };
    let start = Instant::now();
    let result = execute(study, args);
    eprintln!("wall-clock: {:.3} s", start.elapsed().as_secs_f64());
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => ExitCode::from(e.exit_code() as u8),
    }
}
