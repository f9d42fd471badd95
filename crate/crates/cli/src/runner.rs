//! Study execution and CSV table construction.

use std::f64::consts::PI;

use iga_dual::analysis::{
    analytic_static, compute_spectrum, l2_error_field, mode_error, static_errors, ConvergenceTable,
    Quantity,
};
use iga_dual::assembly::field_eval;
use iga_dual::dynamics::{
    project_field, run_transient, Forcing, ForcingSpec, InitialConditions, Signal, TimeHistory,
    TransientSettings,
};
use iga_dual::scheme::{discretize, Discretization, Scheme};
use iga_dual::spline::{
    mesh_from_breakpoints, mesh_preset, uniform_mesh, weighted_preset, SplineSpace,
};
use iga_dual::IgaError;

use crate::config::{
    ConvergenceProblem, ConvergenceQuantity, ForcingKind, InitialKind, IntegratorSpec, MeshChoice,
    MeshSpec, Scenario, SignalSource, Study,
};
use crate::error::CliError;
use crate::output::{Cell, CsvTable};
use crate::signal::read_signal_csv;

/// Spline space of a mesh description refined `m` times per base span.
pub fn build_space(mesh: &MeshSpec, m: usize, length: f64) -> Result<SplineSpace<f64>, IgaError> {
    match &mesh.choice {
        MeshChoice::Preset(kind) => mesh_preset(*kind, mesh.p, m, length),
        MeshChoice::Uniform => uniform_mesh(mesh.p, mesh.elements * m, length),
        MeshChoice::Weighted => weighted_preset(mesh.p, m, length),
        MeshChoice::Custom(b) => {
            let (lo, hi) = (b[0], b[b.len() - 1]);
            let unit: Vec<f64> = b.iter().map(|&x| (x - lo) / (hi - lo)).collect();
            mesh_from_breakpoints(&unit, mesh.p, m, length)
        }
    }
}

fn core<T>(ctx: &str, r: Result<T, IgaError>) -> Result<T, CliError> {
    r.map_err(|e| CliError::from_core(ctx.to_string(), e))
}

fn discretize_at(sc: &Scenario, m: usize) -> Result<(Discretization<f64>, Scheme), CliError> {
    let scheme = sc.scheme.resolve(sc.mesh.p);
    let space = core("mesh", build_space(&sc.mesh, m, sc.model.length))?;
    let disc = core("discretization", discretize(&sc.model, &space, scheme))?;
    Ok((disc, scheme))
}

fn metadata(sc: &Scenario, scheme: &Scheme, dt: Option<f64>, elements: Option<usize>) -> String {
    let q = scheme
        .q()
        .map_or_else(|| "none".to_string(), |q| q.to_string());
    let dt = dt.map_or_else(|| "none".to_string(), |d| format!("{d:.16e}"));
    let mut s = format!(
        "scheme={scheme}, p={}, q={q}, dt={dt}, study={}",
        sc.mesh.p,
        sc.study.name()
    );
    let mesh = match &sc.mesh.choice {
        MeshChoice::Preset(k) => format!("{k:?}"),
        MeshChoice::Uniform => "uniform".into(),
        MeshChoice::Weighted => "weighted".into(),
        MeshChoice::Custom(_) => "custom".into(),
    };
    s.push_str(&format!(", mesh={mesh}"));
    if let Some(n) = elements {
        s.push_str(&format!(", elements={n}"));
    }
    s
}

/// Runs a scenario and returns its CSV table.
pub fn run_scenario(sc: &Scenario) -> Result<CsvTable, CliError> {
    match sc.study {
        Study::Static => run_static(sc),
        Study::Spectrum => run_spectrum(sc),
        Study::Modeshape => run_modeshape(sc),
        Study::Transient => run_transient_study(sc),
        Study::Convergence => run_convergence(sc),
    }
}

fn run_static(sc: &Scenario) -> Result<CsvTable, CliError> {
    let (disc, scheme) = discretize_at(sc, sc.mesh.refinement)?;
    let u = core("static solve", disc.static_solution())?;
    let space = &disc.space;
    let x0 = space.geometry()[0];
    let l = sc.model.length;
    let mut rows = Vec::with_capacity(sc.samples);
    for i in 0..sc.samples {
        let x = l * i as f64 / (sc.samples - 1) as f64;
        let xi = core("field evaluation", space.parameter_at(x + x0))?;
        let f = core("field evaluation", field_eval(space, &u, sc.model.ea, xi))?;
        let (ur, nr) = analytic_static(&sc.model, x).unwrap_or((f64::NAN, f64::NAN));
        rows.push(vec![
            Cell::Float(x),
            Cell::Float(f.u),
            Cell::Float(ur),
            Cell::Float(f.normal_force),
            Cell::Float(nr),
        ]);
    }
    let mut trailer = Vec::new();
    if analytic_static(&sc.model, 0.0).is_some() {
        let ea = sc.model.ea;
        let model = &sc.model;
        let err = |q: Quantity, pick: fn((f64, f64)) -> f64| {
            l2_error_field(
                space,
                &u,
                ea,
                &|x| analytic_static(model, x).map_or(f64::NAN, pick),
                q,
            )
            .ok()
        };
        if let Some(e) = err(Quantity::Displacement, |r| r.0) {
            trailer.push(format!("l2_error_u={e:.16e}"));
        }
        if let Some(e) = err(Quantity::NormalForce, |r| r.1) {
            trailer.push(format!("l2_error_N={e:.16e}"));
        }
    }
    Ok(CsvTable {
        meta: metadata(sc, &scheme, None, Some(space.num_elements())),
        header: ["x", "u_h", "u_ref", "F_N_h", "F_N_ref"]
            .map(String::from)
            .to_vec(),
        rows,
        trailer,
    })
}

fn run_spectrum(sc: &Scenario) -> Result<CsvTable, CliError> {
    let (disc, scheme) = discretize_at(sc, sc.mesh.refinement)?;
    let sp = core("spectrum", compute_spectrum(&disc))?;
    let rows = (0..sp.len())
        .map(|i| {
            vec![
                Cell::Int(i + 1),
                Cell::Float(sp.omega_h[i]),
                Cell::Float(sp.omega_ref[i]),
                Cell::Float(sp.ratios[i]),
                Cell::Int(usize::from(sp.outlier_flags[i])),
            ]
        })
        .collect();
    Ok(CsvTable {
        meta: metadata(sc, &scheme, None, Some(disc.space.num_elements())),
        header: ["n", "omega_h", "omega_ref", "ratio", "outlier_flag"]
            .map(String::from)
            .to_vec(),
        rows,
        trailer: vec![format!("n_outliers={}", sp.n_outliers)],
    })
}

fn slope_line(table: &ConvergenceTable<f64>) -> Result<String, CliError> {
    let slope = core("convergence rate", table.slope())?;
    Ok(format!("slope={slope:.16e}"))
}

fn table_rows(table: &ConvergenceTable<f64>) -> Vec<Vec<Cell>> {
    table
        .rows
        .iter()
        .map(|r| {
            vec![
                Cell::Int(r.n_el),
                Cell::Float(r.h_max),
                Cell::Float(r.error),
            ]
        })
        .collect()
}

fn run_modeshape(sc: &Scenario) -> Result<CsvTable, CliError> {
    let mut table = ConvergenceTable::new();
    let mut scheme = sc.scheme.resolve(sc.mesh.p);
    for &m in &sc.mesh.refinements {
        let (disc, s) = discretize_at(sc, m)?;
        scheme = s;
        if sc.mode > disc.n_free() {
            return Err(CliError::Config(format!(
                "modeshape.mode: mode {} exceeds the {} degrees of freedom at refinement {m}",
                sc.mode,
                disc.n_free()
            )));
        }
        let e = core("mode shape", mode_error(&disc, sc.mode))?;
        table.push(
            disc.space.num_elements(),
            core("mesh", disc.space.h_max())?,
            e,
        );
    }
    let mut trailer = vec![format!("mode={}", sc.mode)];
    if table.rows.len() >= 3 {
        trailer.push(slope_line(&table)?);
    }
    Ok(CsvTable {
        meta: metadata(sc, &scheme, None, None),
        header: ["n_el", "h_max", "l2_error"].map(String::from).to_vec(),
        rows: table_rows(&table),
        trailer,
    })
}

fn load_signal(src: &SignalSource) -> Result<Signal<f64>, CliError> {
    match src {
        SignalSource::Synthetic => core("synthetic signal", Signal::synthetic_burst(50.0, 0.01)),
        SignalSource::File(path) => read_signal_csv(path),
    }
}

/// Angular frequency of the `sin(2 pi x / L)` standing wave.
fn standing_wave_omega(sc: &Scenario) -> f64 {
    2.0 * PI / sc.model.length * (sc.model.ea / sc.model.mu).sqrt()
}

fn initial_conditions(
    sc: &Scenario,
    disc: &Discretization<f64>,
    kind: InitialKind,
) -> Result<InitialConditions<f64>, CliError> {
    let n = disc.n_free();
    Ok(match kind {
        InitialKind::Rest => InitialConditions::at_rest(n),
        InitialKind::StandingWave => {
            let w = standing_wave_omega(sc);
            let l = sc.model.length;
            let v0 = core(
                "initial velocity",
                project_field(disc, &|x| w * (2.0 * PI * x / l).sin()),
            )?;
            InitialConditions {
                u0: vec![0.0; n],
                v0,
            }
        }
    })
}

fn integrate(
    sc: &Scenario,
    disc: &Discretization<f64>,
    spec: &IntegratorSpec,
    initial: InitialKind,
    forcing_kind: ForcingKind,
    probes: Vec<f64>,
) -> Result<TimeHistory<f64>, CliError> {
    let init = initial_conditions(sc, disc, initial)?;
    let forcing_spec = match forcing_kind {
        ForcingKind::None => ForcingSpec::None,
        ForcingKind::StaticLoad => ForcingSpec::StaticLoadConstant,
        ForcingKind::Ground => {
            let src = spec
                .signal
                .as_ref()
                .ok_or_else(|| CliError::Config("integrator.signal: missing".into()))?;
            ForcingSpec::GroundAccel {
                signal: load_signal(src)?,
                mass: spec.ground_mass,
            }
        }
    };
    let forcing = core("forcing", Forcing::from_spec(disc, &forcing_spec))?;
    let settings = TransientSettings {
        integrator: spec.method,
        dt_rule: spec.dt_rule,
        t_end: spec.t_end,
        probes,
        stride: spec.stride,
    };
    core(
        "time integration",
        run_transient(disc, &settings, &init, &forcing),
    )
}

fn run_transient_study(sc: &Scenario) -> Result<CsvTable, CliError> {
    let spec = sc
        .integrator
        .as_ref()
        .ok_or_else(|| CliError::Config("integrator: section required".into()))?;
    let (disc, scheme) = discretize_at(sc, sc.mesh.refinement)?;
    let hist = integrate(
        sc,
        &disc,
        spec,
        spec.initial,
        spec.forcing,
        spec.probes.clone(),
    )?;
    let mut header = vec!["t".to_string()];
    for k in 1..=hist.probes.len() {
        header.extend([format!("u_{k}"), format!("v_{k}"), format!("a_{k}")]);
    }
    let rows = (0..hist.len())
        .map(|i| {
            let mut row = vec![Cell::Float(hist.times[i])];
            for k in 0..hist.probes.len() {
                row.extend([
                    Cell::Float(hist.u[k][i]),
                    Cell::Float(hist.v[k][i]),
                    Cell::Float(hist.a[k][i]),
                ]);
            }
            row
        })
        .collect();
    let probes: Vec<String> = hist.probes.iter().map(|x| format!("{x:.16e}")).collect();
    Ok(CsvTable {
        meta: metadata(sc, &scheme, Some(hist.dt), Some(disc.space.num_elements())),
        header,
        rows,
        trailer: vec![
            format!("steps={}", hist.n_steps),
            format!("probes={}", probes.join(" ")),
        ],
    })
}

fn run_convergence(sc: &Scenario) -> Result<CsvTable, CliError> {
    let mut table = ConvergenceTable::new();
    let mut scheme = sc.scheme.resolve(sc.mesh.p);
    let mut last_dt = None;
    for &m in &sc.mesh.refinements {
        let (disc, s) = discretize_at(sc, m)?;
        scheme = s;
        let e = match sc.problem {
            ConvergenceProblem::Static => {
                let (eu, en) = core("static errors", static_errors(&disc))?;
                match sc.quantity {
                    ConvergenceQuantity::Displacement => eu,
                    ConvergenceQuantity::NormalForce => en,
                }
            }
            ConvergenceProblem::StandingWave => {
                let spec = sc
                    .integrator
                    .as_ref()
                    .ok_or_else(|| CliError::Config("integrator: section required".into()))?;
                let hist = integrate(
                    sc,
                    &disc,
                    spec,
                    InitialKind::StandingWave,
                    ForcingKind::None,
                    vec![],
                )?;
                last_dt = Some(hist.dt);
                let coeffs = core("expand", disc.system.expand(&hist.final_u))?;
                let (w, l, t) = (standing_wave_omega(sc), sc.model.length, spec.t_end);
                core(
                    "standing-wave error",
                    l2_error_field(
                        &disc.space,
                        &coeffs,
                        sc.model.ea,
                        &|x| (2.0 * PI * x / l).sin() * (w * t).sin(),
                        Quantity::Displacement,
                    ),
                )?
            }
        };
        table.push(
            disc.space.num_elements(),
            core("mesh", disc.space.h_max())?,
            e,
        );
    }
    Ok(CsvTable {
        meta: metadata(sc, &scheme, last_dt, None),
        header: ["n_el", "h_max", "error"].map(String::from).to_vec(),
        rows: table_rows(&table),
        trailer: vec![slope_line(&table)?],
    })
}
