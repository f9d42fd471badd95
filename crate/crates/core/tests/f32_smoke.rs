use iga_dual::analysis::{compute_spectrum, static_errors};
use iga_dual::assembly::{BoundaryCondition, LoadSpec, TrussModel};
use iga_dual::dynamics::{
    run_transient, DtRule, Forcing, InitialConditions, Integrator, TransientSettings,
};
use iga_dual::scheme::{discretize, Scheme};
use iga_dual::spline::{mesh_preset, MeshKind};

fn model() -> TrussModel<f32> {
    TrussModel::new(
        1.0f32,
        1.0,
        1.0,
        BoundaryCondition::Fixed,
        BoundaryCondition::Fixed,
    )
    .unwrap()
    .with_load(LoadSpec::sine(1.0))
}

#[test]
fn static_sine_in_single_precision() {
    let space = mesh_preset::<f32>(MeshKind::A, 2, 4, 1.0).unwrap();
    for scheme in [Scheme::consistent(), Scheme::ig(), Scheme::ad(2)] {
        let (eu, en) = static_errors(&discretize(&model(), &space, scheme).unwrap()).unwrap();
        assert!(eu < 1e-3 && en < 1e-2, "{scheme}: {eu} {en}");
    }
}

#[test]
fn spectrum_in_single_precision() {
    let space = mesh_preset::<f32>(MeshKind::A, 2, 2, 1.0).unwrap();
    let sp =
        compute_spectrum(&discretize(&model(), &space, Scheme::ad_rowsum(2)).unwrap()).unwrap();
    assert_eq!(sp.len(), 10);
    assert!((sp.ratios[0] - 1.0).abs() < 1e-3);
}

#[test]
fn transient_in_single_precision() {
    let space = mesh_preset::<f32>(MeshKind::A, 2, 2, 1.0).unwrap();
    let d = discretize(&model(), &space, Scheme::nurbs_rowsum()).unwrap();
    let n = d.n_free();
    let settings = TransientSettings {
        integrator: Integrator::Cdm,
        dt_rule: DtRule::HOverTen,
        t_end: 1.0f32,
        probes: vec![0.5],
        stride: 1,
    };
    let h = run_transient(
        &d,
        &settings,
        &InitialConditions::at_rest(n),
        &Forcing::constant(d.system.load.clone()),
    )
    .unwrap();
    assert_eq!(h.len(), h.n_steps + 1);
    assert!(h.u[0].iter().all(|u| u.is_finite()));
}
