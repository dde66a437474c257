use approx::assert_relative_eq;
use vimsim_core::mechanics::free_response;
use vimsim_core::sim::{
    extract_damping_ratio, extract_stiffness, integrate, mechanical_energy, step_limit,
};
use vimsim_core::{Channel, ImpedanceState, MaterialTable, VimGeometry};

fn link(k: f64, zeta: f64) -> (VimGeometry, ImpedanceState) {
    let g = VimGeometry::nominal();
    let b = 2.0 * zeta * (k * g.link_inertia).sqrt();
    (g, ImpedanceState::new(k, 0.0, b, 30.0).unwrap())
}

fn max_error(k: f64, zeta: f64, dt: f64, duration: f64) -> f64 {
    let (g, imp) = link(k, zeta);
    let tr = integrate(&g, &imp, 0.05, 0.0, |_| 0.0, dt, duration).unwrap();
    let th = tr.column(Channel::Theta).unwrap();
    tr.time()
        .iter()
        .zip(th)
        .map(|(t, v)| (v - free_response(k, imp.b_pcl, g.link_inertia, 0.05, *t)).abs())
        .fold(0.0, f64::max)
}

#[test]
fn rk4_converges_at_fourth_order() {
    let (g, imp) = link(5.0, 0.2);
    let dt = step_limit(imp.natural_frequency(g.link_inertia));
    let duration = 200.0 * dt;
    let e: Vec<f64> = [1.0, 2.0, 4.0]
        .iter()
        .map(|d| max_error(5.0, 0.2, dt / d, duration))
        .collect();
    for w in e.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!(order >= 3.7, "observed order {order}, errors {e:?}");
    }
}

#[test]
fn integrator_tracks_closed_form_in_every_regime() {
    for zeta in [0.1, 1.0, 2.5] {
        let (g, imp) = link(5.0, zeta);
        let dt = step_limit(imp.natural_frequency(g.link_inertia)) / 10.0;
        assert!(max_error(5.0, zeta, dt, 0.1) < 1e-8, "zeta {zeta}");
    }
}

#[test]
fn identification_round_trip_grid() {
    for k in [2.0, 10.0, 50.0] {
        for zeta in [0.05, 0.2, 0.5] {
            let (g, imp) = link(k, zeta);
            let wn = imp.natural_frequency(g.link_inertia);
            let dt = step_limit(wn) / 20.0;
            let tr = integrate(&g, &imp, 0.1, 0.0, |_| 0.0, dt, 40.0 / wn).unwrap();
            assert_relative_eq!(extract_stiffness(&tr).unwrap(), k, max_relative = 0.01);
            assert_relative_eq!(extract_damping_ratio(&tr).unwrap(), zeta, max_relative = 0.02);
        }
    }
}

#[test]
fn unforced_energy_never_grows() {
    let g = VimGeometry::nominal();
    let table = MaterialTable::pcl_default();
    let mut states: Vec<ImpedanceState> = [30.0, 60.0, 100.0]
        .iter()
        .map(|t| ImpedanceState::at_temperature(&g, &table, *t).unwrap().0)
        .collect();
    states.extend([0.05, 0.2, 0.5, 1.0, 3.0].iter().map(|z| link(5.0, *z).1));
    for imp in states {
        let dt = step_limit(imp.natural_frequency(g.link_inertia));
        let tr = integrate(&g, &imp, 0.1, 0.0, |_| 0.0, dt, 500.0 * dt).unwrap();
        let e = mechanical_energy(&tr, &imp, g.link_inertia).unwrap();
        let slack = 1e-9 * e[0];
        for (i, w) in e.windows(2).enumerate() {
            assert!(w[1] <= w[0] + slack, "energy rose at step {i}: {} -> {}", w[0], w[1]);
        }
    }
}

#[test]
fn released_link_stays_inside_travel() {
    let (g, imp) = link(5.0, 0.0);
    let dt = step_limit(imp.natural_frequency(g.link_inertia));
    let tr = integrate(&g, &imp, g.max_deflection, 0.0, |_| 0.0, dt, 200.0 * dt).unwrap();
    assert!(tr
        .column(Channel::Theta)
        .unwrap()
        .iter()
        .all(|v| v.abs() <= g.max_deflection));
}
