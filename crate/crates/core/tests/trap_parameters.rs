use std::f64::consts::PI;

use proptest::prelude::*;
use spinphonon::expparams::{
    angle_for_dk, axial_frequency_for_spacing, coulomb_coupling, dimensionless, equilibrium_positions,
    scaled_equilibrium, setup_from_dimensionless, Dimensionless, PhysicalSetup, SpacingKind, Species,
};

/// `∂/∂u_i [∑ u²/2 + ∑_{i<j} 1/|u_i − u_j|]`, recomputed from scratch.
fn gradient(u: &[f64]) -> Vec<f64> {
    (0..u.len())
        .map(|i| {
            let coulomb: f64 = (0..u.len())
                .filter(|&j| j != i)
                .map(|j| (u[i] - u[j]).signum() / (u[i] - u[j]).powi(2))
                .sum();
            u[i] - coulomb
        })
        .collect()
}

#[test]
fn three_ion_closed_form() {
    let eq = scaled_equilibrium(3).unwrap();
    let edge = 1.25f64.cbrt();
    assert!((eq.positions[0] + edge).abs() < 1e-12);
    assert!(eq.positions[1].abs() < 1e-12);
    assert!((eq.positions[2] - edge).abs() < 1e-12);
}

#[test]
fn com_and_breathing_modes_are_universal() {
    for n in [2usize, 5, 12, 30] {
        let eq = scaled_equilibrium(n).unwrap();
        let mut ev: Vec<f64> = eq.axial_hessian().symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        assert!((ev[0] - 1.0).abs() < 1e-9, "n={n}: {}", ev[0]);
        assert!((ev[1] - 3.0).abs() < 1e-9, "n={n}: {}", ev[1]);
    }
}

#[test]
fn spacing_round_trips_through_axial_frequency() {
    let setup = PhysicalSetup::beryllium_reference();
    for kind in [SpacingKind::Mean, SpacingKind::Central] {
        let f = axial_frequency_for_spacing(&setup, setup.d0, kind).unwrap();
        let eq = equilibrium_positions(&setup, f.angular).unwrap();
        let spacing = match kind {
            SpacingKind::Mean => eq.mean_spacing,
            SpacingKind::Central => eq.central_spacing,
        };
        assert!((spacing / setup.d0 - 1.0).abs() < 1e-10);
    }
}

#[test]
fn coulomb_coupling_scales_as_inverse_cube_of_spacing() {
    let a = PhysicalSetup::beryllium_reference();
    let b = PhysicalSetup {
        d0: 2.0 * a.d0,
        ..a.clone()
    };
    let r = coulomb_coupling(&a).angular / coulomb_coupling(&b).angular;
    assert!((r - 8.0).abs() < 1e-12);
}

#[test]
fn half_turn_needs_just_under_one_degree() {
    let a = angle_for_dk(&PhysicalSetup::beryllium_reference(), PI).unwrap();
    assert!((a.degrees - 0.92).abs() < 0.01, "{}", a.degrees);
}

#[test]
fn species_parse_and_masses() {
    let yb: Species = "171Yb+".parse().unwrap();
    assert_eq!(yb, Species::Yb171);
    assert!(Species::Ca40.ion_mass() > Species::Mg25.ion_mass());
    assert!("12C+".parse::<Species>().is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn equilibrium_is_ordered_symmetric_and_force_free(n in 2usize..40) {
        let eq = scaled_equilibrium(n).unwrap();
        let u = &eq.positions;
        prop_assert!(u.windows(2).all(|w| w[1] > w[0]));
        for i in 0..n {
            prop_assert!((u[i] + u[n - 1 - i]).abs() < 1e-10);
        }
        let g = gradient(u);
        prop_assert!(g.iter().all(|x| x.abs() < 1e-10), "{g:?}");
    }

    #[test]
    fn dimensionless_round_trip(t_c in 0.05f64..5.0, g in 0.1f64..3.0, dk in 0.0f64..(2.0 * PI), delta_khz in 1.0f64..50.0) {
        let template = PhysicalSetup::beryllium_reference();
        let delta = 2.0 * PI * delta_khz * 1e3;
        let p = Dimensionless { t_c, g, dk_d0: dk };
        let (setup, g_si) = setup_from_dimensionless(&template, &p, delta).unwrap();
        let back = dimensionless(&setup, g_si, delta).unwrap();
        prop_assert!((back.t_c / t_c - 1.0).abs() < 1e-10);
        prop_assert!((back.g / g - 1.0).abs() < 1e-10);
        prop_assert!((back.dk_d0 - dk).abs() < 1e-10);
    }
}
