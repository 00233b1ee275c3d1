use std::collections::BTreeMap;

use proptest::prelude::*;

use vcnls::output::Table;
use vcnls::pipeline::{assemble, PhaseHandle};
use vcnls::scenario::load_scenario;
use vcnls::transforms::{family_phases, family_solution, FamilyParams};
use vcnls::validate::GridSpec;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn plane_wave_blowup_time(alpha0 in -4.0f64..-0.13) {
        let sc = load_scenario("example1").unwrap();
        let o = BTreeMap::from([("alpha0".to_string(), alpha0)]);
        let r = assemble(&sc, &o).unwrap();
        let t_star = r.blowup.as_ref().map(|b| b.t_star).unwrap();
        prop_assert!((t_star + 1.0 / (2.0 * alpha0)).abs() < 1e-9, "alpha0 {} T* {}", alpha0, t_star);
        let PhaseHandle::Riccati(s) = &r.phases else { unreachable!() };
        prop_assert!(s.mu(0.999 * t_star) > 0.0);
    }

    #[test]
    fn no_blowup_for_nonnegative_alpha(alpha0 in 0.0f64..3.0) {
        let sc = load_scenario("example1").unwrap();
        let o = BTreeMap::from([("alpha0".to_string(), alpha0)]);
        prop_assert!(assemble(&sc, &o).unwrap().blowup.is_none());
    }

    #[test]
    fn family_modulus_follows_the_phases(
        alpha0 in -0.5f64..0.5,
        beta0 in 0.4f64..1.6,
        delta0 in -1.0f64..1.0,
        eps0 in -1.0f64..1.0,
        mu0 in 0.5f64..2.0,
        t in 0.0f64..8.0,
        x in -6.0f64..6.0,
        bright in any::<bool>(),
    ) {
        let fp = FamilyParams {
            alpha0,
            delta0,
            eps0,
            mu0,
            ..FamilyParams::new(if bright { -2.0 } else { 2.0 }, beta0)
        };
        let (_, sol) = family_solution(fp).unwrap();
        let p = family_phases(&fp, t);
        let z = p.beta * x + p.eps;
        let profile = if bright { 1.0 / z.cosh().powi(2) } else { z.tanh().powi(2) };
        let got = sol.psi(t, x).norm_sqr();
        prop_assert!((got - profile / p.mu).abs() < 1e-10, "{} vs {}", got, profile / p.mu);
    }

    #[test]
    fn csv_round_trips_exactly(rows in prop::collection::vec(prop::array::uniform3(-1e6f64..1e6), 1..20)) {
        let mut table = Table::new(&["a", "b", "c"]);
        for r in &rows {
            table.push(r.to_vec());
        }
        let csv = table.to_csv();
        let mut lines = csv.lines();
        prop_assert_eq!(lines.next(), Some("a,b,c"));
        for (line, r) in lines.zip(&rows) {
            let back: Vec<f64> = line.split(',').map(|v| v.parse().unwrap()).collect();
            prop_assert_eq!(&back[..], &r[..]);
        }
    }

    #[test]
    fn grid_spec_round_trips(t0 in -5.0f64..5.0, dt in 0.1f64..5.0, nt in 2usize..300, nx in 2usize..300) {
        let g = GridSpec::new((t0, t0 + dt, nt), (-dt, dt, nx));
        let back: GridSpec = g.to_string().parse().unwrap();
        prop_assert_eq!(back, g);
    }
}

#[test]
fn window_bounds_the_prediction() {
    // T* = 5 lies past the end of the time window.
    let sc = load_scenario("example1").unwrap();
    let o = BTreeMap::from([("alpha0".to_string(), -0.1)]);
    assert!(assemble(&sc, &o).unwrap().blowup.is_none());
}
