use mimic_core::kernel::Atom;
use mimic_core::truncation::{convert_truncation, drift_truncated_to_canonical};
use mimic_core::{LevyKernel, Truncation};
use proptest::prelude::*;

fn kernel() -> impl Strategy<Value = (Vec<f64>, Vec<Atom>)> {
    (1usize..4).prop_flat_map(|d| {
        (
            proptest::collection::vec(-3.0f64..3.0, d),
            proptest::collection::vec((proptest::collection::vec(-3.0f64..3.0, d), 0.1f64..5.0), 1..6),
        )
            .prop_map(|(b, atoms)| (b, atoms.into_iter().map(|(xi, r)| Atom::new(xi, r)).collect::<Vec<_>>()))
            .prop_filter("atoms away from the origin and the truncation spheres", |(_, atoms)| {
                atoms.iter().all(|a| a.norm() > 1e-3 && (a.norm() - 0.5).abs() > 1e-3 && (a.norm() - 2.0).abs() > 1e-3)
            })
    })
}

proptest! {
    #[test]
    fn conversions_round_trip((b, atoms) in kernel()) {
        let k = LevyKernel::atomic(b.len(), atoms).unwrap();
        let (h1, h2) = (Truncation::hard(0.5).unwrap(), Truncation::hard(2.0).unwrap());
        let b2 = convert_truncation(&b, &k, &h1, &h2).unwrap();
        let back = convert_truncation(&b2, &k, &h2, &h1).unwrap();
        let c1 = drift_truncated_to_canonical(&b, &k, &h1).unwrap();
        let c2 = drift_truncated_to_canonical(&b2, &k, &h2).unwrap();
        for i in 0..b.len() {
            prop_assert!((back[i] - b[i]).abs() <= 1e-12);
            prop_assert!((c1[i] - c2[i]).abs() <= 1e-12);
        }
    }
}

#[test]
fn one_atom_examples() {
    let k = LevyKernel::atom(vec![2.0], 3.0).unwrap();
    let h1 = Truncation::hard(1.0).unwrap();
    assert_eq!(convert_truncation(&[0.5], &k, &h1, &Truncation::hard(2.5).unwrap()).unwrap(), vec![6.5]);
    assert_eq!(drift_truncated_to_canonical(&[0.5], &k, &h1).unwrap(), vec![6.5]);
    let inside = LevyKernel::atom(vec![0.5], 7.0).unwrap();
    assert_eq!(drift_truncated_to_canonical(&[0.5], &inside, &h1).unwrap(), vec![0.5]);
}

#[test]
fn kernel_integrals() {
    let k = LevyKernel::atomic(1, vec![Atom::new(vec![1.0], 2.0), Atom::new(vec![-3.0], 0.5)]).unwrap();
    assert_eq!(k.integral(|_| 0.0).unwrap(), 0.0);
    assert_eq!(k.integral(|x| x[0] * x[0]).unwrap(), 6.5);
    let ramp = |x: &[f64]| (3.0 * x[0].abs() - 1.0).clamp(0.0, 1.0);
    assert_eq!(LevyKernel::atom(vec![1.0], 2.0).unwrap().integral(ramp).unwrap(), 2.0);
}
