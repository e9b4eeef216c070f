use proptest::prelude::*;
use vague_adverbials::evaluation::accuracy;
use vague_adverbials::{
    composite_probability, extendability_table, generate_synthetic, normalize_likert, AdverbialParams, Dataset,
    Duration, EventParams, FactorizedModel, PairGaussianModel, PairParams,
};

fn model_with(mus: &[f64], sigmas: &[f64]) -> FactorizedModel {
    let advs = mus
        .iter()
        .zip(sigmas)
        .enumerate()
        .map(|(i, (&m, &s))| AdverbialParams::new(format!("a{i}"), m, s).unwrap());
    FactorizedModel::new([EventParams::new("e", 1000.0).unwrap()], advs).unwrap()
}

proptest! {
    #[test]
    fn best_adverbial_is_the_argmax(
        mus in prop::collection::vec(0.3f64..1.2, 1..6),
        sig in 0.02f64..0.4,
        t in 0.0f64..1e5,
    ) {
        let sigmas = vec![sig; mus.len()];
        let model = model_with(&mus, &sigmas);
        let t = Duration::minutes(t).unwrap();
        let (best, p) = model.best_adverbial(t, "e").unwrap();
        let probs = model.probabilities(t, "e").unwrap();
        let max = probs.iter().map(|x| x.1).fold(f64::NEG_INFINITY, f64::max);
        prop_assert_eq!(p, max);
        // The winner is the first id attaining the maximum, which is what any strictly
        // monotone rescaling of the probabilities would also pick.
        let first = probs.iter().find(|x| x.1 == max).unwrap();
        prop_assert_eq!(&best, &first.0);
        let rescaled = probs.iter().map(|(id, p)| (id, p.ln() * 3.0 + 7.0));
        let mut top: Option<(&String, f64)> = None;
        for (id, v) in rescaled {
            if top.is_none_or(|(_, tv)| v > tv) {
                top = Some((id, v));
            }
        }
        prop_assert_eq!(top.unwrap().0, &best);
    }

    #[test]
    fn composite_stays_in_unit_interval(sigma_e in 1.0f64..1e7, t in 0.0f64..1e9, mu in -0.5f64..1.5, s in 0.01f64..1.0) {
        let p = composite_probability(
            Duration::minutes(t).unwrap(),
            &EventParams::new("e", sigma_e).unwrap(),
            &AdverbialParams::new("a", mu, s).unwrap(),
        );
        prop_assert!((0.0..=1.0).contains(&p));
    }

    #[test]
    fn likert_is_affine_and_order_preserving(lo in -20i64..20, span in 1i64..12, a in 0i64..12, b in 0i64..12) {
        let hi = lo + span;
        let (a, b) = (lo + a.min(span), lo + b.min(span));
        let (na, nb) = (normalize_likert(a, lo, hi).unwrap(), normalize_likert(b, lo, hi).unwrap());
        prop_assert_eq!(a < b, na < nb);
        prop_assert!((na - (a - lo) as f64 / span as f64).abs() == 0.0);
    }

    #[test]
    fn extendability_closed_forms(e in prop::collection::vec(1usize..500, 1..10), seed in 1usize..500) {
        let a: Vec<usize> = e.iter().map(|x| (x * seed) % 97 + 1).collect();
        let rows = extendability_table(&e, &a).unwrap();
        for (r, (&ei, &ai)) in rows.iter().zip(e.iter().zip(&a)) {
            prop_assert_eq!(r.factorized_functions, ei + ai);
            prop_assert_eq!(r.baseline_functions, ei * ai);
        }
    }

    #[test]
    fn accuracy_is_permutation_invariant_and_bounded(seed in 0u64..1000, rot in 0usize..200) {
        let truth = FactorizedModel::reference();
        let data = generate_synthetic(&truth, 3, 2, 0.2, seed).unwrap();
        let off = model_like(&truth, 1.2);
        let base = accuracy(&off, &data).unwrap();
        let mut shuffled = data.clone();
        let n = shuffled.records.len();
        shuffled.records.rotate_left(rot % n);
        shuffled.records.reverse();
        let again = accuracy(&off, &shuffled).unwrap();
        prop_assert_eq!(&base, &again);
        prop_assert!((0.0..=1.0).contains(&base.overall));
        prop_assert!(base.per_event.values().chain(base.per_adverbial.values()).all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn csv_round_trip(seed in 0u64..1000, noise in 0.0f64..0.3) {
        let data = generate_synthetic(&FactorizedModel::reference(), 2, 2, noise, seed).unwrap();
        let mut buf = Vec::new();
        data.write_csv(&mut buf).unwrap();
        let back = Dataset::from_csv_reader(buf.as_slice()).unwrap();
        prop_assert_eq!(back.records, data.records);
    }
}

/// Reference model with every sigma_e scaled.
fn model_like(m: &FactorizedModel, factor: f64) -> FactorizedModel {
    FactorizedModel::new(
        m.events().map(|e| EventParams::new(e.id.clone(), e.sigma_e * factor).unwrap()),
        m.adverbials().cloned(),
    )
    .unwrap()
}

#[test]
fn serialized_models_score_identically() {
    let truth = FactorizedModel::reference();
    let data = generate_synthetic(&truth, 7, 5, 0.1, 11).unwrap();
    let model = model_like(&truth, 0.9);
    let reloaded = FactorizedModel::from_json(&model.to_json()).unwrap();
    assert_eq!(accuracy(&model, &data).unwrap(), accuracy(&reloaded, &data).unwrap());

    let pairs = PairGaussianModel::new(truth.events().flat_map(|e| {
        truth.adverbials().map(move |a| {
            ((e.id.clone(), a.id.clone()), PairParams::new(e.sigma_e * a.mu_a / 3.0, e.sigma_e * 0.7).unwrap())
        })
    }))
    .unwrap();
    let reloaded = PairGaussianModel::from_json(&pairs.to_json()).unwrap();
    let a = accuracy(&pairs, &data).unwrap();
    let b = accuracy(&reloaded, &data).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.overall.to_bits(), b.overall.to_bits());
}
