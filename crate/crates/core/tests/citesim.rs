use std::path::Path;

use abcnet::citesim::{
    citation_stats, read_history, selection_probabilities, simulate_history, write_history,
    AttractParams, CaseStep, CaseTable, CitationHistory, ColdPooling, P_COLD,
};
use abcnet::run_rng;
use proptest::prelude::*;
use rand::Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn one_step(cases: usize, cites: usize) -> CaseTable {
    CaseTable::new(vec![CaseStep {
        period: "all".into(),
        cases,
        cites,
        p_corp: 0.5,
        p_crown: 0.5,
        p_dissent: 0.5,
    }])
    .unwrap()
}

fn random_params<R: Rng>(rng: &mut R) -> AttractParams {
    AttractParams {
        irrel: rng.random_range(-0.5..0.0),
        pa: rng.random_range(0.0..2.0),
        corp: rng.random_range(-2.0..3.0),
        crown: rng.random_range(-0.5..5.0),
        dis: rng.random_range(0.5..2.0),
    }
}

#[test]
fn citations_are_conserved_per_step() {
    let table = CaseTable::supreme_court();
    let mut rng = run_rng(31, 0);
    for _ in 0..20 {
        let beta = random_params(&mut rng);
        let h = simulate_history(&beta, &table, &CitationHistory::default(), &mut rng).unwrap();
        assert_eq!(h.n_steps(), table.len());
        for (t, step) in table.steps().iter().enumerate() {
            let sum: u64 = h.step_counts(t).iter().map(|&c| u64::from(c)).sum();
            assert_eq!(sum, step.cites as u64);
        }
        let created = h.cases().iter().filter(|c| c.created_step == 4).count();
        assert_eq!(created, table.steps()[4].cases);
    }
}

#[test]
fn neutral_attractiveness_is_uniform() {
    let h = simulate_history(
        &AttractParams::default(),
        &one_step(10, 100_000),
        &CitationHistory::default(),
        &mut run_rng(32, 0),
    )
    .unwrap();
    let expected = 10_000.0;
    let chi2: f64 = h
        .step_counts(0)
        .iter()
        .map(|&c| (f64::from(c) - expected).powi(2) / expected)
        .sum();
    let p = 1.0 - ChiSquared::new(9.0).unwrap().cdf(chi2);
    assert!(p > 0.001, "chi2 {chi2}, p {p}");
}

#[test]
fn strong_aging_makes_cases_go_cold() {
    // Any uncited step makes a case about e^10 times less attractive, so
    // citations pile onto the newest and recently cited cases.
    let beta = AttractParams {
        irrel: -10.0,
        ..AttractParams::default()
    };
    let steps = (0..6)
        .map(|i| CaseStep {
            period: format!("s{i}"),
            cases: 5,
            cites: 20,
            p_corp: 0.0,
            p_crown: 0.0,
            p_dissent: 0.0,
        })
        .collect();
    let table = CaseTable::new(steps).unwrap();
    let h = simulate_history(
        &beta,
        &table,
        &CitationHistory::default(),
        &mut run_rng(33, 0),
    )
    .unwrap();
    for t in 1..h.n_steps() {
        let prev = h.step_counts(t - 1);
        let now = h.step_counts(t);
        let cold_old: u32 = (0..prev.len())
            .filter(|&i| prev[i] == 0)
            .map(|i| now[i])
            .sum();
        assert!(
            cold_old <= 1,
            "step {t}: {cold_old} citations to cold cases"
        );
    }
    assert!(citation_stats(&h, ColdPooling::Pooled)
        .get(P_COLD)
        .is_some());
}

#[test]
fn seed_history_is_continued() {
    let table = one_step(3, 30);
    let mut rng = run_rng(34, 0);
    let seed = simulate_history(
        &AttractParams::default(),
        &table,
        &CitationHistory::default(),
        &mut rng,
    )
    .unwrap();
    let h = simulate_history(&AttractParams::default(), &table, &seed, &mut rng).unwrap();
    assert_eq!(h.n_steps(), 2);
    assert_eq!(h.n_cases(), 6);
    assert_eq!(h.step_counts(0), seed.step_counts(0));
    assert_eq!(h.step_counts(1).len(), 6);
}

#[test]
fn simulated_history_round_trips() {
    let mut rng = run_rng(35, 0);
    let beta = random_params(&mut rng);
    let h = simulate_history(
        &beta,
        &CaseTable::supreme_court(),
        &CitationHistory::default(),
        &mut rng,
    )
    .unwrap();
    let (mut a, mut b) = (Vec::new(), Vec::new());
    write_history(&h, &mut a, &mut b).unwrap();
    let back = read_history(&a[..], Path::new("a"), &b[..], Path::new("b"), None).unwrap();
    assert_eq!(back, h);
    assert_eq!(
        citation_stats(&back, ColdPooling::Pooled),
        citation_stats(&h, ColdPooling::Pooled)
    );
}

proptest! {
    #[test]
    fn shift_invariance(exps in prop::collection::vec(-50.0..50.0f64, 1..30), c in -300.0..300.0f64) {
        let a = selection_probabilities(&exps);
        let shifted: Vec<f64> = exps.iter().map(|e| e + c).collect();
        let b = selection_probabilities(&shifted);
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() <= 1e-12);
        }
        prop_assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn conservation_for_any_coefficients(seed in any::<u64>(), cites in 0usize..500, cases in 1usize..20) {
        let mut rng = run_rng(seed, 0);
        let beta = AttractParams {
            irrel: rng.random_range(-5.0..5.0),
            pa: rng.random_range(-5.0..5.0),
            corp: rng.random_range(-900.0..900.0),
            crown: rng.random_range(-5.0..5.0),
            dis: rng.random_range(-5.0..5.0),
        };
        let table = CaseTable::new(vec![
            CaseStep { period: "a".into(), cases, cites, p_corp: 0.5, p_crown: 0.2, p_dissent: 0.7 },
            CaseStep { period: "b".into(), cases: 0, cites, p_corp: 0.5, p_crown: 0.2, p_dissent: 0.7 },
        ]).unwrap();
        let h = simulate_history(&beta, &table, &CitationHistory::default(), &mut rng).unwrap();
        for t in 0..2 {
            prop_assert_eq!(h.step_counts(t).iter().map(|&c| c as usize).sum::<usize>(), cites);
        }
    }
}
