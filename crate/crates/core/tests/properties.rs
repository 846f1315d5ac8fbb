use proptest::prelude::*;
use rand::Rng;
use ssm_core::crs::{self, BalancedCrs, CrsKind, LatticeSampleDistribution};
use ssm_core::extension::multilinear_exact;
use ssm_core::greedy::{self, CertifiedSolution, GreedyConfig};
use ssm_core::lattice::{ConcaveShape, UtilityFamily};
use ssm_core::model::{Instance, ItemModel, Realization};
use ssm_core::outer::OuterConstraint;
use ssm_core::seed::{self, StreamRng};
use ssm_core::simplex::LinearProgram;
use ssm_core::{oracle, policy, Utility};

fn family(rng: &mut StreamRng, n: usize) -> UtilityFamily<f64> {
    let weights: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..2.0)).collect();
    match rng.random_range(0..4) {
        0 => UtilityFamily::Modular { weights },
        1 => UtilityFamily::Concave {
            weights,
            shape: ConcaveShape::Sqrt,
        },
        2 => UtilityFamily::Concave {
            weights,
            shape: ConcaveShape::Threshold {
                theta: rng.random_range(0.5..3.0),
            },
        },
        _ => UtilityFamily::Coverage {
            ground_weights: (0..6).map(|_| rng.random_range(0.0..1.0)).collect(),
            widths: (0..n).map(|_| rng.random_range(1..=2)).collect(),
            lists: None,
        },
    }
}

fn instance(rng: &mut StreamRng, max_n: usize, max_b: u32) -> Instance<f64> {
    let n = rng.random_range(1..=max_n);
    let b = rng.random_range(1..=max_b);
    let items = (0..n)
        .map(|_| {
            let raw: Vec<f64> = (0..b).map(|_| rng.random_range(0.05..1.0)).collect();
            let total: f64 = raw.iter().sum();
            let mut c = rng.random_range(1..=2u32);
            let costs = (0..b)
                .map(|k| {
                    if k > 0 {
                        c += rng.random_range(0..=1);
                    }
                    c
                })
                .collect();
            ItemModel::new(raw.iter().map(|p| p / total).collect(), costs)
        })
        .collect();
    let outer = if rng.random_bool(0.5) {
        OuterConstraint::Cardinality {
            k: rng.random_range(1..=n),
        }
    } else {
        let cut = rng.random_range(0..=n);
        OuterConstraint::Partition {
            blocks: vec![(0..cut).collect(), (cut..n).collect()],
            caps: vec![1, rng.random_range(1..=2)],
        }
    };
    Instance::new(b, rng.random_range(2..=10), items, outer)
}

fn solved(
    seed_value: u64,
    max_n: usize,
    max_b: u32,
) -> (Instance<f64>, UtilityFamily<f64>, CertifiedSolution<f64>) {
    let mut rng = seed::stream(seed_value, "properties", 0);
    let inst = instance(&mut rng, max_n, max_b);
    let f = family(&mut rng, inst.n);
    let mut cfg = GreedyConfig::new(0.25, seed_value);
    cfg.steps = 10;
    cfg.grad_samples = 200;
    let sol = greedy::run(&inst, &f, &cfg).unwrap();
    let cert = CertifiedSolution::new(&inst, sol, 0.25).unwrap();
    (inst, f, cert)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn restriction_is_monotone_in_the_set(s in any::<u64>()) {
        let mut rng = seed::stream(s, "restrict", 0);
        let inst = instance(&mut rng, 6, 3);
        let f = family(&mut rng, inst.n);
        let phi = inst.draw_realization(&mut rng);
        let big: Vec<usize> = (0..inst.n).filter(|_| rng.random_bool(0.6)).collect();
        let small: Vec<usize> = big.iter().copied().filter(|_| rng.random_bool(0.5)).collect();
        let (lo, hi) = (f.value(phi.restrict(&small).as_slice()), f.value(phi.restrict(&big).as_slice()));
        prop_assert!(lo <= hi + 1e-9, "{lo} > {hi}");
    }

    #[test]
    fn multilinear_is_monotone(s in any::<u64>()) {
        let mut rng = seed::stream(s, "f-monotone", 0);
        let inst = instance(&mut rng, 4, 2);
        let f = family(&mut rng, inst.n);
        let x: Vec<f64> = (0..inst.n).map(|_| rng.random_range(0.0..1.0)).collect();
        let y: Vec<f64> = x.iter().map(|&v| v + rng.random_range(0.0..=1.0 - v)).collect();
        let (fx, fy) = (multilinear_exact(&inst, &f, &x).unwrap(), multilinear_exact(&inst, &f, &y).unwrap());
        prop_assert!(fx <= fy + 1e-12, "{fx} > {fy}");
    }

    #[test]
    fn simplex_solutions_are_feasible_and_weakly_dual(
        s in any::<u64>(),
        vars in 1usize..7,
        rows in 0usize..6,
    ) {
        let mut rng = seed::stream(s, "lp", 0);
        let mut lp = LinearProgram::<f64>::new(vars);
        lp.objective = (0..vars).map(|_| rng.random_range(-1.0..3.0)).collect();
        for r in 0..rows {
            let coeffs = (0..vars).map(|_| rng.random_range(0.0..2.0)).collect();
            lp.add_row(coeffs, rng.random_range(0.0..3.0), format!("r{r}"));
        }
        let sol = lp.solve().unwrap();
        prop_assert!(lp.max_violation(&sol.values) <= 1e-9);
        prop_assert!(sol.values.iter().all(|&v| (0.0..=1.0).contains(&v)));
        for _ in 0..5 {
            let y: Vec<f64> = (0..rows).map(|_| rng.random_range(0.0..3.0)).collect();
            prop_assert!(sol.objective <= lp.dual_bound(&y) + 1e-9);
        }
    }

    #[test]
    fn psi_outputs_keep_or_drop_each_coordinate(s in any::<u64>()) {
        let (inst, _, cert) = solved(s, 5, 3);
        let crs = BalancedCrs::new(CrsKind::RandomPriority, 0.25);
        let dist = LatticeSampleDistribution::new(&inst, cert.marginals()).unwrap();
        let mut rng = seed::stream(s, "psi", 0);
        for _ in 0..20 {
            let v = dist.sample(&mut rng);
            let a = crs::psi_a(&inst.outer, &crs, &v, &mut rng);
            let (b, _) = crs::psi_b(&inst, cert.solution(), &v, &mut rng).unwrap();
            let c = crs::psi_c(&inst, &crs, cert.solution(), &v, &mut rng).unwrap();
            for out in [&a, &b, &c] {
                prop_assert!((0..inst.n).all(|i| out.get(i) == 0 || out.get(i) == v.get(i)));
            }
            prop_assert!(inst.outer.is_independent(&a.support()));
            let kept = crs::apply_chi(&crs, &inst.outer, &v.support(), rng.random());
            prop_assert!(inst.outer.is_independent(&kept));
        }
    }

    #[test]
    fn policy_traces_respect_every_constraint(s in any::<u64>()) {
        let (inst, f, cert) = solved(s, 8, 3);
        let crs = BalancedCrs::new(CrsKind::RandomPriority, 0.25);
        for k in 0..20 {
            let phi = inst.sample_realization(s ^ k).unwrap();
            let t = policy::execute(&inst, &f, &crs, &cert, &phi, s.wrapping_add(k)).unwrap();
            prop_assert!(t.respects_budget(inst.budget));
            prop_assert!(inst.outer.is_independent(&t.selected));
            prop_assert!(t.respects_adaptivity());
            prop_assert!(t.kept.iter().all(|i| t.sampled.contains(i)));
            prop_assert!(t.selected.iter().all(|i| t.kept.contains(i)));
            for r in &t.records {
                prop_assert_eq!(r.gate_passed, r.load <= r.start_time);
                prop_assert_eq!(r.realized_state.is_some(), r.gate_passed);
            }
        }
    }

    #[test]
    fn greedy_progress_never_decreases_the_extension(s in any::<u64>()) {
        let mut rng = seed::stream(s, "progress", 0);
        let inst = instance(&mut rng, 4, 2);
        let f = family(&mut rng, inst.n);
        let mut cfg = GreedyConfig::new(0.25, s);
        cfg.steps = 8;
        cfg.grad_samples = 100;
        let (_, trajectory) = greedy::run_traced(&inst, &f, &cfg).unwrap();
        let values: Vec<f64> = trajectory
            .iter()
            .map(|x| multilinear_exact(&inst, &f, &x.iter().map(|v| v.min(1.0)).collect::<Vec<_>>()).unwrap())
            .collect();
        prop_assert!(values.windows(2).all(|w| w[1] >= w[0] - 1e-12), "{values:?}");
    }
}

#[test]
fn same_seed_same_trace() {
    let (inst, f, cert) = solved(11, 6, 3);
    let crs = BalancedCrs::new(CrsKind::RandomPriority, 0.25);
    let phi = Realization(vec![1; inst.n]);
    let a = policy::execute(&inst, &f, &crs, &cert, &phi, 5).unwrap();
    let b = policy::execute(&inst, &f, &crs, &cert, &phi, 5).unwrap();
    assert_eq!(a.to_json_line().unwrap(), b.to_json_line().unwrap());
}

#[test]
fn single_precision_pipeline() {
    let text = r#"{"n":2,"B":2,"budget":5,
        "items":[{"probs":[0.5,0.5],"costs":[1,2]},{"probs":[0.5,0.5],"costs":[1,2]}],
        "outer":{"kind":"cardinality","k":2},
        "utility":{"family":"modular","params":{"weights":[1.0,1.0]}}}"#;
    let p = ssm_core::Problem32::from_json(text).unwrap();
    assert!(p.validate().is_empty());
    let opt = oracle::optimal_adaptive_value(&p.instance, &p.utility).unwrap();
    assert_eq!(opt.value, 3.0f32);

    let mut cfg = GreedyConfig::new(0.25f32, 3);
    cfg.grad_samples = 500;
    let sol = greedy::run(&p.instance, &p.utility, &cfg).unwrap();
    let cert = CertifiedSolution::new(&p.instance, sol, 0.25).unwrap();
    let exact: f32 = multilinear_exact(&p.instance, &p.utility, cert.marginals()).unwrap();
    let crs = BalancedCrs::new(CrsKind::RandomPriority, 0.25f32);
    let rep = policy::estimate_favg(&p.instance, &p.utility, &crs, &cert, 20_000, 3, 1).unwrap();
    assert_eq!(
        rep.inner_violations + rep.outer_violations + rep.adaptivity_violations,
        0
    );
    // The selection is a subset of the sampled set under the same states, so
    // the policy cannot beat F at the marginals.
    let e = rep.estimate;
    assert!(e.mean <= exact + 3.0 * e.std_err, "{e:?} vs {exact}");
    let bound = 0.5 * crs.documented_gamma() * (1.0 - (-0.25f32).exp());
    assert!(e.mean >= bound * opt.value - 3.0 * e.std_err, "{e:?}");

    let p64 = ssm_core::Problem::from_json(text).unwrap();
    let opt64 = oracle::optimal_adaptive_value(&p64.instance, &p64.utility)
        .unwrap()
        .value;
    assert_eq!(f64::from(opt.value), opt64);
}
