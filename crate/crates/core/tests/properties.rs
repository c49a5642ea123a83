use std::collections::HashSet;
use std::sync::Arc;

use picard_afem::bench::{arctan_problem, known_problem, reference_triangle, unit_square_dirichlet, zshape};
use picard_afem::picard::DiscreteSystem;
use picard_afem::{dorfler_mark, newton_reference, FEFunction, FESpace, IndicatorField, SolverKind, Triangulation};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_history(base: &Triangulation, steps: usize, rng: &mut ChaCha8Rng) -> Triangulation {
    let mut m = base.clone();
    for _ in 0..steps {
        let p = rng.gen_range(0.02..0.4);
        let marked: Vec<usize> = (0..m.num_elements()).filter(|_| rng.gen_bool(p)).collect();
        m = m.refine(&marked).unwrap();
    }
    m
}

fn refined_roots(m: &Triangulation) -> HashSet<u32> {
    m.elements().iter().filter(|e| e.generation() > 0).map(|e| e.key.root).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn refine_is_conforming_and_splits(seed in any::<u64>(), steps in 0usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let coarse = random_history(&zshape(seed % 2 == 0), steps, &mut rng);
        let p = rng.gen_range(0.0..0.5);
        let marked: Vec<usize> = (0..coarse.num_elements()).filter(|_| rng.gen_bool(p)).collect();
        let fine = coarse.refine(&marked).unwrap();
        fine.check_conforming().unwrap();
        prop_assert!(fine.is_refinement_of(&coarse));
        prop_assert!((fine.total_area() - 3.5).abs() < 1e-12);
        prop_assert!(fine.min_angle() >= zshape(false).min_angle() - 1e-12);

        let kept: HashSet<usize> = coarse.common_elements(&fine).into_iter().collect();
        for t in &marked {
            prop_assert!(!kept.contains(t));
        }
        let refined = coarse.num_elements() - kept.len();
        let (nc, nf) = (coarse.num_elements(), fine.num_elements());
        prop_assert!(refined + nc <= nf);
        prop_assert!(nf <= 4 * refined + kept.len());

        // every vertex of the coarse mesh survives with its id
        prop_assert_eq!(&fine.vertices()[..coarse.num_vertices()], coarse.vertices());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn overlay_bounds(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t0 = zshape(false);
        let common = random_history(&t0, rng.gen_range(0..3), &mut rng);
        let a = random_history(&common, rng.gen_range(0..4), &mut rng);
        let b = random_history(&common, rng.gen_range(0..4), &mut rng);
        let ab = a.overlay(&b).unwrap();
        ab.check_conforming().unwrap();
        prop_assert!(ab.is_refinement_of(&a) && ab.is_refinement_of(&b));
        prop_assert!(ab.num_elements() + t0.num_elements() <= a.num_elements() + b.num_elements());
        prop_assert_eq!(b.overlay(&a).unwrap().num_elements(), ab.num_elements());
        prop_assert!((ab.total_area() - 3.5).abs() < 1e-12);
        if refined_roots(&a).is_disjoint(&refined_roots(&b)) {
            prop_assert_eq!(ab.num_elements() + t0.num_elements(), a.num_elements() + b.num_elements());
        }
    }

    #[test]
    fn prolongation_keeps_norm(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let coarse = random_history(&zshape(true), 3, &mut rng);
        let fine = random_history(&coarse, 2, &mut rng);
        let cs = FESpace::new(Arc::new(coarse)).unwrap();
        let fs = FESpace::new(Arc::new(fine)).unwrap();
        let c: Vec<f64> = (0..cs.num_vertices()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let v = FEFunction::from_values(&cs, c).unwrap();
        let pv = v.prolongate(&fs).unwrap();
        prop_assert!((pv.h_norm() - v.h_norm()).abs() <= 1e-13 * v.h_norm());
    }
}

fn small_meshes() -> Vec<Triangulation> {
    let mut out = vec![reference_triangle(), unit_square_dirichlet()];
    let mut m = unit_square_dirichlet();
    while m.num_elements() < 8 {
        m = m.refine_all().unwrap();
        out.push(m.clone());
    }
    let r = reference_triangle().refine_all().unwrap().refine(&[0]).unwrap();
    out.push(r.refine(&[0, 1]).unwrap());
    out.push(r);
    out.retain(|m| m.num_elements() <= 12);
    out
}

/// Minimal cardinality, and among those the largest captured sum.
fn brute_force(eta_sq: &[f64], theta: f64) -> Vec<usize> {
    let n = eta_sq.len();
    let total: f64 = eta_sq.iter().sum();
    let mut best: Option<(usize, f64, u32)> = None;
    for mask in 0u32..(1 << n) {
        let s: f64 = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| eta_sq[i]).sum();
        if s < theta * theta * total {
            continue;
        }
        let card = mask.count_ones() as usize;
        let better = match best {
            None => true,
            Some((bc, bs, _)) => card < bc || (card == bc && s > bs),
        };
        if better {
            best = Some((card, s, mask));
        }
    }
    let mask = best.unwrap().2;
    (0..n).filter(|i| mask >> i & 1 == 1).collect()
}

#[test]
fn dorfler_matches_brute_force() {
    let meshes = small_meshes();
    assert!(meshes.iter().any(|m| m.num_elements() >= 8));
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for case in 0..100 {
        let mesh = Arc::new(meshes[case % meshes.len()].clone());
        let eta_sq: Vec<f64> = (0..mesh.num_elements()).map(|_| rng.gen_range(0.0f64..1.0).powi(3)).collect();
        let theta = rng.gen_range(0.05..0.99);
        let ind = IndicatorField::new(Arc::clone(&mesh), eta_sq.clone());
        let mut marked = dorfler_mark(&ind, theta).unwrap().elements;
        marked.sort_unstable();
        assert_eq!(marked, brute_force(&eta_sq, theta), "case {case}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn picard_contracts_towards_galerkin_solution(seed in any::<u64>(), arctan in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let problem = if arctan { arctan_problem() } else { known_problem() };
        let mesh = random_history(&zshape(!arctan), 4, &mut rng);
        let space = FESpace::new(Arc::new(mesh)).unwrap();
        let system = DiscreteSystem::new(&problem, &space, SolverKind::Direct, 1e-12).unwrap();
        let exact = newton_reference(&system, 1e-13).unwrap();
        let mut u = problem.initial_function(&space);
        for c in u.coefficients_mut() {
            *c += rng.gen_range(-2.0..2.0);
        }
        u.impose_dirichlet(&*problem.dirichlet);
        let mut err = u.h_distance(&exact).unwrap();
        for _ in 0..30 {
            if err < 1e-9 {
                break;
            }
            u = system.picard_step(&u).unwrap().0;
            let next = u.h_distance(&exact).unwrap();
            prop_assert!(next <= problem.q() * err * (1.0 + 1e-9) + 1e-12, "{} > q·{}", next, err);
            err = next;
        }
    }
}
