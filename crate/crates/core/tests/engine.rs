use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use treesobol_core::oracle::{mc_variance, GridDecomposition, DEFAULT_CELL_BUDGET};
use treesobol_core::{
    Domain, Ensemble, IndexSet, KernelMode, Node, ProductMeasure, RandomEnsemble, SobolEngine,
};

fn random_domain(rng: &mut ChaCha8Rng, p: usize) -> Domain {
    let lo: Vec<f64> = (0..p).map(|_| rng.random_range(-2.0..1.0)).collect();
    let hi = lo.iter().map(|l| l + rng.random_range(0.5..3.0)).collect();
    Domain::new(lo, hi).unwrap()
}

fn instances(n: usize, seed: u64) -> Vec<Ensemble> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gen = RandomEnsemble::default();
    (0..n)
        .map(|_| {
            let p = rng.random_range(1..=4);
            let dom = random_domain(&mut rng, p);
            gen.sample(&mut rng, &dom)
        })
        .collect()
}

fn two_tree() -> Ensemble {
    let a = Node::split(0, 0.5, Node::leaf(1.0), Node::leaf(100.0));
    let b = Node::split(
        1,
        2.0 / 3.0,
        Node::split(1, 1.0 / 3.0, Node::leaf(-2.0), Node::leaf(0.0)),
        Node::leaf(2.0),
    );
    Ensemble::new(Domain::unit(2), vec![a.into(), b.into()]).unwrap()
}

#[test]
fn matches_grid_oracle() {
    for ens in instances(60, 1) {
        let m = ProductMeasure::uniform(ens.domain());
        let grid = GridDecomposition::new(&ens, &m, DEFAULT_CELL_BUDGET).unwrap();
        assert!((grid.total_prob() - 1.0).abs() < 1e-12);
        let mut eng = SobolEngine::new(&ens, &m).unwrap();
        let total = eng.total_variance().unwrap();
        for set in IndexSet::all_nonempty(ens.dim()) {
            let v = eng.sobol_v(&set).unwrap();
            let g = grid.sobol_v(&set).unwrap();
            assert!((v - g).abs() <= 1e-10 * total.max(1.0), "{set}: {v} vs {g}");
        }
    }
}

#[test]
fn two_tree_against_grid() {
    let ens = two_tree();
    let m = ProductMeasure::uniform(ens.domain());
    let grid = GridDecomposition::new(&ens, &m, DEFAULT_CELL_BUDGET).unwrap();
    let mut eng = SobolEngine::new(&ens, &m).unwrap();
    for set in IndexSet::all_nonempty(2) {
        let (v, g) = (eng.sobol_v(&set).unwrap(), grid.sobol_v(&set).unwrap());
        assert!((v - g).abs() < 1e-9);
    }
    let s = eng.sobol_s(&IndexSet::single(0, 2).unwrap()).unwrap();
    assert!((s - 0.998913).abs() < 1e-6);
    // additive across trees: the interaction is exactly zero, not round-off
    assert_eq!(eng.sobol_v(&IndexSet::pair(0, 1, 2).unwrap()).unwrap(), 0.0);
}

#[test]
fn decomposition_and_total_effects() {
    for ens in instances(60, 2) {
        let m = ProductMeasure::uniform(ens.domain());
        let mut eng = SobolEngine::new(&ens, &m).unwrap();
        let total = eng.total_variance().unwrap();
        if total == 0.0 {
            continue;
        }
        let sets = IndexSet::all_nonempty(ens.dim());
        let sum_v: f64 = sets.iter().map(|s| eng.sobol_v(s).unwrap()).sum();
        assert!((sum_v - total).abs() <= 1e-9 * total);
        let sum_s: f64 = sets.iter().map(|s| eng.sobol_s(s).unwrap()).sum();
        assert!((sum_s - 1.0).abs() <= 1e-9);
        for i in 0..ens.dim() {
            let t = eng.total_effect(i).unwrap();
            let by_sum: f64 = sets
                .iter()
                .filter(|s| s.contains(i))
                .map(|s| eng.sobol_s(s).unwrap())
                .sum();
            assert!((t - by_sum).abs() <= 1e-9, "T{} {t} vs {by_sum}", i + 1);
        }
    }
}

#[test]
fn pruning_is_exact() {
    for ens in instances(60, 3) {
        let m = ProductMeasure::uniform(ens.domain());
        let eng = SobolEngine::new(&ens, &m).unwrap();
        for set in IndexSet::all_nonempty(ens.dim()) {
            let a = eng.kernel(&set, KernelMode::Pruned).unwrap();
            let b = eng.kernel(&set, KernelMode::Full).unwrap();
            assert_eq!(a.variance.to_bits(), b.variance.to_bits(), "{set}");
            assert!(a.terms <= b.terms);
        }
    }
}

#[test]
fn pruning_skips_trees_that_ignore_the_set() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let gen = RandomEnsemble {
        max_trees: 1,
        max_leaves: 8,
        grid: 16,
    };
    let dom1 = Domain::unit(1);
    let mut trees = Vec::new();
    for t in 0..20 {
        let tree = gen.tree(&mut rng, &dom1, &mut |r: &mut ChaCha8Rng| {
            r.random_range(-1.0..1.0)
        });
        // half the trees only split on dimension 1
        let mut node = tree.root().clone();
        if t % 2 == 1 {
            relabel(&mut node, 1);
        }
        trees.push(node.into());
    }
    let ens = Ensemble::new(Domain::unit(2), trees).unwrap();
    let m = ProductMeasure::uniform(ens.domain());
    let eng = SobolEngine::new(&ens, &m).unwrap();
    let set = IndexSet::single(0, 2).unwrap();
    let pruned = eng.kernel(&set, KernelMode::Pruned).unwrap();
    let full = eng.kernel(&set, KernelMode::Full).unwrap();
    assert!(full.terms >= 3 * pruned.terms);
}

fn relabel(node: &mut Node, dim: usize) {
    if let Node::Split { rule, left, right } = node {
        rule.dim = dim;
        relabel(left, dim);
        relabel(right, dim);
    }
}

#[test]
fn shift_and_scale() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for ens in instances(30, 6) {
        let m = ProductMeasure::uniform(ens.domain());
        let mut base = SobolEngine::new(&ens, &m).unwrap();
        let mut shifted = ens.clone();
        let t = rng.random_range(0..ens.trees().len());
        shifted.shift_tree(t, rng.random_range(-50.0..50.0));
        let mut scaled = ens.clone();
        let s = rng.random_range(0.1..10.0);
        scaled.scale(s);
        let mut e_shift = SobolEngine::new(&shifted, &m).unwrap();
        let mut e_scale = SobolEngine::new(&scaled, &m).unwrap();
        let total = base.total_variance().unwrap();
        for set in IndexSet::all_nonempty(ens.dim()) {
            let v = base.sobol_v(&set).unwrap();
            let tol = 1e-10 * total.max(1.0);
            assert!((e_shift.sobol_v(&set).unwrap() - v).abs() <= tol * 100.0);
            assert!((e_scale.sobol_v(&set).unwrap() - s * s * v).abs() <= tol * s * s);
            if total > 0.0 {
                let d = e_scale.sobol_s(&set).unwrap() - base.sobol_s(&set).unwrap();
                assert!(d.abs() < 1e-9);
            }
        }
    }
}

#[test]
fn additive_ensembles_have_no_interactions() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let gen = RandomEnsemble::default();
    let dom1 = Domain::unit(1);
    let trees = (0..6)
        .map(|t| {
            let mut node = gen
                .tree(&mut rng, &dom1, &mut |r: &mut ChaCha8Rng| {
                    r.random_range(-1.0..1.0)
                })
                .root()
                .clone();
            relabel(&mut node, t % 3);
            node.into()
        })
        .collect();
    let ens = Ensemble::new(Domain::unit(3), trees).unwrap();
    let m = ProductMeasure::uniform(ens.domain());
    let mut eng = SobolEngine::new(&ens, &m).unwrap();
    let total = eng.total_variance().unwrap();
    for set in IndexSet::all_nonempty(3).iter().filter(|s| s.len() >= 2) {
        assert!(eng.sobol_v(set).unwrap().abs() <= 1e-12 * total.max(1.0));
    }
    let r = eng.report(2).unwrap();
    for i in 0..3 {
        assert!((r.first_order[i] - r.total_effects[i]).abs() < 1e-10);
    }
}

#[test]
fn total_variance_against_monte_carlo() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let gen = RandomEnsemble::default();
    let mut checked = 0;
    while checked < 3 {
        let dom = random_domain(&mut rng, 3);
        let ens = gen.sample(&mut rng, &dom);
        let m = ProductMeasure::uniform(ens.domain());
        let total = SobolEngine::new(&ens, &m)
            .unwrap()
            .total_variance()
            .unwrap();
        if total < 0.05 {
            continue;
        }
        let mc = mc_variance(|x| ens.eval_unchecked(x), &dom, 1_000_000, checked as u64);
        assert!((mc - total).abs() / total < 0.01, "{mc} vs {total}");
        checked += 1;
    }
}

#[test]
fn report_second_order_symmetric() {
    let ens = &instances(1, 9)[0];
    let m = ProductMeasure::uniform(ens.domain());
    let r = SobolEngine::new(ens, &m).unwrap().report(2).unwrap();
    for i in 0..r.p {
        for j in 0..r.p {
            if i != j {
                assert_eq!(r.s_ij(i, j), r.s_ij(j, i));
            }
        }
    }
}
