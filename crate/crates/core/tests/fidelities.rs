use kmuc::channels::{
    completely_depolarizing, dephasing, depolarizing, identity, product, qutrit_leaky, random_channel, Connection,
    ConnectionGraph, KrausChannel,
};
use kmuc::fidelities::{
    average_fidelity_exact, average_fidelity_mc, channel_fidelity, entanglement_fidelity, entanglement_fidelity_kraus,
    fidelity_report, group_channel_fidelity, group_fidelity, min_subspace_fidelity, pure_state_fidelity, FidelityMode,
};
use kmuc::fixtures::random_density;
use kmuc::optim::SearchBudget;
use kmuc::rng::Stream;
use kmuc::tensor::{max_entangled_ket, DensityOperator, SubspaceBasis, SystemLayout, C64};
use proptest::prelude::*;

fn single(d: usize) -> SystemLayout {
    SystemLayout::single(d).unwrap()
}

fn random_on(graph: &ConnectionGraph, env: usize, rng: &mut Stream) -> KrausChannel {
    let legs = |groups: Vec<Vec<usize>>| {
        let dims = graph.ref_dims();
        SystemLayout::new(groups.iter().map(|g| g.iter().map(|&i| dims[i]).product()).collect()).unwrap()
    };
    random_channel(&legs(graph.sender_groups()), &legs(graph.receiver_groups()), env, rng).unwrap()
}

fn broadcast() -> ConnectionGraph {
    let c = |receiver| Connection {
        sender: 0,
        receiver,
        ref_dim: 2,
    };
    ConnectionGraph::new(1, 2, vec![c(0), c(1)]).unwrap()
}

fn graphs() -> Vec<ConnectionGraph> {
    vec![
        ConnectionGraph::single(2),
        ConnectionGraph::single(3),
        ConnectionGraph::diagonal(&[2, 2]).unwrap(),
        ConnectionGraph::diagonal(&[2, 3]).unwrap(),
        broadcast(),
    ]
}

/// `<Phi| (I (x) ch)(Phi) |Phi>` with `Phi` the joint maximally entangled
/// state, built directly on a diagonal graph where native order is
/// connection order.
fn channel_fidelity_oracle(ch: &KrausChannel) -> f64 {
    let d = ch.in_dim();
    let v = max_entangled_ket(d);
    let layout = single(d).concat(ch.in_layout()).unwrap();
    let phi = DensityOperator::pure(&v, layout).unwrap();
    let out = ch.apply_with_reference(&phi, 1).unwrap();
    let m = out.matrix();
    (0..d * d)
        .flat_map(|i| (0..d * d).map(move |j| (i, j)))
        .map(|(i, j)| (v[i].conj() * m[(i, j)] * v[j]).re)
        .sum()
}

#[test]
fn channel_fidelity_matches_direct_construction() {
    let mut rng = Stream::new(1);
    for g in [
        ConnectionGraph::single(2),
        ConnectionGraph::single(3),
        ConnectionGraph::diagonal(&[2, 2]).unwrap(),
    ] {
        for _ in 0..5 {
            let ch = random_on(&g, 3, &mut rng);
            let oracle = channel_fidelity_oracle(&ch);
            for mode in [FidelityMode::Definition, FidelityMode::KrausTrace] {
                assert!((channel_fidelity(&ch, &g, mode).unwrap() - oracle).abs() < 1e-10);
            }
        }
    }
}

#[test]
fn documented_examples() {
    let q = single(2);
    let g2 = ConnectionGraph::diagonal(&[2, 2]).unwrap();
    let dep = completely_depolarizing(&q, &q).unwrap();
    let ch = product(&[identity(&q), dep.clone()], &g2).unwrap();
    // inputs are the reduced states I/2; purifications are maximally entangled
    let mm = DensityOperator::maximally_mixed(q.clone());
    let r = fidelity_report(&ch, &[mm.clone(), mm.clone()], &g2).unwrap();
    assert!((r.local_values[0] - 1.0).abs() < 1e-12 && (r.local_values[1] - 0.25).abs() < 1e-12);
    assert!((r.global_value - 0.25).abs() < 1e-12);
    for mode in [FidelityMode::Definition, FidelityMode::KrausTrace] {
        assert!((group_channel_fidelity(&ch, &g2, &[0], mode).unwrap() - 1.0).abs() < 1e-12);
    }
    let both = product(&[dep.clone(), dep], &g2).unwrap();
    assert!((channel_fidelity(&both, &g2, FidelityMode::KrausTrace).unwrap() - 1.0 / 16.0).abs() < 1e-12);
    let states = vec![
        vec![C64::new(0.6, 0.0), C64::new(0.0, 0.8)],
        vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
    ];
    assert!((pure_state_fidelity(&both, &g2, &states).unwrap() - 0.25).abs() < 1e-12);
    let id3 = identity(&single(3));
    let r = fidelity_report(
        &id3,
        &[random_density(&single(3), &mut Stream::new(2)).unwrap()],
        &ConnectionGraph::single(3),
    )
    .unwrap();
    assert!(r.group_values.values().all(|v| (v - 1.0).abs() < 1e-12));
}

#[test]
fn single_connection_average_reduces_to_channel_fidelity() {
    let mut rng = Stream::new(3);
    for d in [2usize, 3] {
        let g = ConnectionGraph::single(d);
        let ch = random_on(&g, 2, &mut rng);
        let fc = channel_fidelity(&ch, &g, FidelityMode::KrausTrace).unwrap();
        let avg = average_fidelity_exact(&ch, &g).unwrap();
        assert!((avg - (d as f64 * fc + 1.0) / (d as f64 + 1.0)).abs() < 1e-12);
    }
}

#[test]
fn exact_average_agrees_with_monte_carlo() {
    let mut rng = Stream::new(4);
    for g in graphs() {
        let ch = random_on(&g, 2, &mut rng);
        let exact = average_fidelity_exact(&ch, &g).unwrap();
        let mc = average_fidelity_mc(&ch, &g, 20_000, &rng.substream(99)).unwrap();
        assert!(
            (mc.mean - exact).abs() <= 4.0 * mc.stderr.max(1e-13),
            "{exact} vs {mc:?}"
        );
    }
}

#[test]
fn average_approaches_channel_fidelity_in_large_dimension() {
    let p = 0.2;
    let gap = |d: usize| {
        let g = ConnectionGraph::single(d);
        let ch = depolarizing(d, p).unwrap();
        let fc = channel_fidelity(&ch, &g, FidelityMode::KrausTrace).unwrap();
        let oracle = 1.0 - p + p / (d * d) as f64;
        assert!((fc - oracle).abs() < 1e-12);
        (average_fidelity_exact(&ch, &g).unwrap() - fc).abs()
    };
    let (g2, g4, g16) = (gap(2), gap(4), gap(16));
    assert!(g16 < g4 && g4 < g2, "{g2} {g4} {g16}");
}

#[test]
fn min_fidelity_matches_grid_oracles() {
    let budget = SearchBudget::new(16, 5);
    // leaky qutrit on a coarse grid of real amplitudes
    let leaky = qutrit_leaky().unwrap();
    let g3 = ConnectionGraph::single(3);
    let mut grid_min = f64::INFINITY;
    let steps = 12;
    for a in 0..=steps {
        for b in 0..=steps {
            let (t, u) = (
                a as f64 / steps as f64 * std::f64::consts::FRAC_PI_2,
                b as f64 / steps as f64 * std::f64::consts::FRAC_PI_2,
            );
            let v = vec![
                C64::new(t.cos() * u.cos(), 0.0),
                C64::new(t.cos() * u.sin(), 0.0),
                C64::new(t.sin(), 0.0),
            ];
            grid_min = grid_min.min(pure_state_fidelity(&leaky, &g3, &[v]).unwrap());
        }
    }
    let found = min_subspace_fidelity(&leaky, &g3, &[SubspaceBasis::full(3)], &budget).unwrap();
    assert!(grid_min < 1e-12 && found.value <= grid_min + 1e-8);
    // dephasing: F = 1 - 4 p |a|^2 |b|^2 on |psi> = a|0> + b|1>
    let p = 0.15;
    let grid: f64 = (0..=100)
        .map(|k| {
            let x = k as f64 / 100.0;
            1.0 - 4.0 * p * x * (1.0 - x)
        })
        .fold(f64::INFINITY, f64::min);
    let found = min_subspace_fidelity(
        &dephasing(p).unwrap(),
        &ConnectionGraph::single(2),
        &[SubspaceBasis::full(2)],
        &budget,
    )
    .unwrap();
    assert!((found.value - grid).abs() < 1e-8);
    let id = min_subspace_fidelity(
        &identity(&single(2)),
        &ConnectionGraph::single(2),
        &[SubspaceBasis::full(2)],
        &budget,
    )
    .unwrap();
    assert!((id.value - 1.0).abs() < 1e-12);
}

#[test]
fn min_fidelity_is_reproducible_and_bounds_samples() {
    let mut rng = Stream::new(5);
    let g = ConnectionGraph::diagonal(&[2, 2]).unwrap();
    let ch = random_on(&g, 2, &mut rng);
    let subs = vec![SubspaceBasis::full(2), SubspaceBasis::full(2)];
    let budget = SearchBudget::new(8, 6);
    let a = min_subspace_fidelity(&ch, &g, &subs, &budget).unwrap();
    let b = min_subspace_fidelity(&ch, &g, &subs, &budget).unwrap();
    assert_eq!(a.value.to_bits(), b.value.to_bits());
    let again = pure_state_fidelity(&ch, &g, &a.states).unwrap();
    assert!((again - a.value).abs() < 1e-12);
    for _ in 0..200 {
        let s = vec![
            kmuc::tensor::haar_state(2, &mut rng),
            kmuc::tensor::haar_state(2, &mut rng),
        ];
        assert!(pure_state_fidelity(&ch, &g, &s).unwrap() >= a.value - 1e-9);
    }
}

fn inputs_for(g: &ConnectionGraph, rng: &mut Stream) -> Vec<DensityOperator> {
    g.ref_dims()
        .iter()
        .map(|&d| random_density(&single(d), rng).unwrap())
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn routes_agree(seed in any::<u64>(), which in 0usize..5, env in 1usize..4) {
        let g = graphs().swap_remove(which);
        let mut rng = Stream::new(seed);
        let ch = random_on(&g, env, &mut rng);
        let n = g.len();
        for mask in 1u32..(1 << n) {
            let subset: Vec<usize> = (0..n).filter(|&i| mask & (1 << i) != 0).collect();
            let a = group_channel_fidelity(&ch, &g, &subset, FidelityMode::Definition).unwrap();
            let b = group_channel_fidelity(&ch, &g, &subset, FidelityMode::KrausTrace).unwrap();
            prop_assert!((a - b).abs() < 1e-10);
        }
        let inputs = inputs_for(&g, &mut rng);
        let def = entanglement_fidelity(&ch, &inputs, &g).unwrap();
        prop_assert!((def - entanglement_fidelity_kraus(&ch, &inputs, &g).unwrap()).abs() < 1e-10);
        let all: Vec<usize> = (0..n).collect();
        prop_assert!((def - group_fidelity(&ch, &inputs, &g, &all).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn entanglement_fidelity_is_convex(seed in any::<u64>(), which in 0usize..5, p in 0.0f64..1.0) {
        let g = graphs().swap_remove(which);
        let mut rng = Stream::new(seed);
        let ch = random_on(&g, 2, &mut rng);
        let mut a = inputs_for(&g, &mut rng);
        let slot = rng.below(g.len());
        let other = random_density(&single(g.ref_dims()[slot]), &mut rng).unwrap();
        let fa = entanglement_fidelity(&ch, &a, &g).unwrap();
        let mut b = a.clone();
        b[slot] = other.clone();
        let fb = entanglement_fidelity(&ch, &b, &g).unwrap();
        a[slot] = DensityOperator::mixture(&[(p, &a[slot]), (1.0 - p, &other)]).unwrap();
        let fm = entanglement_fidelity(&ch, &a, &g).unwrap();
        prop_assert!(fm <= p * fa + (1.0 - p) * fb + 1e-9);
    }

    #[test]
    fn group_fidelity_is_monotone_under_tracing(seed in any::<u64>(), which in 0usize..5) {
        let g = graphs().swap_remove(which);
        let mut rng = Stream::new(seed);
        let ch = random_on(&g, 2, &mut rng);
        let r = fidelity_report(&ch, &inputs_for(&g, &mut rng), &g).unwrap();
        for (small, fs) in &r.group_values {
            prop_assert!(*fs <= 1.0 + 1e-9 && *fs >= -1e-12);
            for (big, fb) in &r.group_values {
                if small.iter().all(|i| big.contains(i)) {
                    prop_assert!(*fs >= *fb - 1e-9);
                }
            }
        }
    }
}
