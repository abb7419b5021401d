use kmuc::channels::{identity, product, qutrit_leaky, random_channel, ConnectionGraph, KrausChannel};
use kmuc::fidelities::{average_fidelity_exact, channel_fidelity, pure_state_fidelity, FidelityMode};
use kmuc::fixtures::near_identity;
use kmuc::optim::SearchBudget;
use kmuc::protocols::{
    clifford_1q, default_ensembles, extract_subspace, haar_ensemble, phase_average_bound, teleport_channel,
    twirl_channel, DesignKind,
};
use kmuc::rng::Stream;
use kmuc::tensor::{
    haar_state, haar_unitary, kron, max_entangled_ket, ComplexMatrix, DensityOperator, SubspaceBasis, SystemLayout, C64,
};

fn qubit() -> SystemLayout {
    SystemLayout::single(2).unwrap()
}

fn random_qubit_channel(rng: &mut Stream) -> KrausChannel {
    random_channel(&qubit(), &qubit(), 3, rng).unwrap()
}

fn random_mixed(d: usize, rng: &mut Stream) -> DensityOperator {
    let g = ComplexMatrix::from_fn(d, d, |_, _| rng.complex_normal());
    let m = &g * &g.adjoint();
    let t = m.trace().re;
    DensityOperator::new(m.scale(1.0 / t), SystemLayout::single(d).unwrap()).unwrap()
}

/// Haar twirl of a qubit channel in closed form: the depolarizing map that
/// keeps the channel fidelity, `p = (4 F_c - 1) / 3`.
fn haar_twirl_oracle(ch: &KrausChannel, rho: &ComplexMatrix) -> ComplexMatrix {
    let v = max_entangled_ket(2);
    let phi = DensityOperator::pure(&v, SystemLayout::new(vec![2, 2]).unwrap()).unwrap();
    let out = ch.apply_with_reference(&phi, 1).unwrap();
    let fc: f64 = (0..4)
        .flat_map(|i| (0..4).map(move |j| (i, j)))
        .map(|(i, j)| (v[i].conj() * out.matrix()[(i, j)] * v[j]).re)
        .sum();
    let p = (4.0 * fc - 1.0) / 3.0;
    let mut r = rho.scale(p);
    r.add_assign_scaled(&ComplexMatrix::identity(2), C64::new((1.0 - p) / 2.0, 0.0));
    r
}

fn clifford_twirl_of(ch: &KrausChannel, rho: &ComplexMatrix) -> ComplexMatrix {
    let c = clifford_1q();
    let mut acc = ComplexMatrix::zeros(2, 2);
    for u in c.elements() {
        let inner = ch.apply_matrix(&(&(u * rho) * &u.adjoint())).unwrap();
        acc.add_assign_scaled(&(&(&u.adjoint() * &inner) * u), C64::new(1.0 / 24.0, 0.0));
    }
    acc
}

#[test]
fn clifford_second_moment_matches_haar_twirl() {
    let mut rng = Stream::new(11);
    for _ in 0..10 {
        let ch = random_qubit_channel(&mut rng);
        let rho = random_mixed(2, &mut rng);
        let oracle = haar_twirl_oracle(&ch, rho.matrix());
        assert!(clifford_twirl_of(&ch, rho.matrix()).max_abs_diff(&oracle) < 1e-8);
    }
}

#[test]
fn closed_form_haar_twirl_agrees_with_sampling() {
    let mut rng = Stream::new(12);
    let ch = random_qubit_channel(&mut rng);
    let rho = random_mixed(2, &mut rng);
    let n = 20_000;
    let mut acc = ComplexMatrix::zeros(2, 2);
    for _ in 0..n {
        let u = haar_unitary(2, &mut rng);
        let inner = ch.apply_matrix(&(&(&u * rho.matrix()) * &u.adjoint())).unwrap();
        acc.add_assign_scaled(&(&(&u.adjoint() * &inner) * &u), C64::new(1.0 / n as f64, 0.0));
    }
    // entries are bounded by 1, so 5 / sqrt(n) is a generous envelope
    assert!(acc.max_abs_diff(&haar_twirl_oracle(&ch, rho.matrix())) < 5.0 / (n as f64).sqrt());
}

#[test]
fn twirling_identity_is_identity() {
    let g = ConnectionGraph::diagonal(&[2, 2]).unwrap();
    let id = identity(&SystemLayout::new(vec![2, 2]).unwrap());
    let t = twirl_channel(&id, &g, &[clifford_1q(), clifford_1q()]).unwrap();
    assert!(t.action_distance(&id).unwrap() < 1e-10);
}

fn spread_and_mean(ch: &KrausChannel, g: &ConnectionGraph, rng: &mut Stream) -> (f64, f64) {
    let vals: Vec<f64> = (0..100)
        .map(|_| {
            let states: Vec<Vec<C64>> = g.ref_dims().iter().map(|&d| haar_state(d, rng)).collect();
            pure_state_fidelity(ch, g, &states).unwrap()
        })
        .collect();
    let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    (hi - lo, vals.iter().sum::<f64>() / vals.len() as f64)
}

#[test]
fn clifford_twirled_fidelity_is_flat_and_equals_average() {
    let mut rng = Stream::new(13);
    let single = ConnectionGraph::single(2);
    for _ in 0..5 {
        let ch = random_qubit_channel(&mut rng);
        let t = twirl_channel(&ch, &single, &[clifford_1q()]).unwrap();
        assert!(t.validate().passed);
        let (spread, mean) = spread_and_mean(&t, &single, &mut rng);
        assert!(spread <= 1e-8);
        assert!((mean - average_fidelity_exact(&ch, &single).unwrap()).abs() < 1e-8);
        let again = average_fidelity_exact(&t, &single).unwrap();
        assert!((again - average_fidelity_exact(&ch, &single).unwrap()).abs() < 1e-9);
    }
    let pair = ConnectionGraph::diagonal(&[2, 2]).unwrap();
    let l = SystemLayout::new(vec![2, 2]).unwrap();
    for _ in 0..3 {
        let ch = random_channel(&l, &l, 2, &mut rng).unwrap();
        let t = twirl_channel(&ch, &pair, &[clifford_1q(), clifford_1q()]).unwrap();
        assert!(t.validate().passed);
        assert!(t.kraus().len() <= 16);
        let (spread, mean) = spread_and_mean(&t, &pair, &mut rng);
        assert!(spread <= 1e-8);
        assert!((mean - average_fidelity_exact(&ch, &pair).unwrap()).abs() < 1e-8);
    }
}

#[test]
fn sampled_qutrit_twirl_is_statistically_flat() {
    // for one fixed psi the twirled fidelity is a mean over N Haar points
    let mut rng = Stream::new(14);
    let l = SystemLayout::single(3).unwrap();
    let ch = random_channel(&l, &l, 2, &mut rng).unwrap();
    let g = ConnectionGraph::single(3);
    let e = haar_ensemble(3, 400, &mut rng).unwrap();
    assert_eq!(e.kind(), DesignKind::Sampled);
    let t = twirl_channel(&ch, &g, std::slice::from_ref(&e)).unwrap();
    assert!(t.validate().passed);
    let exact = average_fidelity_exact(&ch, &g).unwrap();
    for _ in 0..5 {
        let psi = haar_state(3, &mut rng);
        let f: Vec<f64> = e
            .elements()
            .iter()
            .map(|u| {
                let v: Vec<C64> = (0..3).map(|i| (0..3).map(|j| u[(i, j)] * psi[j]).sum()).collect();
                pure_state_fidelity(&ch, &g, &[v]).unwrap()
            })
            .collect();
        let n = f.len() as f64;
        let mean = f.iter().sum::<f64>() / n;
        let se = (f.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt();
        let tw = pure_state_fidelity(&t, &g, &[psi]).unwrap();
        assert!((tw - mean).abs() < 1e-10);
        assert!((tw - exact).abs() < 5.0 * se, "{tw} vs {exact} (se {se})");
    }
}

#[test]
fn default_ensembles_twirl_mixed_dimensions() {
    let g = ConnectionGraph::diagonal(&[2, 3]).unwrap();
    let l = SystemLayout::new(vec![2, 3]).unwrap();
    let ch = random_channel(&l, &l, 2, &mut Stream::new(15)).unwrap();
    let e = default_ensembles(&g, 8, &Stream::new(16)).unwrap();
    let t = twirl_channel(&ch, &g, &e).unwrap();
    assert!(t.validate().passed);
    assert!(twirl_channel(&ch, &g, &e[..1]).is_err());
}

/// Teleportation simulated on `A (x) A' (x) B` by projecting onto each Bell
/// state and applying the correction.
fn teleport_oracle(resource: &DensityOperator, rho: &ComplexMatrix) -> ComplexMatrix {
    let d = rho.rows();
    let joint = kron(rho, resource.matrix()).unwrap();
    let phi = max_entangled_ket(d);
    let mut out = ComplexMatrix::zeros(d, d);
    for a in 0..d {
        for b in 0..d {
            let w = kmuc::channels::weyl(d, a, b);
            // |Phi_ab> = (I (x) W_ab)|Phi+> on A A'
            let bell: Vec<C64> = (0..d * d)
                .map(|idx| {
                    let (x, y) = (idx / d, idx % d);
                    (0..d).map(|k| w[(y, k)] * phi[x * d + k]).sum()
                })
                .collect();
            let proj = kron(&ComplexMatrix::ket(&bell).adjoint(), &ComplexMatrix::identity(d)).unwrap();
            let bob = &(&proj * &joint) * &proj.adjoint();
            let c = w.transpose();
            let corrected = &(&c * &bob) * &c.adjoint();
            out = &out + &corrected;
        }
    }
    out
}

#[test]
fn teleportation_matches_branch_simulation() {
    let mut rng = Stream::new(17);
    for d in [2usize, 3] {
        let resource = {
            let g = ComplexMatrix::from_fn(d * d, d * d, |_, _| rng.complex_normal());
            let m = &g * &g.adjoint();
            let t = m.trace().re;
            DensityOperator::new(m.scale(1.0 / t), SystemLayout::new(vec![d, d]).unwrap()).unwrap()
        };
        let ch = teleport_channel(&resource).unwrap();
        for _ in 0..3 {
            let rho = random_mixed(d, &mut rng);
            let lib = ch.apply_matrix(rho.matrix()).unwrap();
            assert!(lib.max_abs_diff(&teleport_oracle(&resource, rho.matrix())) < 1e-12);
        }
    }
}

#[test]
fn teleportation_fidelity_rises_to_one() {
    let l = SystemLayout::new(vec![2, 2]).unwrap();
    let phi = DensityOperator::max_entangled(2).unwrap();
    let mm = DensityOperator::maximally_mixed(l);
    let g = ConnectionGraph::single(2);
    let mut prev = -1.0;
    for k in (0..=10).rev() {
        let eps = k as f64 / 10.0;
        let res = DensityOperator::mixture(&[(1.0 - eps, &phi), (eps, &mm)]).unwrap();
        let fc = channel_fidelity(&teleport_channel(&res).unwrap(), &g, FidelityMode::KrausTrace).unwrap();
        assert!(fc >= prev - 1e-12);
        prev = fc;
    }
    assert!((prev - 1.0).abs() < 1e-12);
}

#[test]
fn extraction_reconstructs_inputs_and_peels_one_dimension_at_a_time() {
    // leaky qutrit on connection 0, noisy qubit identity on connection 1
    let g = ConnectionGraph::diagonal(&[3, 2]).unwrap();
    let ch = product(&[qutrit_leaky().unwrap(), identity(&qubit())], &g).unwrap();
    let mut rng = Stream::new(18);
    // diagonal on the qutrit so the leftover support is exactly span{|0>, |1>}
    let diag = DensityOperator::new(ComplexMatrix::diag(&[0.5, 0.3, 0.2]), SystemLayout::single(3).unwrap()).unwrap();
    let inputs = vec![diag, random_mixed(2, &mut rng)];
    let ex = extract_subspace(&ch, &g, &inputs, 1e-6, &SearchBudget::new(16, 1)).unwrap();
    for dims in &ex.support_dims {
        for w in dims.windows(2) {
            assert_eq!(w[0], w[1] + 1);
        }
    }
    assert_eq!(ex.subspaces[0].dim(), 2);
    assert_eq!(ex.subspaces[1].dim(), 2);
    assert!((ex.alphas[0] - 0.2).abs() < 1e-9 && ex.alphas[1] == 0.0);
    let good = SubspaceBasis::computational(3, &[0, 1]).unwrap();
    assert!(good.overlap(&ex.subspaces[0]) >= 1.0 - 1e-6);
    for (i, input) in inputs.iter().enumerate() {
        let mut sum = ex.remainders[i].matrix().scale(1.0 - ex.alphas[i]);
        for (q, phi) in &ex.removed[i] {
            sum.add_assign_scaled(&ComplexMatrix::projector(phi), C64::new(*q, 0.0));
        }
        assert!(sum.max_abs_diff(input.matrix()) < 1e-8);
        let q_total: f64 = ex.removed[i].iter().map(|(q, _)| q).sum();
        assert!((q_total - ex.alphas[i]).abs() < 1e-15);
    }
    assert!(ex.bound_holds(1e-6));
}

#[test]
fn phase_bound_on_near_identity_channels() {
    let mut rng = Stream::new(19);
    let budget = SearchBudget::new(8, 2);
    for dims in [vec![2usize], vec![2, 2]] {
        let g = ConnectionGraph::diagonal(&dims).unwrap();
        let full: Vec<SubspaceBasis> = dims.iter().map(|&d| SubspaceBasis::full(d)).collect();
        for _ in 0..10 {
            let ch = near_identity(&g, 1e-3, &mut rng).unwrap();
            let b = phase_average_bound(&ch, &g, &full, &budget).unwrap();
            assert!(b.holds(1e-9), "{b:?}");
        }
    }
    let id = identity(&qubit());
    let b = phase_average_bound(&id, &ConnectionGraph::single(2), &[SubspaceBasis::full(2)], &budget).unwrap();
    assert!(b.eta < 1e-12 && (b.fe - 1.0).abs() < 1e-12);
}
