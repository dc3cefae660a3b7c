use proptest::prelude::*;

use qcp_core::criticality::{fit_beta, fit_gamma, Window};
use qcp_core::eigen::DenseOptions;
use qcp_core::ground::TrackerConfig;
use qcp_core::model::build_heff;
use qcp_core::observables::{correlation_profile, entanglement_entropy, MagnetizationOps};
use qcp_core::operator::{assemble, embed};
use qcp_core::{eig_full, Axis, Boundary, ModelParams, PauliFactor, PauliKind, PauliString, Solver, Tracker, C64};

const KINDS: [PauliKind; 7] =
    [PauliKind::Id, PauliKind::X, PauliKind::Y, PauliKind::Z, PauliKind::Plus, PauliKind::Minus, PauliKind::N];

fn kind() -> impl Strategy<Value = PauliKind> {
    (0..KINDS.len()).prop_map(|i| KINDS[i])
}

fn complex() -> impl Strategy<Value = C64> {
    (-2.0..2.0f64, -2.0..2.0f64).prop_map(|(a, b)| C64::new(a, b))
}

/// A Pauli string on distinct sites of a chain of `len` sites.
fn string(len: usize) -> impl Strategy<Value = PauliString> {
    (complex(), proptest::collection::vec(proptest::option::of(kind()), len)).prop_map(|(c, ks)| {
        let factors = ks.into_iter().enumerate().filter_map(|(s, k)| k.map(|k| PauliFactor::new(k, s)));
        PauliString::new(c, factors).unwrap()
    })
}

fn state(sites: usize) -> impl Strategy<Value = Vec<C64>> {
    proptest::collection::vec(complex(), 1 << sites).prop_filter_map("nonzero", |mut v| {
        let n = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        (n > 1e-3).then(|| {
            v.iter_mut().for_each(|a| *a /= n);
            v
        })
    })
}

fn close(a: &[C64], b: &[C64], tol: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).norm() <= tol)
}

/// Every element of `a` has a partner in `b` (greedy matching).
fn same_multiset(a: &[C64], b: &[C64], tol: f64) -> bool {
    let mut used = vec![false; b.len()];
    a.iter().all(|x| {
        let best = (0..b.len()).filter(|&j| !used[j]).min_by(|&i, &j| (b[i] - x).norm().total_cmp(&(b[j] - x).norm()));
        match best {
            Some(j) if (b[j] - x).norm() <= tol => {
                used[j] = true;
                true
            }
            _ => false,
        }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn assembly_is_linear((len, p, q) in (1usize..=4).prop_flat_map(|l| (Just(l), string(l), string(l)))) {
        let both = assemble(&[p.clone(), q.clone()], len).unwrap();
        let sum = assemble(&[p], len).unwrap().add(&assemble(&[q], len).unwrap()).unwrap();
        prop_assert!(close(&both.to_dense(), &sum.to_dense(), 1e-12));
    }

    #[test]
    fn projector_is_half_of_z_plus_identity(len in 1usize..=5, site in 0usize..5) {
        let site = site % len;
        let n = embed(PauliFactor::new(PauliKind::N, site), len).unwrap();
        let z = embed(PauliFactor::new(PauliKind::Z, site), len).unwrap();
        let rhs = z.add(&qcp_core::SparseOperator::identity(1 << len)).unwrap().scale(C64::new(0.5, 0.0));
        prop_assert!(close(&n.to_dense(), &rhs.to_dense(), 1e-15));
    }

    #[test]
    fn sparse_product_matches_dense(sites in 2usize..=5, g in 0.0..20.0f64, x in state(5)) {
        let p = ModelParams::new(sites, 1.0, C64::new(0.3, g), Boundary::Periodic).unwrap();
        let h = build_heff(&p).unwrap();
        let d = h.to_dense();
        let x = &x[..1 << sites];
        let dim = 1 << sites;
        let dense: Vec<C64> = (0..dim).map(|r| (0..dim).map(|c| d[r * dim + c] * x[c]).sum()).collect();
        prop_assert!(close(&h.matvec(x).unwrap(), &dense, 1e-12));
    }

    #[test]
    fn dissipative_spectrum_is_mirror_symmetric(sites in 2usize..=6, g in 0.0..20.0f64) {
        let p = ModelParams::dissipative(sites, g).unwrap();
        let e = eig_full(&build_heff(&p).unwrap(), &DenseOptions::default()).unwrap().values();
        let mirrored: Vec<C64> = e.iter().map(|x| -x.conj()).collect();
        prop_assert!(same_multiset(&e, &mirrored, 1e-9 * (1.0 + g)));
    }

    #[test]
    fn eigenvalues_sum_to_the_trace(sites in 2usize..=6, re in -6.0..6.0f64, im in 0.0..20.0f64) {
        let gamma = C64::new(re, im);
        let p = ModelParams::new(sites, 1.0, gamma, Boundary::Periodic).unwrap();
        let e = eig_full(&build_heff(&p).unwrap(), &DenseOptions::default()).unwrap().values();
        let total: C64 = e.iter().sum();
        let expected = -gamma / 2.0 * (sites as f64) * (1u64 << (sites - 1)) as f64;
        prop_assert!((total - expected).norm() <= 1e-9 * expected.norm().max(1.0));
    }

    #[test]
    fn beta_fit_is_exact_on_power_laws(beta in 0.1..3.0f64, amp in 0.01..100.0f64, gc in 1.0..20.0f64) {
        let series: Vec<(f64, f64)> =
            (0..25).map(|i| 1e-3 * 400f64.powf(i as f64 / 24.0)).map(|d| (gc - d, -amp * d.powf(beta))).collect();
        let f = fit_beta(&series, gc, None).unwrap();
        prop_assert!((f.value - beta).abs() < 1e-10);
        prop_assert!((f.amplitude - amp).abs() < 1e-9 * amp);
    }

    #[test]
    fn gamma_fit_is_exact_and_scale_free(gamma in 0.1..3.0f64, scale in 0.01..100.0f64) {
        let gc = 13.8;
        let series: Vec<(f64, f64)> =
            (0..20).map(|i| 0.01 * 100f64.powf(i as f64 / 19.0)).map(|d| (gc + d, d.powf(-gamma))).collect();
        let scaled: Vec<(f64, f64)> = series.iter().map(|&(g, c)| (g, scale * c)).collect();
        let w = Some(Window::new(1e-2, 1.0).unwrap());
        let a = fit_gamma(&series, gc, w).unwrap();
        let b = fit_gamma(&scaled, gc, w).unwrap();
        prop_assert!((a.value - gamma).abs() < 1e-10);
        prop_assert!((a.value - b.value).abs() < 1e-10);
        prop_assert!((b.amplitude / a.amplitude - scale).abs() < 1e-9 * scale);
    }

    #[test]
    fn block_and_complement_share_entropy(sites in 2usize..=6, la in 1usize..6, v in state(6)) {
        let la = 1 + la % (sites - 1);
        let psi = &v[..1 << sites];
        let n = psi.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        prop_assume!(n > 1e-3);
        let psi: Vec<C64> = psi.iter().map(|a| a / n).collect();
        // reversing the chain turns the trailing block into the leading one
        let rev = |i: usize| (0..sites).fold(0, |acc, k| acc | (((i >> k) & 1) << (sites - 1 - k)));
        let flipped: Vec<C64> = (0..psi.len()).map(|i| psi[rev(i)]).collect();
        let a = entanglement_entropy(&psi, sites, la).unwrap();
        let b = entanglement_entropy(&flipped, sites, sites - la).unwrap();
        prop_assert!((a - b).abs() < 1e-10);
        prop_assert!(a >= -1e-12 && a <= (la.min(sites - la) as f64) * 2f64.ln() + 1e-10);
    }

    #[test]
    fn z_polarization_counts_up_spins(sites in 1usize..=6, v in state(6)) {
        let psi = &v[..1 << sites];
        let n = psi.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        prop_assume!(n > 1e-3);
        let psi: Vec<C64> = psi.iter().map(|a| a / n).collect();
        let m = MagnetizationOps::new(sites).unwrap().measure(&psi).unwrap();
        prop_assert!((m.mz - (2.0 * m.nup - sites as f64)).abs() < 1e-12);
    }

    #[test]
    fn periodic_ground_state_correlations_are_reflection_symmetric(sites in 4usize..=7, g in 0.0..12.0f64) {
        let p = ModelParams::dissipative(sites, g).unwrap();
        let mut t = Tracker::new(p, Axis::Imaginary { re: 0.0 }, Solver::dense(), TrackerConfig::for_omega(1.0));
        let step = t.step(g).unwrap();
        let prof = correlation_profile(&step.record.state, sites, g).unwrap();
        // offsets n and L + 2 - n are the same distance on a ring
        for (i, &n) in prof.n.iter().enumerate() {
            let j = prof.n.iter().position(|&m| m == sites + 2 - n).unwrap();
            prop_assert!((prof.values[i] - prof.values[j]).abs() < 1e-8);
        }
    }
}
