use proptest::prelude::*;

use polyharm::barrier::{radial_poisson_cascade, taylor_bound};
use polyharm::classifier::in_existence_region;
use polyharm::riesz::{chain_residual, fd_neg_laplacian};
use polyharm::{
    classify_single, classify_system, convolve_radial, integral_condition_ii1, log_grid, newtonian_potential_chain,
    power_law_coefficient, tail_condition_ii2, CouplingForm, Decision, FnProfile, Kernel, ProblemParams, RadialExpr,
    RadialProfile, RadialTerm, SampledProfile, Sign, SmoothPlateau, Status, SystemSpec, Tail,
};

fn term() -> impl Strategy<Value = RadialTerm> {
    prop_oneof![
        (-2.0..2.0f64, 0u32..3, 0.2..3.0f64, 0.3..3.0f64).prop_map(|(c, j, a, s)| RadialTerm::new(c, j, a, s).unwrap()),
        (-2.0..2.0f64, -1.5..1.5f64).prop_map(|(c, s)| RadialTerm::new(c, 0, 0.0, s).unwrap()),
    ]
}

fn expr() -> impl Strategy<Value = RadialExpr> {
    prop::collection::vec(term(), 1..5).prop_map(|t| RadialExpr::from_terms(t).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn laplacian_matches_finite_differences(e in expr(), n in 1u32..=12, lr in (0.1f64).ln()..(100.0f64).ln()) {
        let r = lr.exp();
        let exact = -e.laplacian(n).value_at(r);
        let signed = FnProfile::new(|x: f64| e.value_at(x), vec![], Tail::Unknown);
        let fd = fd_neg_laplacian(&signed, n, r, 1e-3);
        prop_assert!((exact - fd).abs() <= 1e-6 * (1.0 + fd.abs()), "{exact} vs {fd}");
    }

    #[test]
    fn laplacian_is_closed(e in expr(), n in 1u32..=12) {
        let l = e.laplacian(n);
        let rebuilt = RadialExpr::from_terms(l.terms().to_vec()).unwrap();
        prop_assert_eq!(&rebuilt, &l);
        prop_assert!(l.terms().iter().all(|t| t.coeff.is_finite() && t.coeff != 0.0 && t.a >= 0.0));
    }

    #[test]
    fn laplacian_is_linear(f in expr(), g in expr(), a in -3.0..3.0f64, b in -3.0..3.0f64, n in 1u32..=12, lr in (0.1f64).ln()..(100.0f64).ln()) {
        let r = lr.exp();
        let lhs = (f.scaled(a) + g.scaled(b)).laplacian(n);
        let rhs = f.laplacian(n).scaled(a) + g.laplacian(n).scaled(b);
        let (x, y) = (lhs.value_at(r), rhs.value_at(r));
        let mag = f.laplacian(n).value_at(r).abs() * a.abs() + g.laplacian(n).value_at(r).abs() * b.abs();
        prop_assert!((x - y).abs() <= 1e-12 * (1.0 + mag), "{x} vs {y}");
    }

    #[test]
    fn power_law_exact(n in 3u32..=12, m in 1u32..=4, t in 0.01..0.99f64) {
        prop_assume!(n > 2 * m);
        let kappa = t * (n - 2 * m) as f64;
        let l = RadialExpr::power(1.0, -kappa).neg_laplacian_power(n, m);
        let c = power_law_coefficient(n, m, kappa);
        for r in [0.3f64, 1.0, 7.0] {
            let want = c * r.powf(-kappa - 2.0 * m as f64);
            prop_assert!((l.value_at(r) - want).abs() <= 1e-12 * want.abs());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kernels_non_increasing(n in 1u32..=10, x in 0.01..0.99f64, lo in -3.0..0.0f64) {
        let nf = n as f64;
        let grid = log_grid(10f64.powf(lo), 1e4, 300).unwrap();
        let mut ks = vec![Kernel::riesz(x * nf)];
        if n >= 2 {
            ks.push(Kernel::log(1.0 + x * (nf - 1.0)));
        }
        ks.push(Kernel::tabulate(&ks[0], n, log_grid(1e-2, 1e2, 50).unwrap()).unwrap());
        for k in &ks {
            let vals: Vec<f64> = grid.iter().map(|&r| k.eval(n, r).unwrap()).collect();
            prop_assert!(vals.iter().all(|v| *v > 0.0));
            prop_assert!(vals.windows(2).all(|w| w[1] <= w[0]), "{} increases", k.name());
        }
    }

    #[test]
    fn riesz_tail_condition_flips(n in 3u32..=12, m in 1u32..=4, x in 0.01..0.99f64) {
        prop_assume!(n > 2 * m);
        let alpha = x * n as f64;
        let k = Kernel::riesz(alpha);
        let tau = (2.0 * n as f64 - alpha) / (n - 2 * m) as f64;
        prop_assert_eq!(tail_condition_ii2(&k, n, m, tau - 1e-6), Decision::Holds);
        prop_assert_eq!(tail_condition_ii2(&k, n, m, tau + 1e-6), Decision::Fails);
        prop_assert_eq!(tail_condition_ii2(&k, n, m, tau), Decision::Holds);
    }

    #[test]
    fn tabulated_matches_symbolic(n in 3u32..=10, m in 1u32..=3, x in 0.05..0.95f64, p in 0.5..4.0f64, tau in 1.0..8.0f64) {
        prop_assume!(n > 2 * m);
        let k = Kernel::riesz(x * n as f64);
        let t = Kernel::tabulate(&k, n, log_grid(1e-3, 1e4, 400).unwrap()).unwrap();
        prop_assert_eq!(tail_condition_ii2(&t, n, m, tau), tail_condition_ii2(&k, n, m, tau));
        prop_assert_eq!(integral_condition_ii1(&t, n, m, p), integral_condition_ii1(&k, n, m, p));
    }

    #[test]
    fn classifier_monotone(n in 3u32..=12, m in 1u32..=4, x in 0.05..0.95f64, p in 1.0..6.0f64, q in 1.01..6.0f64, dp in 0.0..2.0f64, dq in 0.0..2.0f64) {
        prop_assume!(n > 2 * m);
        let alpha = x * n as f64;
        let at = |p, q| classify_single(&ProblemParams::riesz(n, m, Sign::Plus, alpha, p, q)).unwrap().status;
        if at(p, q) == Status::ExistsNontrivial {
            prop_assert_eq!(at(p + dp, q + dq), Status::ExistsNontrivial);
        }
    }

    #[test]
    fn tail_clause_silent_inside_region(n in 3u32..=12, m in 1u32..=4, x in 0.05..0.95f64, p in 1.0..6.0f64, q in 1.01..6.0f64) {
        prop_assume!(n > 2 * m);
        let alpha = x * n as f64;
        prop_assume!(in_existence_region(n, m, alpha, p, q));
        let v = classify_single(&ProblemParams::riesz(n, m, Sign::Plus, alpha, p, q)).unwrap();
        let tail = v.clauses.iter().find(|c| c.id == "tail-limsup").unwrap();
        prop_assert!(!tail.satisfied);
        prop_assert_eq!(v.status, Status::ExistsNontrivial);
    }

    #[test]
    fn system_permutation_invariant(
        k in 2usize..=5,
        bits in prop::collection::vec(any::<bool>(), 10),
        perm_seed in any::<u64>(),
        self_coupled in any::<bool>(),
        ps in prop::collection::vec(1.0..4.0f64, 25),
        qs in prop::collection::vec(1.0..4.0f64, 25),
        alphas in prop::collection::vec(0.5..4.5f64, 25),
    ) {
        let mut adj = vec![vec![0u8; k]; k];
        let mut b = bits.iter();
        for i in 0..k {
            for j in i + 1..k {
                let e = *b.next().unwrap() as u8;
                adj[i][j] = e;
                adj[j][i] = e;
            }
        }
        let spec = SystemSpec {
            dim: 5,
            m: 1,
            form: if self_coupled { CouplingForm::SelfCoupled } else { CouplingForm::Cross },
            adjacency: adj,
            p: (0..k).map(|i| ps[5 * i..5 * i + k].to_vec()).collect(),
            q: (0..k).map(|i| qs[5 * i..5 * i + k].to_vec()).collect(),
            kernels: (0..k).map(|i| alphas[5 * i..5 * i + k].iter().map(|&a| Kernel::riesz(a)).collect()).collect(),
        };
        let mut perm: Vec<usize> = (0..k).collect();
        let mut s = perm_seed;
        for i in (1..k).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            perm.swap(i, (s >> 33) as usize % (i + 1));
        }
        let a = classify_system(&spec).unwrap();
        let b = classify_system(&spec.permuted(&perm)).unwrap();
        prop_assert_eq!(a.verdict, b.verdict);
        for (i, &pi) in perm.iter().enumerate() {
            prop_assert_eq!(a.nodes[pi], b.nodes[i]);
        }
        let mut pa: Vec<(usize, usize)> = a.exclusive_pairs.iter().map(|&(i, j)| (i.min(j), i.max(j))).collect();
        let mut pb: Vec<(usize, usize)> = b.exclusive_pairs.iter().map(|&(i, j)| (perm[i].min(perm[j]), perm[i].max(perm[j]))).collect();
        pa.sort();
        pb.sort();
        prop_assert_eq!(pa, pb);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn chain_consistent_and_bounded_below(radius in 0.3..3.0f64, nm in prop::sample::select(vec![(3u32, 1u32), (5, 1), (5, 2), (7, 2), (9, 2), (9, 3)])) {
        let (n, m) = nm;
        let f = SmoothPlateau::new(radius).unwrap();
        let grid = log_grid(1e-3, 1e5, 4096).unwrap();
        let chain = newtonian_potential_chain(&f, n, m, &grid).unwrap();
        let res = chain_residual(&chain, &f, n).unwrap();
        prop_assert!(res <= 1e-4, "residual {res}");
        let w = chain.last();
        let scaled: Vec<f64> = w.radii().iter().zip(w.values()).filter(|(r, _)| **r >= 2.0 * radius).map(|(r, v)| v * r.powi((n - 2 * m) as i32)).collect();
        let lower = scaled.iter().copied().fold(f64::INFINITY, f64::min);
        prop_assert!(lower > 0.0);
        // Bounded below by a positive constant: the tail settles rather than decays.
        prop_assert!(lower >= 0.5 * scaled[scaled.len() - 1]);
    }

    #[test]
    fn convolution_continuous(lr in (0.05f64).ln()..(50.0f64).ln(), s in 1.6..4.0f64, x in 0.1..0.9f64) {
        let r = lr.exp();
        let f = RadialExpr::shifted(1.0, 1.0, s).unwrap();
        let k = Kernel::riesz(3.0 * x);
        let a = convolve_radial(&k, &f, 1.0, 3, r).unwrap();
        let b = convolve_radial(&k, &f, 1.0, 3, r * (1.0 + 1e-6)).unwrap();
        prop_assert!(a.is_finite() && a > 0.0);
        prop_assert!((a - b).abs() <= 1e-4 * a, "{a} vs {b}");
    }

    #[test]
    fn cascade_round_trip(n in 3u32..=9, m in 2u32..=3, s in 0.5..3.0f64, c0 in -2.0..2.0f64) {
        // Top level 1/(1+r²)^s on a log-uniform grid; check Δ level_k = level_{k+1}
        // at interior nodes with the node-based 5-point stencil.
        let grid = log_grid(1e-3, 1e2, 600).unwrap();
        let top = SampledProfile::sample(&RadialExpr::shifted(1.0, 1.0, s).unwrap(), grid.clone(), None).unwrap();
        let centers = vec![c0; (m - 1) as usize];
        let st = radial_poisson_cascade(&top, n, m, &centers).unwrap();
        let h = (grid[1] / grid[0]).ln();
        for k in 0..(m - 1) as usize {
            let v = st.levels[k].values();
            let g = st.levels[k + 1].values();
            let mut worst: f64 = 0.0;
            for i in 2..grid.len() - 2 {
                let r = grid[i];
                let wt = (v[i - 2] - 8.0 * v[i - 1] + 8.0 * v[i + 1] - v[i + 2]) / (12.0 * h);
                let wtt = (-v[i - 2] + 16.0 * v[i - 1] - 30.0 * v[i] + 16.0 * v[i + 1] - v[i + 2]) / (12.0 * h * h);
                let lap = (wtt + (n as f64 - 2.0) * wt) / (r * r);
                worst = worst.max((lap - g[i]).abs() / (g[i].abs() + v[i].abs() / (r * r)));
            }
            prop_assert!(worst <= 1e-4, "level {k}: {worst}");
        }
    }

    #[test]
    fn taylor_exact_for_polyharmonic_polynomials(n in 1u32..=12, m in 1u32..=4, coeffs in prop::collection::vec(-3.0..3.0f64, 4), r in 0.0..5.0f64) {
        // ū = Σ_{k<m} c_k r^{2k}; its centre data Δ^k ū(0) come from the symbolic Laplacian.
        let u = (0..m as usize).fold(RadialExpr::zero(), |acc, k| acc + RadialExpr::power(coeffs[k], 2.0 * k as f64));
        let mut centers = Vec::new();
        let mut level = u.clone();
        for _ in 0..m {
            centers.push(level.eval(0.0).unwrap());
            level = level.laplacian(n);
        }
        let want = u.eval(r).unwrap();
        let got = taylor_bound(&centers, n, m, r);
        prop_assert!((got - want).abs() <= 1e-12 * (1.0 + want.abs()), "{got} vs {want}");
    }

    #[test]
    fn taylor_bounds_cascade_when_top_peaks_at_centre(n in 3u32..=9, s in 0.5..3.0f64, c in prop::collection::vec(-2.0..2.0f64, 2)) {
        // Δ²ū = (1+r²)^{-s} ≤ its value at 0, so ū stays below its Taylor polynomial.
        let (m, grid) = (3, log_grid(1e-4, 1e2, 500).unwrap());
        let top = SampledProfile::sample(&RadialExpr::shifted(1.0, 1.0, s).unwrap(), grid.clone(), None).unwrap();
        let st = radial_poisson_cascade(&top, n, m, &c).unwrap();
        let centers = vec![c[0], c[1], 1.0];
        for (&r, &v) in grid.iter().zip(st.levels[0].values()) {
            let b = taylor_bound(&centers, n, m, r);
            prop_assert!(v <= b + 1e-9 * (1.0 + b.abs()), "r = {r}: {v} > {b}");
        }
    }
}

#[test]
fn lower_bound_profile_positive() {
    // Spot check on the unit plateau used by the builder.
    let f = SmoothPlateau::new(1.0).unwrap();
    let chain = newtonian_potential_chain(&f, 9, 2, &log_grid(1e-3, 1e5, 512).unwrap()).unwrap();
    let w = chain.last();
    assert!((0..w.len()).all(|i| w.values()[i] > 0.0));
    assert!(w.value(1e6) > 0.0 && w.tail() != Tail::Unknown);
}
