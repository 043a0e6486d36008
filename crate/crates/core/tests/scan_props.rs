use parseq::lds::{
    compose_affine, evaluate_lds_parallel, evaluate_lds_parallel_with, evaluate_lds_sequential, relative_diff,
    AffineElement, Permutation, TransitionMatrix,
};
use parseq::pscan::{inclusive_scan, scan_with, sequential_scan, Execution, ScanOptions};
use parseq::DenseMatrix;
use proptest::prelude::*;

fn permutation(n: usize) -> impl Strategy<Value = Permutation> {
    Just((0..n).collect::<Vec<_>>()).prop_shuffle().prop_map(|v| Permutation::new(v).unwrap())
}

fn transition(n: usize) -> impl Strategy<Value = TransitionMatrix> {
    prop_oneof![
        prop::collection::vec(-1.2..1.2f64, n * n)
            .prop_map(move |d| TransitionMatrix::Dense(DenseMatrix::from_row_major(n, n, d).unwrap())),
        prop::collection::vec(-1.2..1.2f64, n).prop_map(TransitionMatrix::Diagonal),
        (-1.2..1.2f64).prop_map(move |s| TransitionMatrix::ScaledIdentity { dim: n, scale: s }),
        Just(TransitionMatrix::Identity(n)),
        Just(TransitionMatrix::Zero(n)),
        permutation(n).prop_map(TransitionMatrix::Permutation),
    ]
}

fn element(n: usize) -> impl Strategy<Value = AffineElement> {
    (transition(n), prop::collection::vec(-2.0..2.0f64, n)).prop_map(|(a, b)| AffineElement::new(a, b).unwrap())
}

fn problem() -> impl Strategy<Value = (Vec<f64>, Vec<AffineElement>)> {
    (1usize..5).prop_flat_map(|n| (prop::collection::vec(-2.0..2.0f64, n), prop::collection::vec(element(n), 1..80)))
}

proptest! {
    #[test]
    fn integer_sums_are_exact(xs in prop::collection::vec(-1000i64..1000, 1..300)) {
        let par = inclusive_scan(&xs, &|a: &i64, b: &i64| a + b).unwrap();
        prop_assert_eq!(par, sequential_scan(&xs, &|a: &i64, b: &i64| a + b).unwrap());
    }

    #[test]
    fn non_commutative_operator_keeps_order(xs in prop::collection::vec("[a-c]", 1..100)) {
        let concat = |a: &String, b: &String| format!("{a}{b}");
        for pad in [false, true] {
            let opts = ScanOptions { execution: Execution::Parallel, pad, min_parallel: 1 };
            let par = scan_with(&xs, &concat, opts).unwrap();
            prop_assert_eq!(par.last().unwrap(), &xs.concat());
            prop_assert_eq!(&par, &sequential_scan(&xs, &concat).unwrap());
        }
    }

    #[test]
    fn composition_is_associative(e in (1usize..4).prop_flat_map(|n| prop::collection::vec(element(n), 3))) {
        let left = compose_affine(&compose_affine(&e[0], &e[1]).unwrap(), &e[2]).unwrap();
        let right = compose_affine(&e[0], &compose_affine(&e[1], &e[2]).unwrap()).unwrap();
        prop_assert!(left.a.densify().max_abs_diff(&right.a.densify()) < 1e-12);
        prop_assert!(relative_diff(&left.b, &right.b) < 1e-12);
    }

    #[test]
    fn parallel_lds_matches_sequential((x0, elems) in problem()) {
        let seq = evaluate_lds_sequential(&x0, &elems).unwrap();
        let par = evaluate_lds_parallel(&x0, &elems).unwrap();
        prop_assert!(par.max_relative_diff(&seq) <= 1e-8);
        let unpadded = evaluate_lds_parallel_with(
            &x0,
            &elems,
            ScanOptions { execution: Execution::Parallel, pad: false, min_parallel: 1 },
        ).unwrap();
        prop_assert!(unpadded.max_relative_diff(&seq) <= 1e-8);
    }

    #[test]
    fn permutation_lds_is_exact(n in 1usize..7, word in prop::collection::vec(any::<prop::sample::Index>(), 1..200)) {
        let perms: Vec<Permutation> = {
            let all: Vec<Vec<usize>> = (0..n).map(|s| (0..n).map(|i| (i + s) % n).collect()).collect();
            word.iter()
                .enumerate()
                .map(|(k, ix)| {
                    let mut p = all[ix.index(n)].clone();
                    if n > 1 && k % 3 == 0 { p.swap(0, n - 1); }
                    Permutation::new(p).unwrap()
                })
                .collect()
        };
        let x0: Vec<f64> = (1..=n).map(|i| i as f64).collect();
        let elems: Vec<AffineElement> = perms
            .into_iter()
            .map(|p| AffineElement::new(TransitionMatrix::Permutation(p), vec![0.0; n]).unwrap())
            .collect();
        let seq = evaluate_lds_sequential(&x0, &elems).unwrap();
        let par = evaluate_lds_parallel(&x0, &elems).unwrap();
        prop_assert_eq!(par.states(), seq.states());
    }
}
