mod common;

use dhtbound::prob::{
    compose_joint, conditional_kl, conditional_mi, kl_divergence, push_forward, Axis, JointTable, Kernel,
    SimplexVector,
};
use proptest::prelude::*;

fn law(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01f64..1.0, n).prop_map(|v| {
        let s: f64 = v.iter().sum();
        let mut out: Vec<f64> = v.iter().map(|x| x / s).collect();
        let head: f64 = out[..out.len() - 1].iter().sum();
        *out.last_mut().unwrap() = 1.0 - head;
        out
    })
}

fn rows(r: usize, c: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(law(c), r)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn divergence_is_nonnegative(p in law(4), q in law(4)) {
        let d = kl_divergence(&SimplexVector::new(p.clone()).unwrap(), &SimplexVector::new(q.clone()).unwrap())
            .unwrap()
            .to_f64();
        prop_assert!(d >= -1e-15);
        prop_assert!((d - common::kl(&p, &q)).abs() < 1e-12);
        let same = kl_divergence(&SimplexVector::new(p.clone()).unwrap(), &SimplexVector::new(p).unwrap()).unwrap();
        prop_assert!(same.to_f64().abs() < 1e-12);
    }

    #[test]
    fn chain_rule_holds(pu in law(3), pk in rows(3, 4), qu in law(3), qk in rows(3, 4)) {
        let p_uy = common::joint(&pu, &pk);
        let q_uy = common::joint(&qu, &qk);
        let lhs = common::kl(&p_uy, &q_uy);
        let w = SimplexVector::new(pu.clone()).unwrap();
        let cond = conditional_kl(&Kernel::from_rows(pk).unwrap(), &Kernel::from_rows(qk).unwrap(), &w).unwrap();
        let rhs = common::kl(&pu, &qu) + cond.to_f64();
        prop_assert!((lhs - rhs).abs() < 1e-10);
    }

    #[test]
    fn information_ignores_labels(data in law(12), perm in Just(()).prop_perturb(|_, mut rng| {
        let mut v: Vec<usize> = (0..3).collect();
        for i in (1..3).rev() {
            v.swap(i, rng.random_range(0..=i));
        }
        v
    })) {
        let axes = vec![Axis::new("A", 2), Axis::new("B", 3), Axis::new("C", 2)];
        let t = JointTable::new(axes, data.clone()).unwrap();
        let base = conditional_mi(&t, &["A"], &["B"], &["C"]).unwrap();

        let moved = t.reorder(&["C", "B", "A"]).unwrap().rename("B", "Bee").unwrap();
        let again = conditional_mi(&moved, &["A"], &["Bee"], &["C"]).unwrap();
        prop_assert!((base - again).abs() < 1e-12);

        // relabel the symbols of B
        let mut shuffled = vec![0.0; 12];
        for a in 0..2 {
            for b in 0..3 {
                for c in 0..2 {
                    shuffled[(a * 3 + perm[b]) * 2 + c] = data[(a * 3 + b) * 2 + c];
                }
            }
        }
        let axes = vec![Axis::new("A", 2), Axis::new("B", 3), Axis::new("C", 2)];
        let s = JointTable::new(axes, shuffled).unwrap();
        let again = conditional_mi(&s, &["A"], &["B"], &["C"]).unwrap();
        prop_assert!((base - again).abs() < 1e-12);
        prop_assert!(base >= -1e-15);
    }

    #[test]
    fn compose_round_trips(p in law(3), k in rows(3, 4)) {
        let pv = SimplexVector::new(p.clone()).unwrap();
        let kk = Kernel::from_rows(k.clone()).unwrap();
        let j = compose_joint(&pv, &kk, "X", "Y").unwrap();
        let back = j.marginal(&["X"]).unwrap();
        for (a, b) in back.data().iter().zip(&p) {
            prop_assert!((a - b).abs() < 1e-14);
        }
        let y = j.marginal(&["Y"]).unwrap();
        let pushed = push_forward(&pv, &kk).unwrap();
        for (a, b) in y.data().iter().zip(pushed.as_slice()) {
            prop_assert!((a - b).abs() < 1e-14);
        }
        let cond = j.condition(&["X"]).unwrap();
        prop_assert!(cond.kernel.max_abs_diff(&kk).unwrap() < 1e-14);
    }
}

#[test]
fn doubly_symmetric_binary_information() {
    let e = 0.1f64;
    let t = JointTable::new(
        vec![Axis::new("A", 2), Axis::new("B", 2)],
        vec![0.5 * (1.0 - e), 0.5 * e, 0.5 * e, 0.5 * (1.0 - e)],
    )
    .unwrap();
    let hb = -e * e.ln() - (1.0 - e) * (1.0 - e).ln();
    let i = conditional_mi(&t, &["A"], &["B"], &[]).unwrap();
    assert!((i - (2f64.ln() - hb)).abs() < 1e-14);
}

#[test]
fn three_step_chain_matches_hand_table() {
    let p = SimplexVector::new(vec![0.6, 0.4]).unwrap();
    let k1 = Kernel::from_rows(vec![vec![0.9, 0.1], vec![0.2, 0.8]]).unwrap();
    // rows indexed by (a, b); C depends on B only
    let k2 = Kernel::from_rows(vec![vec![0.7, 0.3], vec![0.5, 0.5], vec![0.7, 0.3], vec![0.5, 0.5]]).unwrap();
    let j = compose_joint(&p, &k1, "A", "B").unwrap();
    let j = j.extend(&k2, "C").unwrap();
    // P(a) K1(b|a) K2(c|b)
    let hand = [
        0.6 * 0.9 * 0.7,
        0.6 * 0.9 * 0.3,
        0.6 * 0.1 * 0.5,
        0.6 * 0.1 * 0.5,
        0.4 * 0.2 * 0.7,
        0.4 * 0.2 * 0.3,
        0.4 * 0.8 * 0.5,
        0.4 * 0.8 * 0.5,
    ];
    for (a, b) in j.data().iter().zip(hand) {
        assert!((a - b).abs() < 1e-15);
    }
}
