use dimwit::classical::*;
use dimwit::witness;

#[test]
fn exhaustive_maxima_for_small_k() {
    for k in 1..=4 {
        let (v, m) = exhaustive_binary_max(k).unwrap();
        assert_eq!(v, CLASSICAL_MAXIMA[k - 1], "k = {k}");
        assert_eq!(m.determinant().abs(), v);
        assert_eq!(verify_table2(k).unwrap().0, v);
        assert!((witness(&m.to_probability_matrix()).abs() - v as f64).abs() < 1e-9);
    }
}

#[test]
fn stored_certificates_reach_the_maxima() {
    for k in 1..=9 {
        let (got, want) = verify_table2(k).unwrap();
        assert_eq!(got, want, "k = {k}");
        assert_eq!(want, CLASSICAL_MAXIMA[k - 1]);
        assert!(got as f64 <= hadamard_bound(k) + 1e-9);
    }
}

#[test]
fn annealing_recovers_k5_and_k6() {
    for k in [5, 6] {
        let (v, m) = binary_anneal_max(k, &BinarySchedule::default()).unwrap();
        assert_eq!(v, CLASSICAL_MAXIMA[k - 1], "k = {k}");
        assert_eq!(m.determinant().abs(), v);
    }
}

#[test]
fn annealing_is_reproducible() {
    let s = BinarySchedule { restarts: 4, stages: 10, ..Default::default() };
    assert_eq!(binary_anneal_max(5, &s).unwrap(), binary_anneal_max(5, &s).unwrap());
}

#[test]
fn out_of_range_requests() {
    assert!(exhaustive_binary_max(5).is_err());
    assert!(binary_anneal_max(13, &BinarySchedule::default()).is_err());
    assert!(table2_matrix(10).is_err());
}
