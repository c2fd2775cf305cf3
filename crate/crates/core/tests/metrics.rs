mod common;

use maniscope::metrics::{
    format_qrels, latency_stats, mrr, ndcg_at_k, parse_qrels, precision_at_k, EvalReport, QrelSet,
    QueryMetrics,
};
use proptest::prelude::*;

#[test]
fn committed_metric_fixtures() {
    let cases = common::metric_cases();
    assert!(cases.len() >= 10);
    for c in &cases {
        let q = c.qrel_set();
        assert!((mrr(&c.ranked, &q) - c.mrr).abs() < 1e-9, "{}", c.name);
        assert!(
            (ndcg_at_k(&c.ranked, &q, 3) - c.ndcg_at_3).abs() < 1e-9,
            "{}",
            c.name
        );
        assert!(
            (precision_at_k(&c.ranked, &q, 3) - c.p_at_3).abs() < 1e-9,
            "{}",
            c.name
        );
    }
    let worked = cases
        .iter()
        .find(|c| c.name == "binary worked example")
        .unwrap();
    assert!((ndcg_at_k(&worked.ranked, &worked.qrel_set(), 3) - 0.6934).abs() < 1e-3);
}

#[test]
fn latency_percentiles() {
    let s = latency_stats(&[4.0, 4.0, 4.0]).unwrap();
    assert_eq!((s.mean, s.p50, s.p95), (4.0, 4.0, 4.0));
    let samples: Vec<f64> = (1..=20).rev().map(f64::from).collect();
    let s = latency_stats(&samples).unwrap();
    assert_eq!((s.mean, s.p50, s.p95), (10.5, 10.0, 19.0));
    assert!(latency_stats(&[]).is_err());
}

#[test]
fn qrels_text_round_trip() {
    let text = "q1\td1\t2\nq1\td2\t0\n\nq2\td1\t1\n";
    let sets = parse_qrels(text).unwrap();
    assert_eq!(sets["q1"].grade("d1"), 2);
    assert_eq!(sets["q1"].grade("missing"), 0);
    assert_eq!(
        format_qrels(sets.values()),
        "q1\td1\t2\nq1\td2\t0\nq2\td1\t1\n"
    );
    assert!(parse_qrels("q1\td1\n").is_err());
    assert!(parse_qrels("q1\td1\t-1\n").is_err());
    assert!(parse_qrels("q1\td1\t1\nq1\td1\t2\n").is_err());
}

#[test]
fn report_rejects_empty_query_set() {
    assert!(EvalReport::from_queries(Vec::new()).is_err());
}

proptest! {
    #[test]
    fn metrics_bounded_and_aggregates_are_means(
        grades in prop::collection::vec(0u32..4, 1..12),
        perm_seed in any::<u64>(),
    ) {
        let mut rng = common::TestRng::new(perm_seed);
        let ids: Vec<String> = (0..grades.len()).map(|i| format!("d{i}")).collect();
        let q = ids.iter().zip(&grades).fold(QrelSet::new("q"), |s, (d, g)| s.with(d.clone(), *g));
        let mut ranked = ids.clone();
        for i in (1..ranked.len()).rev() {
            ranked.swap(i, rng.range(0, i));
        }
        let mut per_query = Vec::new();
        for cut in 1..=ranked.len() {
            let m = QueryMetrics::evaluate(&ranked[..cut], &q, cut as f64);
            for v in [m.mrr, m.ndcg_at_3, m.p_at_3] {
                prop_assert!((0.0..=1.0 + 1e-12).contains(&v));
            }
            per_query.push(m);
        }
        let r = EvalReport::from_queries(per_query.clone()).unwrap();
        let n = per_query.len() as f64;
        let mean_ndcg = per_query.iter().map(|m| m.ndcg_at_3).sum::<f64>() / n;
        prop_assert!((r.aggregates.ndcg_at_3 - mean_ndcg).abs() < 1e-9);

        let mut ideal = ids.clone();
        ideal.sort_by_key(|d| std::cmp::Reverse(q.grade(d)));
        let expected = if q.has_relevant() { 1.0 } else { 0.0 };
        prop_assert!((ndcg_at_k(&ideal, &q, 3) - expected).abs() < 1e-12);
    }
}
