use polarzip::bench::profile;
use polarzip::{Exec, SourceModel};

#[test]
fn monte_carlo_profile_matches_oracle() {
    let model = SourceModel::binary(0.1).unwrap();
    let trials = 10_000;
    let rows = profile(&model, 2, trials, 3, Exec::Parallel).unwrap();
    assert_eq!(rows.len(), 4);
    let mut total = 0.0;
    for row in &rows {
        let exact = row.oracle_h.expect("oracle available at N=4");
        let se = row.std_h / (trials as f64).sqrt();
        assert!(
            (row.mean_h - exact).abs() <= 3.0 * se,
            "index {}: {} vs {exact} (se {se})",
            row.index,
            row.mean_h
        );
        total += row.mean_h;
    }
    // the standard error of a sum is at most the sum of standard errors
    let se_sum: f64 = rows.iter().map(|r| r.std_h).sum::<f64>() / (trials as f64).sqrt();
    assert!((total - 4.0 * model.entropy(2)).abs() <= 3.0 * se_sum);
}

#[test]
fn uniform_profile_is_flat() {
    let model = SourceModel::new(vec![0.2; 5]).unwrap();
    let rows = profile(&model, 3, 50, 0, Exec::Sequential).unwrap();
    // entropy reported in bits
    let log2_5 = 5f64.log2();
    assert!(rows
        .iter()
        .all(|r| (r.mean_h - log2_5).abs() < 1e-12 && r.std_h < 1e-9));
}
