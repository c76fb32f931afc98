//! Small statistical helpers on top of `statrs`.

use statrs::distribution::{Beta, ChiSquared, ContinuousCDF, StudentsT};

/// One-sided Clopper-Pearson upper confidence bound on a binomial
/// proportion after `failures` out of `trials`.
pub fn clopper_pearson_upper(failures: u64, trials: u64, confidence: f64) -> f64 {
    assert!(trials > 0 && failures <= trials);
    if failures == trials {
        return 1.0;
    }
    Beta::new((failures + 1) as f64, (trials - failures) as f64)
        .expect("positive shape parameters")
        .inverse_cdf(confidence)
}

/// Pearson chi-square goodness-of-fit p-value.
pub fn chi_square_p(observed: &[u64], expected: &[f64]) -> f64 {
    assert_eq!(observed.len(), expected.len());
    let stat: f64 = observed
        .iter()
        .zip(expected)
        .map(|(&o, &e)| (o as f64 - e).powi(2) / e)
        .sum();
    1.0 - ChiSquared::new((observed.len() - 1) as f64).expect("at least two cells").cdf(stat)
}

fn mean_var(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    (m, x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0))
}

/// Two-sided Welch t-test p-value for equal means.
pub fn welch_p(a: &[f64], b: &[f64]) -> f64 {
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let ((ma, va), (mb, vb)) = (mean_var(a), mean_var(b));
    let se2 = va / na + vb / nb;
    if se2 == 0.0 {
        return if ma == mb { 1.0 } else { 0.0 };
    }
    let t = (ma - mb) / se2.sqrt();
    let df = se2.powi(2) / ((va / na).powi(2) / (na - 1.0) + (vb / nb).powi(2) / (nb - 1.0));
    2.0 * (1.0 - StudentsT::new(0.0, 1.0, df).expect("positive df").cdf(t.abs()))
}

/// F-test p-value (two-sided) for equal variances.
pub fn variance_ratio_p(a: &[f64], b: &[f64]) -> f64 {
    use statrs::distribution::FisherSnedecor;
    let ((_, va), (_, vb)) = (mean_var(a), mean_var(b));
    let f = va / vb;
    let d = FisherSnedecor::new((a.len() - 1) as f64, (b.len() - 1) as f64).expect("positive df");
    let tail = d.cdf(f);
    2.0 * tail.min(1.0 - tail)
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (lx, ly): (Vec<f64>, Vec<f64>) = points.iter().map(|&(x, y)| (x.ln(), y.ln())).unzip();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let cov: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    cov / var
}
