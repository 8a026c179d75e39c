//! Numerical checks of the probabilistic bounds behind the degree
//! approximation: Poisson/Bernoulli coupling, Poisson central moments and
//! the Poisson-binomial third absolute moment.

use std::fmt;
use std::io::Write;

use serde::Serialize;

use crate::error::{MirgError, Result};
use crate::samplers::{poisson_binomial_pmf, poisson_inversion, RngStream};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct CoupledPair {
    pub bernoulli: u8,
    pub poisson: u64,
}

/// `d_TV(Bernoulli(p), Poisson(p)) = p (1 - e^-p)`.
pub fn bernoulli_poisson_tv(p: f64) -> f64 {
    p * -(-p).exp_m1()
}

/// Bernoulli(p) and Poisson(p) driven by one shared uniform through their
/// quantile functions. Both are `0` on `[0, 1 - p)`, and they differ
/// exactly on a set of probability `p (1 - e^-p)`, so the coupling is
/// maximal.
pub fn maximal_coupling(p: f64, rng: &mut RngStream) -> Result<CoupledPair> {
    if !(0.0..1.0).contains(&p) {
        return Err(MirgError::param(format!("coupling needs p in [0, 1), got {p}")));
    }
    let u = rng.unit();
    Ok(CoupledPair {
        bernoulli: (u >= 1.0 - p) as u8,
        poisson: poisson_inversion(p, u),
    })
}

/// Witness constants `(a, C)` for `E|X - lambda|^m <= a lambda^(m/2) + C`.
pub const MOMENT_WITNESS: (f64, f64) = (3.5, 2.0);

/// Exact central moments of `Poisson(lambda)` for `m` in `{2, 4}`.
pub fn poisson_central_moment(lambda: f64, m: u32) -> Result<f64> {
    match m {
        2 => Ok(lambda),
        4 => Ok(lambda + 3.0 * lambda * lambda),
        _ => Err(MirgError::Unsupported(format!(
            "central moment of order {m}; only 2 and 4 are available"
        ))),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MomentRow {
    pub lambda: f64,
    pub exact: f64,
    pub estimate: f64,
    pub std_error: f64,
    pub bound: f64,
    /// Exact and estimated moments are both below the bound.
    pub holds: bool,
    /// The estimate is within four standard errors of the exact value.
    pub consistent: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MomentReport {
    pub m: u32,
    pub a: f64,
    pub c: f64,
    pub rows: Vec<MomentRow>,
}

impl MomentReport {
    pub fn all_hold(&self) -> bool {
        self.rows.iter().all(|r| r.holds && r.consistent)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record([
            "m", "lambda", "exact", "estimate", "std_error", "bound", "holds", "consistent",
        ])?;
        for r in &self.rows {
            wtr.write_record([
                self.m.to_string(),
                r.lambda.to_string(),
                r.exact.to_string(),
                r.estimate.to_string(),
                r.std_error.to_string(),
                r.bound.to_string(),
                r.holds.to_string(),
                r.consistent.to_string(),
            ])?;
        }
        wtr.flush().map_err(|e| MirgError::io("<moment csv>", e))?;
        Ok(())
    }
}

impl fmt::Display for MomentReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "E|X - lambda|^{} <= {} lambda^{} + {}",
            self.m,
            self.a,
            self.m as f64 / 2.0,
            self.c
        )?;
        for r in &self.rows {
            writeln!(
                f,
                "  lambda={:<8} exact={:<12.6} mc={:<12.6} (se {:.2e}) bound={:<12.6} {}",
                r.lambda,
                r.exact,
                r.estimate,
                r.std_error,
                r.bound,
                if r.holds && r.consistent { "ok" } else { "FAIL" }
            )?;
        }
        Ok(())
    }
}

/// Monte Carlo and exact `E|X - lambda|^m` for `X ~ Poisson(lambda)` on
/// each grid point, checked against [`MOMENT_WITNESS`].
pub fn check_poisson_moment_bound(
    lambda_grid: &[f64],
    m: u32,
    samples: usize,
    rng: &mut RngStream,
) -> Result<MomentReport> {
    if m % 2 == 1 {
        return Err(MirgError::Unsupported(format!("odd moment order {m}")));
    }
    poisson_central_moment(0.0, m)?;
    if samples < 2 {
        return Err(MirgError::param("need at least 2 samples"));
    }
    if let Some(bad) = lambda_grid.iter().find(|l| !(l.is_finite() && **l >= 0.0)) {
        return Err(MirgError::param(format!("rates must be nonnegative, got {bad}")));
    }
    let (a, c) = MOMENT_WITNESS;
    let rows = lambda_grid
        .iter()
        .enumerate()
        .map(|(idx, &lambda)| {
            let mut local = rng.derive(idx as u64);
            let mut sum = 0.0;
            let mut sum_sq = 0.0;
            for _ in 0..samples {
                let x = (local.poisson(lambda) as f64 - lambda).abs().powi(m as i32);
                sum += x;
                sum_sq += x * x;
            }
            let n = samples as f64;
            let estimate = sum / n;
            let var = ((sum_sq - n * estimate * estimate) / (n - 1.0)).max(0.0);
            let std_error = (var / n).sqrt();
            let exact = poisson_central_moment(lambda, m).expect("order checked above");
            let bound = a * lambda.powf(m as f64 / 2.0) + c;
            MomentRow {
                lambda,
                exact,
                estimate,
                std_error,
                bound,
                holds: exact <= bound && estimate <= bound,
                consistent: (estimate - exact).abs() <= 4.0 * std_error + 1e-12,
            }
        })
        .collect();
    rng.fork();
    Ok(MomentReport { m, a, c, rows })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Pb3Method {
    Enumeration,
    Recursion,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Pb3Report {
    pub len: usize,
    pub sum_p: f64,
    pub third_moment: f64,
    pub bound: f64,
    pub holds: bool,
    pub method: Pb3Method,
}

impl Pb3Report {
    pub fn write_csv<W: Write>(reports: &[Pb3Report], out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(["len", "sum_p", "third_moment", "bound", "holds", "method"])?;
        for r in reports {
            wtr.write_record([
                r.len.to_string(),
                r.sum_p.to_string(),
                r.third_moment.to_string(),
                r.bound.to_string(),
                r.holds.to_string(),
                match r.method {
                    Pb3Method::Enumeration => "enumeration".to_string(),
                    Pb3Method::Recursion => "recursion".to_string(),
                },
            ])?;
        }
        wtr.flush().map_err(|e| MirgError::io("<pb3 csv>", e))?;
        Ok(())
    }
}

impl fmt::Display for Pb3Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "len={} sum_p={:.6} E|S-mu|^3={:.6} bound={:.6} {}",
            self.len,
            self.sum_p,
            self.third_moment,
            self.bound,
            if self.holds { "ok" } else { "FAIL" }
        )
    }
}

/// Largest vector length accepted for exhaustive enumeration.
pub const MAX_ENUMERATION: usize = 24;

/// Exact `E|sum_i (X_i - p_i)|^3` for independent `X_i ~ Bernoulli(p_i)`
/// against `2 sum p + 2 (sum p)^(3/2)`. Vectors of length at most
/// `exhaustive_limit` are enumerated over all outcomes; longer ones use the
/// Poisson-binomial pmf.
pub fn check_pb3_bound(probs: &[f64], exhaustive_limit: usize) -> Result<Pb3Report> {
    if let Some(bad) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(MirgError::param(format!("probabilities must lie in [0, 1], got {bad}")));
    }
    let mu: f64 = probs.iter().sum();
    let (third_moment, method) = if probs.len() <= exhaustive_limit.min(MAX_ENUMERATION) {
        let mut total = 0.0;
        for mask in 0u32..(1u32 << probs.len()) {
            let mut prob = 1.0;
            let mut s = 0.0;
            for (i, &p) in probs.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    prob *= p;
                    s += 1.0;
                } else {
                    prob *= 1.0 - p;
                }
            }
            total += prob * (s - mu).abs().powi(3);
        }
        (total, Pb3Method::Enumeration)
    } else {
        let pmf = poisson_binomial_pmf(probs)?;
        let total = pmf
            .iter()
            .enumerate()
            .map(|(k, q)| q * (k as f64 - mu).abs().powi(3))
            .sum();
        (total, Pb3Method::Recursion)
    };
    let bound = 2.0 * mu + 2.0 * mu.powf(1.5);
    Ok(Pb3Report {
        len: probs.len(),
        sum_p: mu,
        third_moment,
        bound,
        holds: third_moment <= bound * (1.0 + 1e-12),
        method,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::distribution::{ChiSquared, ContinuousCDF, Discrete, Poisson};

    #[test]
    fn coupling_examples() {
        let mut rng = RngStream::new(1, 0);
        for _ in 0..1000 {
            assert_eq!(
                maximal_coupling(0.0, &mut rng).unwrap(),
                CoupledPair {
                    bernoulli: 0,
                    poisson: 0
                }
            );
        }
        assert!(maximal_coupling(1.0, &mut rng).is_err());
        assert!(maximal_coupling(-0.1, &mut rng).is_err());
        assert!((bernoulli_poisson_tv(0.3) - 0.077755).abs() < 1e-6);
    }

    #[test]
    fn coupling_disagreement_and_marginals() {
        let n = 1_000_000;
        for (s, p) in [0.1, 0.3, 0.5, 0.9].into_iter().enumerate() {
            let mut rng = RngStream::new(7, s as u64);
            let mut differ = 0usize;
            let mut bern = 0usize;
            let mut abs_gap = 0u64;
            let mut counts = [0usize; 8];
            for _ in 0..n {
                let pair = maximal_coupling(p, &mut rng).unwrap();
                differ += (pair.bernoulli as u64 != pair.poisson) as usize;
                bern += pair.bernoulli as usize;
                abs_gap += pair.poisson.abs_diff(pair.bernoulli as u64);
                counts[(pair.poisson as usize).min(7)] += 1;
            }
            let nf = n as f64;
            let tv = bernoulli_poisson_tv(p);
            let sd = (tv * (1.0 - tv) / nf).sqrt();
            assert!((differ as f64 / nf - tv).abs() < 3.5 * sd, "p={p}");
            assert!(tv <= p * p);
            assert!(((bern as f64 / nf) - p).abs() < 4.0 * (p * (1.0 - p) / nf).sqrt());
            assert!(abs_gap as f64 / nf <= 3.0 * p * p);

            // chi-square of the Poisson side, cells 0..=5 and a tail cell
            let law = Poisson::new(p).unwrap();
            let mut chi2 = 0.0;
            let mut cells = 0;
            let mut tail = 1.0;
            for k in 0..6 {
                let q = law.pmf(k);
                tail -= q;
                if nf * q >= 5.0 {
                    chi2 += (counts[k as usize] as f64 - nf * q).powi(2) / (nf * q);
                    cells += 1;
                } else {
                    tail += q;
                }
            }
            let observed_tail = n - counts[..cells].iter().sum::<usize>();
            if nf * tail >= 5.0 {
                chi2 += (observed_tail as f64 - nf * tail).powi(2) / (nf * tail);
                cells += 1;
            }
            let crit = ChiSquared::new((cells - 1) as f64).unwrap().inverse_cdf(0.99);
            assert!(chi2 < crit, "p={p}: chi2 {chi2} crit {crit}");
        }
    }

    #[test]
    fn moment_examples() {
        assert_eq!(poisson_central_moment(1.0, 2).unwrap(), 1.0);
        assert_eq!(poisson_central_moment(4.0, 4).unwrap(), 52.0);
        assert_eq!(3.5 * 16.0 + 2.0, 58.0);
        assert_eq!(poisson_central_moment(0.0, 4).unwrap(), 0.0);
        let mut rng = RngStream::new(2, 2);
        let grid = [0.0, 0.1, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 50.0];
        for m in [2, 4] {
            let report = check_poisson_moment_bound(&grid, m, 200_000, &mut rng).unwrap();
            assert!(report.all_hold(), "{report}");
            assert_eq!(report.rows[0].estimate, 0.0);
        }
        assert!(matches!(
            check_poisson_moment_bound(&grid, 3, 10, &mut rng),
            Err(MirgError::Unsupported(_))
        ));
        assert!(check_poisson_moment_bound(&[-1.0], 2, 10, &mut rng).is_err());
    }

    #[test]
    fn pb3_examples() {
        let r = check_pb3_bound(&[0.5], 20).unwrap();
        assert!((r.third_moment - 0.125).abs() < 1e-15);
        assert!((r.bound - (1.0 + 2.0 * 0.5f64.powf(1.5))).abs() < 1e-15);
        assert!(r.holds);
        let r = check_pb3_bound(&[], 20).unwrap();
        assert_eq!((r.third_moment, r.bound, r.holds), (0.0, 0.0, true));
        assert!(check_pb3_bound(&[1.2], 20).is_err());

        let mut rng = RngStream::new(3, 0);
        let probs: Vec<f64> = (0..20).map(|_| rng.unit()).collect();
        let a = check_pb3_bound(&probs, 20).unwrap();
        let b = check_pb3_bound(&probs, 0).unwrap();
        assert_eq!(a.method, Pb3Method::Enumeration);
        assert_eq!(b.method, Pb3Method::Recursion);
        assert!((a.third_moment - b.third_moment).abs() < 1e-10);
        assert!(a.holds);
    }

    #[test]
    fn pb3_random_vectors() {
        let mut rng = RngStream::new(4, 0);
        for _ in 0..1000 {
            let len = (rng.unit() * 26.0) as usize;
            let scale = rng.unit();
            let probs: Vec<f64> = (0..len).map(|_| scale * rng.unit()).collect();
            let r = check_pb3_bound(&probs, 12).unwrap();
            assert!(r.holds, "{r}");
        }
    }

    #[test]
    fn report_outputs() {
        let mut rng = RngStream::new(0, 0);
        let report = check_poisson_moment_bound(&[1.0], 2, 100, &mut rng).unwrap();
        let mut buf = Vec::new();
        report.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("m,lambda,exact,estimate,std_error,bound,holds,consistent\n2,1,1,"));
        assert!(report.to_string().contains("lambda=1"));
        let mut buf = Vec::new();
        Pb3Report::write_csv(&[check_pb3_bound(&[0.5], 4).unwrap()], &mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().ends_with(",true,enumeration\n"));
    }
}
