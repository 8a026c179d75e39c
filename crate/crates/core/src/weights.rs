//! Latent weight matrices with prescribed extremal dependence.
//!
//! All built-in constructions are radius x angle: a heavy-tailed radius
//! `V` split across layers by a simplex-valued angle, so `||W_i||_1 = V`.

use std::io::{Read, Write};

use rand::distr::Distribution;
use rand_distr::Gamma;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{MirgError, Result};
use crate::samplers::{DistSampler, DistSpec, RngStream};

/// Rows per independently seeded generation chunk.
pub const WEIGHT_CHUNK_ROWS: usize = 16_384;

/// An `n x L` matrix of nonnegative weights, row `i` being node `i`'s vector.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightMatrix {
    n: usize,
    layers: usize,
    data: Vec<f64>,
}

impl WeightMatrix {
    pub fn new(n: usize, layers: usize, data: Vec<f64>) -> Result<Self> {
        if layers == 0 {
            return Err(MirgError::Shape("weight matrix needs at least one layer".into()));
        }
        if data.len() != n * layers {
            return Err(MirgError::Shape(format!(
                "expected {} entries for {n}x{layers}, got {}",
                n * layers,
                data.len()
            )));
        }
        if let Some(bad) = data.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(MirgError::param(format!(
                "weights must be finite and nonnegative, found {bad}"
            )));
        }
        Ok(Self { n, layers, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let layers = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != layers) {
            return Err(MirgError::Shape("ragged weight rows".into()));
        }
        Self::new(rows.len(), layers, rows.concat())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn layers(&self) -> usize {
        self.layers
    }

    #[inline]
    pub fn get(&self, i: usize, l: usize) -> f64 {
        self.data[i * self.layers + l]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.layers..(i + 1) * self.layers]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.layers)
    }

    pub fn column(&self, l: usize) -> Vec<f64> {
        self.rows().map(|r| r[l]).collect()
    }

    /// `T_l = sum_i W_il`.
    pub fn layer_mass(&self, l: usize) -> f64 {
        self.rows().map(|r| r[l]).sum()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Headered CSV `node,w1,...,wL` with 1-based node ids.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        let mut header = vec!["node".to_string()];
        header.extend((1..=self.layers).map(|l| format!("w{l}")));
        wtr.write_record(&header)?;
        for (i, row) in self.rows().enumerate() {
            let mut rec = vec![(i + 1).to_string()];
            rec.extend(row.iter().map(|w| w.to_string()));
            wtr.write_record(&rec)?;
        }
        wtr.flush().map_err(|e| MirgError::io("<csv>", e))?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(input);
        let headers = rdr.headers()?.clone();
        if headers.get(0) != Some("node") || headers.len() < 2 {
            return Err(MirgError::Format("expected header node,w1,...,wL".into()));
        }
        let layers = headers.len() - 1;
        let mut data = Vec::new();
        let mut n = 0usize;
        for rec in rdr.records() {
            let rec = rec?;
            n += 1;
            let node: usize = rec[0]
                .trim()
                .parse()
                .map_err(|_| MirgError::Format(format!("bad node id {:?}", &rec[0])))?;
            if node != n {
                return Err(MirgError::Format(format!(
                    "node ids must be 1..n in order, found {node} at row {n}"
                )));
            }
            for field in rec.iter().skip(1) {
                data.push(
                    field
                        .trim()
                        .parse::<f64>()
                        .map_err(|_| MirgError::Format(format!("bad weight {field:?}")))?,
                );
            }
        }
        Self::new(n, layers, data)
    }
}

/// Simplex-valued angle law for [`WeightModelSpec::GenericPolar`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AngleSampler {
    /// Normalized independent Gamma(a_l, 1) draws.
    Dirichlet { concentration: Vec<f64> },
    /// A fixed point of the simplex.
    Fixed { shares: Vec<f64> },
}

impl AngleSampler {
    fn dim(&self) -> usize {
        match self {
            AngleSampler::Dirichlet { concentration } => concentration.len(),
            AngleSampler::Fixed { shares } => shares.len(),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            AngleSampler::Dirichlet { concentration } => {
                if concentration.iter().any(|a| !(a.is_finite() && *a > 0.0)) {
                    return Err(MirgError::param("Dirichlet concentrations must be positive"));
                }
            }
            AngleSampler::Fixed { shares } => {
                let total: f64 = shares.iter().sum();
                if shares.iter().any(|s| !(s.is_finite() && *s >= 0.0))
                    || (total - 1.0).abs() > 1e-9
                {
                    return Err(MirgError::param("fixed angle must lie on the unit simplex"));
                }
            }
        }
        Ok(())
    }
}

/// The weight constructions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)]
pub enum WeightModelSpec {
    /// Two-component mixture: with probability 1/2 `(V1 T1, V1 (1 - T1))`
    /// with `V1 ~ Pareto(alpha)`, `T1 ~ Beta(5,5)` on `[0.4, 0.6]`; otherwise
    /// `(V2 T2, V2 (1 - T2))` with `V2 ~ Pareto(alpha0)`, `T2 ~ U(0, 0.4)`.
    HrvMixture { alpha: f64, alpha0: f64 },
    /// `(V, V)` with `V ~ Pareto(alpha)`.
    FullDependence { alpha: f64 },
    /// `(V T, V (1 - T))` with `V ~ Pareto(alpha)` and `T ~ angle`.
    SingleFactor { alpha: f64, angle: DistSpec },
    /// `V * Theta` with `Theta` on the `L`-simplex.
    GenericPolar {
        radius: DistSpec,
        angle: AngleSampler,
        layers: usize,
    },
}

/// Mixture component a row came from. `0` for constructions without one.
pub type ComponentLabel = u8;

impl WeightModelSpec {
    /// Angle law of the cone-concentrated mixture component.
    pub fn cone_angle() -> DistSpec {
        DistSpec::ShiftedBeta {
            b1: 5.0,
            b2: 5.0,
            c1: 0.4,
            c2: 0.6,
        }
    }

    pub fn off_cone_angle() -> DistSpec {
        DistSpec::Uniform { lo: 0.0, hi: 0.4 }
    }

    pub fn layers(&self) -> usize {
        match self {
            WeightModelSpec::GenericPolar { layers, .. } => *layers,
            _ => 2,
        }
    }

    /// For the mixture: whether `alpha0 < 2 alpha`, the regime in which the
    /// off-cone tail survives Poisson dispersion of the degrees.
    pub fn hrv_detectable(&self) -> Option<bool> {
        match *self {
            WeightModelSpec::HrvMixture { alpha, alpha0 } => Some(alpha0 < 2.0 * alpha),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |a: f64, name: &str| {
            if a.is_finite() && a > 0.0 {
                Ok(())
            } else {
                Err(MirgError::param(format!("{name} must be positive, got {a}")))
            }
        };
        match self {
            WeightModelSpec::HrvMixture { alpha, alpha0 } => {
                positive(*alpha, "alpha")?;
                positive(*alpha0, "alpha0")?;
                if alpha0 < alpha {
                    return Err(MirgError::param(format!(
                        "alpha0 ({alpha0}) must be >= alpha ({alpha})"
                    )));
                }
            }
            WeightModelSpec::FullDependence { alpha } => positive(*alpha, "alpha")?,
            WeightModelSpec::SingleFactor { alpha, angle } => {
                positive(*alpha, "alpha")?;
                angle.validate()?;
                let (lo, hi) = angle.support();
                if lo < 0.0 || hi > 1.0 {
                    return Err(MirgError::param("single-factor angle must live in [0, 1]"));
                }
            }
            WeightModelSpec::GenericPolar {
                radius,
                angle,
                layers,
            } => {
                radius.validate()?;
                if radius.support().0 < 0.0 {
                    return Err(MirgError::param("radius law must be nonnegative"));
                }
                if *layers < 2 || angle.dim() != *layers {
                    return Err(MirgError::param(format!(
                        "generic polar needs L >= 2 and an angle of matching dimension (L = {layers}, angle dim = {})",
                        angle.dim()
                    )));
                }
                angle.validate()?;
            }
        }
        Ok(())
    }
}

enum RowSampler {
    Mixture {
        alpha: f64,
        alpha0: f64,
        cone: DistSampler,
        off_cone: DistSampler,
    },
    Full {
        alpha: f64,
    },
    Single {
        alpha: f64,
        angle: DistSampler,
    },
    Polar {
        radius: DistSampler,
        angle: PolarAngle,
    },
}

enum PolarAngle {
    Dirichlet(Vec<Gamma<f64>>),
    Fixed(Vec<f64>),
}

impl RowSampler {
    fn new(spec: &WeightModelSpec) -> Result<Self> {
        spec.validate()?;
        Ok(match spec {
            WeightModelSpec::HrvMixture { alpha, alpha0 } => RowSampler::Mixture {
                alpha: *alpha,
                alpha0: *alpha0,
                cone: WeightModelSpec::cone_angle().sampler()?,
                off_cone: WeightModelSpec::off_cone_angle().sampler()?,
            },
            WeightModelSpec::FullDependence { alpha } => RowSampler::Full { alpha: *alpha },
            WeightModelSpec::SingleFactor { alpha, angle } => RowSampler::Single {
                alpha: *alpha,
                angle: angle.sampler()?,
            },
            WeightModelSpec::GenericPolar { radius, angle, .. } => RowSampler::Polar {
                radius: radius.sampler()?,
                angle: match angle {
                    AngleSampler::Dirichlet { concentration } => PolarAngle::Dirichlet(
                        concentration
                            .iter()
                            .map(|&a| {
                                Gamma::new(a, 1.0).map_err(|e| MirgError::param(e.to_string()))
                            })
                            .collect::<Result<_>>()?,
                    ),
                    AngleSampler::Fixed { shares } => PolarAngle::Fixed(shares.clone()),
                },
            },
        })
    }

    fn fill_row(&self, rng: &mut RngStream, row: &mut [f64]) -> ComponentLabel {
        match self {
            RowSampler::Mixture {
                alpha,
                alpha0,
                cone,
                off_cone,
            } => {
                let (v, theta, label) = if rng.unit() < 0.5 {
                    (rng.pareto(*alpha), cone.sample(rng), 1)
                } else {
                    (rng.pareto(*alpha0), off_cone.sample(rng), 2)
                };
                row[0] = v * theta;
                row[1] = v * (1.0 - theta);
                label
            }
            RowSampler::Full { alpha } => {
                let v = rng.pareto(*alpha);
                row[0] = v;
                row[1] = v;
                0
            }
            RowSampler::Single { alpha, angle } => {
                let v = rng.pareto(*alpha);
                let theta = angle.sample(rng);
                row[0] = v * theta;
                row[1] = v * (1.0 - theta);
                0
            }
            RowSampler::Polar { radius, angle } => {
                let v = radius.sample(rng);
                match angle {
                    PolarAngle::Fixed(shares) => {
                        for (w, s) in row.iter_mut().zip(shares) {
                            *w = v * s;
                        }
                    }
                    PolarAngle::Dirichlet(gammas) => {
                        let mut total = 0.0;
                        for (w, g) in row.iter_mut().zip(gammas) {
                            *w = g.sample(rng);
                            total += *w;
                        }
                        for w in row.iter_mut() {
                            *w *= v / total;
                        }
                    }
                }
                0
            }
        }
    }
}

fn sample_chunks(
    spec: &WeightModelSpec,
    n: usize,
    rng: &mut RngStream,
    keep_labels: bool,
) -> Result<(WeightMatrix, Vec<ComponentLabel>)> {
    let sampler = RowSampler::new(spec)?;
    let layers = spec.layers();
    let base = rng.fork();
    let mut data = vec![0.0; n * layers];
    let mut labels = vec![0u8; if keep_labels { n } else { 0 }];
    let row_chunk = WEIGHT_CHUNK_ROWS * layers;
    if keep_labels {
        data.par_chunks_mut(row_chunk)
            .zip(labels.par_chunks_mut(WEIGHT_CHUNK_ROWS))
            .enumerate()
            .for_each(|(c, (block, lab))| {
                let mut local = base.derive(c as u64);
                for (row, label) in block.chunks_exact_mut(layers).zip(lab.iter_mut()) {
                    *label = sampler.fill_row(&mut local, row);
                }
            });
    } else {
        data.par_chunks_mut(row_chunk)
            .enumerate()
            .for_each(|(c, block)| {
                let mut local = base.derive(c as u64);
                for row in block.chunks_exact_mut(layers) {
                    sampler.fill_row(&mut local, row);
                }
            });
    }
    Ok((WeightMatrix { n, layers, data }, labels))
}

/// `n` iid weight rows from `spec`. Rows are produced in fixed-size chunks,
/// each on its own derived stream, so the result does not depend on the
/// thread count.
pub fn sample_weights(spec: &WeightModelSpec, n: usize, rng: &mut RngStream) -> Result<WeightMatrix> {
    sample_chunks(spec, n, rng, false).map(|(w, _)| w)
}

/// Same draws as [`sample_weights`] plus the mixture component of each row
/// (1 = cone component, 2 = off-cone component, 0 = no mixture).
pub fn sample_weights_labeled(
    spec: &WeightModelSpec,
    n: usize,
    rng: &mut RngStream,
) -> Result<(WeightMatrix, Vec<ComponentLabel>)> {
    sample_chunks(spec, n, rng, true)
}

/// Entry `(i, l)` becomes `c_l * w_il`.
pub fn scaled_weights(w: &WeightMatrix, c: &[f64]) -> Result<WeightMatrix> {
    if c.len() != w.layers {
        return Err(MirgError::Shape(format!(
            "{} scale factors for {} layers",
            c.len(),
            w.layers
        )));
    }
    if c.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
        return Err(MirgError::param("scale factors must be positive"));
    }
    let data = w
        .data
        .chunks_exact(w.layers)
        .flat_map(|row| row.iter().zip(c).map(|(x, s)| x * s))
        .collect();
    Ok(WeightMatrix {
        n: w.n,
        layers: w.layers,
        data,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ks_uniform(mut u: Vec<f64>) -> f64 {
        u.sort_by(f64::total_cmp);
        let n = u.len() as f64;
        u.iter()
            .enumerate()
            .map(|(i, &x)| {
                let lo = x - i as f64 / n;
                let hi = (i + 1) as f64 / n - x;
                lo.max(hi)
            })
            .fold(0.0, f64::max)
    }

    fn radius(w: &WeightMatrix) -> Vec<f64> {
        w.rows().map(|r| r.iter().sum()).collect()
    }

    #[test]
    fn hrv_mixture_angular_supports() {
        let spec = WeightModelSpec::HrvMixture {
            alpha: 1.1,
            alpha0: 1.3,
        };
        let (w, labels) =
            sample_weights_labeled(&spec, 50_000, &mut RngStream::new(3, 0)).unwrap();
        let mut seen = [0usize; 3];
        for (row, &label) in w.rows().zip(&labels) {
            seen[label as usize] += 1;
            let share = row[0] / (row[0] + row[1]);
            let ratio = row[1] / row[0];
            match label {
                1 => {
                    assert!((0.4..=0.6).contains(&share));
                    assert!((2.0 / 3.0 - 1e-12..=1.5 + 1e-12).contains(&ratio));
                }
                2 => {
                    assert!(share < 0.4);
                    assert!(ratio > 1.5);
                }
                _ => panic!("unexpected label"),
            }
        }
        assert_eq!(seen[0], 0);
        assert!(seen[1] > 20_000 && seen[2] > 20_000);
    }

    #[test]
    fn labels_do_not_change_draws() {
        let spec = WeightModelSpec::HrvMixture {
            alpha: 1.1,
            alpha0: 2.5,
        };
        let a = sample_weights(&spec, 40_000, &mut RngStream::new(8, 2)).unwrap();
        let (b, _) = sample_weights_labeled(&spec, 40_000, &mut RngStream::new(8, 2)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn full_dependence_on_diagonal() {
        let w = sample_weights(
            &WeightModelSpec::FullDependence { alpha: 1.0 },
            1000,
            &mut RngStream::new(1, 1),
        )
        .unwrap();
        assert!(w.rows().all(|r| r[0] == r[1] && r[0] >= 1.0));
    }

    type RadiusCdf = Box<dyn Fn(f64) -> f64>;

    #[test]
    fn radius_laws_pass_ks() {
        let n = 100_000;
        let crit = 1.628 / (n as f64).sqrt();
        let cases: Vec<(WeightModelSpec, RadiusCdf)> = vec![
            (
                WeightModelSpec::HrvMixture {
                    alpha: 1.1,
                    alpha0: 1.3,
                },
                Box::new(|r: f64| 1.0 - 0.5 * r.powf(-1.1) - 0.5 * r.powf(-1.3)),
            ),
            (
                WeightModelSpec::FullDependence { alpha: 1.4 },
                Box::new(|r: f64| 1.0 - (r / 2.0).powf(-1.4)),
            ),
            (
                WeightModelSpec::SingleFactor {
                    alpha: 1.6,
                    angle: WeightModelSpec::cone_angle(),
                },
                Box::new(|r: f64| 1.0 - r.powf(-1.6)),
            ),
            (
                WeightModelSpec::GenericPolar {
                    radius: DistSpec::Pareto { alpha: 2.0 },
                    angle: AngleSampler::Dirichlet {
                        concentration: vec![1.0, 2.0, 3.0],
                    },
                    layers: 3,
                },
                Box::new(|r: f64| 1.0 - r.powf(-2.0)),
            ),
        ];
        for (i, (spec, cdf)) in cases.into_iter().enumerate() {
            let w = sample_weights(&spec, n, &mut RngStream::new(77, i as u64)).unwrap();
            let u = radius(&w).into_iter().map(cdf).collect();
            let d = ks_uniform(u);
            assert!(d < crit, "{spec:?}: KS {d} >= {crit}");
        }
    }

    #[test]
    fn hrv_mixture_radius_tail_counts() {
        // Exceedance counts of the l1 radius against the exact mixture tail
        // 0.5 x^-alpha + 0.5 x^-alpha0, including x = n^(1/alpha).
        let n = 1_000_000;
        let (alpha, alpha0) = (1.1, 1.3);
        let w = sample_weights(
            &WeightModelSpec::HrvMixture { alpha, alpha0 },
            n,
            &mut RngStream::new(2024, 0),
        )
        .unwrap();
        let r = radius(&w);
        let nf = n as f64;
        for x in [10.0, 100.0, 1000.0, nf.powf(1.0 / alpha)] {
            let p: f64 = 0.5 * x.powf(-alpha) + 0.5 * x.powf(-alpha0);
            let count = r.iter().filter(|&&v| v > x).count() as f64;
            let sigma = (nf * p * (1.0 - p)).sqrt();
            assert!(
                (count - nf * p).abs() <= 3.0 * sigma.max(1.0),
                "x={x}: {count} vs {}",
                nf * p
            );
        }
    }

    #[test]
    fn scaling() {
        let w = WeightMatrix::from_rows(&[vec![1.0, 1.0], vec![4.0, 0.25]]).unwrap();
        let s = scaled_weights(&w, &[2.0, 3.0]).unwrap();
        assert_eq!(s.row(0), &[2.0, 3.0]);
        let s = scaled_weights(&w, &[0.5, 2.0]).unwrap();
        assert_eq!(s.row(1), &[2.0, 0.5]);
        assert_eq!(scaled_weights(&w, &[1.0, 1.0]).unwrap(), w);
        assert!(matches!(scaled_weights(&w, &[1.0]), Err(MirgError::Shape(_))));
        assert!(scaled_weights(&w, &[1.0, 0.0]).is_err());
    }

    #[test]
    fn empty_and_invalid_specs() {
        let w = sample_weights(
            &WeightModelSpec::FullDependence { alpha: 2.0 },
            0,
            &mut RngStream::new(0, 0),
        )
        .unwrap();
        assert_eq!(w.n(), 0);
        let bad = WeightModelSpec::HrvMixture {
            alpha: 1.5,
            alpha0: 1.2,
        };
        assert!(sample_weights(&bad, 5, &mut RngStream::new(0, 0)).is_err());
        assert_eq!(
            WeightModelSpec::HrvMixture {
                alpha: 1.1,
                alpha0: 1.3
            }
            .hrv_detectable(),
            Some(true)
        );
        assert_eq!(
            WeightModelSpec::HrvMixture {
                alpha: 1.1,
                alpha0: 2.5
            }
            .hrv_detectable(),
            Some(false)
        );
        let polar = WeightModelSpec::GenericPolar {
            radius: DistSpec::Pareto { alpha: 1.0 },
            angle: AngleSampler::Fixed {
                shares: vec![0.5, 0.5],
            },
            layers: 3,
        };
        assert!(polar.validate().is_err());
    }

    #[test]
    fn csv_round_trip() {
        let w = sample_weights(
            &WeightModelSpec::SingleFactor {
                alpha: 1.5,
                angle: WeightModelSpec::cone_angle(),
            },
            25,
            &mut RngStream::new(4, 4),
        )
        .unwrap();
        let mut buf = Vec::new();
        w.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8_lossy(&buf).starts_with("node,w1,w2\n1,"));
        assert_eq!(WeightMatrix::read_csv(buf.as_slice()).unwrap(), w);
    }

    #[test]
    fn rejects_negative_weights() {
        assert!(WeightMatrix::from_rows(&[vec![1.0, -0.5]]).is_err());
        assert!(WeightMatrix::new(1, 0, vec![]).is_err());
    }
}
