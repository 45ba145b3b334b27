//! Order/disorder phase diagram of the double-well PFC model in the `(m, a)` plane.

use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;

use crate::energy::ModelParams;
use crate::error::{Error, Result};
use crate::io::{write_field, CurveKind, CurvePoint, SweepRecord};
use crate::oracle::{decide_uniform, lattice_min_pfc, stability_test, Decision, SearchConfig, Verdict};
use crate::potential::Potential;
use crate::spectral::SpectralField;

#[derive(Clone, Debug)]
pub struct PhaseConfig {
    pub alpha: f64,
    pub dim: usize,
    pub m_values: Vec<f64>,
    /// Scanned `a` interval; by default `[0, a_stab(m) + 1]` for each `m`.
    pub a_range: Option<(f64, f64)>,
    pub bisect_tol: f64,
    pub search: SearchConfig,
}

impl PhaseConfig {
    /// `m ∈ {0, 0.1, …, 2}`, bisection tolerance 0.5.
    pub fn new(alpha: f64, dim: usize) -> Self {
        Self {
            alpha,
            dim,
            m_values: (0..=20).map(|i| i as f64 / 10.0).collect(),
            a_range: None,
            bisect_tol: 0.5,
            search: SearchConfig::for_rank(dim),
        }
    }
}

/// `a` at which the uniform state `m` loses stability: `3m² + min_k (α − |k|²)²`.
pub fn stability_boundary(alpha: f64, m: f64, dim: usize) -> Result<f64> {
    Ok(3.0 * m * m + lattice_min_pfc(alpha, dim)?.value)
}

#[derive(Clone, Debug)]
pub struct PhaseResult {
    /// Ordered by `m` index, then by `a`.
    pub records: Vec<SweepRecord>,
    /// Parallel to `records`; the lower-energy state of each not-global point.
    pub witnesses: Vec<Option<SpectralField>>,
    /// Per `m`: stability, global, then an undetermined band when one was met.
    pub curve: Vec<CurvePoint>,
}

impl PhaseResult {
    /// Write every witness to `dir` and reference it from its record.
    pub fn attach_witnesses(&mut self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (i, (rec, w)) in self.records.iter_mut().zip(&self.witnesses).enumerate() {
            if let Some(w) = w {
                let path = dir.join(format!("witness_{i:05}.pfcf"));
                write_field(&path, w)?;
                rec.witness_path = Some(path.to_string_lossy().into_owned());
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Class {
    Global,
    Undetermined,
    NotGlobal,
}

fn classify(v: Verdict) -> Class {
    if v.is_global() {
        Class::Global
    } else if v.is_not_global() {
        Class::NotGlobal
    } else {
        Class::Undetermined
    }
}

struct Scan<'a> {
    cfg: &'a PhaseConfig,
    m: f64,
    tested: Vec<(f64, Decision, f64)>,
}

impl Scan<'_> {
    fn params(&self, a: f64) -> ModelParams {
        ModelParams::pfc(self.cfg.alpha, self.m, Potential::double_well(a))
    }

    fn eval(&mut self, a: f64) -> Result<Class> {
        let start = Instant::now();
        let d = decide_uniform(&self.params(a), self.cfg.dim, &self.cfg.search)?;
        let class = classify(d.verdict);
        self.tested.push((a, d, start.elapsed().as_secs_f64()));
        self.check_monotone()?;
        Ok(class)
    }

    fn check_monotone(&mut self) -> Result<()> {
        self.tested.sort_by(|x, y| x.0.total_cmp(&y.0));
        for w in self.tested.windows(2) {
            if classify(w[0].1.verdict) > classify(w[1].1.verdict) {
                return Err(Error::NonMonotone {
                    m: self.m,
                    detail: format!(
                        "(m={}, a={}, {}) precedes (m={}, a={}, {})",
                        self.m, w[0].0, w[0].1.verdict, self.m, w[1].0, w[1].1.verdict
                    ),
                });
            }
        }
        Ok(())
    }

    /// Largest tested `a` of class `c`, or smallest when `smallest`.
    fn edge(&self, c: Class, smallest: bool) -> Option<f64> {
        let mut it = self
            .tested
            .iter()
            .filter(|t| classify(t.1.verdict) == c)
            .map(|t| t.0);
        if smallest {
            it.next()
        } else {
            it.last()
        }
    }
}

fn scan_m(cfg: &PhaseConfig, m: f64) -> Result<(Vec<CurvePoint>, Vec<(f64, Decision, f64)>)> {
    let tol = cfg.bisect_tol;
    let a_stab = stability_boundary(cfg.alpha, m, cfg.dim)?;
    let mut curve = Vec::new();

    // The closed form is the largest stable a; confirm both sides of it.
    let stab_hi = a_stab + 0.5 * tol;
    let p = |a| ModelParams::pfc(cfg.alpha, m, Potential::double_well(a));
    if !stability_test(&p(a_stab), cfg.dim)?.stable || stability_test(&p(stab_hi), cfg.dim)?.stable {
        return Err(Error::NonMonotone {
            m,
            detail: format!("stability changes sign away from the closed form a = {a_stab}"),
        });
    }
    curve.push(CurvePoint {
        m,
        a_lo: a_stab,
        a_hi: stab_hi,
        kind: CurveKind::Stability,
    });

    let (a_min, a_max) = cfg.a_range.unwrap_or((0.0, a_stab + 1.0));
    let mut scan = Scan {
        cfg,
        m,
        tested: Vec::new(),
    };
    if scan.eval(a_min)? != Class::Global || scan.eval(a_max)? != Class::NotGlobal {
        return Err(Error::InvalidArgument(format!(
            "a range [{a_min}, {a_max}] does not bracket the transition at m = {m}"
        )));
    }
    loop {
        let lo = scan.edge(Class::Global, false).unwrap();
        let hi = scan.edge(Class::NotGlobal, true).unwrap();
        let band = scan
            .edge(Class::Undetermined, true)
            .zip(scan.edge(Class::Undetermined, false));
        let gap = match band {
            None => (hi - lo > tol).then_some((lo, hi)),
            Some((u_lo, u_hi)) => {
                if u_lo - lo > tol {
                    Some((lo, u_lo))
                } else if hi - u_hi > tol {
                    Some((u_hi, hi))
                } else {
                    None
                }
            }
        };
        let Some((x, y)) = gap else {
            curve.push(CurvePoint {
                m,
                a_lo: lo,
                a_hi: hi,
                kind: CurveKind::Global,
            });
            if let Some((u_lo, u_hi)) = band {
                curve.push(CurvePoint {
                    m,
                    a_lo: u_lo,
                    a_hi: u_hi,
                    kind: CurveKind::Undetermined,
                });
            }
            break;
        };
        scan.eval(0.5 * (x + y))?;
    }
    Ok((curve, scan.tested))
}

/// Sweep `m`, bisecting in `a` on the oracle verdict. Points run in parallel; output order
/// depends only on the configuration.
pub fn phase_diagram(cfg: &PhaseConfig) -> Result<PhaseResult> {
    if !(cfg.bisect_tol > 0.0) {
        return Err(Error::InvalidArgument("bisect_tol must be positive".into()));
    }
    if !(1..=3).contains(&cfg.dim) {
        return Err(Error::InvalidArgument(format!("dimension {} not in 1..=3", cfg.dim)));
    }
    let per_m: Vec<Result<_>> = cfg.m_values.par_iter().map(|&m| scan_m(cfg, m)).collect();
    let mut out = PhaseResult {
        records: Vec::new(),
        witnesses: Vec::new(),
        curve: Vec::new(),
    };
    for (&m, res) in cfg.m_values.iter().zip(per_m) {
        let (curve, tested) = res?;
        out.curve.extend(curve);
        for (a, d, secs) in tested {
            out.records.push(SweepRecord {
                model: "pfc".into(),
                m,
                a: Some(a),
                potential: Some(Potential::double_well(a).id()),
                alpha: Some(cfg.alpha),
                gamma: None,
                dim: cfg.dim,
                verdict: d.verdict.to_string(),
                margin: d.margin,
                pn_lower: d.lower_bound,
                pn_upper: d.upper_bound,
                threshold: d.threshold,
                witness_path: None,
                seed: cfg.search.seed,
                wallclock: secs,
            });
            out.witnesses.push(d.witness);
        }
    }
    Ok(out)
}
