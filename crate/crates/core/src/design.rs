//! Tag design evaluation and multi-objective search.
//!
//! A candidate is scored on three axes, all maximized:
//!
//! * `delta_f0_hz` — resonance shift between two reference environmental
//!   states (sensing span),
//! * `q_factor` — canonical Q at the low reference state (sensing sharpness),
//! * `p_min_reflected` — minimum of `|Gamma|^2` across the band at the low
//!   state (transmission floor).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::{canonical_resonance, derive_circuit, TagModel, DEFAULT_GRID_POINTS};
use crate::error::Error;
use crate::geometry::{MaterialProperties, SrrGeometry};
use crate::Result;

/// Inclusive range sampled at `count` uniform points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisRange {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl AxisRange {
    /// Fixed axis holding one value.
    pub fn fixed(v: f64) -> Self {
        AxisRange {
            min: v,
            max: v,
            count: 1,
        }
    }

    pub fn values(&self) -> Vec<f64> {
        if self.count <= 1 {
            return vec![self.min];
        }
        let step = (self.max - self.min) / (self.count - 1) as f64;
        (0..self.count).map(|i| self.min + step * i as f64).collect()
    }

    fn sample(&self, rng: &mut impl Rng) -> f64 {
        if self.max > self.min {
            rng.gen_range(self.min..=self.max)
        } else {
            self.min
        }
    }

    pub fn validate(&self, name: &str) -> Result<()> {
        if !(self.min.is_finite() && self.max.is_finite()) || self.min > self.max || self.count == 0
        {
            return Err(Error::InvalidConfig(vec![format!(
                "design axis {name}: need finite min <= max and count >= 1 \
                 (min = {}, max = {}, count = {})",
                self.min, self.max, self.count
            )]));
        }
        Ok(())
    }
}

/// Search box over the geometry axes plus the fixed evaluation context.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignSpace {
    pub d: AxisRange,
    pub s: AxisRange,
    pub h: AxisRange,
    pub w: AxisRange,
    pub l: AxisRange,
    /// Metal thickness is not searched.
    pub t: f64,
    pub material: MaterialProperties,
    /// Band of interest (Hz).
    pub band: (f64, f64),
    /// Reference environmental states (percent); defaults to the extremes.
    pub env_pair: (f64, f64),
}

impl DesignSpace {
    /// Box around the prototype cell.
    pub fn around_prototype() -> Self {
        let g = SrrGeometry::prototype();
        DesignSpace {
            d: AxisRange {
                min: 0.9e-3,
                max: 1.3e-3,
                count: 5,
            },
            s: AxisRange {
                min: 0.85e-3,
                max: 1.1e-3,
                count: 4,
            },
            h: AxisRange {
                min: 2.2e-3,
                max: 2.6e-3,
                count: 3,
            },
            w: AxisRange::fixed(g.w),
            l: AxisRange {
                min: 4.6e-3,
                max: 5.1e-3,
                count: 4,
            },
            t: g.t,
            material: MaterialProperties::prototype(),
            band: (4.8e9, 5.8e9),
            env_pair: (0.0, 100.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.d.validate("d")?;
        self.s.validate("s")?;
        self.h.validate("h")?;
        self.w.validate("w")?;
        self.l.validate("l")?;
        self.material.validate()?;
        if !(self.band.1 > self.band.0) || !(self.band.0 > 0.0) {
            return Err(Error::InvalidConfig(vec![format!(
                "band must satisfy 0 < lo < hi, got {:?}",
                self.band
            )]));
        }
        for psi in [self.env_pair.0, self.env_pair.1] {
            if !(0.0..=100.0).contains(&psi) {
                return Err(Error::InvalidConfig(vec![format!(
                    "env state {psi} outside 0..=100"
                )]));
            }
        }
        Ok(())
    }

    fn geometry(&self, d: f64, s: f64, h: f64, w: f64, l: f64) -> SrrGeometry {
        SrrGeometry {
            l,
            d,
            s,
            w,
            t: self.t,
            h,
        }
    }

    /// Full grid in axis order (d, s, h, w, l), slowest axis first.
    pub fn grid(&self) -> Vec<SrrGeometry> {
        let mut out = Vec::new();
        for &d in &self.d.values() {
            for &s in &self.s.values() {
                for &h in &self.h.values() {
                    for &w in &self.w.values() {
                        for &l in &self.l.values() {
                            out.push(self.geometry(d, s, h, w, l));
                        }
                    }
                }
            }
        }
        out
    }

    fn sample(&self, rng: &mut impl Rng) -> SrrGeometry {
        let d = self.d.sample(rng);
        let s = self.s.sample(rng);
        let h = self.h.sample(rng);
        let w = self.w.sample(rng);
        let l = self.l.sample(rng);
        self.geometry(d, s, h, w, l)
    }
}

/// Scores of one candidate; all three are maximized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DesignMetrics {
    /// |f0(psi_hi) - f0(psi_lo)| in Hz.
    pub delta_f0_hz: f64,
    /// Canonical Q at psi_lo.
    pub q_factor: f64,
    /// min over the band of |Gamma(f, psi_lo)|^2.
    pub p_min_reflected: f64,
}

impl DesignMetrics {
    /// Componentwise dominance: `self` dominates `other` when it is at least
    /// as good everywhere and strictly better somewhere.
    pub fn dominates(&self, other: &DesignMetrics) -> bool {
        let ge = self.delta_f0_hz >= other.delta_f0_hz
            && self.q_factor >= other.q_factor
            && self.p_min_reflected >= other.p_min_reflected;
        let gt = self.delta_f0_hz > other.delta_f0_hz
            || self.q_factor > other.q_factor
            || self.p_min_reflected > other.p_min_reflected;
        ge && gt
    }

    pub fn is_finite(&self) -> bool {
        self.delta_f0_hz.is_finite() && self.q_factor.is_finite() && self.p_min_reflected.is_finite()
    }
}

/// Non-dominated set of evaluated candidates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParetoSet {
    pub entries: Vec<(SrrGeometry, DesignMetrics)>,
}

/// Evaluates one candidate against the three design metrics.
pub fn evaluate_design(
    geom: &SrrGeometry,
    mat: &MaterialProperties,
    env_pair: (f64, f64),
    band: (f64, f64),
) -> Result<DesignMetrics> {
    let (psi_lo, psi_hi) = env_pair;
    let f_ref = 0.5 * (band.0 + band.1);
    let cp_lo = derive_circuit(geom, mat, psi_lo, f_ref)?;
    let res_lo = canonical_resonance(&cp_lo, geom, mat, band, DEFAULT_GRID_POINTS)?;
    let f0_hi = if psi_hi == psi_lo {
        res_lo.f0_hz
    } else {
        let cp_hi = derive_circuit(geom, mat, psi_hi, f_ref)?;
        canonical_resonance(&cp_hi, geom, mat, band, DEFAULT_GRID_POINTS)?.f0_hz
    };
    let model = TagModel::new(*geom, mat.clone(), band);
    let spec = model.spectrum_for(&cp_lo)?;
    let p_min = spec
        .gamma
        .iter()
        .map(|g| g.norm_sqr())
        .fold(f64::MAX, f64::min);
    Ok(DesignMetrics {
        delta_f0_hz: (f0_hi - res_lo.f0_hz).abs(),
        q_factor: res_lo.q,
        p_min_reflected: p_min,
    })
}

/// Filters a candidate list down to its non-dominated subset.
///
/// Mutually non-dominating duplicates are all kept; order follows the input.
pub fn pareto_front(candidates: &[(SrrGeometry, DesignMetrics)]) -> ParetoSet {
    let mut entries = Vec::new();
    'outer: for (i, (geom, m)) in candidates.iter().enumerate() {
        for (j, (_, other)) in candidates.iter().enumerate() {
            if i != j && other.dominates(m) {
                continue 'outer;
            }
        }
        entries.push((*geom, *m));
    }
    ParetoSet { entries }
}

/// Searches the design space: the full grid first (in deterministic axis
/// order), then seeded-random samples, up to `budget` evaluations.
///
/// Candidates that fail to evaluate (invalid geometry, no resonance in band)
/// are skipped and reported in the diagnostics of the error if *all* fail.
/// The same `(space, budget, seed)` always returns the same front.
pub fn search(space: &DesignSpace, budget: usize, seed: u64) -> Result<ParetoSet> {
    if budget == 0 {
        return Err(Error::InvalidConfig(vec!["budget must be >= 1".into()]));
    }
    space.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid = space.grid();
    let mut evaluated = Vec::new();
    let mut diagnostics = Vec::new();
    let mut produced = 0usize;
    let next = |i: usize, rng: &mut ChaCha8Rng| -> SrrGeometry {
        if i < grid.len() {
            grid[i]
        } else {
            space.sample(rng)
        }
    };
    while produced < budget {
        let geom = next(produced, &mut rng);
        produced += 1;
        match evaluate_design(&geom, &space.material, space.env_pair, space.band) {
            Ok(m) if m.is_finite() => evaluated.push((geom, m)),
            Ok(_) => diagnostics.push(format!("candidate {produced}: non-finite metrics")),
            Err(e) => {
                if diagnostics.len() < 8 {
                    diagnostics.push(format!("candidate {produced}: {e}"));
                }
            }
        }
    }
    if evaluated.is_empty() {
        return Err(Error::AllCandidatesInvalid(diagnostics));
    }
    Ok(pareto_front(&evaluated))
}
