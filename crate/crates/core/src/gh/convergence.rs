use serde::{Deserialize, Serialize};

use crate::collapse::{regular_set, CollapseField};
use crate::error::{Error, Result};
use crate::gh::measured::relation_distortion;
use crate::gh::Correspondence;
use crate::metric::{ball, closure_approx};
use crate::space::FiniteMetricMeasureSpace;
use crate::subset::PointSubset;

/// Default distortion tolerance at the final member.
pub const DEFAULT_TOLERANCE: f64 = 1e-2;

/// Slack when comparing consecutive distortions for monotonicity.
pub const MONOTONE_SLACK: f64 = 1e-6;

/// One member of a sequence, with its correspondence to the limit
/// (limit points × member points).
#[derive(Debug, Clone, Copy)]
pub struct ConvergenceMember<'a> {
    pub k: usize,
    pub space: &'a FiniteMetricMeasureSpace,
    pub field: &'a CollapseField,
    pub correspondence: Option<&'a Correspondence>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrespondenceSource {
    /// Maps supplied by the generator.
    Canonical,
    /// Certificates of GH estimates; a weaker check.
    Certificate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExhaustionEntry {
    pub eps: f64,
    pub k: usize,
    /// Points of the dilated limit regular set `Ω`.
    pub omega: usize,
    /// Points of the member with `ν > ε` (inside the ball in pointed mode).
    pub member_regular: usize,
    pub uncovered: usize,
    pub covered: bool,
    /// Distortion of the correspondence restricted to `Ω`, over pairs at
    /// finite distance in the limit.
    pub distortion: f64,
    pub distortion_rows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsVerdict {
    pub eps: f64,
    /// First `k` from which coverage holds for every later member.
    pub k0: Option<usize>,
    pub final_distortion: Option<f64>,
    /// Distortions over the last four members never increase.
    pub tail_non_increasing: bool,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub source: CorrespondenceSource,
    pub radius: Option<f64>,
    pub tolerance: f64,
    pub entries: Vec<ExhaustionEntry>,
    pub verdicts: Vec<EpsVerdict>,
    pub pass: bool,
    /// True when the limit is empty and every member's regular set is too.
    pub vacuous: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExhaustionOptions {
    /// Restrict member regular sets to `B(x_k, R)`.
    pub radius: Option<f64>,
    pub tolerance: f64,
    /// Source rows per distortion estimate.
    pub max_rows: usize,
    pub source: CorrespondenceSource,
}

impl Default for ExhaustionOptions {
    fn default() -> Self {
        Self {
            radius: None,
            tolerance: DEFAULT_TOLERANCE,
            max_rows: 64,
            source: CorrespondenceSource::Canonical,
        }
    }
}

/// For each `ε` and member: is `{ν_k > ε}` covered by the image of the
/// limit's regular set `{ν > ε}` (dilated by one hop), and how far is the
/// correspondence from an isometry there.
pub fn volume_exhausted_check(
    limit: &FiniteMetricMeasureSpace,
    limit_field: &CollapseField,
    members: &[ConvergenceMember<'_>],
    eps_grid: &[f64],
    opts: &ExhaustionOptions,
) -> Result<ConvergenceReport> {
    if eps_grid.is_empty() {
        return Err(Error::EmptyOperand("epsilon grid"));
    }
    if let Some(r) = opts.radius {
        if !(r > 0.0) {
            return Err(Error::NonPositiveRadius(r));
        }
    }
    let limit_empty = limit.num_points() == 0;
    let mut notes = Vec::new();
    if opts.source == CorrespondenceSource::Certificate {
        notes.push("correspondences are GH certificates, not generator maps".to_string());
    }
    let mut entries = Vec::new();
    let mut verdicts = Vec::new();
    for &eps in eps_grid {
        let omega = if limit_empty {
            PointSubset::empty(0)
        } else {
            let reg = regular_set(limit, limit_field, eps)?;
            closure_approx(limit, &reg, limit.default_hop_radius())?
        };
        for m in members {
            let mut regular = regular_set(m.space, m.field, eps)?;
            if let Some(r) = opts.radius {
                let base = m.space.basepoint().ok_or_else(|| {
                    Error::InvalidParams(format!("member {} has no basepoint", m.k))
                })?;
                regular = regular.intersection(&ball(m.space, base, r)?);
            }
            let (uncovered, distortion, rows) = if limit_empty {
                (regular.len(), 0.0, 0)
            } else {
                let corr = m.correspondence.ok_or_else(|| {
                    Error::MissingCorrespondence(format!("member {} has no map to the limit", m.k))
                })?;
                if corr.nx() != limit.num_points() || corr.ny() != m.space.num_points() {
                    return Err(Error::InvalidCorrespondence(format!(
                        "member {}: correspondence is {} x {}",
                        m.k,
                        corr.nx(),
                        corr.ny()
                    )));
                }
                let pairs: Vec<(usize, usize)> = corr
                    .pairs()
                    .iter()
                    .copied()
                    .filter(|&(x, _)| omega.contains(x))
                    .collect();
                let mut image = PointSubset::empty(m.space.num_points());
                for &(_, y) in &pairs {
                    image.insert(y);
                }
                let (d, rows) = relation_distortion(limit, m.space, &pairs, opts.max_rows, true);
                (regular.difference(&image).len(), d, rows)
            };
            entries.push(ExhaustionEntry {
                eps,
                k: m.k,
                omega: omega.len(),
                member_regular: regular.len(),
                uncovered,
                covered: uncovered == 0,
                distortion,
                distortion_rows: rows,
            });
        }
        verdicts.push(verdict(eps, &entries, opts.tolerance));
    }
    let vacuous = limit_empty
        && entries
            .iter()
            .filter(|e| e.k == last_k(members))
            .all(|e| e.member_regular == 0);
    let pass = verdicts.iter().all(|v| v.pass);
    Ok(ConvergenceReport {
        source: opts.source,
        radius: opts.radius,
        tolerance: opts.tolerance,
        entries,
        verdicts,
        pass,
        vacuous,
        notes,
    })
}

fn last_k(members: &[ConvergenceMember<'_>]) -> usize {
    members.last().map_or(0, |m| m.k)
}

fn verdict(eps: f64, entries: &[ExhaustionEntry], tolerance: f64) -> EpsVerdict {
    let rows: Vec<&ExhaustionEntry> = entries.iter().filter(|e| e.eps == eps).collect();
    let mut k0 = None;
    for e in rows.iter().rev() {
        if e.covered {
            k0 = Some(e.k);
        } else {
            break;
        }
    }
    let final_distortion = rows.last().map(|e| e.distortion);
    let tail = &rows[rows.len().saturating_sub(4)..];
    let tail_non_increasing = tail
        .windows(2)
        .all(|w| w[1].distortion <= w[0].distortion + MONOTONE_SLACK);
    let pass = k0.is_some() && final_distortion.map_or(false, |d| d < tolerance) && tail_non_increasing;
    EpsVerdict {
        eps,
        k0,
        final_distortion,
        tail_non_increasing,
        pass,
    }
}
