//! Before/after evaluation plans shared by the four measures.
//!
//! Each measure compares two risk terms. A term assigns every column either
//! its original value or a value taken from a perturbation draw. A draw is a
//! joint Gaussian sample of `targets` given the original values of `cond`
//! (empty `cond` = independent of the row). Draws that share a `stream` reuse
//! the same standard normals per (row, column), which couples the two terms
//! wherever their assignments coincide. Blocks used side by side in one term
//! always live on different streams, so they are mutually independent.

use serde::{Deserialize, Serialize};

use crate::data::FeatureIndexSet;
use crate::sampler::Integration;

use super::{Measure, MeasureSpec, Mode};

/// Stream of the baseline draw.
pub(crate) const PRIMARY_STREAM: u64 = 0;
/// Stream for reconstruction blocks that sit next to a baseline block.
pub(crate) const SECONDARY_STREAM: u64 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DrawSpec {
    pub targets: FeatureIndexSet,
    pub cond: FeatureIndexSet,
    pub stream: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Assignment {
    KeepOriginal,
    /// Value taken from draw `n` of the plan.
    Drawn(usize),
}

/// Which function a term scores: `f`, or `f_S` for a kept set `S`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredictorChoice {
    Original,
    Marginalized { kept: FeatureIndexSet, integration: Integration },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermPlan {
    pub predictor: PredictorChoice,
    pub assignment: Vec<Assignment>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationPlan {
    pub draws: Vec<DrawSpec>,
    /// `[worse, better]`: the measure is `risk(terms[0]) - risk(terms[1])`.
    pub terms: [TermPlan; 2],
}

struct Builder {
    d: usize,
    draws: Vec<DrawSpec>,
}

impl Builder {
    fn new(d: usize) -> Self {
        Self { d, draws: Vec::new() }
    }

    fn draw(&mut self, targets: FeatureIndexSet, cond: FeatureIndexSet, stream: u64) -> usize {
        let spec = DrawSpec { targets, cond, stream };
        if let Some(i) = self.draws.iter().position(|s| *s == spec) {
            return i;
        }
        self.draws.push(spec);
        self.draws.len() - 1
    }

    fn assignment(&self, blocks: &[(&FeatureIndexSet, usize)]) -> Vec<Assignment> {
        let mut out = vec![Assignment::KeepOriginal; self.d];
        for (cols, draw) in blocks {
            for j in cols.iter() {
                out[j] = Assignment::Drawn(*draw);
            }
        }
        out
    }
}

fn choice(mode: Mode, kept: FeatureIndexSet, integration: Integration) -> PredictorChoice {
    match mode {
        Mode::OriginalF => PredictorChoice::Original,
        Mode::Marginalized => PredictorChoice::Marginalized { kept, integration },
    }
}

impl EvaluationPlan {
    /// Plan for a validated spec over `d` columns.
    pub fn for_spec(spec: &MeasureSpec, d: usize) -> Self {
        let all = FeatureIndexSet::full(d);
        let none = FeatureIndexSet::empty();
        let mut b = Builder::new(d);
        let (interest, base, aux) = (&spec.interest, &spec.baseline, &spec.aux);
        match spec.measure {
            Measure::Direct => {
                let out_b = base.complement(d);
                let out_bk = base.union(interest).complement(d);
                let z = b.draw(out_b.clone(), none, PRIMARY_STREAM);
                let t1 = b.assignment(&[(&out_b, z)]);
                let t2 = b.assignment(&[(&out_bk, z)]);
                let ind = Integration::Independent;
                Self {
                    terms: [
                        TermPlan { predictor: choice(spec.mode, base.clone(), ind), assignment: t1 },
                        TermPlan { predictor: choice(spec.mode, base.union(interest), ind), assignment: t2 },
                    ],
                    draws: b.draws,
                }
            }
            Measure::Associative => {
                let cj = base.union(interest);
                let out_c = base.complement(d);
                let out_cj = cj.complement(d);
                let z0 = b.draw(out_c.clone(), base.clone(), PRIMARY_STREAM);
                let z1 = b.draw(out_cj.clone(), cj.clone(), PRIMARY_STREAM);
                let t1 = b.assignment(&[(&out_c, z0)]);
                let t2 = b.assignment(&[(&out_cj, z1)]);
                let cond = Integration::Conditional;
                Self {
                    terms: [
                        TermPlan { predictor: choice(spec.mode, base.clone(), cond), assignment: t1 },
                        TermPlan { predictor: choice(spec.mode, cj, cond), assignment: t2 },
                    ],
                    draws: b.draws,
                }
            }
            Measure::DirectFrom => {
                let out_b = base.complement(d);
                let out_bk = base.union(interest).complement(d);
                let z = b.draw(out_b.clone(), none, PRIMARY_STREAM);
                let t1 = b.assignment(&[(&out_b, z)]);
                let rebuilt = interest.difference(aux);
                let t2 = if aux.is_empty() {
                    // X~^J with J = {} is X~^{} itself.
                    b.assignment(&[(&out_b, z)])
                } else {
                    let r = b.draw(rebuilt.clone(), aux.clone(), SECONDARY_STREAM);
                    b.assignment(&[(&out_bk, z), (&rebuilt, r)])
                };
                let ind = Integration::Independent;
                Self {
                    terms: [
                        TermPlan { predictor: choice(spec.mode, base.clone(), ind), assignment: t1 },
                        TermPlan { predictor: choice(spec.mode, base.union(interest), ind), assignment: t2 },
                    ],
                    draws: b.draws,
                }
            }
            Measure::AssociativeVia => {
                let pathway = aux;
                let cj = base.union(interest);
                let out_c = base.complement(d);
                let out_cj = cj.complement(d);
                let z0 = b.draw(out_c.clone(), base.clone(), PRIMARY_STREAM);
                let t1 = b.assignment(&[(&out_c, z0)]);
                // Columns outside the pathway keep the context-only reconstruction.
                let blocked = all.difference(pathway).difference(base);
                let opened = pathway.difference(&cj);
                let t2 = if interest.is_empty() {
                    b.assignment(&[(&out_c, z0)])
                } else {
                    let stream = if blocked.is_empty() { PRIMARY_STREAM } else { SECONDARY_STREAM };
                    let z1 = b.draw(out_cj, cj.clone(), stream);
                    b.assignment(&[(&blocked, z0), (&opened, z1)])
                };
                let cond = Integration::Conditional;
                Self {
                    terms: [
                        TermPlan { predictor: choice(spec.mode, base.clone(), cond), assignment: t1 },
                        TermPlan { predictor: choice(spec.mode, cj, cond), assignment: t2 },
                    ],
                    draws: b.draws,
                }
            }
        }
    }

    /// Whether both terms assign every column identically.
    pub fn terms_identical(&self) -> bool {
        self.terms[0].assignment == self.terms[1].assignment
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::importance::MeasureSpec;

    fn fis(v: &[usize]) -> FeatureIndexSet {
        FeatureIndexSet::new(v.iter().copied())
    }

    #[test]
    fn every_column_has_one_assignment_per_term() {
        let specs = [
            MeasureSpec::di(fis(&[0]), fis(&[2])),
            MeasureSpec::ai(fis(&[1]), fis(&[3])),
            MeasureSpec::di_from(fis(&[0]), fis(&[1, 2]), fis(&[3])),
            MeasureSpec::ai_via(fis(&[0]), fis(&[]), fis(&[2, 3])),
        ];
        for spec in &specs {
            let plan = EvaluationPlan::for_spec(spec, 4);
            for term in &plan.terms {
                assert_eq!(term.assignment.len(), 4);
                for a in &term.assignment {
                    if let Assignment::Drawn(i) = a {
                        assert!(*i < plan.draws.len());
                    }
                }
            }
        }
    }

    #[test]
    fn direct_restores_interest_columns() {
        let plan = EvaluationPlan::for_spec(&MeasureSpec::di(fis(&[1]), fis(&[0])), 3);
        assert_eq!(plan.terms[0].assignment[0], Assignment::KeepOriginal);
        assert_eq!(plan.terms[0].assignment[1], Assignment::Drawn(0));
        assert_eq!(plan.terms[1].assignment[1], Assignment::KeepOriginal);
        assert_eq!(plan.terms[1].assignment[2], Assignment::Drawn(0));
    }

    #[test]
    fn empty_interest_or_source_gives_identical_terms() {
        assert!(EvaluationPlan::for_spec(&MeasureSpec::di(fis(&[]), fis(&[1])), 3).terms_identical());
        assert!(EvaluationPlan::for_spec(&MeasureSpec::ai(fis(&[]), fis(&[1])), 3).terms_identical());
        assert!(EvaluationPlan::for_spec(&MeasureSpec::di_from(fis(&[0]), fis(&[1]), fis(&[])), 3)
            .terms_identical());
        assert!(EvaluationPlan::for_spec(&MeasureSpec::ai_via(fis(&[]), fis(&[1]), fis(&[0])), 3)
            .terms_identical());
    }

    #[test]
    fn full_pathway_matches_associative_plan() {
        let ai = EvaluationPlan::for_spec(&MeasureSpec::ai(fis(&[0]), fis(&[2])), 4);
        let via = EvaluationPlan::for_spec(&MeasureSpec::ai_via(fis(&[0]), fis(&[2]), fis(&[0, 1, 2, 3])), 4);
        let resolve = |p: &EvaluationPlan, t: usize| -> Vec<Option<DrawSpec>> {
            p.terms[t]
                .assignment
                .iter()
                .map(|a| match a {
                    Assignment::KeepOriginal => None,
                    Assignment::Drawn(i) => Some(p.draws[*i].clone()),
                })
                .collect()
        };
        assert_eq!(resolve(&ai, 0), resolve(&via, 0));
        assert_eq!(resolve(&ai, 1), resolve(&via, 1));
    }

    #[test]
    fn mixed_blocks_use_distinct_streams() {
        let plan = EvaluationPlan::for_spec(&MeasureSpec::ai_via(fis(&[0]), fis(&[]), fis(&[1])), 3);
        let used: Vec<usize> = plan.terms[1]
            .assignment
            .iter()
            .filter_map(|a| match a {
                Assignment::Drawn(i) => Some(*i),
                _ => None,
            })
            .collect();
        let streams: std::collections::HashSet<u64> = used.iter().map(|&i| plan.draws[i].stream).collect();
        assert_eq!(streams.len(), 2);
    }
}
