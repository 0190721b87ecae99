//! Level-indexed Rokhlin towers: stage refinement, the action of T on level
//! indices, lifting to deeper stages and an interval layout for plotting.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::{CutSpacParam, ParamSeq};
use crate::rational::ratio_serde;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct LevelRef {
    pub stage: usize,
    pub index: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TStep {
    Level(LevelRef),
    /// The top level of a stage: its image is only known at a deeper stage.
    ExitsStage,
}

/// How stage `m` sits inside stage `m + 1`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StageRefinement {
    pub stage: usize,
    pub height: u64,
    pub next_height: u64,
    pub copy_offsets: Vec<u64>,
    pub spacer_indices: Vec<u64>,
}

impl StageRefinement {
    pub fn new(stage: usize, height: u64, p: &CutSpacParam) -> StageRefinement {
        let q = p.q as usize;
        let mut copy_offsets = Vec::with_capacity(q);
        let mut spacer_indices = Vec::new();
        let mut pos = 0u64;
        for i in 0..q {
            spacer_indices.extend(pos..pos + p.spacers[i]);
            pos += p.spacers[i];
            copy_offsets.push(pos);
            pos += height;
        }
        spacer_indices.extend(pos..pos + p.spacers[q]);
        pos += p.spacers[q];
        StageRefinement {
            stage,
            height,
            next_height: pos,
            copy_offsets,
            spacer_indices,
        }
    }

    /// Indices at stage `m + 1` making up level `j` of stage `m`.
    pub fn children(&self, j: u64) -> Vec<u64> {
        debug_assert!(j < self.height);
        self.copy_offsets.iter().map(|o| o + j).collect()
    }

    /// `(copy, j)` with `idx = copy_offsets[copy] + j`, or `None` for a spacer.
    pub fn parent(&self, idx: u64) -> Option<(usize, u64)> {
        let copy = self.copy_offsets.partition_point(|&o| o <= idx).checked_sub(1)?;
        let j = idx - self.copy_offsets[copy];
        (j < self.height).then_some((copy, j))
    }

    pub fn is_spacer(&self, idx: u64) -> bool {
        self.spacer_indices.binary_search(&idx).is_ok()
    }
}

/// Refinement of stage `m` inside stage `m + 1`.
pub fn refine(seq: &ParamSeq, m: usize) -> Result<StageRefinement> {
    if m >= seq.len() {
        return Err(Error::StageOutOfRange {
            stage: m,
            available: seq.len(),
        });
    }
    let h = u64::try_from(seq.height(m)).map_err(|_| Error::TooLarge(format!("h_{m}")))?;
    Ok(StageRefinement::new(m, h, &seq.entries()[m]))
}

/// Explicit towers `R_0..R_M` for a prefix whose heights fit in machine words.
#[derive(Clone, Debug)]
pub struct TowerModel {
    seq: ParamSeq,
    heights: Vec<u64>,
    stages: Vec<StageRefinement>,
}

impl TowerModel {
    pub fn new(seq: ParamSeq) -> Result<TowerModel> {
        let heights = seq
            .heights_u64()
            .ok_or_else(|| Error::TooLarge("tower height".into()))?;
        let stages = seq
            .entries()
            .iter()
            .enumerate()
            .map(|(m, p)| StageRefinement::new(m, heights[m], p))
            .collect();
        Ok(TowerModel {
            seq,
            heights,
            stages,
        })
    }

    pub fn params(&self) -> &ParamSeq {
        &self.seq
    }

    /// Deepest available stage.
    pub fn depth(&self) -> usize {
        self.stages.len()
    }

    pub fn height(&self, m: usize) -> u64 {
        self.heights[m]
    }

    pub fn heights(&self) -> &[u64] {
        &self.heights
    }

    pub fn refinement(&self, m: usize) -> Result<&StageRefinement> {
        self.stages.get(m).ok_or(Error::StageOutOfRange {
            stage: m,
            available: self.stages.len(),
        })
    }

    fn check(&self, x: LevelRef) -> Result<()> {
        if x.stage > self.depth() {
            return Err(Error::StageOutOfRange {
                stage: x.stage,
                available: self.depth(),
            });
        }
        if x.index >= self.heights[x.stage] {
            return Err(Error::Input(format!(
                "level {} outside stage {} of height {}",
                x.index, x.stage, self.heights[x.stage]
            )));
        }
        Ok(())
    }

    pub fn t_apply(&self, x: LevelRef) -> TStep {
        if x.index + 1 < self.heights[x.stage] {
            TStep::Level(LevelRef {
                stage: x.stage,
                index: x.index + 1,
            })
        } else {
            TStep::ExitsStage
        }
    }

    /// Offsets `o` such that level `j` of stage `from` is the union of the
    /// stage-`to` levels `o + j`; sorted.
    pub fn lift_offsets(&self, from: usize, to: usize) -> Result<Vec<u64>> {
        if to > self.depth() || from > to {
            return Err(Error::StageOutOfRange {
                stage: to,
                available: self.depth(),
            });
        }
        let mut offs = vec![0u64];
        for m in from..to {
            let st = &self.stages[m];
            offs = st
                .copy_offsets
                .iter()
                .flat_map(|&c| offs.iter().map(move |&o| c + o))
                .collect();
        }
        offs.sort_unstable();
        Ok(offs)
    }

    pub fn lift(&self, x: LevelRef, to: usize) -> Result<Vec<LevelRef>> {
        self.check(x)?;
        if to < x.stage {
            return Err(Error::Input(format!(
                "cannot lift stage {} to shallower stage {to}",
                x.stage
            )));
        }
        Ok(self
            .lift_offsets(x.stage, to)?
            .into_iter()
            .map(|o| LevelRef {
                stage: to,
                index: o + x.index,
            })
            .collect())
    }

    /// Level of stage `to <= x.stage` containing `x`, if `x` is not a spacer
    /// added after stage `to`.
    pub fn ancestor(&self, x: LevelRef, to: usize) -> Option<LevelRef> {
        let mut idx = x.index;
        for m in (to..x.stage).rev() {
            idx = self.stages[m].parent(idx)?.1;
        }
        Some(LevelRef { stage: to, index: idx })
    }

    /// Ancestor index at stage `to` for every level of stage `from`
    /// (`u64::MAX` for later spacers).
    pub fn ancestor_map(&self, from: usize, to: usize) -> Vec<u64> {
        let mut map: Vec<u64> = (0..self.heights[to]).collect();
        for m in to..from {
            let st = &self.stages[m];
            let mut next = vec![u64::MAX; st.next_height as usize];
            for &o in &st.copy_offsets {
                for j in 0..st.height {
                    next[(o + j) as usize] = map[j as usize];
                }
            }
            map = next;
        }
        map
    }

    /// Interval layout of stage `m`: each level as `[start, end)`.
    pub fn layout(&self, m: usize) -> Result<Vec<Interval>> {
        if m > self.depth() {
            return Err(Error::StageOutOfRange {
                stage: m,
                available: self.depth(),
            });
        }
        let mm = self.seq.measure();
        let mut levels = vec![Interval {
            start: BigRational::zero(),
            end: mm.level_measure(0),
        }];
        let mut right = mm.level_measure(0);
        for k in 0..m {
            let st = &self.stages[k];
            let w = mm.level_measure(k + 1);
            let mut next = vec![None; st.next_height as usize];
            for (c, &o) in st.copy_offsets.iter().enumerate() {
                let c = BigRational::from_integer(BigInt::from(c));
                for j in 0..st.height {
                    let start = &levels[j as usize].start + &w * &c;
                    let end = &start + &w;
                    next[(o + j) as usize] = Some(Interval { start, end });
                }
            }
            for &s in &st.spacer_indices {
                let end = &right + &w;
                next[s as usize] = Some(Interval {
                    start: right.clone(),
                    end: end.clone(),
                });
                right = end;
            }
            levels = next.into_iter().map(|i| i.expect("every level placed")).collect();
        }
        Ok(levels)
    }

    pub fn export_stage(&self, m: usize) -> Result<StageExport> {
        let st = self.refinement(m)?;
        Ok(StageExport {
            stage: m,
            height: st.height,
            next_height: st.next_height,
            copy_offsets: st.copy_offsets.clone(),
            spacer_indices: st.spacer_indices.clone(),
            children: (0..st.height).map(|j| st.children(j)).collect(),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Interval {
    #[serde(with = "ratio_serde")]
    pub start: BigRational,
    #[serde(with = "ratio_serde")]
    pub end: BigRational,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StageExport {
    pub stage: usize,
    pub height: u64,
    pub next_height: u64,
    pub copy_offsets: Vec<u64>,
    pub spacer_indices: Vec<u64>,
    pub children: Vec<Vec<u64>>,
}
