//! Family signatures. The eigenvalues of a canonical pair are only defined
//! up to a shared fractional-linear change of variable, so the signature
//! stores the block skeleton with eigenvalues replaced by anchor labels and,
//! for the ones that stay free, the minimal invariant values achievable over
//! every legal anchoring. Two signatures are equal exactly when the byte
//! serializations are.

use std::collections::BTreeMap;
use std::fmt;

use crate::exact::Gaussian;
use crate::pencil::PencilBlock;

use super::mobius::{ExtEig, MobiusMap};

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub enum AnchorLabel {
    Inf,
    Zero,
    One,
    /// 1-based index into the invariant list.
    Free(usize),
}

impl fmt::Display for AnchorLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AnchorLabel::Inf => write!(f, "inf"),
            AnchorLabel::Zero => write!(f, "0"),
            AnchorLabel::One => write!(f, "1"),
            AnchorLabel::Free(k) => write!(f, "f{k}"),
        }
    }
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub enum SkeletonEntry {
    Left(usize),
    Right(usize),
    Jordan { label: AnchorLabel, size: usize },
}

impl fmt::Display for SkeletonEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SkeletonEntry::Left(e) => write!(f, "l{e}"),
            SkeletonEntry::Right(e) => write!(f, "r{e}"),
            SkeletonEntry::Jordan { label, size } => write!(f, "j{size}@{label}"),
        }
    }
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub struct FamilySignature {
    pub skeleton: Vec<SkeletonEntry>,
    pub invariants: Vec<Gaussian>,
}

impl FamilySignature {
    /// Remaining continuous directions in the eigenvalue normalization:
    /// 0 once three anchors are pinned, up to 3 for a pure singular pencil.
    pub fn continuous_freedom_dof(&self) -> u8 {
        let mut labels: Vec<&AnchorLabel> = self
            .skeleton
            .iter()
            .filter_map(|e| match e {
                SkeletonEntry::Jordan { label, .. } => Some(label),
                _ => None,
            })
            .collect();
        labels.dedup();
        3u8.saturating_sub(labels.len() as u8)
    }

    pub fn has_continuous_freedom(&self) -> bool {
        self.continuous_freedom_dof() > 0
    }
}

impl fmt::Display for FamilySignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, e) in self.skeleton.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, ";")?;
        for (k, v) in self.invariants.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Eigenvalue -> Jordan sizes (descending).
pub(crate) fn spectrum(blocks: &[PencilBlock]) -> BTreeMap<ExtEig, Vec<usize>> {
    let mut out: BTreeMap<ExtEig, Vec<usize>> = BTreeMap::new();
    for b in blocks {
        match b {
            PencilBlock::Finite(jb) => {
                out.entry(ExtEig::Finite(jb.eigenvalue.clone())).or_default().push(jb.size)
            }
            PencilBlock::Infinite(n) => out.entry(ExtEig::Infinite).or_default().push(*n),
            _ => {}
        }
    }
    for sizes in out.values_mut() {
        sizes.sort_unstable_by(|a, b| b.cmp(a));
    }
    out
}

/// Structural precedence of an eigenvalue: larger chains first, then more
/// chains. Invariant under any change of variable, unlike the values.
fn class_key(sizes: &[usize]) -> (usize, usize) {
    (sizes[0], sizes.len())
}

/// All orderings of up to three distinct eigenvalues onto the anchor slots
/// (inf, 0, 1) that respect structural precedence: each slot in turn takes
/// one of the top-class eigenvalues remaining.
pub(crate) fn legal_sequences(spec: &BTreeMap<ExtEig, Vec<usize>>) -> Vec<Vec<ExtEig>> {
    let want = spec.len().min(3);
    let mut out = Vec::new();
    let pool: Vec<(ExtEig, (usize, usize))> =
        spec.iter().map(|(e, s)| (e.clone(), class_key(s))).collect();
    let mut cur: Vec<ExtEig> = Vec::new();
    fn rec(
        pool: &[(ExtEig, (usize, usize))],
        used: &mut Vec<bool>,
        cur: &mut Vec<ExtEig>,
        want: usize,
        out: &mut Vec<Vec<ExtEig>>,
    ) {
        if cur.len() == want {
            out.push(cur.clone());
            return;
        }
        let top = pool
            .iter()
            .zip(used.iter())
            .filter(|(_, &u)| !u)
            .map(|((_, k), _)| *k)
            .max()
            .unwrap();
        for i in 0..pool.len() {
            if !used[i] && pool[i].1 == top {
                used[i] = true;
                cur.push(pool[i].0.clone());
                rec(pool, used, cur, want, out);
                cur.pop();
                used[i] = false;
            }
        }
    }
    if want == 0 {
        return vec![Vec::new()];
    }
    let mut used = vec![false; pool.len()];
    rec(&pool, &mut used, &mut cur, want, &mut out);
    out
}

/// The normalizing map for one anchor sequence.
pub(crate) fn sequence_map(seq: &[ExtEig]) -> MobiusMap {
    match seq {
        [] => MobiusMap::identity(),
        [x] => MobiusMap::one_point_map(x),
        [x, y] => MobiusMap::two_point_map(x, y).unwrap(),
        [x, y, z, ..] => MobiusMap::three_point_map(x, y, z).unwrap(),
    }
}

pub(crate) fn singular_entries(blocks: &[PencilBlock]) -> Vec<SkeletonEntry> {
    let mut lefts: Vec<usize> = blocks
        .iter()
        .filter_map(|b| match b {
            PencilBlock::LeftSingular(e) => Some(*e),
            _ => None,
        })
        .collect();
    let mut rights: Vec<usize> = blocks
        .iter()
        .filter_map(|b| match b {
            PencilBlock::RightSingular(e) => Some(*e),
            _ => None,
        })
        .collect();
    lefts.sort_unstable();
    rights.sort_unstable();
    let mut out: Vec<SkeletonEntry> = lefts.into_iter().map(SkeletonEntry::Left).collect();
    out.extend(rights.into_iter().map(SkeletonEntry::Right));
    out
}

pub(crate) fn signature_for_map(
    spec: &BTreeMap<ExtEig, Vec<usize>>,
    singular: &[SkeletonEntry],
    m: &MobiusMap,
) -> FamilySignature {
    let mut inf: Vec<usize> = Vec::new();
    let mut zero: Vec<usize> = Vec::new();
    let mut one: Vec<usize> = Vec::new();
    let mut frees: Vec<(Gaussian, Vec<usize>)> = Vec::new();
    for (e, sizes) in spec {
        match m.apply(e) {
            ExtEig::Infinite => inf = sizes.clone(),
            ExtEig::Finite(v) => {
                if v.is_zero() {
                    zero = sizes.clone();
                } else if v == Gaussian::one() {
                    one = sizes.clone();
                } else {
                    frees.push((v, sizes.clone()));
                }
            }
        }
    }
    frees.sort_by(|a, b| a.0.cmp(&b.0));
    let mut skeleton = singular.to_vec();
    let push = |label: AnchorLabel, sizes: &[usize], skeleton: &mut Vec<SkeletonEntry>| {
        for &size in sizes {
            skeleton.push(SkeletonEntry::Jordan { label, size });
        }
    };
    push(AnchorLabel::Inf, &inf, &mut skeleton);
    push(AnchorLabel::Zero, &zero, &mut skeleton);
    push(AnchorLabel::One, &one, &mut skeleton);
    for (k, (_, sizes)) in frees.iter().enumerate() {
        push(AnchorLabel::Free(k + 1), sizes, &mut skeleton);
    }
    let invariants = frees.into_iter().map(|(v, _)| v).collect();
    FamilySignature { skeleton, invariants }
}

/// The minimal signature over every legal anchoring. Minimizing over the
/// whole (structurally invariant) set is what makes equal orbits produce
/// byte-equal signatures.
pub fn signature_of_blocks(blocks: &[PencilBlock]) -> FamilySignature {
    let spec = spectrum(blocks);
    let singular = singular_entries(blocks);
    legal_sequences(&spec)
        .into_iter()
        .map(|seq| signature_for_map(&spec, &singular, &sequence_map(&seq)))
        .min()
        .unwrap_or(FamilySignature { skeleton: singular, invariants: Vec::new() })
}
