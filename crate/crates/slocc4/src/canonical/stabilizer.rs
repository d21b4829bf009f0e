//! Stabilizer of a standard form: everything that fixes the canonical pair
//! exactly. Row/column freedom shows up as the linear space of pairs (X, Z)
//! intertwining both matrices; qubit-side freedom shows up as the
//! fractional-linear maps preserving the eigenvalue structure, each carrying
//! exact compensating row/column operators.

use crate::error::{Error, Result};
use crate::exact::{ExactMatrix, Gaussian};
use crate::pencil::kcf_of_matrices;
use crate::symbolic::SymMatrix;

use super::mobius::{ExtEig, MobiusMap};
use super::signature::spectrum;
use super::standard::StandardForm;

#[derive(Clone, Debug)]
pub struct MobiusStabElement {
    pub map: MobiusMap,
    /// The 2x2 operator realizing the map; s2 * (mixed by s1) * s3 = (E, J).
    pub s1: ExactMatrix,
    pub s2: ExactMatrix,
    pub s3: ExactMatrix,
}

#[derive(Clone, Debug)]
pub enum MobiusPart {
    /// Three or more distinct eigenvalues: the full finite list.
    Finite(Vec<MobiusStabElement>),
    /// Fewer anchors than three leave dof continuous directions; samples
    /// are verified representatives, not the whole family.
    Continuous { dof: u8, samples: Vec<MobiusStabElement> },
}

impl MobiusPart {
    pub fn elements(&self) -> &[MobiusStabElement] {
        match self {
            MobiusPart::Finite(v) => v,
            MobiusPart::Continuous { samples, .. } => samples,
        }
    }
}

#[derive(Clone, Debug)]
pub struct StabilizerDescription {
    /// Basis of pairs (X, Z) with X*E = E*Z and X*J = J*Z. Any
    /// instantiation with X invertible fixes the pair via (X^-1, Z).
    pub commutant_basis: Vec<(ExactMatrix, ExactMatrix)>,
    /// The same family with entries linear in shared parameters s0, s1, ...
    pub commutant_family: (SymMatrix, SymMatrix),
    pub mobius: MobiusPart,
}

/// Solves X*C = C*Z for C in {e, j} exactly; the returned pairs form a
/// basis of the solution space.
pub fn pair_commutant(e: &ExactMatrix, j: &ExactMatrix) -> Vec<(ExactMatrix, ExactMatrix)> {
    let (m, n) = (e.rows, e.cols);
    let unknowns = m * m + n * n;
    let mut sys = ExactMatrix::zeros(2 * m * n, unknowns);
    for (t, c) in [e, j].into_iter().enumerate() {
        for i in 0..m {
            for jc in 0..n {
                let row = t * m * n + i * n + jc;
                for k in 0..m {
                    // X[i][k] * C[k][jc]
                    let v = c.at(k, jc);
                    if !v.is_zero() {
                        *sys.at_mut(row, i * m + k) = &*sys.at(row, i * m + k) + v;
                    }
                }
                for k in 0..n {
                    // - C[i][k] * Z[k][jc]
                    let v = c.at(i, k);
                    if !v.is_zero() {
                        let cell = m * m + k * n + jc;
                        *sys.at_mut(row, cell) = &*sys.at(row, cell) - v;
                    }
                }
            }
        }
    }
    let null = sys.nullspace();
    (0..null.cols)
        .map(|col| {
            let x = ExactMatrix::from_fn(m, m, |r, c| null.at(r * m + c, col).clone());
            let z = ExactMatrix::from_fn(n, n, |r, c| null.at(m * m + r * n + c, col).clone());
            (x, z)
        })
        .collect()
}

fn mix(sf: &StandardForm, t: &ExactMatrix, row: usize) -> ExactMatrix {
    sf.e_part.scale(t.at(row, 0)).add(&sf.j_part.scale(t.at(row, 1)))
}

/// Exact (s2, s3) returning the mixed pair to (E, J), via re-reduction.
pub(crate) fn element_for(sf: &StandardForm, map: MobiusMap) -> Result<MobiusStabElement> {
    let s1 = map.induced_t();
    let a = mix(sf, &s1, 0);
    let b = mix(sf, &s1, 1);
    let canon = kcf_of_matrices(&a, &b)?;
    if canon.blocks != sf.blocks {
        return Err(Error::Internal("map does not preserve the block structure".into()));
    }
    let (s2, s3) = (canon.p_witness, canon.q_witness);
    if s2.matmul(&a).matmul(&s3) != sf.e_part || s2.matmul(&b).matmul(&s3) != sf.j_part {
        return Err(Error::Internal("compensators fail to fix the standard form".into()));
    }
    Ok(MobiusStabElement { map, s1, s2, s3 })
}

fn preserves_spectrum(
    spec: &std::collections::BTreeMap<ExtEig, Vec<usize>>,
    m: &MobiusMap,
) -> bool {
    spec.iter().all(|(e, sizes)| spec.get(&m.apply(e)) == Some(sizes))
}

/// Everything fixing (E, J): the commutant family plus the eigenvalue
/// symmetries with their compensators. With fewer than three distinct
/// eigenvalues the map freedom is continuous and only samples are listed.
pub fn stabilizer(sf: &StandardForm) -> Result<StabilizerDescription> {
    let commutant_basis = pair_commutant(&sf.e_part, &sf.j_part);
    let xs: Vec<ExactMatrix> = commutant_basis.iter().map(|(x, _)| x.clone()).collect();
    let zs: Vec<ExactMatrix> = commutant_basis.iter().map(|(_, z)| z.clone()).collect();
    let commutant_family =
        (SymMatrix::linear_family(&xs, 0), SymMatrix::linear_family(&zs, 0));

    let spec = spectrum(&sf.blocks);
    let eigs: Vec<ExtEig> = spec.keys().cloned().collect();

    let mobius = if eigs.len() >= 3 {
        let refs = [&eigs[0], &eigs[1], &eigs[2]];
        let ref_map = MobiusMap::three_point_map(refs[0], refs[1], refs[2])?;
        let mut elems = Vec::new();
        for f1 in &eigs {
            for f2 in &eigs {
                for f3 in &eigs {
                    if f1 == f2 || f2 == f3 || f1 == f3 {
                        continue;
                    }
                    if spec[f1] != spec[refs[0]]
                        || spec[f2] != spec[refs[1]]
                        || spec[f3] != spec[refs[2]]
                    {
                        continue;
                    }
                    let cand =
                        MobiusMap::three_point_map(f1, f2, f3)?.inverse().compose(&ref_map);
                    if preserves_spectrum(&spec, &cand) {
                        elems.push(element_for(sf, cand)?);
                    }
                }
            }
        }
        MobiusPart::Finite(elems)
    } else {
        let dof = 3 - eigs.len() as u8;
        let scale2 = MobiusMap::new(
            Gaussian::one(),
            Gaussian::zero(),
            Gaussian::zero(),
            Gaussian::from_i64(2, 0),
        )?;
        let shift1 = MobiusMap::new(
            Gaussian::one(),
            Gaussian::zero(),
            Gaussian::one(),
            Gaussian::one(),
        )?;
        let swap = MobiusMap::new(
            Gaussian::zero(),
            Gaussian::one(),
            Gaussian::one(),
            Gaussian::zero(),
        )?;
        let candidates: Vec<MobiusMap> = match eigs.len() {
            0 => vec![shift1, scale2, swap],
            1 => {
                let h = MobiusMap::one_point_map(&eigs[0]);
                let hi = h.inverse();
                vec![hi.compose(&shift1.compose(&h)), hi.compose(&scale2.compose(&h))]
            }
            _ => {
                let h = MobiusMap::two_point_map(&eigs[0], &eigs[1])?;
                let hi = h.inverse();
                vec![hi.compose(&scale2.compose(&h)), hi.compose(&swap.compose(&h))]
            }
        };
        let mut samples = Vec::new();
        for cand in candidates {
            if preserves_spectrum(&spec, &cand) {
                samples.push(element_for(sf, cand)?);
            }
        }
        MobiusPart::Continuous { dof, samples }
    };

    Ok(StabilizerDescription { commutant_basis, commutant_family, mobius })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pencil::kcf::build_canonical;
    use crate::pencil::{JordanBlock, PencilBlock};

    fn g(s: &str) -> Gaussian {
        s.parse().unwrap()
    }

    fn fin(s: &str, size: usize) -> PencilBlock {
        PencilBlock::Finite(JordanBlock::new(g(s), size))
    }

    fn form(mut blocks: Vec<PencilBlock>) -> StandardForm {
        blocks.sort_by(crate::pencil::kcf::canonical_block_order);
        let (e, j) = build_canonical(&blocks);
        StandardForm { blocks, e_part: e, j_part: j }
    }

    fn check_fixes(sf: &StandardForm, el: &MobiusStabElement) {
        let a = el
            .s2
            .matmul(&sf.e_part.scale(el.s1.at(0, 0)).add(&sf.j_part.scale(el.s1.at(0, 1))))
            .matmul(&el.s3);
        let b = el
            .s2
            .matmul(&sf.e_part.scale(el.s1.at(1, 0)).add(&sf.j_part.scale(el.s1.at(1, 1))))
            .matmul(&el.s3);
        assert_eq!(a, sf.e_part);
        assert_eq!(b, sf.j_part);
    }

    #[test]
    fn single_chain_commutant_is_toeplitz() {
        // E = I, J = J_3(0): solutions are X = Z = upper triangular
        // Toeplitz, a three dimensional space.
        let e = ExactMatrix::identity(3);
        let j = ExactMatrix::from_fn(3, 3, |r, c| {
            if c == r + 1 { Gaussian::one() } else { Gaussian::zero() }
        });
        let basis = pair_commutant(&e, &j);
        assert_eq!(basis.len(), 3);
        for (x, z) in &basis {
            assert_eq!(x, z);
            for r in 0..3 {
                for c in 0..3 {
                    if c < r {
                        assert!(x.at(r, c).is_zero());
                    }
                    if r + 1 < 3 && c + 1 < 3 {
                        assert_eq!(x.at(r, c), x.at(r + 1, c + 1));
                    }
                }
            }
        }
    }

    #[test]
    fn commutant_of_identity_pencil_is_everything() {
        // E = 0, J = I (a stack of infinite blocks): X = Z arbitrary.
        let sf = form(vec![PencilBlock::Infinite(1), PencilBlock::Infinite(1)]);
        assert!(sf.e_part.is_zero());
        assert!(sf.j_part.is_identity());
        let desc = stabilizer(&sf).unwrap();
        assert_eq!(desc.commutant_basis.len(), 4);
        for (x, z) in &desc.commutant_basis {
            assert_eq!(x, z);
        }
        match &desc.mobius {
            MobiusPart::Continuous { dof, samples } => {
                assert_eq!(*dof, 2);
                assert!(!samples.is_empty());
                for s in samples {
                    check_fixes(&sf, s);
                }
            }
            MobiusPart::Finite(_) => panic!("single eigenvalue must leave continuous freedom"),
        }
    }

    #[test]
    fn harmonic_spectrum_has_eight_symmetries() {
        // {inf, 0, 1, -1} is the harmonic configuration: its Mobius
        // stabilizer is the dihedral group of order 8.
        let sf = form(vec![
            PencilBlock::Infinite(1),
            fin("-1", 1),
            fin("0", 1),
            fin("1", 1),
        ]);
        let desc = stabilizer(&sf).unwrap();
        let MobiusPart::Finite(elems) = &desc.mobius else {
            panic!("four distinct eigenvalues leave no continuous freedom")
        };
        assert_eq!(elems.len(), 8);
        for el in elems {
            check_fixes(&sf, el);
        }
        // The inversion lambda -> 1/lambda is among them.
        assert!(elems.iter().any(|el| {
            el.map.apply(&ExtEig::Finite(g("2"))) == ExtEig::Finite(g("1/2"))
                && el.map.apply(&ExtEig::Infinite) == ExtEig::Finite(g("0"))
        }));
    }

    #[test]
    fn generic_free_value_keeps_the_klein_group() {
        // {inf, 0, 1, 5}: 5 is in general position, so only the double
        // transpositions survive (they preserve any cross ratio), giving
        // the Klein four-group.
        let sf = form(vec![
            PencilBlock::Infinite(1),
            fin("0", 1),
            fin("1", 1),
            fin("5", 1),
        ]);
        let desc = stabilizer(&sf).unwrap();
        let MobiusPart::Finite(elems) = &desc.mobius else { panic!() };
        assert_eq!(elems.len(), 4);
        assert_eq!(elems.iter().filter(|el| el.map.is_identity()).count(), 1);
        // The swap (inf 0)(1 5) is lambda -> 5/lambda.
        assert!(elems.iter().any(|el| {
            el.map.apply(&ExtEig::Infinite) == ExtEig::Finite(g("0"))
                && el.map.apply(&ExtEig::Finite(g("1"))) == ExtEig::Finite(g("5"))
        }));
        for el in elems {
            check_fixes(&sf, el);
        }
    }

    #[test]
    fn commutant_family_instantiations_fix_the_pair() {
        let sf = form(vec![fin("0", 2), fin("0", 1), PencilBlock::Infinite(1)]);
        let desc = stabilizer(&sf).unwrap();
        let k = desc.commutant_basis.len();
        // J_2(0) + J_1(0) share an eigenvalue: chains interact, so the
        // commutant is bigger than the two Toeplitz triangles alone.
        assert!(k >= 4, "expected interacting chains, got {k} dimensions");
        let vals: Vec<Gaussian> =
            (0..k).map(|i| Gaussian::from_i64(i as i64 % 3 + 1, (i % 2) as i64)).collect();
        let x = desc.commutant_family.0.eval(&vals);
        let z = desc.commutant_family.1.eval(&vals);
        assert_eq!(x.matmul(&sf.e_part), sf.e_part.matmul(&z));
        assert_eq!(x.matmul(&sf.j_part), sf.j_part.matmul(&z));
        if !x.det().is_zero() {
            let s2 = x.invert().unwrap();
            assert_eq!(s2.matmul(&sf.e_part).matmul(&z), sf.e_part);
            assert_eq!(s2.matmul(&sf.j_part).matmul(&z), sf.j_part);
        }
    }

    #[test]
    fn singular_blocks_get_structured_compensation() {
        // GHZ-like standard form: r0, r0, one infinite and one zero
        // eigenvalue; swapping them is a legal symmetry with exact
        // compensators even though the pencil is singular.
        let sf = form(vec![
            PencilBlock::RightSingular(0),
            PencilBlock::RightSingular(0),
            PencilBlock::Infinite(1),
            fin("0", 1),
        ]);
        let desc = stabilizer(&sf).unwrap();
        match &desc.mobius {
            MobiusPart::Continuous { dof, samples } => {
                assert_eq!(*dof, 1);
                // Both the scaling family sample and the swap survive.
                assert_eq!(samples.len(), 2);
                for s in samples {
                    check_fixes(&sf, s);
                }
            }
            MobiusPart::Finite(_) => panic!("two eigenvalues leave one continuous direction"),
        }
    }
}
