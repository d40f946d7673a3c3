//! The solution space: the smallest affine space whose valid lattice points are
//! exactly the states satisfying a conjunction of substate formulas.

use num_traits::{One, Zero};
use thiserror::Error;

use crate::linalg::{rat, AffineSpace, Rat, RatMatrix, RatVector};
use crate::model::{PropertySpec, SubstateFormula};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SolutionSpaceError {
    #[error("substate formulas {first} and {second} contradict each other")]
    Contradictory { first: usize, second: usize },
    #[error("the conjunction of substate formulas has no common solution")]
    EmptyIntersection,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PairRelation {
    Independent,
    Redundant,
    Contradictory,
}

/// `n[target] = 1`, `n[k] = −α_k`, zero elsewhere.
pub fn normal_vector(f: &SubstateFormula, m: usize) -> RatVector {
    let mut n = vec![Rat::zero(); m];
    n[f.target] = Rat::one();
    for (&k, a) in &f.coeffs {
        n[k] = -a.clone();
    }
    n
}

/// Hyperplane of a single substate formula: one generator per non-target species.
pub fn substate_space(f: &SubstateFormula, m: usize) -> AffineSpace {
    let generators: Vec<RatVector> = (0..m)
        .filter(|&k| k != f.target)
        .map(|k| {
            let mut v = vec![Rat::zero(); m];
            v[k] = Rat::one();
            if let Some(a) = f.coeffs.get(&k) {
                v[f.target] = a.clone();
            }
            v
        })
        .collect();
    let mut offset = vec![Rat::zero(); m];
    offset[f.target] = rat(f.beta as i64);
    AffineSpace::from_generators(m, &generators, offset)
}

fn formula_dim(f: &SubstateFormula) -> usize {
    f.coeffs
        .keys()
        .copied()
        .chain([f.target])
        .max()
        .unwrap_or(0)
        + 1
}

/// Parallel normals mean the hyperplanes either coincide or never meet.
pub fn classify_pair(fa: &SubstateFormula, fb: &SubstateFormula) -> PairRelation {
    let m = formula_dim(fa).max(formula_dim(fb));
    let na = normal_vector(fa, m);
    let nb = normal_vector(fb, m);
    if RatMatrix::from_columns(m, &[na.clone(), nb.clone()]).rank() > 1 {
        return PairRelation::Independent;
    }
    // nb = λ·na; na[target_a] = 1
    let lambda = nb[fa.target].clone();
    if rat(fb.beta as i64) == lambda * rat(fa.beta as i64) {
        PairRelation::Redundant
    } else {
        PairRelation::Contradictory
    }
}

#[derive(Clone, Debug)]
pub struct SolutionSpace {
    space: AffineSpace,
    normals: Vec<RatVector>,
    formulas: Vec<SubstateFormula>,
}

impl SolutionSpace {
    pub fn space(&self) -> &AffineSpace {
        &self.space
    }

    /// Normal vectors of the formulas that survived redundancy elimination.
    pub fn normals(&self) -> &[RatVector] {
        &self.normals
    }

    pub fn formulas(&self) -> &[SubstateFormula] {
        &self.formulas
    }

    /// Particular solution `s_p`.
    pub fn particular(&self) -> &RatVector {
        self.space.offset()
    }

    /// Basis matrix `M_s`.
    pub fn basis(&self) -> &RatMatrix {
        self.space.generators()
    }
}

/// Intersects the hyperplanes of every substate formula of `prop` in `Q^m`.
pub fn build_solution_space(
    prop: &PropertySpec,
    m: usize,
) -> Result<SolutionSpace, SolutionSpaceError> {
    let mut kept: Vec<(usize, &SubstateFormula)> = Vec::new();
    'outer: for (i, f) in prop.substates.iter().enumerate() {
        for &(j, g) in &kept {
            match classify_pair(g, f) {
                PairRelation::Independent => {}
                PairRelation::Redundant => continue 'outer,
                PairRelation::Contradictory => {
                    return Err(SolutionSpaceError::Contradictory {
                        first: j,
                        second: i,
                    })
                }
            }
        }
        kept.push((i, f));
    }

    let mut space = AffineSpace::full(m);
    for (_, f) in &kept {
        space = space
            .intersect(&substate_space(f, m))
            .ok_or(SolutionSpaceError::EmptyIntersection)?;
    }
    // express the particular solution with don't-cares at zero when possible
    let space = canonical_offset(space);
    let formulas: Vec<SubstateFormula> = kept.iter().map(|(_, f)| (*f).clone()).collect();
    let normals = formulas.iter().map(|f| normal_vector(f, m)).collect();
    Ok(SolutionSpace {
        space,
        normals,
        formulas,
    })
}

/// Replaces the offset by the point of the space closest to the origin.
fn canonical_offset(space: AffineSpace) -> AffineSpace {
    let r = space.residual(&vec![Rat::zero(); space.ambient()]);
    if r.eps == *space.offset() {
        return space;
    }
    AffineSpace::new(space.generators().clone(), r.eps)
}

/// True when `V_Ψ ∩ s0_space` is a single point.
pub fn is_single_solution(sol: &SolutionSpace, s0_space: &AffineSpace) -> bool {
    sol.space.intersect(s0_space).is_some_and(|s| s.dim() == 0)
}
