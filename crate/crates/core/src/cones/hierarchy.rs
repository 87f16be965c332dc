use super::{check_r, npm_dual_membership, npm_element, npm_search, FamilySpec, MembershipVerdict};
use crate::error::{Error, Result};
use crate::herm::{chacha, random_pure, weyl_bell_basis, Dims, HermMat};

/// Outcome of [`hierarchy_witness`].
#[derive(Debug, Clone)]
pub struct HierarchyWitness {
    /// The separating matrix when `found`, otherwise the last candidate.
    pub x: HermMat,
    /// NPM_{r1}(P)* verdict on `x`.
    pub verdict_r1: MembershipVerdict,
    /// NPM_{r2}(P)* verdict on `x`.
    pub verdict_r2: MembershipVerdict,
    pub found: bool,
    pub candidates_tried: usize,
    /// `g(r2) − g(r1)` for the winning candidate, where `g(r)` is the
    /// smallest tested `Tr(y N)` over NPM_r(P).
    pub window: f64,
}

const MIN_WINDOW: f64 = 1e-6;

/// Search for `x` with `x ∈ NPM_{r2}(P)*` but `x ∉ NPM_{r1}(P)*`, showing
/// the dual constraint sets differ.
///
/// Candidates `y` are tried in order: `N(r1;{E_k})` for the first basis of
/// the family (or the Weyl basis for `FullMeop`), then Haar-random pure
/// projectors. Since `Tr N = D/2`, shifting by `tI` moves both minima by the
/// same amount, so `x = y + tI` with `t = −(g(r1)+g(r2))/D` lands between
/// them whenever `g(r2) > g(r1)`. Exhausting `budget` is reported, not fatal.
pub fn hierarchy_witness(
    r1: f64,
    r2: f64,
    family: &FamilySpec,
    dims: Dims,
    seed: u64,
    budget: usize,
) -> Result<HierarchyWitness> {
    check_r(r1, dims)?;
    check_r(r2, dims)?;
    family.check_dims(dims)?;
    if r2 > r1 {
        return Err(Error::ParameterOutOfRange {
            name: "r2",
            value: r2,
            lo: 0.0,
            hi: r1,
        });
    }
    let n = dims.total() as f64;
    let first = match family {
        FamilySpec::Finite(bases) => bases[0].clone(),
        FamilySpec::FullMeop { .. } => weyl_bell_basis(dims),
    };
    let mut rng = chacha(seed);
    let mut last = None;
    for k in 0..budget.max(1) {
        let y = if k == 0 {
            npm_element(r1, &first)?
        } else {
            HermMat::projector(&random_pure(dims.total(), &mut rng))
        };
        let g1 = npm_search(&y, r1, family)?.min_value;
        let g2 = npm_search(&y, r2, family)?.min_value;
        let window = g2 - g1;
        let x = &y + &HermMat::identity(dims.total()).scale(-(g1 + g2) / n);
        if window > MIN_WINDOW {
            let verdict_r1 = npm_dual_membership(&x, r1, family)?;
            let verdict_r2 = npm_dual_membership(&x, r2, family)?;
            if verdict_r1.is_outside() && verdict_r2.is_inside() {
                return Ok(HierarchyWitness {
                    x,
                    verdict_r1,
                    verdict_r2,
                    found: true,
                    candidates_tried: k + 1,
                    window,
                });
            }
        }
        last = Some((x, window));
    }
    let (x, window) = last.expect("at least one candidate");
    Ok(HierarchyWitness {
        verdict_r1: npm_dual_membership(&x, r1, family)?,
        verdict_r2: npm_dual_membership(&x, r2, family)?,
        x,
        found: false,
        candidates_tried: budget.max(1),
        window,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cones::r0;

    #[test]
    fn separates_r0_from_half_r0_with_bell_family() {
        let dims = Dims::new(2).unwrap();
        let fam = FamilySpec::finite(vec![weyl_bell_basis(dims)]).unwrap();
        let r1 = r0(dims);
        let h = hierarchy_witness(r1, r1 / 2.0, &fam, dims, 0, 10_000).unwrap();
        assert!(h.found);
        assert!(h.verdict_r1.is_outside() && h.verdict_r2.is_certified_inside());
        let w = h.verdict_r1.witness.as_ref().unwrap();
        assert!((w.evaluate(&h.x) - w.violation).abs() < 1e-12);
    }

    #[test]
    fn equal_parameters_give_no_witness() {
        let dims = Dims::new(2).unwrap();
        let fam = FamilySpec::finite(vec![weyl_bell_basis(dims)]).unwrap();
        let h = hierarchy_witness(0.1, 0.1, &fam, dims, 0, 20).unwrap();
        assert!(!h.found);
        assert_eq!(h.verdict_r1.status, h.verdict_r2.status);
        assert!(hierarchy_witness(0.1, 0.2, &fam, dims, 0, 20).is_err());
    }
}
