use num_bigint::BigInt;
use num_traits::{One, ToPrimitive};

use super::DensityError;
use crate::endo::AutoMap;
use crate::nilgroup::GroupPoint;
use crate::ratcore::{smith_normal_form, IntMatrix, Rat};

/// Largest transversal checked pairwise for inequivalence.
const PAIRWISE_CHECK_LIMIT: usize = 512;
/// Largest covering degree for which a transversal is materialized.
const MAX_INDEX: u64 = 10_000_000;

/// A transversal of `Γ / Ψ(Γ)`: one lattice element per left coset `γΨ(Γ)`.
#[derive(Clone, Debug)]
pub struct CosetSystem {
    pub representatives: Vec<GroupPoint<Rat>>,
    pub index: BigInt,
}

impl CosetSystem {
    pub fn len(&self) -> usize {
        self.representatives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.representatives.is_empty()
    }
}

/// Integer residues `U^{-1} r` for `r` in the Smith box of `block`, i.e. a
/// transversal of `Z^n / block Z^n`.
pub(crate) fn layer_residues(block: &IntMatrix) -> Result<Vec<Vec<BigInt>>, DensityError> {
    let snf = smith_normal_form(block).map_err(|_| DensityError::SingularBlock)?;
    let u_inv = snf
        .u
        .to_rat()
        .inverse()
        .map_err(|_| DensityError::SingularBlock)?
        .to_int()
        .expect("unimodular inverse is integral");
    let sizes: Vec<u64> = snf
        .d
        .iter()
        .map(|x| x.to_u64().ok_or(DensityError::IndexTooLarge))
        .collect::<Result<_, _>>()?;
    let total: u64 = sizes.iter().product();
    let mut out = Vec::with_capacity(total as usize);
    for mut idx in 0..total {
        let r: Vec<BigInt> = sizes
            .iter()
            .map(|&s| {
                let v = idx % s;
                idx /= s;
                BigInt::from(v)
            })
            .collect();
        out.push(u_inv.mul_vec(&r));
    }
    Ok(out)
}

/// Layered transversal: Smith residues of each block `ψ_i`, composed as a
/// second-kind product with the deepest layer last.
pub fn coset_representatives(map: &AutoMap) -> Result<CosetSystem, DensityError> {
    let blocks = map.induced_blocks()?;
    let group = map.group();
    let d = map.dim();
    let total = blocks
        .iter()
        .map(|b| b.abs_det().expect("square block"))
        .fold(BigInt::one(), |a, b| a * b);
    if total > BigInt::from(MAX_INDEX) {
        return Err(DensityError::IndexTooLarge);
    }
    let layers: Vec<Vec<Vec<BigInt>>> =
        blocks.iter().map(layer_residues).collect::<Result<_, _>>()?;
    let index = total;

    let mut combos: Vec<Vec<BigInt>> = vec![Vec::with_capacity(d)];
    for layer in &layers {
        let mut next = Vec::with_capacity(combos.len() * layer.len());
        for prefix in &combos {
            for r in layer {
                let mut v = prefix.clone();
                v.extend(r.iter().cloned());
                next.push(v);
            }
        }
        combos = next;
    }
    let representatives: Vec<GroupPoint<Rat>> = combos
        .into_iter()
        .map(|t| {
            let t: Vec<Rat> = t.into_iter().map(Rat::from_integer).collect();
            group.from_second_kind(&t)
        })
        .collect();

    if BigInt::from(representatives.len()) != index {
        return Err(DensityError::CosetCount {
            found: representatives.len(),
            expected: index.to_string(),
        });
    }
    let system = CosetSystem { representatives, index };
    if system.len() <= PAIRWISE_CHECK_LIMIT {
        for i in 0..system.len() {
            for j in i + 1..system.len() {
                if equivalent(map, &system.representatives[i], &system.representatives[j]) {
                    return Err(DensityError::CosetCount {
                        found: system.len(),
                        expected: system.index.to_string(),
                    });
                }
            }
        }
    }
    Ok(system)
}

/// `a Ψ(Γ) = b Ψ(Γ)`, decided exactly via `Ψ^{-1}(a^{-1} b) ∈ Γ`.
pub fn equivalent(map: &AutoMap, a: &GroupPoint<Rat>, b: &GroupPoint<Rat>) -> bool {
    let g = map.group();
    let q = g.mul(&g.inv(a), b);
    let pre = map.apply_group_inverse(&q);
    g.in_lattice(&pre).expect("exact point")
}
