//! Ranking with redundancy between entities.
//!
//! An entity shown below a similar one is worth less: its residual utility
//! `U_r` replaces `U` in the cascade objective while click and abandonment
//! behaviour stay per-entity. With binary similarity and identical entity
//! parameters, the best ranking places a maximum independent set of the
//! similarity graph at the top, so exact optimisation is NP-hard and
//! [`brute_force_diversity`] only runs on small inputs.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ClickParams, Entity, Ranking};
use crate::ranking::BRUTE_FORCE_MAX;

/// Largest graph [`max_independent_set_bruteforce`] will enumerate.
pub const INDEPENDENT_SET_MAX: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResidualRule {
    /// `U_r = 0` if anything above has similarity 1, otherwise `U`.
    ZeroIfDuplicateAbove,
    /// `U_r = U · Π_{above} (1 − sim)`. Extension for graded similarity.
    LinearDiscount,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimilarityMode {
    Binary,
    General,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiversityInstance {
    entities: Vec<Entity>,
    similarity: Vec<Vec<f64>>,
    mode: SimilarityMode,
    rule: ResidualRule,
}

impl DiversityInstance {
    /// Validates shape, symmetry, unit diagonal and entry range. In binary
    /// mode every entry must be exactly 0 or 1.
    pub fn new(
        entities: Vec<Entity>,
        similarity: Vec<Vec<f64>>,
        mode: SimilarityMode,
        rule: ResidualRule,
    ) -> Result<Self> {
        let n = entities.len();
        if n == 0 {
            return Err(Error::Empty("entity list"));
        }
        check_square(&similarity, n)?;
        for i in 0..n {
            if similarity[i][i] != 1.0 {
                return Err(Error::invalid(
                    format!("similarity[{i}][{i}]"),
                    "diagonal must be 1",
                ));
            }
            for j in 0..n {
                let s = similarity[i][j];
                let field = || format!("similarity[{i}][{j}]");
                if !(0.0..=1.0).contains(&s) {
                    return Err(Error::invalid(
                        field(),
                        format!("must lie in [0, 1], got {s}"),
                    ));
                }
                if mode == SimilarityMode::Binary && s != 0.0 && s != 1.0 {
                    return Err(Error::invalid(field(), format!("must be 0 or 1, got {s}")));
                }
                if s != similarity[j][i] {
                    return Err(Error::invalid(field(), "matrix must be symmetric"));
                }
            }
        }
        Ok(Self {
            entities,
            similarity,
            mode,
            rule,
        })
    }

    /// No two entities interact.
    pub fn independent(entities: Vec<Entity>, rule: ResidualRule) -> Result<Self> {
        let n = entities.len();
        let similarity = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        Self::new(entities, similarity, SimilarityMode::Binary, rule)
    }

    pub fn entities(&self) -> &[Entity] {
        &self.entities
    }

    pub fn similarity(&self) -> &[Vec<f64>] {
        &self.similarity
    }

    pub fn mode(&self) -> SimilarityMode {
        self.mode
    }

    pub fn rule(&self) -> ResidualRule {
        self.rule
    }

    pub fn len(&self) -> usize {
        self.entities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entities.is_empty()
    }

    /// Multiplier on `U(item)` given whether each entity is already placed above.
    fn residual_factor(&self, item: usize, placed: &[bool]) -> f64 {
        let row = &self.similarity[item];
        match self.rule {
            ResidualRule::ZeroIfDuplicateAbove => {
                let dup = placed
                    .iter()
                    .enumerate()
                    .any(|(j, &p)| p && j != item && row[j] == 1.0);
                if dup {
                    0.0
                } else {
                    1.0
                }
            }
            ResidualRule::LinearDiscount => placed
                .iter()
                .enumerate()
                .filter(|&(j, &p)| p && j != item)
                .map(|(j, _)| 1.0 - row[j])
                .product(),
        }
    }

    /// Residual utility at each position of `order`.
    pub fn residual_utilities(&self, order: &[usize]) -> Vec<f64> {
        let mut placed = vec![false; self.len()];
        order
            .iter()
            .map(|&idx| {
                let u = self.entities[idx].utility() * self.residual_factor(idx, &placed);
                placed[idx] = true;
                u
            })
            .collect()
    }
}

fn check_square(matrix: &[Vec<f64>], n: usize) -> Result<()> {
    if matrix.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: matrix.len(),
        });
    }
    for row in matrix {
        if row.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: row.len(),
            });
        }
    }
    Ok(())
}

/// `Σ U_r(e_i) · P_c(e_i)` over the ranking.
pub fn residual_expected_utility(instance: &DiversityInstance, ranking: &Ranking) -> Result<f64> {
    if ranking.len() != instance.len() {
        return Err(Error::DimensionMismatch {
            expected: instance.len(),
            found: ranking.len(),
        });
    }
    Ok(instance
        .residual_utilities(ranking.order())
        .iter()
        .zip(ranking.click_probs())
        .map(|(u, pc)| u * pc)
        .sum())
}

fn order_value(instance: &DiversityInstance, order: &[usize]) -> Result<(Ranking, f64)> {
    let ranking = Ranking::new(instance.entities(), order.to_vec())?;
    let value = residual_expected_utility(instance, &ranking)?;
    Ok((ranking, value))
}

/// Exact optimum over all orderings; lexicographically smallest among ties.
pub fn brute_force_diversity(instance: &DiversityInstance) -> Result<(Ranking, f64)> {
    let n = instance.len();
    if n > BRUTE_FORCE_MAX {
        return Err(Error::TooLarge {
            what: "brute-force diversity ranking",
            size: n,
            max: BRUTE_FORCE_MAX,
        });
    }
    let best = (0..n)
        .into_par_iter()
        .map(|first| {
            let mut search = DiversitySearch {
                instance,
                placed: vec![false; n],
                prefix: Vec::with_capacity(n),
                best_value: f64::NEG_INFINITY,
                best_order: Vec::new(),
            };
            search.visit(first, 0.0, 1.0);
            (search.best_value, search.best_order)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold((f64::NEG_INFINITY, Vec::new()), |acc, cand| {
            if cand.0 > acc.0 {
                cand
            } else {
                acc
            }
        });
    order_value(instance, &best.1)
}

struct DiversitySearch<'a> {
    instance: &'a DiversityInstance,
    placed: Vec<bool>,
    prefix: Vec<usize>,
    best_value: f64,
    best_order: Vec<usize>,
}

impl DiversitySearch<'_> {
    fn visit(&mut self, item: usize, value: f64, view: f64) {
        let e = &self.instance.entities[item];
        let residual = e.utility() * self.instance.residual_factor(item, &self.placed);
        let value = value + residual * e.click_prob() * view;
        let view = view * e.continuation();
        self.placed[item] = true;
        self.prefix.push(item);
        if self.prefix.len() == self.placed.len() {
            if value > self.best_value {
                self.best_value = value;
                self.best_order.clone_from(&self.prefix);
            }
        } else {
            for next in 0..self.placed.len() {
                if !self.placed[next] {
                    self.visit(next, value, view);
                }
            }
        }
        self.prefix.pop();
        self.placed[item] = false;
    }
}

/// Repeatedly appends the entity with the largest `U_r · C / (C + γ)` given
/// what is already placed. No approximation guarantee.
pub fn greedy_diversity(instance: &DiversityInstance) -> Result<(Ranking, f64)> {
    let n = instance.len();
    let mut placed = vec![false; n];
    let mut order = Vec::with_capacity(n);
    for _ in 0..n {
        let mut best: Option<(usize, f64)> = None;
        for cand in (0..n).filter(|&i| !placed[i]) {
            let e = &instance.entities[cand];
            let score = e.utility() * instance.residual_factor(cand, &placed) * e.click_share();
            if best.is_none_or(|(_, s)| score > s) {
                best = Some((cand, score));
            }
        }
        let (pick, _) = best.expect("an unplaced entity remains");
        placed[pick] = true;
        order.push(pick);
    }
    order_value(instance, &order)
}

/// Entities in `adjacency` order sharing `(utility, click_prob, abandon_prob)`,
/// with the adjacency as binary similarity under the duplicate rule.
pub fn instance_from_graph(
    adjacency: &[Vec<u8>],
    utility: f64,
    click_prob: f64,
    abandon_prob: f64,
) -> Result<DiversityInstance> {
    check_adjacency(adjacency)?;
    let n = adjacency.len();
    let entities = (0..n)
        .map(|i| Entity::new(format!("v{i}"), utility, click_prob, abandon_prob))
        .collect::<Result<Vec<_>>>()?;
    let similarity = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        1.0
                    } else {
                        f64::from(adjacency[i][j])
                    }
                })
                .collect()
        })
        .collect();
    DiversityInstance::new(
        entities,
        similarity,
        SimilarityMode::Binary,
        ResidualRule::ZeroIfDuplicateAbove,
    )
}

pub fn check_adjacency(adjacency: &[Vec<u8>]) -> Result<()> {
    let n = adjacency.len();
    if n == 0 {
        return Err(Error::Empty("adjacency matrix"));
    }
    for (i, row) in adjacency.iter().enumerate() {
        if row.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: row.len(),
            });
        }
        for (j, &a) in row.iter().enumerate() {
            let field = || format!("adjacency[{i}][{j}]");
            if a > 1 {
                return Err(Error::invalid(field(), "entries must be 0 or 1"));
            }
            if i == j && a != 0 {
                return Err(Error::invalid(field(), "diagonal must be 0"));
            }
            if a != adjacency[j][i] {
                return Err(Error::invalid(field(), "matrix must be symmetric"));
            }
        }
    }
    Ok(())
}

/// A maximum independent set by subset enumeration, as sorted vertex indices.
/// Among sets of maximum size the lexicographically smallest is returned.
pub fn max_independent_set_bruteforce(adjacency: &[Vec<u8>]) -> Result<Vec<usize>> {
    check_adjacency(adjacency)?;
    let n = adjacency.len();
    if n > INDEPENDENT_SET_MAX {
        return Err(Error::TooLarge {
            what: "independent set enumeration",
            size: n,
            max: INDEPENDENT_SET_MAX,
        });
    }
    let neighbours: Vec<u32> = adjacency
        .iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .filter(|&(_, &a)| a == 1)
                .fold(0u32, |m, (j, _)| m | (1 << j))
        })
        .collect();
    let mut best: Vec<usize> = Vec::new();
    for mask in 0u32..(1u32 << n) {
        let size = mask.count_ones() as usize;
        if size < best.len() {
            continue;
        }
        let independent = (0..n).all(|v| mask & (1 << v) == 0 || neighbours[v] & mask == 0);
        if !independent {
            continue;
        }
        let set: Vec<usize> = (0..n).filter(|&v| mask & (1 << v) != 0).collect();
        if size > best.len() || set < best {
            best = set;
        }
    }
    Ok(best)
}

/// Entities whose residual utility is nonzero under `order`, as sorted indices.
pub fn nonzero_residual_set(instance: &DiversityInstance, order: &[usize]) -> Vec<usize> {
    let mut set: Vec<usize> = order
        .iter()
        .zip(instance.residual_utilities(order))
        .filter(|&(_, u)| u > 0.0)
        .map(|(&i, _)| i)
        .collect();
    set.sort_unstable();
    set
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::expected_utility;
    use crate::ranking::rank_by_ce;

    fn e(id: &str, u: f64, c: f64, g: f64) -> Entity {
        Entity::new(id, u, c, g).unwrap()
    }

    /// Entities x, x', y where x and x' are the same item.
    fn xxy() -> DiversityInstance {
        let ents = vec![
            e("x", 1.0, 0.5, 0.0),
            e("x", 1.0, 0.5, 0.0),
            e("y", 1.0, 0.5, 0.0),
        ];
        let sim = vec![
            vec![1.0, 1.0, 0.0],
            vec![1.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ];
        DiversityInstance::new(
            ents,
            sim,
            SimilarityMode::Binary,
            ResidualRule::ZeroIfDuplicateAbove,
        )
        .unwrap()
    }

    fn path3() -> Vec<Vec<u8>> {
        vec![vec![0, 1, 0], vec![1, 0, 1], vec![0, 1, 0]]
    }

    fn triangle() -> Vec<Vec<u8>> {
        vec![vec![0, 1, 1], vec![1, 0, 1], vec![1, 1, 0]]
    }

    #[test]
    fn no_interaction_matches_plain_objective() {
        let ents = vec![
            e("a", 1.0, 0.4, 0.1),
            e("b", 2.0, 0.3, 0.2),
            e("c", 0.5, 0.9, 0.0),
        ];
        let inst = DiversityInstance::independent(ents.clone(), ResidualRule::ZeroIfDuplicateAbove)
            .unwrap();
        for order in [vec![0, 1, 2], vec![2, 0, 1], vec![1, 2, 0]] {
            let r = Ranking::new(&ents, order).unwrap();
            assert_eq!(
                residual_expected_utility(&inst, &r).unwrap(),
                expected_utility(&ents, &r).unwrap().expected_utility
            );
        }
    }

    #[test]
    fn multiset_by_hand() {
        let inst = xxy();
        let xyx = Ranking::new(inst.entities(), vec![0, 2, 1]).unwrap();
        let xxy_order = Ranking::new(inst.entities(), vec![0, 1, 2]).unwrap();
        assert_eq!(residual_expected_utility(&inst, &xyx).unwrap(), 0.75);
        assert_eq!(residual_expected_utility(&inst, &xxy_order).unwrap(), 0.625);
        assert_eq!(inst.residual_utilities(&[0, 1, 2]), vec![1.0, 0.0, 1.0]);
    }

    #[test]
    fn brute_and_greedy_on_multiset() {
        let inst = xxy();
        let (r, v) = brute_force_diversity(&inst).unwrap();
        assert_eq!(v, 0.75);
        assert_eq!(r.order(), &[0, 2, 1]);
        let (_, g) = greedy_diversity(&inst).unwrap();
        assert_eq!(g, 0.75);
    }

    #[test]
    fn no_interaction_solvers_match_ce() {
        let ents = vec![
            e("a", 1.0, 0.4, 0.1),
            e("b", 2.0, 0.3, 0.2),
            e("c", 0.5, 0.9, 0.0),
        ];
        let inst =
            DiversityInstance::independent(ents.clone(), ResidualRule::LinearDiscount).unwrap();
        let ce = rank_by_ce(&ents).unwrap();
        let (g, _) = greedy_diversity(&inst).unwrap();
        assert_eq!(g.order(), ce.order());
        let (b, bv) = brute_force_diversity(&inst).unwrap();
        let ce_value = expected_utility(&ents, &ce).unwrap().expected_utility;
        assert!((bv - ce_value).abs() < 1e-12);
        assert_eq!(b.order(), ce.order());
    }

    #[test]
    fn linear_discount_by_hand() {
        let ents = vec![
            e("a", 1.0, 0.5, 0.0),
            e("b", 2.0, 0.5, 0.0),
            e("c", 4.0, 0.5, 0.0),
        ];
        let sim = vec![
            vec![1.0, 0.5, 0.25],
            vec![0.5, 1.0, 0.0],
            vec![0.25, 0.0, 1.0],
        ];
        let inst = DiversityInstance::new(
            ents,
            sim,
            SimilarityMode::General,
            ResidualRule::LinearDiscount,
        )
        .unwrap();
        // c first (4), b unaffected by c (2), a discounted by 0.75 * 0.5
        assert_eq!(inst.residual_utilities(&[2, 1, 0]), vec![4.0, 2.0, 0.375]);
    }

    #[test]
    fn path_graph_picks_endpoints() {
        let inst = instance_from_graph(&path3(), 1.0, 0.5, 0.1).unwrap();
        let (r, _) = brute_force_diversity(&inst).unwrap();
        let mut top: Vec<usize> = r.order()[..2].to_vec();
        top.sort_unstable();
        assert_eq!(top, vec![0, 2]);
        assert_eq!(
            max_independent_set_bruteforce(&path3()).unwrap(),
            vec![0, 2]
        );
        assert_eq!(nonzero_residual_set(&inst, r.order()), vec![0, 2]);
    }

    #[test]
    fn triangle_has_one_useful_entity() {
        let inst = instance_from_graph(&triangle(), 1.0, 0.5, 0.1).unwrap();
        let (r, _) = brute_force_diversity(&inst).unwrap();
        assert_eq!(nonzero_residual_set(&inst, r.order()).len(), 1);
        assert_eq!(
            max_independent_set_bruteforce(&triangle()).unwrap().len(),
            1
        );
    }

    #[test]
    fn edgeless_graph_keeps_every_utility() {
        let adj = vec![vec![0u8; 4]; 4];
        let inst = instance_from_graph(&adj, 2.0, 0.3, 0.3).unwrap();
        for order in [[0, 1, 2, 3], [3, 1, 0, 2]] {
            assert_eq!(inst.residual_utilities(&order), vec![2.0; 4]);
        }
        let five = vec![vec![0u8; 5]; 5];
        assert_eq!(
            max_independent_set_bruteforce(&five).unwrap(),
            vec![0, 1, 2, 3, 4]
        );
    }

    #[test]
    fn independent_set_tie_break() {
        // 4-cycle 0-1-2-3-0: {0,2} and {1,3} both maximum.
        let c4 = vec![
            vec![0, 1, 0, 1],
            vec![1, 0, 1, 0],
            vec![0, 1, 0, 1],
            vec![1, 0, 1, 0],
        ];
        assert_eq!(max_independent_set_bruteforce(&c4).unwrap(), vec![0, 2]);
    }

    #[test]
    fn validation_errors() {
        let ents = vec![e("a", 1.0, 0.5, 0.0), e("b", 1.0, 0.5, 0.0)];
        let asym = vec![vec![1.0, 1.0], vec![0.0, 1.0]];
        assert!(DiversityInstance::new(
            ents.clone(),
            asym,
            SimilarityMode::Binary,
            ResidualRule::ZeroIfDuplicateAbove
        )
        .is_err());
        let graded = vec![vec![1.0, 0.5], vec![0.5, 1.0]];
        assert!(DiversityInstance::new(
            ents.clone(),
            graded.clone(),
            SimilarityMode::Binary,
            ResidualRule::ZeroIfDuplicateAbove
        )
        .is_err());
        assert!(DiversityInstance::new(
            ents.clone(),
            graded,
            SimilarityMode::General,
            ResidualRule::LinearDiscount
        )
        .is_ok());
        let wrong = vec![vec![1.0]];
        assert!(matches!(
            DiversityInstance::new(
                ents.clone(),
                wrong,
                SimilarityMode::Binary,
                ResidualRule::ZeroIfDuplicateAbove
            ),
            Err(Error::DimensionMismatch { .. })
        ));
        let bad_diag = vec![vec![0.0, 0.0], vec![0.0, 1.0]];
        assert!(DiversityInstance::new(
            ents,
            bad_diag,
            SimilarityMode::General,
            ResidualRule::LinearDiscount
        )
        .is_err());

        assert!(check_adjacency(&[vec![1]]).is_err());
        assert!(check_adjacency(&[vec![0, 1], vec![0, 0]]).is_err());
        assert!(check_adjacency(&[vec![0, 2], vec![2, 0]]).is_err());
    }

    #[test]
    fn ranking_dimension_mismatch() {
        let inst = xxy();
        let ents = vec![e("a", 1.0, 0.5, 0.0)];
        let r = Ranking::identity(&ents).unwrap();
        assert!(residual_expected_utility(&inst, &r).is_err());
    }

    #[test]
    fn size_guards() {
        let inst = instance_from_graph(&vec![vec![0u8; 12]; 12], 1.0, 0.5, 0.1).unwrap();
        assert!(matches!(
            brute_force_diversity(&inst),
            Err(Error::TooLarge { size: 12, .. })
        ));
        assert!(greedy_diversity(&inst).is_ok());
        assert!(max_independent_set_bruteforce(&vec![vec![0u8; 21]; 21]).is_err());
    }
}
