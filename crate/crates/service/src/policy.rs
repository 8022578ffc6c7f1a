use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use woe_core::Condition;

/// How conditions are assigned to the tasks of a new session.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ConditionPolicy {
    /// Every task in one condition.
    Fixed { condition: Condition },
    /// One condition per session, drawn uniformly from the list.
    RandomBetween { conditions: Vec<Condition> },
    /// Task order split into two blocks, one condition each. Which block
    /// comes first is drawn from the session seed.
    WithinSubject { conditions: [Condition; 2] },
}

impl Default for ConditionPolicy {
    fn default() -> Self {
        Self::RandomBetween {
            conditions: vec![Condition::C1, Condition::C2, Condition::C3],
        }
    }
}

impl ConditionPolicy {
    pub fn validate(&self) -> Result<(), String> {
        match self {
            Self::RandomBetween { conditions } if conditions.is_empty() => {
                Err("random-between needs at least one condition".into())
            }
            Self::WithinSubject { conditions: [a, b] } if a == b => {
                Err("within-subject needs two different conditions".into())
            }
            _ => Ok(()),
        }
    }

    /// Conditions for `n` tasks in delivery order.
    pub fn assign<R: Rng>(&self, n: usize, rng: &mut R) -> Vec<Condition> {
        match self {
            Self::Fixed { condition } => vec![*condition; n],
            Self::RandomBetween { conditions } => {
                let c = conditions[rng.random_range(0..conditions.len())];
                vec![c; n]
            }
            Self::WithinSubject { conditions } => {
                let mut pair = *conditions;
                pair.shuffle(rng);
                let first = n.div_ceil(2);
                (0..n).map(|i| if i < first { pair[0] } else { pair[1] }).collect()
            }
        }
    }
}

/// `C1`, `random:C1,C2,C3` or `within:C1,C3`.
impl std::str::FromStr for ConditionPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let list = |body: &str| -> Result<Vec<Condition>, String> {
            body.split(',').map(|c| c.trim().parse()).collect()
        };
        let policy = match s.split_once(':') {
            None => Self::Fixed { condition: s.trim().parse()? },
            Some(("random", body)) => Self::RandomBetween { conditions: list(body)? },
            Some(("within", body)) => match list(body)?.as_slice() {
                [a, b] => Self::WithinSubject { conditions: [*a, *b] },
                _ => return Err("within-subject takes exactly two conditions".into()),
            },
            Some((kind, _)) => return Err(format!("unknown policy kind '{kind}'")),
        };
        policy.validate()?;
        Ok(policy)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn parses_policies() {
        assert_eq!("c2".parse(), Ok(ConditionPolicy::Fixed { condition: Condition::C2 }));
        assert_eq!(
            "within:C1,C3".parse(),
            Ok(ConditionPolicy::WithinSubject { conditions: [Condition::C1, Condition::C3] })
        );
        assert!("within:C1".parse::<ConditionPolicy>().is_err());
        assert!("within:C1,C1".parse::<ConditionPolicy>().is_err());
        assert!("sometimes:C1".parse::<ConditionPolicy>().is_err());
    }

    #[test]
    fn within_subject_splits_evenly() {
        let p = ConditionPolicy::WithinSubject { conditions: [Condition::C1, Condition::C3] };
        let mut firsts = std::collections::HashSet::new();
        for seed in 0..20 {
            let c = p.assign(16, &mut ChaCha8Rng::seed_from_u64(seed));
            assert_eq!(c.iter().filter(|&&c| c == Condition::C1).count(), 8);
            assert_eq!(c.iter().filter(|&&c| c == Condition::C3).count(), 8);
            firsts.insert(c[0]);
        }
        assert_eq!(firsts.len(), 2, "block order should be counterbalanced");
    }
}
