//! Simple (coalition) games and the boolean aggregation they induce.
//!
//! Players are numbered `0..player_count`. A coalition is a bitmask with bit
//! `i` set when player `i` belongs to it. The winning family is stored
//! explicitly as a lookup table over all `2^p` coalitions.

use std::fmt;

use crate::error::{Error, Result};

/// Largest supported player count.
pub const MAX_PLAYERS: usize = 16;

pub type Coalition = u32;

/// A failed axiom, with the offending coalitions where relevant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    /// The grand coalition is losing.
    GrandCoalitionLosing,
    /// The empty coalition is winning.
    EmptyCoalitionWinning,
    /// `subset` is winning while its superset `superset` is losing.
    NotMonotone { subset: Coalition, superset: Coalition },
    /// A listed coalition names a player outside the game, or the player
    /// count itself is out of range.
    Malformed(String),
}

impl Violation {
    /// Axiom number (1: grand coalition wins, 2: empty coalition loses,
    /// 3: monotonicity).
    pub fn axiom(&self) -> u8 {
        match self {
            Violation::GrandCoalitionLosing => 1,
            Violation::EmptyCoalitionWinning => 2,
            Violation::NotMonotone { .. } => 3,
            Violation::Malformed(_) => 0,
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::GrandCoalitionLosing => {
                write!(f, "axiom 1 violated: the grand coalition is not winning")
            }
            Violation::EmptyCoalitionWinning => {
                write!(f, "axiom 2 violated: the empty coalition is winning")
            }
            Violation::NotMonotone { subset, superset } => write!(
                f,
                "axiom 3 (monotonicity) violated: {} is winning but its superset {} is losing",
                fmt_coalition(*subset),
                fmt_coalition(*superset)
            ),
            Violation::Malformed(msg) => write!(f, "malformed game: {msg}"),
        }
    }
}

/// Formats a coalition with 1-based player numbers, e.g. `{1,3}`.
pub fn fmt_coalition(c: Coalition) -> String {
    let members: Vec<String> = members(c).map(|i| (i + 1).to_string()).collect();
    format!("{{{}}}", members.join(","))
}

/// Player indices contained in `c`.
pub fn members(c: Coalition) -> impl Iterator<Item = usize> {
    (0..32).filter(move |i| c >> i & 1 == 1)
}

/// Checks the three axioms on an explicit winning table indexed by coalition.
pub fn validate_table(player_count: usize, winning: &[bool]) -> std::result::Result<(), Violation> {
    let grand = grand_coalition(player_count);
    if !winning[grand as usize] {
        return Err(Violation::GrandCoalitionLosing);
    }
    if winning[0] {
        return Err(Violation::EmptyCoalitionWinning);
    }
    // Monotone iff no winning coalition has a losing one-player extension.
    for c in 0..=grand {
        if !winning[c as usize] {
            continue;
        }
        for i in 0..player_count {
            let bigger = c | 1 << i;
            if !winning[bigger as usize] {
                return Err(Violation::NotMonotone {
                    subset: c,
                    superset: bigger,
                });
            }
        }
    }
    Ok(())
}

/// Checks the axioms for a family given as a list of winning coalitions.
pub fn validate(player_count: usize, winning: &[Coalition]) -> std::result::Result<(), Violation> {
    let table = table_from_list(player_count, winning).map_err(|e| Violation::Malformed(e.to_string()))?;
    validate_table(player_count, &table)
}

fn grand_coalition(player_count: usize) -> Coalition {
    ((1u64 << player_count) - 1) as Coalition
}

fn table_from_list(player_count: usize, winning: &[Coalition]) -> Result<Vec<bool>> {
    check_player_count(player_count)?;
    let grand = grand_coalition(player_count);
    let mut table = vec![false; 1 << player_count];
    for &c in winning {
        if c & !grand != 0 {
            return Err(Error::InvalidGame(format!(
                "coalition {} names a player outside 1..={player_count}",
                fmt_coalition(c)
            )));
        }
        table[c as usize] = true;
    }
    Ok(table)
}

fn check_player_count(player_count: usize) -> Result<()> {
    if player_count == 0 || player_count > MAX_PLAYERS {
        return Err(Error::InvalidGame(format!(
            "player count {player_count} outside 1..={MAX_PLAYERS}"
        )));
    }
    Ok(())
}

/// One boolean declaration per player.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VoteVector(Vec<bool>);

impl VoteVector {
    pub fn new(bits: Vec<bool>) -> Self {
        Self(bits)
    }

    pub fn from_mask(mask: Coalition, player_count: usize) -> Self {
        Self((0..player_count).map(|i| mask >> i & 1 == 1).collect())
    }

    /// The set of players voting 1.
    pub fn mask(&self) -> Coalition {
        self.0
            .iter()
            .enumerate()
            .fold(0, |m, (i, &b)| if b { m | 1 << i } else { m })
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// A simple game satisfying the three axioms. Construction validates, so
/// every value of this type is a valid game.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimpleGame {
    player_count: usize,
    winning: Vec<bool>,
}

impl SimpleGame {
    pub fn from_coalitions(player_count: usize, winning: &[Coalition]) -> Result<Self> {
        let table = table_from_list(player_count, winning)?;
        Self::from_table(player_count, table)
    }

    pub fn from_table(player_count: usize, winning: Vec<bool>) -> Result<Self> {
        check_player_count(player_count)?;
        if winning.len() != 1 << player_count {
            return Err(Error::LengthMismatch {
                expected: 1 << player_count,
                found: winning.len(),
            });
        }
        validate_table(player_count, &winning).map_err(|v| Error::InvalidGame(v.to_string()))?;
        Ok(Self {
            player_count,
            winning,
        })
    }

    /// Winning iff total weight reaches `quota`.
    pub fn weighted(weights: &[u64], quota: u64) -> Result<Self> {
        check_player_count(weights.len())?;
        let total: u64 = weights.iter().sum();
        if quota == 0 || quota > total {
            return Err(Error::QuotaUnattainable { quota, total });
        }
        let p = weights.len();
        let winning = (0..1u32 << p)
            .map(|c| members(c).map(|i| weights[i]).sum::<u64>() >= quota)
            .collect();
        Self::from_table(p, winning)
    }

    /// At least `k` of `player_count` players.
    pub fn quota(player_count: usize, k: u64) -> Result<Self> {
        Self::weighted(&vec![1; player_count], k)
    }

    /// Strict majority.
    pub fn majority(player_count: usize) -> Result<Self> {
        Self::quota(player_count, player_count as u64 / 2 + 1)
    }

    pub fn unanimity(player_count: usize) -> Result<Self> {
        Self::quota(player_count, player_count as u64)
    }

    /// Only coalitions containing `dictator` win.
    pub fn dictator(player_count: usize, dictator: usize) -> Result<Self> {
        if dictator >= player_count {
            return Err(Error::InvalidGame(format!(
                "dictator {dictator} outside 0..{player_count}"
            )));
        }
        let mut weights = vec![0; player_count];
        weights[dictator] = 1;
        Self::weighted(&weights, 1)
    }

    /// The one-player game where the player's vote is the decision.
    pub fn identity() -> Self {
        Self::dictator(1, 0).expect("one-player dictator is valid")
    }

    pub fn player_count(&self) -> usize {
        self.player_count
    }

    pub fn is_winning(&self, c: Coalition) -> bool {
        self.winning[c as usize]
    }

    pub fn winning_coalitions(&self) -> Vec<Coalition> {
        (0..self.winning.len() as Coalition)
            .filter(|&c| self.winning[c as usize])
            .collect()
    }

    /// Minimal winning coalitions.
    pub fn minimal_winning(&self) -> Vec<Coalition> {
        self.winning_coalitions()
            .into_iter()
            .filter(|&c| members(c).all(|i| !self.is_winning(c & !(1 << i))))
            .collect()
    }

    /// `pi(x)`: 1 iff the exact set of yes-voters is winning.
    pub fn aggregate(&self, votes: &VoteVector) -> Result<bool> {
        self.check_len(votes.len())?;
        Ok(self.is_winning(votes.mask()))
    }

    #[inline]
    pub fn aggregate_mask(&self, yes: Coalition) -> bool {
        self.winning[yes as usize]
    }

    /// `(pi with x_i = 1, pi with x_i = 0)`.
    pub fn decompose_check(&self, i: usize, votes: &VoteVector) -> Result<(bool, bool)> {
        self.check_len(votes.len())?;
        if i >= self.player_count {
            return Err(Error::InvalidGame(format!("player {i} outside 0..{}", self.player_count)));
        }
        let m = votes.mask();
        Ok((self.is_winning(m | 1 << i), self.is_winning(m & !(1 << i))))
    }

    /// Pointwise aggregation of per-player event indicators over a common
    /// finite outcome set.
    pub fn event_aggregate(&self, events: &[Vec<bool>]) -> Result<Vec<bool>> {
        self.check_len(events.len())?;
        let len = events.first().map_or(0, Vec::len);
        if let Some(bad) = events.iter().find(|e| e.len() != len) {
            return Err(Error::LengthMismatch {
                expected: len,
                found: bad.len(),
            });
        }
        Ok((0..len)
            .map(|w| {
                let yes = events
                    .iter()
                    .enumerate()
                    .fold(0, |m, (i, e)| if e[w] { m | 1 << i } else { m });
                self.is_winning(yes)
            })
            .collect())
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.player_count {
            return Err(Error::LengthMismatch {
                expected: self.player_count,
                found: len,
            });
        }
        Ok(())
    }
}
