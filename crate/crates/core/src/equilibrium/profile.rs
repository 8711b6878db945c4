use crate::error::{Error, Result};
use crate::games::Coalition;

/// Per-player stopping sets over the states of an instance.
///
/// A staged profile holds sets for stages `0..=N`; stage `n` is consulted
/// at time `n`, and play never continues past `N`. A stationary profile
/// holds one set per player used at every stage.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StrategyProfile {
    /// `sets[i][stage][x]`.
    sets: Vec<Vec<Vec<bool>>>,
    stationary: bool,
    states: usize,
}

impl StrategyProfile {
    pub fn staged(sets: Vec<Vec<Vec<bool>>>) -> Result<Self> {
        Self::build(sets, false)
    }

    pub fn stationary(sets: Vec<Vec<bool>>) -> Result<Self> {
        Self::build(sets.into_iter().map(|s| vec![s]).collect(), true)
    }

    fn build(sets: Vec<Vec<Vec<bool>>>, stationary: bool) -> Result<Self> {
        let first = sets
            .first()
            .ok_or_else(|| Error::InvalidModel("profile has no players".into()))?;
        let stages = first.len();
        if stages == 0 {
            return Err(Error::InvalidModel("profile has no stages".into()));
        }
        let states = first[0].len();
        for player in &sets {
            if player.len() != stages {
                return Err(Error::LengthMismatch {
                    expected: stages,
                    found: player.len(),
                });
            }
            if let Some(bad) = player.iter().find(|s| s.len() != states) {
                return Err(Error::LengthMismatch {
                    expected: states,
                    found: bad.len(),
                });
            }
        }
        Ok(Self {
            sets,
            stationary,
            states,
        })
    }

    /// Nobody ever declares stop.
    pub fn never_stop(players: usize, states: usize, horizon: Option<usize>) -> Self {
        match horizon {
            Some(n) => Self::staged(vec![vec![vec![false; states]; n + 1]; players]),
            None => Self::stationary(vec![vec![false; states]; players]),
        }
        .expect("non-empty dimensions")
    }

    /// Everyone declares stop exactly at stage `n` in every state.
    pub fn fixed_time(players: usize, states: usize, n: usize) -> Self {
        let mut stages = vec![vec![false; states]; n + 1];
        stages[n] = vec![true; states];
        Self::staged(vec![stages; players]).expect("non-empty dimensions")
    }

    pub fn players(&self) -> usize {
        self.sets.len()
    }

    pub fn states(&self) -> usize {
        self.states
    }

    pub fn is_stationary(&self) -> bool {
        self.stationary
    }

    /// Number of stored stages (1 for stationary profiles).
    pub fn stages(&self) -> usize {
        self.sets[0].len()
    }

    /// Last stage at which play can stop; `None` for stationary profiles.
    pub fn horizon(&self) -> Option<usize> {
        (!self.stationary).then(|| self.stages() - 1)
    }

    /// Player `i`'s set at stage `n`, or `None` past the horizon.
    pub fn set(&self, player: usize, stage: usize) -> Option<&[bool]> {
        let idx = if self.stationary { 0 } else { stage };
        self.sets[player].get(idx).map(Vec::as_slice)
    }

    /// All players' sets at stage `n`.
    pub fn stage_sets(&self, stage: usize) -> Option<Vec<&[bool]>> {
        (0..self.players()).map(|i| self.set(i, stage)).collect()
    }

    /// Declarations at stage `n` in state `x` as a coalition mask.
    pub fn votes(&self, stage: usize, x: usize) -> Coalition {
        (0..self.players())
            .filter(|&i| self.set(i, stage).is_some_and(|s| s[x]))
            .fold(0, |m, i| m | 1 << i)
    }

    pub fn player_sets(&self, player: usize) -> &[Vec<bool>] {
        &self.sets[player]
    }

    /// Copy with player `i`'s sets replaced.
    pub fn with_player(&self, player: usize, sets: Vec<Vec<bool>>) -> Result<Self> {
        let mut all = self.sets.clone();
        all[player] = sets;
        Self::build(all, self.stationary)
    }

    pub(crate) fn set_mut(&mut self, player: usize, stage: usize) -> &mut Vec<bool> {
        &mut self.sets[player][stage]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn staged_and_stationary_lookup() {
        let p = StrategyProfile::staged(vec![
            vec![vec![false, true], vec![true, false]],
            vec![vec![true, true], vec![false, false]],
        ])
        .unwrap();
        assert_eq!(p.horizon(), Some(1));
        assert_eq!(p.votes(0, 1), 0b11);
        assert_eq!(p.votes(1, 0), 0b01);
        assert!(p.set(0, 2).is_none());

        let s = StrategyProfile::stationary(vec![vec![true, false]]).unwrap();
        assert_eq!(s.horizon(), None);
        assert_eq!(s.set(0, 17), Some(&[true, false][..]));
    }

    #[test]
    fn dimension_checks() {
        assert!(StrategyProfile::staged(vec![vec![vec![true]], vec![vec![true, false]]]).is_err());
        assert!(StrategyProfile::staged(vec![vec![vec![true]], vec![]]).is_err());
        assert!(StrategyProfile::stationary(vec![]).is_err());
    }

    #[test]
    fn fixed_time_profile() {
        let p = StrategyProfile::fixed_time(2, 3, 2);
        assert_eq!(p.votes(1, 0), 0);
        assert_eq!(p.votes(2, 2), 0b11);
    }
}
