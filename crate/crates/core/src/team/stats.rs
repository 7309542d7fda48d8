use serde::{Deserialize, Serialize};

use crate::chess::OutcomeKind;

/// Aggregated result of a match from the team's perspective.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchStatistics {
    pub wins: u32,
    pub draws: u32,
    pub losses: u32,
    /// Scores (1, 0.5, 0) in game-key order.
    pub per_game_scores: Vec<f64>,
    /// (wins + draws/2) / games.
    pub wdl: f64,
    /// Standard error of the mean per-game score (sample standard
    /// deviation over sqrt(n); 0 for fewer than two games).
    pub sem: f64,
    /// Games aborted by an engine failure, excluded from everything above.
    pub failed_games: u32,
}

impl MatchStatistics {
    /// `outcomes` must already be in a canonical order.
    pub fn from_outcomes(outcomes: &[OutcomeKind], failed_games: u32) -> MatchStatistics {
        let count = |k| outcomes.iter().filter(|&&o| o == k).count() as u32;
        let (wins, draws, losses) = (
            count(OutcomeKind::Win),
            count(OutcomeKind::Draw),
            count(OutcomeKind::Loss),
        );
        let per_game_scores: Vec<f64> = outcomes.iter().map(|o| o.score()).collect();
        let n = outcomes.len();
        let wdl = if n == 0 {
            f64::NAN
        } else {
            (2 * wins + draws) as f64 / (2 * n) as f64
        };
        let sem = if n < 2 {
            0.0
        } else {
            let var = per_game_scores
                .iter()
                .map(|s| (s - wdl).powi(2))
                .sum::<f64>()
                / (n - 1) as f64;
            (var / n as f64).sqrt()
        };
        MatchStatistics {
            wins,
            draws,
            losses,
            per_game_scores,
            wdl,
            sem,
            failed_games,
        }
    }

    pub fn games(&self) -> u32 {
        self.wins + self.draws + self.losses
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use OutcomeKind::*;

    #[test]
    fn wdl_formula() {
        let mut o = vec![Win; 3];
        o.extend([Draw; 2]);
        o.extend([Loss; 5]);
        let s = MatchStatistics::from_outcomes(&o, 0);
        assert_eq!(s.wdl, 0.4);
        assert_eq!(s.games(), 10);
        assert_eq!(s.per_game_scores.len(), 10);
    }

    #[test]
    fn all_wins_have_zero_sem() {
        let s = MatchStatistics::from_outcomes(&[Win; 7], 0);
        assert_eq!(s.wdl, 1.0);
        assert_eq!(s.sem, 0.0);
        assert_eq!(MatchStatistics::from_outcomes(&[Draw], 0).sem, 0.0);
    }

    #[test]
    fn sem_uses_sample_deviation() {
        // scores 1, 0: mean 0.5, sample variance 0.5, sem = sqrt(0.25)
        let s = MatchStatistics::from_outcomes(&[Win, Loss], 0);
        assert!((s.sem - 0.5).abs() < 1e-15);
    }
}
