//! Plugging a custom disambiguation heuristic: which state of another level
//! a behavior sees while that level is between two consistent instants.
//!
//! This one logs every lookup and then falls back to the default, the most
//! recent consistent state.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use levelsim::behaviors::{default_disambiguation, Archive};
use levelsim::models::two_level::{self, TwoLevel};
use levelsim::models::FixtureParams;
use levelsim::{BehaviorError, Disambiguation, LevelDynamicState, LevelId, LevelView, TransitoryPeriod};

struct Logged {
    lookups: Arc<AtomicUsize>,
}

impl Disambiguation<TwoLevel> for Logged {
    fn view_of<'a>(
        &self,
        perceiver: &LevelId,
        target: &LevelId,
        period: &TransitoryPeriod,
        archive: &Archive<'a, TwoLevel>,
        transitory: Option<&'a LevelDynamicState<TwoLevel>>,
    ) -> Result<LevelView<'a, TwoLevel>, BehaviorError> {
        self.lookups.fetch_add(1, Ordering::Relaxed);
        let view = default_disambiguation(target, period, archive)?;
        let pending = transitory.map_or(0, |s| s.dynamics.len());
        println!(
            "{perceiver} over {} reads {target} as of {}, pending there: {pending}",
            period.interval(),
            view.as_of
        );
        Ok(view)
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let lookups = Arc::new(AtomicUsize::new(0));
    let mut def = two_level::definition(&FixtureParams::default())?;
    def.set_disambiguation(Logged {
        lookups: Arc::clone(&lookups),
    });
    levelsim::run(def)?;
    println!("{} lookups", lookups.load(Ordering::Relaxed));
    Ok(())
}
