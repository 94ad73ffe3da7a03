//! Level time models, their union, and the queries the scheduler relies on.

use levelsim::{LevelId, LevelTimeModel, Timestamp, UnionTimeModel};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let fine = LevelTimeModel::every("fine", 1, 4)?;
    let coarse = LevelTimeModel::every("coarse", 2, 4)?;
    // ticks may be any rationals, as long as every level shares the bounds
    let odd = LevelTimeModel::new("odd".into(), vec!["0".parse()?, "3/2".parse()?, "4".parse()?])?;
    let time = UnionTimeModel::new([fine, coarse, odd])?;

    println!("union ticks: {:?}", time.ticks());
    for &t in time.ticks() {
        let class = time.classify(t)?;
        let starting = if t == time.max() {
            "(final tick)".to_string()
        } else {
            format!("{:?}", time.levels_starting_at(t)?)
        };
        println!("t={t:<5} {:?} consistent={:?} starting={starting}", class.kind, class.consistent_levels);
    }

    let coarse = LevelId::from("coarse");
    for t in [Timestamp::from_integer(1), "3/2".parse()?, Timestamp::from_integer(3)] {
        println!("floor of coarse at {t}: {}", time.floor_level(&coarse, t)?);
    }
    Ok(())
}
