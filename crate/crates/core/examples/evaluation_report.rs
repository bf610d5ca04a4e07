//! Frame-level precision, recall and F1 against a ground-truth CSV.
//!
//!   cargo run --example evaluation_report

use seadsc::evaluation::report;
use seadsc::io::parse_ground_truth;
use seadsc::Label;

const GROUND_TRUTH: &str = "\
start_frame,end_frame_exclusive,label
0,240,not_changed
240,600,changed
600,720,not_changed
";

fn main() -> seadsc::Result<()> {
    let truth = parse_ground_truth(GROUND_TRUTH.as_bytes())?;

    // a detector that catches the change one window late
    let mut predicted = vec![Label::NotChanged; truth.len()];
    predicted[360..600].fill(Label::Changed);

    let result = report(&truth, &predicted)?;
    println!("{result}");
    println!("confusion [truth][pred]: {:?}", result.confusion.counts);

    // nothing flagged: changed precision is undefined and reported as 0
    let silent = report(&truth, &vec![Label::NotChanged; truth.len()])?;
    println!(
        "all not_changed: changed precision {} (zero division: {})",
        silent.changed.precision, silent.changed.zero_division
    );
    Ok(())
}
