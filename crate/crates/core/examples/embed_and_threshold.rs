//! Gram-count embeddings and the per-record thresholds that bound how far a
//! string can move under a few edits.

use gramlink::embedding::{distance, embed_record, global_threshold_bound, threshold_for, GramBase};
use gramlink::records::Record;
use gramlink::strings::edit_distance;

fn main() -> gramlink::Result<()> {
    let base = GramBase::new(
        ["A", "E", "O", "N", "ON", "TON", "VILLE", "ST"]
            .map(Into::into)
            .to_vec(),
    )?;
    let pairs = [
        ("BOSTON", "BOSTONE"),
        ("BOSTON", "BASTON"),
        ("ASHEVILLE", "ASHVILLE"),
        ("DALLAS", "DULUTH"),
    ];

    println!(
        "{:<10} {:<10} {:>3} {:>8} {:>8} {:>8}",
        "a", "b", "ed", "d'", "th(1)", "th(2)"
    );
    for (i, (a, b)) in pairs.iter().enumerate() {
        let va = embed_record(&Record::new(i as u64, *a), &base);
        let vb = embed_record(&Record::new(i as u64, *b), &base);
        println!(
            "{a:<10} {b:<10} {:>3} {:>8.4} {:>8.4} {:>8.4}",
            edit_distance(a, b),
            distance(&va, &vb)?,
            threshold_for(a, &base, 1),
            threshold_for(a, &base, 2)
        );
    }
    println!(
        "global bound for q in 1..=5, ed = 1: {}",
        global_threshold_bound(1, 5, 1)
    );
    Ok(())
}
