//! Plain-text export of explicit models. The format is line-oriented and
//! byte-deterministic for a given model:
//!
//! ```text
//! STATES <n>
//! INITIAL <i>
//! GOAL <i>            (one line per goal state, ascending)
//! <src> <action> <dst> <prob>   (sorted by source, action, target)
//! ```

use std::fmt::Write;

use crate::pcfp::ExplicitModel;

pub fn export_explicit(m: &ExplicitModel) -> String {
    let mut out = String::new();
    writeln!(out, "STATES {}", m.num_states()).unwrap();
    writeln!(out, "INITIAL {}", m.initial().0).unwrap();
    for g in m.goal_states() {
        writeln!(out, "GOAL {}", g.0).unwrap();
    }
    let mut lines: Vec<(usize, String, usize, String)> = Vec::new();
    for (src, actions) in m.all_choices().iter().enumerate() {
        for a in actions {
            for (prob, dst) in &a.branches {
                lines.push((src, a.tag.as_str().to_string(), dst.0, prob.to_string()));
            }
        }
    }
    lines.sort();
    for (src, action, dst, prob) in lines {
        writeln!(out, "{src} {action} {dst} {prob}").unwrap();
    }
    out
}
