//! Shared fixtures for the benchmarks.

use cglp::analysis::LoopTopology;
use cglp::lti::{hz_to_rad, make_lead, make_pid, paper_plant};
use cglp::reset::ResetElement;

/// The GFORE-then-lead loop at the default operating point.
pub fn baseline_loop() -> LoopTopology {
    let c1 = cglp::RationalTf::unity();
    let r = ResetElement::gfore(hz_to_rad(114.5), 0.2).expect("valid GFORE");
    let lead = make_lead(hz_to_rad(150.0), hz_to_rad(3000.0)).expect("valid lead");
    let pid = make_pid(31.0, hz_to_rad(150.0)).expect("valid PID");
    LoopTopology::new(c1, r, lead.series(&pid), paper_plant())
}
