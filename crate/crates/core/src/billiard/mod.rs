//! Broken bicharacteristic flow, stories of reflections and the return map
//! of the periodic ray.

mod flow;
mod return_map;
mod story;

pub use flow::{
    backward_flow_constrained, exit_time, flow, reflect_direction, BackwardState, Event, PhasePoint,
    Trajectory,
};
pub use return_map::{contracting_product, return_map, return_map_with_step, section_return, ReturnMapAnalysis, Section};
pub use story::Story;
