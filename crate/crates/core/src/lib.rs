//! Course-of-action planning: scenario model, order parsing, intelligence
//! preparation of the battlespace, CoA generation, wargaming and decision support.

pub mod coa;
pub mod evaluate;
pub mod grid;
pub mod ipb;
pub mod opord;
pub mod pathfind;
pub mod pipeline;
pub mod scenario;
pub mod util;
pub mod wargame;
