#![allow(clippy::needless_range_loop)]

//! Construction-and-verification toolkit for gadget reductions from
//! systems of mod-2 equations to bounded-degree (1,2)-TSP and Graphic TSP
//! instances, with exhaustive brute-force oracles at desk scale.

pub mod gadgets;
pub mod graph;
pub mod hybrid;
pub mod linsys;
pub mod oracle;
pub mod pipeline;
pub mod reduction;
pub mod rng;
pub mod wheel;
