//! S2D2: sequential Stackelberg defense for drone swarms on city graphs.
//!
//! The crate models an attacker/defender drone game on an undirected city
//! graph, coarsens the city into neighborhoods, solves each neighborhood's
//! one-on-one subgame to a Stackelberg equilibrium, and stitches the results
//! back together with a mixed-integer master problem. A simulator and a
//! greedy baseline round out the toolkit so solved strategies can be scored
//! by Monte Carlo rollouts.

pub mod coarsening;
pub mod demo;
pub mod metagame;
pub mod model;
pub mod optim;
pub mod strategies;
pub mod subgame;
