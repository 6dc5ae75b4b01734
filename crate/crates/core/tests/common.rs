#![allow(dead_code)]

use dswkb::{Cplx, Model, Potential, Problem, Strip};
use std::collections::HashMap;

pub fn c(re: f64, im: f64) -> Cplx {
    Cplx::new(re, im)
}

pub fn problem(expr: &str, energy: Cplx, d: f64) -> Problem {
    let v = Potential::parse(expr, &HashMap::new()).unwrap();
    Problem::new(v, energy, Strip::new(d, d).unwrap()).unwrap()
}

pub fn reference_problem() -> Problem {
    problem("1/z + 0.3*z", c(0.0, 0.0), 0.35)
}

pub fn reference_model(h: f64) -> Model {
    Model::new(reference_problem(), h, c(-0.25, 0.0), c(0.25, 0.0)).unwrap()
}

pub const SWEEP: [f64; 3] = [0.02, 0.01, 0.005];

pub fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}
