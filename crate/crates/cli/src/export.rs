//! JSON interchange for complexes, contraction tables, finite models and
//! homology reports.

use std::collections::BTreeMap;

use polychain_core::coeff::{FiniteModel, GroupElement, HomologyReport};
use polychain_core::linalg::{Matrix, Q};
use polychain_core::{Complex, ComplexKind, Contraction};
use serde_json::{json, Value};

use crate::config::{parse_q, q_string, CliError, CliResult};

pub fn complex_json(c: &Complex) -> Value {
    let generator = match c.kind() {
        ComplexKind::Apartment => json!({
            "system": c.datum().map(|d| d.spec.clone()),
            "radius": q_string(&c.radius()),
        }),
        ComplexKind::Tree => {
            let t = c.tree_data().expect("tree complex carries tree data");
            json!({ "branching": t.q, "depth": t.depth })
        }
    };
    let cells: Vec<Value> = (0..c.len())
        .map(|i| {
            json!({
                "id": i,
                "dim": c.dim(i),
                "vertices": c.vertices(i),
                "orientation": c.describe_vertices(i),
            })
        })
        .collect();
    let mut incidence = Vec::new();
    for i in 0..c.len() {
        for &(t, s) in c.faces(i) {
            incidence.push(json!([i, t, s]));
        }
    }
    json!({
        "kind": match c.kind() { ComplexKind::Apartment => "apartment", ComplexKind::Tree => "tree" },
        "generator": generator,
        "base": c.base(),
        "counts_by_dim": c.count_by_dim(),
        "cells": cells,
        "incidence": incidence,
    })
}

/// One entry `{degree, sigma_id, terms: [[tau_id, num, den]]}` per cell.
pub fn contraction_json(c: &Complex, g: &Contraction) -> Value {
    let rows: Vec<Value> = (0..c.len())
        .map(|s| {
            let terms: Vec<Value> = g
                .image(s)
                .map(|ch| ch.terms().map(|(t, k)| json!([t, k.numer().to_string(), k.denom().to_string()])).collect())
                .unwrap_or_default();
            json!({ "degree": c.dim(s), "sigma_id": s, "terms": terms })
        })
        .collect();
    json!({ "base": g.base(), "m_gamma": q_string(&g.m_gamma()), "table": rows })
}

fn matrix_json(m: &Matrix) -> Value {
    Value::Array(
        (0..m.rows()).map(|i| Value::Array(m.row(i).iter().map(|x| Value::String(q_string(x))).collect())).collect(),
    )
}

pub fn model_json(m: &FiniteModel, c: &Complex) -> Value {
    let gens = m.generators();
    let subgroups: BTreeMap<String, Vec<usize>> =
        (0..c.len()).map(|s| (s.to_string(), m.subgroup(s).to_vec())).collect();
    json!({
        "name": m.name,
        "group": {
            "generators": (0..gens.len()).map(|i| format!("g{i}")).collect::<Vec<_>>(),
            "order": m.order(),
        },
        "action": gens.iter().map(|g| g.action.iter().map(|&(t, s)| json!([t, s])).collect::<Vec<_>>()).collect::<Vec<_>>(),
        "subgroups": subgroups,
        "module": {
            "dim": m.dim,
            "matrices": gens.iter().map(|g| matrix_json(&g.matrix)).collect::<Vec<_>>(),
        },
    })
}

fn bad(path: &str, what: &str) -> CliError {
    CliError::Config(format!("{path}: {what}"))
}

/// Reads a model in the format written by [`model_json`]. Subgroup
/// element indices refer to the closure order of the generators, which is
/// deterministic.
pub fn model_from_json(v: &Value, c: &Complex, path: &str) -> CliResult<FiniteModel> {
    let name = v.get("name").and_then(Value::as_str).unwrap_or("model");
    let dim = v
        .pointer("/module/dim")
        .and_then(Value::as_u64)
        .ok_or_else(|| bad(path, "module.dim missing"))? as usize;
    let actions = v.get("action").and_then(Value::as_array).ok_or_else(|| bad(path, "action missing"))?;
    let matrices =
        v.pointer("/module/matrices").and_then(Value::as_array).ok_or_else(|| bad(path, "module.matrices missing"))?;
    if actions.len() != matrices.len() {
        return Err(bad(path, "one action and one matrix per generator expected"));
    }
    let mut gens = Vec::new();
    for (a, mv) in actions.iter().zip(matrices) {
        let action = a
            .as_array()
            .ok_or_else(|| bad(path, "action is not a list"))?
            .iter()
            .map(|p| match p.as_array().map(|p| p.as_slice()) {
                Some([t, s]) => Ok((
                    t.as_u64().ok_or_else(|| bad(path, "bad cell id"))? as usize,
                    s.as_i64().ok_or_else(|| bad(path, "bad sign"))? as i32,
                )),
                _ => Err(bad(path, "action entries are [cell, sign]")),
            })
            .collect::<CliResult<Vec<_>>>()?;
        let rows = mv
            .as_array()
            .ok_or_else(|| bad(path, "matrix is not a list"))?
            .iter()
            .map(|r| {
                r.as_array()
                    .ok_or_else(|| bad(path, "matrix row is not a list"))?
                    .iter()
                    .map(|x| match x {
                        Value::String(s) => parse_q(s).map_err(|e| bad(path, &e)),
                        Value::Number(n) => {
                            n.as_i64().map(|i| Q::from_integer(i as i128)).ok_or_else(|| bad(path, "non-integer number"))
                        }
                        _ => Err(bad(path, "matrix entries are numbers or rational strings")),
                    })
                    .collect::<CliResult<Vec<Q>>>()
            })
            .collect::<CliResult<Vec<_>>>()?;
        if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
            return Err(bad(path, "matrix shape does not match module.dim"));
        }
        gens.push(GroupElement { action, matrix: Matrix::from_rows(&rows) });
    }
    let mut subgroups = BTreeMap::new();
    if let Some(obj) = v.get("subgroups").and_then(Value::as_object) {
        for (k, list) in obj {
            let cell: usize = k.parse().map_err(|_| bad(path, "subgroup keys are cell ids"))?;
            let els = list
                .as_array()
                .ok_or_else(|| bad(path, "subgroup is not a list"))?
                .iter()
                .map(|e| e.as_u64().map(|e| e as usize).ok_or_else(|| bad(path, "bad element index")))
                .collect::<CliResult<Vec<_>>>()?;
            subgroups.insert(cell, els);
        }
    }
    Ok(FiniteModel::from_indices(name, c, dim, gens, &subgroups)?)
}

pub fn homology_json(h: &HomologyReport) -> Value {
    json!({
        "betti": h.betti,
        "augmented_betti": h.augmented_betti,
        "h0_image_dim": h.h0_image.len(),
        "vertex_sum_dim": h.vertex_sum_dim,
        "boundary_squares_zero": h.boundary_squares_zero,
        "convex": h.convex,
        "acyclic": h.acyclic,
        "h0_bijective": h.h0_bijective,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use polychain_core::coeff::tree_filtration_model;
    use polychain_core::DEFAULT_CELL_BUDGET;

    #[test]
    fn model_round_trip() {
        let (c, m) = tree_filtration_model(2, 2, DEFAULT_CELL_BUDGET).unwrap();
        let v = model_json(&m, &c);
        let back = model_from_json(&v, &c, "mem").unwrap();
        assert_eq!(back.order(), m.order());
        assert_eq!(back.fixed_space_system(&c), m.fixed_space_system(&c));
    }

    #[test]
    fn complex_shape() {
        let c = Complex::tree(1, 2, DEFAULT_CELL_BUDGET).unwrap();
        let v = complex_json(&c);
        assert_eq!(v["cells"].as_array().unwrap().len(), 9);
        assert_eq!(v["incidence"].as_array().unwrap().len(), 8);
    }
}
