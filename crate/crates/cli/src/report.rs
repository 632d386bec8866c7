//! JSON documents for the single-point subcommands.

use ckn_core::energy::{
    a0_coefficient, bounds as bounds_report, gap_perturbation_quotient, sign_report, third_order_coefficient,
    third_order_coefficient_alt, two_bubble_quotient,
};
use ckn_core::minimizer::estimate_cbe;
use ckn_core::spectrum::{spectral_gap, spectrum_table};
use ckn_core::{make_params, CknParams, Error, Result};
use serde::Serialize;
use serde_json::{json, Map, Value};

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("reports serialize")
}

fn header(p: &CknParams) -> Map<String, Value> {
    let region = p.classify();
    let mut m = Map::new();
    m.insert("N".into(), json!(p.n));
    m.insert("a".into(), json!(p.a));
    m.insert("b".into(), json!(p.b));
    m.insert("p".into(), json!(p.p));
    m.insert("region".into(), json!(region.region.as_str()));
    m
}

/// Header fields followed by the fields of `body`, with a nested `region` object renamed.
fn merged<T: Serialize>(p: &CknParams, body: &T) -> Value {
    let mut m = header(p);
    if let Value::Object(fields) = to_value(body) {
        for (k, v) in fields {
            let key = if k == "region" { "region_class".to_string() } else { k };
            m.insert(key, v);
        }
    }
    Value::Object(m)
}

pub fn region(n: u32, a: f64, b: f64) -> Result<Value> {
    let p = make_params(n, a, b)?;
    let mut m = header(&p);
    m.insert("a_c".into(), json!(p.a_c));
    m.insert("gamma".into(), json!(p.gamma));
    m.insert("beta".into(), json!(p.beta));
    m.insert("region_class".into(), to_value(&p.classify()));
    m.insert("curves".into(), to_value(&p.curves()));
    Ok(Value::Object(m))
}

pub fn spectrum(n: u32, a: f64, b: f64, imax: u32, jmax: u32) -> Result<Value> {
    if imax > 50 || jmax > 50 {
        return Err(Error::Config(format!("imax and jmax must be <= 50 (imax = {imax}, jmax = {jmax})")));
    }
    let p = make_params(n, a, b)?;
    let mut m = header(&p);
    m.insert("eigenvalues".into(), to_value(&spectrum_table(&p, imax, jmax)));
    Ok(Value::Object(m))
}

pub fn gap(n: u32, a: f64, b: f64) -> Result<Value> {
    let p = make_params(n, a, b)?;
    Ok(merged(&p, &spectral_gap(&p)))
}

pub fn bounds(n: u32, a: f64, b: f64) -> Result<Value> {
    let p = make_params(n, a, b)?;
    Ok(merged(&p, &bounds_report(&p)))
}

pub fn energy(n: u32, a: f64, b: f64, s: Option<f64>, eps: f64) -> Result<Value> {
    let p = make_params(n, a, b)?;
    let s = s.unwrap_or(10.0 / p.gamma);
    let mut m = header(&p);
    m.insert("third_order_coefficient".into(), json!(third_order_coefficient(&p)));
    m.insert("third_order_coefficient_alt".into(), json!(third_order_coefficient_alt(&p)));
    m.insert("a0".into(), to_value(&a0_coefficient(&p)?));
    m.insert("two_bubble".into(), to_value(&two_bubble_quotient(&p, s)?));
    m.insert("gap_perturbation".into(), to_value(&gap_perturbation_quotient(&p, eps)?));
    Ok(Value::Object(m))
}

pub fn zhat(n: u32, a: f64, b: f64) -> Result<Value> {
    let p = make_params(n, a, b)?;
    Ok(merged(&p, &sign_report(&p)))
}

pub fn minimize(n: u32, a: f64, b: f64, starts: usize, seed: u64) -> Result<Value> {
    let p = make_params(n, a, b)?;
    Ok(merged(&p, &estimate_cbe(&p, starts, seed)?))
}
