use super::types::*;
use super::validate::{visit_params, ParamVisitor};
use crate::pipeline::NodeId;

struct Bind<'a>(&'a [(String, Value)]);

impl Bind<'_> {
    fn get(&self, name: &str) -> &Value {
        &self.0.iter().find(|(n, _)| n == name).unwrap_or_else(|| panic!("unbound scenario variable ${name}")).1
    }

    fn number(&self, name: &str) -> f64 {
        match self.get(name) {
            Value::Number(n) => *n,
            other => panic!("${name} bound to non-number {other}"),
        }
    }
}

impl ParamVisitor for Bind<'_> {
    fn f64(&mut self, p: &mut Param<f64>, _: &str) {
        if let Param::Var(n) = p {
            *p = Param::Lit(self.number(n));
        }
    }

    fn u32(&mut self, p: &mut Param<u32>, _: &str) {
        if let Param::Var(n) = p {
            *p = Param::Lit(self.number(n) as u32);
        }
    }

    fn u64(&mut self, p: &mut Param<u64>, _: &str) {
        if let Param::Var(n) = p {
            *p = Param::Lit(self.number(n) as u64);
        }
    }

    fn node(&mut self, p: &mut Param<NodeId>, _: &str) {
        if let Param::Var(n) = p {
            let node = match self.get(n) {
                Value::Ident(s) => NodeId::from_name(s),
                _ => None,
            };
            *p = Param::Lit(node.unwrap_or_else(|| panic!("${n} is not a node name")));
        }
    }
}

/// Substitutes one sweep point into a spec. The result carries no sweep axes.
pub fn resolve(spec: &ScenarioSpec, binding: Vec<(String, Value)>) -> ResolvedConfig {
    let mut scenario = spec.clone();
    visit_params(&mut scenario, &mut Bind(&binding));
    scenario.sweeps.clear();
    ResolvedConfig { scenario, binding }
}

/// Cartesian product over the sweep axes. The first axis varies slowest.
pub fn expand_sweeps(spec: &ScenarioSpec) -> Vec<ResolvedConfig> {
    let axes = &spec.sweeps;
    let total: usize = axes.iter().map(|a| a.values.len()).product();
    let mut out = Vec::with_capacity(total);
    let mut idx = vec![0usize; axes.len()];
    for _ in 0..total {
        let binding = axes.iter().zip(&idx).map(|(a, &i)| (a.variable.clone(), a.values[i].clone())).collect();
        out.push(resolve(spec, binding));
        for k in (0..axes.len()).rev() {
            idx[k] += 1;
            if idx[k] < axes[k].values.len() {
                break;
            }
            idx[k] = 0;
        }
    }
    out
}
