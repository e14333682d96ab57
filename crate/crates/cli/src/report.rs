use serde_json::{json, Map, Value};

use fairdiv::io::{instance_json, Render};
use fairdiv::model::{Allocation, Instance};
use fairdiv::Rational;

#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            pass,
            detail: detail.into(),
        }
    }

    fn to_json(&self) -> Value {
        json!({ "name": self.name, "pass": self.pass, "detail": self.detail })
    }
}

/// One JSON document per run. Keys beyond the fixed ones go in `extra`.
pub struct Report {
    pub mechanism: String,
    pub instance: Option<Instance>,
    pub prices: Option<Vec<Rational>>,
    pub allocation: Option<Allocation>,
    pub rho: Option<Rational>,
    pub sw: Option<Rational>,
    pub checks: Vec<Check>,
    pub extra: Map<String, Value>,
}

impl Report {
    pub fn new(mechanism: impl Into<String>) -> Self {
        Self {
            mechanism: mechanism.into(),
            instance: None,
            prices: None,
            allocation: None,
            rho: None,
            sw: None,
            checks: Vec::new(),
            extra: Map::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn to_json(&self, render: Render) -> Value {
        let opt = |r: &Option<Rational>| r.as_ref().map_or(Value::Null, |r| render.scalar(r));
        let mut doc = Map::new();
        doc.insert("mechanism".into(), Value::String(self.mechanism.clone()));
        doc.insert(
            "instance".into(),
            self.instance.as_ref().map_or(Value::Null, |i| instance_json(i, render)),
        );
        doc.insert(
            "prices".into(),
            self.prices.as_ref().map_or(Value::Null, |p| render.vector(p)),
        );
        doc.insert(
            "allocation".into(),
            self.allocation.as_ref().map_or(Value::Null, |x| render.matrix(x.rows())),
        );
        doc.insert("rho".into(), opt(&self.rho));
        doc.insert("sw".into(), opt(&self.sw));
        doc.insert("checks".into(), Value::Array(self.checks.iter().map(Check::to_json).collect()));
        for (k, v) in &self.extra {
            doc.insert(k.clone(), v.clone());
        }
        Value::Object(doc)
    }

    pub fn render(&self, render: Render) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_json(render)).expect("report values serialize");
        s.push('\n');
        s
    }
}
