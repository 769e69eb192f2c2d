use std::collections::BTreeSet;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_yaml::{Mapping, Value};

use super::BuildError;

/// One component's subtree of the configuration document.
///
/// Every key read through the accessors is marked consumed and written to
/// the effective mapping, defaults included; [`ConfigNode::finish`] then
/// rejects whatever was left unread.
#[derive(Debug, Clone)]
pub struct ConfigNode {
    path: String,
    input: Mapping,
    consumed: BTreeSet<String>,
    effective: Mapping,
}

fn join(path: &str, key: &str) -> String {
    match (path.is_empty(), key.is_empty()) {
        (_, true) => path.to_string(),
        (true, false) => key.to_string(),
        (false, false) => format!("{path}.{key}"),
    }
}

impl ConfigNode {
    pub fn new(path: &str, input: Mapping) -> Self {
        ConfigNode {
            path: path.to_string(),
            input,
            consumed: BTreeSet::new(),
            effective: Mapping::new(),
        }
    }

    pub fn parse(text: &str) -> Result<Self, BuildError> {
        let value: Value = serde_yaml::from_str(text).map_err(|e| BuildError::BadParameter {
            path: "<config>".into(),
            reason: e.to_string(),
        })?;
        match value {
            Value::Mapping(m) => Ok(ConfigNode::new("", m)),
            Value::Null => Ok(ConfigNode::new("", Mapping::new())),
            _ => Err(BuildError::BadParameter {
                path: "<config>".into(),
                reason: "top level must be a mapping".into(),
            }),
        }
    }

    pub fn path(&self) -> &str {
        &self.path
    }

    pub fn contains(&self, key: &str) -> bool {
        self.input.contains_key(key)
    }

    pub fn bad_param(&self, key: &str, reason: impl Into<String>) -> BuildError {
        BuildError::BadParameter {
            path: join(&self.path, key),
            reason: reason.into(),
        }
    }

    fn raw(&mut self, key: &str) -> Option<Value> {
        let v = self.input.get(key).cloned();
        if v.is_some() {
            self.consumed.insert(key.to_string());
        }
        v
    }

    fn store<T: Serialize>(&mut self, key: &str, value: &T) -> Result<(), BuildError> {
        let v = serde_yaml::to_value(value).map_err(|e| self.bad_param(key, e.to_string()))?;
        self.effective.insert(Value::from(key), v);
        Ok(())
    }

    fn decode<T: DeserializeOwned>(&self, key: &str, v: Value) -> Result<T, BuildError> {
        serde_yaml::from_value(v).map_err(|e| self.bad_param(key, e.to_string()))
    }

    /// Reads `key`, falling back to `default`.
    pub fn param<T: DeserializeOwned + Serialize>(&mut self, key: &str, default: T) -> Result<T, BuildError> {
        let value = match self.raw(key) {
            Some(v) => self.decode(key, v)?,
            None => default,
        };
        self.store(key, &value)?;
        Ok(value)
    }

    pub fn required<T: DeserializeOwned + Serialize>(&mut self, key: &str) -> Result<T, BuildError> {
        let v = self
            .raw(key)
            .ok_or_else(|| self.bad_param(key, "required parameter is missing"))?;
        let value = self.decode(key, v)?;
        self.store(key, &value)?;
        Ok(value)
    }

    pub fn optional<T: DeserializeOwned + Serialize>(&mut self, key: &str) -> Result<Option<T>, BuildError> {
        match self.raw(key) {
            Some(v) => {
                let value = self.decode(key, v)?;
                self.store(key, &value)?;
                Ok(Some(value))
            }
            None => Ok(None),
        }
    }

    /// The `impl:` of this component node.
    pub fn impl_name(&mut self) -> Result<String, BuildError> {
        let name: String = self
            .raw("impl")
            .ok_or_else(|| self.bad_param("impl", "component node without 'impl'"))
            .and_then(|v| self.decode("impl", v))?;
        self.store("impl", &name)?;
        Ok(name)
    }

    fn sub(&self, key: &str, v: Value) -> Result<ConfigNode, BuildError> {
        match v {
            Value::Mapping(m) => Ok(ConfigNode::new(&join(&self.path, key), m)),
            Value::Null => Ok(ConfigNode::new(&join(&self.path, key), Mapping::new())),
            _ => Err(self.bad_param(key, "expected a mapping")),
        }
    }

    pub fn child(&mut self, key: &str) -> Result<Option<ConfigNode>, BuildError> {
        match self.raw(key) {
            Some(v) => self.sub(key, v).map(Some),
            None => Ok(None),
        }
    }

    pub fn child_or_empty(&mut self, key: &str) -> Result<ConfigNode, BuildError> {
        Ok(self
            .child(key)?
            .unwrap_or_else(|| ConfigNode::new(&join(&self.path, key), Mapping::new())))
    }

    /// The subtree for a required interface slot.
    pub fn component(&mut self, interface: &str) -> Result<ConfigNode, BuildError> {
        self.child(interface)?.ok_or_else(|| BuildError::MissingComponent {
            interface: interface.to_string(),
            path: if self.path.is_empty() {
                "<root>".into()
            } else {
                self.path.clone()
            },
        })
    }

    pub fn sequence(&mut self, key: &str) -> Result<Vec<ConfigNode>, BuildError> {
        match self.raw(key) {
            None | Some(Value::Null) => Ok(Vec::new()),
            Some(Value::Sequence(items)) => items
                .into_iter()
                .enumerate()
                .map(|(i, v)| self.sub(&format!("{key}[{i}]"), v))
                .collect(),
            Some(_) => Err(self.bad_param(key, "expected a sequence")),
        }
    }

    /// Stores a built child's effective mapping under `key`.
    pub fn attach(&mut self, key: &str, child: ConfigNode) -> Result<(), BuildError> {
        child.check_unknown()?;
        self.consumed.insert(key.to_string());
        self.effective.insert(Value::from(key), Value::Mapping(child.effective));
        Ok(())
    }

    pub fn attach_sequence(&mut self, key: &str, children: Vec<ConfigNode>) -> Result<(), BuildError> {
        let mut seq = Vec::with_capacity(children.len());
        for c in children {
            c.check_unknown()?;
            seq.push(Value::Mapping(c.effective));
        }
        self.consumed.insert(key.to_string());
        self.effective.insert(Value::from(key), Value::Sequence(seq));
        Ok(())
    }

    /// Fails on the first key that no accessor read.
    pub fn check_unknown(&self) -> Result<(), BuildError> {
        for k in self.input.keys() {
            let name = match k {
                Value::String(s) => s.clone(),
                other => serde_yaml::to_string(other).unwrap_or_default().trim().to_string(),
            };
            if !self.consumed.contains(&name) {
                return Err(self.bad_param(&name, "unknown key"));
            }
        }
        Ok(())
    }

    pub fn effective(&self) -> &Mapping {
        &self.effective
    }

    pub fn into_effective(self) -> Mapping {
        self.effective
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_materialized() {
        let mut n = ConfigNode::parse("a: 3\n").unwrap();
        assert_eq!(n.param("a", 1u32).unwrap(), 3);
        assert_eq!(n.param("b", 0.5f64).unwrap(), 0.5);
        n.check_unknown().unwrap();
        let dump = serde_yaml::to_string(n.effective()).unwrap();
        assert_eq!(dump, "a: 3\nb: 0.5\n");
    }

    #[test]
    fn unknown_keys_are_rejected_with_path() {
        let mut root = ConfigNode::parse("X: {impl: Foo, typo: 1}\n").unwrap();
        let mut x = root.component("X").unwrap();
        x.impl_name().unwrap();
        match root.attach("X", x).unwrap_err() {
            BuildError::BadParameter { path, .. } => assert_eq!(path, "X.typo"),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn type_errors_carry_the_key_path() {
        let mut root = ConfigNode::parse("X: {n: many}\n").unwrap();
        let mut x = root.component("X").unwrap();
        match x.param("n", 1u32).unwrap_err() {
            BuildError::BadParameter { path, .. } => assert_eq!(path, "X.n"),
            e => panic!("{e}"),
        }
    }
}
