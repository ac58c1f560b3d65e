//! Name-keyed registries of interchangeable strategy objects.
//!
//! Model variants and Savage–Dickey density estimators are both looked up
//! by name at runtime (from CLI flags or config files). Each kind has a
//! `builtin` constructor that registers the stock implementations.

use crate::error::{Error, Result};

pub trait Named {
    fn name(&self) -> &'static str;
}

pub struct Registry<T: ?Sized + Named> {
    kind: &'static str,
    entries: Vec<Box<T>>,
}

impl<T: ?Sized + Named> Registry<T> {
    pub fn new(kind: &'static str) -> Self {
        Self {
            kind,
            entries: Vec::new(),
        }
    }

    /// Registers `entry`, replacing any previous entry with the same name.
    pub fn register(&mut self, entry: Box<T>) -> &mut Self {
        let name = entry.name();
        self.entries.retain(|e| e.name() != name);
        self.entries.push(entry);
        self
    }

    pub fn get(&self, name: &str) -> Result<&T> {
        self.entries
            .iter()
            .find(|e| e.name().eq_ignore_ascii_case(name))
            .map(|e| e.as_ref())
            .ok_or_else(|| Error::UnknownStrategy {
                kind: self.kind,
                name: name.to_string(),
                available: self.names().join(", "),
            })
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.iter().map(|e| e.name()).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &T> {
        self.entries.iter().map(|e| e.as_ref())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Dummy(&'static str, u32);
    impl Named for Dummy {
        fn name(&self) -> &'static str {
            self.0
        }
    }

    #[test]
    fn lookup_is_case_insensitive_and_replaces_duplicates() {
        let mut reg: Registry<Dummy> = Registry::new("dummy");
        reg.register(Box::new(Dummy("a", 1)))
            .register(Box::new(Dummy("b", 2)))
            .register(Box::new(Dummy("a", 3)));
        assert_eq!(reg.names(), vec!["b", "a"]);
        assert_eq!(reg.get("A").unwrap().1, 3);
    }

    #[test]
    fn unknown_name_lists_alternatives() {
        let mut reg: Registry<Dummy> = Registry::new("dummy");
        reg.register(Box::new(Dummy("x", 0)));
        let err = reg.get("y").err().unwrap().to_string();
        assert!(err.contains("unknown dummy 'y'"));
        assert!(err.contains("x"));
    }
}
