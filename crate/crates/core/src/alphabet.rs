//! Symbol alphabet with fixed reserved ids.
//!
//! Id 0 is the interval symbol "i", ids 1 and 2 are the boundary markers
//! "start" and "end". User symbols are appended in first-seen order, so ids
//! are stable for a given registration history.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Id of the interval (silence) symbol.
pub const INTERVAL: usize = 0;
/// Id of the sequence-start marker symbol.
pub const START: usize = 1;
/// Id of the sequence-end marker symbol.
pub const END: usize = 2;

const RESERVED_NAMES: [&str; 3] = ["i", "start", "end"];

/// Bidirectional symbol name <-> id map.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolTable {
    names: Vec<String>,
    ids: BTreeMap<String, usize>,
    frozen: bool,
}

impl SymbolTable {
    /// A fresh open table holding only the reserved symbols.
    pub fn new() -> SymbolTable {
        let mut table = SymbolTable {
            names: Vec::new(),
            ids: BTreeMap::new(),
            frozen: false,
        };
        for name in RESERVED_NAMES {
            table.push(name);
        }
        table
    }

    /// Rebuild a table from an explicit name list (e.g. a dataset header).
    /// Reserved names not present in the list are prepended, so the reserved
    /// ids hold regardless of the input.
    pub fn from_names<S: AsRef<str>>(names: &[S]) -> Result<SymbolTable> {
        let mut table = SymbolTable::new();
        for name in names {
            table.intern(name.as_ref())?;
        }
        Ok(table)
    }

    fn push(&mut self, name: &str) -> usize {
        let id = self.names.len();
        self.names.push(name.to_string());
        self.ids.insert(name.to_string(), id);
        id
    }

    /// Number of symbols, reserved ones included. This is the N every model
    /// built on this table uses.
    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        false // the reserved symbols are always present
    }

    /// Resolve a name, registering it when the table is open.
    pub fn intern(&mut self, name: &str) -> Result<usize> {
        if let Some(&id) = self.ids.get(name) {
            return Ok(id);
        }
        if self.frozen {
            return Err(Error::UnknownSymbol {
                name: name.to_string(),
            });
        }
        Ok(self.push(name))
    }

    /// Resolve a name without registering.
    pub fn id_of(&self, name: &str) -> Option<usize> {
        self.ids.get(name).copied()
    }

    /// Name for an id; panics on an out-of-range id (ids come from this table).
    pub fn name_of(&self, id: usize) -> &str {
        &self.names[id]
    }

    /// All names in id order.
    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Freeze the table: subsequent unknown names become errors.
    pub fn freeze(&mut self) {
        self.frozen = true;
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }
}

impl Default for SymbolTable {
    fn default() -> Self {
        SymbolTable::new()
    }
}
