//! Rectangular tables of reals, the exchange format between the sweep engine
//! and the writers.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Column {
    pub name: String,
    pub unit: String,
}

impl Column {
    pub fn new(name: &str, unit: &str) -> Self {
        Column { name: name.to_string(), unit: unit.to_string() }
    }

    /// A dimensionless column.
    pub fn plain(name: &str) -> Self {
        Self::new(name, "1")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(columns: Vec<Column>) -> Self {
        Table { columns, rows: Vec::new() }
    }

    pub fn with_names(names: &[&str]) -> Self {
        Self::new(names.iter().map(|n| Column::plain(n)).collect())
    }

    pub fn push_row(&mut self, row: Vec<f64>) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(Error::RowWidth { expected: self.columns.len(), found: row.len() });
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    /// Copy of one column's values.
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.column_index(name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_must_match_schema() {
        let mut t = Table::with_names(&["t", "L_G"]);
        t.push_row(vec![1.0, 0.5]).unwrap();
        assert_eq!(t.push_row(vec![1.0]), Err(Error::RowWidth { expected: 2, found: 1 }));
        assert_eq!(t.column("L_G"), Some(vec![0.5]));
        assert_eq!(t.column("R"), None);
    }
}
